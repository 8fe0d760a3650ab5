import pytest

from setupfree import byzantine as bz
from setupfree.coin import GENESIS, SEEDING, Coin, CoreSetProbe, LocalCoin, coin_factory, hash_set, lowest_bit, vrf_rank
from setupfree.errors import ParameterError
from setupfree.reactor import instance_bytes
from setupfree.simnet import Adversary, DelayTargets, RandomOrder, in_instance, run

from conftest import make_node

P = (("coin", 0),)


def genesis(node):
    return Coin(node, P, GENESIS, b"eta")


def test_genesis_mode_shares_immediately():
    node = make_node(1)
    c = Coin(node, P, GENESIS, b"eta")
    c.start()
    kinds = {k for k, _ in c.children}
    assert kinds == {"sh"}
    assert len(c.children) == 4


def test_seeding_mode_starts_one_seeding_per_party():
    c = Coin(make_node(1), P, SEEDING)
    c.start()
    assert sorted(c.children) == [("seed", j) for j in range(1, 5)]


def test_bad_parameters():
    with pytest.raises(ParameterError):
        Coin(make_node(1), P, GENESIS)
    with pytest.raises(ParameterError):
        Coin(make_node(1), P, SEEDING, b"eta")
    with pytest.raises(ParameterError):
        coin_factory("nope")


def test_instances_are_domain_separated():
    keys = make_node(1).keys
    a = keys.vrf_eval(1, instance_bytes((("coin", 0),)), b"eta")[0]
    b = keys.vrf_eval(1, instance_bytes((("coin", 1),)), b"eta")[0]
    assert a != b


def test_rank_orders_by_value_then_lower_dealer():
    assert vrf_rank(b"\x02", 3) > vrf_rank(b"\x01", 1)
    assert vrf_rank(b"\x02", 1) > vrf_rank(b"\x02", 2)
    assert lowest_bit(b"\x00\x03") == 1


def test_hash_set_ignores_order(suite):
    assert hash_set(suite, {3, 1, 2}) == hash_set(suite, [2, 3, 1])


@pytest.mark.parametrize("mode", [GENESIS, SEEDING])
def test_honest_runs_terminate_with_quorum_thresholds(mode):
    fac = genesis if mode == GENESIS else (lambda node: Coin(node, P, SEEDING))
    for s in range(20):
        res = run(4, 1, fac, RandomOrder(s), seed=s)
        assert len(res.outputs) == 4
        for i in range(1, 5):
            c = res.roots[i]
            assert len(c.snapshot) == 3
            assert len(c.sigma) == 3
            assert c.c_at_output == 3 and c.X == 0


def test_core_set_property_holds():
    probe = CoreSetProbe()
    for s in range(100):
        run(4, 1, genesis, RandomOrder(s), seed=s, probe=probe)
    assert probe.checks == 100 and probe.violations == []


def test_core_set_under_corruption():
    probe = CoreSetProbe()
    for s in range(100):
        beh = [bz.crash, bz.equivocate(), bz.mutate()][s % 3]
        c = 1 + s % 4
        res = run(4, 1, genesis, RandomOrder(s), Adversary({c}, {c: beh}), seed=s, probe=probe)
        assert len(res.honest_outputs()) == 3
    assert probe.violations == []


def test_starved_dealer_still_terminates():
    for s in range(50):
        res = run(4, 1, genesis, DelayTargets(in_instance("sh", 1 + s % 4), s), seed=s)
        assert len(res.outputs) == 4


def test_election_variant_outputs_verified_triples():
    res = run(4, 1, lambda node: Coin(node, P, GENESIS, b"eta", election=True), RandomOrder(1), seed=1)
    keys = res.roots[1].node.keys
    for k, r, proof in res.outputs.values():
        assert keys.vrf_verify(k, instance_bytes(P), b"eta", r, proof)


def test_local_coin_is_common():
    res = run(4, 1, lambda node: LocalCoin(node, P), RandomOrder(0))
    assert len(set(res.outputs.values())) == 1
