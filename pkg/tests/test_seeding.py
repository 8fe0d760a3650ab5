from setupfree import byzantine as bz
from setupfree.pvss_agg import PvssScript
from setupfree.seeding import Seeding, pvss_for, seed_bytes, seeding_init
from setupfree.simnet import Adversary, Fifo, RandomOrder, run

from conftest import make_node

P = (("seed", 0),)


def honest(node):
    return Seeding(node, P, 1)


def test_every_party_deals_one_script_to_the_leader():
    keys = make_node(1).keys
    for me in range(1, 5):
        node = make_node(me, keys=keys)
        _, out = seeding_init(node, P, 1)
        assert [(d, t) for d, _, t, _ in out] == [(1, "PvssScript")]
        sc = PvssScript.from_wire(out[0][3])
        assert pvss_for(node).weights(sc) == tuple(1 if k == me else 0 for k in range(1, 5))


def test_honest_run_gives_one_seed():
    for s in range(20):
        res = run(4, 1, honest, RandomOrder(s), seed=s)
        assert len(res.outputs) == 4 and len(set(res.outputs.values())) == 1
        leader = res.roots[1]
        s_ = leader.pv.agg_shares(leader.shares.values())
        assert set(res.outputs.values()) == {seed_bytes(leader.node.suite, s_)}


def _first_send(res, tag):
    return min((e for e in res.envelopes if e.tag == tag), key=lambda e: e.seq)


def _count_before(res, tag, dst, step):
    return sum(1 for e in res.envelopes if e.tag == tag and e.dst == dst and e.delivered_at <= step)


def test_leader_thresholds_are_2f_plus_1():
    res = run(4, 1, honest, RandomOrder(7), seed=7)
    by_seq = {e.seq: e for e in res.envelopes}
    for trigger, sent in (("PvssScript", "LockAggPvss"), ("ConfirmAggPvss", "CommitAggPvss"),
                          ("SeedShare", "Seed")):
        cause = by_seq[_first_send(res, sent).cause]
        assert cause.tag == trigger
        assert _count_before(res, trigger, 1, cause.delivered_at) == 3


def test_output_on_third_ready():
    res = run(4, 1, honest, Fifo())
    assert len(res.outputs) == 4
    for i in range(1, 5):
        assert sum(res.roots[i].readies.values()) >= 3


def test_equivocating_leader_never_splits_seeds():
    for s in range(300):
        res = run(4, 1, honest, RandomOrder(s), Adversary({1}, {1: bz.equivocate()}), seed=s)
        outs = res.honest_outputs()
        assert len(set(outs.values())) <= 1
        assert len(outs) in (0, 3)


def test_crashed_leader_means_no_output():
    res = run(4, 1, honest, RandomOrder(1), Adversary({1}, {1: bz.crash}), seed=1)
    assert res.honest_outputs() == {}


def test_corrupt_participant_does_not_block_honest_leader():
    for s in range(100):
        res = run(4, 1, honest, RandomOrder(s), Adversary({3}, {3: bz.mutate()}), seed=s)
        assert len(res.honest_outputs()) == 3
