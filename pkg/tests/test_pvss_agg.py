import random
from itertools import combinations

import pytest
from hypothesis import given
from hypothesis import strategies as st

from setupfree import kernels
from setupfree.crypto_core import KeyRing, get_suite
from setupfree.pvss_agg import Pvss, PvssScript, PvssShare, script_hash


@pytest.fixture(scope="module")
def ring31():
    keys = KeyRing.generate(4, get_suite("mock", 31), seed=3)
    return keys, Pvss(keys, 4, 1)


@pytest.fixture(scope="module")
def ring():
    keys = KeyRing.generate(4, get_suite("mock"), seed=4)
    return keys, Pvss(keys, 4, 1)


def all_shares(keys, pv, sc):
    return {j: pv.get_share(j, keys.dk(j), sc) for j in range(1, pv.n + 1)}


def test_deal_verifies_and_weights_are_a_unit_vector(ring):
    keys, pv = ring
    sc = pv.deal(3, 11, random.Random(0), b"ctx")
    assert pv.verify(sc)
    assert pv.weights(sc) == (0, 0, 1, 0)


def test_every_quorum_recovers_the_secret_mock31(ring31):
    keys, pv = ring31
    sc = pv.deal(1, 9, random.Random(1), b"ctx")
    shares = all_shares(keys, pv, sc)
    for quorum in combinations(range(1, 5), pv.t):
        assert pv.agg_shares([shares[j] for j in quorum], sc) == 9


def test_junk_ciphertext_fails_verification(ring):
    keys, pv = ring
    sc = pv.deal(2, 5, random.Random(2), b"ctx")
    bad = PvssScript(sc.comms, (sc.ciphers[0] + 1,) + sc.ciphers[1:], sc.weights, sc.attest, sc.proofs, sc.context)
    assert not pv.verify(bad)


def test_stripped_attestation_fails_verification(ring):
    keys, pv = ring
    a = pv.deal(1, 2, random.Random(3), b"ctx")
    b = pv.deal(2, 5, random.Random(4), b"ctx")
    agg = pv.aggregate(a, b)
    for k in range(len(agg.attest)):
        attest = agg.attest[:k] + agg.attest[k + 1:]
        assert not pv.verify(PvssScript(agg.comms, agg.ciphers, agg.weights, attest, agg.proofs, agg.context))
    inflated = tuple(w + 1 if k == 2 else w for k, w in enumerate(agg.weights))
    assert not pv.verify(PvssScript(agg.comms, agg.ciphers, inflated, agg.attest, agg.proofs, agg.context))


def test_context_is_bound(ring):
    keys, pv = ring
    sc = pv.deal(1, 2, random.Random(5), b"ctx")
    moved = PvssScript(sc.comms, sc.ciphers, sc.weights, sc.attest, sc.proofs, b"other")
    assert not pv.verify(moved)


def test_shares_verify_only_for_their_owner(ring):
    keys, pv = ring
    sc = pv.deal(1, 8, random.Random(6), b"ctx")
    shares = all_shares(keys, pv, sc)
    for j, sh in shares.items():
        assert pv.verify_share(j, sh, sc)
    stolen = pv.get_share(2, keys.dk(3), sc)
    assert not pv.verify_share(2, stolen, sc)


def test_one_share_value_per_index_mock31(ring31):
    keys, pv = ring31
    sc = pv.deal(2, 4, random.Random(7), b"ctx")
    for j, sh in all_shares(keys, pv, sc).items():
        ok = [v for v in range(31) if pv.verify_share(j, PvssShare(j, v, sh.proof), sc)]
        assert ok == [sh.value]


def test_overlapping_quorums_agree_and_secret_check(ring):
    keys, pv = ring
    sc = pv.deal(4, 60, random.Random(8), b"ctx")
    shares = all_shares(keys, pv, sc)
    s1 = pv.agg_shares([shares[j] for j in (1, 2, 3)], sc)
    s2 = pv.agg_shares([shares[j] for j in (2, 3, 4)], sc)
    assert s1 == s2 == 60
    assert pv.verify_secret(60, sc)
    assert not pv.verify_secret(61, sc)


def test_aggregate_of_two_and_five_reconstructs_seven(ring31):
    keys, pv = ring31
    a = pv.deal(1, 2, random.Random(9), b"ctx")
    b = pv.deal(2, 5, random.Random(10), b"ctx")
    ab = pv.aggregate(a, b)
    assert pv.verify(ab)
    assert pv.weights(ab) == (1, 1, 0, 0)
    shares = all_shares(keys, pv, ab)
    assert pv.agg_shares([shares[j] for j in (1, 3, 4)], ab) == 7
    ba = pv.aggregate(b, a)
    shares = all_shares(keys, pv, ba)
    assert pv.agg_shares([shares[j] for j in (1, 2, 3)], ba) == 7


def test_wire_round_trip(ring):
    keys, pv = ring
    sc = pv.deal(1, 3, random.Random(11), b"ctx")
    assert PvssScript.from_wire(sc.wire()) == sc
    assert PvssScript.from_wire((1, 2)) is None
    sh = pv.get_share(1, keys.dk(1), sc)
    assert PvssShare.from_wire(sh.wire()) == sh
    assert PvssShare.from_wire(("x", 1, 2)) is None
    assert script_hash(keys.suite, sc) != script_hash(keys.suite, pv.deal(1, 3, random.Random(12), b"ctx"))


@given(st.lists(st.integers(1, 4), min_size=1, max_size=6), st.integers(0, 2**32))
def test_weights_add_and_secrets_add(dealers, seed):
    keys = KeyRing.generate(4, get_suite("mock"), seed=5)
    pv = Pvss(keys, 4, 1)
    rng = random.Random(seed)
    secrets = [rng.randrange(97) for _ in dealers]
    scripts = [pv.deal(i, s, rng, b"ctx") for i, s in zip(dealers, secrets)]
    agg = pv.aggregate_all(scripts)
    assert pv.verify(agg)
    assert list(pv.weights(agg)) == [dealers.count(k) for k in range(1, 5)]
    shares = all_shares(keys, pv, agg)
    assert pv.agg_shares([shares[j] for j in rng.sample(range(1, 5), 3)], agg) == sum(secrets) % 97


def test_threshold_hides_the_secret_below_2f_plus_1():
    # 2f known shares of a degree-2f polynomial leave every constant term
    # equally likely; one more share pins it down
    q, f = 31, 1
    flat = kernels.poly_completions(q, 2 * f, [1, 2], [8, 11])
    assert flat.min() == flat.max() == 1
    pinned = kernels.poly_completions(q, 2 * f, [1, 2, 3], [8, 11, 14])
    assert pinned.sum() == 1 and pinned[5] == 1
