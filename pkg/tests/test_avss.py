import pytest
from hypothesis import given
from hypothesis import strategies as st

from setupfree import byzantine as bz
from setupfree import kernels
from setupfree.avss import (
    PLAIN,
    RO,
    AvssPipeline,
    AvssRec,
    ShOutput,
    avss_rec_handle,
    avss_rec_init,
    avss_sh_init,
    bad_dealer,
    decrypt,
    encrypt,
)
from setupfree.crypto_core import get_suite, verify_opening
from setupfree.reactor import Reactor
from setupfree.simnet import Adversary, Fifo, RandomOrder, run

from conftest import make_node

SH = (("sh", 1),)
REC = (("rec", 1),)


def pipeline(secret=b"secret", mode=RO, reconstruct=True):
    return lambda node: AvssPipeline(node, (), 1, secret, mode=mode, reconstruct=reconstruct)


def sh_outputs(seed=0, sched=None):
    res = run(4, 1, pipeline(reconstruct=False), sched or RandomOrder(seed), seed=seed)
    return {i: res.roots[i].shared for i in range(1, 5)}


def test_dealer_sends_one_keyshare_per_party():
    node = make_node(1)
    _, out = avss_sh_init(node, SH, 1, b"m")
    assert [(d, t) for d, _, t, _ in out] == [(j, "KeyShare") for j in range(1, 5)]
    for j, _, _, (C, a, b) in out:
        assert len(C) == 2
        assert verify_opening(j, a, b, C, node.suite.group)


def test_participant_starts_silent():
    _, out = avss_sh_init(make_node(2), SH, 1)
    assert out == []


def test_cipher_follows_the_third_stored():
    res = run(4, 1, pipeline(reconstruct=False), RandomOrder(3), seed=3)
    by_seq = {e.seq: e for e in res.envelopes}
    cipher = [e for e in res.envelopes if e.tag == "Cipher"]
    cause = by_seq[cipher[0].cause]
    assert cause.tag == "Stored" and cause.dst == 1
    stored_before = [e for e in res.envelopes if e.tag == "Stored" and e.delivered_at <= cause.delivered_at]
    assert len(stored_before) == 3


@pytest.mark.parametrize("sched", [Fifo, lambda: RandomOrder(9)])
def test_honest_pipeline_returns_the_secret(sched):
    res = run(4, 1, pipeline(), sched())
    assert res.outputs == {i: b"secret" for i in range(1, 5)}


def test_plain_mode_round_trip():
    res = run(4, 1, pipeline(42, PLAIN), RandomOrder(1))
    assert set(res.outputs.values()) == {42}


def test_without_faults_nothing_is_lost():
    res = run(4, 0, pipeline(), RandomOrder(2))
    assert len(res.outputs) == 4


def test_short_quorum_dealer_gets_no_echo():
    for s in range(50):
        res = run(4, 1, pipeline(), RandomOrder(s), Adversary({1}, {1: bad_dealer("short-quorum", b"evil")}), seed=s)
        assert not [e for e in res.envelopes if e.tag == "Echo" and e.src != 1]
        assert res.honest_outputs() == {}


def test_equivocating_dealer_cannot_split_outputs():
    for s in range(300):
        res = run(4, 1, pipeline(), RandomOrder(s), Adversary({1}, {1: bad_dealer("equivocate-cipher", b"evil")}),
                  seed=s)
        shared = {(r.shared.h, r.shared.c) for r in (res.roots[i] for i in res.honest) if r.shared}
        assert len(shared) <= 1
        assert len(set(res.honest_outputs().values())) <= 1


def test_generic_byzantine_dealers_keep_commitment():
    for s in range(200):
        beh = bz.equivocate() if s % 2 else bz.mutate()
        res = run(4, 1, pipeline(), RandomOrder(s), Adversary({1}, {1: beh}), seed=s)
        outs = res.honest_outputs()
        assert len(outs) in (0, 3) and len(set(outs.values())) <= 1


def test_rec_party_with_shares_multicasts_keyrec():
    outs = sh_outputs()
    _, out = avss_rec_init(make_node(2), REC, outs[2])
    assert [(d, t) for d, _, t, _ in out] == [(j, "KeyRec") for j in range(1, 5)]


def test_rec_outputs_on_second_identical_key():
    outs = sh_outputs()
    node = make_node(3)
    state, _ = avss_rec_init(node, REC, outs[3])
    key = 17
    state, _, o = avss_rec_handle(state, 1, REC, "Key", key)
    assert o is None
    state, _, o = avss_rec_handle(state, 2, REC, "Key", key)
    assert o == decrypt(node.suite, RO, key, outs[3].c)


def test_party_without_shares_reconstructs_from_keys():
    outs = sh_outputs(seed=4)
    o = outs[4]
    outs[4] = ShOutput(o.h, o.c, None, None, o.cmt)
    res = run(4, 1, lambda node: AvssRec(node, REC, outs[node.me]), RandomOrder(4), seed=4)
    assert res.outputs[4] == b"secret"
    assert not [e for e in res.envelopes if e.tag == "KeyRec" and e.src == 4]


class WrongKey(Reactor):
    def start(self):
        self.node.outbox.append((0, REC, "Key", 5))
        self.node.outbox.append((0, REC, "KeyRec", (1, 2, b"\x00" * 4)))


def test_wrong_key_from_corrupt_party_is_filtered():
    for s in range(50):
        outs = sh_outputs(seed=s)
        res = run(4, 1, lambda node: AvssRec(node, REC, outs[node.me]), RandomOrder(s),
                  Adversary({4}, {4: lambda node, fac: WrongKey(node, ())}), seed=s)
        assert res.honest_outputs() == {i: b"secret" for i in (1, 2, 3)}


@given(st.binary(min_size=0, max_size=64), st.integers(0, 96))
def test_hashed_key_encryption_is_an_involution(m, key):
    suite = get_suite("mock")
    assert decrypt(suite, RO, key, encrypt(suite, RO, key, m)) == m


@given(st.integers(0, 96), st.integers(0, 96))
def test_plain_encryption_round_trip(m, key):
    suite = get_suite("mock")
    assert decrypt(suite, PLAIN, key, encrypt(suite, PLAIN, key, m)) == m


def test_honest_sharing_message_count():
    res = run(4, 1, pipeline(reconstruct=False), Fifo())
    assert res.metrics.messages == 44  # frozen: 4 KeyShare, 4 Stored, 4 Cipher, 16 Echo, 16 Ready
    assert res.metrics.messages <= 4 + 3 + 4 + 32 + 32


def test_corrupt_view_leaves_every_key_possible():
    suite = get_suite("mock")
    g = suite.group
    for s in range(3):
        o = sh_outputs(seed=s)[4]
        counts = kernels.pedersen_completions(suite.q, g.g1, g.g2, o.cmt, [4], [o.sh_a], [o.sh_b])
        assert counts.min() == counts.max() == 1
