import pytest

from setupfree import byzantine as bz
from setupfree.codec import encode
from setupfree.errors import ParameterError
from setupfree.rbc import Rbc, rbc_handle, rbc_init
from setupfree.simnet import Adversary, Fifo, RandomOrder, run

from conftest import make_node

P = (("rbc", 0),)


def honest(value=b"v"):
    return lambda node: Rbc(node, P, 1, value if node.me == 1 else None)


def test_sender_multicasts_its_value():
    state, out = rbc_init(make_node(1), P, 1, b"v")
    assert [(d, t, p) for d, _, t, p in out] == [(j, "Send", b"v") for j in range(1, 5)]


def test_non_sender_is_silent():
    _, out = rbc_init(make_node(2), P, 1)
    assert out == []


def test_only_sender_has_input():
    with pytest.raises(ParameterError):
        Rbc(make_node(2), P, 1, b"v")


def test_delivers_on_third_ready():
    node = make_node(2)
    state, _ = rbc_init(node, P, 1)
    state, out, o = rbc_handle(state, 1, P, "Send", b"v")
    assert o is None and {t for _, _, t, _ in out} == {"Echo"}
    h = node.suite.hash(encode(b"v"))
    outs = []
    for src in (1, 3, 4):
        state, _, o = rbc_handle(state, src, P, "Ready", h)
        outs.append(o)
    assert outs == [None, None, b"v"]


@pytest.mark.parametrize("sched", [Fifo, lambda: RandomOrder(5)])
def test_all_honest_deliver(sched):
    res = run(4, 1, honest(), sched())
    assert res.outputs == {i: b"v" for i in range(1, 5)}


def test_equivocating_sender_never_splits_honest_parties():
    for s in range(1000):
        res = run(4, 1, lambda node: Rbc(node, P, 1, b"v%d" % node.variant if node.me == 1 else None),
                  RandomOrder(s), Adversary({1}, {1: bz.equivocate()}), seed=s)
        assert len(set(res.honest_outputs().values())) <= 1


def test_totality_under_a_crashing_sender():
    for s in range(200):
        res = run(4, 1, honest(), RandomOrder(s), Adversary({1}, {1: bz.crash_after(s % 4)}), seed=s)
        outs = res.honest_outputs()
        assert len(outs) in (0, 3)
        assert set(outs.values()) <= {b"v"}


def test_fifo_run_is_three_rounds():
    res = run(4, 1, honest(), Fifo())
    assert res.metrics.rounds == 3
    assert res.metrics.messages == 36
