import pytest

from setupfree import byzantine as bz
from setupfree.aba import Aba, aba_handle, aba_init, spammer
from setupfree.errors import ParameterError
from setupfree.simnet import Adversary, RandomOrder, run

from conftest import make_node

P = (("aba", 0),)


def aba(inputs, coin="perfect"):
    return lambda node: Aba(node, P, inputs[node.me - 1], coin, nonce=b"eta")


def test_input_must_be_a_bit():
    with pytest.raises(ParameterError):
        Aba(make_node(1), P, 2)
    with pytest.raises(ParameterError):
        Aba(make_node(1), P, True)


@pytest.mark.parametrize("b", [0, 1])
def test_validity_with_unanimous_inputs(b):
    for s in range(100):
        res = run(4, 1, aba([b] * 4), RandomOrder(s), seed=s)
        assert set(res.outputs.values()) == {b}
        assert all(r.rounds_used == 1 for r in res.roots.values())


def test_aux_after_2f_plus_1_matching_val():
    node = make_node(2)
    state, out = aba_init(node, P, 0, "perfect")
    assert [(t, p) for _, _, t, p in out] == [("Val", (0, 0))] * 4
    sent = []
    for src in (1, 3, 4):
        state, out, _ = aba_handle(state, src, P, "Val", (0, 1))
        sent.append(sorted({t for _, _, t, _ in out}))
    # f+1 copies relay the bit; 2f+1 copies admit it and trigger Aux
    assert sent == [[], ["Val"], ["Aux"]]


@pytest.mark.parametrize("coin", ["perfect", "genesis"])
def test_split_inputs_agree(coin):
    rounds = []
    for s in range(100):
        res = run(4, 1, aba([0, 1, 0, 1], coin), RandomOrder(s), seed=s)
        assert len(res.outputs) == 4 and len(set(res.outputs.values())) == 1
        rounds.append(max(r.rounds_used for r in res.roots.values()))
    assert sum(rounds) / len(rounds) <= 10


@pytest.mark.parametrize("make", [lambda: spammer(P), bz.equivocate, bz.mutate, lambda: bz.crash])
def test_agreement_and_validity_under_byzantine_party(make):
    for s in range(150):
        inputs = [(s >> k) & 1 for k in range(4)]
        c = 1 + s % 4
        res = run(4, 1, aba(inputs, "genesis"), RandomOrder(s), Adversary({c}, {c: make()}), seed=s)
        outs = res.honest_outputs()
        assert len(outs) == 3 and len(set(outs.values())) == 1
        honest_inputs = {inputs[i - 1] for i in res.honest}
        assert set(outs.values()) <= honest_inputs


def test_halts_one_round_after_deciding():
    res = run(4, 1, aba([0, 1, 1, 0], "genesis"), RandomOrder(3), seed=3)
    for r in res.roots.values():
        assert max(r.rounds) <= r.decided_round + 1
