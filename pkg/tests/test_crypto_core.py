import random

import pytest
from hypothesis import given
from hypothesis import strategies as st

from setupfree.crypto_core import (
    KeyRing,
    MockGroup,
    get_suite,
    interpolate_at_zero,
    paillier_dec,
    paillier_enc,
    paillier_keygen,
    pedersen_commit,
    poly_eval,
    shamir_share,
    verify_opening,
)
from setupfree.errors import ParameterError


class FixedStream(random.Random):
    """Randomness stub that hands out a fixed list of field elements."""

    values: list = []

    def randrange(self, q):
        return self.values.pop(0) % q


def test_constant_polynomial_when_f_is_zero():
    A, B, shares = shamir_share(5, 0, 3, random.Random(0), 97)
    assert A == [5]
    assert [a for a, _ in shares] == [5, 5, 5]


def fixed_stream(values):
    s = FixedStream(0)
    s.values = list(values)
    return s


def test_shares_of_known_polynomial():
    # A = 5 + 3x over q = 31; the stub forces A's slope then B's coefficients
    A, B, shares = shamir_share(5, 1, 4, fixed_stream([3, 0, 0]), 31)
    assert A == [5, 3]
    assert [a for a, _ in shares] == [8, 11, 14, 17]


def test_interpolation_known_points():
    assert interpolate_at_zero([(1, 8), (2, 11)], 1, 31) == 5
    assert interpolate_at_zero([(3, 7)], 0, 31) == 7


def test_interpolation_rejects_bad_input():
    with pytest.raises(ParameterError):
        interpolate_at_zero([(1, 8)], 1, 31)
    with pytest.raises(ParameterError):
        interpolate_at_zero([(1, 8), (1, 9)], 1, 31)


@given(st.integers(0, 96), st.integers(0, 3), st.integers(0, 2**32))
def test_any_f_plus_one_shares_recover_the_secret(secret, f, seed):
    n = 3 * f + 1
    rng = random.Random(seed)
    _, _, shares = shamir_share(secret, f, n, rng, 97)
    idx = rng.sample(range(1, n + 1), f + 1)
    assert interpolate_at_zero([(i, shares[i - 1][0]) for i in idx], f, 97) == secret


def test_mock_commitment_arithmetic():
    g = MockGroup(31)
    C = pedersen_commit([5], [7], g)
    assert C == (0,)  # 5*2 + 7*3 = 31


def test_zero_polynomials_commit_to_identity():
    g = MockGroup(97)
    assert pedersen_commit([0, 0], [0, 0], g) == (g.identity, g.identity)


@given(st.integers(0, 96), st.integers(0, 2**32))
def test_openings_verify_at_every_index(secret, seed):
    g = MockGroup(97)
    A, B, shares = shamir_share(secret, 1, 4, random.Random(seed), 97)
    C = pedersen_commit(A, B, g)
    for i, (a, b) in enumerate(shares, 1):
        assert verify_opening(i, a, b, C, g)
        assert not verify_opening(i, (a + 1) % 97, b, C, g)


def test_exactly_q_openings_per_index_mock31():
    # brute force over every (a, b) pair: the commitment hides perfectly
    g = MockGroup(31)
    A, B, _ = shamir_share(4, 1, 4, random.Random(7), 31)
    C = pedersen_commit(A, B, g)
    for i in range(1, 5):
        hits = sum(verify_opening(i, a, b, C, g) for a in range(31) for b in range(31))
        assert hits == 31


@pytest.mark.parametrize("mode", ["mock", "real"])
def test_signatures(mode):
    keys = KeyRing.generate(3, get_suite(mode), seed=1)
    sig = keys.sign(1, b"inst", b"hello")
    assert keys.verify_sig(1, b"inst", b"hello", sig)
    assert not keys.verify_sig(2, b"inst", b"hello", sig)
    assert not keys.verify_sig(1, b"inst", b"hellp", sig)
    assert not keys.verify_sig(1, b"other", b"hello", sig)


@pytest.mark.parametrize("mode", ["mock", "real"])
def test_vrf_round_trip_and_determinism(mode):
    keys = KeyRing.generate(3, get_suite(mode), seed=2)
    r, proof = keys.vrf_eval(2, b"inst", b"seed")
    assert keys.vrf_verify(2, b"inst", b"seed", r, proof)
    assert keys.vrf_eval(2, b"inst", b"seed") == (r, proof)
    assert not keys.vrf_verify(1, b"inst", b"seed", r, proof)
    assert not keys.vrf_verify(2, b"inst", b"seed2", r, proof)
    assert keys.vrf_eval(2, b"inst2", b"seed")[0] != r


def test_mock_vrf_lowest_bit_balance():
    keys = KeyRing.generate(4, get_suite("mock"), seed=0)
    ones = sum(keys.vrf_eval(1, b"inst", b"seed%d" % k)[0][-1] & 1 for k in range(10_000))
    assert ones == 4950  # frozen from the Monte Carlo oracle
    assert abs(ones / 10_000 - 0.5) <= 0.02


def test_adversarial_keys_come_from_another_seed():
    s = get_suite("mock")
    a = KeyRing.generate(4, s, seed=0, corrupt={2}, adversary_seed=99)
    b = KeyRing.generate(4, s, seed=0)
    assert a.keys[1].vrf_pk == b.keys[1].vrf_pk
    assert a.keys[2].vrf_pk != b.keys[2].vrf_pk


@given(st.integers(0, 2**40), st.integers(0, 2**32))
def test_paillier_round_trip(m, seed):
    rng = random.Random(seed % 16)
    sk = paillier_keygen(48, rng)
    m %= sk.N
    assert paillier_dec(sk, paillier_enc(sk.N, m, 12345 % sk.N or 1)) == m


def test_poly_eval_horner_matches_sum():
    coeffs = [3, 1, 4, 1, 5]
    for x in range(10):
        assert poly_eval(coeffs, x, 97) == sum(c * x**k for k, c in enumerate(coeffs)) % 97
