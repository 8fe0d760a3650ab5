"""Field and group arithmetic, Shamir sharing, Pedersen commitments, hashing,
signatures and a VRF.

Two instantiations share one interface:

* ``mock``: field Z_q with a small prime (default 97), an additive group
  Z_q with g1 = 2, g2 = 3, keyed-hash signatures and a hash-based VRF.  Tiny
  sizes make brute-force oracles possible; binding and unforgeability against
  a key-aware adversary are *not* provided.
* ``real``: a 256-bit prime-order subgroup of Z_p^* (p of 2048 bits) with
  generators from hash-to-group, Ed25519 signatures and a DLEQ-based VRF.
"""

from __future__ import annotations

import hashlib
import hmac
import random
from dataclasses import dataclass, field

import gmpy2
from cryptography.exceptions import InvalidSignature
from cryptography.hazmat.primitives.asymmetric.ed25519 import (
    Ed25519PrivateKey,
    Ed25519PublicKey,
)

from .codec import encode
from .errors import ParameterError

# 2048-bit p with a 256-bit prime q dividing p - 1 (deterministic search from
# fixed hash seeds; primality is re-checked in the test-suite).
SCHNORR_Q = 0xE8DEADD05BFF9B79DC0116ACF55D4065EFA032396533548014AAC3649DFA53E7
SCHNORR_P = int(
    "b4f28c179b46560bb90a3ea45a662c9870a35683b03565665cc2b0ea5a7329007e7e486a"
    "fc4d185f0d9546b08255813e0f1db74ce4fce2efbd379673b81e0f369d4918981158825b"
    "d156a0a4889984cba28775b39db8bae24caea8f17e44fb6d54387deae7cdc0b59931eb06"
    "d49e89633925b518256f44a369a9582f41ae2cfc50166bfe5cdac83fe3ee712663d21be7"
    "d9c24dd9298366a077130e2212f39739f7c79f3911de519a0409ed93b763347910ba4686"
    "d87fe737481fa8866de10241c17c2568c94582338dd0bded5f86f98b31db6d543998119a"
    "ed486c9d4aa729994871ae7bdbc1a67d742e91e02fd48c13bc85d56189b5efdb762cba38"
    "28ef2a5d",
    16,
)

MOCK_Q = 97


def as_rng(randomness) -> random.Random:
    if isinstance(randomness, random.Random):
        return randomness
    return random.Random(randomness)


def expand(data: bytes, nbytes: int) -> bytes:
    """Counter-mode SHA-256 stretch of ``data`` to ``nbytes`` bytes."""
    out = bytearray()
    ctr = 0
    while len(out) < nbytes:
        out += hashlib.sha256(ctr.to_bytes(4, "big") + data).digest()
        ctr += 1
    return bytes(out[:nbytes])


# ---------------------------------------------------------------- groups


class MockGroup:
    """Additive group Z_q written multiplicatively: exp(b, e) = b*e, mul = +."""

    def __init__(self, q: int, g1: int = 2, g2: int = 3):
        self.q = q
        self.g1 = g1 % q
        self.g2 = g2 % q
        self.identity = 0
        self.width = (q.bit_length() + 7) // 8

    def exp(self, base, e):
        return base * e % self.q

    def mul(self, a, b):
        return (a + b) % self.q

    def inv(self, a):
        return -a % self.q

    def is_element(self, a):
        return isinstance(a, int) and 0 <= a < self.q

    def encode(self, a) -> bytes:
        return a.to_bytes(self.width, "big")

    def hash_to_group(self, data: bytes):
        return int.from_bytes(expand(data, self.width + 8), "big") % self.q


class SchnorrGroup:
    """Order-q subgroup of Z_p^*."""

    def __init__(self, p: int = SCHNORR_P, q: int = SCHNORR_Q):
        self.p = p
        self.q = q
        self.cofactor = (p - 1) // q
        self.identity = 1
        self.width = (p.bit_length() + 7) // 8
        self.g1 = self.hash_to_group(b"setupfree/g1")
        self.g2 = self.hash_to_group(b"setupfree/g2")

    def exp(self, base, e):
        return pow(base, e % self.q, self.p)

    def mul(self, a, b):
        return a * b % self.p

    def inv(self, a):
        return pow(a, -1, self.p)

    def is_element(self, a):
        return isinstance(a, int) and 1 <= a < self.p and pow(a, self.q, self.p) == 1

    def encode(self, a) -> bytes:
        return a.to_bytes(self.width, "big")

    def hash_to_group(self, data: bytes):
        ctr = 0
        while True:
            x = int.from_bytes(expand(ctr.to_bytes(4, "big") + data, self.width + 16), "big")
            y = pow(x % self.p, self.cofactor, self.p)
            if y > 1:
                return y
            ctr += 1


# ---------------------------------------------------------------- suite


class Suite:
    """Bundle of field, group and hash parameters for one crypto mode."""

    def __init__(self, mode: str = "mock", q: int = MOCK_Q):
        if mode == "mock":
            self.group = MockGroup(q)
            self.lam = 4
        elif mode == "real":
            self.group = SchnorrGroup()
            self.lam = 32
        else:
            raise ParameterError(f"unknown crypto mode {mode!r}")
        self.mode = mode
        self.q = self.group.q
        self.fwidth = (self.q.bit_length() + 7) // 8

    def __repr__(self):
        return f"Suite({self.mode!r}, q={self.q})"

    def hash(self, data: bytes) -> bytes:
        return hashlib.blake2b(data, digest_size=self.lam).digest()

    def hashv(self, *parts) -> bytes:
        return self.hash(encode(parts))

    def hash_int(self, data: bytes) -> int:
        return int.from_bytes(self.hash(data), "big")

    def enc_field(self, x: int) -> bytes:
        return x.to_bytes(self.fwidth, "big")

    def enc_commitment(self, C) -> bytes:
        g = self.group
        return len(C).to_bytes(2, "big") + b"".join(g.encode(c) for c in C)

    def hash_commitment(self, C) -> bytes:
        return self.hash(self.enc_commitment(C))


_SUITES: dict = {}


def get_suite(mode: str = "mock", q: int = MOCK_Q) -> Suite:
    key = (mode, q if mode == "mock" else None)
    s = _SUITES.get(key)
    if s is None:
        s = _SUITES[key] = Suite(mode, q)
    return s


# ---------------------------------------------------------------- polynomials


def poly_eval(coeffs, x: int, q: int) -> int:
    acc = 0
    for c in reversed(coeffs):
        acc = (acc * x + c) % q
    return acc


def shamir_share(secret: int, f: int, n: int, randomness, q: int = MOCK_Q):
    """Share ``secret`` with degree-f polynomials A (A(0) = secret) and B.

    Returns ``(A, B, shares)`` where ``shares[i-1] = (A(i), B(i))``.  The
    randomness stream yields A's coefficients 1..f, then B's 0..f.
    """
    if f < 0 or n < 3 * f + 1:
        raise ParameterError(f"need n >= 3f+1, got n={n}, f={f}")
    if not 0 <= secret < q:
        raise ParameterError("secret outside the field")
    rng = as_rng(randomness)
    A = [secret] + [rng.randrange(q) for _ in range(f)]
    B = [rng.randrange(q) for _ in range(f + 1)]
    shares = [(poly_eval(A, i, q), poly_eval(B, i, q)) for i in range(1, n + 1)]
    return A, B, shares


def lagrange_at_zero(xs, q: int):
    """Coefficients L_i(0) for the distinct evaluation points ``xs``."""
    out = []
    for i, xi in enumerate(xs):
        num = den = 1
        for j, xj in enumerate(xs):
            if i != j:
                num = num * xj % q
                den = den * (xj - xi) % q
        out.append(num * pow(den, -1, q) % q)
    return out


def interpolate_at_zero(points, f: int, q: int = MOCK_Q) -> int:
    pts = sorted(points)
    xs = [x for x, _ in pts]
    if len(pts) != f + 1:
        raise ParameterError(f"need exactly f+1 = {f + 1} points, got {len(pts)}")
    if len(set(xs)) != len(xs) or any(x % q == 0 for x in xs):
        raise ParameterError("indices must be distinct and non-zero")
    lam = lagrange_at_zero(xs, q)
    return sum(l * y for l, (_, y) in zip(lam, pts)) % q


# ---------------------------------------------------------------- Pedersen


def pedersen_commit(A, B, group) -> tuple:
    if len(A) != len(B):
        raise ParameterError("A and B must have the same length")
    return tuple(group.mul(group.exp(group.g1, a), group.exp(group.g2, b)) for a, b in zip(A, B))


def verify_opening(i: int, share_a: int, share_b: int, C, group) -> bool:
    try:
        q = group.q
        if not (0 <= share_a < q and 0 <= share_b < q) or not C:
            return False
        lhs = group.mul(group.exp(group.g1, share_a), group.exp(group.g2, share_b))
        rhs = group.identity
        ik = 1
        for c in C:
            if not group.is_element(c):
                return False
            rhs = group.mul(rhs, group.exp(c, ik))
            ik = ik * i % q
        return lhs == rhs
    except (TypeError, ValueError):
        return False


# ---------------------------------------------------------------- Paillier


@dataclass(frozen=True)
class PaillierSecret:
    N: int
    phi: int
    mu: int


def paillier_keygen(bits: int, rng: random.Random) -> PaillierSecret:
    half = bits // 2
    while True:
        p = int(gmpy2.next_prime(rng.getrandbits(half) | (1 << (half - 1))))
        q = int(gmpy2.next_prime(rng.getrandbits(half) | (1 << (half - 1))))
        N = p * q
        phi = (p - 1) * (q - 1)
        if p != q and gmpy2.gcd(N, phi) == 1:
            return PaillierSecret(N, phi, pow(phi, -1, N))


def paillier_enc(N: int, m: int, r: int) -> int:
    N2 = N * N
    return (1 + m * N) * pow(r, N, N2) % N2


def paillier_dec(sk: PaillierSecret, c: int) -> int:
    N = sk.N
    u = pow(c, sk.phi, N * N)
    return (u - 1) // N * sk.mu % N


def paillier_randomness(sk: PaillierSecret, c: int, m: int) -> int:
    """Recover r with c = Enc(m; r); this opening is the decryption proof."""
    N = sk.N
    rN = c * (1 - m * N) % (N * N) % N
    return pow(rN, pow(N, -1, sk.phi), N)


# ---------------------------------------------------------------- keys


@dataclass
class PartyKeys:
    sign_sk: object
    sign_pk: bytes
    vrf_sk: object
    vrf_pk: bytes
    pvss_dk: PaillierSecret
    pvss_ek: int  # Paillier modulus


@dataclass
class KeyRing:
    """Bulletin-board PKI: every party's public keys plus the secrets the
    simulation hands to each party's own reactors."""

    suite: Suite
    keys: dict = field(default_factory=dict)

    @classmethod
    def generate(cls, n: int, suite: Suite, seed=0, corrupt=(), adversary_seed=None):
        ring = cls(suite)
        for i in range(1, n + 1):
            s = seed if i not in corrupt or adversary_seed is None else adversary_seed
            ring.keys[i] = _make_keys(suite, random.Random(f"keys/{s}/{i}"))
        return ring

    @property
    def n(self):
        return len(self.keys)

    def _get(self, party) -> PartyKeys:
        k = self.keys.get(party)
        if k is None:
            raise ParameterError(f"unknown party {party!r}")
        return k

    def ek(self, party) -> int:
        return self._get(party).pvss_ek

    def dk(self, party) -> PaillierSecret:
        return self._get(party).pvss_dk

    # signatures ------------------------------------------------------
    def sign(self, party, instance: bytes, message: bytes) -> bytes:
        k = self._get(party)
        data = _sig_input(instance, message)
        if self.suite.mode == "mock":
            return hmac.digest(k.sign_sk, data, "blake2s")[: self.suite.lam]
        return k.sign_sk.sign(data)

    def verify_sig(self, party, instance: bytes, message: bytes, sig) -> bool:
        k = self._get(party)
        if not isinstance(sig, bytes):
            return False
        data = _sig_input(instance, message)
        if self.suite.mode == "mock":
            return hmac.compare_digest(hmac.digest(k.sign_sk, data, "blake2s")[: self.suite.lam], sig)
        try:
            Ed25519PublicKey.from_public_bytes(k.sign_pk).verify(sig, data)
            return True
        except (InvalidSignature, ValueError):
            return False

    # VRF ---------------------------------------------------------------
    def vrf_eval(self, party, instance: bytes, seed: bytes):
        """Return ``(r, proof)`` with r a λ-byte big-endian evaluation."""
        k = self._get(party)
        s = self.suite
        if s.mode == "mock":
            return s.hash(b"vrf|" + encode((k.vrf_pk, instance, seed))), b""
        g = s.group
        x = k.vrf_sk
        h = g.hash_to_group(b"vrf|" + encode((k.vrf_pk, instance, seed)))
        gamma = g.exp(h, x)
        nonce = int.from_bytes(hashlib.sha512(x.to_bytes(32, "big") + g.encode(h)).digest(), "big") % g.q
        e = _vrf_challenge(s, k.vrf_pk, h, gamma, g.exp(g.g1, nonce), g.exp(h, nonce))
        z = (nonce + e * x) % g.q
        proof = g.encode(gamma) + e.to_bytes(32, "big") + z.to_bytes(32, "big")
        return s.hash(b"vrf-out|" + g.encode(gamma)), proof

    def vrf_verify(self, party, instance: bytes, seed: bytes, r, proof) -> bool:
        k = self._get(party)
        s = self.suite
        if not isinstance(r, bytes) or not isinstance(proof, bytes):
            return False
        if s.mode == "mock":
            return proof == b"" and hmac.compare_digest(r, s.hash(b"vrf|" + encode((k.vrf_pk, instance, seed))))
        g = s.group
        if len(proof) != g.width + 64:
            return False
        gamma = int.from_bytes(proof[: g.width], "big")
        e = int.from_bytes(proof[g.width: g.width + 32], "big")
        z = int.from_bytes(proof[g.width + 32:], "big")
        if not g.is_element(gamma) or z >= g.q:
            return False
        pk = int.from_bytes(k.vrf_pk, "big")
        h = g.hash_to_group(b"vrf|" + encode((k.vrf_pk, instance, seed)))
        u = g.mul(g.exp(g.g1, z), g.exp(pk, -e))
        v = g.mul(g.exp(h, z), g.exp(gamma, -e))
        if _vrf_challenge(s, k.vrf_pk, h, gamma, u, v) != e:
            return False
        return r == s.hash(b"vrf-out|" + g.encode(gamma))


def _sig_input(instance: bytes, message: bytes) -> bytes:
    return len(instance).to_bytes(4, "big") + instance + message


def _vrf_challenge(s, pk_bytes, h, gamma, u, v) -> int:
    g = s.group
    data = pk_bytes + b"".join(g.encode(x) for x in (g.g1, h, gamma, u, v))
    return int.from_bytes(hashlib.sha256(b"vrf-dleq|" + data).digest(), "big") % g.q


def _make_keys(suite: Suite, rng: random.Random) -> PartyKeys:
    if suite.mode == "mock":
        sk = rng.randbytes(16)
        vpk = rng.randbytes(8)
        dk = paillier_keygen(48, rng)
        return PartyKeys(sk, b"", None, vpk, dk, dk.N)
    sign_sk = Ed25519PrivateKey.from_private_bytes(rng.randbytes(32))
    from cryptography.hazmat.primitives import serialization

    sign_pk = sign_sk.public_key().public_bytes(
        serialization.Encoding.Raw, serialization.PublicFormat.Raw
    )
    g = suite.group
    x = rng.randrange(1, g.q)
    vpk = g.encode(g.exp(g.g1, x))
    dk = paillier_keygen(2 * 512 + 64, rng)
    return PartyKeys(sign_sk, sign_pk, x, vpk, dk, dk.N)
