"""Aggregatable PVSS with contribution weights (pairing-free, Scrape-style).

A script commits a degree-(t-1) polynomial F, t = 2f+1, through
``comms[j] = g1^F(j)`` and encrypts ``F(j)`` to party j under that party's
Paillier key.  Encryption is additively homomorphic, so aggregating two
scripts multiplies commitments and ciphertexts component-wise and the
decrypted share of the aggregate is the sum of the contributed shares.

Weights are carried by an attestation list.  Every contribution publishes
``g1^{F_i(0)}`` together with a proof of knowledge of its exponent and a
signature by the contributor; the verifier checks that the weighted product
of these values equals the constant term interpolated from ``comms``.

Fresh scripts also carry per-share proofs that each ciphertext encrypts the
committed share.  Aggregation drops them: the decrypted share is checked
against ``comms`` directly and the Paillier opening proves the decryption,
so a bad ciphertext in an aggregate can block reconstruction but never
change the committed secret.
"""

from __future__ import annotations

import hashlib
import random
from dataclasses import dataclass

from .codec import encode
from .crypto_core import (
    KeyRing,
    as_rng,
    lagrange_at_zero,
    paillier_dec,
    paillier_enc,
    paillier_randomness,
    poly_eval,
)
from .errors import ParameterError

CHALLENGE_BITS = 64
MASK_BITS = 128


@dataclass(frozen=True)
class PvssScript:
    comms: tuple  # n group elements
    ciphers: tuple  # n Paillier ciphertexts
    weights: tuple  # n non-negative ints
    attest: tuple  # sorted (i, C_i, pok, sig, multiplicity)
    proofs: tuple | None  # per-share encryption proofs, fresh scripts only
    context: bytes = b""

    def wire(self):
        return (self.comms, self.ciphers, self.weights, self.attest, self.proofs, self.context)

    @classmethod
    def from_wire(cls, w):
        try:
            comms, ciphers, weights, attest, proofs, context = w
            if not isinstance(context, bytes):
                return None
            attest = tuple(tuple(a) for a in attest)
            proofs = None if proofs is None else tuple(tuple(p) for p in proofs)
            return cls(tuple(comms), tuple(ciphers), tuple(weights), attest, proofs, context)
        except (TypeError, ValueError):
            return None


@dataclass(frozen=True)
class PvssShare:
    j: int
    value: int  # raw Paillier plaintext; the field share is value mod q
    proof: int  # Paillier randomness opening the ciphertext

    def wire(self):
        return (self.j, self.value, self.proof)

    @classmethod
    def from_wire(cls, w):
        try:
            j, value, proof = w
            if all(isinstance(x, int) for x in (j, value, proof)):
                return cls(j, value, proof)
        except (TypeError, ValueError):
            pass
        return None


def script_hash(suite, script: PvssScript) -> bytes:
    return suite.hash(b"pvss|" + encode(script.wire()))


class Pvss:
    """The (n, 2f+1) scheme bound to a key ring."""

    def __init__(self, keys: KeyRing, n: int, f: int):
        self.keys = keys
        self.suite = keys.suite
        self.group = keys.suite.group
        self.q = keys.suite.q
        self.n = n
        self.f = f
        self.t = 2 * f + 1
        if n < self.t:
            raise ParameterError("need n >= 2f+1")
        self._lag = lagrange_at_zero(list(range(1, self.t + 1)), self.q)
        self._dual = _dual_weights(n, self.q) if n - self.t - 1 >= 0 else []

    # ------------------------------------------------------------ dealing
    def deal(self, i: int, secret=None, randomness=None, context: bytes = b"") -> PvssScript:
        keys, g, q, n = self.keys, self.group, self.q, self.n
        rng = as_rng(randomness)
        if secret is None:
            secret = rng.randrange(q)
        F = [secret % q] + [rng.randrange(q) for _ in range(self.t - 1)]
        shares = [poly_eval(F, j, q) for j in range(1, n + 1)]
        comms = tuple(g.exp(g.g1, s) for s in shares)
        ciphers, proofs = [], []
        for j, s in enumerate(shares, 1):
            N = keys.ek(j)
            r = _unit(rng, N)
            c = paillier_enc(N, s, r)
            ciphers.append(c)
            proofs.append(self._prove_enc(context, j, s, r, comms[j - 1], c, N, rng))
        C0 = g.exp(g.g1, F[0])
        pok = self._prove_dlog(context, i, F[0], C0, rng)
        sig = keys.sign(i, b"pvss-attest|" + context, encode((C0, pok)))
        weights = tuple(1 if k == i else 0 for k in range(1, n + 1))
        return PvssScript(comms, tuple(ciphers), weights, ((i, C0, pok, sig, 1),), tuple(proofs), context)

    # ------------------------------------------------------------ checks
    def verify(self, script: PvssScript) -> bool:
        try:
            return self._verify(script)
        except (TypeError, ValueError, ZeroDivisionError):
            return False

    def _verify(self, sc: PvssScript) -> bool:
        g, q, n, keys = self.group, self.q, self.n, self.keys
        if not isinstance(sc, PvssScript):
            return False
        if len(sc.comms) != n or len(sc.ciphers) != n or len(sc.weights) != n:
            return False
        if not all(g.is_element(v) for v in sc.comms):
            return False
        for j, c in enumerate(sc.ciphers, 1):
            N = keys.ek(j)
            if not (isinstance(c, int) and 0 < c < N * N):
                return False
        if not all(isinstance(w, int) and w >= 0 for w in sc.weights):
            return False
        # low-degree test against a dual-code word
        if self._dual:
            coef = self._dual_codeword(sc)
            acc = g.identity
            for v, c in zip(sc.comms, coef):
                acc = g.mul(acc, g.exp(v, c))
            if acc != g.identity:
                return False
        # attestations must account exactly for the weights
        tally = [0] * n
        prod = g.identity
        prev = None
        for a in sc.attest:
            i, C0, pok, sig, mult = a
            if not (isinstance(i, int) and 1 <= i <= n and isinstance(mult, int) and mult >= 1):
                return False
            key = encode(a[:4])
            if prev is not None and key <= prev:
                return False
            prev = key
            if not g.is_element(C0) or not self._check_dlog(sc.context, i, C0, pok):
                return False
            if not keys.verify_sig(i, b"pvss-attest|" + sc.context, encode((C0, pok)), sig):
                return False
            tally[i - 1] += mult
            prod = g.mul(prod, g.exp(C0, mult))
        if tuple(tally) != sc.weights or not sc.attest:
            return False
        if prod != self._const_commitment(sc):
            return False
        if sc.proofs is not None:
            if len(sc.proofs) != n:
                return False
            for j in range(1, n + 1):
                if not self._check_enc(sc.context, j, sc.comms[j - 1], sc.ciphers[j - 1], keys.ek(j), sc.proofs[j - 1]):
                    return False
        return True

    def weights(self, script: PvssScript) -> tuple:
        return script.weights

    def _const_commitment(self, sc):
        g = self.group
        acc = g.identity
        for lam, v in zip(self._lag, sc.comms[: self.t]):
            acc = g.mul(acc, g.exp(v, lam))
        return acc

    def _dual_codeword(self, sc):
        # random polynomial of degree n - t - 1, seeded by the script itself
        q = self.q
        deg = self.n - self.t - 1
        h = hashlib.sha256(b"ldt|" + encode((sc.comms, sc.context))).digest()
        rng = random.Random(h)
        m = [rng.randrange(q) for _ in range(deg + 1)]
        return [lam * poly_eval(m, j, q) % q for j, lam in enumerate(self._dual, 1)]

    # ------------------------------------------------------------ aggregation
    def aggregate(self, a: PvssScript, b: PvssScript, check: bool = True) -> PvssScript:
        if check and not (self.verify(a) and self.verify(b)):
            raise ParameterError("cannot aggregate an invalid script")
        if a.context != b.context:
            raise ParameterError("scripts belong to different contexts")
        g = self.group
        comms = tuple(g.mul(x, y) for x, y in zip(a.comms, b.comms))
        ciphers = []
        for j, (x, y) in enumerate(zip(a.ciphers, b.ciphers), 1):
            N = self.keys.ek(j)
            ciphers.append(x * y % (N * N))
        weights = tuple(x + y for x, y in zip(a.weights, b.weights))
        merged = {}
        for entry in a.attest + b.attest:
            k = entry[:4]
            merged[k] = merged.get(k, 0) + entry[4]
        attest = tuple(sorted(((*k, m) for k, m in merged.items()), key=lambda e: encode(e[:4])))
        return PvssScript(comms, tuple(ciphers), weights, attest, None, a.context)

    def aggregate_all(self, scripts, check: bool = True) -> PvssScript:
        scripts = list(scripts)
        if not scripts:
            raise ParameterError("nothing to aggregate")
        acc = scripts[0]
        if check and not self.verify(acc):
            raise ParameterError("cannot aggregate an invalid script")
        for s in scripts[1:]:
            if check and not self.verify(s):
                raise ParameterError("cannot aggregate an invalid script")
            acc = self.aggregate(acc, s, check=False)
        return acc

    # ------------------------------------------------------------ shares
    def get_share(self, j: int, dk, script: PvssScript) -> PvssShare:
        c = script.ciphers[j - 1]
        m = paillier_dec(dk, c)
        return PvssShare(j, m, paillier_randomness(dk, c, m))

    def verify_share(self, j: int, share: PvssShare, script: PvssScript) -> bool:
        try:
            if not isinstance(share, PvssShare) or share.j != j or not 1 <= j <= self.n:
                return False
            N = self.keys.ek(j)
            if not (0 <= share.value < N and 0 < share.proof < N):
                return False
            if paillier_enc(N, share.value, share.proof) != script.ciphers[j - 1]:
                return False
            g = self.group
            return g.exp(g.g1, share.value % self.q) == script.comms[j - 1]
        except (TypeError, ValueError, IndexError):
            return False

    def agg_shares(self, shares, script: PvssScript | None = None) -> int:
        shares = list(shares)
        idx = [s.j for s in shares]
        if len(shares) != self.t or len(set(idx)) != self.t:
            raise ParameterError(f"need exactly t = {self.t} shares from distinct parties")
        if script is not None and not all(self.verify_share(s.j, s, script) for s in shares):
            raise ParameterError("invalid share")
        q = self.q
        lam = lagrange_at_zero(idx, q)
        return sum(l * (s.value % q) for l, s in zip(lam, shares)) % q

    def verify_secret(self, s, script: PvssScript) -> bool:
        try:
            if not isinstance(s, int) or not 0 <= s < self.q:
                return False
            g = self.group
            return g.exp(g.g1, s) == self._const_commitment(script)
        except (TypeError, ValueError):
            return False

    # ------------------------------------------------------------ proofs
    def _prove_dlog(self, ctx, i, x, X, rng):
        g = self.group
        w = rng.randrange(self.q)
        A = g.exp(g.g1, w)
        e = self._chal(b"pok", ctx, i, X, A) % self.q
        return (e, (w + e * x) % self.q)

    def _check_dlog(self, ctx, i, X, pok) -> bool:
        g = self.group
        e, z = pok
        if not (isinstance(e, int) and isinstance(z, int) and 0 <= z < self.q):
            return False
        A = g.mul(g.exp(g.g1, z), g.exp(X, -e))
        return e == self._chal(b"pok", ctx, i, X, A) % self.q

    def _prove_enc(self, ctx, j, x, r, v, c, N, rng):
        # Sigma protocol: same x in v = g1^x and c = Enc_N(x; r)
        g = self.group
        N2 = N * N
        w = rng.getrandbits(self.q.bit_length() + CHALLENGE_BITS + MASK_BITS)
        s = _unit(rng, N)
        A1 = g.exp(g.g1, w)
        A2 = (1 + w % N * N) * pow(s, N, N2) % N2
        e = self._chal(b"enc", ctx, j, v, c, A1, A2) >> (256 - CHALLENGE_BITS)
        return (e, w + e * x, s * pow(r, e, N) % N)

    def _check_enc(self, ctx, j, v, c, N, proof) -> bool:
        g = self.group
        e, z, u = proof
        if not all(isinstance(x, int) for x in (e, z, u)):
            return False
        if not (0 <= e < 1 << CHALLENGE_BITS and 0 <= z < 1 << (self.q.bit_length() + CHALLENGE_BITS + MASK_BITS + 1)):
            return False
        if not 0 < u < N:
            return False
        N2 = N * N
        A1 = g.mul(g.exp(g.g1, z), g.exp(v, -e))
        A2 = (1 + z % N * N) * pow(u, N, N2) * pow(c, -e, N2) % N2
        return e == self._chal(b"enc", ctx, j, v, c, A1, A2) >> (256 - CHALLENGE_BITS)

    def _chal(self, label, *parts) -> int:
        return int.from_bytes(hashlib.sha256(label + b"|" + encode(parts)).digest(), "big")


def _unit(rng, N):
    while True:
        r = rng.randrange(1, N)
        if _gcd(r, N) == 1:
            return r


def _gcd(a, b):
    while b:
        a, b = b, a % b
    return a


def _dual_weights(n, q):
    # lambda_j = prod_{k != j} 1 / (j - k); scaling a degree < n - t polynomial
    # by these gives a word of the dual Reed-Solomon code
    out = []
    for j in range(1, n + 1):
        d = 1
        for k in range(1, n + 1):
            if k != j:
                d = d * (j - k) % q
        out.append(pow(d, -1, q))
    return out
