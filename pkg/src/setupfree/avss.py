"""Asynchronous verifiable secret sharing: sharing and reconstruction.

The dealer Pedersen-shares a random key, gathers a quorum of signed
"stored" acknowledgements over the commitment hash, and then broadcasts the
secret encrypted under the key in a Bracha-style echo/ready pattern.
Reconstruction pools verified key shares, interpolates the key, and amplifies
it so parties without shares can decrypt too.
"""

from __future__ import annotations

from dataclasses import dataclass

from .crypto_core import expand, interpolate_at_zero, pedersen_commit, shamir_share, verify_opening
from .errors import Malformed, ParameterError
from .reactor import Reactor, handle_step, init_step

RO, PLAIN = "ro", "plain"


@dataclass(frozen=True)
class ShOutput:
    h: bytes
    c: object
    sh_a: int | None
    sh_b: int | None
    cmt: tuple | None


def _key_pad(suite, key, nbytes):
    return expand(b"avss-key|" + suite.enc_field(key), nbytes)


def encrypt(suite, mode, key, m):
    if mode == RO:
        if not isinstance(m, bytes):
            raise ParameterError("secret must be bytes in hashed-key mode")
        pad = _key_pad(suite, key, len(m))
        return bytes(x ^ y for x, y in zip(m, pad))
    if not isinstance(m, int) or not 0 <= m < suite.q:
        raise ParameterError("secret must be a field element in plain mode")
    return (key + m) % suite.q


def decrypt(suite, mode, key, c):
    if mode == RO:
        pad = _key_pad(suite, key, len(c))
        return bytes(x ^ y for x, y in zip(c, pad))
    return (c - key) % suite.q


def _field(x, q):
    if not isinstance(x, int) or not 0 <= x < q:
        raise Malformed("field element")
    return x


def _cipher_ok(suite, mode, c):
    if mode == RO:
        return isinstance(c, bytes)
    return isinstance(c, int) and 0 <= c < suite.q


class AvssSh(Reactor):
    kind = "sh"

    def __init__(self, node, path, dealer, secret=None, on_output=None, mode=RO):
        super().__init__(node, path, on_output)
        if not 1 <= dealer <= node.n:
            raise ParameterError(f"dealer {dealer} out of range")
        if (secret is None) == (node.me == dealer):
            raise ParameterError("the dealer, and only the dealer, has a secret")
        if mode not in (RO, PLAIN):
            raise ParameterError(f"unknown encryption mode {mode!r}")
        if secret is not None:
            encrypt(node.suite, mode, 0, secret)  # type check only
        self.dealer = dealer
        self.secret = secret
        self.mode = mode
        # dealer side
        self.key = None
        self.h_dealt = None
        self.quorum = {}
        self.cipher_sent = False
        # participant side
        self.got_keyshare = False
        self.rec = None  # (C', A'(i), B'(i)) once verified
        self.flag = False
        self.held_cipher = None
        self.got_cipher = False
        self.sh_a = self.sh_b = self.cmt = None
        self.echo_from = set()
        self.ready_from = set()
        self.echoes = {}
        self.readies = {}
        self.readied = False

    # -- dealer -----------------------------------------------------------
    def start(self):
        if self.node.me != self.dealer:
            return
        node = self.node
        suite = node.suite
        rng = node.rng(self.path + (("deal", 0),))
        self.key = rng.randrange(suite.q)
        A, B, shares = shamir_share(self.key, node.f, node.n, rng, suite.q)
        C = pedersen_commit(A, B, suite.group)
        self.h_dealt = suite.hash_commitment(C)
        for j, (a, b) in enumerate(shares, 1):
            self.send(j, "KeyShare", (C, a, b))

    def _on_stored(self, src, sig):
        if self.node.me != self.dealer or self.cipher_sent or src in self.quorum:
            return
        if not isinstance(sig, bytes):
            raise Malformed("Stored signature")
        if not self.node.keys.verify_sig(src, self.instance, self.h_dealt, sig):
            return
        self.quorum[src] = sig
        if len(self.quorum) == self.node.n - self.node.f:
            self.cipher_sent = True
            c = encrypt(self.node.suite, self.mode, self.key, self.secret)
            self.multicast("Cipher", (tuple(sorted(self.quorum.items())), self.h_dealt, c))

    # -- participant ---------------------------------------------------------
    def on_message(self, src, tag, payload):
        if tag == "KeyShare":
            self._on_keyshare(src, payload)
        elif tag == "Stored":
            self._on_stored(src, payload)
        elif tag == "Cipher":
            if src != self.dealer or self.got_cipher:
                return
            self.got_cipher = True
            if self.flag:
                self._on_cipher(payload)
            else:
                self.held_cipher = payload
        elif tag == "Echo":
            self._on_echo(src, payload)
        elif tag == "Ready":
            self._on_ready(src, payload)

    def _on_keyshare(self, src, payload):
        if src != self.dealer or self.got_keyshare:
            return
        node = self.node
        C, a, b = payload
        if not isinstance(C, tuple) or len(C) != node.f + 1:
            raise Malformed("commitment length")
        _field(a, node.suite.q)
        _field(b, node.suite.q)
        self.got_keyshare = True
        if not verify_opening(node.me, a, b, C, node.suite.group):
            return
        self.rec = (C, a, b)
        self.flag = True
        sig = node.keys.sign(node.me, self.instance, node.suite.hash_commitment(C))
        self.send(self.dealer, "Stored", sig)
        if self.held_cipher is not None:
            held, self.held_cipher = self.held_cipher, None
            self._on_cipher(held)

    def _on_cipher(self, payload):
        node = self.node
        quorum, h, c = payload
        if not isinstance(quorum, tuple) or not isinstance(h, bytes) or not _cipher_ok(node.suite, self.mode, c):
            return
        C, a, b = self.rec
        if node.suite.hash_commitment(C) != h:
            return
        if not self._quorum_ok(quorum, h):
            return
        self.sh_a, self.sh_b, self.cmt = a, b, C
        self.multicast("Echo", (h, c))

    def _quorum_ok(self, quorum, h):
        node = self.node
        seen = set()
        for item in quorum:
            if not isinstance(item, tuple) or len(item) != 2:
                return False
            j, sig = item
            if not isinstance(j, int) or not 1 <= j <= node.n or j in seen:
                return False
            if not node.keys.verify_sig(j, self.instance, h, sig):
                return False
            seen.add(j)
        return len(seen) == node.n - node.f

    def _check_hc(self, payload):
        h, c = payload
        if not isinstance(h, bytes) or len(h) != self.node.suite.lam or not _cipher_ok(self.node.suite, self.mode, c):
            raise Malformed("(h, c)")
        return (h, c)

    def _on_echo(self, src, payload):
        hc = self._check_hc(payload)
        if src in self.echo_from:
            return
        self.echo_from.add(src)
        k = self.echoes[hc] = self.echoes.get(hc, 0) + 1
        if k == 2 * self.node.f + 1:
            self._ready(hc)

    def _on_ready(self, src, payload):
        hc = self._check_hc(payload)
        if src in self.ready_from:
            return
        self.ready_from.add(src)
        f = self.node.f
        k = self.readies[hc] = self.readies.get(hc, 0) + 1
        if k == f + 1:
            self._ready(hc)
        if k == 2 * f + 1:
            self.emit(ShOutput(hc[0], hc[1], self.sh_a, self.sh_b, self.cmt))

    def _ready(self, hc):
        if not self.readied:
            self.readied = True
            self.multicast("Ready", hc)


class AvssRec(Reactor):
    kind = "rec"

    def __init__(self, node, path, sh: ShOutput, on_output=None, mode=RO):
        super().__init__(node, path, on_output)
        self.sh = sh
        self.mode = mode
        self.phi = {}
        self.keyrec_from = set()
        self.key = None
        self.key_from = set()
        self.keys_seen = {}

    def start(self):
        sh = self.sh
        if sh.cmt is not None and sh.sh_a is not None and sh.sh_b is not None:
            self.multicast("KeyRec", (sh.sh_a, sh.sh_b, sh.h))

    def on_message(self, src, tag, payload):
        node = self.node
        q = node.suite.q
        if tag == "KeyRec":
            a, b, h = payload
            _field(a, q)
            _field(b, q)
            if src in self.keyrec_from:
                return
            self.keyrec_from.add(src)
            cmt = self.sh.cmt
            if cmt is None or not isinstance(h, bytes) or node.suite.hash_commitment(cmt) != h:
                return
            if not verify_opening(src, a, b, cmt, node.suite.group):
                return
            self.phi[src] = a
            if len(self.phi) == node.f + 1:
                self.key = interpolate_at_zero(self.phi.items(), node.f, q)
                self.multicast("Key", self.key)
        elif tag == "Key":
            key = _field(payload, q)
            if src in self.key_from:
                return
            self.key_from.add(src)
            k = self.keys_seen[key] = self.keys_seen.get(key, 0) + 1
            if k == node.f + 1:
                self.emit(decrypt(node.suite, self.mode, key, self.sh.c))


class AvssPipeline(Reactor):
    """Sharing followed immediately by reconstruction, as a standalone run."""

    kind = "avss"

    def __init__(self, node, path, dealer, secret=None, on_output=None, mode=RO, reconstruct=True):
        super().__init__(node, path, on_output)
        self.dealer = dealer
        self.secret = secret if node.me == dealer else None
        self.mode = mode
        self.reconstruct = reconstruct
        self.shared = None

    def start(self):
        self.spawn(("sh", self.dealer), AvssSh(self.node, self.child_path("sh", self.dealer), self.dealer,
                                               self.secret, self._on_shared, self.mode))

    def _on_shared(self, out):
        self.shared = out
        if not self.reconstruct:
            self.emit(None)
            return
        self.spawn(("rec", self.dealer), AvssRec(self.node, self.child_path("rec", self.dealer), out,
                                                 self.emit, self.mode))


# ---------------------------------------------------------------- adversarial dealers

DEALER_STRATEGIES = ("short-quorum", "crash-after-keyshare", "bad-shares", "partial-cipher", "equivocate-cipher")


class BadDealer(AvssSh):
    """Scripted corrupted dealer for a standalone pipeline.

    ``short-quorum``: broadcasts Cipher carrying only n-f-1 signatures.
    ``crash-after-keyshare``: hands out shares, then falls silent.
    ``bad-shares``: gives up to f parties shares that fail the opening check.
    ``partial-cipher``: sends Cipher to only f+1 parties and nothing else.
    ``equivocate-cipher``: one commitment, but two ciphertexts split across
    the parties, echoing and readying both.
    """

    kind = "bad-dealer"

    def __init__(self, node, path, strategy, secret, mode=RO):
        if strategy not in DEALER_STRATEGIES:
            raise ParameterError(f"unknown dealer strategy {strategy!r}")
        super().__init__(node, path, node.me, secret, None, mode)
        self.strategy = strategy
        self.rand = node.rng(path + (("bad", 0),))

    def start(self):
        node = self.node
        super().start()
        if self.strategy == "bad-shares":
            out = node.outbox
            victims = set(self.rand.sample(range(1, node.n + 1), node.f))
            for k, (dst, path, tag, (C, a, b)) in enumerate(out):
                if dst in victims and path == self.path:
                    out[k] = (dst, path, tag, (C, (a + 1) % node.suite.q, b))
        elif self.strategy == "crash-after-keyshare":
            self.cipher_sent = True

    def on_message(self, src, tag, payload):
        if tag != "Stored" or self.cipher_sent or src in self.quorum:
            return
        node = self.node
        if not node.keys.verify_sig(src, self.instance, self.h_dealt, payload):
            return
        self.quorum[src] = payload
        need = node.n - node.f - (1 if self.strategy == "short-quorum" else 0)
        if len(self.quorum) < need:
            return
        self.cipher_sent = True
        suite = node.suite
        quorum = tuple(sorted(self.quorum.items()))
        h = self.h_dealt
        c = encrypt(suite, self.mode, self.key, self.secret)
        if self.strategy == "short-quorum":
            self.multicast("Cipher", (quorum, h, c))
        elif self.strategy == "bad-shares":
            self.multicast("Cipher", (quorum, h, c))
        elif self.strategy == "partial-cipher":
            for j in self.rand.sample(range(1, node.n + 1), node.f + 1):
                self.send(j, "Cipher", (quorum, h, c))
        elif self.strategy == "equivocate-cipher":
            alt = self._alternate(c)
            split = node.n // 2
            for j in range(1, node.n + 1):
                self.send(j, "Cipher", (quorum, h, c if j <= split else alt))
            for tag_ in ("Echo", "Ready"):
                for v in (c, alt):
                    self.multicast(tag_, (h, v))

    def _alternate(self, c):
        if self.mode == RO:
            return bytes([c[0] ^ 1]) + c[1:] if c else b"\x01"
        return (c + 1) % self.node.suite.q


def bad_dealer(strategy, secret, mode=RO, path=None):
    """Behaviour factory: the corrupted dealer of a standalone pipeline."""

    def make(node, factory):
        p = path if path is not None else (("sh", node.me),)
        root = Reactor(node, ())
        root.spawn(p[0], BadDealer(node, p, strategy, secret, mode))
        return root

    return make


def avss_sh_init(node, path, dealer, secret=None, mode=RO):
    return init_step(AvssSh(node, path, dealer, secret, mode=mode))


def avss_sh_handle(state, src, path, tag, payload):
    return handle_step(state, src, path, tag, payload)


def avss_rec_init(node, path, sh: ShOutput, mode=RO):
    return init_step(AvssRec(node, path, sh, mode=mode))


def avss_rec_handle(state, src, path, tag, payload):
    return handle_step(state, src, path, tag, payload)
