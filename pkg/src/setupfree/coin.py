"""Reasonably fair common coin from VRFs shared through AVSS.

Each party secret-shares its VRF evaluation, the parties agree (through a
signed snapshot quorum) on a set of completed sharings before anything is
revealed, then reconstruct the evaluations in that set and amplify the
largest one they saw.  The lowest bit of the largest evaluation is the coin.
The election variant outputs the winning ``(dealer, r, proof)`` instead.
"""

from __future__ import annotations

from functools import partial

from .avss import RO, AvssRec, AvssSh
from .codec import DecodeError, decode, encode
from .errors import Malformed, ParameterError
from .reactor import Reactor, handle_step, init_step
from .seeding import Seeding

GENESIS, SEEDING = "genesis", "seeding"


def vrf_rank(r: bytes, dealer: int):
    """Total order on evaluations: larger r wins, lower dealer breaks ties."""
    return (int.from_bytes(r, "big"), -dealer)


def hash_set(suite, s) -> bytes:
    return suite.hash(b"set|" + encode(tuple(sorted(s))))


def lowest_bit(r: bytes) -> int:
    return r[-1] & 1


class Coin(Reactor):
    kind = "coin"

    def __init__(self, node, path, mode=GENESIS, nonce=None, election=False, on_output=None):
        super().__init__(node, path, on_output)
        if mode == GENESIS and not isinstance(nonce, bytes):
            raise ParameterError("genesis mode needs a nonce")
        if mode == SEEDING and nonce is not None:
            raise ParameterError("seeding mode takes no nonce")
        if mode not in (GENESIS, SEEDING):
            raise ParameterError(f"unknown coin mode {mode!r}")
        self.mode = mode
        self.nonce = nonce
        self.election = election
        self.seeds = {}
        self.seed_listeners = []
        self.sh_out = {}
        self.S = set()
        self.snapshot = None
        self.snapshot_hash = None
        self.sigma = {}
        self.commit_sent = False
        self.commit_from = set()
        self.S_hat = None
        self.accepted_commit = None  # hash carried by the first valid Commit
        self.signed_sets = {}  # hash -> set we confirmed, for instrumentation
        self.locks = {}  # requester -> set, waiting until it is inside S
        self.lock_from = set()
        self.rec_requests = set()
        self.rec_started = set()
        self.rec_out = {}
        self.candidate_sent = None
        self.cand_from = set()
        self.C = {}  # sender -> (dealer, r, proof)
        self.X = 0
        self.unresolved = {}  # sender -> candidate waiting for a seed
        self.empty_candidate_sets = 0
        self.c_at_output = None

    # -- activation ---------------------------------------------------------
    def start(self):
        node = self.node
        if self.mode == GENESIS:
            for j in range(1, node.n + 1):
                self._on_seed(j, self.nonce)
        else:
            for j in range(1, node.n + 1):
                self.spawn(("seed", j), Seeding(node, self.child_path("seed", j), j,
                                                on_output=partial(self._on_seed, j)))

    def _on_seed(self, j, seed):
        node = self.node
        self.seeds[j] = seed
        secret = None
        if j == node.me:
            r, proof = node.keys.vrf_eval(node.me, self.instance, seed)
            secret = encode((r, proof))
        self.spawn(("sh", j), AvssSh(node, self.child_path("sh", j), j, secret,
                                     on_output=partial(self._on_shared, j), mode=RO))
        for cb in self.seed_listeners:
            cb(j)
        self._resolve_candidates()

    def _on_shared(self, j, out):
        self.sh_out[j] = out
        self.S.add(j)
        node = self.node
        if len(self.S) == node.n - node.f and self.snapshot is None:
            self.snapshot = frozenset(self.S)
            self.snapshot_hash = hash_set(node.suite, self.snapshot)
            self.multicast("Lock", tuple(sorted(self.snapshot)))
        self._serve_locks()
        self._start_recs()

    # -- messages -----------------------------------------------------------
    def on_message(self, src, tag, payload):
        handler = getattr(self, "_on_" + tag, None)
        if handler is not None:
            handler(src, payload)

    def _on_Lock(self, src, payload):
        node = self.node
        if src in self.lock_from:
            return
        if (not isinstance(payload, tuple) or len(payload) != node.n - node.f
                or len(set(payload)) != len(payload)
                or not all(isinstance(k, int) and 1 <= k <= node.n for k in payload)):
            raise Malformed("Lock set")
        self.lock_from.add(src)
        self.locks[src] = frozenset(payload)
        self._serve_locks()

    def _serve_locks(self):
        node = self.node
        for src in [s for s, st in self.locks.items() if st <= self.S]:
            st = self.locks.pop(src)
            h = hash_set(node.suite, st)
            self.signed_sets[h] = st
            self.send(src, "Confirm", node.keys.sign(node.me, self.instance, h))

    def _on_Confirm(self, src, sig):
        node = self.node
        if self.snapshot is None or self.commit_sent or src in self.sigma:
            return
        if not node.keys.verify_sig(src, self.instance, self.snapshot_hash, sig):
            return
        self.sigma[src] = sig
        if len(self.sigma) == node.n - node.f:
            self.commit_sent = True
            self.multicast("Commit", (tuple(sorted(self.sigma.items())), self.snapshot_hash))

    def _on_Commit(self, src, payload):
        node = self.node
        if src in self.commit_from:
            return
        sigma, h = payload
        self.commit_from.add(src)
        if self.S_hat is not None or not isinstance(h, bytes) or not isinstance(sigma, tuple):
            return
        seen = set()
        for item in sigma:
            if not isinstance(item, tuple) or len(item) != 2:
                return
            k, sig = item
            if not isinstance(k, int) or not 1 <= k <= node.n or k in seen:
                return
            if not node.keys.verify_sig(k, self.instance, h, sig):
                return
            seen.add(k)
        if len(seen) != node.n - node.f:
            return
        self.S_hat = frozenset(self.S)
        self.accepted_commit = h
        for k in sorted(self.S_hat):
            self.multicast("RecRequest", k)
        self._start_recs()
        self._maybe_candidate()

    def _on_RecRequest(self, src, k):
        if not isinstance(k, int) or not 1 <= k <= self.node.n:
            raise Malformed("RecRequest index")
        if k in self.rec_requests:
            return
        self.rec_requests.add(k)
        self._start_recs()

    def _start_recs(self):
        if self.S_hat is None:
            return
        for k in sorted(self.rec_requests - self.rec_started):
            if k in self.sh_out:
                self.rec_started.add(k)
                self.spawn(("rec", k), AvssRec(self.node, self.child_path("rec", k), self.sh_out[k],
                                               on_output=partial(self._on_recovered, k), mode=RO))

    def _on_recovered(self, k, m):
        self.rec_out[k] = m
        self._maybe_candidate()

    def _maybe_candidate(self):
        if self.S_hat is None or self.candidate_sent is not None:
            return
        if not all(k in self.rec_out for k in self.S_hat):
            return
        node = self.node
        best = None
        for k in sorted(self.S_hat):
            try:
                r, proof = decode(self.rec_out[k])
            except (DecodeError, TypeError, ValueError):
                continue
            if node.keys.vrf_verify(k, self.instance, self.seeds[k], r, proof):
                if best is None or vrf_rank(r, k) > vrf_rank(best[1], best[0]):
                    best = (k, r, proof)
        if best is None:
            self.empty_candidate_sets += 1
        self.candidate_sent = best if best is not None else ()
        self.multicast("Candidate", best)

    def _on_Candidate(self, src, payload):
        node = self.node
        if src in self.cand_from:
            return
        if payload is not None:
            if (not isinstance(payload, tuple) or len(payload) != 3 or not isinstance(payload[0], int)
                    or not 1 <= payload[0] <= node.n):
                raise Malformed("Candidate")
        self.cand_from.add(src)
        if payload is None:
            self.X += 1
        else:
            self.unresolved[src] = payload
            self._resolve_candidates()
        self._check_output()

    def _resolve_candidates(self):
        node = self.node
        done = []
        for src, (k, r, proof) in self.unresolved.items():
            if k not in self.seeds:
                continue
            done.append(src)
            if node.keys.vrf_verify(k, self.instance, self.seeds[k], r, proof):
                self.C[src] = (k, r, proof)
        if done:
            for src in done:
                del self.unresolved[src]
            self._check_output()

    def _check_output(self):
        node = self.node
        if self.has_output or len(self.C) + self.X < node.n - node.f or not self.C:
            return
        k, r, proof = max(self.C.values(), key=lambda t: vrf_rank(t[1], t[0]))
        self.c_at_output = len(self.C)
        self.emit((k, r, proof) if self.election else lowest_bit(r))


class LocalCoin(Reactor):
    """Test double: a perfect shared coin with no messages at all."""

    kind = "coin"

    def start(self):
        node = self.node
        self.emit(node.suite.hash(b"perfect|" + encode((node.seed, self.path)))[-1] & 1)


def coin_factory(mode, nonce=None):
    """``(node, path, on_output) -> coin reactor`` for protocols needing coins."""
    if mode == "perfect":
        return lambda node, path, on_output: LocalCoin(node, path, on_output)
    if mode == GENESIS:
        return lambda node, path, on_output: Coin(node, path, GENESIS, nonce or genesis_nonce(node),
                                                  on_output=on_output)
    if mode == SEEDING:
        return lambda node, path, on_output: Coin(node, path, SEEDING, on_output=on_output)
    raise ParameterError(f"unknown coin mode {mode!r}")


def genesis_nonce(node) -> bytes:
    """The trusted nonce handed out after key registration."""
    g = node.params.get("genesis")
    if g is not None:
        return g
    return node.suite.hash(b"genesis|" + encode(("genesis", node.seed)))


def coin_init(node, path, mode=GENESIS, nonce=None):
    return init_step(Coin(node, path, mode, nonce))


def coin_handle(state, src, path, tag, payload):
    return handle_step(state, src, path, tag, payload)


class CoreSetProbe:
    """Simulation probe checking the core-set property of every coin.

    When the first honest party of a coin instance accepts a Commit, the
    committed snapshot must already be contained in the local completed set
    of at least f+1 honest parties.
    """

    def __init__(self):
        self.checked = set()
        self.violations = []
        self.checks = 0
        self._sim = None

    def __call__(self, sim, env):
        if sim is not self._sim:
            self._sim = sim
            self.checked = set()
        dst = env.dst
        if dst in sim.corrupt or env.tag != "Commit":
            return
        root = sim.roots[dst]
        coin = _find(root, env.path)
        if coin is None or coin.accepted_commit is None or env.path in self.checked:
            return
        self.checked.add(env.path)
        self.checks += 1
        h = coin.accepted_commit
        committed = None
        for i in sim.roots:
            if i in sim.corrupt:
                continue
            other = _find(sim.roots[i], env.path)
            if other is not None and h in other.signed_sets:
                committed = other.signed_sets[h]
                break
        holders = 0
        for i in sim.roots:
            if i in sim.corrupt:
                continue
            other = _find(sim.roots[i], env.path)
            if other is not None and committed is not None and committed <= other.S:
                holders += 1
        if committed is None or holders < sim.f + 1:
            self.violations.append((env.path, holders))


def _find(root, path):
    r = root
    k = len(root.path)
    if path[:k] != root.path:
        return None
    for key in path[k:]:
        r = r.children.get(key)
        if r is None:
            return None
    return r if isinstance(r, Coin) else None
