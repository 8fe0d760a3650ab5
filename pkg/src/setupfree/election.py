"""Leader election with perfect agreement.

The coin runs in its election variant and yields each party's best
``(dealer, r, proof)``; parties reliably broadcast it, and vote 1 in a
binary agreement only if, among the first n-f verified broadcasts, the
largest evaluation is also backed by at least f+1 of them.  If agreement
says 1, the leader is derived from an evaluation that passes the same test
inside some Vote; otherwise the default index 1 is returned.
"""

from __future__ import annotations

from functools import partial
from itertools import combinations

from .aba import Aba
from .coin import GENESIS, Coin, coin_factory, genesis_nonce, vrf_rank
from .errors import Malformed
from .reactor import Reactor, handle_step, init_step
from .rbc import Rbc

DEFAULT_INDEX = 1


def winner(entries, f):
    """The (dealer, r) that is both largest and backed f+1 times, else None.

    ``entries`` are ``(j, dealer, r, proof)`` tuples.
    """
    if not entries:
        return None
    top = max(entries, key=lambda e: vrf_rank(e[2], e[1]))
    pair = (top[1], top[2])
    backing = sum(1 for e in entries if (e[1], e[2]) == pair)
    return pair if backing >= f + 1 else None


def leader_index(r: bytes, n: int) -> int:
    return int.from_bytes(r, "big") % n + 1


def _triple_ok(v):
    return (isinstance(v, tuple) and len(v) == 3 and isinstance(v[0], int)
            and isinstance(v[1], bytes) and isinstance(v[2], bytes))


class Election(Reactor):
    kind = "elect"

    def __init__(self, node, path, coin_mode=GENESIS, on_output=None, nonce=None, aba_coin=None):
        super().__init__(node, path, on_output)
        self.coin_mode = coin_mode
        self.nonce = nonce if nonce is not None or coin_mode != GENESIS else genesis_nonce(node)
        self.aba_coin = aba_coin or coin_mode
        self.coin = None
        self.rbcs = {}
        self.pending = []  # RBC deliveries waiting for their dealer's seed
        self.G = set()
        self.G_star = None
        self.ballot = None
        self.aba = None
        self.aba_out = None
        self.votes = []
        self.vote_from = set()
        self.rnd_max = None

    def start(self):
        node = self.node
        self.coin = Coin(node, self.child_path("coin", 0), self.coin_mode,
                         self.nonce if self.coin_mode == GENESIS else None,
                         election=True, on_output=self._on_rnd_max)
        self.coin.seed_listeners.append(lambda j: self._resolve())
        for j in range(1, node.n + 1):
            self.rbcs[j] = self.spawn(("rbc", j), Rbc(node, self.child_path("rbc", j), j, check=_triple_ok,
                                                      on_output=partial(self._on_delivered, j)))
        self.spawn(("coin", 0), self.coin)

    def _on_rnd_max(self, triple):
        self.rnd_max = triple
        self.rbcs[self.node.me].provide(triple)

    def _on_delivered(self, j, triple):
        self.pending.append((j, triple))
        self._resolve()

    def _resolve(self):
        node = self.node
        seeds = self.coin.seeds
        keep = []
        for j, (k, r, proof) in self.pending:
            if not 1 <= k <= node.n:
                continue
            if k not in seeds:
                keep.append((j, (k, r, proof)))
                continue
            if node.keys.vrf_verify(k, self.coin.instance, seeds[k], r, proof):
                self._admit((j, k, r, proof))
        self.pending = keep
        self._check_votes()

    def _admit(self, entry):
        node = self.node
        self.G.add(entry)
        if len(self.G) == node.n - node.f and self.ballot is None:
            if winner(self.G, node.f) is not None:
                self.G_star = frozenset(self.G)
                self.ballot = 1
                self.multicast("Vote", tuple(sorted(self.G_star)))
            else:
                self.ballot = 0
            self.aba = self.spawn(("aba", 0), Aba(node, self.child_path("aba", 0), self.ballot,
                                                  coin_factory(self.aba_coin, self.nonce),
                                                  on_output=self._on_decided))

    def _on_decided(self, b):
        self.aba_out = b
        if b == 0:
            self.emit(DEFAULT_INDEX)
        else:
            self._check_votes()

    def on_message(self, src, tag, payload):
        if tag != "Vote" or src in self.vote_from:
            return
        if not isinstance(payload, tuple) or not all(
                isinstance(e, tuple) and len(e) == 4 and isinstance(e[0], int) and isinstance(e[1], int)
                and isinstance(e[2], bytes) and isinstance(e[3], bytes) for e in payload):
            raise Malformed("Vote")
        self.vote_from.add(src)
        self.votes.append(frozenset(payload))
        self._check_votes()

    def _check_votes(self):
        if self.aba_out != 1 or self.has_output:
            return
        node = self.node
        for gv in self.votes:
            if len(gv) == node.n - node.f and gv <= self.G:
                w = winner(gv, node.f)
                if w is not None:
                    self.emit(leader_index(w[1], node.n))
                    return


class VoteForger(Election):
    """Corrupted party that broadcasts its own VRF triple instead of the
    coin's best, and sends a Vote for every (n-f)-subset of what it has
    seen that names a winner different from the ones already voted for."""

    kind = "vote-forger"

    def __init__(self, node, path, coin_mode=GENESIS, nonce=None):
        super().__init__(node, path, coin_mode, nonce=nonce)
        self.forged = set()

    def _on_rnd_max(self, triple):
        node = self.node
        seed = self.coin.seeds.get(node.me)
        if seed is None:
            return super()._on_rnd_max(triple)
        r, proof = node.keys.vrf_eval(node.me, self.coin.instance, seed)
        self.rbcs[node.me].provide((node.me, r, proof))

    def _admit(self, entry):
        super()._admit(entry)
        node = self.node
        pool = sorted(self.G)
        if len(pool) > 10:
            return
        for sub in combinations(pool, node.n - node.f):
            w = winner(sub, node.f)
            if w is not None and w not in self.forged:
                self.forged.add(w)
                self.multicast("Vote", tuple(sub))


def vote_forger(path, coin_mode=GENESIS, nonce=None):
    def make(node, factory):
        root = Reactor(node, path[:-1])
        root.spawn(path[-1], VoteForger(node, path, coin_mode, nonce))
        return root

    return make


def election_init(node, path, coin_mode=GENESIS):
    return init_step(Election(node, path, coin_mode))


def election_handle(state, src, path, tag, payload):
    return handle_step(state, src, path, tag, payload)
