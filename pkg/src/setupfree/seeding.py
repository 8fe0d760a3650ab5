"""Led reliable seeding from an aggregatable PVSS.

Every party deals a fresh script to the leader.  The leader aggregates
2f+1 of them, gets the aggregate locked by a 2f+1 signature quorum, then
collects 2f+1 decrypted shares, recovers the secret and sends it out; an
echo/ready exchange makes the seed reach everybody.
"""

from __future__ import annotations

from .errors import Malformed, ParameterError
from .pvss_agg import Pvss, PvssScript, PvssShare, script_hash
from .reactor import Reactor, handle_step, init_step

_PVSS_CACHE: dict = {}


def pvss_for(node) -> Pvss:
    key = (id(node.keys), node.n, node.f)
    pv = _PVSS_CACHE.get(key)
    if pv is None or pv.keys is not node.keys:
        if len(_PVSS_CACHE) > 64:
            _PVSS_CACHE.clear()
        pv = _PVSS_CACHE[key] = Pvss(node.keys, node.n, node.f)
    return pv


def seed_bytes(suite, s: int) -> bytes:
    return suite.hash(b"seed|" + suite.enc_field(s))


class Seeding(Reactor):
    kind = "seed"

    def __init__(self, node, path, leader, on_output=None):
        super().__init__(node, path, on_output)
        if not 1 <= leader <= node.n:
            raise ParameterError(f"leader {leader} out of range")
        self.leader = leader
        self.pv = pvss_for(node)
        # leader
        self.scripts = {}
        self.agg = None
        self.agg_hash = None
        self.sigma = {}
        self.committed = False
        self.shares = {}
        self.seed_sent = False
        # participant
        self.pvss = None
        self.h = None
        self.got_lock = self.got_commit = self.got_seed = False
        self.revealing = False
        self.held = {}  # Commit/Seed that arrived before the Lock
        self.echo_from = set()
        self.ready_from = set()
        self.echoes = {}
        self.readies = {}
        self.readied = False
        self.secret = None

    @property
    def quorum(self):
        return 2 * self.node.f + 1

    def start(self):
        node = self.node
        script = self.pv.deal(node.me, randomness=node.rng(self.path + (("deal", 0),)), context=self.instance)
        self.send(self.leader, "PvssScript", script.wire())

    def on_message(self, src, tag, payload):
        handler = getattr(self, "_on_" + tag, None)
        if handler is not None:
            handler(src, payload)

    # -- leader -----------------------------------------------------------
    def _is_leader(self):
        return self.node.me == self.leader

    def _on_PvssScript(self, src, payload):
        if not self._is_leader() or src in self.scripts or self.agg is not None:
            return
        sc = PvssScript.from_wire(payload)
        if sc is None:
            raise Malformed("PvssScript")
        unit = tuple(1 if k == src else 0 for k in range(1, self.node.n + 1))
        if sc.context != self.instance or self.pv.weights(sc) != unit or not self.pv.verify(sc):
            return
        self.scripts[src] = sc
        if len(self.scripts) == self.quorum:
            self.agg = self.pv.aggregate_all([self.scripts[j] for j in sorted(self.scripts)], check=False)
            self.agg_hash = script_hash(self.node.suite, self.agg)
            self.multicast("LockAggPvss", self.agg.wire())

    def _on_ConfirmAggPvss(self, src, sig):
        if not self._is_leader() or self.agg is None or self.committed or src in self.sigma:
            return
        if not self.node.keys.verify_sig(src, self.instance, self.agg_hash, sig):
            return
        self.sigma[src] = sig
        if len(self.sigma) == self.quorum:
            self.committed = True
            self.multicast("CommitAggPvss", (self.agg_hash, tuple(sorted(self.sigma.items()))))

    def _on_SeedShare(self, src, payload):
        if not self._is_leader() or not self.committed or self.seed_sent or src in self.shares:
            return
        sh = PvssShare.from_wire(payload)
        if sh is None:
            raise Malformed("SeedShare")
        if not self.pv.verify_share(src, sh, self.agg):
            return
        self.shares[src] = sh
        if len(self.shares) == self.quorum:
            self.seed_sent = True
            s = self.pv.agg_shares(self.shares.values())
            self.multicast("Seed", (self.agg_hash, tuple(sorted(self.sigma.items())), s))

    # -- participant --------------------------------------------------------
    def _on_LockAggPvss(self, src, payload):
        if src != self.leader or self.got_lock:
            return
        self.got_lock = True
        sc = PvssScript.from_wire(payload)
        if sc is None or sc.context != self.instance:
            return
        w = self.pv.weights(sc)
        if sum(1 for x in w if x) != self.quorum or not self.pv.verify(sc):
            return
        self.pvss = sc
        self.h = script_hash(self.node.suite, sc)
        self.send(self.leader, "ConfirmAggPvss", self.node.keys.sign(self.node.me, self.instance, self.h))
        for tag in ("CommitAggPvss", "Seed"):
            if tag in self.held:
                getattr(self, "_on_" + tag)(self.leader, self.held.pop(tag))

    def _sigma_ok(self, h, sigma):
        node = self.node
        if not isinstance(sigma, tuple):
            return False
        seen = set()
        for item in sigma:
            if not isinstance(item, tuple) or len(item) != 2:
                return False
            j, sig = item
            if not isinstance(j, int) or not 1 <= j <= node.n or j in seen:
                return False
            if not node.keys.verify_sig(j, self.instance, h, sig):
                return False
            seen.add(j)
        return len(seen) == self.quorum

    def _on_CommitAggPvss(self, src, payload):
        if src != self.leader or self.got_commit:
            return
        if not self.got_lock:
            self.held.setdefault("CommitAggPvss", payload)
            return
        self.got_commit = True
        h, sigma = payload
        if self.pvss is None or h != self.h or not self._sigma_ok(h, sigma):
            return
        self.revealing = True
        node = self.node
        share = self.pv.get_share(node.me, node.keys.dk(node.me), self.pvss)
        self.send(self.leader, "SeedShare", share.wire())

    def _on_Seed(self, src, payload):
        if src != self.leader or self.got_seed:
            return
        if not self.got_lock:
            self.held.setdefault("Seed", payload)
            return
        self.got_seed = True
        h, sigma, s = payload
        # a party that never saw the locked script cannot check the secret and
        # relies on the ready amplification instead
        if self.pvss is None or h != self.h or not self.pv.verify_secret(s, self.pvss):
            return
        if not self._sigma_ok(h, sigma):
            return
        self.multicast("SeedEcho", s)

    def _check_secret(self, s):
        if not isinstance(s, int) or not 0 <= s < self.node.suite.q:
            raise Malformed("seed secret")
        return s

    def _on_SeedEcho(self, src, s):
        s = self._check_secret(s)
        if src in self.echo_from:
            return
        self.echo_from.add(src)
        k = self.echoes[s] = self.echoes.get(s, 0) + 1
        if k == self.quorum:
            self._ready(s)

    def _on_SeedReady(self, src, s):
        s = self._check_secret(s)
        if src in self.ready_from:
            return
        self.ready_from.add(src)
        k = self.readies[s] = self.readies.get(s, 0) + 1
        if k == self.node.f + 1:
            self._ready(s)
        if k == self.quorum:
            self.secret = s
            self.emit(seed_bytes(self.node.suite, s))

    def _ready(self, s):
        if not self.readied:
            self.readied = True
            self.multicast("SeedReady", s)


def seeding_init(node, path, leader):
    return init_step(Seeding(node, path, leader))


def seeding_handle(state, src, path, tag, payload):
    return handle_step(state, src, path, tag, payload)
