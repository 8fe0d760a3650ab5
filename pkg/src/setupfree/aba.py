"""Binary agreement driven by a (possibly disagreeing) common coin.

Each round runs a binary-value broadcast (Val), an auxiliary vote (Aux), a
broadcast of the resulting value set (Conf) admitted in the same
relay-on-f+1 / admit-on-2f+1 pattern, and a final report of one admitted set
(Fin).  After n-f Fin reports a party:

* decides v when every report is the singleton {v} (no coin needed);
* adopts v when some report is the singleton {v}, starting the round's coin
  without waiting for it so peers that need it can finish;
* otherwise waits for the coin and adopts its bit.

Two different singletons can never both be admitted in one round, so a
decision in round r forces every honest estimate in round r+1, whatever the
coin does.  A party that decided keeps taking part for one more round and
then starts no new rounds.
"""

from __future__ import annotations

from .coin import coin_factory
from .errors import Malformed, ParameterError
from .reactor import Reactor, handle_step, init_step

MAX_ROUND = 10_000


class _Round:
    __slots__ = ("val", "val_sent", "bin", "aux", "aux_sent", "conf", "conf_sent", "conf_own",
                 "conf_values", "fin", "fin_sent", "finished", "coin_started")

    def __init__(self):
        self.val = (set(), set())  # senders backing each bit
        self.val_sent = set()
        self.bin = set()
        self.aux = {}
        self.aux_sent = None
        self.conf = {}
        self.conf_sent = set()
        self.conf_own = None
        self.conf_values = set()
        self.fin = {}
        self.fin_sent = None
        self.finished = False
        self.coin_started = False


def _bitset(payload):
    if (not isinstance(payload, tuple) or not 1 <= len(payload) <= 2
            or not all(b in (0, 1) and isinstance(b, int) for b in payload)
            or len(set(payload)) != len(payload)):
        raise Malformed("value set")
    return frozenset(payload)


class Aba(Reactor):
    kind = "aba"

    def __init__(self, node, path, value, coin="genesis", on_output=None, nonce=None):
        super().__init__(node, path, on_output)
        if value not in (0, 1) or isinstance(value, bool):
            raise ParameterError(f"input must be a bit, got {value!r}")
        self.input = value
        self.est = value
        self.make_coin = coin_factory(coin, nonce) if isinstance(coin, str) else coin
        self.round = 0
        self.rounds = {}
        self.decided_round = None
        self.halt_after = None
        self.waiting_coin = None
        self.coins = {}

    def _st(self, r):
        st = self.rounds.get(r)
        if st is None:
            st = self.rounds[r] = _Round()
        return st

    def start(self):
        self._enter(0)

    def _enter(self, r):
        self.round = r
        st = self._st(r)
        if self.est not in st.val_sent:
            st.val_sent.add(self.est)
            self.multicast("Val", (r, self.est))
        self._progress(r)

    # -- messages -----------------------------------------------------------
    def on_message(self, src, tag, payload):
        if not isinstance(payload, tuple) or len(payload) != 2:
            raise Malformed("round message")
        r, x = payload
        if not isinstance(r, int) or not 0 <= r <= MAX_ROUND:
            raise Malformed("round number")
        if tag == "Val" or tag == "Aux":
            if x not in (0, 1) or isinstance(x, bool):
                raise Malformed("bit")
        elif tag == "Conf" or tag == "Fin":
            x = _bitset(x)
        else:
            return
        st = self._st(r)
        if tag == "Val":
            if src in st.val[x]:
                return
            st.val[x].add(src)
        elif tag == "Aux":
            if src in st.aux:
                return
            st.aux[src] = x
        elif tag == "Conf":
            senders = st.conf.setdefault(x, set())
            if src in senders:
                return
            senders.add(src)
        else:
            if src in st.fin:
                return
            st.fin[src] = x
        if r <= self.round:
            self._progress(r)

    def _progress(self, r):
        node = self.node
        n, f = node.n, node.f
        st = self.rounds[r]
        for b in (0, 1):
            k = len(st.val[b])
            if k >= f + 1 and b not in st.val_sent:
                st.val_sent.add(b)
                self.multicast("Val", (r, b))
            if k >= 2 * f + 1 and b not in st.bin:
                st.bin.add(b)
                if st.aux_sent is None:
                    st.aux_sent = b
                    self.multicast("Aux", (r, b))
        if st.conf_own is None and st.bin:
            support = [b for b in st.aux.values() if b in st.bin]
            if len(support) >= n - f:
                st.conf_own = frozenset(support)
                st.conf_sent.add(st.conf_own)
                self.multicast("Conf", (r, tuple(sorted(st.conf_own))))
        for vals, senders in st.conf.items():
            k = len(senders)
            if k >= f + 1 and vals not in st.conf_sent:
                st.conf_sent.add(vals)
                self.multicast("Conf", (r, tuple(sorted(vals))))
            if k >= 2 * f + 1 and vals not in st.conf_values:
                st.conf_values.add(vals)
                if st.fin_sent is None:
                    st.fin_sent = vals
                    self.multicast("Fin", (r, tuple(sorted(vals))))
        if not st.finished and r == self.round:
            reports = [v for v in st.fin.values() if v in st.conf_values]
            if len(reports) >= n - f:
                st.finished = True
                self._end_round(r, reports)

    def _end_round(self, r, reports):
        singles = {next(iter(v)) for v in reports if len(v) == 1}
        if len(singles) > 1:
            raise AssertionError("two singleton value sets admitted in one round")
        if all(len(v) == 1 for v in reports) and len(singles) == 1:
            v = singles.pop()
            self.est = v
            self._decide(v, r)
            self._next(r)
        elif singles:
            self.est = singles.pop()
            self._start_coin(r)
            self._next(r)
        else:
            self.waiting_coin = r
            self._start_coin(r)

    def _start_coin(self, r):
        st = self.rounds[r]
        if st.coin_started:
            return
        st.coin_started = True
        key = ("coin", r)
        self.spawn(key, self.make_coin(self.node, self.child_path("coin", r), lambda b, r=r: self._on_coin(r, b)))

    def _on_coin(self, r, b):
        self.coins[r] = b
        if self.waiting_coin == r:
            self.waiting_coin = None
            self.est = b & 1
            self._next(r)

    def _decide(self, v, r):
        if self.decided_round is None:
            self.decided_round = r
            self.halt_after = r + 1
            self.emit(v)

    def _next(self, r):
        if self.halt_after is not None and r >= self.halt_after:
            return
        self._enter(r + 1)

    @property
    def rounds_used(self):
        """Rounds run up to and including the deciding one."""
        return None if self.decided_round is None else self.decided_round + 1

    @property
    def coins_used(self):
        return sum(1 for st in self.rounds.values() if st.coin_started)


class Spammer(Reactor):
    """Corrupted ABA party: backs both bits and every value set in each round
    it hears about, with different stories to the two halves of the parties."""

    kind = "aba-spam"

    def __init__(self, node, path):
        super().__init__(node, path)
        self.seen = set()
        self.rand = node.rng(path + (("spam", 0),))

    def start(self):
        self._flood(0)

    def _flood(self, r):
        if r in self.seen or r > MAX_ROUND:
            return
        self.seen.add(r)
        n = self.node.n
        half = n // 2
        flip = self.rand.randrange(2)
        for j in range(1, n + 1):
            b = (j <= half) ^ flip
            self.send(j, "Val", (r, int(b)))
            self.send(j, "Val", (r, 1 - int(b)))
            self.send(j, "Aux", (r, int(b)))
            self.send(j, "Conf", (r, (int(b),)))
            self.send(j, "Conf", (r, (0, 1)))
            self.send(j, "Fin", (r, (int(b),)))

    def on_message(self, src, tag, payload):
        if src == self.node.me:
            return
        if isinstance(payload, tuple) and len(payload) == 2 and isinstance(payload[0], int):
            self._flood(payload[0])
            self._flood(payload[0] + 1)


def spammer(path):
    return lambda node, factory: _Nested(node, path)


class _Nested(Reactor):
    """Places a spammer at an arbitrary depth of the instance tree."""

    def __init__(self, node, path):
        super().__init__(node, ())
        self.spam = Spammer(node, path)

    def start(self):
        self.spam.start()

    def deliver(self, env):
        if env.path == self.spam.path:
            self.spam.on_message(env.src, env.tag, env.payload)


def aba_init(node, path, value, coin="genesis"):
    return init_step(Aba(node, path, value, coin))


def aba_handle(state, src, path, tag, payload):
    return handle_step(state, src, path, tag, payload)
