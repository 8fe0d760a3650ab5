"""Deterministic asynchronous network simulator.

One run is a single-threaded loop over a logical event counter.  Every
event delivers one pending envelope chosen by the scheduler; the receiving
reactor may send more envelopes.  Honest-to-honest envelopes are never
dropped or altered; the scheduler only picks an order, subject to a fairness
cap on how long any envelope can be overtaken.
"""

from __future__ import annotations

import heapq
import io
import json
import random
import struct
from collections import deque
from dataclasses import dataclass, field

from .codec import DecodeError, encode
from .crypto_core import KeyRing, get_suite
from .errors import PARSE_ERRORS, ChannelViolation, IntegrityError, LivenessFailure, ParameterError
from .reactor import ALL, Node

FAIRNESS_CAP = 10_000
STEP_CAP = 10_000_000
HEADER_BYTES = 5  # from, to (2 bytes each) and a one-byte tag code; the path is added per envelope



class Envelope:
    __slots__ = ("src", "dst", "path", "tag", "payload", "seq", "cause", "sent_at",
                 "delivered_at", "born", "done", "hh", "size", "data")

    def __init__(self, src, dst, path, tag, payload, seq, cause, sent_at):
        self.src = src
        self.dst = dst
        self.path = path
        self.tag = tag
        self.payload = payload
        self.seq = seq
        self.cause = cause
        self.sent_at = sent_at
        self.delivered_at = -1
        self.born = 0
        self.done = False
        self.hh = False
        self.size = 0
        self.data = None

    def view(self):
        """What the adversary may observe: no payload, only its length."""
        return (self.src, self.dst, self.tag, self.path, self.size)

    def __repr__(self):
        return f"Envelope(#{self.seq} {self.src}->{self.dst} {self.tag} {self.path})"


# ---------------------------------------------------------------- schedulers


class Scheduler:
    """Base scheduler: subclasses pick among pending envelopes."""

    name = "base"

    def __init__(self, cap: int = FAIRNESS_CAP):
        self.cap = cap
        self.delivered = 0
        self._age = deque()
        self._n = 0
        self.log = []

    def __len__(self):
        return self._n

    def push(self, env):
        env.born = self.delivered
        self._age.append(env)
        self._n += 1
        self._add(env)

    def pop(self):
        age = self._age
        while age and age[0].done:
            age.popleft()
        if age and self.delivered - age[0].born > self.cap:
            env = age.popleft()
        else:
            env = self._choose()
        env.done = True
        self._n -= 1
        self.delivered += 1
        self.log.append(env.seq)
        return env

    def _add(self, env):
        raise NotImplementedError

    def _choose(self):
        raise NotImplementedError


class Fifo(Scheduler):
    name = "fifo"

    def __init__(self, cap=FAIRNESS_CAP):
        super().__init__(cap)
        self._q = deque()

    def _add(self, env):
        self._q.append(env)

    def _choose(self):
        q = self._q
        while True:
            env = q.popleft()
            if not env.done:
                return env


class RandomOrder(Scheduler):
    name = "random"

    def __init__(self, seed=0, cap=FAIRNESS_CAP):
        super().__init__(cap)
        self.rng = random.Random(seed)
        self._pool = []

    def _add(self, env):
        self._pool.append(env)

    def _choose(self):
        pool = self._pool
        rand = self.rng.random
        while True:
            i = int(rand() * len(pool))
            env = pool[i]
            pool[i] = pool[-1]
            pool.pop()
            if not env.done:
                return env


class DelayTargets(RandomOrder):
    """Random order, except that envelopes matching ``match`` go last."""

    name = "delay"

    def __init__(self, match, seed=0, cap=FAIRNESS_CAP):
        super().__init__(seed, cap)
        self.match = match
        self._late = []

    def _add(self, env):
        (self._late if self.match(env) else self._pool).append(env)

    def _choose(self):
        while self._pool:
            env = super()._choose()
            if not env.done:
                return env
        pool, self._pool = self._pool, self._late
        try:
            return super()._choose()
        finally:
            self._late, self._pool = self._pool, pool


class Scripted(Scheduler):
    """``choose(views) -> index`` decides every delivery from payload-free views."""

    name = "scripted"

    def __init__(self, choose, cap=FAIRNESS_CAP):
        super().__init__(cap)
        self.choose = choose
        self._pending = []

    def _add(self, env):
        self._pending.append(env)

    def _choose(self):
        live = [e for e in self._pending if not e.done]
        self._pending = live
        k = self.choose([e.view() for e in live])
        if not isinstance(k, int) or not 0 <= k < len(live):
            raise ParameterError(f"scripted scheduler returned bad index {k!r}")
        return live.pop(k)


def in_instance(kind, index):
    """Match envelopes whose path runs through the ``(kind, index)`` instance."""
    comp = (kind, index)
    return lambda env: comp in env.path


def from_parties(parties):
    parties = frozenset(parties)
    return lambda env: env.src in parties


def make_scheduler(spec: str, seed=0, cap=FAIRNESS_CAP) -> Scheduler:
    """Parse ``fifo``, ``random``, ``delay:sh:2`` (instance) or ``delay-from:2,3``."""
    kind, _, arg = spec.partition(":")
    if kind == "fifo":
        return Fifo(cap)
    if kind in ("random", "seeded-random"):
        return RandomOrder(seed, cap)
    if kind == "delay":
        inst, _, idx = arg.partition(":")
        if not inst or not idx.isdigit():
            raise ParameterError(f"bad scheduler spec {spec!r}")
        return DelayTargets(in_instance(inst, int(idx)), seed, cap)
    if kind == "delay-from":
        try:
            parties = [int(x) for x in arg.split(",") if x]
        except ValueError:
            raise ParameterError(f"bad scheduler spec {spec!r}") from None
        return DelayTargets(from_parties(parties), seed, cap)
    raise ParameterError(f"unknown scheduler {spec!r}")


# ---------------------------------------------------------------- adversary


@dataclass
class Adversary:
    """Static corruption: the set is fixed before the run starts."""

    corrupt: frozenset = frozenset()
    behaviors: dict = field(default_factory=dict)  # party -> callable(node, factory) -> reactor
    key_seed: object = None  # corrupt parties' key material comes from here

    def __post_init__(self):
        self.corrupt = frozenset(self.corrupt)

    def build(self, party, node, factory):
        make = self.behaviors.get(party)
        if make is None:
            from .byzantine import Crash

            return Crash(node)
        return make(node, factory)


# ---------------------------------------------------------------- metrics


@dataclass
class RunMetrics:
    messages: int = 0
    bits: int = 0
    rounds: int = 0
    per_instance: dict = field(default_factory=dict)  # path -> [messages, bits]
    rejected: int = 0

    def record(self):
        return {"messages": self.messages, "bits": self.bits, "rounds": self.rounds}

    def by_kind(self):
        """Aggregate the per-instance counters by the innermost instance kind."""
        out = {}
        for path, (m, b) in self.per_instance.items():
            k = path[-1][0] if path else ""
            acc = out.setdefault(k, [0, 0])
            acc[0] += m
            acc[1] += b
        return out


@dataclass
class RunResult:
    n: int
    f: int
    corrupt: frozenset
    outputs: dict
    metrics: RunMetrics
    envelopes: list  # delivered envelopes, in delivery order
    roots: dict
    transcript: "Transcript | None" = None
    steps: int = 0

    @property
    def honest(self):
        return [i for i in range(1, self.n + 1) if i not in self.corrupt]

    def honest_outputs(self):
        return {i: self.outputs[i] for i in self.honest if i in self.outputs}

    def rounds(self, prefix=None):
        return running_time(self.envelopes, prefix)


class Simulation:
    def __init__(self, n, f, factory, scheduler=None, adversary=None, seed=0, suite=None,
                 keys=None, step_cap=STEP_CAP, record=False, probe=None, params=None, config=None):
        if f < 0 or n < 3 * f + 1:
            raise ParameterError(f"need n >= 3f+1 (n={n}, f={f})")
        self.n, self.f = n, f
        self.adversary = adversary or Adversary()
        if len(self.adversary.corrupt) > f:
            raise ParameterError("more corruptions than f")
        self.corrupt = self.adversary.corrupt
        self.scheduler = scheduler if scheduler is not None else RandomOrder(seed)
        self.suite = suite or get_suite("mock")
        self.keys = keys or KeyRing.generate(n, self.suite, seed=seed, corrupt=self.corrupt,
                                             adversary_seed=self.adversary.key_seed)
        self.step_cap = step_cap
        self.record = record
        self.probe = probe
        self.config = config
        self.metrics = RunMetrics()
        self.delivered = []
        self.seq = 0
        self.step = 0
        self._path_len = {}
        self.nodes = {}
        self.roots = {}
        for i in range(1, n + 1):
            node = Node(i, n, f, self.suite, self.keys, seed=seed, params=params)
            node.suspects = self.corrupt
            self.nodes[i] = node
            if i in self.corrupt:
                self.roots[i] = self.adversary.build(i, node, factory)
            else:
                self.roots[i] = factory(node)

    # -- adversary channel API -------------------------------------------
    def drop(self, env):
        if env.hh:
            raise ChannelViolation("honest-to-honest envelopes cannot be dropped")
        env.done = True

    def tamper(self, env, payload):
        if env.hh:
            raise ChannelViolation("honest-to-honest envelopes cannot be modified")
        env.payload = payload

    # -- loop ---------------------------------------------------------------
    def _flush(self, i, cause, at):
        node = self.nodes[i]
        out = node.outbox
        if not out:
            return
        node.outbox = []
        honest = i not in self.corrupt
        corrupt = self.corrupt
        m = self.metrics
        per = m.per_instance
        push = self.scheduler.push
        n = self.n
        for dst, path, tag, payload in out:
            targets = range(1, n + 1) if dst == ALL else (dst,)
            data = None
            size = 0
            if honest or self.record:
                data = encode(payload)
                plen = self._path_len.get(path)
                if plen is None:
                    plen = self._path_len[path] = len(encode(path))
                size = HEADER_BYTES + plen + len(data)
            for j in targets:
                if not 1 <= j <= n:
                    continue
                env = Envelope(i, j, path, tag, payload, self.seq, cause, at)
                self.seq += 1
                env.size = size
                env.data = data
                env.hh = honest and j not in corrupt
                if honest:
                    m.messages += 1
                    m.bits += 8 * size
                    c = per.get(path)
                    if c is None:
                        per[path] = [1, 8 * size]
                    else:
                        c[0] += 1
                        c[1] += 8 * size
                push(env)

    def run(self) -> RunResult:
        for i in range(1, self.n + 1):
            self.roots[i].start()
            self._flush(i, -1, -1)
        sched = self.scheduler
        corrupt = self.corrupt
        roots = self.roots
        delivered = self.delivered
        probe = self.probe
        while len(sched):
            if self.step >= self.step_cap:
                raise LivenessFailure(f"step cap {self.step_cap} exceeded", self.stuck())
            env = sched.pop()
            env.delivered_at = self.step
            delivered.append(env)
            dst = env.dst
            if env.src in corrupt or dst in corrupt:
                try:
                    roots[dst].deliver(env)
                except PARSE_ERRORS:
                    pass
            else:
                roots[dst].deliver(env)
            self._flush(dst, env.seq, self.step)
            if probe is not None:
                probe(self, env)
            self.step += 1
        self.metrics.rounds = running_time(delivered)
        self.metrics.rejected = sum(node.rejected for node in self.nodes.values())
        outputs = {i: r.output for i, r in roots.items() if r.has_output}
        res = RunResult(self.n, self.f, corrupt, outputs, self.metrics, delivered, roots, steps=self.step)
        if self.record:
            res.transcript = Transcript(self.config or {}, [_record_of(e) for e in delivered])
        return res

    def stuck(self):
        out = []
        for i, root in self.roots.items():
            if i in self.corrupt:
                continue
            for r in root.walk():
                if not r.has_output:
                    out.append((i, r.path))
        return out


def run(n, f, factory, scheduler=None, adversary=None, seed=0, **kw) -> RunResult:
    return Simulation(n, f, factory, scheduler, adversary, seed, **kw).run()


# ---------------------------------------------------------------- rounds


def assign_rounds(envelopes, prefix=None):
    """Label every honest-to-honest envelope with a virtual round.

    Event k (the k-th delivery) gets the latest time T_k consistent with
    every honest-to-honest envelope taking at most one time unit: T_k is the
    minimum over envelopes in flight at k of (send time + 1), where the send
    time of an envelope is the time of the event that produced it (0 for
    envelopes sent at activation).  An envelope's round is the time of its
    delivery; so a message of round r is always sent at time >= r - 1 and
    every round-(r-1) message is delivered before any round-(r+1) message is
    sent.  ``prefix`` restricts the accounting to one instance subtree;
    envelopes produced by events outside the subtree then count as sent at
    the current time.

    Returns ``{seq: round}``.
    """
    evs = sorted(envelopes, key=lambda e: e.delivered_at)
    k = len(prefix) if prefix else 0
    heap = []
    labels = {}
    times = {}  # event index -> T
    T = 0
    pending = {}
    sent = sorted((e for e in evs if _counted(e, prefix, k)), key=lambda e: e.sent_at)
    si = 0
    for e in evs:
        at = e.delivered_at
        if e.sent_at >= at or e.delivered_at < 0:
            raise IntegrityError(f"envelope {e.seq} delivered at {at} but sent at {e.sent_at}")
        # register envelopes sent strictly before this event
        while si < len(sent) and sent[si].sent_at < at:
            s = sent[si]
            si += 1
            base = 0 if s.sent_at < 0 else times.get(s.sent_at, T)
            heapq.heappush(heap, (base + 1, s.seq))
            pending[s.seq] = True
        while heap and not pending.get(heap[0][1], False):
            heapq.heappop(heap)
        if heap:
            T = max(T, heap[0][0])
        times[at] = T
        if e.seq in pending:
            pending[e.seq] = False
            labels[e.seq] = T
    return labels


def _counted(e, prefix, k):
    return e.hh and (not prefix or e.path[:k] == prefix)


def running_time(envelopes, prefix=None) -> int:
    labels = assign_rounds(envelopes, prefix)
    return max(labels.values(), default=0)


# ---------------------------------------------------------------- transcripts

MAGIC = b"SFTR\x01"
_REC = struct.Struct(">IHHiiI")  # seq, src, dst, cause, sent_at, delivered_at


def _record_of(e):
    return (e.seq, e.src, e.dst, e.cause, e.sent_at, e.delivered_at, e.path, e.tag, e.data or b"")


@dataclass
class Transcript:
    config: dict
    records: list  # (seq, src, dst, cause, sent_at, delivered_at, path, tag, data)

    def to_bytes(self) -> bytes:
        out = io.BytesIO()
        head = json.dumps(self.config, sort_keys=True).encode()
        out.write(MAGIC + struct.pack(">I", len(head)) + head)
        for seq, src, dst, cause, sent_at, dl, path, tag, data in self.records:
            p = encode(path)
            t = tag.encode()
            body = (_REC.pack(seq, src, dst, cause, sent_at, dl) + struct.pack(">H", len(p)) + p
                    + struct.pack(">B", len(t)) + t + data)
            out.write(struct.pack(">I", len(body)) + body)
        return out.getvalue()

    @classmethod
    def from_bytes(cls, buf: bytes) -> "Transcript":
        from .codec import decode

        if not buf.startswith(MAGIC):
            raise IntegrityError("bad transcript magic at offset 0")
        off = len(MAGIC)
        if off + 4 > len(buf):
            raise IntegrityError(f"truncated header at offset {off}")
        (hl,) = struct.unpack_from(">I", buf, off)
        off += 4
        try:
            config = json.loads(buf[off: off + hl])
        except ValueError:
            raise IntegrityError(f"bad header at offset {off}") from None
        off += hl
        recs = []
        while off < len(buf):
            start = off
            if off + 4 > len(buf):
                raise IntegrityError(f"truncated record length at offset {start}")
            (bl,) = struct.unpack_from(">I", buf, off)
            off += 4
            end = off + bl
            if end > len(buf) or bl < _REC.size + 3:
                raise IntegrityError(f"record overruns buffer at offset {start}")
            seq, src, dst, cause, sent_at, dl = _REC.unpack_from(buf, off)
            o = off + _REC.size
            (pl,) = struct.unpack_from(">H", buf, o)
            o += 2
            if o + pl + 1 > end:
                raise IntegrityError(f"bad path length at offset {start}")
            try:
                path = decode(buf[o: o + pl])
            except DecodeError:
                raise IntegrityError(f"bad path encoding at offset {start}") from None
            o += pl
            tl = buf[o]
            o += 1
            if o + tl > end:
                raise IntegrityError(f"bad tag length at offset {start}")
            tag = buf[o: o + tl].decode(errors="replace")
            o += tl
            recs.append((seq, src, dst, cause, sent_at, dl, _tuplify(path), tag, bytes(buf[o:end])))
            off = end
        return cls(config, recs)

    def render(self) -> str:
        lines = [f"# config {json.dumps(self.config, sort_keys=True)}"]
        for seq, src, dst, cause, sent_at, dl, path, tag, data in self.records:
            p = "/".join(f"{k}{i}" for k, i in path)
            lines.append(f"{dl:6d} #{seq} {src}->{dst} {p} {tag} cause={cause} len={len(data)} {data.hex()}")
        return "\n".join(lines) + "\n"


def _tuplify(x):
    if isinstance(x, tuple):
        return tuple(_tuplify(y) for y in x)
    return x


def diff_transcripts(expected: Transcript, actual: Transcript, limit: int = 20) -> list:
    """Field-level differences between two transcripts (empty if identical)."""
    out = []
    names = ("seq", "src", "dst", "cause", "sent_at", "delivered_at", "path", "tag", "payload")
    if expected.config != actual.config:
        out.append({"record": None, "field": "config"})
    for k, (a, b) in enumerate(zip(expected.records, actual.records)):
        if a != b:
            for name, x, y in zip(names, a, b):
                if x != y:
                    out.append({"record": k, "field": name,
                                "expected": x.hex() if isinstance(x, bytes) else repr(x),
                                "actual": y.hex() if isinstance(y, bytes) else repr(y)})
                    break
            if len(out) >= limit:
                return out
    if len(expected.records) != len(actual.records):
        out.append({"record": min(len(expected.records), len(actual.records)), "field": "length",
                    "expected": len(expected.records), "actual": len(actual.records)})
    return out
