"""Behaviour programs for corrupted parties.

A behaviour is a reactor installed at a corrupted party in place of the
honest code.  Most wrap the honest reactor and distort what it sends, which
keeps them protocol-agnostic; a few protocol-specific scripts live in the
protocol modules next to the code they attack.
"""

from __future__ import annotations

import random

from .reactor import ALL, Node, Reactor


class Crash(Reactor):
    """Never sends anything."""

    kind = "crash"

    def __init__(self, node, path=()):
        super().__init__(node, path)

    def deliver(self, env):
        pass


class _Wrapped(Reactor):
    """Runs an honest reactor and post-processes its outbox."""

    def __init__(self, node, inner_factory):
        super().__init__(node, ())
        self.inner = inner_factory(node)

    def start(self):
        self.inner.start()
        self._filter()

    def deliver(self, env):
        self.inner.deliver(env)
        self._filter()

    def _filter(self):
        out = self.node.outbox
        if out:
            self.node.outbox = []
            for item in out:
                self.node.outbox.extend(self.rewrite(item))

    def rewrite(self, item):
        return [item]

    def walk(self):
        return self.inner.walk()


class CrashAfter(_Wrapped):
    """Behaves honestly for ``k`` sends, then goes silent."""

    kind = "crash-after"

    def __init__(self, node, inner_factory, k):
        super().__init__(node, inner_factory)
        self.left = k

    def rewrite(self, item):
        if self.left <= 0:
            return []
        self.left -= 1
        return [item]


def mutate_leaf(value, rng):
    """Perturb one leaf of a payload tree, keeping its type where possible."""
    if isinstance(value, tuple) and value:
        i = rng.randrange(len(value))
        return value[:i] + (mutate_leaf(value[i], rng),) + value[i + 1:]
    if isinstance(value, bool):
        return not value
    if isinstance(value, int):
        return value + rng.choice((1, -1, 2)) if value > 1 else value + 1
    if isinstance(value, bytes):
        if not value:
            return b"\x00"
        i = rng.randrange(len(value))
        return value[:i] + bytes([value[i] ^ (1 << rng.randrange(8))]) + value[i + 1:]
    if isinstance(value, str):
        return value + "x"
    return value


class Mutate(_Wrapped):
    """Randomly drops, mutates or duplicates outgoing messages."""

    kind = "mutate"

    def __init__(self, node, inner_factory, p_drop=0.2, p_mutate=0.3, p_dup=0.1):
        super().__init__(node, inner_factory)
        self.rand = node.rng(("mutate",))
        self.p = (p_drop, p_mutate, p_dup)

    def rewrite(self, item):
        dst, path, tag, payload = item
        targets = range(1, self.node.n + 1) if dst == ALL else (dst,)
        out = []
        for j in targets:
            u = self.rand.random()
            if u < self.p[0]:
                continue
            if u < self.p[0] + self.p[1]:
                out.append((j, path, tag, mutate_leaf(payload, self.rand)))
            else:
                out.append((j, path, tag, payload))
                if u < sum(self.p):
                    out.append((j, path, tag, payload))
        return out


class Equivocate(Reactor):
    """Runs two honest copies with different inputs and randomness.

    Copy 0 talks to the low half of the parties, copy 1 to the high half;
    both see every incoming message.
    """

    kind = "equivocate"

    def __init__(self, node, factory, split=None):
        super().__init__(node, ())
        self.split = split if split is not None else node.n // 2
        self.copies = []
        for v in (0, 1):
            sub = Node(node.me, node.n, node.f, node.suite, node.keys,
                       seed=(node.seed, "eq"), variant=v, params=node.params)
            self.copies.append((sub, factory(sub)))

    def _pump(self):
        for v, (sub, _) in enumerate(self.copies):
            out, sub.outbox = sub.outbox, []
            for dst, path, tag, payload in out:
                targets = range(1, self.node.n + 1) if dst == ALL else (dst,)
                for j in targets:
                    if (j <= self.split) == (v == 0):
                        self.node.outbox.append((j, path, tag, payload))

    def start(self):
        for _, r in self.copies:
            r.start()
        self._pump()

    def deliver(self, env):
        for _, r in self.copies:
            r.deliver(env)
        self._pump()

    def walk(self):
        for _, r in self.copies:
            yield from r.walk()


def crash(node, factory):
    return Crash(node)


def crash_after(k):
    return lambda node, factory: CrashAfter(node, factory, k)


def mutate(**kw):
    return lambda node, factory: Mutate(node, factory, **kw)


def equivocate(split=None):
    return lambda node, factory: Equivocate(node, factory, split)


def random_behavior(rng: random.Random):
    """Pick one generic behaviour; used by randomized adversarial suites."""
    kind = rng.randrange(4)
    if kind == 0:
        return crash
    if kind == 1:
        return crash_after(rng.randrange(1, 40))
    if kind == 2:
        return mutate(p_drop=rng.random() * 0.3, p_mutate=rng.random() * 0.5, p_dup=0.1)
    return equivocate()
