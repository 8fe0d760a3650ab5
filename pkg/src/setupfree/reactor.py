"""Reactor plumbing shared by every protocol.

A reactor is one protocol instance at one party.  It is driven by
``start()`` and ``deliver(env)``; anything it sends is appended to the
party's outbox, and its output is reported once through ``emit``.  A parent
reactor owns its children, routes envelopes to them by instance path and
buffers envelopes for children it has not activated yet.

Instance paths are tuples of ``(kind, index)`` pairs, e.g.
``(("coin", 0), ("sh", 3))`` is the sharing instance of dealer 3 inside
coin 0.
"""

from __future__ import annotations

import hashlib
import random

from .codec import encode
from .errors import PARSE_ERRORS

ALL = 0  # destination meaning "every party, including me"


class Node:
    """Per-party environment handed to every reactor of that party."""

    __slots__ = ("me", "n", "f", "suite", "keys", "outbox", "seed", "variant", "params", "suspects",
                 "rejected", "__weakref__")

    def __init__(self, me, n, f, suite, keys, seed=0, variant=0, params=None):
        self.me = me
        self.n = n
        self.f = f
        self.suite = suite
        self.keys = keys
        self.outbox = []
        self.seed = seed
        self.variant = variant
        self.params = params or {}
        # senders whose garbage is dropped silently; for anyone else a
        # parse error propagates, since it can only be a bug
        self.suspects = frozenset()
        self.rejected = 0

    def rng(self, path) -> random.Random:
        h = hashlib.sha256(encode(("rng", self.seed, self.me, self.variant, path))).digest()
        return random.Random(h)


def instance_bytes(path) -> bytes:
    return encode(path)


class Reactor:
    kind = "reactor"

    def __init__(self, node: Node, path: tuple, on_output=None):
        self.node = node
        self.path = path
        self.on_output = on_output
        self.output = None
        self.has_output = False
        self.children = {}
        self._held = {}
        self._depth = len(path)

    # -- wiring -----------------------------------------------------------
    def start(self):
        pass

    def on_message(self, src, tag, payload):
        pass

    def deliver(self, env):
        path = env.path
        d = self._depth
        if len(path) == d:
            if env.src in self.node.suspects:
                try:
                    self.on_message(env.src, env.tag, env.payload)
                except PARSE_ERRORS:
                    self.node.rejected += 1
            else:
                self.on_message(env.src, env.tag, env.payload)
            return
        key = path[d]
        child = self.children.get(key)
        if child is None:
            self._held.setdefault(key, []).append(env)
        else:
            child.deliver(env)

    def spawn(self, key, child):
        self.children[key] = child
        child.start()
        for env in self._held.pop(key, ()):
            child.deliver(env)
        return child

    def child_path(self, kind, index=0):
        return self.path + ((kind, index),)

    # -- effects ----------------------------------------------------------
    def send(self, dst, tag, payload):
        self.node.outbox.append((dst, self.path, tag, payload))

    def multicast(self, tag, payload):
        self.node.outbox.append((ALL, self.path, tag, payload))

    def emit(self, value):
        if self.has_output:
            return
        self.output = value
        self.has_output = True
        if self.on_output is not None:
            self.on_output(value)

    # -- introspection ----------------------------------------------------
    @property
    def instance(self) -> bytes:
        return instance_bytes(self.path)

    def walk(self):
        yield self
        for c in self.children.values():
            yield from c.walk()


class _Env:
    __slots__ = ("src", "dst", "path", "tag", "payload")

    def __init__(self, src, dst, path, tag, payload):
        self.src, self.dst, self.path, self.tag, self.payload = src, dst, path, tag, payload


def expand(node: Node, out):
    """Resolve ALL destinations to concrete recipients."""
    res = []
    for dst, path, tag, payload in out:
        if dst == ALL:
            res.extend((j, path, tag, payload) for j in range(1, node.n + 1))
        else:
            res.append((dst, path, tag, payload))
    return res


def init_step(reactor: Reactor):
    """Start a reactor in isolation; returns ``(reactor, outgoing)``."""
    node = reactor.node
    mark = len(node.outbox)
    reactor.start()
    out = expand(node, node.outbox[mark:])
    del node.outbox[mark:]
    return reactor, out


def handle_step(reactor: Reactor, src, path, tag, payload):
    """Feed one envelope; returns ``(reactor, outgoing, output-or-None)``."""
    node = reactor.node
    mark = len(node.outbox)
    had = reactor.has_output
    reactor.deliver(_Env(src, node.me, path, tag, payload))
    out = expand(node, node.outbox[mark:])
    del node.outbox[mark:]
    return reactor, out, (reactor.output if reactor.has_output and not had else None)
