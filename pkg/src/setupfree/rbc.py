"""Bracha reliable broadcast."""

from __future__ import annotations

from .codec import encode
from .errors import Malformed, ParameterError
from .reactor import Reactor, handle_step, init_step


class Rbc(Reactor):
    """One broadcast instance.  ``value`` is given only at the sender.

    Echo carries the value, Ready carries only its hash.  Tallies are keyed
    by the hash; the value itself is kept from the first Send or Echo that
    carried it.
    """

    kind = "rbc"

    def __init__(self, node, path, sender, value=None, on_output=None, check=None):
        super().__init__(node, path, on_output)
        if not 1 <= sender <= node.n:
            raise ParameterError(f"sender {sender} out of range")
        if value is not None and node.me != sender:
            raise ParameterError("only the sender has an input")
        self.sender = sender
        self.value = value
        self.check = check  # optional predicate on broadcast values
        self.started = False
        self.echoed = False
        self.readied = False
        self.values = {}
        self.echo_from = set()
        self.ready_from = set()
        self.echoes = {}
        self.readies = {}

    def start(self):
        self.started = True
        if self.value is not None:
            self.multicast("Send", self.value)

    def provide(self, value):
        """Late input for the sender (e.g. once an upstream value is known)."""
        if self.node.me != self.sender:
            raise ParameterError("only the sender has an input")
        if self.value is None:
            self.value = value
            if self.started:
                self.multicast("Send", value)

    def _digest(self, v):
        return self.node.suite.hash(encode(v))

    def on_message(self, src, tag, payload):
        f = self.node.f
        if tag == "Send":
            if src != self.sender or self.echoed:
                return
            if self.check is not None and not self.check(payload):
                return
            self.echoed = True
            self.values.setdefault(self._digest(payload), payload)
            self.multicast("Echo", payload)
        elif tag == "Echo":
            if src in self.echo_from:
                return
            if self.check is not None and not self.check(payload):
                return
            self.echo_from.add(src)
            h = self._digest(payload)
            self.values.setdefault(h, payload)
            c = self.echoes[h] = self.echoes.get(h, 0) + 1
            if c == 2 * f + 1:
                self._ready(h)
            self._try_deliver(h)
        elif tag == "Ready":
            if not isinstance(payload, bytes) or len(payload) != self.node.suite.lam:
                raise Malformed("Ready digest")
            if src in self.ready_from:
                return
            self.ready_from.add(src)
            c = self.readies[payload] = self.readies.get(payload, 0) + 1
            if c == f + 1:
                self._ready(payload)
            self._try_deliver(payload)

    def _ready(self, h):
        if not self.readied:
            self.readied = True
            self.multicast("Ready", h)

    def _try_deliver(self, h):
        if not self.has_output and self.readies.get(h, 0) >= 2 * self.node.f + 1 and h in self.values:
            self.emit(self.values[h])


def rbc_init(node, path, sender, value=None):
    return init_step(Rbc(node, path, sender, value))


def rbc_handle(state, src, path, tag, payload):
    return handle_step(state, src, path, tag, payload)
