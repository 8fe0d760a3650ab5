class ParameterError(ValueError):
    """Raised when an operation is called outside its preconditions."""


class Malformed(ValueError):
    """A received payload does not parse; the envelope is ignored."""


class IntegrityError(RuntimeError):
    """A transcript or event log is internally inconsistent."""


class LivenessFailure(RuntimeError):
    """A run hit its step cap before quiescence."""

    def __init__(self, msg, stuck=()):
        super().__init__(msg)
        self.stuck = list(stuck)


class ChannelViolation(RuntimeError):
    """The adversary tried to drop or alter an honest-to-honest envelope."""


# what a handler may raise when fed garbage by a corrupted sender
PARSE_ERRORS = (Malformed, TypeError, ValueError, IndexError, KeyError, AttributeError, ZeroDivisionError)
