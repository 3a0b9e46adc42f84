"""Exception types raised by the ledger, runtime, resolver and gateway."""

from __future__ import annotations


class ThingChainError(Exception):
    """Base class for all package errors."""


class DecodeError(ThingChainError):
    """Raised when a canonical encoding cannot be parsed."""


class EmptySeed(ThingChainError):
    pass


class AccountCollision(ThingChainError):
    """Two distinct verification keys hashed to the same account id."""


class SubmitError(ThingChainError):
    """A transaction was rejected before execution; the ledger did not grow."""

    code = "SubmitError"

    def __init__(self, detail: str = ""):
        super().__init__(f"{self.code}: {detail}" if detail else self.code)
        self.detail = detail


class BadSignature(SubmitError):
    code = "BadSignature"


class BadNonce(SubmitError):
    code = "BadNonce"


class UnknownSender(SubmitError):
    code = "UnknownSender"


class InsufficientTokens(SubmitError):
    code = "InsufficientTokens"


class BrokenChain(ThingChainError):
    """A chain link, block hash, signature or re-execution check failed."""

    def __init__(self, height: int, detail: str = ""):
        super().__init__(f"broken chain at height {height}: {detail}")
        self.height = height
        self.detail = detail


class UnknownContract(ThingChainError):
    pass


class StaticCallError(ThingChainError):
    """A read-only call attempted a write, an event or a token move."""


# --- resolver ---------------------------------------------------------------


class ResolutionError(ThingChainError):
    pass


class BadName(ResolutionError):
    pass


class NameNotFound(ResolutionError):
    def __init__(self, label: str):
        super().__init__(f"no record for label {label!r}")
        self.label = label


class DanglingDelegation(ResolutionError):
    def __init__(self, label: str, detail: str = ""):
        super().__init__(f"delegation at {label!r} is dangling: {detail}")
        self.label = label


class LoopDetected(ResolutionError):
    pass


class DepthExceeded(ResolutionError):
    pass


# --- gateway ----------------------------------------------------------------


class DuplicateThing(ThingChainError):
    pass


class WireError(ThingChainError):
    """A datagram could not be parsed; carries the reason and any readable id."""

    def __init__(self, reason: str, message_id: int = 0):
        super().__init__(reason)
        self.reason = reason
        self.message_id = message_id


# --- scenario ---------------------------------------------------------------


class ParseError(ThingChainError):
    def __init__(self, line_no: int, detail: str):
        super().__init__(f"line {line_no}: {detail}")
        self.line_no = line_no
        self.detail = detail


class StepFailed(ThingChainError):
    def __init__(self, index: int, reason: str):
        super().__init__(f"step {index}: {reason}")
        self.index = index
        self.reason = reason
