"""Shared exception types."""


class DarkpoolError(Exception):
    """Base class for every error this package raises on purpose."""


# serialization / statements

class DecodeError(DarkpoolError):
    """Byte string is not a canonical encoding of the expected value."""


class MalformedStatement(DarkpoolError):
    """Proof statement is structurally invalid (lengths, emptiness, ...)."""


# comparison protocol

class InvalidOrderSize(DarkpoolError):
    """Order size outside (0, 2^k)."""


class ProtocolOrderViolation(DarkpoolError):
    """Message arrived out of round order or from the wrong role."""


class BadProof(DarkpoolError):
    """An embedded zero-knowledge proof failed verification.

    Carries enough context for a misbehavior report.
    """

    def __init__(self, step: int, index: int | None = None, detail: str = ""):
        self.step = step
        self.index = index
        self.detail = detail
        where = f"step {step}" + (f", index {index}" if index is not None else "")
        super().__init__(f"proof rejected at {where}" + (f": {detail}" if detail else ""))


class SessionExpired(DarkpoolError):
    """No valid peer message within the session timeout."""


# relay

class DuplicateKey(DarkpoolError):
    pass


class BannedKey(DarkpoolError):
    pass


class UnknownUser(DarkpoolError):
    pass


class BadSignature(DarkpoolError):
    pass


class SameAssetPair(DarkpoolError):
    pass


class UnknownSession(DarkpoolError):
    pass


class NotYourSession(DarkpoolError):
    pass


class StaleRound(DarkpoolError):
    pass


class InvalidEvidence(DarkpoolError):
    pass


class BadReveal(DarkpoolError):
    pass


class StalePrice(DarkpoolError):
    pass


class UnknownOrder(DarkpoolError):
    pass


# client

class SizeOutOfRange(DarkpoolError):
    pass


class NotRegistered(DarkpoolError):
    pass


class DecisionExpired(DarkpoolError):
    pass


class ReferenceUnavailable(DarkpoolError):
    pass


class PeerPunished(DarkpoolError):
    """Counterparty misbehaved and was banned by the relay."""
