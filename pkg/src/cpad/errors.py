"""Exception types shared across the package."""


class CpadError(Exception):
    """Base class for all protocol-level errors."""


class DecodeError(CpadError):
    """A byte string is not a canonical encoding of the expected object."""


class WireError(CpadError):
    """Malformed TLV stream or record of an unexpected type."""


class PolicySyntaxError(CpadError):
    """Policy text does not conform to the grammar.

    `offset` points at the offending byte in the input.
    """

    def __init__(self, message, offset):
        super().__init__(f"{message} (at offset {offset})")
        self.offset = offset


class EmptyPolicyError(CpadError):
    """Policy text contains no formula."""


class NotAuthorized(CpadError):
    """Attribute set does not satisfy the access policy.

    This is the decryption-denied signal: the share-matrix target vector
    is not in the span of the rows selected by the attribute set.
    """


class BadSignature(CpadError):
    """Signature verification failed on a request or response."""


class BadFogSignature(BadSignature):
    """The deletion response signature does not verify under the fog key."""


class UnknownFname(CpadError):
    """No stored record under that file name."""


class NoPendingRequest(CpadError):
    """No deletion state is pending for that file name."""


class PendingRequestExists(CpadError):
    """A deletion request for that file name is already awaiting a response."""


class AuthenticationFailure(CpadError):
    """AEAD tag check failed: wrong key, tampered data, or wrong fname."""


class ScenarioError(CpadError):
    """A simulation script step violated the protocol."""

    def __init__(self, step, message):
        super().__init__(f"step {step}: {message}")
        self.step = step


class StoreLocked(CpadError):
    """Another simulation currently holds the store directory lock."""
