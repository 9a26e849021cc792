"""Error taxonomy shared by the engine, the gateway and the CLI.

Every error carries a machine code and an HTTP status (used by the gateway's
error schema) plus a process exit code (used by the CLI): 1 validation,
2 integrity, 3 consensus.
"""

from __future__ import annotations

ACCOUNT_NOT_FOUND_MESSAGE = "Account Not Found !!!"
APPLICATION_REJECTED_MESSAGE = "Application Rejected !!!"


class PlatformError(Exception):
    code = "platform_error"
    http_status = 400
    exit_code = 1
    detail: object = None  # optional structured payload for the API error body


class ValidationError(PlatformError):
    code = "validation_error"
    http_status = 422
    exit_code = 1


class MembershipError(PlatformError):
    code = "membership_error"
    http_status = 422
    exit_code = 1


class AuthorizationError(PlatformError):
    code = "authorization_error"
    http_status = 403
    exit_code = 1


class InvalidCredentials(PlatformError):
    code = "invalid_credentials"
    http_status = 401
    exit_code = 1


class ConflictError(PlatformError):
    code = "conflict"
    http_status = 409
    exit_code = 1


class StateError(PlatformError):
    code = "invalid_state"
    http_status = 409
    exit_code = 1


class NotFoundError(PlatformError):
    code = "not_found"
    http_status = 404
    exit_code = 1


class AccountNotFound(NotFoundError):
    """The Table-1 missing-applicant branch; message is byte-exact."""

    code = "account_not_found"
    http_status = 404

    def __init__(self, message: str = ACCOUNT_NOT_FOUND_MESSAGE) -> None:
        super().__init__(message)


class CertificationRejected(PlatformError):
    """Consensus rejected the signed transaction; message is byte-exact."""

    code = "application_rejected"
    http_status = 502
    exit_code = 3

    def __init__(self, message: str = APPLICATION_REJECTED_MESSAGE) -> None:
        super().__init__(message)


class OwnershipError(PlatformError):
    """A presented token does not belong to the requesting wallet."""

    code = "ownership_error"
    http_status = 403
    exit_code = 1


class EligibilityError(PlatformError):
    """Policy requirements unmet; detail carries the evaluation breakdown."""

    code = "eligibility_error"
    http_status = 422
    exit_code = 1

    def __init__(self, message: str, detail: object = None) -> None:
        super().__init__(message)
        self.detail = detail


class IntegrityError(PlatformError):
    code = "integrity_error"
    http_status = 500
    exit_code = 2


class ConsensusError(PlatformError):
    code = "consensus_error"
    http_status = 422
    exit_code = 3


class CryptoKeyError(PlatformError):
    code = "crypto_key_error"
    http_status = 422
    exit_code = 1


class AeadAuthenticationError(PlatformError):
    """Decryption failed authentication (wrong key or tampered ciphertext)."""

    code = "aead_authentication_failed"
    http_status = 400
    exit_code = 2
