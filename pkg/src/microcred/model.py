"""Domain records shared across the platform: courses, transactions, tokens.

Each record has a canonical byte form (the signing/hashing contract from
docs/protocol.md) and a JSON form (hex digests, normalized decimal credits,
RFC 3339 timestamps) used by the chain export, the store index and the API.
"""

from __future__ import annotations

from dataclasses import dataclass
from datetime import date, datetime
from decimal import Decimal, InvalidOperation
from typing import Any, Dict, Optional, Tuple

from . import crypto, wire
from .crypto import DigitalSignature, DualSignature, EncryptedBlob, KeyPair
from .errors import ValidationError
from .util import format_ts, parse_ts

STANDALONE = "standalone"
STACKED = "stacked"


def _parse_credits(value: Any) -> Decimal:
    try:
        credits = Decimal(str(value))
    except InvalidOperation:
        raise ValidationError(f"credits is not a decimal: {value!r}") from None
    if credits < 0:
        raise ValidationError("credits must be non-negative")
    return credits


def credits_str(credits: Decimal) -> str:
    """Normalized decimal string, the canonical credits text."""
    text = format(credits.normalize(), "f")
    return text


@dataclass(frozen=True)
class CourseMetadata:
    course_id: str
    title: str
    provider: str
    credits: Decimal
    completion_date: date
    stack_id: Optional[str] = None  # None = standalone micro-credential

    def __post_init__(self) -> None:
        if self.credits < 0:
            raise ValidationError("credits must be non-negative")
        if self.stack_id is not None and not self.stack_id:
            raise ValidationError("stacked credential needs a non-empty stack id")

    @property
    def track(self) -> str:
        if self.stack_id is None:
            return STANDALONE
        return f"{STACKED}:{self.stack_id}"

    def canonical_bytes(self) -> bytes:
        return wire.encode_fields(
            wire.encode_str(self.course_id),
            wire.encode_str(self.title),
            wire.encode_str(self.provider),
            wire.encode_str(credits_str(self.credits)),
            wire.encode_str(self.completion_date.isoformat()),
            wire.encode_str(self.track),
        )

    def to_json(self) -> Dict[str, Any]:
        track: Dict[str, Any] = {"kind": STANDALONE}
        if self.stack_id is not None:
            track = {"kind": STACKED, "stack_id": self.stack_id}
        return {
            "course_id": self.course_id,
            "title": self.title,
            "provider": self.provider,
            "credits": credits_str(self.credits),
            "completion_date": self.completion_date.isoformat(),
            "track": track,
        }

    @classmethod
    def from_json(cls, data: Dict[str, Any]) -> "CourseMetadata":
        track = data.get("track") or {"kind": STANDALONE}
        stack_id = None
        if track.get("kind") == STACKED:
            stack_id = track.get("stack_id")
            if not stack_id:
                raise ValidationError("stacked track needs stack_id")
        elif track.get("kind") != STANDALONE:
            raise ValidationError(f"unknown track kind: {track.get('kind')!r}")
        return cls(
            course_id=data["course_id"],
            title=data["title"],
            provider=data["provider"],
            credits=_parse_credits(data["credits"]),
            completion_date=date.fromisoformat(data["completion_date"]),
            stack_id=stack_id,
        )


@dataclass(frozen=True)
class CertificationTransaction:
    applicant_id: str
    issuer_id: str
    metadata: CourseMetadata
    document_hashes: Tuple[bytes, ...]
    created_at: datetime

    def canonical_bytes(self) -> bytes:
        return wire.encode_fields(
            wire.encode_str(self.applicant_id),
            wire.encode_str(self.issuer_id),
            self.metadata.canonical_bytes(),
            wire.encode_list(self.document_hashes),
            wire.encode_str(format_ts(self.created_at)),
        )


def _signature_bytes(sig: DigitalSignature) -> bytes:
    return wire.encode_fields(wire.encode_str(sig.signer_id), sig.signature)


@dataclass(frozen=True)
class SignedCertificationTransaction:
    tx: CertificationTransaction
    signatures: DualSignature
    tx_hash: bytes

    @classmethod
    def create(
        cls,
        tx: CertificationTransaction,
        issuer_key: KeyPair,
        applicant_key: KeyPair,
    ) -> "SignedCertificationTransaction":
        tx_bytes = tx.canonical_bytes()
        signatures = crypto.dual_sign(
            tx_bytes, issuer_key, applicant_key, tx.issuer_id, tx.applicant_id
        )
        return cls(tx=tx, signatures=signatures, tx_hash=crypto.hash_content(tx_bytes))

    def verify(self, issuer_public_key: bytes, applicant_public_key: bytes) -> bool:
        tx_bytes = self.tx.canonical_bytes()
        if crypto.hash_content(tx_bytes) != self.tx_hash:
            return False
        return crypto.verify_dual(
            tx_bytes, self.signatures, issuer_public_key, applicant_public_key
        )

    def to_bytes(self) -> bytes:
        return wire.encode_fields(
            self.tx.canonical_bytes(),
            _signature_bytes(self.signatures.issuer_sig),
            _signature_bytes(self.signatures.applicant_sig),
            self.tx_hash,
        )

    @classmethod
    def from_bytes(cls, data: bytes) -> "SignedCertificationTransaction":
        cur = wire.Cursor(data)
        tx_bytes = cur.field()
        tx = _tx_from_canonical(tx_bytes)
        issuer_sig = _signature_from_field(cur)
        applicant_sig = _signature_from_field(cur)
        tx_hash = cur.field()
        cur.expect_done()
        return cls(
            tx=tx,
            signatures=DualSignature(issuer_sig=issuer_sig, applicant_sig=applicant_sig),
            tx_hash=tx_hash,
        )


def _signature_from_field(cur: wire.Cursor) -> DigitalSignature:
    inner = wire.Cursor(cur.field())
    signer_id = inner.text()
    signature = inner.field()
    inner.expect_done()
    return DigitalSignature(signer_id=signer_id, signature=signature)


def _metadata_from_canonical(data: bytes) -> CourseMetadata:
    cur = wire.Cursor(data)
    course_id = cur.text()
    title = cur.text()
    provider = cur.text()
    credits = _parse_credits(cur.text())
    completion = date.fromisoformat(cur.text())
    track = cur.text()
    cur.expect_done()
    stack_id = None
    if track.startswith(f"{STACKED}:"):
        stack_id = track.split(":", 1)[1]
    elif track != STANDALONE:
        raise ValidationError(f"unknown track encoding: {track!r}")
    return CourseMetadata(
        course_id=course_id,
        title=title,
        provider=provider,
        credits=credits,
        completion_date=completion,
        stack_id=stack_id,
    )


def _tx_from_canonical(data: bytes) -> CertificationTransaction:
    cur = wire.Cursor(data)
    applicant_id = cur.text()
    issuer_id = cur.text()
    metadata = _metadata_from_canonical(cur.field())
    document_hashes = tuple(cur.list())
    created_at = parse_ts(cur.text())
    cur.expect_done()
    return CertificationTransaction(
        applicant_id=applicant_id,
        issuer_id=issuer_id,
        metadata=metadata,
        document_hashes=document_hashes,
        created_at=created_at,
    )


@dataclass(frozen=True)
class CredentialToken:
    token_id: bytes  # = tx_hash of the certification
    metadata: CourseMetadata
    anchor_hash: bytes  # hash of the off-chain certification block
    issued_at: datetime

    def canonical_bytes(self) -> bytes:
        return wire.encode_fields(
            self.token_id,
            self.metadata.canonical_bytes(),
            self.anchor_hash,
            wire.encode_str(format_ts(self.issued_at)),
        )

    def to_json(self) -> Dict[str, Any]:
        return {
            "token_id": self.token_id.hex(),
            "metadata": self.metadata.to_json(),
            "anchor_hash": self.anchor_hash.hex(),
            "issued_at": format_ts(self.issued_at),
        }

    @classmethod
    def from_json(cls, data: Dict[str, Any]) -> "CredentialToken":
        return cls(
            token_id=bytes.fromhex(data["token_id"]),
            metadata=CourseMetadata.from_json(data["metadata"]),
            anchor_hash=bytes.fromhex(data["anchor_hash"]),
            issued_at=parse_ts(data["issued_at"]),
        )


@dataclass(frozen=True)
class FansWallet:
    """Learner token wallet; tokens appear in chain commit order."""

    owner: str
    tokens: Tuple[CredentialToken, ...]

    def to_json(self) -> Dict[str, Any]:
        return {"owner": self.owner, "tokens": [t.to_json() for t in self.tokens]}


@dataclass(frozen=True)
class CertificationBlock:
    """Off-chain certification record, stored content-addressed.

    valid_cert is the AEAD-encrypted tx_hash, decryptable only with the
    applicant's derived key; signed_tx makes third-party signature checks
    possible without that key.
    """

    applicant_id: str
    issuer_id: str
    valid_cert: EncryptedBlob
    signed_tx: SignedCertificationTransaction

    def to_bytes(self) -> bytes:
        return wire.encode_fields(
            wire.encode_str(self.applicant_id),
            wire.encode_str(self.issuer_id),
            self.valid_cert.to_bytes(),
            self.signed_tx.to_bytes(),
        )

    @classmethod
    def from_bytes(cls, data: bytes) -> "CertificationBlock":
        cur = wire.Cursor(data)
        applicant_id = cur.text()
        issuer_id = cur.text()
        valid_cert = EncryptedBlob.from_bytes(cur.field())
        signed_tx = SignedCertificationTransaction.from_bytes(cur.field())
        cur.expect_done()
        return cls(
            applicant_id=applicant_id,
            issuer_id=issuer_id,
            valid_cert=valid_cert,
            signed_tx=signed_tx,
        )


@dataclass(frozen=True)
class ExemptionGrant:
    student_id: str
    course_id: str
    policy_id: str
    request_id: str
    granted_by: str
    granted_at: datetime

    def canonical_bytes(self) -> bytes:
        return wire.encode_fields(
            wire.encode_str(self.student_id),
            wire.encode_str(self.course_id),
            wire.encode_str(self.policy_id),
            wire.encode_str(self.request_id),
            wire.encode_str(self.granted_by),
            wire.encode_str(format_ts(self.granted_at)),
        )

    def to_json(self) -> Dict[str, Any]:
        return {
            "student_id": self.student_id,
            "course_id": self.course_id,
            "policy_id": self.policy_id,
            "request_id": self.request_id,
            "granted_by": self.granted_by,
            "granted_at": format_ts(self.granted_at),
        }

    @classmethod
    def from_json(cls, data: Dict[str, Any]) -> "ExemptionGrant":
        return cls(
            student_id=data["student_id"],
            course_id=data["course_id"],
            policy_id=data["policy_id"],
            request_id=data["request_id"],
            granted_by=data["granted_by"],
            granted_at=parse_ts(data["granted_at"]),
        )
