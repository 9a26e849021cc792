"""Crypto primitives: keypairs, content hashing, (dual) signatures, AEAD.

Signatures are Ed25519 (deterministic, 32-byte public keys, 64-byte
signatures), content hashing is SHA-256, and symmetric encryption is
ChaCha20-Poly1305 with a fresh 12-byte nonce per blob. Everything here is
pure or locally scoped and safe for concurrent callers.
"""

from __future__ import annotations

import hashlib
import os
import warnings
from dataclasses import dataclass
from typing import Optional

from cryptography.exceptions import InvalidSignature, InvalidTag
from cryptography.hazmat.primitives import serialization
from cryptography.hazmat.primitives.asymmetric.ed25519 import (
    Ed25519PrivateKey,
    Ed25519PublicKey,
)
from cryptography.hazmat.primitives.ciphers.aead import ChaCha20Poly1305

from .errors import AeadAuthenticationError, CryptoKeyError, ValidationError
from . import wire

HASH_LEN = 32
PUBLIC_KEY_LEN = 32
SIGNATURE_LEN = 64
NONCE_LEN = 12
SYMMETRIC_KEY_LEN = 32

ZERO_HASH = b"\x00" * HASH_LEN

CERT_KEY_CONTEXT = b"cert-key"
DOC_KEY_CONTEXT = b"doc-key"


@dataclass(frozen=True)
class KeyPair:
    """Ed25519 keypair; private_key is the 32-byte seed."""

    public_key: bytes
    private_key: bytes

    def __post_init__(self) -> None:
        if len(self.public_key) != PUBLIC_KEY_LEN:
            raise CryptoKeyError("public key must be 32 bytes")


@dataclass(frozen=True)
class DigitalSignature:
    signer_id: str
    signature: bytes

    def __post_init__(self) -> None:
        if len(self.signature) != SIGNATURE_LEN:
            raise CryptoKeyError("signature must be 64 bytes")


@dataclass(frozen=True)
class DualSignature:
    """Issuer + applicant signatures over the same canonical message bytes."""

    issuer_sig: DigitalSignature
    applicant_sig: DigitalSignature


@dataclass(frozen=True)
class EncryptedBlob:
    nonce: bytes
    ciphertext: bytes  # ciphertext with the 16-byte tag appended
    key_owner: str

    def to_bytes(self) -> bytes:
        return wire.encode_fields(
            self.nonce, self.ciphertext, wire.encode_str(self.key_owner)
        )

    @classmethod
    def from_bytes(cls, data: bytes) -> "EncryptedBlob":
        cur = wire.Cursor(data)
        nonce = cur.field()
        ciphertext = cur.field()
        key_owner = cur.text()
        cur.expect_done()
        return cls(nonce=nonce, ciphertext=ciphertext, key_owner=key_owner)


def generate_keypair(seed: bytes | None = None) -> KeyPair:
    """Create an Ed25519 keypair; identical seeds yield identical pairs."""
    if seed is None:
        seed = os.urandom(32)
    if len(seed) != 32:
        raise CryptoKeyError("seed must be exactly 32 bytes")
    private = Ed25519PrivateKey.from_private_bytes(seed)
    public = private.public_key().public_bytes(
        encoding=serialization.Encoding.Raw,
        format=serialization.PublicFormat.Raw,
    )
    return KeyPair(public_key=public, private_key=seed)


def derive_seed(*parts: bytes) -> bytes:
    """Deterministic 32-byte seed from labeled parts (scenario keygen)."""
    return hashlib.sha256(b"\x00".join(parts)).digest()


def hash_content(content: bytes) -> bytes:
    """SHA-256 digest of content."""
    return hashlib.sha256(content).digest()


def sign(message: bytes, key: KeyPair, signer_id: str) -> DigitalSignature:
    try:
        private = Ed25519PrivateKey.from_private_bytes(key.private_key)
    except Exception as exc:
        raise CryptoKeyError(f"malformed private key: {exc}") from exc
    return DigitalSignature(signer_id=signer_id, signature=private.sign(message))


def verify(message: bytes, signature: bytes, public_key: bytes) -> bool:
    if len(public_key) != PUBLIC_KEY_LEN or len(signature) != SIGNATURE_LEN:
        return False
    try:
        Ed25519PublicKey.from_public_bytes(public_key).verify(signature, message)
        return True
    except InvalidSignature:
        return False
    except Exception:
        return False


def dual_sign(
    transaction_bytes: bytes,
    issuer_key: KeyPair,
    applicant_key: KeyPair,
    issuer_id: str,
    applicant_id: str,
) -> DualSignature:
    """Sign the same canonical transaction bytes as issuer and applicant."""
    if issuer_key.public_key == applicant_key.public_key:
        warnings.warn(
            "issuer and applicant keys are identical (self-issuance)",
            stacklevel=2,
        )
    return DualSignature(
        issuer_sig=sign(transaction_bytes, issuer_key, issuer_id),
        applicant_sig=sign(transaction_bytes, applicant_key, applicant_id),
    )


def verify_dual(
    transaction_bytes: bytes,
    dual: DualSignature,
    issuer_public_key: bytes,
    applicant_public_key: bytes,
) -> bool:
    """Conjunction of the two component verifications."""
    return verify(
        transaction_bytes, dual.issuer_sig.signature, issuer_public_key
    ) and verify(
        transaction_bytes, dual.applicant_sig.signature, applicant_public_key
    )


def _check_key(key: bytes) -> None:
    if len(key) != SYMMETRIC_KEY_LEN:
        raise ValidationError("symmetric key must be exactly 32 bytes")


def encrypt(
    plaintext: bytes, owner_id: str, key: bytes, nonce: Optional[bytes] = None
) -> EncryptedBlob:
    """Seal a blob for one owner; pass a nonce only from a never-repeating source."""
    _check_key(key)
    if nonce is None:
        nonce = os.urandom(NONCE_LEN)
    elif len(nonce) != NONCE_LEN:
        raise ValidationError(f"nonce must be exactly {NONCE_LEN} bytes")
    ciphertext = ChaCha20Poly1305(key).encrypt(nonce, plaintext, None)
    return EncryptedBlob(nonce=nonce, ciphertext=ciphertext, key_owner=owner_id)


def decrypt(blob: EncryptedBlob, key: bytes) -> bytes:
    _check_key(key)
    try:
        return ChaCha20Poly1305(key).decrypt(blob.nonce, blob.ciphertext, None)
    except InvalidTag as exc:
        raise AeadAuthenticationError(
            "decryption failed authentication (wrong key or tampered data)"
        ) from exc


def derive_owner_key(private_seed: bytes, context: bytes = CERT_KEY_CONTEXT) -> bytes:
    """Per-owner symmetric key so only the wallet owner can decrypt."""
    return hashlib.sha256(private_seed + context).digest()
