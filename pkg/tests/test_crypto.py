"""Key generation, signing, dual signatures, hashing, and the AEAD wrapper."""

import hashlib

import pytest
from hypothesis import given, strategies as st

from microcred import crypto
from microcred.errors import AeadAuthenticationError, CryptoKeyError, ValidationError


def test_keypair_from_seed_is_deterministic():
    seed = bytes(range(32))
    first = crypto.generate_keypair(seed)
    second = crypto.generate_keypair(seed)
    assert first.private_key == seed
    assert first.public_key == second.public_key
    assert len(first.public_key) == 32


def test_keypair_rejects_bad_seed_length():
    with pytest.raises(CryptoKeyError):
        crypto.generate_keypair(b"short")


def test_fresh_keypairs_differ():
    assert crypto.generate_keypair().public_key != crypto.generate_keypair().public_key


def test_sign_verify_round_trip():
    keypair = crypto.generate_keypair(b"\x01" * 32)
    sig = crypto.sign(b"hello", keypair, "signer-1")
    assert len(sig.signature) == 64
    assert sig.signer_id == "signer-1"
    assert crypto.verify(b"hello", sig.signature, keypair.public_key)


def test_verify_rejects_wrong_message_and_key():
    keypair = crypto.generate_keypair(b"\x01" * 32)
    other = crypto.generate_keypair(b"\x02" * 32)
    sig = crypto.sign(b"hello", keypair, "s")
    assert not crypto.verify(b"hellO", sig.signature, keypair.public_key)
    assert not crypto.verify(b"hello", sig.signature, other.public_key)


@given(st.binary(max_size=80), st.binary(max_size=40))
def test_verify_never_raises_on_malformed_input(signature, public_key):
    assert crypto.verify(b"msg", signature, public_key) in (False, True)


def test_dual_signature_requires_both_parties():
    issuer = crypto.generate_keypair(b"\x03" * 32)
    applicant = crypto.generate_keypair(b"\x04" * 32)
    dual = crypto.dual_sign(b"payload", issuer, applicant, "issuer", "applicant")
    assert crypto.verify_dual(
        b"payload", dual, issuer.public_key, applicant.public_key
    )
    # swap the keys: both checks must fail closed
    assert not crypto.verify_dual(
        b"payload", dual, applicant.public_key, issuer.public_key
    )


def test_dual_sign_same_key_warns():
    keypair = crypto.generate_keypair(b"\x05" * 32)
    with pytest.warns(UserWarning):
        crypto.dual_sign(b"payload", keypair, keypair, "a", "b")


def test_hash_content_is_sha256():
    for message in (b"", b"abc", b"x" * 1000):
        assert crypto.hash_content(message) == hashlib.sha256(message).digest()


def test_derive_seed_separates_parts():
    # the joint of ("ab","c") must not collide with ("a","bc")
    assert crypto.derive_seed(b"ab", b"c") != crypto.derive_seed(b"a", b"bc")
    assert len(crypto.derive_seed(b"x")) == 32


def test_owner_key_contexts_are_domain_separated():
    seed = b"\x06" * 32
    cert_key = crypto.derive_owner_key(seed, crypto.CERT_KEY_CONTEXT)
    doc_key = crypto.derive_owner_key(seed, crypto.DOC_KEY_CONTEXT)
    assert cert_key != doc_key
    assert len(cert_key) == 32


def test_encrypt_decrypt_round_trip():
    key = crypto.derive_owner_key(b"\x07" * 32, crypto.CERT_KEY_CONTEXT)
    blob = crypto.encrypt(b"secret bytes", "owner-1", key)
    assert blob.key_owner == "owner-1"
    assert len(blob.nonce) == crypto.NONCE_LEN
    assert crypto.decrypt(blob, key) == b"secret bytes"


def test_encrypt_accepts_explicit_nonce():
    key = crypto.derive_owner_key(b"\x08" * 32, crypto.CERT_KEY_CONTEXT)
    one = crypto.encrypt(b"m", "o", key, nonce=b"\x01" * 12)
    two = crypto.encrypt(b"m", "o", key, nonce=b"\x01" * 12)
    assert one.ciphertext == two.ciphertext
    with pytest.raises(ValidationError):
        crypto.encrypt(b"m", "o", key, nonce=b"\x01" * 11)


def test_decrypt_rejects_wrong_key():
    key = crypto.derive_owner_key(b"\x09" * 32, crypto.CERT_KEY_CONTEXT)
    wrong = crypto.derive_owner_key(b"\x0a" * 32, crypto.CERT_KEY_CONTEXT)
    blob = crypto.encrypt(b"secret", "o", key)
    with pytest.raises(AeadAuthenticationError):
        crypto.decrypt(blob, wrong)


def test_decrypt_rejects_any_ciphertext_tamper():
    key = crypto.derive_owner_key(b"\x0b" * 32, crypto.CERT_KEY_CONTEXT)
    blob = crypto.encrypt(b"secret", "o", key)
    for index in range(len(blob.ciphertext)):
        damaged = bytearray(blob.ciphertext)
        damaged[index] ^= 0x80
        tampered = crypto.EncryptedBlob(
            key_owner=blob.key_owner, nonce=blob.nonce, ciphertext=bytes(damaged)
        )
        with pytest.raises(AeadAuthenticationError):
            crypto.decrypt(tampered, key)


@given(st.binary(max_size=200))
def test_sign_verify_round_trips_for_any_message(message):
    keypair = crypto.generate_keypair(b"\x0c" * 32)
    sig = crypto.sign(message, keypair, "s")
    assert crypto.verify(message, sig.signature, keypair.public_key)
