"""The certification contract: registration, dual-signed certification with
consortium consensus, token minting, off-chain anchoring, and third-party
verification — executed as one all-or-nothing step.

Atomicity comes from a write-ahead journal (journal.jsonl, latest stage per
transaction wins). Stages before the off-chain write roll back on recovery
(nothing durable happened); once the certification block bytes are journaled
("staged"), recovery replays forward — off-chain writes are idempotent by
content address — so observable state is always fully pre- or fully post-
certify. Wallets are derived from committed chain records, never stored
separately, which keeps token minting atomic with the chain append.
"""

from __future__ import annotations

import threading
from dataclasses import dataclass
from datetime import datetime
from enum import Enum
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Tuple

from . import crypto
from .consensus import PROPOSAL_CERT, SimNetwork
from .crypto import KeyPair
from .errors import (
    AccountNotFound,
    AuthorizationError,
    CertificationRejected,
    CryptoKeyError,
    IntegrityError,
    MembershipError,
    NotFoundError,
    StateError,
)
from .identity import Identity, IdentityRegistry, PermissionedNetwork, Role
from .ledger import (
    AnchorRecord,
    PublicLedger,
    QuorumCertificate,
    TokenRecord,
)
from .model import (
    CertificationBlock,
    CertificationTransaction,
    CredentialToken,
    FansWallet,
    SignedCertificationTransaction,
)
from .store import ContentKind, OffchainStore, SubmissionStatus
from .util import append_jsonl, format_ts, latest_by_key, parse_ts, utc_now


class Failpoint(str, Enum):
    AFTER_SIGNING = "after_signing"
    AFTER_CONSENSUS = "after_consensus"
    AFTER_OFFCHAIN_WRITE = "after_offchain_write"
    BEFORE_CHAIN_APPEND = "before_chain_append"


class FailpointTriggered(Exception):
    """Raised to simulate a crash at an injected failure point."""

    def __init__(self, failpoint: Failpoint) -> None:
        super().__init__(f"injected crash at {failpoint.value}")
        self.failpoint = failpoint


class _Stage:
    SIGNED = "signed"
    CERTIFIED = "certified"
    STAGED = "staged"
    DONE = "done"
    REJECTED = "rejected"
    ROLLED_BACK = "rolled_back"


@dataclass(frozen=True)
class CertificationReceipt:
    token_id: bytes
    anchor_hash: bytes
    block_height: int

    def to_json(self) -> Dict[str, Any]:
        return {
            "token_id": self.token_id.hex(),
            "anchor_hash": self.anchor_hash.hex(),
            "block_height": self.block_height,
        }


CHECK_ANCHOR = "anchor_found"
CHECK_OFFCHAIN = "offchain_block_intact"
CHECK_SIGNATURES = "signatures_valid"
CHECK_ISSUER = "issuer_consortium_member"


@dataclass(frozen=True)
class VerificationCheck:
    name: str
    passed: bool
    detail: str

    def to_json(self) -> Dict[str, Any]:
        return {"name": self.name, "passed": self.passed, "detail": self.detail}


@dataclass(frozen=True)
class VerificationResult:
    authentic: bool
    checks: Tuple[VerificationCheck, ...]

    @property
    def failure_reason(self) -> Optional[str]:
        for check in self.checks:
            if not check.passed:
                return check.detail
        return None

    def to_json(self) -> Dict[str, Any]:
        return {
            "authentic": self.authentic,
            "checks": [c.to_json() for c in self.checks],
            "reason": self.failure_reason,
        }


class ChaincodeEngine:
    def __init__(
        self,
        registry: IdentityRegistry,
        store: OffchainStore,
        ledger: PublicLedger,
        network: SimNetwork,
        membership: PermissionedNetwork,
        journal_path: Path,
        clock: Callable[[], datetime] = utc_now,
        nonce_source: Optional[Callable[[], bytes]] = None,
    ) -> None:
        self.registry = registry
        self.store = store
        self.ledger = ledger
        self.network = network
        self.membership = membership
        self.journal_path = Path(journal_path)
        self._clock = clock
        self._nonce_source = nonce_source
        self._locks_guard = threading.Lock()
        self._applicant_locks: Dict[str, threading.Lock] = {}

    def _applicant_lock(self, applicant_id: str) -> threading.Lock:
        with self._locks_guard:
            return self._applicant_locks.setdefault(applicant_id, threading.Lock())

    # -- registration ----------------------------------------------------

    def register_student(
        self, name: str, institution: str, public_key: bytes
    ) -> Tuple[Identity, FansWallet]:
        if institution not in self.membership.institutions():
            raise MembershipError(f"institution {institution} is not in the consortium")
        identity = Identity(
            id=name, role=Role.STUDENT, institution=institution, public_key=public_key
        )
        self.registry.add(identity)
        return identity, FansWallet(owner=name, tokens=())

    # -- journal ----------------------------------------------------------

    def _journal(self, tx_id: str, stage: str, **data: Any) -> None:
        append_jsonl(self.journal_path, {"tx_id": tx_id, "stage": stage, **data})

    def pending_journal_entries(self) -> List[Dict[str, Any]]:
        final = {_Stage.DONE, _Stage.REJECTED, _Stage.ROLLED_BACK}
        latest = latest_by_key(self.journal_path, "tx_id")
        return [
            entry
            for tx_id, entry in sorted(latest.items())
            if entry["stage"] not in final
        ]

    def recover(self) -> List[Tuple[str, str]]:
        """Settle interrupted certifications; returns (tx_id, action) pairs."""
        actions: List[Tuple[str, str]] = []
        for entry in self.pending_journal_entries():
            tx_id = entry["tx_id"]
            if entry["stage"] in (_Stage.SIGNED, _Stage.CERTIFIED):
                # Nothing durable was written; the attempt simply evaporates.
                self._journal(tx_id, _Stage.ROLLED_BACK)
                actions.append((tx_id, _Stage.ROLLED_BACK))
            elif entry["stage"] == _Stage.STAGED:
                self._complete_staged(entry)
                actions.append((tx_id, _Stage.DONE))
        return actions

    def _complete_staged(self, entry: Dict[str, Any]) -> None:
        anchor_hash = bytes.fromhex(entry["anchor_hash"])
        if self.ledger.query_anchor(anchor_hash) is None:
            block_bytes = bytes.fromhex(entry["block_bytes"])
            self.store.put(block_bytes, ContentKind.CERTIFICATION_BLOCK)
            token = CredentialToken.from_json(entry["token"])
            cert = QuorumCertificate.from_json(entry["certificate"])
            records = [
                AnchorRecord(
                    certification_block_hash=anchor_hash,
                    applicant_id=entry["applicant_id"],
                    issuer_id=entry["issuer_id"],
                ),
                TokenRecord(token=token, wallet_owner=entry["applicant_id"]),
            ]
            self.ledger.append_block(
                records,
                cert,
                self.membership,
                timestamp=parse_ts(entry["block_timestamp"]),
            )
        self._journal(entry["tx_id"], _Stage.DONE)

    # -- certification ------------------------------------------------------

    def certify(
        self,
        submission_id: str,
        issuer_id: str,
        issuer_key: KeyPair,
        applicant_key: KeyPair,
        failpoint: Optional[Failpoint] = None,
    ) -> CertificationReceipt:
        submission = self.store.get_submission(submission_id)
        with self._applicant_lock(submission.applicant_id):
            return self._certify_serialized(
                submission_id, issuer_id, issuer_key, applicant_key, failpoint
            )

    def _certify_serialized(
        self,
        submission_id: str,
        issuer_id: str,
        issuer_key: KeyPair,
        applicant_key: KeyPair,
        failpoint: Optional[Failpoint],
    ) -> CertificationReceipt:
        submission = self.store.get_submission(submission_id)

        applicant = self.registry.find(submission.applicant_id)
        if applicant is None:
            raise AccountNotFound()

        if submission.status is not SubmissionStatus.VERIFIED:
            raise StateError(
                f"submission {submission_id} is {submission.status.value}, not Verified"
            )

        issuer = self.registry.find(issuer_id)
        if issuer is None:
            raise NotFoundError(f"unknown issuer: {issuer_id}")
        if issuer.role is not Role.INSTITUTION_ADMIN:
            raise AuthorizationError("certification is issued by an institution admin")
        if issuer_key.public_key != issuer.public_key:
            raise CryptoKeyError("issuer key does not match the registered identity")
        if applicant_key.public_key != applicant.public_key:
            raise CryptoKeyError("applicant key does not match the registered identity")

        tx = CertificationTransaction(
            applicant_id=applicant.id,
            issuer_id=issuer.id,
            metadata=submission.course_metadata,
            document_hashes=tuple(submission.document_hashes),
            created_at=self._clock(),
        )
        signed = SignedCertificationTransaction.create(tx, issuer_key, applicant_key)
        tx_id = signed.tx_hash.hex()
        self._journal(tx_id, _Stage.SIGNED, submission_id=submission_id)
        if failpoint is Failpoint.AFTER_SIGNING:
            raise FailpointTriggered(failpoint)

        height = self.ledger.next_height()
        proposer = self.network.proposer_for(height)
        outcome = self.network.propose(
            signed.to_bytes(), proposer, height, kind=PROPOSAL_CERT
        )
        if not outcome.approved:
            self._journal(tx_id, _Stage.REJECTED)
            raise CertificationRejected()
        certificate = outcome.certificate
        assert certificate is not None
        self._journal(tx_id, _Stage.CERTIFIED)
        if failpoint is Failpoint.AFTER_CONSENSUS:
            raise FailpointTriggered(failpoint)

        cert_key = crypto.derive_owner_key(applicant_key.private_key)
        nonce = self._nonce_source() if self._nonce_source is not None else None
        valid_cert = crypto.encrypt(signed.tx_hash, applicant.id, cert_key, nonce=nonce)
        block = CertificationBlock(
            applicant_id=applicant.id,
            issuer_id=issuer.id,
            valid_cert=valid_cert,
            signed_tx=signed,
        )
        block_bytes = block.to_bytes()
        anchor_hash = crypto.hash_content(block_bytes)
        issued_at = self._clock()
        token = CredentialToken(
            token_id=signed.tx_hash,
            metadata=tx.metadata,
            anchor_hash=anchor_hash,
            issued_at=issued_at,
        )
        block_timestamp = self._clock()
        self._journal(
            tx_id,
            _Stage.STAGED,
            submission_id=submission_id,
            applicant_id=applicant.id,
            issuer_id=issuer.id,
            anchor_hash=anchor_hash.hex(),
            block_bytes=block_bytes.hex(),
            token=token.to_json(),
            certificate=certificate.to_json(),
            block_timestamp=format_ts(block_timestamp),
        )

        self.store.put(block_bytes, ContentKind.CERTIFICATION_BLOCK)
        if failpoint is Failpoint.AFTER_OFFCHAIN_WRITE:
            raise FailpointTriggered(failpoint)

        records = [
            AnchorRecord(
                certification_block_hash=anchor_hash,
                applicant_id=applicant.id,
                issuer_id=issuer.id,
            ),
            TokenRecord(token=token, wallet_owner=applicant.id),
        ]
        if failpoint is Failpoint.BEFORE_CHAIN_APPEND:
            raise FailpointTriggered(failpoint)
        block_entry = self.ledger.append_block(
            records, certificate, self.membership, timestamp=block_timestamp
        )
        self._journal(tx_id, _Stage.DONE)
        return CertificationReceipt(
            token_id=signed.tx_hash,
            anchor_hash=anchor_hash,
            block_height=block_entry.height,
        )

    # -- wallets -----------------------------------------------------------

    def wallet_of(self, owner_id: str) -> FansWallet:
        identity = self.registry.find(owner_id)
        if identity is None:
            raise NotFoundError(f"unknown wallet owner: {owner_id}")
        tokens = tuple(self.ledger.query_wallet_tokens(owner_id))
        return FansWallet(owner=owner_id, tokens=tokens)

    # -- third-party verification -------------------------------------------

    def _resolve_anchor(self, reference: bytes) -> Optional[bytes]:
        """Accept either an anchor hash or a token id; return the anchor."""
        if self.ledger.query_anchor(reference) is not None:
            return reference
        for block in self.ledger.blocks:
            for record in block.records:
                if isinstance(record, TokenRecord) and record.token.token_id == reference:
                    return record.token.anchor_hash
        return None

    def verify_certificate(self, reference: bytes) -> VerificationResult:
        checks: List[VerificationCheck] = []

        anchor_hash = self._resolve_anchor(reference)
        found = self.ledger.query_anchor(anchor_hash) if anchor_hash else None
        if found is None:
            checks.append(
                VerificationCheck(CHECK_ANCHOR, False, "no anchor on the public chain")
            )
            return VerificationResult(authentic=False, checks=tuple(checks))
        height, anchor = found
        checks.append(
            VerificationCheck(CHECK_ANCHOR, True, f"anchored at height {height}")
        )

        try:
            payload = self.store.get(anchor.certification_block_hash)
            block = CertificationBlock.from_bytes(payload)
        except NotFoundError:
            checks.append(
                VerificationCheck(CHECK_OFFCHAIN, False, "off-chain block missing")
            )
            return VerificationResult(authentic=False, checks=tuple(checks))
        except IntegrityError:
            checks.append(
                VerificationCheck(CHECK_OFFCHAIN, False, "off-chain hash mismatch")
            )
            return VerificationResult(authentic=False, checks=tuple(checks))
        if (
            block.applicant_id != anchor.applicant_id
            or block.issuer_id != anchor.issuer_id
        ):
            checks.append(
                VerificationCheck(
                    CHECK_OFFCHAIN, False, "off-chain block names different parties"
                )
            )
            return VerificationResult(authentic=False, checks=tuple(checks))
        checks.append(VerificationCheck(CHECK_OFFCHAIN, True, "content hash matches"))

        applicant = self.registry.find(block.applicant_id)
        issuer = self.registry.find(block.issuer_id)
        if applicant is None or issuer is None:
            checks.append(
                VerificationCheck(
                    CHECK_SIGNATURES, False, "signing identities are not registered"
                )
            )
            return VerificationResult(authentic=False, checks=tuple(checks))
        if not block.signed_tx.verify(issuer.public_key, applicant.public_key):
            checks.append(
                VerificationCheck(CHECK_SIGNATURES, False, "dual signature invalid")
            )
            return VerificationResult(authentic=False, checks=tuple(checks))
        checks.append(
            VerificationCheck(CHECK_SIGNATURES, True, "issuer and applicant signatures verify")
        )

        if issuer.institution not in self.membership.institutions():
            checks.append(
                VerificationCheck(
                    CHECK_ISSUER, False, "issuing institution is not a consortium member"
                )
            )
            return VerificationResult(authentic=False, checks=tuple(checks))
        checks.append(
            VerificationCheck(
                CHECK_ISSUER, True, f"issued under {issuer.institution}"
            )
        )
        return VerificationResult(authentic=True, checks=tuple(checks))
