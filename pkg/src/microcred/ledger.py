"""The public hash-linked chain: anchor records, wallet token records and
exemption grants, appendable only with a valid consortium quorum certificate.

Block linkage: block_hash = sha256(header ‖ records_root) with
header = fields(u64 height, prev_hash, timestamp); genesis prev_hash is 32
zero bytes. Export/import is JSON lines, one block per line, bit-exact.
"""

from __future__ import annotations

import threading
from dataclasses import dataclass
from datetime import datetime
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple, Union

from . import crypto, wire
from .crypto import ZERO_HASH, DigitalSignature
from .errors import ConflictError, ConsensusError, ValidationError
from .identity import PermissionedNetwork
from .model import CredentialToken, ExemptionGrant
from .util import append_jsonl, canonical_json, format_ts, parse_ts, read_jsonl, utc_now

ANCHOR = "anchor"
TOKEN = "token"
GRANT = "grant"


@dataclass(frozen=True)
class AnchorRecord:
    """On-chain hash of an off-chain certification block."""

    certification_block_hash: bytes
    applicant_id: str
    issuer_id: str

    kind = ANCHOR

    def canonical_bytes(self) -> bytes:
        return wire.encode_fields(
            wire.encode_str(self.kind),
            self.certification_block_hash,
            wire.encode_str(self.applicant_id),
            wire.encode_str(self.issuer_id),
        )

    def to_json(self) -> Dict[str, Any]:
        return {
            "kind": self.kind,
            "certification_block_hash": self.certification_block_hash.hex(),
            "applicant_id": self.applicant_id,
            "issuer_id": self.issuer_id,
        }


@dataclass(frozen=True)
class TokenRecord:
    """A credential token minted into a student wallet."""

    token: CredentialToken
    wallet_owner: str

    kind = TOKEN

    def canonical_bytes(self) -> bytes:
        return wire.encode_fields(
            wire.encode_str(self.kind),
            self.token.canonical_bytes(),
            wire.encode_str(self.wallet_owner),
        )

    def to_json(self) -> Dict[str, Any]:
        return {
            "kind": self.kind,
            "token": self.token.to_json(),
            "wallet_owner": self.wallet_owner,
        }


@dataclass(frozen=True)
class GrantRecord:
    """A course-exemption grant, anchored for public verifiability."""

    grant: ExemptionGrant

    kind = GRANT

    def canonical_bytes(self) -> bytes:
        return wire.encode_fields(
            wire.encode_str(self.kind), self.grant.canonical_bytes()
        )

    def to_json(self) -> Dict[str, Any]:
        return {"kind": self.kind, "grant": self.grant.to_json()}


LedgerRecord = Union[AnchorRecord, TokenRecord, GrantRecord]


def record_from_json(data: Dict[str, Any]) -> LedgerRecord:
    kind = data.get("kind")
    if kind == ANCHOR:
        return AnchorRecord(
            certification_block_hash=bytes.fromhex(data["certification_block_hash"]),
            applicant_id=data["applicant_id"],
            issuer_id=data["issuer_id"],
        )
    if kind == TOKEN:
        return TokenRecord(
            token=CredentialToken.from_json(data["token"]),
            wallet_owner=data["wallet_owner"],
        )
    if kind == GRANT:
        return GrantRecord(grant=ExemptionGrant.from_json(data["grant"]))
    raise ValidationError(f"unknown ledger record kind: {kind!r}")


@dataclass(frozen=True)
class QuorumCertificate:
    """Authority-node votes over a proposal at a fixed height."""

    proposal_hash: bytes
    height: int
    votes: Tuple[DigitalSignature, ...]

    @staticmethod
    def vote_message(proposal_hash: bytes, height: int) -> bytes:
        return proposal_hash + wire.encode_u64(height)

    def distinct_voters(self) -> List[str]:
        return sorted({v.signer_id for v in self.votes})

    def problem_against(self, membership: PermissionedNetwork) -> Optional[str]:
        """First defect of this certificate under the given membership."""
        message = self.vote_message(self.proposal_hash, self.height)
        for vote in self.votes:
            public_key = membership.public_key_of(vote.signer_id)
            if public_key is None:
                return f"vote by non-member {vote.signer_id}"
            if not crypto.verify(message, vote.signature, public_key):
                return f"vote by {vote.signer_id} does not verify"
        voters = self.distinct_voters()
        if len(voters) < membership.quorum:
            return (
                f"{len(voters)} distinct voters, quorum is {membership.quorum}"
            )
        return None

    def to_json(self) -> Dict[str, Any]:
        return {
            "proposal_hash": self.proposal_hash.hex(),
            "height": self.height,
            "votes": [
                {"signer_id": v.signer_id, "signature": v.signature.hex()}
                for v in self.votes
            ],
        }

    @classmethod
    def from_json(cls, data: Dict[str, Any]) -> "QuorumCertificate":
        return cls(
            proposal_hash=bytes.fromhex(data["proposal_hash"]),
            height=int(data["height"]),
            votes=tuple(
                DigitalSignature(
                    signer_id=v["signer_id"], signature=bytes.fromhex(v["signature"])
                )
                for v in data["votes"]
            ),
        )


@dataclass(frozen=True)
class PublicBlock:
    height: int
    prev_hash: bytes
    timestamp: datetime
    records: Tuple[LedgerRecord, ...]
    records_root: bytes
    quorum_cert: QuorumCertificate
    block_hash: bytes

    @staticmethod
    def compute_records_root(records: Sequence[LedgerRecord]) -> bytes:
        return crypto.hash_content(
            wire.encode_list([r.canonical_bytes() for r in records])
        )

    @staticmethod
    def compute_header(height: int, prev_hash: bytes, timestamp: datetime) -> bytes:
        return wire.encode_fields(
            wire.encode_u64(height), prev_hash, wire.encode_str(format_ts(timestamp))
        )

    @classmethod
    def build(
        cls,
        height: int,
        prev_hash: bytes,
        timestamp: datetime,
        records: Sequence[LedgerRecord],
        quorum_cert: QuorumCertificate,
    ) -> "PublicBlock":
        records_root = cls.compute_records_root(records)
        header = cls.compute_header(height, prev_hash, timestamp)
        return cls(
            height=height,
            prev_hash=prev_hash,
            timestamp=timestamp,
            records=tuple(records),
            records_root=records_root,
            quorum_cert=quorum_cert,
            block_hash=crypto.hash_content(header + records_root),
        )

    def to_json(self) -> Dict[str, Any]:
        return {
            "height": self.height,
            "prev_hash": self.prev_hash.hex(),
            "timestamp": format_ts(self.timestamp),
            "records": [r.to_json() for r in self.records],
            "records_root": self.records_root.hex(),
            "quorum_cert": self.quorum_cert.to_json(),
            "block_hash": self.block_hash.hex(),
        }

    @classmethod
    def from_json(cls, data: Dict[str, Any]) -> "PublicBlock":
        return cls(
            height=int(data["height"]),
            prev_hash=bytes.fromhex(data["prev_hash"]),
            timestamp=parse_ts(data["timestamp"]),
            records=tuple(record_from_json(r) for r in data["records"]),
            records_root=bytes.fromhex(data["records_root"]),
            quorum_cert=QuorumCertificate.from_json(data["quorum_cert"]),
            block_hash=bytes.fromhex(data["block_hash"]),
        )


@dataclass(frozen=True)
class ValidationReport:
    valid: bool
    height: Optional[int] = None
    problem: Optional[str] = None

    def describe(self) -> str:
        if self.valid:
            return "valid"
        return f"invalid at height {self.height}: {self.problem}"


def _block_problem(
    block: PublicBlock,
    index: int,
    prev: Optional[PublicBlock],
    membership: Optional[PermissionedNetwork],
) -> Optional[str]:
    if block.height != index:
        return f"height {block.height} at chain position {index}"
    expected_prev = prev.block_hash if prev is not None else ZERO_HASH
    if block.prev_hash != expected_prev:
        return "prev_hash mismatch"
    if not block.records:
        return "block carries no records"
    if block.records_root != PublicBlock.compute_records_root(block.records):
        return "records_root mismatch"
    header = PublicBlock.compute_header(block.height, block.prev_hash, block.timestamp)
    if block.block_hash != crypto.hash_content(header + block.records_root):
        return "block_hash mismatch"
    if prev is not None and block.timestamp < prev.timestamp:
        return "timestamp decreased"
    cert = block.quorum_cert
    if cert.height != block.height:
        return f"certificate is for height {cert.height}"
    for record in block.records:
        if isinstance(record, TokenRecord):
            if record.token.token_id != cert.proposal_hash:
                return "token does not match the certified proposal"
        elif isinstance(record, GrantRecord):
            if crypto.hash_content(record.grant.canonical_bytes()) != cert.proposal_hash:
                return "grant does not match the certified proposal"
    if membership is not None:
        cert_problem = cert.problem_against(membership)
        if cert_problem is not None:
            return cert_problem
    return None


def validate_blocks(
    blocks: Sequence[PublicBlock],
    membership: Optional[PermissionedNetwork] = None,
) -> ValidationReport:
    """Check every linkage/root/certificate invariant; stop at the first hit.

    Without a membership the certificate signatures cannot be checked;
    everything recomputable from the blocks alone still is.
    """
    seen_token_ids: set = set()
    seen_anchors: set = set()
    prev: Optional[PublicBlock] = None
    for index, block in enumerate(blocks):
        problem = _block_problem(block, index, prev, membership)
        if problem is not None:
            return ValidationReport(valid=False, height=block.height, problem=problem)
        for record in block.records:
            if isinstance(record, TokenRecord):
                if record.token.token_id in seen_token_ids:
                    return ValidationReport(
                        valid=False, height=block.height, problem="duplicate token id"
                    )
                seen_token_ids.add(record.token.token_id)
            elif isinstance(record, AnchorRecord):
                if record.certification_block_hash in seen_anchors:
                    return ValidationReport(
                        valid=False, height=block.height, problem="duplicate anchor"
                    )
                seen_anchors.add(record.certification_block_hash)
        prev = block
    return ValidationReport(valid=True)


class PublicLedger:
    """Append-only block chain with JSON-lines persistence."""

    def __init__(
        self,
        path: Optional[Path] = None,
        clock: Callable[[], datetime] = utc_now,
    ) -> None:
        self.path = Path(path) if path is not None else None
        self._clock = clock
        self._append_lock = threading.Lock()
        self.blocks: List[PublicBlock] = []
        if self.path is not None and self.path.exists():
            self.blocks = [PublicBlock.from_json(line) for line in read_jsonl(self.path)]
        self._token_ids = {
            r.token.token_id
            for b in self.blocks
            for r in b.records
            if isinstance(r, TokenRecord)
        }
        self._anchors = {
            r.certification_block_hash
            for b in self.blocks
            for r in b.records
            if isinstance(r, AnchorRecord)
        }

    def __len__(self) -> int:
        return len(self.blocks)

    @property
    def tip(self) -> Optional[PublicBlock]:
        return self.blocks[-1] if self.blocks else None

    def next_height(self) -> int:
        return len(self.blocks)

    def append_block(
        self,
        records: Sequence[LedgerRecord],
        quorum_cert: QuorumCertificate,
        membership: PermissionedNetwork,
        timestamp: Optional[datetime] = None,
    ) -> PublicBlock:
        if not records:
            raise ValidationError("a block needs at least one record")
        with self._append_lock:
            height = len(self.blocks)
            if quorum_cert.height != height:
                raise ConflictError(
                    f"certificate height {quorum_cert.height}, chain expects {height}"
                )
            cert_problem = quorum_cert.problem_against(membership)
            if cert_problem is not None:
                raise ConsensusError(f"quorum certificate rejected: {cert_problem}")
            for record in records:
                if isinstance(record, TokenRecord):
                    if record.token.token_id in self._token_ids:
                        raise ConflictError(
                            f"token {record.token.token_id.hex()} already on chain"
                        )
                elif isinstance(record, AnchorRecord):
                    if record.certification_block_hash in self._anchors:
                        raise ConflictError(
                            "certification block already anchored: "
                            f"{record.certification_block_hash.hex()}"
                        )
            prev = self.blocks[-1] if self.blocks else None
            ts = timestamp if timestamp is not None else self._clock()
            if prev is not None and ts < prev.timestamp:
                raise ValidationError("block timestamp precedes the chain tip")
            block = PublicBlock.build(
                height=height,
                prev_hash=prev.block_hash if prev is not None else ZERO_HASH,
                timestamp=ts,
                records=records,
                quorum_cert=quorum_cert,
            )
            problem = _block_problem(block, height, prev, membership)
            if problem is not None:
                raise ValidationError(f"block rejected: {problem}")
            if self.path is not None:
                append_jsonl(self.path, block.to_json())
            self.blocks.append(block)
            for record in records:
                if isinstance(record, TokenRecord):
                    self._token_ids.add(record.token.token_id)
                elif isinstance(record, AnchorRecord):
                    self._anchors.add(record.certification_block_hash)
        return block

    def validate_chain(
        self, membership: Optional[PermissionedNetwork] = None
    ) -> ValidationReport:
        return validate_blocks(self.blocks, membership)

    def query_anchor(
        self, certification_block_hash: bytes
    ) -> Optional[Tuple[int, AnchorRecord]]:
        for block in self.blocks:
            for record in block.records:
                if (
                    isinstance(record, AnchorRecord)
                    and record.certification_block_hash == certification_block_hash
                ):
                    return block.height, record
        return None

    def query_wallet_tokens(self, owner_id: str) -> List[CredentialToken]:
        tokens: List[CredentialToken] = []
        for block in self.blocks:
            for record in block.records:
                if isinstance(record, TokenRecord) and record.wallet_owner == owner_id:
                    tokens.append(record.token)
        return tokens

    def query_grants(self, student_id: Optional[str] = None) -> List[ExemptionGrant]:
        grants: List[ExemptionGrant] = []
        for block in self.blocks:
            for record in block.records:
                if isinstance(record, GrantRecord):
                    if student_id is None or record.grant.student_id == student_id:
                        grants.append(record.grant)
        return grants

    def export_lines(self) -> str:
        return "".join(canonical_json(b.to_json()) + "\n" for b in self.blocks)

    def export_to(self, path: Path) -> None:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(self.export_lines(), encoding="utf-8")

    @staticmethod
    def import_blocks(path: Path) -> List[PublicBlock]:
        return [PublicBlock.from_json(line) for line in read_jsonl(path)]
