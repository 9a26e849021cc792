"""Content-addressed off-chain store plus the pending-submission staging area.

Objects live one file per digest under a two-level hex fan-out
(``objects/aa/bb/<hex>``); submissions are an append-only JSON-lines index
where the latest line per submission_id wins. Object writes are atomic
(write-temp-then-rename) and payloads are immutable once written.
"""

from __future__ import annotations

import threading
from dataclasses import dataclass
from datetime import datetime
from enum import Enum
from pathlib import Path
from typing import Any, Callable, Dict, Iterator, List, Optional, Tuple

from . import crypto
from .errors import (
    AuthorizationError,
    IntegrityError,
    NotFoundError,
    StateError,
    ValidationError,
)
from .identity import Identity, Role
from .model import CourseMetadata
from .util import append_jsonl, atomic_write_bytes, format_ts, parse_ts, read_jsonl, utc_now

MAX_OBJECT_SIZE = 16 * 1024 * 1024


class ContentKind(str, Enum):
    PENDING_DOCUMENT = "PendingDocument"
    CERTIFICATION_BLOCK = "CertificationBlock"


class SubmissionStatus(str, Enum):
    AWAITING_VERIFICATION = "AwaitingVerification"
    VERIFIED = "Verified"
    REJECTED = "Rejected"


@dataclass
class PendingSubmission:
    submission_id: str
    applicant_id: str
    document_hashes: List[bytes]
    course_metadata: CourseMetadata
    status: SubmissionStatus
    created_at: datetime
    decided_at: Optional[datetime] = None
    decided_by: Optional[str] = None

    def to_json(self) -> Dict[str, Any]:
        return {
            "submission_id": self.submission_id,
            "applicant_id": self.applicant_id,
            "document_hashes": [h.hex() for h in self.document_hashes],
            "metadata": self.course_metadata.to_json(),
            "status": self.status.value,
            "decided_by": self.decided_by,
            "timestamps": {
                "created_at": format_ts(self.created_at),
                "decided_at": format_ts(self.decided_at) if self.decided_at else None,
            },
        }

    @classmethod
    def from_json(cls, data: Dict[str, Any]) -> "PendingSubmission":
        timestamps = data["timestamps"]
        decided_at = timestamps.get("decided_at")
        return cls(
            submission_id=data["submission_id"],
            applicant_id=data["applicant_id"],
            document_hashes=[bytes.fromhex(h) for h in data["document_hashes"]],
            course_metadata=CourseMetadata.from_json(data["metadata"]),
            status=SubmissionStatus(data["status"]),
            created_at=parse_ts(timestamps["created_at"]),
            decided_at=parse_ts(decided_at) if decided_at else None,
            decided_by=data.get("decided_by"),
        )


class OffchainStore:
    """Persistent store; reloadable from its directory at any time."""

    def __init__(self, root: Path, clock: Callable[[], datetime] = utc_now) -> None:
        self.root = Path(root)
        self.objects_dir = self.root / "objects"
        self.objects_index = self.root / "objects.jsonl"
        self.submissions_index = self.root / "submissions.jsonl"
        self._clock = clock
        self._write_lock = threading.Lock()
        self.root.mkdir(parents=True, exist_ok=True)
        self.objects_dir.mkdir(parents=True, exist_ok=True)
        self._meta: Dict[str, Dict[str, Any]] = {}
        for record in read_jsonl(self.objects_index):
            self._meta[record["hash"]] = record
        self._submissions: Dict[str, PendingSubmission] = {}
        for record in read_jsonl(self.submissions_index):
            sub = PendingSubmission.from_json(record)
            self._submissions[sub.submission_id] = sub
        self._seq = len(self._submissions)

    # -- content-addressed objects ------------------------------------

    def _path_for(self, digest_hex: str) -> Path:
        return self.objects_dir / digest_hex[:2] / digest_hex[2:4] / digest_hex

    def put(self, payload: bytes, kind: ContentKind) -> bytes:
        if not payload:
            raise ValidationError("empty payloads are not storable")
        if len(payload) > MAX_OBJECT_SIZE:
            raise ValidationError("payload exceeds the 16 MiB object limit")
        digest = crypto.hash_content(payload)
        digest_hex = digest.hex()
        with self._write_lock:
            path = self._path_for(digest_hex)
            if not path.exists():
                atomic_write_bytes(path, payload)
            if digest_hex not in self._meta:
                record = {
                    "hash": digest_hex,
                    "content_kind": kind.value,
                    "created_at": format_ts(self._clock()),
                }
                append_jsonl(self.objects_index, record)
                self._meta[digest_hex] = record
        return digest

    def get(self, address: bytes) -> bytes:
        digest_hex = address.hex()
        path = self._path_for(digest_hex)
        if not path.exists():
            raise NotFoundError(f"no object stored at {digest_hex}")
        payload = path.read_bytes()
        if crypto.hash_content(payload) != address:
            raise IntegrityError(f"stored bytes no longer match address {digest_hex}")
        return payload

    def exists(self, address: bytes) -> bool:
        return self._path_for(address.hex()).exists()

    def discard(self, address: bytes) -> None:
        """Remove a staged object (journal rollback only, never GC)."""
        digest_hex = address.hex()
        path = self._path_for(digest_hex)
        if path.exists():
            path.unlink()

    def object_count(self) -> int:
        return sum(1 for _ in self.iter_object_paths())

    def iter_object_paths(self) -> Iterator[Path]:
        for first in sorted(self.objects_dir.iterdir()) if self.objects_dir.exists() else []:
            if not first.is_dir():
                continue
            for second in sorted(first.iterdir()):
                if not second.is_dir():
                    continue
                for obj in sorted(second.iterdir()):
                    if obj.is_file():
                        yield obj

    def kind_of(self, address: bytes) -> Optional[ContentKind]:
        meta = self._meta.get(address.hex())
        return ContentKind(meta["content_kind"]) if meta else None

    def audit(self) -> List[Tuple[str, str]]:
        """Recompute every object's digest; return (address, problem) pairs."""
        problems: List[Tuple[str, str]] = []
        for path in self.iter_object_paths():
            payload = path.read_bytes()
            actual = crypto.hash_content(payload).hex()
            if actual != path.name:
                problems.append((path.name, f"content hashes to {actual}"))
        return problems

    # -- pending submissions -------------------------------------------

    def stage_submission(
        self,
        applicant: Identity,
        documents: List[bytes],
        metadata: CourseMetadata,
    ) -> PendingSubmission:
        if applicant.role is not Role.STUDENT:
            raise AuthorizationError("only students submit credentials")
        if not documents:
            raise ValidationError("a submission needs at least one document")
        hashes = [self.put(doc, ContentKind.PENDING_DOCUMENT) for doc in documents]
        with self._write_lock:
            self._seq += 1
            digest = crypto.hash_content(
                b"".join(hashes) + applicant.id.encode() + str(self._seq).encode()
            )
            submission = PendingSubmission(
                submission_id=f"sub-{self._seq:04d}-{digest.hex()[:8]}",
                applicant_id=applicant.id,
                document_hashes=hashes,
                course_metadata=metadata,
                status=SubmissionStatus.AWAITING_VERIFICATION,
                created_at=self._clock(),
            )
            append_jsonl(self.submissions_index, submission.to_json())
            self._submissions[submission.submission_id] = submission
        return submission

    def get_submission(self, submission_id: str) -> PendingSubmission:
        try:
            return self._submissions[submission_id]
        except KeyError:
            raise NotFoundError(f"unknown submission: {submission_id}") from None

    def list_submissions(
        self, status: Optional[SubmissionStatus] = None
    ) -> List[PendingSubmission]:
        subs = sorted(self._submissions.values(), key=lambda s: s.submission_id)
        if status is not None:
            subs = [s for s in subs if s.status == status]
        return subs

    def set_verification(
        self,
        submission_id: str,
        decision: SubmissionStatus,
        admin: Identity,
    ) -> PendingSubmission:
        if admin.role is not Role.INSTITUTION_ADMIN:
            raise AuthorizationError("verification decisions need an institution admin")
        if decision not in (SubmissionStatus.VERIFIED, SubmissionStatus.REJECTED):
            raise ValidationError("decision must be Verified or Rejected")
        submission = self.get_submission(submission_id)
        if submission.status is not SubmissionStatus.AWAITING_VERIFICATION:
            raise StateError(
                f"submission {submission_id} already decided: {submission.status.value}"
            )
        with self._write_lock:
            submission.status = decision
            submission.decided_by = admin.id
            submission.decided_at = self._clock()
            append_jsonl(self.submissions_index, submission.to_json())
        return submission
