"""Course-exemption policies and the request workflow.

A policy maps token evidence to an exemption for a target course via a small
closed requirement tree (monotone: adding a token never revokes
eligibility). Requests move Submitted → CriteriaIssued → Fulfilled → Granted,
with Denied reachable from the first two states only. Grants are anchored on
the public chain through a consortium consensus round.
"""

from __future__ import annotations

import threading
from dataclasses import dataclass, replace
from datetime import datetime
from decimal import Decimal
from enum import Enum
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple

from .consensus import PROPOSAL_GRANT
from .engine import ChaincodeEngine
from .errors import (
    ConflictError,
    ConsensusError,
    EligibilityError,
    NotFoundError,
    OwnershipError,
    StateError,
    ValidationError,
    AuthorizationError,
)
from .identity import Role
from .ledger import GrantRecord
from .model import CredentialToken, ExemptionGrant, credits_str
from .util import append_jsonl, format_ts, parse_ts, read_jsonl, utc_now

MAX_REQUIREMENT_DEPTH = 8

REQUIRE_TOKEN = "require_token"
REQUIRE_STACK = "require_stack"
ALL = "all"
ANY = "any"
AT_LEAST_CREDITS = "at_least_credits"


@dataclass(frozen=True)
class RequirementExpr:
    """One node of the requirement tree; children only for all/any."""

    kind: str
    course_id: Optional[str] = None
    stack_id: Optional[str] = None
    min_credits: Optional[Decimal] = None
    course_filter: Optional[str] = None
    children: Tuple["RequirementExpr", ...] = ()

    def __post_init__(self) -> None:
        if self.kind == REQUIRE_TOKEN:
            if not self.course_id:
                raise ValidationError("require_token needs a course_id")
        elif self.kind == REQUIRE_STACK:
            if not self.stack_id:
                raise ValidationError("require_stack needs a stack_id")
        elif self.kind in (ALL, ANY):
            if not self.children:
                raise ValidationError(f"{self.kind} needs at least one child")
        elif self.kind == AT_LEAST_CREDITS:
            if self.min_credits is None or self.min_credits < 0:
                raise ValidationError("at_least_credits needs a non-negative minimum")
        else:
            raise ValidationError(f"unknown requirement kind: {self.kind!r}")

    def depth(self) -> int:
        if not self.children:
            return 1
        return 1 + max(child.depth() for child in self.children)

    def to_json(self) -> Dict[str, Any]:
        if self.kind == REQUIRE_TOKEN:
            return {"kind": self.kind, "course_id": self.course_id}
        if self.kind == REQUIRE_STACK:
            return {"kind": self.kind, "stack_id": self.stack_id}
        if self.kind in (ALL, ANY):
            return {"kind": self.kind, "children": [c.to_json() for c in self.children]}
        data: Dict[str, Any] = {
            "kind": self.kind,
            "min_credits": credits_str(self.min_credits or Decimal(0)),
        }
        if self.course_filter is not None:
            data["course_filter"] = self.course_filter
        return data

    @classmethod
    def from_json(cls, data: Dict[str, Any]) -> "RequirementExpr":
        kind = data.get("kind")
        if kind == REQUIRE_TOKEN:
            expr = cls(kind=kind, course_id=data["course_id"])
        elif kind == REQUIRE_STACK:
            expr = cls(kind=kind, stack_id=data["stack_id"])
        elif kind in (ALL, ANY):
            expr = cls(
                kind=kind,
                children=tuple(cls.from_json(c) for c in data.get("children", [])),
            )
        elif kind == AT_LEAST_CREDITS:
            expr = cls(
                kind=kind,
                min_credits=Decimal(str(data["min_credits"])),
                course_filter=data.get("course_filter"),
            )
        else:
            raise ValidationError(f"unknown requirement kind: {kind!r}")
        if expr.depth() > MAX_REQUIREMENT_DEPTH:
            raise ValidationError(
                f"requirement tree deeper than {MAX_REQUIREMENT_DEPTH}"
            )
        return expr


def evaluate_requirement(
    expr: RequirementExpr, tokens: Sequence[CredentialToken]
) -> Dict[str, Any]:
    """Satisfaction breakdown of a requirement node against a token set."""
    if expr.kind == REQUIRE_TOKEN:
        satisfied = any(t.metadata.course_id == expr.course_id for t in tokens)
        return {"kind": expr.kind, "course_id": expr.course_id, "satisfied": satisfied}
    if expr.kind == REQUIRE_STACK:
        satisfied = any(t.metadata.stack_id == expr.stack_id for t in tokens)
        return {"kind": expr.kind, "stack_id": expr.stack_id, "satisfied": satisfied}
    if expr.kind in (ALL, ANY):
        children = [evaluate_requirement(c, tokens) for c in expr.children]
        flags = [c["satisfied"] for c in children]
        satisfied = all(flags) if expr.kind == ALL else any(flags)
        return {"kind": expr.kind, "satisfied": satisfied, "children": children}
    counted = sum(
        (
            t.metadata.credits
            for t in tokens
            if expr.course_filter is None or t.metadata.course_id == expr.course_filter
        ),
        Decimal(0),
    )
    assert expr.min_credits is not None
    return {
        "kind": expr.kind,
        "min_credits": credits_str(expr.min_credits),
        "counted_credits": credits_str(counted),
        "satisfied": counted >= expr.min_credits,
    }


@dataclass(frozen=True)
class ExemptionPolicy:
    policy_id: str
    institution: str
    target_course_id: str
    requirement: RequirementExpr
    assessment_template: str
    min_total_credits: Optional[Decimal] = None

    def __post_init__(self) -> None:
        if self.min_total_credits is not None and self.min_total_credits < 0:
            raise ValidationError("min_total_credits must be non-negative")
        if self.requirement.depth() > MAX_REQUIREMENT_DEPTH:
            raise ValidationError(
                f"requirement tree deeper than {MAX_REQUIREMENT_DEPTH}"
            )

    def to_json(self) -> Dict[str, Any]:
        data: Dict[str, Any] = {
            "policy_id": self.policy_id,
            "institution": self.institution,
            "target_course_id": self.target_course_id,
            "requirement": self.requirement.to_json(),
            "assessment_template": self.assessment_template,
            "min_total_credits": (
                credits_str(self.min_total_credits)
                if self.min_total_credits is not None
                else None
            ),
        }
        return data

    @classmethod
    def from_json(cls, data: Dict[str, Any]) -> "ExemptionPolicy":
        raw_min = data.get("min_total_credits")
        return cls(
            policy_id=data["policy_id"],
            institution=data["institution"],
            target_course_id=data["target_course_id"],
            requirement=RequirementExpr.from_json(data["requirement"]),
            assessment_template=data.get("assessment_template", ""),
            min_total_credits=Decimal(str(raw_min)) if raw_min is not None else None,
        )


@dataclass(frozen=True)
class EligibilityResult:
    eligible: bool
    breakdown: Dict[str, Any]
    excluded_tokens: Tuple[Dict[str, Any], ...]
    total_credits: Decimal

    def to_json(self) -> Dict[str, Any]:
        return {
            "eligible": self.eligible,
            "breakdown": self.breakdown,
            "excluded_tokens": list(self.excluded_tokens),
            "total_credits": credits_str(self.total_credits),
        }


class RequestStatus(str, Enum):
    SUBMITTED = "Submitted"
    CRITERIA_ISSUED = "CriteriaIssued"
    FULFILLED = "Fulfilled"
    GRANTED = "Granted"
    DENIED = "Denied"


_ALLOWED_TRANSITIONS = {
    (RequestStatus.SUBMITTED, RequestStatus.CRITERIA_ISSUED),
    (RequestStatus.CRITERIA_ISSUED, RequestStatus.FULFILLED),
    (RequestStatus.FULFILLED, RequestStatus.GRANTED),
    (RequestStatus.SUBMITTED, RequestStatus.DENIED),
    (RequestStatus.CRITERIA_ISSUED, RequestStatus.DENIED),
}


@dataclass(frozen=True)
class AssessmentCriteria:
    criteria_id: str
    request_id: str
    description: str
    issued_by: str
    issued_at: datetime

    def to_json(self) -> Dict[str, Any]:
        return {
            "criteria_id": self.criteria_id,
            "request_id": self.request_id,
            "description": self.description,
            "issued_by": self.issued_by,
            "issued_at": format_ts(self.issued_at),
        }

    @classmethod
    def from_json(cls, data: Dict[str, Any]) -> "AssessmentCriteria":
        return cls(
            criteria_id=data["criteria_id"],
            request_id=data["request_id"],
            description=data["description"],
            issued_by=data["issued_by"],
            issued_at=parse_ts(data["issued_at"]),
        )


@dataclass(frozen=True)
class ExemptionRequest:
    request_id: str
    student_id: str
    policy_id: str
    presented_tokens: Tuple[bytes, ...]
    status: RequestStatus
    created_at: datetime
    criteria: Optional[AssessmentCriteria] = None

    def to_json(self) -> Dict[str, Any]:
        return {
            "request_id": self.request_id,
            "student_id": self.student_id,
            "policy_id": self.policy_id,
            "presented_tokens": [t.hex() for t in self.presented_tokens],
            "status": self.status.value,
            "created_at": format_ts(self.created_at),
            "criteria": self.criteria.to_json() if self.criteria else None,
        }

    @classmethod
    def from_json(cls, data: Dict[str, Any]) -> "ExemptionRequest":
        criteria = data.get("criteria")
        return cls(
            request_id=data["request_id"],
            student_id=data["student_id"],
            policy_id=data["policy_id"],
            presented_tokens=tuple(bytes.fromhex(t) for t in data["presented_tokens"]),
            status=RequestStatus(data["status"]),
            created_at=parse_ts(data["created_at"]),
            criteria=AssessmentCriteria.from_json(criteria) if criteria else None,
        )


class ExemptionService:
    """Policy catalogue plus the per-request state machine."""

    def __init__(
        self,
        engine: ChaincodeEngine,
        policies_path: Path,
        requests_path: Path,
        clock: Callable[[], datetime] = utc_now,
    ) -> None:
        self.engine = engine
        self.policies_path = Path(policies_path)
        self.requests_path = Path(requests_path)
        self._clock = clock
        self._catalogue_lock = threading.Lock()
        self._locks_guard = threading.Lock()
        self._request_locks: Dict[str, threading.Lock] = {}
        self._policies: Dict[str, ExemptionPolicy] = {}
        for record in read_jsonl(self.policies_path):
            policy = ExemptionPolicy.from_json(record)
            self._policies[policy.policy_id] = policy
        self._requests: Dict[str, ExemptionRequest] = {}
        for record in read_jsonl(self.requests_path):
            request = ExemptionRequest.from_json(record)
            self._requests[request.request_id] = request

    # -- policies --------------------------------------------------------

    def add_policy(self, policy: ExemptionPolicy, officer_id: str) -> ExemptionPolicy:
        officer = self.engine.registry.get(officer_id)
        if officer.role is not Role.INSTITUTION_ADMIN:
            raise AuthorizationError("policies are defined by institution admins")
        if officer.institution != policy.institution:
            raise AuthorizationError(
                "policies are defined by the institution that owns them"
            )
        with self._catalogue_lock:
            if policy.policy_id in self._policies:
                raise ConflictError(f"policy already exists: {policy.policy_id}")
            append_jsonl(self.policies_path, policy.to_json())
            self._policies[policy.policy_id] = policy
        return policy

    def get_policy(self, policy_id: str) -> ExemptionPolicy:
        try:
            return self._policies[policy_id]
        except KeyError:
            raise NotFoundError(f"unknown policy: {policy_id}") from None

    def list_policies(self) -> List[ExemptionPolicy]:
        return [self._policies[p] for p in sorted(self._policies)]

    # -- evaluation --------------------------------------------------------

    def evaluate(
        self,
        policy_id: str,
        student_id: str,
        token_ids: Optional[Sequence[bytes]] = None,
    ) -> EligibilityResult:
        policy = self.get_policy(policy_id)
        wallet = self.engine.wallet_of(student_id)
        tokens = list(wallet.tokens)
        if token_ids is not None:
            wanted = set(token_ids)
            tokens = [t for t in tokens if t.token_id in wanted]
        usable: List[CredentialToken] = []
        excluded: List[Dict[str, Any]] = []
        for token in tokens:
            result = self.engine.verify_certificate(token.token_id)
            if result.authentic:
                usable.append(token)
            else:
                excluded.append(
                    {
                        "token_id": token.token_id.hex(),
                        "reason": result.failure_reason or "verification failed",
                    }
                )
        breakdown = evaluate_requirement(policy.requirement, usable)
        total = sum((t.metadata.credits for t in usable), Decimal(0))
        eligible = bool(breakdown["satisfied"])
        if policy.min_total_credits is not None:
            credits_ok = total >= policy.min_total_credits
            breakdown = {
                "kind": "policy",
                "satisfied": eligible and credits_ok,
                "requirement": breakdown,
                "min_total_credits": {
                    "required": credits_str(policy.min_total_credits),
                    "counted": credits_str(total),
                    "satisfied": credits_ok,
                },
            }
            eligible = eligible and credits_ok
        return EligibilityResult(
            eligible=eligible,
            breakdown=breakdown,
            excluded_tokens=tuple(excluded),
            total_credits=total,
        )

    # -- requests ----------------------------------------------------------

    def _request_lock(self, request_id: str) -> threading.Lock:
        with self._locks_guard:
            return self._request_locks.setdefault(request_id, threading.Lock())

    def _persist(self, request: ExemptionRequest) -> ExemptionRequest:
        append_jsonl(self.requests_path, request.to_json())
        self._requests[request.request_id] = request
        return request

    def get_request(self, request_id: str) -> ExemptionRequest:
        try:
            return self._requests[request_id]
        except KeyError:
            raise NotFoundError(f"unknown exemption request: {request_id}") from None

    def list_requests(
        self,
        student_id: Optional[str] = None,
        institution: Optional[str] = None,
    ) -> List[ExemptionRequest]:
        requests = [self._requests[r] for r in sorted(self._requests)]
        if student_id is not None:
            requests = [r for r in requests if r.student_id == student_id]
        if institution is not None:
            requests = [
                r
                for r in requests
                if self.get_policy(r.policy_id).institution == institution
            ]
        return requests

    def submit_request(
        self, student_id: str, policy_id: str, token_ids: Sequence[bytes]
    ) -> ExemptionRequest:
        student = self.engine.registry.get(student_id)
        if student.role is not Role.STUDENT:
            raise AuthorizationError("exemption requests come from students")
        self.get_policy(policy_id)
        wallet = self.engine.wallet_of(student_id)
        owned = {t.token_id for t in wallet.tokens}
        for token_id in token_ids:
            if token_id not in owned:
                raise OwnershipError(
                    f"token {token_id.hex()} is not in {student_id}'s wallet"
                )
        # An empty presentation means "consider everything I hold".
        presented: Tuple[bytes, ...] = (
            tuple(token_ids)
            if token_ids
            else tuple(t.token_id for t in wallet.tokens)
        )
        evaluation = self.evaluate(policy_id, student_id, token_ids=presented)
        if not evaluation.eligible:
            raise EligibilityError(
                "presented tokens do not satisfy the policy",
                detail=evaluation.to_json(),
            )
        with self._catalogue_lock:
            request = ExemptionRequest(
                request_id=f"req-{len(self._requests) + 1:04d}",
                student_id=student_id,
                policy_id=policy_id,
                presented_tokens=presented,
                status=RequestStatus.SUBMITTED,
                created_at=self._clock(),
            )
            return self._persist(request)

    def _officer_for(self, request: ExemptionRequest, officer_id: str):
        officer = self.engine.registry.get(officer_id)
        policy = self.get_policy(request.policy_id)
        if officer.role is not Role.INSTITUTION_ADMIN:
            raise AuthorizationError("exemption decisions need an institution admin")
        if officer.institution != policy.institution:
            raise AuthorizationError(
                f"request {request.request_id} belongs to {policy.institution}"
            )
        return officer

    def _transition(
        self, request: ExemptionRequest, to_status: RequestStatus
    ) -> None:
        if (request.status, to_status) not in _ALLOWED_TRANSITIONS:
            raise StateError(
                f"cannot move request {request.request_id} "
                f"{request.status.value} → {to_status.value}"
            )

    def issue_criteria(
        self, request_id: str, officer_id: str, description: str
    ) -> ExemptionRequest:
        with self._request_lock(request_id):
            request = self.get_request(request_id)
            officer = self._officer_for(request, officer_id)
            self._transition(request, RequestStatus.CRITERIA_ISSUED)
            criteria = AssessmentCriteria(
                criteria_id=f"crit-{request_id}",
                request_id=request_id,
                description=description,
                issued_by=officer.id,
                issued_at=self._clock(),
            )
            return self._persist(
                replace(
                    request, status=RequestStatus.CRITERIA_ISSUED, criteria=criteria
                )
            )

    def record_fulfillment(self, request_id: str, officer_id: str) -> ExemptionRequest:
        with self._request_lock(request_id):
            request = self.get_request(request_id)
            self._officer_for(request, officer_id)
            self._transition(request, RequestStatus.FULFILLED)
            return self._persist(replace(request, status=RequestStatus.FULFILLED))

    def deny(self, request_id: str, officer_id: str) -> ExemptionRequest:
        with self._request_lock(request_id):
            request = self.get_request(request_id)
            self._officer_for(request, officer_id)
            self._transition(request, RequestStatus.DENIED)
            return self._persist(replace(request, status=RequestStatus.DENIED))

    def grant(self, request_id: str, officer_id: str) -> ExemptionGrant:
        with self._request_lock(request_id):
            request = self.get_request(request_id)
            officer = self._officer_for(request, officer_id)
            self._transition(request, RequestStatus.GRANTED)
            policy = self.get_policy(request.policy_id)
            grant = ExemptionGrant(
                student_id=request.student_id,
                course_id=policy.target_course_id,
                policy_id=policy.policy_id,
                request_id=request.request_id,
                granted_by=officer.id,
                granted_at=self._clock(),
            )
            payload = grant.canonical_bytes()
            ledger = self.engine.ledger
            network = self.engine.network
            height = ledger.next_height()
            outcome = network.propose(
                payload, network.proposer_for(height), height, kind=PROPOSAL_GRANT
            )
            if not outcome.approved or outcome.certificate is None:
                raise ConsensusError("the consortium did not certify the grant")
            ledger.append_block(
                [GrantRecord(grant=grant)],
                outcome.certificate,
                self.engine.membership,
                timestamp=self._clock(),
            )
            self._persist(replace(request, status=RequestStatus.GRANTED))
            return grant
