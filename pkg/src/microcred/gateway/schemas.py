"""Request/response bodies for the HTTP gateway.

Hashes, signatures and keys travel as lowercase hex; document payloads as
base64; timestamps as RFC 3339 strings. Response models mirror the domain
objects' JSON forms field for field.
"""

from __future__ import annotations

from typing import Any, Dict, List, Optional

from pydantic import BaseModel, Field


# -- requests ----------------------------------------------------------------


class RegisterRequest(BaseModel):
    name: str = Field(min_length=1)
    institution: str = Field(min_length=1)
    public_key: Optional[str] = Field(
        default=None,
        description="Hex Ed25519 key; omit to have the gateway custody one.",
    )


class LoginRequest(BaseModel):
    id: str = Field(min_length=1)
    signature: Optional[str] = Field(
        default=None,
        description="Hex signature over the challenge; omit to request one.",
    )


class DocumentIn(BaseModel):
    name: Optional[str] = None
    content_b64: str = Field(min_length=1)


class CourseIn(BaseModel):
    course_id: str = Field(min_length=1)
    title: str = Field(min_length=1)
    provider: str = Field(min_length=1)
    credits: str = Field(min_length=1)
    completion_date: str = Field(min_length=1)
    stack_id: Optional[str] = None


class SubmissionCreate(BaseModel):
    course: CourseIn
    documents: List[DocumentIn] = Field(min_length=1)


class DecisionRequest(BaseModel):
    decision: str = Field(min_length=1)


class CertifyRequest(BaseModel):
    applicant_private_key: Optional[str] = Field(
        default=None,
        description="Hex seed for non-custodial applicants (never stored).",
    )


class PolicyCreate(BaseModel):
    policy_id: str = Field(min_length=1)
    institution: str = Field(min_length=1)
    target_course_id: str = Field(min_length=1)
    requirement: Dict[str, Any]
    assessment_template: str = ""
    min_total_credits: Optional[str] = None


class ExemptionCreate(BaseModel):
    policy_id: str = Field(min_length=1)
    token_ids: List[str] = Field(default_factory=list)


class CriteriaRequest(BaseModel):
    description: str = Field(min_length=1)


# -- responses ---------------------------------------------------------------


class IdentityOut(BaseModel):
    id: str
    role: str
    institution: str
    public_key: str


class TrackOut(BaseModel):
    kind: str
    stack_id: Optional[str] = None


class CourseOut(BaseModel):
    course_id: str
    title: str
    provider: str
    credits: str
    completion_date: str
    track: TrackOut


class TokenOut(BaseModel):
    token_id: str
    metadata: CourseOut
    anchor_hash: str
    issued_at: str


class WalletOut(BaseModel):
    owner: str
    tokens: List[TokenOut]


class RegisterResponse(BaseModel):
    identity: IdentityOut
    wallet: WalletOut
    private_key: Optional[str] = None


class ChallengeResponse(BaseModel):
    challenge: str


class SessionResponse(BaseModel):
    token: str
    identity_id: str
    role: str
    expires_at: str


class SubmissionTimestamps(BaseModel):
    created_at: str
    decided_at: Optional[str] = None


class SubmissionOut(BaseModel):
    submission_id: str
    applicant_id: str
    document_hashes: List[str]
    metadata: CourseOut
    status: str
    decided_by: Optional[str] = None
    timestamps: SubmissionTimestamps


class ReceiptOut(BaseModel):
    token_id: str
    anchor_hash: str
    block_height: int


class CheckOut(BaseModel):
    name: str
    passed: bool
    detail: str


class VerifyOut(BaseModel):
    authentic: bool
    checks: List[CheckOut]
    reason: Optional[str] = None


class PolicyOut(BaseModel):
    policy_id: str
    institution: str
    target_course_id: str
    requirement: Dict[str, Any]
    assessment_template: str
    min_total_credits: Optional[str] = None


class CriteriaOut(BaseModel):
    criteria_id: str
    request_id: str
    description: str
    issued_by: str
    issued_at: str


class RequestOut(BaseModel):
    request_id: str
    student_id: str
    policy_id: str
    presented_tokens: List[str]
    status: str
    created_at: str
    criteria: Optional[CriteriaOut] = None


class GrantOut(BaseModel):
    student_id: str
    course_id: str
    policy_id: str
    request_id: str
    granted_by: str
    granted_at: str


class GrantResponse(BaseModel):
    request: RequestOut
    grant: GrantOut


class ApiError(BaseModel):
    status: int
    code: str
    message: str
    detail: Optional[Any] = None
