"""FastAPI application over one platform instance.

Every endpoint delegates to a core service and inherits its contract; the
gateway itself only parses/encodes payloads, authenticates sessions, and
enforces the role matrix documented in docs/api.md. All errors — including
body-validation failures — render as the ApiError schema.
"""

from __future__ import annotations

import base64
import binascii
from typing import Any, Dict, List, Optional

from fastapi import Depends, FastAPI, Request, Security
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse
from fastapi.security import HTTPAuthorizationCredentials, HTTPBearer

from ..errors import AuthorizationError, PlatformError, ValidationError
from ..exemption import ExemptionPolicy
from ..identity import Identity, Role
from ..model import CourseMetadata, STACKED, STANDALONE
from ..node import Platform
from ..store import SubmissionStatus
from . import schemas
from .auth import AuthManager

_bearer = HTTPBearer(auto_error=False)


def _hex_bytes(text: str, what: str) -> bytes:
    try:
        return bytes.fromhex(text)
    except ValueError:
        raise ValidationError(f"{what} is not valid hex") from None


def _b64_bytes(text: str, what: str) -> bytes:
    try:
        return base64.b64decode(text, validate=True)
    except (binascii.Error, ValueError):
        raise ValidationError(f"{what} is not valid base64") from None


def _course_metadata(course: schemas.CourseIn) -> CourseMetadata:
    track: Dict[str, Any] = {"kind": STANDALONE}
    if course.stack_id is not None:
        track = {"kind": STACKED, "stack_id": course.stack_id}
    try:
        return CourseMetadata.from_json(
            {
                "course_id": course.course_id,
                "title": course.title,
                "provider": course.provider,
                "credits": course.credits,
                "completion_date": course.completion_date,
                "track": track,
            }
        )
    except ValueError as exc:
        raise ValidationError(f"invalid course metadata: {exc}") from None


def _identity_json(identity: Identity) -> Dict[str, Any]:
    return {
        "id": identity.id,
        "role": identity.role.value,
        "institution": identity.institution,
        "public_key": identity.public_key.hex(),
    }


def create_app(platform: Platform) -> FastAPI:
    app = FastAPI(
        title="Micro-credential consortium gateway",
        version="0.1.0",
        docs_url="/docs",
    )
    auth = AuthManager(platform.registry, clock=platform.clock)

    # -- error schema --------------------------------------------------

    def _error_body(status: int, code: str, message: str, detail: Any = None) -> Dict[str, Any]:
        body: Dict[str, Any] = {"status": status, "code": code, "message": message}
        if detail is not None:
            body["detail"] = detail
        return body

    @app.exception_handler(PlatformError)
    async def handle_platform_error(request: Request, exc: PlatformError) -> JSONResponse:
        return JSONResponse(
            status_code=exc.http_status,
            content=_error_body(exc.http_status, exc.code, str(exc), exc.detail),
        )

    @app.exception_handler(RequestValidationError)
    async def handle_request_validation(
        request: Request, exc: RequestValidationError
    ) -> JSONResponse:
        message = "; ".join(
            ".".join(str(part) for part in err["loc"]) + ": " + err["msg"]
            for err in exc.errors()
        )
        return JSONResponse(
            status_code=422,
            content=_error_body(422, "validation_error", message),
        )

    @app.exception_handler(Exception)
    async def handle_unexpected(request: Request, exc: Exception) -> JSONResponse:
        return JSONResponse(
            status_code=500,
            content=_error_body(500, "internal_error", "unexpected server error"),
        )

    # -- authentication --------------------------------------------------

    def current_identity(
        credentials: Optional[HTTPAuthorizationCredentials] = Security(_bearer),
    ) -> Identity:
        token = credentials.credentials if credentials else None
        return auth.authenticate(token)

    def require(*roles: Role):
        def dependency(identity: Identity = Depends(current_identity)) -> Identity:
            if identity.role not in roles:
                raise AuthorizationError(
                    f"{identity.role.value} may not call this endpoint"
                )
            return identity

        return dependency

    # -- identity ----------------------------------------------------------

    @app.post("/register", status_code=201, response_model=schemas.RegisterResponse)
    def register(body: schemas.RegisterRequest) -> Dict[str, Any]:
        public_key = (
            _hex_bytes(body.public_key, "public_key")
            if body.public_key is not None
            else None
        )
        identity, wallet, private_seed = platform.register_student(
            body.name, body.institution, public_key
        )
        return {
            "identity": _identity_json(identity),
            "wallet": wallet.to_json(),
            "private_key": private_seed.hex() if private_seed else None,
        }

    @app.post("/login")
    def login(body: schemas.LoginRequest) -> Dict[str, Any]:
        if body.signature is None:
            nonce = auth.issue_challenge(body.id)
            return {"challenge": nonce.hex()}
        signature = _hex_bytes(body.signature, "signature")
        session = auth.redeem_challenge(body.id, signature)
        return session.to_json()

    # -- submissions ---------------------------------------------------------

    @app.post("/submissions", status_code=201, response_model=schemas.SubmissionOut)
    def create_submission(
        body: schemas.SubmissionCreate,
        identity: Identity = Depends(require(Role.STUDENT)),
    ) -> Dict[str, Any]:
        metadata = _course_metadata(body.course)
        documents = [
            _b64_bytes(doc.content_b64, f"documents[{i}]")
            for i, doc in enumerate(body.documents)
        ]
        submission = platform.store.stage_submission(identity, documents, metadata)
        return submission.to_json()

    @app.get("/submissions", response_model=List[schemas.SubmissionOut])
    def list_submissions(
        status: Optional[str] = None,
        identity: Identity = Depends(
            require(Role.STUDENT, Role.INSTITUTION_ADMIN)
        ),
    ) -> List[Dict[str, Any]]:
        wanted: Optional[SubmissionStatus] = None
        if status is not None:
            try:
                wanted = SubmissionStatus(status)
            except ValueError:
                raise ValidationError(f"unknown submission status: {status}") from None
        submissions = platform.store.list_submissions(wanted)
        if identity.role is Role.STUDENT:
            submissions = [s for s in submissions if s.applicant_id == identity.id]
        return [s.to_json() for s in submissions]

    @app.post(
        "/submissions/{submission_id}/decision",
        response_model=schemas.SubmissionOut,
    )
    def decide_submission(
        submission_id: str,
        body: schemas.DecisionRequest,
        identity: Identity = Depends(require(Role.INSTITUTION_ADMIN)),
    ) -> Dict[str, Any]:
        try:
            decision = SubmissionStatus(body.decision)
        except ValueError:
            raise ValidationError(
                "decision must be Verified or Rejected"
            ) from None
        submission = platform.store.set_verification(submission_id, decision, identity)
        return submission.to_json()

    # -- certification ---------------------------------------------------------

    @app.post("/certify/{submission_id}", response_model=schemas.ReceiptOut)
    def certify(
        submission_id: str,
        body: Optional[schemas.CertifyRequest] = None,
        identity: Identity = Depends(require(Role.INSTITUTION_ADMIN)),
    ) -> Dict[str, Any]:
        applicant_seed = None
        if body is not None and body.applicant_private_key is not None:
            applicant_seed = _hex_bytes(
                body.applicant_private_key, "applicant_private_key"
            )
        receipt = platform.certify(
            submission_id, identity.id, applicant_private_key=applicant_seed
        )
        return receipt.to_json()

    @app.get("/wallets/{owner_id}", response_model=schemas.WalletOut)
    def wallet(
        owner_id: str,
        identity: Identity = Depends(current_identity),
    ) -> Dict[str, Any]:
        if identity.role is not Role.INSTITUTION_ADMIN and identity.id != owner_id:
            raise AuthorizationError("wallets are visible to their owner and admins")
        return platform.wallet_of(owner_id).to_json()

    @app.get("/verify/{reference}", response_model=schemas.VerifyOut)
    def verify(reference: str) -> Dict[str, Any]:
        result = platform.engine.verify_certificate(
            _hex_bytes(reference, "reference")
        )
        return result.to_json()

    # -- exemptions ------------------------------------------------------------

    @app.post("/policies", status_code=201, response_model=schemas.PolicyOut)
    def create_policy(
        body: schemas.PolicyCreate,
        identity: Identity = Depends(require(Role.INSTITUTION_ADMIN)),
    ) -> Dict[str, Any]:
        policy = ExemptionPolicy.from_json(body.model_dump())
        return platform.exemptions.add_policy(policy, identity.id).to_json()

    @app.get("/policies", response_model=List[schemas.PolicyOut])
    def list_policies(
        identity: Identity = Depends(current_identity),
    ) -> List[Dict[str, Any]]:
        return [p.to_json() for p in platform.exemptions.list_policies()]

    @app.post("/exemptions", status_code=201, response_model=schemas.RequestOut)
    def create_exemption(
        body: schemas.ExemptionCreate,
        identity: Identity = Depends(require(Role.STUDENT)),
    ) -> Dict[str, Any]:
        tokens = [
            _hex_bytes(token, f"token_ids[{i}]")
            for i, token in enumerate(body.token_ids)
        ]
        request = platform.exemptions.submit_request(
            identity.id, body.policy_id, tokens
        )
        return request.to_json()

    @app.get("/exemptions", response_model=List[schemas.RequestOut])
    def list_exemptions(
        identity: Identity = Depends(
            require(Role.STUDENT, Role.INSTITUTION_ADMIN)
        ),
    ) -> List[Dict[str, Any]]:
        if identity.role is Role.STUDENT:
            requests = platform.exemptions.list_requests(student_id=identity.id)
        else:
            requests = platform.exemptions.list_requests(
                institution=identity.institution
            )
        return [r.to_json() for r in requests]

    def _visible_request(request_id: str, identity: Identity) -> Dict[str, Any]:
        request = platform.exemptions.get_request(request_id)
        if identity.role is Role.STUDENT and request.student_id != identity.id:
            raise AuthorizationError("exemption requests are visible to their owner")
        if identity.role is Role.INSTITUTION_ADMIN:
            policy = platform.exemptions.get_policy(request.policy_id)
            if policy.institution != identity.institution:
                raise AuthorizationError(
                    "exemption requests are visible to the policy's institution"
                )
        return request.to_json()

    @app.get("/exemptions/{request_id}", response_model=schemas.RequestOut)
    def get_exemption(
        request_id: str,
        identity: Identity = Depends(
            require(Role.STUDENT, Role.INSTITUTION_ADMIN)
        ),
    ) -> Dict[str, Any]:
        return _visible_request(request_id, identity)

    @app.post("/exemptions/{request_id}/criteria", response_model=schemas.RequestOut)
    def issue_criteria(
        request_id: str,
        body: schemas.CriteriaRequest,
        identity: Identity = Depends(require(Role.INSTITUTION_ADMIN)),
    ) -> Dict[str, Any]:
        request = platform.exemptions.issue_criteria(
            request_id, identity.id, body.description
        )
        return request.to_json()

    @app.post("/exemptions/{request_id}/fulfill", response_model=schemas.RequestOut)
    def fulfill(
        request_id: str,
        identity: Identity = Depends(require(Role.INSTITUTION_ADMIN)),
    ) -> Dict[str, Any]:
        request = platform.exemptions.record_fulfillment(request_id, identity.id)
        return request.to_json()

    @app.post("/exemptions/{request_id}/grant", response_model=schemas.GrantResponse)
    def grant(
        request_id: str,
        identity: Identity = Depends(require(Role.INSTITUTION_ADMIN)),
    ) -> Dict[str, Any]:
        granted = platform.exemptions.grant(request_id, identity.id)
        request = platform.exemptions.get_request(request_id)
        return {"request": request.to_json(), "grant": granted.to_json()}

    @app.post("/exemptions/{request_id}/deny", response_model=schemas.RequestOut)
    def deny(
        request_id: str,
        identity: Identity = Depends(require(Role.INSTITUTION_ADMIN)),
    ) -> Dict[str, Any]:
        request = platform.exemptions.deny(request_id, identity.id)
        return request.to_json()

    return app
