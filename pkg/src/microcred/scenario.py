"""Scripted scenario execution for the CLI.

Two scenario shapes share one entry point:

* consensus scenarios (a ``transactions`` list) replay scripted proposals
  through the in-process consortium and emit the full simulation trace;
* workflow scenarios (an ``actions`` list) drive the live platform end to
  end — register, submit, verify, certify, exemptions — against a real data
  directory, printing one line per action.

Both are pure functions of (scenario file, seed): the workflow runner uses
a logical clock and seed-derived keys so output is byte-stable.
"""

from __future__ import annotations

from dataclasses import dataclass
from datetime import date
from decimal import Decimal
from pathlib import Path
from typing import Any, Dict, List, Optional

from .consensus import FaultConfig
from .errors import PlatformError, ValidationError
from .exemption import ExemptionPolicy
from .model import CourseMetadata
from .node import NodeConfig, Platform, consortium_init
from .store import SubmissionStatus

AUTHENTIC = "authentic"
NOT_AUTHENTIC = "not_authentic"


@dataclass(frozen=True)
class WorkflowScenario:
    institutions: tuple
    seed: int
    timeout_ticks: int
    faults: Optional[FaultConfig]
    actions: tuple

    @classmethod
    def from_json(cls, data: Dict[str, Any]) -> "WorkflowScenario":
        institutions = tuple(str(i) for i in data.get("institutions", ()))
        if not institutions:
            raise ValidationError("workflow scenario needs institutions")
        if len(set(institutions)) != len(institutions):
            raise ValidationError("institutions must be distinct")
        actions = tuple(data.get("actions", ()))
        if not actions:
            raise ValidationError("workflow scenario needs at least one action")
        seed = int(data.get("seed", 0))
        faults = None
        if "faults" in data:
            faults = FaultConfig.from_json(dict(data["faults"]), seed=seed)
        return cls(
            institutions=institutions,
            seed=seed,
            timeout_ticks=int(data.get("timeout_ticks", 20)),
            faults=faults,
            actions=actions,
        )


@dataclass
class ScenarioResult:
    lines: List[str]
    failure: Optional[str] = None
    exit_code: int = 0

    @property
    def ok(self) -> bool:
        return self.failure is None


class _Labels:
    """Scenario variables: '$name' or '$name.field' in any string value."""

    def __init__(self) -> None:
        self._values: Dict[str, Any] = {}

    def bind(self, label: Optional[str], value: Any) -> None:
        if label:
            self._values[label] = value

    def resolve(self, text: str) -> str:
        if not text.startswith("$"):
            return text
        name, _, attr = text[1:].partition(".")
        if name not in self._values:
            raise ValidationError(f"unknown scenario label: ${name}")
        value = self._values[name]
        if attr:
            if not isinstance(value, dict) or attr not in value:
                raise ValidationError(f"label ${name} has no field {attr!r}")
            return str(value[attr])
        if isinstance(value, dict):
            raise ValidationError(f"label ${name} needs a field selector")
        return str(value)


def _course_from_json(data: Dict[str, Any]) -> CourseMetadata:
    return CourseMetadata(
        course_id=data["course_id"],
        title=data.get("title", data["course_id"]),
        provider=data["provider"],
        credits=Decimal(str(data.get("credits", "3"))),
        completion_date=date.fromisoformat(
            data.get("completion_date", "2024-01-15")
        ),
        stack_id=data.get("stack_id"),
    )


class WorkflowRunner:
    """Executes workflow actions against a platform, one output line each."""

    def __init__(self, platform: Platform) -> None:
        self.platform = platform
        self.labels = _Labels()
        self.lines: List[str] = []

    def _emit(self, line: str) -> None:
        self.lines.append(line)

    def run_action(self, action: Dict[str, Any]) -> None:
        op = action.get("op")
        label = action.get("label")
        expect_error = action.get("expect_error")
        handler = getattr(self, f"_op_{op}", None)
        if op is None or handler is None:
            raise ValidationError(f"unknown scenario op: {op!r}")
        try:
            handler(action, label)
        except PlatformError as err:
            if expect_error is None:
                raise
            if err.code != expect_error:
                raise ValidationError(
                    f"{op} failed with {err.code}, expected {expect_error}: {err}"
                ) from err
            self._emit(f"{op} → error {err.code}: {err}")
            return
        if expect_error is not None:
            raise ValidationError(f"{op} succeeded but expected {expect_error}")

    # -- actions ---------------------------------------------------------

    def _op_register(self, action: Dict[str, Any], label: Optional[str]) -> None:
        name = self.labels.resolve(action["name"])
        institution = action["institution"]
        identity, _, _ = self.platform.register_student(name, institution)
        self.labels.bind(label, name)
        self._emit(f"register {name} → {identity.role.value} @ {institution}")

    def _op_submit(self, action: Dict[str, Any], label: Optional[str]) -> None:
        student_id = self.labels.resolve(action["student"])
        student = self.platform.registry.get(student_id)
        course = _course_from_json(action["course"])
        documents = [doc.encode("utf-8") for doc in action["documents"]]
        submission = self.platform.store.stage_submission(student, documents, course)
        self.labels.bind(label, submission.submission_id)
        self._emit(
            f"submit {student_id} {course.course_id} → "
            f"{submission.submission_id} {submission.status.value}"
        )

    def _op_decide(self, action: Dict[str, Any], label: Optional[str]) -> None:
        submission_id = self.labels.resolve(action["submission"])
        admin_id = self.labels.resolve(action["admin"])
        admin = self.platform.registry.get(admin_id)
        decision = SubmissionStatus(action["decision"])
        submission = self.platform.store.set_verification(
            submission_id, decision, admin
        )
        self.labels.bind(label, submission_id)
        self._emit(f"decide {submission_id} → {submission.status.value} by {admin_id}")

    def _op_certify(self, action: Dict[str, Any], label: Optional[str]) -> None:
        submission_id = self.labels.resolve(action["submission"])
        issuer_id = self.labels.resolve(action["issuer"])
        receipt = self.platform.certify(submission_id, issuer_id)
        self.labels.bind(
            label,
            {
                "token": receipt.token_id.hex(),
                "anchor": receipt.anchor_hash.hex(),
                "height": str(receipt.block_height),
            },
        )
        self._emit(
            f"certify {submission_id} → token {receipt.token_id.hex()} "
            f"anchor {receipt.anchor_hash.hex()} height {receipt.block_height}"
        )

    def _op_wallet(self, action: Dict[str, Any], label: Optional[str]) -> None:
        student_id = self.labels.resolve(action["student"])
        wallet = self.platform.wallet_of(student_id)
        courses = ", ".join(t.metadata.course_id for t in wallet.tokens) or "-"
        self._emit(f"wallet {student_id} → {len(wallet.tokens)} token(s): {courses}")
        expected = action.get("expect_tokens")
        if expected is not None and len(wallet.tokens) != int(expected):
            raise ValidationError(
                f"wallet {student_id} holds {len(wallet.tokens)} tokens, "
                f"expected {expected}"
            )

    def _op_verify(self, action: Dict[str, Any], label: Optional[str]) -> None:
        reference = self.labels.resolve(action["reference"])
        result = self.platform.engine.verify_certificate(bytes.fromhex(reference))
        verdict = "Authentic" if result.authentic else "NotAuthentic"
        suffix = "" if result.authentic else f" ({result.failure_reason})"
        self._emit(f"verify {reference[:16]} → {verdict}{suffix}")
        expect = action.get("expect")
        if expect is not None:
            wanted = expect == AUTHENTIC
            if result.authentic is not wanted:
                raise ValidationError(
                    f"verify {reference[:16]} returned {verdict}, expected {expect}"
                )

    def _op_policy(self, action: Dict[str, Any], label: Optional[str]) -> None:
        officer_id = self.labels.resolve(action["officer"])
        policy = ExemptionPolicy.from_json(action["policy"])
        self.platform.exemptions.add_policy(policy, officer_id)
        self.labels.bind(label, policy.policy_id)
        self._emit(f"policy {policy.policy_id} @ {policy.institution}")

    def _op_exemption(self, action: Dict[str, Any], label: Optional[str]) -> None:
        student_id = self.labels.resolve(action["student"])
        policy_id = self.labels.resolve(action["policy"])
        tokens = [
            bytes.fromhex(self.labels.resolve(t)) for t in action.get("tokens", [])
        ]
        request = self.platform.exemptions.submit_request(
            student_id, policy_id, tokens
        )
        self.labels.bind(label, request.request_id)
        self._emit(
            f"exemption {student_id} {policy_id} → "
            f"{request.request_id} {request.status.value}"
        )

    def _op_criteria(self, action: Dict[str, Any], label: Optional[str]) -> None:
        request_id = self.labels.resolve(action["request"])
        officer_id = self.labels.resolve(action["officer"])
        request = self.platform.exemptions.issue_criteria(
            request_id, officer_id, action["description"]
        )
        self._emit(
            f"criteria {request_id} → {request.status.value} by {officer_id}"
        )

    def _op_fulfill(self, action: Dict[str, Any], label: Optional[str]) -> None:
        request_id = self.labels.resolve(action["request"])
        officer_id = self.labels.resolve(action["officer"])
        request = self.platform.exemptions.record_fulfillment(request_id, officer_id)
        self._emit(f"fulfill {request_id} → {request.status.value}")

    def _op_grant(self, action: Dict[str, Any], label: Optional[str]) -> None:
        request_id = self.labels.resolve(action["request"])
        officer_id = self.labels.resolve(action["officer"])
        grant = self.platform.exemptions.grant(request_id, officer_id)
        self._emit(
            f"grant {request_id} → Granted {grant.course_id} for {grant.student_id}"
        )

    def _op_deny(self, action: Dict[str, Any], label: Optional[str]) -> None:
        request_id = self.labels.resolve(action["request"])
        officer_id = self.labels.resolve(action["officer"])
        request = self.platform.exemptions.deny(request_id, officer_id)
        self._emit(f"deny {request_id} → {request.status.value}")

    def _op_audit(self, action: Dict[str, Any], label: Optional[str]) -> None:
        report = self.platform.ledger.validate_chain(self.platform.membership)
        problems = self.platform.store.audit()
        blocks = len(self.platform.ledger)
        objects = self.platform.store.object_count()
        if not report.valid:
            raise ValidationError(f"chain audit failed: {report.describe()}")
        if problems:
            address, problem = problems[0]
            raise ValidationError(f"store audit failed: {address}: {problem}")
        self._emit(
            f"audit → chain valid ({blocks} blocks), store clean ({objects} objects)"
        )


def run_workflow(scenario: WorkflowScenario, data_dir: Path) -> ScenarioResult:
    data_dir = Path(data_dir)
    if not (data_dir / "membership.json").exists():
        consortium_init(data_dir, list(scenario.institutions), seed=scenario.seed)
    config = NodeConfig(
        data_dir=data_dir,
        timeout_ticks=scenario.timeout_ticks,
        sim_seed=scenario.seed,
        deterministic_time=True,
    )
    platform = Platform(config, faults=scenario.faults)
    runner = WorkflowRunner(platform)
    for index, action in enumerate(scenario.actions):
        try:
            runner.run_action(dict(action))
        except PlatformError as err:
            runner.lines.append(f"{action.get('op')} → error {err.code}: {err}")
            return ScenarioResult(
                lines=runner.lines,
                failure=f"action {index + 1} ({action.get('op')}): {err}",
                exit_code=err.exit_code,
            )
    return ScenarioResult(lines=runner.lines)
