"""Shared fixtures: a four-institution consortium on a temp directory.

Everything here runs with deterministic time and seeded randomness so
individual tests can assert on exact bytes when they need to.
"""

from datetime import date
from decimal import Decimal
from pathlib import Path
from typing import Optional, Tuple

import pytest

from microcred.engine import CertificationReceipt
from microcred.identity import Identity
from microcred.model import CourseMetadata
from microcred.node import NodeConfig, Platform, admin_id_for, consortium_init
from microcred.store import SubmissionStatus

INSTITUTIONS = ("uni-a", "uni-b", "uni-c", "uni-d")


def build_platform(
    data_dir: Path,
    seed: int = 0,
    institutions: Tuple[str, ...] = INSTITUTIONS,
    timeout_ticks: int = 20,
    faults=None,
) -> Platform:
    if not (data_dir / "membership.json").exists():
        consortium_init(data_dir, list(institutions), seed=seed)
    config = NodeConfig(
        data_dir=data_dir,
        sim_seed=seed,
        deterministic_time=True,
        timeout_ticks=timeout_ticks,
    )
    return Platform(config, faults=faults)


@pytest.fixture
def platform(tmp_path: Path) -> Platform:
    return build_platform(tmp_path / "consortium")


def make_course(
    course_id: str = "course-101",
    provider: str = "uni-a",
    credits: str = "3",
    stack_id: Optional[str] = None,
) -> CourseMetadata:
    return CourseMetadata(
        course_id=course_id,
        title=f"Course {course_id}",
        provider=provider,
        credits=Decimal(credits),
        completion_date=date(2024, 1, 15),
        stack_id=stack_id,
    )


def enroll(platform: Platform, name: str, institution: str = "uni-a") -> Identity:
    identity, _wallet, _seed = platform.register_student(name, institution)
    return identity


def verified_submission(
    platform: Platform,
    student: Identity,
    course: Optional[CourseMetadata] = None,
    document: bytes = b"transcript body",
) -> str:
    course = course or make_course(provider=student.institution)
    submission = platform.store.stage_submission(student, [document], course)
    admin = platform.registry.get(admin_id_for(student.institution))
    platform.store.set_verification(
        submission.submission_id, SubmissionStatus.VERIFIED, admin
    )
    return submission.submission_id


def certify_course(
    platform: Platform,
    student: Identity,
    course: Optional[CourseMetadata] = None,
    document: bytes = b"transcript body",
) -> CertificationReceipt:
    submission_id = verified_submission(platform, student, course, document)
    return platform.certify(submission_id, admin_id_for(student.institution))
