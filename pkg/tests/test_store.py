"""Content-addressed off-chain storage and the submission queue."""

import hashlib

import pytest

from microcred import crypto
from microcred.errors import (
    AuthorizationError,
    IntegrityError,
    NotFoundError,
    StateError,
    ValidationError,
)
from microcred.identity import Identity, Role
from microcred.node import admin_id_for
from microcred.store import ContentKind, OffchainStore, SubmissionStatus

from conftest import make_course


@pytest.fixture
def store(tmp_path):
    return OffchainStore(tmp_path / "store")


def _student(name="alice", institution="uni-a"):
    keypair = crypto.generate_keypair(crypto.derive_seed(name.encode()))
    return Identity(
        id=name, role=Role.STUDENT, institution=institution, public_key=keypair.public_key
    )


def _admin(institution="uni-a"):
    keypair = crypto.generate_keypair(crypto.derive_seed(institution.encode()))
    return Identity(
        id=admin_id_for(institution),
        role=Role.INSTITUTION_ADMIN,
        institution=institution,
        public_key=keypair.public_key,
    )


def test_address_is_the_content_hash(store):
    payload = b"some transcript"
    address = store.put(payload, ContentKind.PENDING_DOCUMENT)
    assert address == hashlib.sha256(payload).digest()
    assert store.get(address) == payload
    assert store.exists(address)
    assert store.kind_of(address) is ContentKind.PENDING_DOCUMENT


def test_put_is_idempotent(store):
    a = store.put(b"dup", ContentKind.PENDING_DOCUMENT)
    b = store.put(b"dup", ContentKind.PENDING_DOCUMENT)
    assert a == b
    assert store.object_count() == 1


def test_put_rejects_empty_payload(store):
    with pytest.raises(ValidationError):
        store.put(b"", ContentKind.PENDING_DOCUMENT)


def test_get_unknown_address(store):
    with pytest.raises(NotFoundError):
        store.get(b"\x00" * 32)


def test_get_detects_corrupted_bytes(store):
    address = store.put(b"original", ContentKind.PENDING_DOCUMENT)
    path = next(store.iter_object_paths())
    path.write_bytes(b"originaL")
    with pytest.raises(IntegrityError):
        store.get(address)


def test_audit_reports_every_corrupted_object(store):
    good = store.put(b"keep me", ContentKind.PENDING_DOCUMENT)
    store.put(b"damage me", ContentKind.CERTIFICATION_BLOCK)
    assert store.audit() == []
    for path in store.iter_object_paths():
        if path.name != good.hex():
            path.write_bytes(b"flipped")
    problems = store.audit()
    assert len(problems) == 1
    assert problems[0][0] != good.hex()


def test_discard_removes_object(store):
    address = store.put(b"staged", ContentKind.CERTIFICATION_BLOCK)
    store.discard(address)
    assert not store.exists(address)
    store.discard(address)  # second discard is a no-op


def test_objects_survive_reopen(tmp_path):
    store = OffchainStore(tmp_path / "store")
    address = store.put(b"durable", ContentKind.PENDING_DOCUMENT)
    reopened = OffchainStore(tmp_path / "store")
    assert reopened.get(address) == b"durable"
    assert reopened.kind_of(address) is ContentKind.PENDING_DOCUMENT


def test_stage_submission_records_documents(store):
    submission = store.stage_submission(
        _student(), [b"doc one", b"doc two"], make_course()
    )
    assert submission.status is SubmissionStatus.AWAITING_VERIFICATION
    assert submission.applicant_id == "alice"
    assert len(submission.document_hashes) == 2
    for digest in submission.document_hashes:
        assert store.get(digest)
    assert store.get_submission(submission.submission_id) == submission


def test_stage_submission_requires_student(store):
    with pytest.raises(AuthorizationError):
        store.stage_submission(_admin(), [b"doc"], make_course())


def test_stage_submission_requires_documents(store):
    with pytest.raises(ValidationError):
        store.stage_submission(_student(), [], make_course())


def test_submission_ids_are_sequential_and_unique(store):
    first = store.stage_submission(_student(), [b"a"], make_course("course-1"))
    second = store.stage_submission(_student("bob"), [b"b"], make_course("course-2"))
    assert first.submission_id != second.submission_id
    assert first.submission_id.startswith("sub-0001-")
    assert second.submission_id.startswith("sub-0002-")


def test_verification_decision_is_single_shot(store):
    submission = store.stage_submission(_student(), [b"doc"], make_course())
    decided = store.set_verification(
        submission.submission_id, SubmissionStatus.VERIFIED, _admin()
    )
    assert decided.status is SubmissionStatus.VERIFIED
    assert decided.decided_by == "admin-uni-a"
    with pytest.raises(StateError):
        store.set_verification(
            submission.submission_id, SubmissionStatus.REJECTED, _admin()
        )


def test_verification_decision_requires_admin(store):
    submission = store.stage_submission(_student(), [b"doc"], make_course())
    with pytest.raises(AuthorizationError):
        store.set_verification(
            submission.submission_id, SubmissionStatus.VERIFIED, _student("eve")
        )


def test_verification_decision_must_be_terminal_status(store):
    submission = store.stage_submission(_student(), [b"doc"], make_course())
    with pytest.raises(ValidationError):
        store.set_verification(
            submission.submission_id,
            SubmissionStatus.AWAITING_VERIFICATION,
            _admin(),
        )


def test_list_submissions_filters_by_status(store):
    sub_a = store.stage_submission(_student(), [b"a"], make_course("course-1"))
    store.stage_submission(_student("bob"), [b"b"], make_course("course-2"))
    store.set_verification(sub_a.submission_id, SubmissionStatus.VERIFIED, _admin())
    pending = store.list_submissions(SubmissionStatus.AWAITING_VERIFICATION)
    verified = store.list_submissions(SubmissionStatus.VERIFIED)
    assert [s.applicant_id for s in pending] == ["bob"]
    assert [s.applicant_id for s in verified] == ["alice"]
    assert len(store.list_submissions()) == 2


def test_submissions_survive_reopen(tmp_path):
    store = OffchainStore(tmp_path / "store")
    submission = store.stage_submission(_student(), [b"doc"], make_course())
    store.set_verification(submission.submission_id, SubmissionStatus.VERIFIED, _admin())
    reopened = OffchainStore(tmp_path / "store")
    replayed = reopened.get_submission(submission.submission_id)
    assert replayed.status is SubmissionStatus.VERIFIED
    assert replayed.course_metadata == submission.course_metadata
