"""Permissioned consortium network: authority nodes exchange Propose/Vote/
Commit messages over a simulated tick network and produce quorum certificates
that gate public-chain appends.

Protocol: single-shot, height-locked vote certificates. The proposer
broadcasts a proposal, validators answer with signed votes (at most one
proposal per height per honest node, re-votes for the same proposal are
idempotent), the proposer assembles the certificate and broadcasts Commit.
A round that misses quorum within the timeout is Rejected; retries rotate
the proposer but burned height locks are never released, so safety always
wins over liveness.

Fault injection: per-message drop probability, bounded random delay, and
byzantine members (crash / vote-refusal / equivocation), all driven by one
seeded RNG so a trace is a pure function of (scenario, seed).
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Dict, List, Mapping, Optional, Sequence, Tuple

from datetime import date
from decimal import Decimal

from . import crypto, wire
from .crypto import DigitalSignature, DualSignature, KeyPair
from .errors import AuthorizationError, ValidationError
from .identity import Identity, IdentityRegistry, PermissionedNetwork, Role
from .ledger import QuorumCertificate
from .model import (
    CertificationTransaction,
    CourseMetadata,
    ExemptionGrant,
    SignedCertificationTransaction,
)
from .util import canonical_json, parse_ts

DEFAULT_TIMEOUT_TICKS = 20

PROPOSAL_CERT = "cert"
PROPOSAL_GRANT = "grant"


class MessageKind(str, Enum):
    PROPOSE = "Propose"
    VOTE = "Vote"
    COMMIT = "Commit"


class ByzantineMode(str, Enum):
    CRASH = "crash"
    REFUSE = "refuse"
    EQUIVOCATE = "equivocate"


class Decision(str, Enum):
    APPROVED = "Approved"
    REJECTED = "Rejected"


@dataclass(frozen=True)
class FaultConfig:
    drop_rate: float = 0.0
    max_delay: int = 0
    byzantine_nodes: Mapping[str, ByzantineMode] = field(default_factory=dict)
    rng_seed: int = 0

    def __post_init__(self) -> None:
        if not 0.0 <= self.drop_rate <= 1.0:
            raise ValidationError("drop_rate must lie in [0, 1]")
        if self.max_delay < 0:
            raise ValidationError("max_delay must be non-negative")

    @classmethod
    def from_json(cls, data: Mapping[str, Any], seed: Optional[int] = None) -> "FaultConfig":
        byzantine = {
            node_id: ByzantineMode(mode)
            for node_id, mode in dict(data.get("byzantine", {})).items()
        }
        rng_seed = data.get("rng_seed", 0) if seed is None else seed
        return cls(
            drop_rate=float(data.get("drop_rate", 0.0)),
            max_delay=int(data.get("max_delay", 0)),
            byzantine_nodes=byzantine,
            rng_seed=int(rng_seed),
        )

    def to_json(self) -> Dict[str, Any]:
        return {
            "drop_rate": self.drop_rate,
            "max_delay": self.max_delay,
            "byzantine": {
                node_id: mode.value
                for node_id, mode in sorted(self.byzantine_nodes.items())
            },
            "rng_seed": self.rng_seed,
        }


@dataclass(frozen=True)
class NetMessage:
    from_id: str
    to_id: str
    kind: MessageKind
    payload: bytes
    deliver_at: int
    seq: int


@dataclass(frozen=True)
class ConsensusOutcome:
    transaction_hash: bytes
    decision: Decision
    certificate: Optional[QuorumCertificate]
    round: int

    @property
    def approved(self) -> bool:
        return self.decision is Decision.APPROVED


def encode_proposal(kind: str, height: int, payload: bytes) -> bytes:
    return wire.encode_fields(wire.encode_str(kind), wire.encode_u64(height), payload)


def decode_proposal(data: bytes) -> Tuple[str, int, bytes]:
    cur = wire.Cursor(data)
    kind = cur.text()
    height = cur.u64()
    payload = cur.field()
    cur.expect_done()
    return kind, height, payload


def proposal_digest(kind: str, payload: bytes) -> Optional[bytes]:
    """Recompute the hash a validator signs; None if the payload is garbage."""
    try:
        if kind == PROPOSAL_CERT:
            signed = SignedCertificationTransaction.from_bytes(payload)
            return crypto.hash_content(signed.tx.canonical_bytes())
        if kind == PROPOSAL_GRANT:
            _grant_from_canonical(payload)
            return crypto.hash_content(payload)
    except Exception:
        return None
    return None


def encode_vote(height: int, proposal_hash: bytes, vote: DigitalSignature) -> bytes:
    return wire.encode_fields(
        wire.encode_u64(height),
        proposal_hash,
        wire.encode_str(vote.signer_id),
        vote.signature,
    )


def decode_vote(data: bytes) -> Tuple[int, bytes, DigitalSignature]:
    cur = wire.Cursor(data)
    height = cur.u64()
    proposal_hash = cur.field()
    signer = cur.text()
    signature = cur.field()
    cur.expect_done()
    return height, proposal_hash, DigitalSignature(signer_id=signer, signature=signature)


def encode_commit(cert: QuorumCertificate, proposal: bytes) -> bytes:
    votes = [
        wire.encode_fields(wire.encode_str(v.signer_id), v.signature)
        for v in cert.votes
    ]
    return wire.encode_fields(
        cert.proposal_hash,
        wire.encode_u64(cert.height),
        wire.encode_list(votes),
        proposal,
    )


def decode_commit(data: bytes) -> Tuple[QuorumCertificate, bytes]:
    cur = wire.Cursor(data)
    proposal_hash = cur.field()
    height = cur.u64()
    votes = []
    for item in cur.list():
        inner = wire.Cursor(item)
        signer = inner.text()
        signature = inner.field()
        inner.expect_done()
        votes.append(DigitalSignature(signer_id=signer, signature=signature))
    proposal = cur.field()
    cur.expect_done()
    cert = QuorumCertificate(
        proposal_hash=proposal_hash, height=height, votes=tuple(votes)
    )
    return cert, proposal


@dataclass
class _CollectState:
    proposal_hash: bytes
    proposal: bytes
    votes: "Dict[str, DigitalSignature]" = field(default_factory=dict)
    certificate: Optional[QuorumCertificate] = None


Outgoing = Tuple[str, MessageKind, bytes]


class ConsensusNode:
    """One authority node: an actor consuming an ordered inbox."""

    def __init__(
        self,
        identity: Identity,
        keypair: KeyPair,
        membership: PermissionedNetwork,
        registry: IdentityRegistry,
        mode: Optional[ByzantineMode] = None,
    ) -> None:
        self.identity = identity
        self.keypair = keypair
        self.membership = membership
        self.registry = registry
        self.mode = mode
        self.voted: Dict[int, bytes] = {}
        self.committed: Dict[int, bytes] = {}
        self.committed_payloads: Dict[int, bytes] = {}
        self.collecting: Dict[int, _CollectState] = {}
        self.observations: List[Dict[str, Any]] = []

    @property
    def node_id(self) -> str:
        return self.identity.id

    def _observe(self, event: str, **fields: Any) -> None:
        self.observations.append({"event": event, "node": self.node_id, **fields})

    def _peers(self) -> List[str]:
        return [m for m in sorted(self.membership.member_ids()) if m != self.node_id]

    # -- validation ----------------------------------------------------

    def validate_for_vote(self, kind: str, payload: bytes, height: int) -> Optional[bytes]:
        """Return the proposal hash this node is willing to sign, or None."""
        if height in self.committed:
            return None
        digest = proposal_digest(kind, payload)
        if digest is None:
            return None
        if height in self.voted and self.voted[height] != digest:
            return None
        if kind == PROPOSAL_CERT:
            try:
                signed = SignedCertificationTransaction.from_bytes(payload)
            except Exception:
                return None
            applicant = self.registry.find(signed.tx.applicant_id)
            issuer = self.registry.find(signed.tx.issuer_id)
            if applicant is None or issuer is None:
                return None
            if not signed.verify(issuer.public_key, applicant.public_key):
                return None
        elif kind == PROPOSAL_GRANT:
            try:
                grant = _grant_from_canonical(payload)
            except Exception:
                return None
            officer = self.registry.find(grant.granted_by)
            if self.registry.find(grant.student_id) is None:
                return None
            if officer is None or officer.role is not Role.INSTITUTION_ADMIN:
                return None
        else:
            return None
        return digest

    def _sign_vote(self, proposal_hash: bytes, height: int) -> DigitalSignature:
        message = QuorumCertificate.vote_message(proposal_hash, height)
        return crypto.sign(message, self.keypair, self.node_id)

    # -- proposer ------------------------------------------------------

    def initiate(self, kind: str, height: int, payload: bytes) -> List[Outgoing]:
        if self.mode is ByzantineMode.CRASH:
            return []
        digest = proposal_digest(kind, payload)
        if digest is None:
            digest = crypto.hash_content(payload)
        state = _CollectState(proposal_hash=digest, proposal=encode_proposal(kind, height, payload))
        self.collecting[height] = state
        out: List[Outgoing] = []
        peers = self._peers()
        if self.mode is ByzantineMode.EQUIVOCATE and payload:
            # Conflicting variants to different peers; the corrupted copy
            # fails signature checks so honest receivers refuse to vote.
            corrupted = payload[:-1] + bytes([payload[-1] ^ 0x01])
            variant = encode_proposal(kind, height, corrupted)
            for index, peer in enumerate(peers):
                out.append((peer, MessageKind.PROPOSE, state.proposal if index % 2 == 0 else variant))
        else:
            for peer in peers:
                out.append((peer, MessageKind.PROPOSE, state.proposal))
        # The proposer's own vote never crosses the network.
        own_hash = self.validate_for_vote(kind, payload, height)
        if self.mode is ByzantineMode.EQUIVOCATE:
            own_hash = digest
        if own_hash is not None and self.mode is not ByzantineMode.REFUSE:
            self.voted.setdefault(height, own_hash)
            state.votes[self.node_id] = self._sign_vote(own_hash, height)
        out.extend(self._try_assemble(height))
        return out

    # -- inbox ---------------------------------------------------------

    def handle(self, msg: NetMessage) -> List[Outgoing]:
        if self.mode is ByzantineMode.CRASH:
            return []
        if msg.kind is MessageKind.PROPOSE:
            return self._handle_propose(msg)
        if msg.kind is MessageKind.VOTE:
            return self._handle_vote(msg)
        if msg.kind is MessageKind.COMMIT:
            return self._handle_commit(msg)
        return []

    def _handle_propose(self, msg: NetMessage) -> List[Outgoing]:
        try:
            kind, height, payload = decode_proposal(msg.payload)
        except Exception:
            return []
        if self.mode is ByzantineMode.REFUSE:
            return []
        if self.mode is ByzantineMode.EQUIVOCATE:
            digest = proposal_digest(kind, payload) or crypto.hash_content(payload)
            conflicting = bytes([digest[0] ^ 0xFF]) + digest[1:]
            out: List[Outgoing] = [
                (msg.from_id, MessageKind.VOTE, encode_vote(height, digest, self._sign_vote(digest, height)))
            ]
            for peer in self._peers():
                if peer != msg.from_id:
                    out.append(
                        (peer, MessageKind.VOTE, encode_vote(height, conflicting, self._sign_vote(conflicting, height)))
                    )
            return out
        proposal_hash = self.validate_for_vote(kind, payload, height)
        if proposal_hash is None:
            self._observe("vote_withheld", height=height)
            return []
        self.voted[height] = proposal_hash
        self._observe("vote", height=height, proposal=proposal_hash.hex())
        vote = self._sign_vote(proposal_hash, height)
        return [(msg.from_id, MessageKind.VOTE, encode_vote(height, proposal_hash, vote))]

    def _handle_vote(self, msg: NetMessage) -> List[Outgoing]:
        try:
            height, proposal_hash, vote = decode_vote(msg.payload)
        except Exception:
            return []
        state = self.collecting.get(height)
        if state is None or state.certificate is not None:
            return []
        if proposal_hash != state.proposal_hash:
            return []
        if vote.signer_id != msg.from_id or not self.membership.is_member(vote.signer_id):
            return []
        message = QuorumCertificate.vote_message(proposal_hash, height)
        public_key = self.membership.public_key_of(vote.signer_id)
        if public_key is None or not crypto.verify(message, vote.signature, public_key):
            return []
        state.votes.setdefault(vote.signer_id, vote)
        return self._try_assemble(height)

    def _try_assemble(self, height: int) -> List[Outgoing]:
        state = self.collecting.get(height)
        if state is None or state.certificate is not None:
            return []
        if len(state.votes) < self.membership.quorum:
            return []
        cert = QuorumCertificate(
            proposal_hash=state.proposal_hash,
            height=height,
            votes=tuple(state.votes.values()),
        )
        state.certificate = cert
        self._commit(height, state.proposal_hash, state.proposal)
        commit_payload = encode_commit(cert, state.proposal)
        return [(peer, MessageKind.COMMIT, commit_payload) for peer in self._peers()]

    def _handle_commit(self, msg: NetMessage) -> List[Outgoing]:
        try:
            cert, proposal = decode_commit(msg.payload)
        except Exception:
            return []
        try:
            kind, height, payload = decode_proposal(proposal)
        except Exception:
            return []
        if cert.height != height:
            return []
        digest = proposal_digest(kind, payload)
        if digest is None or digest != cert.proposal_hash:
            return []
        if cert.problem_against(self.membership) is not None:
            return []
        self._commit(height, cert.proposal_hash, proposal)
        return []

    def _commit(self, height: int, proposal_hash: bytes, proposal: bytes) -> None:
        existing = self.committed.get(height)
        if existing is not None:
            if existing != proposal_hash:
                self._observe(
                    "conflicting_commit_ignored",
                    height=height,
                    kept=existing.hex(),
                    ignored=proposal_hash.hex(),
                )
            return
        self.committed[height] = proposal_hash
        self.committed_payloads[height] = proposal
        self._observe("commit", height=height, proposal=proposal_hash.hex())

    def commit_log(self) -> Dict[str, str]:
        return {str(h): self.committed[h].hex() for h in sorted(self.committed)}


def _grant_from_canonical(data: bytes) -> ExemptionGrant:
    cur = wire.Cursor(data)
    student_id = cur.text()
    course_id = cur.text()
    policy_id = cur.text()
    request_id = cur.text()
    granted_by = cur.text()
    granted_at = parse_ts(cur.text())
    cur.expect_done()
    return ExemptionGrant(
        student_id=student_id,
        course_id=course_id,
        policy_id=policy_id,
        request_id=request_id,
        granted_by=granted_by,
        granted_at=granted_at,
    )


class SimNetwork:
    """Discrete-tick message bus over the consortium's nodes."""

    def __init__(
        self,
        membership: PermissionedNetwork,
        node_keys: Mapping[str, KeyPair],
        registry: IdentityRegistry,
        faults: Optional[FaultConfig] = None,
        timeout_ticks: int = DEFAULT_TIMEOUT_TICKS,
    ) -> None:
        self.membership = membership
        self.faults = faults if faults is not None else FaultConfig()
        for node_id in self.faults.byzantine_nodes:
            if not membership.is_member(node_id):
                raise ValidationError(f"byzantine node {node_id} is not a member")
        self.timeout_ticks = timeout_ticks
        self.rng = random.Random(self.faults.rng_seed)
        self.tick = 0
        self._seq = 0
        self.pending: List[NetMessage] = []
        self.events: List[Dict[str, Any]] = []
        self.round_of: Dict[int, int] = {}
        self.nodes: Dict[str, ConsensusNode] = {}
        for member in sorted(membership.members, key=lambda m: m.institution):
            if member.id not in node_keys:
                raise ValidationError(f"no signing key for node {member.id}")
            self.nodes[member.id] = ConsensusNode(
                identity=member,
                keypair=node_keys[member.id],
                membership=membership,
                registry=registry,
                mode=self.faults.byzantine_nodes.get(member.id),
            )

    # -- proposer policy -----------------------------------------------

    def members_by_institution(self) -> List[str]:
        return [
            m.id for m in sorted(self.membership.members, key=lambda m: m.institution)
        ]

    def proposer_for(self, height: int) -> str:
        members = self.members_by_institution()
        attempt = self.round_of.get(height, 0)
        return members[(height + attempt) % len(members)]

    # -- transport -----------------------------------------------------

    def _trace(self, event: str, **fields: Any) -> None:
        self.events.append({"event": event, "tick": self.tick, **fields})

    def _send(self, from_id: str, to_id: str, kind: MessageKind, payload: bytes) -> None:
        self._seq += 1
        seq = self._seq
        if self.faults.drop_rate > 0 and self.rng.random() < self.faults.drop_rate:
            self._trace("drop", seq=seq, **{"from": from_id, "to": to_id}, kind=kind.value)
            return
        delay = self.rng.randint(0, self.faults.max_delay) if self.faults.max_delay else 0
        deliver_at = self.tick + 1 + delay
        self._trace(
            "send",
            seq=seq,
            **{"from": from_id, "to": to_id},
            kind=kind.value,
            deliver_at=deliver_at,
        )
        self.pending.append(
            NetMessage(
                from_id=from_id,
                to_id=to_id,
                kind=kind,
                payload=payload,
                deliver_at=deliver_at,
                seq=seq,
            )
        )

    def _dispatch(self, from_id: str, outgoing: Sequence[Outgoing]) -> None:
        for to_id, kind, payload in outgoing:
            self._send(from_id, to_id, kind, payload)

    def _drain_observations(self, node: ConsensusNode) -> None:
        for observation in node.observations:
            self.events.append({**observation, "tick": self.tick})
        node.observations.clear()

    def step(self) -> None:
        self.tick += 1
        due = sorted(
            (m for m in self.pending if m.deliver_at <= self.tick),
            key=lambda m: m.seq,
        )
        self.pending = [m for m in self.pending if m.deliver_at > self.tick]
        for msg in due:
            self._trace(
                "deliver", seq=msg.seq, **{"from": msg.from_id, "to": msg.to_id}, kind=msg.kind.value
            )
            node = self.nodes[msg.to_id]
            outgoing = node.handle(msg)
            self._drain_observations(node)
            self._dispatch(msg.to_id, outgoing)

    # -- the consensus operation ----------------------------------------

    def propose(
        self,
        payload: bytes,
        proposer: str,
        height: int,
        kind: str = PROPOSAL_CERT,
    ) -> ConsensusOutcome:
        if not self.membership.is_member(proposer):
            raise AuthorizationError(f"{proposer} is not a consortium member")
        round_no = self.round_of.get(height, 0) + 1
        node = self.nodes[proposer]
        digest = proposal_digest(kind, payload)
        tx_hash = digest if digest is not None else crypto.hash_content(payload)
        self._trace(
            "propose",
            node=proposer,
            height=height,
            round=round_no,
            proposal=tx_hash.hex(),
        )
        outgoing = node.initiate(kind, height, payload)
        self._drain_observations(node)
        self._dispatch(proposer, outgoing)
        deadline = self.tick + self.timeout_ticks
        while self.tick < deadline and self.pending:
            self.step()
            state = node.collecting.get(height)
            if state is not None and state.certificate is not None and not self.pending:
                break
        state = node.collecting.get(height)
        certificate = state.certificate if state is not None else None
        if certificate is not None:
            outcome = ConsensusOutcome(
                transaction_hash=tx_hash,
                decision=Decision.APPROVED,
                certificate=certificate,
                round=round_no,
            )
        else:
            self.round_of[height] = round_no
            outcome = ConsensusOutcome(
                transaction_hash=tx_hash,
                decision=Decision.REJECTED,
                certificate=None,
                round=round_no,
            )
        self._trace(
            "outcome",
            height=height,
            round=round_no,
            decision=outcome.decision.value,
            transaction=tx_hash.hex(),
            votes=len(certificate.votes) if certificate is not None else 0,
        )
        return outcome

    def run_until_quiet(self, max_ticks: int = DEFAULT_TIMEOUT_TICKS) -> None:
        """Deliver whatever is still in flight (e.g. trailing Commits)."""
        deadline = self.tick + max_ticks
        while self.pending and self.tick < deadline:
            self.step()

    def honest_nodes(self) -> List[ConsensusNode]:
        return [n for n in self.nodes.values() if n.mode is None]

    def final_state_events(self) -> List[Dict[str, Any]]:
        states = []
        for node_id in sorted(self.nodes):
            commits = self.nodes[node_id].commit_log()
            digest = crypto.hash_content(canonical_json(commits).encode())
            states.append(
                {
                    "event": "final_state",
                    "node": node_id,
                    "byzantine": (self.nodes[node_id].mode.value if self.nodes[node_id].mode else None),
                    "commits": commits,
                    "digest": digest.hex(),
                }
            )
        return states


@dataclass(frozen=True)
class TxSpec:
    course_id: str
    title: str
    credits: str
    applicant_registered: bool
    tamper_signature: bool

    @classmethod
    def from_json(cls, data: Mapping[str, Any], index: int) -> "TxSpec":
        course_id = str(data.get("course_id", f"course-{index}"))
        return cls(
            course_id=course_id,
            title=str(data.get("title", f"Course {course_id}")),
            credits=str(data.get("credits", "3")),
            applicant_registered=bool(data.get("applicant_registered", True)),
            tamper_signature=bool(data.get("tamper_signature", False)),
        )


@dataclass(frozen=True)
class SimulationScenario:
    institutions: Tuple[str, ...]
    faults: FaultConfig
    transactions: Tuple[TxSpec, ...]
    quorum_override: Optional[int] = None
    timeout_ticks: int = DEFAULT_TIMEOUT_TICKS

    @classmethod
    def from_json(cls, data: Mapping[str, Any]) -> "SimulationScenario":
        institutions = tuple(str(i) for i in data.get("institutions", ()))
        if len(institutions) < 1:
            raise ValidationError("scenario needs at least one institution")
        if len(set(institutions)) != len(institutions):
            raise ValidationError("institutions must be distinct")
        seed = data.get("seed")
        faults = FaultConfig.from_json(
            dict(data.get("faults", {})), seed=int(seed) if seed is not None else None
        )
        transactions = tuple(
            TxSpec.from_json(entry, index)
            for index, entry in enumerate(data.get("transactions", ()))
        )
        if not transactions:
            raise ValidationError("scenario needs at least one transaction")
        quorum = data.get("quorum")
        return cls(
            institutions=institutions,
            faults=faults,
            transactions=transactions,
            quorum_override=int(quorum) if quorum is not None else None,
            timeout_ticks=int(data.get("timeout_ticks", DEFAULT_TIMEOUT_TICKS)),
        )

    def header_json(self) -> Dict[str, Any]:
        return {
            "event": "scenario",
            "institutions": list(self.institutions),
            "quorum": self.quorum_override,
            "faults": self.faults.to_json(),
            "timeout_ticks": self.timeout_ticks,
            "transactions": len(self.transactions),
        }


@dataclass
class SimulationTrace:
    header: Dict[str, Any]
    events: List[Dict[str, Any]]
    final_states: List[Dict[str, Any]]
    outcomes: List[ConsensusOutcome]

    def lines(self) -> List[Dict[str, Any]]:
        return [self.header, *self.events, *self.final_states]

    def to_jsonl(self) -> str:
        return "".join(canonical_json(line) + "\n" for line in self.lines())

    def honest_commit_logs(self) -> Dict[str, Dict[str, str]]:
        byzantine = set(self.header["faults"]["byzantine"])
        return {
            state["node"]: state["commits"]
            for state in self.final_states
            if state["node"] not in byzantine
        }

    def divergences(self) -> List[Tuple[str, str, str]]:
        """(height, node_a, node_b) triples where honest commits disagree."""
        logs = self.honest_commit_logs()
        found: List[Tuple[str, str, str]] = []
        node_ids = sorted(logs)
        for i, a in enumerate(node_ids):
            for b in node_ids[i + 1 :]:
                shared = set(logs[a]) & set(logs[b])
                for height in sorted(shared):
                    if logs[a][height] != logs[b][height]:
                        found.append((height, a, b))
        return found


def _build_sim_identities(
    scenario: SimulationScenario,
) -> Tuple[PermissionedNetwork, Dict[str, KeyPair], IdentityRegistry, List[Tuple[Identity, KeyPair]], List[Tuple[Identity, KeyPair]]]:
    seed_bytes = wire.encode_u64(scenario.faults.rng_seed)
    node_keys: Dict[str, KeyPair] = {}
    members = []
    registry = IdentityRegistry()
    admins: List[Tuple[Identity, KeyPair]] = []
    for institution in sorted(scenario.institutions):
        node_id = f"auth-{institution}"
        keypair = crypto.generate_keypair(
            crypto.derive_seed(b"sim-node", seed_bytes, institution.encode())
        )
        node_keys[node_id] = keypair
        members.append(
            Identity(
                id=node_id,
                role=Role.AUTHORITY_NODE,
                institution=institution,
                public_key=keypair.public_key,
            )
        )
        admin_key = crypto.generate_keypair(
            crypto.derive_seed(b"sim-admin", seed_bytes, institution.encode())
        )
        admin = Identity(
            id=f"admin-{institution}",
            role=Role.INSTITUTION_ADMIN,
            institution=institution,
            public_key=admin_key.public_key,
        )
        registry.add(admin)
        admins.append((admin, admin_key))
    membership = PermissionedNetwork(
        members=tuple(members), quorum_override=scenario.quorum_override
    )
    students: List[Tuple[Identity, KeyPair]] = []
    for index, spec in enumerate(scenario.transactions):
        student_key = crypto.generate_keypair(
            crypto.derive_seed(b"sim-student", seed_bytes, wire.encode_u64(index))
        )
        student = Identity(
            id=f"student-{index}",
            role=Role.STUDENT,
            institution=sorted(scenario.institutions)[index % len(scenario.institutions)],
            public_key=student_key.public_key,
        )
        if spec.applicant_registered:
            registry.add(student)
        students.append((student, student_key))
    return membership, node_keys, registry, admins, students


def build_scripted_transaction(
    scenario: SimulationScenario,
    index: int,
    admins: Sequence[Tuple[Identity, KeyPair]],
    students: Sequence[Tuple[Identity, KeyPair]],
) -> SignedCertificationTransaction:
    spec = scenario.transactions[index]
    student, student_key = students[index]
    admin, admin_key = admins[index % len(admins)]
    metadata = CourseMetadata(
        course_id=spec.course_id,
        title=spec.title,
        provider=admin.institution,
        credits=Decimal(spec.credits),
        completion_date=date(2024, 1, 15),
    )
    tx = CertificationTransaction(
        applicant_id=student.id,
        issuer_id=admin.id,
        metadata=metadata,
        document_hashes=(crypto.hash_content(f"doc-{index}".encode()),),
        created_at=parse_ts("2024-01-01T00:00:00Z"),
    )
    signed = SignedCertificationTransaction.create(tx, admin_key, student_key)
    if spec.tamper_signature:
        bad = bytearray(signed.signatures.applicant_sig.signature)
        bad[0] ^= 0x01
        signed = SignedCertificationTransaction(
            tx=signed.tx,
            signatures=DualSignature(
                issuer_sig=signed.signatures.issuer_sig,
                applicant_sig=DigitalSignature(
                    signer_id=signed.signatures.applicant_sig.signer_id,
                    signature=bytes(bad),
                ),
            ),
            tx_hash=signed.tx_hash,
        )
    return signed


def run_simulation(scenario: SimulationScenario) -> SimulationTrace:
    """Execute a scripted consensus scenario; the trace is a pure function
    of (scenario, seed)."""
    membership, node_keys, registry, admins, students = _build_sim_identities(scenario)
    net = SimNetwork(
        membership=membership,
        node_keys=node_keys,
        registry=registry,
        faults=scenario.faults,
        timeout_ticks=scenario.timeout_ticks,
    )
    outcomes: List[ConsensusOutcome] = []
    height = 0
    for index in range(len(scenario.transactions)):
        signed = build_scripted_transaction(scenario, index, admins, students)
        proposer = net.proposer_for(height)
        outcome = net.propose(signed.to_bytes(), proposer, height, kind=PROPOSAL_CERT)
        outcomes.append(outcome)
        if outcome.approved:
            height += 1
    net.run_until_quiet()
    return SimulationTrace(
        header=scenario.header_json(),
        events=net.events,
        final_states=net.final_state_events(),
        outcomes=outcomes,
    )
