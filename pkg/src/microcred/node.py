"""Platform assembly: config, data directory layout, and module wiring.

One data directory holds everything a gateway/authority node owns:

    membership.json     consortium roster and vote quorum            (shared)
    keystore.jsonl      private signing seeds held by this operator  (secret)
    identities.jsonl    registered identities, append-only
    chain.jsonl         the public certification chain
    journal.jsonl       certification write-ahead journal
    store/              content-addressed off-chain store
    policies.jsonl      exemption policy catalogue
    requests.jsonl      exemption request history, latest-wins

``consortium_init`` bootstraps a fresh directory; ``Platform`` opens one,
replays the journal, and exposes the assembled services.
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass
from datetime import datetime
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Tuple

from . import crypto
from .consensus import FaultConfig, SimNetwork
from .crypto import KeyPair
from .engine import ChaincodeEngine, CertificationReceipt, Failpoint
from .errors import ConflictError, CryptoKeyError, NotFoundError, ValidationError
from .exemption import ExemptionService
from .identity import Identity, IdentityRegistry, PermissionedNetwork, Role
from .ledger import PublicLedger
from .model import FansWallet
from .store import OffchainStore
from .util import LogicalClock, append_jsonl, read_jsonl, utc_now

MEMBERSHIP_FILE = "membership.json"
KEYSTORE_FILE = "keystore.jsonl"
IDENTITIES_FILE = "identities.jsonl"
CHAIN_FILE = "chain.jsonl"
JOURNAL_FILE = "journal.jsonl"
STORE_DIR = "store"
POLICIES_FILE = "policies.jsonl"
REQUESTS_FILE = "requests.jsonl"


@dataclass(frozen=True)
class NodeConfig:
    """Everything `node run` needs, loadable from a JSON file."""

    data_dir: Path
    host: str = "127.0.0.1"
    port: int = 8000
    membership_file: Optional[Path] = None
    timeout_ticks: int = 20
    sim_seed: int = 0
    deterministic_time: bool = False

    def resolved_membership(self) -> Path:
        if self.membership_file is not None:
            return Path(self.membership_file)
        return Path(self.data_dir) / MEMBERSHIP_FILE

    def to_json(self) -> Dict[str, Any]:
        return {
            "data_dir": str(self.data_dir),
            "host": self.host,
            "port": self.port,
            "membership_file": (
                str(self.membership_file) if self.membership_file else None
            ),
            "timeout_ticks": self.timeout_ticks,
            "sim_seed": self.sim_seed,
            "deterministic_time": self.deterministic_time,
        }

    @classmethod
    def from_json(cls, data: Dict[str, Any], base: Optional[Path] = None) -> "NodeConfig":
        if "data_dir" not in data:
            raise ValidationError("node config needs a data_dir")
        root = Path(base) if base is not None else Path(".")
        raw_membership = data.get("membership_file")
        return cls(
            data_dir=root / data["data_dir"],
            host=data.get("host", "127.0.0.1"),
            port=int(data.get("port", 8000)),
            membership_file=root / raw_membership if raw_membership else None,
            timeout_ticks=int(data.get("timeout_ticks", 20)),
            sim_seed=int(data.get("sim_seed", 0)),
            deterministic_time=bool(data.get("deterministic_time", False)),
        )

    @classmethod
    def from_file(cls, path: Path) -> "NodeConfig":
        path = Path(path)
        data = json.loads(path.read_text(encoding="utf-8"))
        return cls.from_json(data, base=path.parent)


class Keystore:
    """Append-only map of identity id -> private signing seed."""

    def __init__(self, path: Path) -> None:
        self.path = Path(path)
        self._seeds: Dict[str, bytes] = {}
        for record in read_jsonl(self.path):
            self._seeds[record["id"]] = bytes.fromhex(record["seed"])

    def put(self, identity_id: str, seed: bytes) -> None:
        if self._seeds.get(identity_id) == seed:
            return
        append_jsonl(self.path, {"id": identity_id, "seed": seed.hex()})
        self._seeds[identity_id] = seed

    def has(self, identity_id: str) -> bool:
        return identity_id in self._seeds

    def keypair(self, identity_id: str) -> KeyPair:
        seed = self._seeds.get(identity_id)
        if seed is None:
            raise CryptoKeyError(f"no stored signing key for {identity_id}")
        return crypto.generate_keypair(seed)


class PersistentRegistry(IdentityRegistry):
    """Identity registry that replays and appends identities.jsonl."""

    def __init__(self, path: Path) -> None:
        super().__init__()
        self.path = Path(path)
        for record in read_jsonl(self.path):
            if record.get("op") == "remove":
                super().remove(record["id"])
            else:
                super().add(
                    Identity(
                        id=record["id"],
                        role=Role(record["role"]),
                        institution=record["institution"],
                        public_key=bytes.fromhex(record["public_key"]),
                    )
                )

    def add(self, identity: Identity) -> Identity:
        added = super().add(identity)
        append_jsonl(
            self.path,
            {
                "id": identity.id,
                "role": identity.role.value,
                "institution": identity.institution,
                "public_key": identity.public_key.hex(),
            },
        )
        return added

    def remove(self, identity_id: str) -> None:
        super().remove(identity_id)
        append_jsonl(self.path, {"id": identity_id, "op": "remove"})


def node_id_for(institution: str) -> str:
    return f"auth-{institution}"


def admin_id_for(institution: str) -> str:
    return f"admin-{institution}"


def consortium_init(
    data_dir: Path, institutions: List[str], seed: int = 0
) -> PermissionedNetwork:
    """Bootstrap a data directory: membership, node/admin keys, identities."""
    cleaned = [i.strip() for i in institutions if i.strip()]
    if len(cleaned) != len(set(cleaned)):
        raise ValidationError("institutions must be distinct")
    if not cleaned:
        raise ValidationError("a consortium needs at least one institution")
    data_dir = Path(data_dir)
    membership_path = data_dir / MEMBERSHIP_FILE
    if membership_path.exists():
        raise ConflictError(f"refusing to overwrite {membership_path}")
    data_dir.mkdir(parents=True, exist_ok=True)

    keystore = Keystore(data_dir / KEYSTORE_FILE)
    registry = PersistentRegistry(data_dir / IDENTITIES_FILE)
    members: List[Identity] = []
    for institution in sorted(cleaned):
        node_seed = crypto.derive_seed(
            b"consortium-node", seed.to_bytes(8, "big"), institution.encode()
        )
        node_key = crypto.generate_keypair(node_seed)
        node = Identity(
            id=node_id_for(institution),
            role=Role.AUTHORITY_NODE,
            institution=institution,
            public_key=node_key.public_key,
        )
        keystore.put(node.id, node_key.private_key)
        registry.add(node)
        members.append(node)

        admin_seed = crypto.derive_seed(
            b"consortium-admin", seed.to_bytes(8, "big"), institution.encode()
        )
        admin_key = crypto.generate_keypair(admin_seed)
        admin = Identity(
            id=admin_id_for(institution),
            role=Role.INSTITUTION_ADMIN,
            institution=institution,
            public_key=admin_key.public_key,
        )
        keystore.put(admin.id, admin_key.private_key)
        registry.add(admin)

    network = PermissionedNetwork(members=tuple(members))
    membership_path.write_text(
        json.dumps(network.to_json(), indent=2, sort_keys=True) + "\n",
        encoding="utf-8",
    )
    return network


class Platform:
    """All primary services assembled over one data directory."""

    def __init__(
        self,
        config: NodeConfig,
        faults: Optional[FaultConfig] = None,
    ) -> None:
        self.config = config
        self.data_dir = Path(config.data_dir)
        self.data_dir.mkdir(parents=True, exist_ok=True)
        membership_path = config.resolved_membership()
        if not membership_path.exists():
            raise NotFoundError(f"membership file not found: {membership_path}")
        self.membership = PermissionedNetwork.from_json(
            json.loads(membership_path.read_text(encoding="utf-8"))
        )
        self.keystore = Keystore(self.data_dir / KEYSTORE_FILE)
        self.registry = PersistentRegistry(self.data_dir / IDENTITIES_FILE)
        for member in self.membership.members:
            if not self.registry.exists(member.id):
                self.registry.add(member)

        if config.deterministic_time:
            self.clock: Callable[[], datetime] = LogicalClock()
            nonce_rng = random.Random(config.sim_seed)
            nonce_source: Optional[Callable[[], bytes]] = lambda: nonce_rng.randbytes(
                crypto.NONCE_LEN
            )
        else:
            self.clock = utc_now
            nonce_source = None

        node_keys = {
            m.id: self.keystore.keypair(m.id)
            for m in self.membership.members
            if self.keystore.has(m.id)
        }
        missing = [m.id for m in self.membership.members if m.id not in node_keys]
        if missing:
            raise CryptoKeyError(
                "keystore has no signing seed for consortium nodes: "
                + ", ".join(sorted(missing))
            )
        if faults is None:
            faults = FaultConfig(rng_seed=config.sim_seed)
        self.network = SimNetwork(
            self.membership,
            node_keys,
            self.registry,
            faults,
            timeout_ticks=config.timeout_ticks,
        )
        self.store = OffchainStore(self.data_dir / STORE_DIR, clock=self.clock)
        self.ledger = PublicLedger(self.data_dir / CHAIN_FILE, clock=self.clock)
        self.engine = ChaincodeEngine(
            self.registry,
            self.store,
            self.ledger,
            self.network,
            self.membership,
            self.data_dir / JOURNAL_FILE,
            clock=self.clock,
            nonce_source=nonce_source,
        )
        self.recovered = self.engine.recover()
        self.exemptions = ExemptionService(
            self.engine,
            self.data_dir / POLICIES_FILE,
            self.data_dir / REQUESTS_FILE,
            clock=self.clock,
        )

    # -- key custody -------------------------------------------------------

    def register_student(
        self,
        name: str,
        institution: str,
        public_key: Optional[bytes] = None,
    ) -> Tuple[Identity, FansWallet, Optional[bytes]]:
        """Register a student; without a caller key, custody the generated one.

        Returns (identity, empty wallet, private seed or None). The seed is
        returned exactly once, at registration, and never via any query.
        """
        if public_key is not None:
            identity, wallet = self.engine.register_student(
                name, institution, public_key
            )
            return identity, wallet, None
        seed = crypto.derive_seed(
            b"student-key",
            self.config.sim_seed.to_bytes(8, "big"),
            name.encode(),
        )
        keypair = crypto.generate_keypair(seed)
        identity, wallet = self.engine.register_student(
            name, institution, keypair.public_key
        )
        self.keystore.put(name, keypair.private_key)
        return identity, wallet, keypair.private_key

    def certify(
        self,
        submission_id: str,
        issuer_id: str,
        applicant_private_key: Optional[bytes] = None,
        failpoint: Optional[Failpoint] = None,
    ) -> CertificationReceipt:
        """Run the certification chaincode using keystore-held seeds."""
        issuer_key = self.keystore.keypair(issuer_id)
        submission = self.store.get_submission(submission_id)
        if applicant_private_key is not None:
            applicant_key = crypto.generate_keypair(applicant_private_key)
        else:
            applicant_key = self.keystore.keypair(submission.applicant_id)
        return self.engine.certify(
            submission_id,
            issuer_id,
            issuer_key,
            applicant_key,
            failpoint=failpoint,
        )

    def wallet_of(self, owner_id: str) -> FansWallet:
        return self.engine.wallet_of(owner_id)
