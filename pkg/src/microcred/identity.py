"""Role-bearing identities, the identity registry, and consortium membership."""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Any, Dict, Iterator, List, Optional, Tuple

from .crypto import PUBLIC_KEY_LEN
from .errors import ConflictError, CryptoKeyError, NotFoundError, ValidationError


class Role(str, Enum):
    STUDENT = "Student"
    INSTITUTION_ADMIN = "InstitutionAdmin"
    AUTHORITY_NODE = "AuthorityNode"
    THIRD_PARTY_VERIFIER = "ThirdPartyVerifier"


@dataclass(frozen=True)
class Identity:
    id: str
    role: Role
    institution: str
    public_key: bytes

    def __post_init__(self) -> None:
        if not self.id:
            raise ValidationError("identity id must be non-empty")
        if len(self.public_key) != PUBLIC_KEY_LEN:
            raise CryptoKeyError("identity public key must be 32 bytes")
        if self.role is Role.STUDENT and not self.institution:
            raise ValidationError("students always register under an institution")


class IdentityRegistry:
    """In-memory identity set; persistence lives with the platform node."""

    def __init__(self) -> None:
        self._by_id: Dict[str, Identity] = {}

    def add(self, identity: Identity) -> Identity:
        if identity.id in self._by_id:
            raise ConflictError(f"identity already registered: {identity.id}")
        self._by_id[identity.id] = identity
        return identity

    def get(self, identity_id: str) -> Identity:
        try:
            return self._by_id[identity_id]
        except KeyError:
            raise NotFoundError(f"unknown identity: {identity_id}") from None

    def find(self, identity_id: str) -> Optional[Identity]:
        return self._by_id.get(identity_id)

    def exists(self, identity_id: str) -> bool:
        return identity_id in self._by_id

    def remove(self, identity_id: str) -> None:
        if identity_id not in self._by_id:
            raise NotFoundError(f"unknown identity: {identity_id}")
        del self._by_id[identity_id]

    def __iter__(self) -> Iterator[Identity]:
        return iter(sorted(self._by_id.values(), key=lambda i: i.id))

    def __len__(self) -> int:
        return len(self._by_id)


def quorum_for(member_count: int) -> int:
    """Byzantine-tolerant vote threshold: floor(2N/3) + 1."""
    return (2 * member_count) // 3 + 1


@dataclass(frozen=True)
class PermissionedNetwork:
    """The consortium membership: one authority node per institution."""

    members: Tuple[Identity, ...]
    quorum_override: Optional[int] = None

    def __post_init__(self) -> None:
        if not self.members:
            raise ValidationError("a consortium needs at least one member")
        seen_ids: set = set()
        seen_institutions: set = set()
        for member in self.members:
            if member.role is not Role.AUTHORITY_NODE:
                raise ValidationError(f"{member.id} is not an authority node")
            if member.id in seen_ids:
                raise ValidationError(f"duplicate member id: {member.id}")
            if member.institution in seen_institutions:
                raise ValidationError(
                    f"institution {member.institution} already has an authority node"
                )
            seen_ids.add(member.id)
            seen_institutions.add(member.institution)
        if self.quorum_override is not None and not (
            1 <= self.quorum_override <= len(self.members)
        ):
            raise ValidationError("quorum override out of range")

    @property
    def quorum(self) -> int:
        if self.quorum_override is not None:
            return self.quorum_override
        return quorum_for(len(self.members))

    def member_ids(self) -> List[str]:
        return sorted(m.id for m in self.members)

    def is_member(self, node_id: str) -> bool:
        return any(m.id == node_id for m in self.members)

    def get(self, node_id: str) -> Identity:
        for member in self.members:
            if member.id == node_id:
                return member
        raise NotFoundError(f"not a consortium member: {node_id}")

    def public_key_of(self, node_id: str) -> Optional[bytes]:
        for member in self.members:
            if member.id == node_id:
                return member.public_key
        return None

    def institutions(self) -> List[str]:
        return sorted(m.institution for m in self.members)

    def to_json(self) -> Dict[str, Any]:
        data: Dict[str, Any] = {
            "quorum": self.quorum,
            "members": [
                {
                    "id": m.id,
                    "institution": m.institution,
                    "public_key": m.public_key.hex(),
                }
                for m in sorted(self.members, key=lambda m: m.institution)
            ],
        }
        return data

    @classmethod
    def from_json(cls, data: Dict[str, Any]) -> "PermissionedNetwork":
        members = tuple(
            Identity(
                id=entry["id"],
                role=Role.AUTHORITY_NODE,
                institution=entry["institution"],
                public_key=bytes.fromhex(entry["public_key"]),
            )
            for entry in data["members"]
        )
        network = cls(members=members)
        declared = data.get("quorum")
        if declared is not None and declared != network.quorum:
            network = cls(members=members, quorum_override=declared)
        return network
