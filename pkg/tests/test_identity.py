"""Identity registry, roles, and consortium membership rules."""

import pytest
from hypothesis import given, strategies as st

from microcred import crypto
from microcred.errors import ConflictError, CryptoKeyError, NotFoundError, ValidationError
from microcred.identity import (
    Identity,
    IdentityRegistry,
    PermissionedNetwork,
    Role,
    quorum_for,
)


def _identity(identity_id: str, role: Role = Role.STUDENT, institution: str = "uni-a"):
    keypair = crypto.generate_keypair(crypto.derive_seed(identity_id.encode()))
    return Identity(
        id=identity_id, role=role, institution=institution, public_key=keypair.public_key
    )


def _network(count: int = 4) -> PermissionedNetwork:
    members = tuple(
        _identity(f"auth-uni-{n}", Role.AUTHORITY_NODE, f"uni-{n}")
        for n in range(count)
    )
    return PermissionedNetwork(members=members)


def test_registry_add_get_remove():
    registry = IdentityRegistry()
    alice = _identity("alice")
    registry.add(alice)
    assert registry.get("alice") is alice
    assert registry.exists("alice")
    registry.remove("alice")
    assert not registry.exists("alice")
    with pytest.raises(NotFoundError):
        registry.get("alice")


def test_registry_rejects_duplicate_id():
    registry = IdentityRegistry()
    registry.add(_identity("alice"))
    with pytest.raises(ConflictError):
        registry.add(_identity("alice"))


def test_registry_remove_unknown_is_an_error():
    with pytest.raises(NotFoundError):
        IdentityRegistry().remove("ghost")


def test_identity_requires_32_byte_key():
    with pytest.raises(CryptoKeyError):
        Identity(id="x", role=Role.STUDENT, institution="uni-a", public_key=b"short")


def test_quorum_follows_two_thirds_majority():
    # floor(2N/3) + 1
    expected = {1: 1, 2: 2, 3: 3, 4: 3, 5: 4, 6: 5, 7: 5, 8: 6, 9: 7, 10: 7}
    for members, quorum in expected.items():
        assert quorum_for(members) == quorum


@given(st.integers(min_value=1, max_value=500))
def test_quorum_always_a_strict_two_thirds_majority(n):
    q = quorum_for(n)
    # more than two thirds of members, but never more than all of them
    assert 3 * q > 2 * n
    assert q <= n
    # removing one vote drops at or below the two-thirds line
    assert 3 * (q - 1) <= 2 * n


def test_network_membership_queries():
    network = _network(4)
    assert network.quorum == 3
    assert network.is_member("auth-uni-2")
    assert not network.is_member("auth-uni-9")
    assert network.member_ids() == sorted(network.member_ids())
    assert network.institutions() == ["uni-0", "uni-1", "uni-2", "uni-3"]
    assert network.public_key_of("auth-uni-0") is not None
    assert network.public_key_of("stranger") is None


def test_network_requires_authority_nodes():
    with pytest.raises(ValidationError):
        PermissionedNetwork(members=(_identity("alice", Role.STUDENT),))


def test_network_rejects_duplicate_members():
    node = _identity("auth-x", Role.AUTHORITY_NODE)
    with pytest.raises(ValidationError):
        PermissionedNetwork(members=(node, node))


def test_network_json_round_trip():
    network = _network(4)
    clone = PermissionedNetwork.from_json(network.to_json())
    assert clone.member_ids() == network.member_ids()
    assert clone.quorum == network.quorum
    for node_id in network.member_ids():
        assert clone.public_key_of(node_id) == network.public_key_of(node_id)


def test_quorum_override_respected():
    network = PermissionedNetwork(
        members=tuple(
            _identity(f"auth-{n}", Role.AUTHORITY_NODE, f"uni-{n}")
            for n in range(4)
        ),
        quorum_override=4,
    )
    assert network.quorum == 4
