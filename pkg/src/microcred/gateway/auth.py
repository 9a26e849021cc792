"""Signature-challenge login and in-memory bearer sessions.

Callers prove control of a registered key by signing a server nonce; no
passwords exist anywhere. Sessions are deliberately memory-only: a restart
invalidates them (clients re-login) while every piece of committed domain
state reloads from disk.
"""

from __future__ import annotations

import secrets
from dataclasses import dataclass
from datetime import datetime, timedelta
from typing import Any, Callable, Dict, Optional, Tuple

from .. import crypto
from ..errors import InvalidCredentials
from ..identity import Identity, IdentityRegistry
from ..util import format_ts, utc_now

CHALLENGE_TTL_SECONDS = 300
SESSION_TTL_SECONDS = 3600


@dataclass(frozen=True)
class Session:
    token: str
    identity_id: str
    role: str
    expires_at: datetime

    def to_json(self) -> Dict[str, Any]:
        return {
            "token": self.token,
            "identity_id": self.identity_id,
            "role": self.role,
            "expires_at": format_ts(self.expires_at),
        }


class AuthManager:
    def __init__(
        self,
        registry: IdentityRegistry,
        clock: Callable[[], datetime] = utc_now,
    ) -> None:
        self.registry = registry
        self._clock = clock
        self._challenges: Dict[str, Tuple[bytes, datetime]] = {}
        self._sessions: Dict[str, Session] = {}

    def issue_challenge(self, identity_id: str) -> bytes:
        if not self.registry.exists(identity_id):
            raise InvalidCredentials("unknown identity")
        nonce = secrets.token_bytes(32)
        expires = self._clock() + timedelta(seconds=CHALLENGE_TTL_SECONDS)
        self._challenges[identity_id] = (nonce, expires)
        return nonce

    def redeem_challenge(self, identity_id: str, signature: bytes) -> Session:
        entry = self._challenges.pop(identity_id, None)
        identity = self.registry.find(identity_id)
        if entry is None or identity is None:
            raise InvalidCredentials("no open login challenge")
        nonce, expires = entry
        if self._clock() > expires:
            raise InvalidCredentials("login challenge expired")
        if not crypto.verify(nonce, signature, identity.public_key):
            raise InvalidCredentials("signature does not match the registered key")
        session = Session(
            token=secrets.token_hex(16),
            identity_id=identity_id,
            role=identity.role.value,
            expires_at=self._clock() + timedelta(seconds=SESSION_TTL_SECONDS),
        )
        self._sessions[session.token] = session
        return session

    def authenticate(self, token: Optional[str]) -> Identity:
        if not token:
            raise InvalidCredentials("authentication required")
        session = self._sessions.get(token)
        if session is None:
            raise InvalidCredentials("unknown session token")
        if self._clock() > session.expires_at:
            del self._sessions[token]
            raise InvalidCredentials("session expired")
        identity = self.registry.find(session.identity_id)
        if identity is None:
            raise InvalidCredentials("identity no longer registered")
        return identity
