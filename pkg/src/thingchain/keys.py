"""Key derivation, account ids and deterministic signatures.

Accounts are identified by the sha-256 digest of their Ed25519 verification
key.  Ed25519 signatures are deterministic, which keeps replays bit-identical.
"""

from __future__ import annotations

import hashlib

from cryptography.exceptions import InvalidSignature
from cryptography.hazmat.primitives.asymmetric.ed25519 import (
    Ed25519PrivateKey,
    Ed25519PublicKey,
)

from .errors import EmptySeed

ALGORITHM = "ed25519/sha-256"
DIGEST_SIZE = 32


def digest(data: bytes) -> bytes:
    return hashlib.sha256(data).digest()


def account_id(verify_key_bytes: bytes) -> bytes:
    """Derive an account id from raw verification-key bytes."""
    return digest(verify_key_bytes)


class Signer:
    """A seed-derived Ed25519 keypair with its ledger account id."""

    def __init__(self, private_key: Ed25519PrivateKey):
        self._key = private_key
        self.verify_key_bytes = private_key.public_key().public_bytes_raw()
        self.account = account_id(self.verify_key_bytes)

    @classmethod
    def from_seed(cls, seed: bytes | str) -> "Signer":
        if isinstance(seed, str):
            seed = seed.encode("utf-8")
        if not seed:
            raise EmptySeed("seed must be nonempty")
        return cls(Ed25519PrivateKey.from_private_bytes(digest(b"seed:" + seed)))

    def sign(self, message: bytes) -> bytes:
        return self._key.sign(message)

    def private_bytes(self) -> bytes:
        """Raw signing-key bytes; must never appear in state or wire traffic."""
        return self._key.private_bytes_raw()

    def __repr__(self) -> str:  # never leaks key material
        return f"Signer(account={self.account.hex()[:12]}…)"


def verify_signature(verify_key_bytes: bytes, signature: bytes, message: bytes) -> bool:
    try:
        Ed25519PublicKey.from_public_bytes(verify_key_bytes).verify(signature, message)
        return True
    except (InvalidSignature, ValueError):
        return False
