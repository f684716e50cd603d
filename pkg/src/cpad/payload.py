"""Hybrid data layer: AEAD under a key derived from the encapsulated G_T
element, plus the deletion tag tau = h(fname || k) the owner keeps."""

from __future__ import annotations

import hmac
from dataclasses import dataclass

from cryptography.exceptions import InvalidTag
from cryptography.hazmat.primitives.ciphers.aead import AESGCM
from cryptography.hazmat.primitives.hashes import SHA256
from cryptography.hazmat.primitives.kdf.hkdf import HKDF

from . import wire
from .errors import AuthenticationFailure
from .group import BilinearGroup, DEFAULT_RNG, TargetElem

KEY_LEN = 16  # AES-128
NONCE_LEN = 12
_KDF_INFO = b"CPAD-AEAD-KEY"


@dataclass(frozen=True)
class SealedPayload:
    fname: int
    nonce: bytes
    ciphertext: bytes  # includes the AEAD auth tag

    def to_records(self) -> bytes:
        return (
            wire.rec_scalar(self.fname)
            + wire.rec_bytes(self.nonce)
            + wire.rec_bytes(self.ciphertext)
        )

    def to_bytes(self, group: BilinearGroup) -> bytes:
        return wire.encode_stream(
            wire.file_header("sealed", group.profile) + self.to_records()
        )

    @classmethod
    def from_reader(cls, r: wire.Reader) -> "SealedPayload":
        return cls(r.scalar(), r.bytes(), r.bytes())

    @classmethod
    def from_bytes(cls, data: bytes) -> "SealedPayload":
        r, _profile = wire.open_file(data, "sealed")
        sp = cls.from_reader(r)
        r.finish()
        return sp


@dataclass(frozen=True)
class DeletionTag:
    tau: int


def derive_key(k: TargetElem) -> bytes:
    """16-byte AEAD key from the canonical encoding of k."""
    return HKDF(
        algorithm=SHA256(), length=KEY_LEN, salt=None, info=_KDF_INFO
    ).derive(k.to_bytes())


def _aad(fname: int) -> bytes:
    return wire.rec_scalar(fname)


def seal(data: bytes, k: TargetElem, fname: int, rng=DEFAULT_RNG) -> SealedPayload:
    nonce = rng.bytes(NONCE_LEN)
    ct = AESGCM(derive_key(k)).encrypt(nonce, data, _aad(fname))
    return SealedPayload(fname, nonce, ct)


def unseal(p: SealedPayload, k: TargetElem, fname: int) -> bytes:
    try:
        return AESGCM(derive_key(k)).decrypt(p.nonce, p.ciphertext, _aad(fname))
    except InvalidTag as exc:
        raise AuthenticationFailure(
            "payload authentication failed (wrong key, tampering, or fname mismatch)"
        ) from exc


def make_tag(group: BilinearGroup, fname: int, k: TargetElem) -> DeletionTag:
    digest_input = wire.rec_scalar(fname) + k.to_bytes()
    return DeletionTag(group.hash_to_scalar(digest_input))


def check_tag(group: BilinearGroup, tag: DeletionTag, fname: int, k: TargetElem) -> bool:
    expected = make_tag(group, fname, k)
    return hmac.compare_digest(
        BilinearGroup.scalar_to_bytes(tag.tau),
        BilinearGroup.scalar_to_bytes(expected.tau),
    )
