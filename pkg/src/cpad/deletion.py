"""Verifiable deletion handshake and the short signature scheme it rides on.

The owner blinds a fresh exponent as theta = q^u mod p and signs the
request; the fog picks its own v, answers eta = q^v, and rewrites every
dummy-attribute row D_i of the stored key ciphertext to D_i^(1/gamma) with
gamma = theta^v.  Because q^(u*v) is symmetric, the owner can rebuild gamma
from eta, lift its own dummy-row key component by gamma, and check that the
recombined data key still matches the stored tag; an honest rewrite is the
only way both sides cancel.

Signatures are short signatures on the pairing group: sig = H(m)^sec with
public key v = g^sec, verified by pair(sig, g) == pair(H(m), v).
"""

from __future__ import annotations

from dataclasses import dataclass

from . import abe, payload, wire
from . import policy as policy_mod
from .errors import BadFogSignature, BadSignature, WireError
from .group import BilinearGroup, DEFAULT_RNG, GroupElem
from .policy import DUMMY_ATTR


@dataclass(frozen=True)
class SigningKeypair:
    sec: int
    v: GroupElem  # public half, g^sec


@dataclass(frozen=True)
class DeletionRequest:
    fname: int
    attr: str  # always the dummy attribute
    q: int
    theta: int  # q^u mod p
    sig: GroupElem

    def body(self) -> bytes:
        return request_body(self.fname, self.attr, self.q, self.theta)

    def to_records(self) -> bytes:
        return self.body() + wire.rec_point(self.sig)

    def to_bytes(self, group: BilinearGroup) -> bytes:
        return wire.encode_stream(
            wire.file_header("delreq", group.profile) + self.to_records()
        )

    @classmethod
    def from_reader(cls, r: wire.Reader, group: BilinearGroup) -> "DeletionRequest":
        verb = r.str()
        if verb != "delete":
            raise WireError(f"unexpected request verb {verb!r}")
        fname = r.scalar()
        attr = r.str()
        q = r.scalar()
        theta = r.scalar()
        sig = r.point(group)
        return cls(fname, attr, q, theta, sig)

    @classmethod
    def from_bytes(cls, data: bytes) -> tuple["DeletionRequest", BilinearGroup]:
        from .group import get_group

        r, profile = wire.open_file(data, "delreq")
        group = get_group(profile)
        req = cls.from_reader(r, group)
        r.finish()
        return req, group


@dataclass(frozen=True)
class ObjectDeletionState:
    """Owner-side secrets pending a fog response for one fname."""

    fname: int
    q: int
    u: int
    tau: payload.DeletionTag


@dataclass(frozen=True)
class DeletionResponse:
    eta: int  # q^v mod p
    sig: GroupElem

    def to_records(self) -> bytes:
        return response_body(self.eta) + wire.rec_point(self.sig)

    @classmethod
    def from_reader(cls, r: wire.Reader, group: BilinearGroup) -> "DeletionResponse":
        return cls(r.scalar(), r.point(group))


def request_body(fname: int, attr: str, q: int, theta: int) -> bytes:
    """Canonical signed bytes of a deletion request (TLV, bit-stable)."""
    return (
        wire.rec_str("delete")
        + wire.rec_scalar(fname)
        + wire.rec_str(attr)
        + wire.rec_scalar(q)
        + wire.rec_scalar(theta)
    )


def response_body(eta: int) -> bytes:
    return wire.rec_scalar(eta)


# ----------------------------------------------------------------------
# short signatures


def gen_signing_keypair(group: BilinearGroup, rng=DEFAULT_RNG) -> SigningKeypair:
    sec = rng.nonzero_scalar()
    return SigningKeypair(sec, group.g ** sec)


def sign(group: BilinearGroup, ssk: SigningKeypair, message: bytes) -> GroupElem:
    return group.hash_to_group(message) ** ssk.sec


def verify_sig(group: BilinearGroup, v: GroupElem, message: bytes, sig: GroupElem) -> bool:
    return group.pair(sig, group.g) == group.pair(group.hash_to_group(message), v)


# ----------------------------------------------------------------------
# handshake operations


def make_del_request(
    group: BilinearGroup,
    fname: int,
    tau: payload.DeletionTag,
    ssk: SigningKeypair,
    rng=DEFAULT_RNG,
):
    """Owner side: fresh (q, u), theta = q^u, signed request + pending state."""
    q = rng.nonzero_scalar()
    u = rng.nonzero_scalar()
    theta = group.zp_pow(q, u)
    body = request_body(fname, DUMMY_ATTR, q, theta)
    req = DeletionRequest(fname, DUMMY_ATTR, q, theta, sign(group, ssk, body))
    return req, ObjectDeletionState(fname, q, u, tau)


def rekey_rows(ct: abe.KeyCiphertext, gamma: int, group: BilinearGroup) -> abe.KeyCiphertext:
    """Replace D_i with D_i^(1/gamma) on every dummy-labeled row."""
    inv_gamma = group.scalar_inv(gamma)
    rows = tuple(
        (c_i, d_i ** inv_gamma) if ct.prog.rho[i] == DUMMY_ATTR else (c_i, d_i)
        for i, (c_i, d_i) in enumerate(ct.rows)
    )
    return abe.KeyCiphertext(ct.c_bar, ct.c_prime, rows, ct.prog, shares=ct.shares)


def reencrypt(
    group: BilinearGroup,
    ct: abe.KeyCiphertext,
    req: DeletionRequest,
    fsk: SigningKeypair,
    spk: GroupElem,
    rng=DEFAULT_RNG,
):
    """Fog side: check the request, mutate the dummy rows, sign the proof.

    The returned ciphertext replaces the stored one atomically; the original
    is never modified in place.
    """
    if not verify_sig(group, spk, req.body(), req.sig):
        raise BadSignature("deletion request signature invalid")
    while True:
        v = rng.nonzero_scalar()
        eta = group.zp_pow(req.q, v)
        gamma = group.zp_pow(req.theta, v)
        if gamma != 1:  # gamma = 1 would make the rewrite a no-op
            break
    new_ct = rekey_rows(ct, gamma, group)
    resp = DeletionResponse(eta, sign(group, fsk, response_body(eta)))
    return new_ct, resp


def check_deletion_proof(
    group: BilinearGroup,
    eta: int,
    ct_updated: abe.KeyCiphertext,
    sk: abe.UserSecretKey,
    state: ObjectDeletionState,
    pp: abe.PublicParams,
    fname: int,
) -> bool:
    """Recompute the data key through the lifted dummy-row key component and
    compare tags.  True iff the fog applied exactly gamma = theta^v."""
    gamma_prime = group.zp_pow(eta, state.u)
    k_dummy_lifted = sk.per_attr[DUMMY_ATTR] ** gamma_prime
    plan = policy_mod.find_reconstruction(ct_updated.prog, sk.attrs)
    acc = None
    for i, w in zip(plan.rows, plan.omega):
        c_i, d_i = ct_updated.rows[i]
        attr = ct_updated.prog.rho[i]
        key_part = k_dummy_lifted if attr == DUMMY_ATTR else sk.per_attr[attr]
        term = (group.pair(c_i, sk.L) * group.pair(d_i, key_part)) ** w
        acc = term if acc is None else acc * term
    k_prime = ct_updated.c_bar * acc / group.pair(ct_updated.c_prime, sk.K)
    return payload.check_tag(group, state.tau, fname, k_prime)


def verify_deletion(
    group: BilinearGroup,
    resp: DeletionResponse,
    ct_updated: abe.KeyCiphertext,
    sk: abe.UserSecretKey,
    state: ObjectDeletionState,
    pp: abe.PublicParams,
    fpk: GroupElem,
    fname: int,
) -> bool:
    """Owner side: authenticate the response, then check the proof."""
    if not verify_sig(group, fpk, response_body(resp.eta), resp.sig):
        raise BadFogSignature("deletion response signature invalid")
    return check_deletion_proof(group, resp.eta, ct_updated, sk, state, pp, fname)
