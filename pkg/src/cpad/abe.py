"""Key-encapsulation CP-ABE over the symmetric pairing group.

Setup publishes {g, e(g,g)^alpha, g^a, h_x per attribute}; user keys bind an
attribute set to a fresh exponent t as K = g^alpha * g^(a*t), L = g^t,
K_x = h_x^t.  Encapsulation shares the exponent s across the policy matrix
and hides a fresh G_T element k as C_bar = k * e(g,g)^(alpha*s); decryption
recombines pairings of matching rows with the reconstruction coefficients.

The mandatory "dummy" attribute must sit directly under a root AND gate so
that every reconstruction uses its row; the deletion handshake invalidates
exactly that row.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from . import policy as policy_mod
from . import wire
from .errors import NotAuthorized
from .group import BilinearGroup, DEFAULT_RNG, GroupElem, TargetElem, get_group
from .policy import DUMMY_ATTR, AccessPolicy, LsssProgram


@dataclass(frozen=True)
class PublicParams:
    group: BilinearGroup
    g: GroupElem
    e_gg_alpha: TargetElem
    g_a: GroupElem
    attr_bases: dict  # attribute id -> GroupElem
    universe: tuple

    def to_bytes(self) -> bytes:
        body = wire.file_header("pp", self.group.profile)
        body += wire.rec_u32(len(self.universe))
        for attr in self.universe:
            body += wire.rec_str(attr)
        body += wire.rec_point(self.g)
        body += wire.rec_target(self.e_gg_alpha)
        body += wire.rec_point(self.g_a)
        for attr in self.universe:
            body += wire.rec_point(self.attr_bases[attr])
        return wire.encode_stream(body)

    @classmethod
    def from_bytes(cls, data: bytes) -> "PublicParams":
        r, profile = wire.open_file(data, "pp")
        group = get_group(profile)
        count = r.u32()
        universe = tuple(r.str() for _ in range(count))
        g = r.point(group)
        e_gg_alpha = r.target(group)
        g_a = r.point(group)
        bases = {attr: r.point(group) for attr in universe}
        r.finish()
        return cls(group, g, e_gg_alpha, g_a, bases, universe)


@dataclass(frozen=True)
class MasterSecretKey:
    g_alpha: GroupElem
    # raw exponents retained as algebraic test oracles; the published
    # protocol state is g_alpha alone
    alpha: int
    a: int

    def to_bytes(self, group: BilinearGroup) -> bytes:
        body = wire.file_header("msk", group.profile)
        body += wire.rec_point(self.g_alpha)
        body += wire.rec_scalar(self.alpha)
        body += wire.rec_scalar(self.a)
        return wire.encode_stream(body)

    @classmethod
    def from_bytes(cls, data: bytes) -> tuple["MasterSecretKey", BilinearGroup]:
        r, profile = wire.open_file(data, "msk")
        group = get_group(profile)
        g_alpha = r.point(group)
        alpha = r.scalar()
        a = r.scalar()
        r.finish()
        return cls(g_alpha, alpha, a), group


@dataclass(frozen=True)
class UserSecretKey:
    K: GroupElem
    L: GroupElem
    per_attr: dict  # attribute id -> K_x
    attrs: frozenset

    def to_bytes(self, group: BilinearGroup) -> bytes:
        body = wire.file_header("usk", group.profile)
        body += wire.rec_point(self.K)
        body += wire.rec_point(self.L)
        body += wire.rec_u32(len(self.per_attr))
        for attr in sorted(self.per_attr):
            body += wire.rec_str(attr)
            body += wire.rec_point(self.per_attr[attr])
        return wire.encode_stream(body)

    @classmethod
    def from_bytes(cls, data: bytes) -> tuple["UserSecretKey", BilinearGroup]:
        r, profile = wire.open_file(data, "usk")
        group = get_group(profile)
        K = r.point(group)
        L = r.point(group)
        count = r.u32()
        per_attr = {}
        for _ in range(count):
            attr = r.str()
            per_attr[attr] = r.point(group)
        r.finish()
        return cls(K, L, per_attr, frozenset(per_attr)), group


@dataclass(frozen=True)
class KeyCiphertext:
    c_bar: TargetElem
    c_prime: GroupElem
    rows: tuple  # (C_i, D_i) per matrix row
    prog: LsssProgram
    # share vector retained in memory as a test oracle; never serialized
    shares: policy_mod.ShareVector | None = field(default=None, compare=False, repr=False)

    def to_records(self) -> bytes:
        body = wire.rec_nested(self.prog.to_records())
        body += wire.rec_target(self.c_bar)
        body += wire.rec_point(self.c_prime)
        for c_i, d_i in self.rows:
            body += wire.rec_point(c_i)
            body += wire.rec_point(d_i)
        return body

    def to_bytes(self, group: BilinearGroup) -> bytes:
        return wire.encode_stream(
            wire.file_header("ct", group.profile) + self.to_records()
        )

    @classmethod
    def from_reader(cls, r: wire.Reader, group: BilinearGroup) -> "KeyCiphertext":
        prog = LsssProgram.from_reader(r.nested())
        c_bar = r.target(group)
        c_prime = r.point(group)
        rows = tuple((r.point(group), r.point(group)) for _ in range(prog.l))
        return cls(c_bar, c_prime, rows, prog)

    @classmethod
    def from_bytes(cls, data: bytes) -> tuple["KeyCiphertext", BilinearGroup]:
        r, profile = wire.open_file(data, "ct")
        group = get_group(profile)
        ct = cls.from_reader(r, group)
        r.finish()
        return ct, group


def setup(universe, group: BilinearGroup | None = None, rng=DEFAULT_RNG):
    """System setup over an attribute universe (which must contain "dummy")."""
    group = group or get_group()
    universe = tuple(universe)
    if len(set(universe)) != len(universe):
        raise ValueError("duplicate attribute in universe")
    if DUMMY_ATTR not in universe:
        raise ValueError(f"universe must contain the {DUMMY_ATTR!r} attribute")
    if any(not attr for attr in universe):
        raise ValueError("empty attribute name")
    alpha = rng.scalar()
    a = rng.scalar()
    g = group.g
    g_alpha = g ** alpha
    g_a = g ** a
    e_gg_alpha = group.pair(g, g) ** alpha
    bases = {attr: g ** rng.scalar() for attr in universe}
    pp = PublicParams(group, g, e_gg_alpha, g_a, bases, universe)
    return pp, MasterSecretKey(g_alpha, alpha, a)


def keygen(msk: MasterSecretKey, pp: PublicParams, attrs, rng=DEFAULT_RNG) -> UserSecretKey:
    attrs = frozenset(attrs)
    unknown = attrs - set(pp.universe)
    if unknown:
        raise ValueError(f"unknown attribute(s): {sorted(unknown)}")
    if DUMMY_ATTR not in attrs:
        raise ValueError(f"key attribute set must include {DUMMY_ATTR!r}")
    t = rng.scalar()
    L = pp.g ** t
    K = msk.g_alpha * (pp.g_a ** t)
    per_attr = {x: pp.attr_bases[x] ** t for x in sorted(attrs)}
    return UserSecretKey(K, L, per_attr, attrs)


def check_policy_shape(policy: AccessPolicy):
    """Enforce the deletable-ciphertext shape: one dummy leaf directly under
    a root AND gate (so every satisfying set must use the dummy row)."""
    total = sum(
        1 for attr in _iter_leaves(policy) if attr == DUMMY_ATTR
    )
    if total == 0:
        raise ValueError(f"policy must include the {DUMMY_ATTR!r} attribute")
    if total > 1:
        raise ValueError(f"{DUMMY_ATTR!r} must appear exactly once in the policy")
    if not (
        isinstance(policy, policy_mod.Gate)
        and policy.op == "and"
        and any(
            isinstance(c, policy_mod.Leaf) and c.attr == DUMMY_ATTR
            for c in policy.children
        )
    ):
        raise ValueError(
            f"policy root must be an AND gate with {DUMMY_ATTR!r} as a direct child"
        )


def _iter_leaves(node):
    if isinstance(node, policy_mod.Leaf):
        yield node.attr
        return
    for child in node.children:
        yield from _iter_leaves(child)


def check_program_shape(prog: LsssProgram):
    """Deletable-ciphertext shape for a precompiled share matrix: exactly one
    dummy row, and dropping it must leave the target outside every span."""
    if sum(1 for a in prog.rho if a == DUMMY_ATTR) != 1:
        raise ValueError(f"program must label exactly one row with {DUMMY_ATTR!r}")
    others = set(prog.rho) - {DUMMY_ATTR}
    try:
        policy_mod.find_reconstruction(prog, others)
    except NotAuthorized:
        return
    raise ValueError(f"program is satisfiable without {DUMMY_ATTR!r}; deletion "
                     "could not revoke every key")


def encapsulate(pp: PublicParams, policy: AccessPolicy | LsssProgram, rng=DEFAULT_RNG):
    """Fresh data key k in G_T and its ciphertext under the policy.

    Accepts either a formula (compiled here) or a preloaded share-generating
    program; both are checked for the mandatory dummy-row shape.
    """
    if isinstance(policy, LsssProgram):
        prog = policy
        check_program_shape(prog)
        unknown = set(prog.rho) - set(pp.universe)
    else:
        check_policy_shape(policy)
        prog = policy_mod.compile_lsss(policy)
        unknown = policy_mod.attributes(policy) - set(pp.universe)
    if unknown:
        raise ValueError(f"unknown attribute(s) in policy: {sorted(unknown)}")
    group = pp.group
    s = rng.scalar()
    shares = policy_mod.make_shares(prog, s, rng)
    k = group.pair(pp.g, pp.g) ** rng.scalar()
    c_bar = k * (pp.e_gg_alpha ** s)
    c_prime = pp.g ** s
    rows = []
    p = group.p
    for i in range(prog.l):
        r_i = rng.scalar()
        c_i = (pp.g_a ** shares.lam[i]) * (pp.attr_bases[prog.rho[i]] ** (p - r_i))
        d_i = pp.g ** r_i
        rows.append((c_i, d_i))
    ct = KeyCiphertext(c_bar, c_prime, tuple(rows), prog, shares=shares)
    return k, ct


def decapsulate(ct: KeyCiphertext, sk: UserSecretKey, pp: PublicParams | None = None) -> TargetElem:
    """Recover the encapsulated key; NotAuthorized when attrs fail the policy.

    A ciphertext mutated by the deletion handshake still decapsulates
    without error but yields a wrong key, detectable only against the
    deletion tag.  `pp` is accepted for interface symmetry; everything
    needed lives in the ciphertext and key.
    """
    plan = policy_mod.find_reconstruction(ct.prog, sk.attrs)
    group = ct.c_prime.group
    acc = None
    for i, w in zip(plan.rows, plan.omega):
        c_i, d_i = ct.rows[i]
        term = (group.pair(c_i, sk.L) * group.pair(d_i, sk.per_attr[ct.prog.rho[i]])) ** w
        acc = term if acc is None else acc * term
    e_cp_k = group.pair(ct.c_prime, sk.K)
    return ct.c_bar * acc / e_cp_k
