"""Symmetric bilinear group with canonical encodings and operation counters.

The backend is a supersingular curve E: y^2 = x^3 + x over F_q with
q = c*p - 1, q = 3 mod 4, so #E(F_q) = q + 1 and the subgroup of order p
carries a symmetric pairing: the Tate pairing composed with the distortion
map (x, y) -> (-x, i*y) into E(F_q^2), F_q^2 = F_q[i]/(i^2 + 1).  Embedding
degree is 2, so G_T is the order-p subgroup of F_q^2*.

All profiles share the same 256-bit group order, so scalars are always
32 bytes; profiles differ only in the base field size (and therefore in
point/target encoding lengths and in security margin).

Counters track abstract group operations (exponentiation/multiplication in
G and G_T, pairings, exponentiation in Z_p).  Internal arithmetic such as
cofactor clearing, square roots, or subgroup checks never ticks a counter.
"""

from __future__ import annotations

import hashlib
import secrets
from contextlib import contextmanager
from dataclasses import dataclass

from gmpy2 import invert, is_prime, mpz, powmod

from .errors import DecodeError

# Order of G and G_T; also the exponent field Z_p. Sparse to keep the
# pairing loop short on addition steps.
P = int((mpz(1) << 255) + 95)

SCALAR_LEN = 32

_MPZ_P = mpz(P)
_ONE = mpz(1)
_ZERO = mpz(0)


@dataclass(frozen=True)
class Profile:
    """Frozen curve constants: q = cofactor * P - 1."""

    name: str
    cofactor: int
    qbits: int


# Cofactors chosen as the lowest 4*j offset from a power of two giving a
# prime q = 3 mod 4 of exactly `qbits` bits (low Hamming weight keeps the
# final exponentiation cheap).
PROFILES = {
    "f512": Profile("f512", (1 << 256) + 1084, 512),
    "f768": Profile("f768", (1 << 512) + 940, 768),
    "f1536": Profile("f1536", (1 << 1280) + 1688, 1536),
}

DEFAULT_PROFILE = "f768"


class OpCounter:
    """Tally of abstract group operations inside a measurement scope."""

    __slots__ = ("exp_g", "mul_g", "exp_gt", "mul_gt", "pairings", "exp_zp")

    def __init__(self):
        self.exp_g = 0
        self.mul_g = 0
        self.exp_gt = 0
        self.mul_gt = 0
        self.pairings = 0
        self.exp_zp = 0

    def as_dict(self):
        return {k: getattr(self, k) for k in self.__slots__}

    def __repr__(self):
        inner = ", ".join(f"{k}={getattr(self, k)}" for k in self.__slots__)
        return f"OpCounter({inner})"


class GroupElem:
    """Point in the order-p subgroup of E(F_q); identity is the point at
    infinity. Immutable; `*` is the group operation, `**` exponentiation."""

    __slots__ = ("group", "x", "y")

    def __init__(self, group, x, y):
        self.group = group
        self.x = x  # None, None encodes the identity
        self.y = y

    @property
    def is_identity(self):
        return self.x is None

    def __mul__(self, other):
        if not isinstance(other, GroupElem):
            return NotImplemented
        g = self.group
        g._tick_mul_g()
        return g._wrap(g._add(self._pt(), other._pt()))

    def __pow__(self, exponent):
        g = self.group
        g._tick_exp_g()
        return g._wrap(g._mul_point(self._pt(), int(exponent) % P))

    def __eq__(self, other):
        return (
            isinstance(other, GroupElem)
            and self.group is other.group
            and self.x == other.x
            and self.y == other.y
        )

    def __hash__(self):
        return hash((id(self.group), self.x, self.y))

    def _pt(self):
        return None if self.x is None else (self.x, self.y)

    def to_bytes(self) -> bytes:
        qlen = self.group.point_len - 1
        if self.x is None:
            return b"\x00" * self.group.point_len
        prefix = b"\x03" if self.y & 1 else b"\x02"
        return prefix + int(self.x).to_bytes(qlen, "big")

    def __repr__(self):
        return f"GroupElem({self.to_bytes().hex()[:16]}…)"


class TargetElem:
    """Element of G_T, the order-p subgroup of F_q^2*."""

    __slots__ = ("group", "a", "b")

    def __init__(self, group, a, b):
        self.group = group
        self.a = a
        self.b = b

    @property
    def is_identity(self):
        return self.a == 1 and self.b == 0

    def __mul__(self, other):
        if not isinstance(other, TargetElem):
            return NotImplemented
        g = self.group
        g._tick_mul_gt()
        a, b = g._fq2_mul((self.a, self.b), (other.a, other.b))
        return TargetElem(g, a, b)

    def __truediv__(self, other):
        if not isinstance(other, TargetElem):
            return NotImplemented
        g = self.group
        g._tick_mul_gt()
        inv = g._fq2_inv((other.a, other.b))
        a, b = g._fq2_mul((self.a, self.b), inv)
        return TargetElem(g, a, b)

    def __pow__(self, exponent):
        g = self.group
        g._tick_exp_gt()
        a, b = g._fq2_pow((self.a, self.b), int(exponent) % P)
        return TargetElem(g, a, b)

    def __eq__(self, other):
        return (
            isinstance(other, TargetElem)
            and self.group is other.group
            and self.a == other.a
            and self.b == other.b
        )

    def __hash__(self):
        return hash((id(self.group), self.a, self.b))

    def to_bytes(self) -> bytes:
        qlen = self.group.point_len - 1
        return int(self.a).to_bytes(qlen, "big") + int(self.b).to_bytes(qlen, "big")

    def __repr__(self):
        return f"TargetElem({self.to_bytes().hex()[:16]}…)"


class BilinearGroup:
    """Pairing context for one parameter profile.

    Instances are cached per profile via :func:`get_group`; all values are
    immutable after construction. Counter scopes are confined to one thread.
    """

    def __init__(self, profile: str = DEFAULT_PROFILE):
        prof = PROFILES[profile]
        self.profile = prof.name
        self.p = P
        self.cofactor = mpz(prof.cofactor)
        self.q = self.cofactor * _MPZ_P - 1
        assert self.q.bit_length() == prof.qbits
        assert self.q % 4 == 3 and is_prime(self.q)
        self._sqrt_exp = (self.q + 1) // 4
        self.point_len = prof.qbits // 8 + 1
        self.target_len = 2 * (prof.qbits // 8)
        self.scalar_len = SCALAR_LEN
        self._scopes = []
        self.g = self._wrap(self._base_point())
        ga, gb = self._pair_raw(self.g._pt(), self.g._pt())
        self.gt = TargetElem(self, ga, gb)  # pair(g, g), fixed
        self.gt_one = TargetElem(self, _ONE, _ZERO)
        self.identity = self._wrap(None)

    # ------------------------------------------------------------------
    # counters

    def _tick_exp_g(self):
        for c in self._scopes:
            c.exp_g += 1

    def _tick_mul_g(self):
        for c in self._scopes:
            c.mul_g += 1

    def _tick_exp_gt(self):
        for c in self._scopes:
            c.exp_gt += 1

    def _tick_mul_gt(self):
        for c in self._scopes:
            c.mul_gt += 1

    def _tick_pair(self):
        for c in self._scopes:
            c.pairings += 1

    def _tick_exp_zp(self):
        for c in self._scopes:
            c.exp_zp += 1

    @contextmanager
    def measure(self):
        """Context manager yielding a fresh OpCounter for the enclosed ops."""
        ctr = OpCounter()
        self._scopes.append(ctr)
        try:
            yield ctr
        finally:
            self._scopes.remove(ctr)

    # ------------------------------------------------------------------
    # public operations

    def pair(self, a: GroupElem, b: GroupElem) -> TargetElem:
        self._tick_pair()
        ra, rb = self._pair_raw(a._pt(), b._pt())
        return TargetElem(self, ra, rb)

    def zp_pow(self, base: int, exponent: int) -> int:
        """base^exponent mod p in the exponent field (counted as exp_Zp)."""
        if exponent < 0:
            raise ValueError("negative exponent")
        self._tick_exp_zp()
        return int(powmod(base % P, exponent, _MPZ_P))

    def hash_to_scalar(self, data: bytes) -> int:
        """SHA-256 of the input reduced mod p (the system hash into Z_p)."""
        return int.from_bytes(hashlib.sha256(data).digest(), "big") % P

    def hash_to_group(self, data: bytes) -> GroupElem:
        """Deterministic hash onto the order-p subgroup, never the identity."""
        for ctr in range(256):
            xof = hashlib.shake_256(b"CPAD-H2G" + bytes([ctr]) + data)
            x = mpz(int.from_bytes(xof.digest(self.point_len - 1), "big")) % self.q
            pt = self._lift_x(x)
            if pt is None:
                continue
            pt = self._mul_raw(pt, int(self.cofactor))
            if pt is None:
                continue
            return self._wrap(pt)
        raise RuntimeError("hash_to_group failed to find a point")  # unreachable

    # scalar field helpers ------------------------------------------------

    def scalar_inv(self, x: int) -> int:
        if x % P == 0:
            raise ValueError("zero scalar has no inverse")
        return int(invert(x % P, _MPZ_P))

    # encodings -----------------------------------------------------------

    @staticmethod
    def scalar_to_bytes(x: int) -> bytes:
        return (x % P).to_bytes(SCALAR_LEN, "big")

    @staticmethod
    def scalar_from_bytes(data: bytes) -> int:
        if len(data) != SCALAR_LEN:
            raise DecodeError(f"scalar must be {SCALAR_LEN} bytes, got {len(data)}")
        v = int.from_bytes(data, "big")
        if v >= P:
            raise DecodeError("scalar out of range")
        return v

    def decode_point(self, data: bytes) -> GroupElem:
        if len(data) != self.point_len:
            raise DecodeError(f"point must be {self.point_len} bytes, got {len(data)}")
        prefix, body = data[0], data[1:]
        if prefix == 0x00:
            if any(body):
                raise DecodeError("non-canonical identity encoding")
            return self._wrap(None)
        if prefix not in (0x02, 0x03):
            raise DecodeError(f"bad point prefix {prefix:#x}")
        x = mpz(int.from_bytes(body, "big"))
        if x >= self.q:
            raise DecodeError("x coordinate out of field range")
        pt = self._lift_x(x)
        if pt is None:
            raise DecodeError("x is not on the curve")
        y = pt[1]
        want_odd = prefix == 0x03
        if bool(y & 1) != want_odd:
            y = self.q - y
        pt = (x, y)
        if self._mul_raw(pt, P) is not None:
            raise DecodeError("point not in the prime-order subgroup")
        return self._wrap(pt)

    def decode_target(self, data: bytes) -> TargetElem:
        if len(data) != self.target_len:
            raise DecodeError(f"target must be {self.target_len} bytes, got {len(data)}")
        half = self.target_len // 2
        a = mpz(int.from_bytes(data[:half], "big"))
        b = mpz(int.from_bytes(data[half:], "big"))
        if a >= self.q or b >= self.q:
            raise DecodeError("target coordinate out of field range")
        if self._fq2_pow((a, b), P) != (_ONE, _ZERO):
            raise DecodeError("target element not in the order-p subgroup")
        return TargetElem(self, a, b)

    # ------------------------------------------------------------------
    # curve internals (uncounted)

    def _wrap(self, pt):
        if pt is None:
            return GroupElem(self, None, None)
        return GroupElem(self, pt[0], pt[1])

    def _lift_x(self, x):
        q = self.q
        rhs = (x * x * x + x) % q
        y = powmod(rhs, self._sqrt_exp, q)
        if y * y % q != rhs:
            return None
        if y & 1:
            y = q - y
        return (x, y)

    def _base_point(self):
        x = mpz(1)
        while True:
            pt = self._lift_x(x)
            if pt is not None:
                g = self._mul_raw(pt, int(self.cofactor))
                if g is not None:
                    return g
            x += 1

    def _add(self, A, B):
        if A is None:
            return B
        if B is None:
            return A
        q = self.q
        x1, y1 = A
        x2, y2 = B
        if x1 == x2:
            if (y1 + y2) % q == 0:
                return None
            m = (3 * x1 * x1 + 1) * invert(2 * y1, q) % q
        else:
            m = (y2 - y1) * invert(x2 - x1, q) % q
        x3 = (m * m - x1 - x2) % q
        return (x3, (m * (x1 - x3) - y1) % q)

    def _neg(self, A):
        if A is None:
            return None
        return (A[0], (-A[1]) % self.q)

    def _mul_point(self, A, n):
        return self._mul_raw(A, n % P)

    def _mul_raw(self, A, n):
        """Scalar multiple via Jacobian double-and-add with mixed addition.

        `n` is NOT reduced mod p here; cofactor clearing relies on that.
        """
        if A is None or n == 0:
            return None
        if n < 0:
            A = self._neg(A)
            n = -n
        q = self.q
        xa, ya = A
        acc = None  # Jacobian (X, Y, Z) accumulator, None = infinity
        for bit in bin(n)[2:]:
            if acc is not None:
                X, Y, Z = acc
                if Y == 0:
                    acc = None
                else:
                    YY = Y * Y % q
                    S = 4 * X * YY % q
                    ZZ = Z * Z % q
                    M = (3 * X * X + ZZ * ZZ) % q  # a = 1 curve
                    X3 = (M * M - 2 * S) % q
                    Y3 = (M * (S - X3) - 8 * YY * YY) % q
                    acc = (X3, Y3, 2 * Y * Z % q)
            if bit == "1":
                if acc is None:
                    acc = (xa, ya, _ONE)
                else:
                    X, Y, Z = acc
                    ZZ = Z * Z % q
                    U2 = xa * ZZ % q
                    S2 = ya * Z * ZZ % q
                    if U2 == X:
                        if (S2 + Y) % q == 0:
                            acc = None
                        else:
                            # doubling fallback for the colliding case
                            YY = Y * Y % q
                            S = 4 * X * YY % q
                            M = (3 * X * X + ZZ * ZZ) % q
                            X3 = (M * M - 2 * S) % q
                            Y3 = (M * (S - X3) - 8 * YY * YY) % q
                            acc = (X3, Y3, 2 * Y * Z % q)
                    else:
                        H = (U2 - X) % q
                        HH = H * H % q
                        I = 4 * HH % q
                        J = H * I % q
                        r = 2 * (S2 - Y) % q
                        V = X * I % q
                        X3 = (r * r - J - 2 * V) % q
                        Y3 = (r * (V - X3) - 2 * Y * J) % q
                        acc = (X3, Y3, 2 * Z * H % q)
        if acc is None:
            return None
        X, Y, Z = acc
        zi = invert(Z, q)
        zi2 = zi * zi % q
        return (X * zi2 % q, Y * zi2 * zi % q)

    # fq2 = F_q[i], elements as (a, b) pairs ----------------------------

    def _fq2_mul(self, A, B):
        q = self.q
        a, b = A
        c, d = B
        t1 = a * c % q
        t2 = b * d % q
        t3 = (a + b) * (c + d) % q
        return ((t1 - t2) % q, (t3 - t1 - t2) % q)

    def _fq2_sqr(self, A):
        q = self.q
        a, b = A
        return ((a - b) * (a + b) % q, 2 * a * b % q)

    def _fq2_inv(self, A):
        q = self.q
        a, b = A
        d = invert(a * a + b * b, q)
        return (a * d % q, (-b) * d % q)

    def _fq2_pow(self, A, n):
        r = (_ONE, _ZERO)
        if n == 0:
            return r
        for bit in bin(int(n))[2:]:
            r = self._fq2_sqr(r)
            if bit == "1":
                r = self._fq2_mul(r, A)
        return r

    def _pair_raw(self, Pt, Qt):
        """Tate pairing of P with the distorted image of Q, reduced to the
        order-p subgroup of F_q^2 by the final exponentiation."""
        if Pt is None or Qt is None:
            return (_ONE, _ZERO)
        q = self.q
        xq, yq = Qt
        xp, yp = Pt
        fa, fb = _ONE, _ZERO
        T = Pt
        for bit in _P_BITS:
            xt, yt = T
            na = (fa - fb) * (fa + fb) % q
            nb = 2 * fa * fb % q
            if yt == 0:
                T = None
                fa, fb = na, nb
            else:
                m = (3 * xt * xt + 1) * invert(2 * yt, q) % q
                la = (m * (xq + xt) - yt) % q
                t1 = na * la % q
                t2 = nb * yq % q
                t3 = (na + nb) * (la + yq) % q
                fa = (t1 - t2) % q
                fb = (t3 - t1 - t2) % q
                x3 = (m * m - 2 * xt) % q
                T = (x3, (m * (xt - x3) - yt) % q)
            if bit:
                xt, yt = T
                if xt == xp and (yt + yp) % q == 0:
                    T = None
                else:
                    m = (yt - yp) * invert(xt - xp, q) % q
                    la = (m * (xq + xp) - yp) % q
                    t1 = fa * la % q
                    t2 = fb * yq % q
                    t3 = (fa + fb) * (la + yq) % q
                    fa = (t1 - t2) % q
                    fb = (t3 - t1 - t2) % q
                    x3 = (m * m - xt - xp) % q
                    T = (x3, (m * (xt - x3) - yt) % q)
        # final exponentiation: (q^2 - 1)/p = (q - 1) * cofactor
        f = (fa, fb)
        w = self._fq2_mul(self._fq2_conj(f), self._fq2_inv(f))
        return self._fq2_pow(w, int(self.cofactor))

    def _fq2_conj(self, A):
        return (A[0], (-A[1]) % self.q)


# bits of P after the leading one, as booleans for the pairing loop
_P_BITS = [c == "1" for c in bin(P)[3:]]


_GROUP_CACHE: dict[str, BilinearGroup] = {}


def get_group(profile: str = DEFAULT_PROFILE) -> BilinearGroup:
    """Shared BilinearGroup instance for a profile (cheap to reuse)."""
    if profile not in _GROUP_CACHE:
        _GROUP_CACHE[profile] = BilinearGroup(profile)
    return _GROUP_CACHE[profile]


def counter_scope(group: BilinearGroup, fn):
    """Run fn() and return (result, OpCounter of group ops inside it)."""
    with group.measure() as ctr:
        result = fn()
    return result, ctr


# ----------------------------------------------------------------------
# randomness


class SystemRng:
    """CSPRNG-backed randomness source (the production default)."""

    def bytes(self, n: int) -> bytes:
        return secrets.token_bytes(n)

    def scalar(self) -> int:
        while True:
            v = int.from_bytes(self.bytes(SCALAR_LEN), "big")
            if v < P:
                return v

    def nonzero_scalar(self) -> int:
        while True:
            v = self.scalar()
            if v != 0:
                return v


class SeededRng(SystemRng):
    """Deterministic SHAKE-256 counter stream for reproducible traces/tests."""

    _BLOCK = 8192

    def __init__(self, seed):
        if isinstance(seed, int):
            seed = seed.to_bytes(8, "big", signed=False)
        self._seed = bytes(seed)
        self._counter = 0
        self._buf = b""

    def bytes(self, n: int) -> bytes:
        while len(self._buf) < n:
            xof = hashlib.shake_256(
                b"CPAD-RNG" + self._seed + self._counter.to_bytes(8, "big")
            )
            self._counter += 1
            self._buf += xof.digest(max(self._BLOCK, n - len(self._buf)))
        out, self._buf = self._buf[:n], self._buf[n:]
        return out


DEFAULT_RNG = SystemRng()
