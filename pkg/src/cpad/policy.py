"""Monotone access policies and their linear secret sharing programs.

Grammar (keywords case-insensitive, AND binds tighter than OR):

    expr   := term (OR term)*
    term   := factor (AND factor)*
    factor := ATTR | '(' expr ')'
    ATTR   := [A-Za-z_][A-Za-z0-9_:-]*

A policy compiles to a share-generating matrix M (l rows, n columns) with a
row-to-attribute map rho, using the standard vector-labeling walk: the root
carries (1); an AND gate splits its label v into v||1 for the child and
0..0||-1 for the rest; an OR gate copies its label to every child.  A set
of attributes is authorized exactly when (1, 0, ..., 0) lies in the span of
its rows, and the solver below recovers the combination coefficients.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

from .errors import EmptyPolicyError, NotAuthorized, PolicySyntaxError, WireError
from .group import P
from . import wire

DUMMY_ATTR = "dummy"

_TOKEN_RE = re.compile(r"[A-Za-z_][A-Za-z0-9_:-]*")


@dataclass(frozen=True)
class Leaf:
    attr: str


@dataclass(frozen=True)
class Gate:
    op: str  # "and" | "or"
    children: tuple


AccessPolicy = Leaf | Gate


def attributes(node: AccessPolicy) -> set[str]:
    if isinstance(node, Leaf):
        return {node.attr}
    out: set[str] = set()
    for child in node.children:
        out |= attributes(child)
    return out


def count_leaves(node: AccessPolicy) -> int:
    if isinstance(node, Leaf):
        return 1
    return sum(count_leaves(c) for c in node.children)


def evaluate(node: AccessPolicy, attrs) -> bool:
    """Brute-force boolean evaluation; the oracle side of the LSSS check."""
    if isinstance(node, Leaf):
        return node.attr in attrs
    if node.op == "and":
        return all(evaluate(c, attrs) for c in node.children)
    return any(evaluate(c, attrs) for c in node.children)


def pretty(node: AccessPolicy) -> str:
    """Render a policy; parse(pretty(t)) reproduces t exactly."""

    def render(n, parent_op):
        if isinstance(n, Leaf):
            return n.attr
        sep = " AND " if n.op == "and" else " OR "
        text = sep.join(render(c, n.op) for c in n.children)
        # parens preserve tree shape: always for nested gates except an
        # AND directly under an OR, where precedence already implies them
        if parent_op is None or (parent_op == "or" and n.op == "and"):
            return text
        return f"({text})"

    return render(node, None)


# ----------------------------------------------------------------------
# parsing


class _Tokens:
    def __init__(self, text: str):
        self.text = text
        self.pos = 0
        self.items = []  # (kind, value, offset)
        i, n = 0, len(text)
        while i < n:
            ch = text[i]
            if ch.isspace():
                i += 1
                continue
            if ch in "()":
                self.items.append((ch, ch, i))
                i += 1
                continue
            m = _TOKEN_RE.match(text, i)
            if not m:
                raise PolicySyntaxError(f"unexpected character {ch!r}", i)
            word = m.group(0)
            upper = word.upper()
            if upper in ("AND", "OR"):
                self.items.append((upper, word, i))
            else:
                self.items.append(("ATTR", word, i))
            i = m.end()

    def peek(self):
        return self.items[self.pos] if self.pos < len(self.items) else (None, None, len(self.text))

    def take(self):
        item = self.peek()
        self.pos += 1
        return item


def parse_policy(text: str) -> AccessPolicy:
    toks = _Tokens(text)
    if not toks.items:
        raise EmptyPolicyError("policy text contains no formula")

    def expr():
        parts = [term()]
        while toks.peek()[0] == "OR":
            toks.take()
            parts.append(term())
        return parts[0] if len(parts) == 1 else Gate("or", tuple(parts))

    def term():
        parts = [factor()]
        while toks.peek()[0] == "AND":
            toks.take()
            parts.append(factor())
        return parts[0] if len(parts) == 1 else Gate("and", tuple(parts))

    def factor():
        kind, value, offset = toks.take()
        if kind == "ATTR":
            return Leaf(value)
        if kind == "(":
            node = expr()
            kind2, _, offset2 = toks.take()
            if kind2 != ")":
                raise PolicySyntaxError("expected ')'", offset2)
            return node
        raise PolicySyntaxError(f"expected attribute or '(', got {value!r}", offset)

    root = expr()
    kind, value, offset = toks.peek()
    if kind is not None:
        raise PolicySyntaxError(f"unexpected trailing {value!r}", offset)
    return root


# ----------------------------------------------------------------------
# LSSS compilation


@dataclass(frozen=True)
class LsssProgram:
    """Share-generating matrix over Z_p with its row labeling."""

    matrix: tuple  # l rows, each a tuple of n ints in [0, p)
    rho: tuple  # row index -> attribute id

    @property
    def l(self) -> int:
        return len(self.matrix)

    @property
    def n(self) -> int:
        return len(self.matrix[0])

    def rows_for(self, attrs) -> list[int]:
        return [i for i, a in enumerate(self.rho) if a in attrs]

    def to_records(self) -> bytes:
        body = wire.rec_u32(self.l) + wire.rec_u32(self.n)
        flat = b"".join(
            v.to_bytes(32, "big") for row in self.matrix for v in row
        )
        body += wire.rec_bytes(flat)
        for attr in self.rho:
            body += wire.rec_str(attr)
        return body

    @classmethod
    def from_reader(cls, r: wire.Reader) -> "LsssProgram":
        l = r.u32()
        n = r.u32()
        flat = r.bytes()
        if l == 0 or n == 0 or len(flat) != 32 * l * n:
            raise WireError("inconsistent share-matrix dimensions")
        vals = [int.from_bytes(flat[k : k + 32], "big") for k in range(0, len(flat), 32)]
        if any(v >= P for v in vals):
            raise WireError("share-matrix entry out of range")
        matrix = tuple(tuple(vals[i * n : (i + 1) * n]) for i in range(l))
        rho = tuple(r.str() for _ in range(l))
        return cls(matrix, rho)


def _validate(node):
    if isinstance(node, Leaf):
        if not node.attr:
            raise ValueError("empty attribute name")
        return
    if not isinstance(node, Gate) or node.op not in ("and", "or"):
        raise ValueError(f"policy node is not monotone AND/OR/leaf: {node!r}")
    if len(node.children) < 2:
        raise ValueError("gate needs at least two children")
    for child in node.children:
        _validate(child)


def compile_lsss(policy: AccessPolicy) -> LsssProgram:
    """Vector-labeling conversion of a monotone formula to (M, rho)."""
    _validate(policy)
    rows: list[tuple[tuple[int, ...], str]] = []
    width = 1

    def assign(node, vec):
        nonlocal width
        if isinstance(node, Leaf):
            rows.append((vec, node.attr))
            return
        if node.op == "or":
            for child in node.children:
                assign(child, vec)
            return
        # AND: peel children off one at a time, widening by one column each;
        # the width must grow before descending or a nested AND would reuse
        # the freshly allocated column
        current = vec
        for child in node.children[:-1]:
            padded = current + (0,) * (width - len(current))
            label = padded + (1,)
            current = (0,) * width + (P - 1,)
            width += 1
            assign(child, label)
        assign(node.children[-1], current)

    assign(policy, (1,))
    matrix = tuple(vec + (0,) * (width - len(vec)) for vec, _ in rows)
    rho = tuple(attr for _, attr in rows)
    return LsssProgram(matrix, rho)


# ----------------------------------------------------------------------
# shares and reconstruction


@dataclass(frozen=True)
class ShareVector:
    lam: tuple  # per-row shares, lam[i] = M_i . secret_vec
    secret_vec: tuple  # (s, y_2, ..., y_n)


@dataclass(frozen=True)
class ReconstructionPlan:
    rows: tuple  # selected row indices, ascending
    omega: tuple  # coefficient per selected row, all nonzero


def make_shares(prog: LsssProgram, secret: int, rng) -> ShareVector:
    vec = (secret % P,) + tuple(rng.scalar() for _ in range(prog.n - 1))
    lam = tuple(
        sum(m * v for m, v in zip(row, vec)) % P for row in prog.matrix
    )
    return ShareVector(lam, vec)


def find_reconstruction(prog: LsssProgram, attrs) -> ReconstructionPlan:
    """Coefficients combining the rows labeled by `attrs` into (1, 0, .., 0).

    Gaussian elimination over Z_p; candidate rows are tried in ascending
    index order and free coefficients are pinned to zero, so the result is
    deterministic.  Raises NotAuthorized when the target is outside the span.
    """
    selected = prog.rows_for(attrs)
    if not selected:
        raise NotAuthorized("no ciphertext rows match the attribute set")
    n = prog.n
    # columns: one per selected row; equations: one per matrix column
    aug = [[prog.matrix[i][coord] for i in selected] for coord in range(n)]
    target = [1] + [0] * (n - 1)
    m = len(selected)
    pivot_col_of_row = []
    rank = 0
    for col in range(m):
        pivot = None
        for r in range(rank, n):
            if aug[r][col]:
                pivot = r
                break
        if pivot is None:
            continue
        aug[rank], aug[pivot] = aug[pivot], aug[rank]
        target[rank], target[pivot] = target[pivot], target[rank]
        inv = pow(aug[rank][col], -1, P)
        aug[rank] = [v * inv % P for v in aug[rank]]
        target[rank] = target[rank] * inv % P
        for r in range(n):
            if r != rank and aug[r][col]:
                f = aug[r][col]
                aug[r] = [(v - f * w) % P for v, w in zip(aug[r], aug[rank])]
                target[r] = (target[r] - f * target[rank]) % P
        pivot_col_of_row.append(col)
        rank += 1
    for r in range(rank, n):
        if target[r]:
            raise NotAuthorized("attribute set does not satisfy the policy")
    coeffs = [0] * m
    for r, col in enumerate(pivot_col_of_row):
        coeffs[col] = target[r]
    rows = tuple(selected[j] for j in range(m) if coeffs[j])
    omega = tuple(coeffs[j] for j in range(m) if coeffs[j])
    if not rows:
        # degenerate: target hit with all-zero coefficients is impossible
        raise NotAuthorized("attribute set does not satisfy the policy")
    return ReconstructionPlan(rows, omega)


def reconstruct_secret(prog: LsssProgram, plan: ReconstructionPlan, lam) -> int:
    return sum(w * lam[i] for i, w in zip(plan.rows, plan.omega)) % P
