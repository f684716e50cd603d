"""Cost measurement: median wall times plus exact operation counts for the
four dominant operations, swept over policy size or attribute count."""

from __future__ import annotations

import statistics
import time
from dataclasses import dataclass

from . import abe, deletion, payload
from .group import DEFAULT_RNG, OpCounter, get_group
from .policy import DUMMY_ATTR, Gate, Leaf

ENCRYPT_SIZES = (10, 20, 30, 40, 50)
ATTR_SIZES = (2, 4, 6, 8, 10)


@dataclass(frozen=True)
class BenchRow:
    size: int
    median_ns: int
    counts: OpCounter


def _attr_names(count: int) -> list[str]:
    return [DUMMY_ATTR] + [f"a{i}" for i in range(1, count)]


def _and_chain(attrs) -> Gate:
    return Gate("and", tuple(Leaf(a) for a in attrs))


def _measure(group, fn, trials) -> tuple[int, OpCounter]:
    fn()  # warmup, discarded
    times = []
    for _ in range(trials):
        t0 = time.perf_counter_ns()
        fn()
        times.append(time.perf_counter_ns() - t0)
    with group.measure() as ctr:
        fn()
    return int(statistics.median(times)), ctr


def bench_encrypt(sizes=ENCRYPT_SIZES, trials=5, group=None, rng=DEFAULT_RNG):
    """Encapsulation cost as the AND-chain policy grows to l rows (the
    share matrix is l x l for a pure AND chain)."""
    group = group or get_group()
    pp, _msk = abe.setup(_attr_names(max(sizes)), group, rng)
    rows = []
    for size in sizes:
        pol = _and_chain(_attr_names(size))
        median, ctr = _measure(group, lambda: abe.encapsulate(pp, pol, rng), trials)
        rows.append(BenchRow(size, median, ctr))
    return rows


def bench_keygen(sizes=ATTR_SIZES, trials=5, group=None, rng=DEFAULT_RNG):
    group = group or get_group()
    pp, msk = abe.setup(_attr_names(max(sizes)), group, rng)
    rows = []
    for size in sizes:
        attrs = _attr_names(size)
        median, ctr = _measure(group, lambda: abe.keygen(msk, pp, attrs, rng), trials)
        rows.append(BenchRow(size, median, ctr))
    return rows


def bench_decrypt(sizes=ATTR_SIZES, trials=5, group=None, rng=DEFAULT_RNG):
    """Decapsulation with all `size` rows participating in reconstruction."""
    group = group or get_group()
    pp, msk = abe.setup(_attr_names(max(sizes)), group, rng)
    rows = []
    for size in sizes:
        attrs = _attr_names(size)
        sk = abe.keygen(msk, pp, attrs, rng)
        _k, ct = abe.encapsulate(pp, _and_chain(attrs), rng)
        median, ctr = _measure(group, lambda: abe.decapsulate(ct, sk, pp), trials)
        rows.append(BenchRow(size, median, ctr))
    return rows


def bench_verify(sizes=ATTR_SIZES, trials=5, group=None, rng=DEFAULT_RNG):
    """Deletion-proof verification after an honest handshake."""
    group = group or get_group()
    pp, msk = abe.setup(_attr_names(max(sizes)), group, rng)
    ssk = deletion.gen_signing_keypair(group, rng)
    fsk = deletion.gen_signing_keypair(group, rng)
    rows = []
    for size in sizes:
        attrs = _attr_names(size)
        sk = abe.keygen(msk, pp, attrs, rng)
        k, ct = abe.encapsulate(pp, _and_chain(attrs), rng)
        fname = rng.scalar()
        tau = payload.make_tag(group, fname, k)
        req, state = deletion.make_del_request(group, fname, tau, ssk, rng)
        ct2, resp = deletion.reencrypt(group, ct, req, fsk, ssk.v, rng)
        median, ctr = _measure(
            group,
            lambda: deletion.verify_deletion(group, resp, ct2, sk, state, pp, fsk.v, fname),
            trials,
        )
        rows.append(BenchRow(size, median, ctr))
    return rows


BENCH_MODES = {
    "encrypt": (bench_encrypt, ENCRYPT_SIZES),
    "keygen": (bench_keygen, ATTR_SIZES),
    "decrypt": (bench_decrypt, ATTR_SIZES),
    "verify": (bench_verify, ATTR_SIZES),
}


def format_report(rows) -> str:
    lines = ["#size\tmedian_ns\texp_G\tmul_G\texp_GT\tmul_GT\tpairings"]
    for r in rows:
        c = r.counts
        lines.append(
            f"{r.size}\t{r.median_ns}\t{c.exp_g}\t{c.mul_g}\t{c.exp_gt}\t{c.mul_gt}\t{c.pairings}"
        )
    return "\n".join(lines) + "\n"


def fit_linear(xs, ys):
    """Least-squares line fit; returns (slope, intercept, r_squared)."""
    n = len(xs)
    mean_x = sum(xs) / n
    mean_y = sum(ys) / n
    sxx = sum((x - mean_x) ** 2 for x in xs)
    sxy = sum((x - mean_x) * (y - mean_y) for x, y in zip(xs, ys))
    slope = sxy / sxx
    intercept = mean_y - slope * mean_x
    ss_tot = sum((y - mean_y) ** 2 for y in ys)
    ss_res = sum((y - (slope * x + intercept)) ** 2 for x, y in zip(xs, ys))
    r2 = 1.0 if ss_tot == 0 else 1.0 - ss_res / ss_tot
    return slope, intercept, r2
