"""Command-line front end for the full lifecycle plus the benchmark sweep.

Because there is no live fog or cloud process at desk scale, the store
directories stand in for those parties: `encrypt` writes the key ciphertext
into the fog store and the sealed payload into the cloud store, and
`delete` executes the fog-side handshake (signature check, forwarded cloud
deletion, row rewrite) against the same directories.

Exit codes: 0 success / verification true; 1 protocol refusal (verify
false, not-authorized, bad signature, unknown fname); 2 usage error;
3 I/O or encoding error.
"""

from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path

from . import abe, bench, deletion, payload, wire
from . import policy as policy_mod
from .errors import (
    AuthenticationFailure,
    BadSignature,
    CpadError,
    DecodeError,
    NoPendingRequest,
    NotAuthorized,
    PendingRequestExists,
    UnknownFname,
    WireError,
)
from .fogsim import CloudStore, FogStore
from .group import (
    DEFAULT_PROFILE,
    PROFILES,
    BilinearGroup,
    SeededRng,
    SystemRng,
    get_group,
)

EXIT_OK = 0
EXIT_REFUSED = 1
EXIT_USAGE = 2
EXIT_IO = 3


def _rng(args):
    return SeededRng(args.seed) if args.seed is not None else SystemRng()


def _write_secret(path: Path, data: bytes):
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_bytes(data)
    os.chmod(path, 0o600)


def _write_public(path: Path, data: bytes):
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_bytes(data)


def _load_pp(path) -> abe.PublicParams:
    return abe.PublicParams.from_bytes(Path(path).read_bytes())


def _parse_fname(text: str) -> int:
    try:
        return BilinearGroup.scalar_from_bytes(bytes.fromhex(text))
    except (ValueError, DecodeError) as exc:
        raise WireError(f"bad fname hex: {exc}") from exc


# ----------------------------------------------------------------------
# signing-key files


def _sigkey_bytes(group, pair: deletion.SigningKeypair) -> bytes:
    body = wire.file_header("sigkey", group.profile)
    body += wire.rec_scalar(pair.sec)
    body += wire.rec_point(pair.v)
    return wire.encode_stream(body)


def _sigkey_from_bytes(data: bytes):
    r, profile = wire.open_file(data, "sigkey")
    group = get_group(profile)
    sec = r.scalar()
    v = r.point(group)
    r.finish()
    return deletion.SigningKeypair(sec, v), group


def _load_or_create_sigkey(path: Path, group, rng):
    if path.exists():
        pair, _ = _sigkey_from_bytes(path.read_bytes())
        return pair
    pair = deletion.gen_signing_keypair(group, rng)
    _write_secret(path, _sigkey_bytes(group, pair))
    return pair


def _fog_sigkey(fog_dir, group, rng) -> deletion.SigningKeypair:
    return _load_or_create_sigkey(Path(fog_dir) / "fog_keys.tlv", group, rng)


# ----------------------------------------------------------------------
# object-state files (tag written at encrypt, pending at delete)


def _tag_path(state_dir, fname: int) -> Path:
    return Path(state_dir) / f"{BilinearGroup.scalar_to_bytes(fname).hex()}.tag.tlv"


def _pending_path(state_dir, fname: int) -> Path:
    return Path(state_dir) / f"{BilinearGroup.scalar_to_bytes(fname).hex()}.pending.tlv"


def _save_tag(state_dir, group, fname: int, tag: payload.DeletionTag):
    body = wire.file_header("tag", group.profile)
    body += wire.rec_scalar(fname)
    body += wire.rec_scalar(tag.tau)
    _write_secret(_tag_path(state_dir, fname), wire.encode_stream(body))


def _load_tag(state_dir, fname: int) -> payload.DeletionTag:
    path = _tag_path(state_dir, fname)
    if not path.exists():
        raise UnknownFname("no deletion tag stored for that fname")
    r, _profile = wire.open_file(path.read_bytes(), "tag")
    stored = r.scalar()
    tau = r.scalar()
    r.finish()
    if stored != fname:
        raise WireError("tag file fname mismatch")
    return payload.DeletionTag(tau)


def _save_pending(state_dir, group, state: deletion.ObjectDeletionState,
                  resp: deletion.DeletionResponse, fpk):
    body = wire.file_header("pending", group.profile)
    body += wire.rec_scalar(state.fname)
    body += wire.rec_scalar(state.q)
    body += wire.rec_scalar(state.u)
    body += wire.rec_scalar(state.tau.tau)
    body += wire.rec_nested(resp.to_records())
    body += wire.rec_point(fpk)
    _write_secret(_pending_path(state_dir, state.fname), wire.encode_stream(body))


def _load_pending(state_dir, fname: int):
    path = _pending_path(state_dir, fname)
    if not path.exists():
        raise NoPendingRequest("no pending deletion for that fname")
    r, profile = wire.open_file(path.read_bytes(), "pending")
    group = get_group(profile)
    stored = r.scalar()
    q = r.scalar()
    u = r.scalar()
    tau = r.scalar()
    resp = deletion.DeletionResponse.from_reader(r.nested(), group)
    fpk = r.point(group)
    r.finish()
    if stored != fname:
        raise WireError("pending file fname mismatch")
    state = deletion.ObjectDeletionState(fname, q, u, payload.DeletionTag(tau))
    return state, resp, fpk


# ----------------------------------------------------------------------
# subcommands


def cmd_setup(args) -> int:
    universe = [u for u in args.universe.split(",") if u]
    group = get_group(args.profile)
    rng = _rng(args)
    try:
        pp, msk = abe.setup(universe, group, rng)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    out = Path(args.out)
    _write_public(out / "pp.tlv", pp.to_bytes())
    _write_secret(out / "msk.tlv", msk.to_bytes(group))
    print(f"wrote {out / 'pp.tlv'} and {out / 'msk.tlv'}")
    return EXIT_OK


def cmd_keygen(args) -> int:
    msk, group = abe.MasterSecretKey.from_bytes(Path(args.msk).read_bytes())
    pp = _load_pp(args.pp)
    attrs = [a for a in args.attrs.split(",") if a]
    try:
        sk = abe.keygen(msk, pp, attrs, _rng(args))
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    _write_secret(Path(args.out), sk.to_bytes(group))
    print(f"wrote {args.out}")
    return EXIT_OK


def cmd_encrypt(args) -> int:
    pp = _load_pp(args.pp)
    group = pp.group
    rng = _rng(args)
    try:
        pol = policy_mod.parse_policy(args.policy)
    except CpadError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    data = Path(args.infile).read_bytes()
    state_dir = Path(args.state)
    state_dir.mkdir(parents=True, exist_ok=True)
    ssk = (
        _sigkey_from_bytes(Path(args.ssk).read_bytes())[0]
        if args.ssk
        else _load_or_create_sigkey(state_dir / "object_ssk.tlv", group, rng)
    )
    fname = rng.scalar()
    try:
        k, ct = abe.encapsulate(pp, pol, rng)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    sealed = payload.seal(data, k, fname, rng)
    _save_tag(state_dir, group, fname, payload.make_tag(group, fname, k))
    with FogStore(args.fog, group) as fog:
        fog.put(fname, ssk.v, ct)
    with CloudStore(args.cloud, group) as cloud:
        cloud.put(fname, ssk.v, sealed)
    _fog_sigkey(args.fog, group, rng)  # make sure the fog has signing keys
    print(BilinearGroup.scalar_to_bytes(fname).hex())
    return EXIT_OK


def cmd_decrypt(args) -> int:
    sk, group = abe.UserSecretKey.from_bytes(Path(args.key).read_bytes())
    fname = _parse_fname(args.fname)
    with FogStore(args.fog, group) as fog:
        _spk, ct = fog.get(fname)
    with CloudStore(args.cloud, group) as cloud:
        _spk2, sealed = cloud.get(fname)
    k = abe.decapsulate(ct, sk)
    data = payload.unseal(sealed, k, fname)
    Path(args.out).write_bytes(data)
    print(f"wrote {args.out} ({len(data)} bytes)")
    return EXIT_OK


def cmd_delete(args) -> int:
    ssk, group = _sigkey_from_bytes(Path(args.ssk).read_bytes())
    fname = _parse_fname(args.fname)
    rng = _rng(args)
    tag = _load_tag(args.state, fname)
    if _pending_path(args.state, fname).exists():
        raise PendingRequestExists("a deletion for that fname is already pending")
    req, state = deletion.make_del_request(group, fname, tag, ssk, rng)
    fsk = _fog_sigkey(args.fog, group, rng)
    with FogStore(args.fog, group) as fog:
        spk, ct = fog.get(fname)
        if not deletion.verify_sig(group, spk, req.body(), req.sig):
            raise BadSignature("deletion request signature invalid")
        # forward the request to the cloud before rewriting, as the fog does
        with CloudStore(args.cloud, group) as cloud:
            _cspk, _sealed = cloud.get(fname)
            if not deletion.verify_sig(group, _cspk, req.body(), req.sig):
                raise BadSignature("cloud: deletion request signature invalid")
            cloud.delete(fname)
        new_ct, resp = deletion.reencrypt(group, ct, req, fsk, spk, rng)
        fog.put(fname, spk, new_ct)
    _save_pending(args.state, group, state, resp, fsk.v)
    print("deletion executed; run `cpad verify` to check the proof")
    return EXIT_OK


def cmd_verify(args) -> int:
    sk, group = abe.UserSecretKey.from_bytes(Path(args.key).read_bytes())
    pp = _load_pp(args.pp)
    fname = _parse_fname(args.fname)
    state, resp, fpk = _load_pending(args.state, fname)
    with FogStore(args.fog, group) as fog:
        _spk, ct = fog.get(fname)
    ok = deletion.verify_deletion(group, resp, ct, sk, state, pp, fpk, fname)
    if ok:
        _pending_path(args.state, fname).unlink()
        print("deletion verified")
        return EXIT_OK
    print("deletion verification FAILED", file=sys.stderr)
    return EXIT_REFUSED


def cmd_bench(args) -> int:
    fn, default_sizes = bench.BENCH_MODES[args.mode]
    sizes = (
        tuple(int(s) for s in args.sizes.split(",")) if args.sizes else default_sizes
    )
    group = get_group(args.profile)
    rows = fn(sizes=sizes, trials=args.trials, group=group, rng=_rng(args))
    report = bench.format_report(rows)
    if args.out:
        Path(args.out).write_text(report)
    print(f"# mode={args.mode} profile={group.profile} trials={args.trials}")
    print(report, end="")
    xs = [r.size for r in rows]
    ys = [r.median_ns for r in rows]
    if len(rows) >= 3:
        slope, intercept, r2 = bench.fit_linear(xs, ys)
        print(f"# linear fit: {slope / 1e6:.3f} ms/unit + {intercept / 1e6:.3f} ms, R^2={r2:.4f}")
    return EXIT_OK


# ----------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    top = argparse.ArgumentParser(
        prog="cpad",
        description="Attribute-policy encryption with verifiable deletion: "
        "lifecycle commands over fog/cloud store directories.",
    )
    sub = top.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--seed", type=int, default=None,
                       help="deterministic randomness (testing only)")

    p = sub.add_parser("setup", help="create system parameters")
    p.add_argument("--universe", required=True, help="comma-separated attributes (must include dummy)")
    p.add_argument("--out", required=True, help="output directory for pp.tlv/msk.tlv")
    p.add_argument("--profile", default=DEFAULT_PROFILE, choices=sorted(PROFILES))
    common(p)
    p.set_defaults(fn=cmd_setup)

    p = sub.add_parser("keygen", help="issue an attribute key")
    p.add_argument("--attrs", required=True)
    p.add_argument("--msk", required=True)
    p.add_argument("--pp", required=True)
    p.add_argument("--out", required=True)
    common(p)
    p.set_defaults(fn=cmd_keygen)

    p = sub.add_parser("encrypt", help="seal a file into the fog/cloud stores")
    p.add_argument("--policy", required=True)
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--fog", required=True)
    p.add_argument("--cloud", required=True)
    p.add_argument("--pp", required=True)
    p.add_argument("--state", required=True, help="owner state directory (tags, signing key)")
    p.add_argument("--ssk", default=None, help="owner signing key file (default: state dir)")
    common(p)
    p.set_defaults(fn=cmd_encrypt)

    p = sub.add_parser("decrypt", help="fetch and open a stored file")
    p.add_argument("--fname", required=True)
    p.add_argument("--key", required=True)
    p.add_argument("--fog", required=True)
    p.add_argument("--cloud", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(fn=cmd_decrypt)

    p = sub.add_parser("delete", help="run the deletion handshake")
    p.add_argument("--fname", required=True)
    p.add_argument("--ssk", required=True)
    p.add_argument("--fog", required=True)
    p.add_argument("--cloud", required=True)
    p.add_argument("--state", required=True)
    common(p)
    p.set_defaults(fn=cmd_delete)

    p = sub.add_parser("verify", help="check the deletion proof")
    p.add_argument("--fname", required=True)
    p.add_argument("--key", required=True, help="a key satisfying the file's policy (the owner's)")
    p.add_argument("--pp", required=True)
    p.add_argument("--fog", required=True)
    p.add_argument("--state", required=True)
    p.set_defaults(fn=cmd_verify)

    p = sub.add_parser("bench", help="operation-count and timing sweep")
    p.add_argument("--mode", required=True, choices=sorted(bench.BENCH_MODES))
    p.add_argument("--sizes", default=None, help="comma-separated sweep points")
    p.add_argument("--trials", type=int, default=5)
    p.add_argument("--out", default=None, help="write a TSV report here")
    p.add_argument("--profile", default=DEFAULT_PROFILE, choices=sorted(PROFILES))
    common(p)
    p.set_defaults(fn=cmd_bench)

    return top


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except (NotAuthorized, AuthenticationFailure, BadSignature, UnknownFname,
            NoPendingRequest, PendingRequestExists) as exc:
        print(f"refused: {exc}", file=sys.stderr)
        return EXIT_REFUSED
    except (WireError, DecodeError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except CpadError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
