"""Deterministic four-party simulation: authority, smart object, fog, cloud.

Parties are message-driven state machines over a single-threaded FIFO
transport.  A scenario is a line-oriented script:

    OPTION fog_cheat=skip_update        # or bad_gamma
    STEP aa setup universe=dummy,a,b
    STEP aa keygen to=object attrs=dummy,a
    STEP aa keygen to=alice attrs=dummy,a
    STEP object upload file=f1 policy="dummy AND a" data="hello"
    STEP alice fetch file=f1 expect=ok
    STEP object delete file=f1
    STEP object verify file=f1 expect=true
    STEP alice fetch file=f1 expect=gone

Fixed party ids: ``aa``, ``object``, ``fog``, ``cloud``; any other name in a
``keygen to=`` argument declares a user.  ``file=`` arguments are aliases
bound to the random fname chosen at upload.  With a fixed seed, two runs of
the same script produce identical traces.

Fog and cloud stores persist one TLV file per fname (atomic replace, an
advisory lock on the directory); the fog holds only key ciphertexts, the
cloud only sealed payloads.
"""

from __future__ import annotations

import hashlib
import shlex
from dataclasses import dataclass, field
from enum import IntEnum
from pathlib import Path

from filelock import FileLock, Timeout

from . import abe, deletion, payload, wire
from . import policy as policy_mod
from .errors import (
    AuthenticationFailure,
    BadSignature,
    NotAuthorized,
    PendingRequestExists,
    ScenarioError,
    StoreLocked,
    UnknownFname,
    WireError,
)
from .group import BilinearGroup, SeededRng, get_group


class MsgKind(IntEnum):
    KEY_ISSUE = 1
    UPLOAD = 2
    STORE_PAYLOAD = 3
    FETCH_CT = 4
    CT_RESULT = 5
    FETCH_PAYLOAD = 6
    PAYLOAD_RESULT = 7
    DEL_REQUEST = 8
    CLOUD_DELETE = 9
    DEL_RESPONSE = 10
    ACK = 11
    NOT_FOUND = 12


@dataclass(frozen=True)
class Message:
    sender: str
    receiver: str
    kind: MsgKind
    body: bytes  # bare TLV records, schema fixed per kind

    def encode(self, group: BilinearGroup) -> bytes:
        return wire.encode_stream(
            wire.rec_str(self.sender)
            + wire.rec_str(self.receiver)
            + wire.rec_u32(int(self.kind))
            + wire.rec_nested(self.body)
        )


def fname_hex(fname: int) -> str:
    return BilinearGroup.scalar_to_bytes(fname).hex()


# ----------------------------------------------------------------------
# persistent stores


class _TlvStore:
    """Directory of one TLV file per fname with an advisory lock."""

    kind: str

    def __init__(self, root, group: BilinearGroup):
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)
        self.group = group
        self._lock = FileLock(str(self.root / ".lock"))
        try:
            self._lock.acquire(timeout=0)
        except Timeout as exc:
            raise StoreLocked(f"store {self.root} is in use") from exc

    def close(self):
        if self._lock.is_locked:
            self._lock.release()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()

    def _path(self, fname: int) -> Path:
        return self.root / f"{fname_hex(fname)}.tlv"

    def _write(self, fname: int, stream: bytes):
        tmp = self._path(fname).with_suffix(".tmp")
        tmp.write_bytes(stream)
        tmp.replace(self._path(fname))

    def _read(self, fname: int) -> bytes:
        path = self._path(fname)
        if not path.exists():
            raise UnknownFname(f"no record for fname {fname_hex(fname)[:16]}…")
        return path.read_bytes()

    def delete(self, fname: int):
        path = self._path(fname)
        if not path.exists():
            raise UnknownFname(f"no record for fname {fname_hex(fname)[:16]}…")
        path.unlink()

    def _record_paths(self):
        for path in sorted(self.root.glob("*.tlv")):
            stem = path.stem
            if len(stem) == 64 and all(c in "0123456789abcdef" for c in stem):
                yield path

    def fnames(self) -> list[int]:
        return [int(path.stem, 16) for path in self._record_paths()]

    def digest(self) -> bytes:
        h = hashlib.sha256(self.kind.encode())
        for path in self._record_paths():
            h.update(path.name.encode())
            h.update(hashlib.sha256(path.read_bytes()).digest())
        return h.digest()


class FogStore(_TlvStore):
    """fname -> (uploader public key, key ciphertext)."""

    kind = "fog-record"

    def put(self, fname: int, spk, ct: abe.KeyCiphertext):
        body = wire.file_header(self.kind, self.group.profile)
        body += wire.rec_scalar(fname)
        body += wire.rec_point(spk)
        body += wire.rec_nested(ct.to_records())
        self._write(fname, wire.encode_stream(body))

    def get(self, fname: int):
        r, _profile = wire.open_file(self._read(fname), self.kind)
        stored = r.scalar()
        if stored != fname:
            raise WireError("fname mismatch inside fog record")
        spk = r.point(self.group)
        ct = abe.KeyCiphertext.from_reader(r.nested(), self.group)
        r.finish()
        return spk, ct


class CloudStore(_TlvStore):
    """fname -> (uploader public key, sealed payload)."""

    kind = "cloud-record"

    def put(self, fname: int, spk, sealed: payload.SealedPayload):
        body = wire.file_header(self.kind, self.group.profile)
        body += wire.rec_scalar(fname)
        body += wire.rec_point(spk)
        body += wire.rec_nested(sealed.to_records())
        self._write(fname, wire.encode_stream(body))

    def get(self, fname: int):
        r, _profile = wire.open_file(self._read(fname), self.kind)
        stored = r.scalar()
        if stored != fname:
            raise WireError("fname mismatch inside cloud record")
        spk = r.point(self.group)
        sealed = payload.SealedPayload.from_reader(r.nested())
        r.finish()
        return spk, sealed


# ----------------------------------------------------------------------
# parties


class Party:
    def __init__(self, name: str, sim: "Simulation"):
        self.name = name
        self.sim = sim
        self.pp: abe.PublicParams | None = None

    def handle(self, msg: Message) -> list[Message]:
        raise ScenarioError(self.sim.step_index, f"{self.name} cannot handle {msg.kind.name}")

    def state_digest(self) -> bytes:
        return hashlib.sha256(self.name.encode()).digest()


class AttributeAuthority(Party):
    def __init__(self, name, sim):
        super().__init__(name, sim)
        self.msk: abe.MasterSecretKey | None = None

    def do_setup(self, universe) -> list[Message]:
        self.pp, self.msk = abe.setup(universe, self.sim.group, self.sim.rng)
        self.sim.publish_params(self.pp)
        return []

    def do_keygen(self, to: str, attrs) -> list[Message]:
        if self.msk is None:
            raise ScenarioError(self.sim.step_index, "keygen before setup")
        sk = abe.keygen(self.msk, self.pp, attrs, self.sim.rng)
        body = wire.rec_bytes(sk.to_bytes(self.sim.group))
        return [Message(self.name, to, MsgKind.KEY_ISSUE, body)]

    def state_digest(self) -> bytes:
        h = hashlib.sha256(b"aa")
        if self.pp is not None:
            h.update(self.pp.to_bytes())
            h.update(self.msk.to_bytes(self.sim.group))
        return h.digest()


class KeyHolder(Party):
    """Common state for parties that receive an attribute key."""

    def __init__(self, name, sim):
        super().__init__(name, sim)
        self.sk: abe.UserSecretKey | None = None

    def on_key_issue(self, msg: Message):
        r = wire.Reader(msg.body)
        self.sk, _ = abe.UserSecretKey.from_bytes(r.bytes())
        r.finish()
        return []


class User(KeyHolder):
    def __init__(self, name, sim):
        super().__init__(name, sim)
        self.ct_cache: dict[int, abe.KeyCiphertext] = {}
        self.payload_cache: dict[int, payload.SealedPayload] = {}
        self.fetched: dict[int, tuple[str, bytes]] = {}  # fname -> (status, data)

    def do_fetch(self, fname: int) -> list[Message]:
        self.ct_cache.pop(fname, None)
        self.payload_cache.pop(fname, None)
        self.fetched.pop(fname, None)
        body = wire.rec_scalar(fname)
        return [
            Message(self.name, self.sim.fog.name, MsgKind.FETCH_CT, body),
            Message(self.name, self.sim.cloud.name, MsgKind.FETCH_PAYLOAD, body),
        ]

    def handle(self, msg: Message) -> list[Message]:
        if msg.kind == MsgKind.KEY_ISSUE:
            return self.on_key_issue(msg)
        if msg.kind == MsgKind.CT_RESULT:
            r = wire.Reader(msg.body)
            fname = r.scalar()
            r.point(self.sim.group)  # uploader spk, unused by readers
            self.ct_cache[fname] = abe.KeyCiphertext.from_reader(r.nested(), self.sim.group)
            r.finish()
            return self._try_decrypt(fname)
        if msg.kind == MsgKind.PAYLOAD_RESULT:
            r = wire.Reader(msg.body)
            fname = r.scalar()
            self.payload_cache[fname] = payload.SealedPayload.from_reader(r.nested())
            r.finish()
            return self._try_decrypt(fname)
        if msg.kind == MsgKind.NOT_FOUND:
            r = wire.Reader(msg.body)
            fname = r.scalar()
            what = r.str()
            r.finish()
            self.fetched[fname] = ("gone", b"")
            self.sim.note(f"{self.name}: {what} for {fname_hex(fname)[:12]}… not found")
            return []
        return super().handle(msg)

    def _try_decrypt(self, fname: int) -> list[Message]:
        ct = self.ct_cache.get(fname)
        sealed = self.payload_cache.get(fname)
        if ct is None or sealed is None or self.sk is None:
            return []
        try:
            k = abe.decapsulate(ct, self.sk, self.pp)
        except NotAuthorized:
            self.fetched[fname] = ("denied", b"")
            self.sim.note(f"{self.name}: not-authorized for {fname_hex(fname)[:12]}…")
            return []
        try:
            data = payload.unseal(sealed, k, fname)
        except AuthenticationFailure:
            self.fetched[fname] = ("badkey", b"")
            self.sim.note(f"{self.name}: payload authentication failed")
            return []
        self.fetched[fname] = ("ok", data)
        return []

    def state_digest(self) -> bytes:
        h = hashlib.sha256(b"user" + self.name.encode())
        if self.sk is not None:
            h.update(self.sk.to_bytes(self.sim.group))
        for fname in sorted(self.fetched):
            status, data = self.fetched[fname]
            h.update(BilinearGroup.scalar_to_bytes(fname))
            h.update(status.encode())
            h.update(hashlib.sha256(data).digest())
        return h.digest()


class SmartObject(KeyHolder):
    def __init__(self, name, sim):
        super().__init__(name, sim)
        self.ssk = deletion.gen_signing_keypair(sim.group, sim.rng)
        self.tags: dict[int, payload.DeletionTag] = {}
        self.pending: dict[int, deletion.ObjectDeletionState] = {}
        self.responses: dict[int, deletion.DeletionResponse] = {}
        self.awaiting_verify: set[int] = set()
        self.verify_results: dict[int, bool] = {}

    def do_upload(self, fname: int, policy: policy_mod.AccessPolicy, data: bytes) -> list[Message]:
        if self.pp is None:
            raise ScenarioError(self.sim.step_index, "upload before setup")
        k, ct = abe.encapsulate(self.pp, policy, self.sim.rng)
        sealed = payload.seal(data, k, fname, self.sim.rng)
        self.tags[fname] = payload.make_tag(self.sim.group, fname, k)
        # local plaintext is dropped once sealed; only the tag stays behind
        body = wire.rec_scalar(fname)
        body += wire.rec_point(self.ssk.v)
        body += wire.rec_nested(ct.to_records())
        body += wire.rec_nested(sealed.to_records())
        return [Message(self.name, self.sim.fog.name, MsgKind.UPLOAD, body)]

    def do_delete(self, fname: int) -> list[Message]:
        if fname not in self.tags:
            raise ScenarioError(self.sim.step_index, "delete for unknown fname")
        if fname in self.pending:
            raise PendingRequestExists(
                f"deletion already pending for {fname_hex(fname)[:12]}…"
            )
        req, state = deletion.make_del_request(
            self.sim.group, fname, self.tags[fname], self.ssk, self.sim.rng
        )
        self.pending[fname] = state
        return [Message(self.name, self.sim.fog.name, MsgKind.DEL_REQUEST, req.to_records())]

    def do_verify(self, fname: int) -> list[Message]:
        if self.sk is None:
            raise ScenarioError(self.sim.step_index, "object has no attribute key")
        if fname not in self.pending or fname not in self.responses:
            raise ScenarioError(self.sim.step_index, "verify without a pending deletion response")
        self.awaiting_verify.add(fname)
        return [Message(self.name, self.sim.fog.name, MsgKind.FETCH_CT, wire.rec_scalar(fname))]

    def handle(self, msg: Message) -> list[Message]:
        if msg.kind == MsgKind.KEY_ISSUE:
            return self.on_key_issue(msg)
        if msg.kind == MsgKind.ACK:
            return []
        if msg.kind == MsgKind.DEL_RESPONSE:
            r = wire.Reader(msg.body)
            fname = r.scalar()
            resp = deletion.DeletionResponse.from_reader(r, self.sim.group)
            r.finish()
            if fname not in self.pending:
                raise ScenarioError(self.sim.step_index, "deletion response without request")
            self.responses[fname] = resp
            return []
        if msg.kind == MsgKind.CT_RESULT:
            r = wire.Reader(msg.body)
            fname = r.scalar()
            r.point(self.sim.group)
            ct = abe.KeyCiphertext.from_reader(r.nested(), self.sim.group)
            r.finish()
            if fname not in self.awaiting_verify:
                return []
            self.awaiting_verify.discard(fname)
            ok = deletion.verify_deletion(
                self.sim.group,
                self.responses.pop(fname),
                ct,
                self.sk,
                self.pending.pop(fname),
                self.pp,
                self.sim.fog.fsk.v,
                fname,
            )
            self.verify_results[fname] = ok
            self.sim.note(f"{self.name}: verify={'true' if ok else 'false'}")
            return []
        return super().handle(msg)

    def state_digest(self) -> bytes:
        h = hashlib.sha256(b"object" + self.name.encode())
        h.update(BilinearGroup.scalar_to_bytes(self.ssk.sec))
        for fname in sorted(self.tags):
            h.update(BilinearGroup.scalar_to_bytes(fname))
            h.update(BilinearGroup.scalar_to_bytes(self.tags[fname].tau))
        for fname in sorted(self.pending):
            st = self.pending[fname]
            h.update(b"pend")
            h.update(BilinearGroup.scalar_to_bytes(st.q))
            h.update(BilinearGroup.scalar_to_bytes(st.u))
        for fname in sorted(self.verify_results):
            h.update(b"ver")
            h.update(BilinearGroup.scalar_to_bytes(fname))
            h.update(b"\x01" if self.verify_results[fname] else b"\x00")
        return h.digest()


class FogNode(Party):
    """Stores key ciphertexts, relays payloads, executes re-encryption.

    `cheat` simulates a dishonest device: "skip_update" answers with a valid
    proof but leaves the ciphertext untouched; "bad_gamma" rewrites the rows
    with an exponent unrelated to the eta it returns.
    """

    def __init__(self, name, sim, store: FogStore, cheat: str | None = None):
        super().__init__(name, sim)
        self.store = store
        self.fsk = deletion.gen_signing_keypair(sim.group, sim.rng)
        self.cheat = cheat

    def handle(self, msg: Message) -> list[Message]:
        if msg.kind == MsgKind.ACK:
            return []
        if msg.kind == MsgKind.UPLOAD:
            r = wire.Reader(msg.body)
            fname = r.scalar()
            spk = r.point(self.sim.group)
            ct = abe.KeyCiphertext.from_reader(r.nested(), self.sim.group)
            sealed_records = r.expect(wire.T_NESTED)
            r.finish()
            self.store.put(fname, spk, ct)
            # forward the sealed payload; nothing payload-shaped is retained
            body = wire.rec_scalar(fname) + wire.rec_point(spk) + wire.rec_nested(sealed_records)
            return [Message(self.name, self.sim.cloud.name, MsgKind.STORE_PAYLOAD, body)]
        if msg.kind == MsgKind.FETCH_CT:
            r = wire.Reader(msg.body)
            fname = r.scalar()
            r.finish()
            try:
                spk, ct = self.store.get(fname)
            except UnknownFname:
                body = wire.rec_scalar(fname) + wire.rec_str("key-ciphertext")
                return [Message(self.name, msg.sender, MsgKind.NOT_FOUND, body)]
            body = wire.rec_scalar(fname) + wire.rec_point(spk) + wire.rec_nested(ct.to_records())
            return [Message(self.name, msg.sender, MsgKind.CT_RESULT, body)]
        if msg.kind == MsgKind.DEL_REQUEST:
            req = deletion.DeletionRequest.from_reader(
                wire.Reader(msg.body), self.sim.group
            )
            try:
                spk, ct = self.store.get(req.fname)
            except UnknownFname as exc:
                raise ScenarioError(self.sim.step_index, str(exc)) from exc
            if not deletion.verify_sig(self.sim.group, spk, req.body(), req.sig):
                raise ScenarioError(self.sim.step_index, "bad signature on deletion request")
            # forward the request to the cloud byte-for-byte, then re-encrypt
            out = [Message(self.name, self.sim.cloud.name, MsgKind.CLOUD_DELETE, msg.body)]
            new_ct, resp = self._reencrypt(ct, req, spk)
            self.store.put(req.fname, spk, new_ct)
            body = wire.rec_scalar(req.fname) + resp.to_records()
            out.append(Message(self.name, msg.sender, MsgKind.DEL_RESPONSE, body))
            return out
        return super().handle(msg)

    def _reencrypt(self, ct, req, spk):
        group, rng = self.sim.group, self.sim.rng
        if self.cheat is None:
            return deletion.reencrypt(group, ct, req, self.fsk, spk, rng)
        v = rng.nonzero_scalar()
        eta = group.zp_pow(req.q, v)
        resp = deletion.DeletionResponse(
            eta, deletion.sign(group, self.fsk, deletion.response_body(eta))
        )
        if self.cheat == "skip_update":
            return ct, resp
        if self.cheat == "bad_gamma":
            gamma_star = group.zp_pow(req.theta, rng.nonzero_scalar())
            return deletion.rekey_rows(ct, gamma_star, group), resp
        raise ScenarioError(self.sim.step_index, f"unknown cheat mode {self.cheat!r}")

    def state_digest(self) -> bytes:
        h = hashlib.sha256(b"fog")
        h.update(BilinearGroup.scalar_to_bytes(self.fsk.sec))
        h.update(self.store.digest())
        return h.digest()


class Cloud(Party):
    def __init__(self, name, sim, store: CloudStore):
        super().__init__(name, sim)
        self.store = store

    def delete_payload(self, fname: int, req: deletion.DeletionRequest):
        """Validate the forwarded request and drop the sealed payload."""
        spk, _sealed = self.store.get(fname)
        if not deletion.verify_sig(self.sim.group, spk, req.body(), req.sig):
            raise BadSignature("cloud: deletion request signature invalid")
        self.store.delete(fname)

    def handle(self, msg: Message) -> list[Message]:
        if msg.kind == MsgKind.STORE_PAYLOAD:
            r = wire.Reader(msg.body)
            fname = r.scalar()
            spk = r.point(self.sim.group)
            sealed = payload.SealedPayload.from_reader(r.nested())
            r.finish()
            self.store.put(fname, spk, sealed)
            return []
        if msg.kind == MsgKind.FETCH_PAYLOAD:
            r = wire.Reader(msg.body)
            fname = r.scalar()
            r.finish()
            try:
                _spk, sealed = self.store.get(fname)
            except UnknownFname:
                body = wire.rec_scalar(fname) + wire.rec_str("sealed-payload")
                return [Message(self.name, msg.sender, MsgKind.NOT_FOUND, body)]
            body = wire.rec_scalar(fname) + wire.rec_nested(sealed.to_records())
            return [Message(self.name, msg.sender, MsgKind.PAYLOAD_RESULT, body)]
        if msg.kind == MsgKind.CLOUD_DELETE:
            req = deletion.DeletionRequest.from_reader(
                wire.Reader(msg.body), self.sim.group
            )
            try:
                self.delete_payload(req.fname, req)
            except (BadSignature, UnknownFname) as exc:
                raise ScenarioError(self.sim.step_index, str(exc)) from exc
            body = wire.rec_scalar(req.fname) + wire.rec_str("payload-deleted")
            return [Message(self.name, msg.sender, MsgKind.ACK, body)]
        return super().handle(msg)

    def state_digest(self) -> bytes:
        return hashlib.sha256(b"cloud" + self.store.digest()).digest()


# ----------------------------------------------------------------------
# trace


@dataclass(frozen=True)
class TraceEntry:
    step: int
    seq: int
    msg: Message
    state: str  # hex digest of global state after delivery
    notes: tuple = ()

    def line(self, group) -> str:
        parts = [
            f"step={self.step}",
            f"seq={self.seq}",
            f"from={self.msg.sender}",
            f"to={self.msg.receiver}",
            f"kind={self.msg.kind.name}",
            f"body={hashlib.sha256(self.msg.encode(group)).hexdigest()}",
            f"state={self.state}",
        ]
        parts.extend(f"note={n!r}" for n in self.notes)
        return " ".join(parts)


@dataclass
class TraceLog:
    entries: list = field(default_factory=list)

    def to_text(self, group) -> str:
        return "\n".join(e.line(group) for e in self.entries) + "\n"

    def digest(self, group) -> str:
        return hashlib.sha256(self.to_text(group).encode()).hexdigest()

    def notes(self) -> list[str]:
        out = []
        for e in self.entries:
            out.extend(e.notes)
        return out


# ----------------------------------------------------------------------
# scenario engine


@dataclass(frozen=True)
class _Step:
    index: int
    party: str
    action: str
    args: dict


def _parse_script(text: str):
    options: dict[str, str] = {}
    steps: list[_Step] = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        try:
            tokens = shlex.split(line)
        except ValueError as exc:
            raise ScenarioError(len(steps), f"line {lineno}: {exc}") from exc
        head = tokens[0].upper()
        if head == "OPTION":
            for tok in tokens[1:]:
                key, _, value = tok.partition("=")
                options[key] = value
            continue
        if head != "STEP":
            raise ScenarioError(len(steps), f"line {lineno}: expected STEP or OPTION")
        if len(tokens) < 3:
            raise ScenarioError(len(steps), f"line {lineno}: STEP needs party and action")
        args = {}
        for tok in tokens[3:]:
            key, sep, value = tok.partition("=")
            if not sep:
                raise ScenarioError(len(steps), f"line {lineno}: bad argument {tok!r}")
            args[key] = value
        steps.append(_Step(len(steps), tokens[1], tokens[2].lower(), args))
    return options, steps


class Simulation:
    """One scenario run; stores live under `root`/fog and `root`/cloud."""

    def __init__(self, script: str, seed: int, root, profile: str | None = None):
        self.options, self.steps = _parse_script(script)
        profile = profile or self.options.get("profile") or "f768"
        self.group = get_group(profile)
        self.rng = SeededRng(seed)
        self.root = Path(root)
        self.fog_store = FogStore(self.root / "fog", self.group)
        self.cloud_store = CloudStore(self.root / "cloud", self.group)
        self.step_index = -1
        self.trace = TraceLog()
        self._pending_notes: list[str] = []
        self.fnames: dict[str, int] = {}
        self.uploads: dict[int, bytes] = {}

        self.aa = AttributeAuthority("aa", self)
        self.fog = FogNode("fog", self, self.fog_store, cheat=self.options.get("fog_cheat"))
        self.cloud = Cloud("cloud", self, self.cloud_store)
        self.object = SmartObject("object", self)
        self.parties: dict[str, Party] = {
            "aa": self.aa,
            "fog": self.fog,
            "cloud": self.cloud,
            "object": self.object,
        }
        # users are declared by keygen targets, in script order
        for step in self.steps:
            if step.action == "keygen":
                to = step.args.get("to", "")
                if to and to not in self.parties:
                    self.parties[to] = User(to, self)

    def close(self):
        self.fog_store.close()
        self.cloud_store.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()

    # engine plumbing ---------------------------------------------------

    def publish_params(self, pp: abe.PublicParams):
        for party in self.parties.values():
            party.pp = pp

    def note(self, text: str):
        self._pending_notes.append(text)

    def state_digest(self) -> str:
        h = hashlib.sha256()
        for name in sorted(self.parties):
            h.update(self.parties[name].state_digest())
        return h.hexdigest()

    def _resolve_fname(self, step: _Step) -> int:
        alias = step.args.get("file")
        if not alias:
            raise ScenarioError(step.index, "missing file= argument")
        if alias not in self.fnames:
            raise ScenarioError(step.index, f"unknown file alias {alias!r}")
        return self.fnames[alias]

    def run(self) -> TraceLog:
        for step in self.steps:
            self.step_index = step.index
            outgoing = self._start_step(step)
            self._drain(step, outgoing)
            self._check_expect(step)
        return self.trace

    def _start_step(self, step: _Step) -> list[Message]:
        party = self.parties.get(step.party)
        if party is None:
            raise ScenarioError(step.index, f"unknown party {step.party!r}")
        args = step.args
        if step.action == "setup":
            if not isinstance(party, AttributeAuthority):
                raise ScenarioError(step.index, "only aa can setup")
            universe = args.get("universe", "").split(",")
            return party.do_setup([u for u in universe if u])
        if step.action == "keygen":
            if not isinstance(party, AttributeAuthority):
                raise ScenarioError(step.index, "only aa can keygen")
            attrs = [a for a in args.get("attrs", "").split(",") if a]
            return party.do_keygen(args["to"], attrs)
        if step.action == "upload":
            if not isinstance(party, SmartObject):
                raise ScenarioError(step.index, "only the object can upload")
            alias = args.get("file")
            if not alias or alias in self.fnames:
                raise ScenarioError(step.index, "upload needs a fresh file= alias")
            if "data_hex" in args:
                data = bytes.fromhex(args["data_hex"])
            else:
                data = args.get("data", "").encode()
            try:
                pol = policy_mod.parse_policy(args["policy"])
            except KeyError:
                raise ScenarioError(step.index, "upload needs policy=") from None
            fname = self.rng.scalar()
            self.fnames[alias] = fname
            self.uploads[fname] = data
            return party.do_upload(fname, pol, data)
        if step.action == "fetch":
            if not isinstance(party, User):
                raise ScenarioError(step.index, "only users fetch")
            return party.do_fetch(self._resolve_fname(step))
        if step.action == "delete":
            if not isinstance(party, SmartObject):
                raise ScenarioError(step.index, "only the object deletes")
            return party.do_delete(self._resolve_fname(step))
        if step.action == "verify":
            if not isinstance(party, SmartObject):
                raise ScenarioError(step.index, "only the object verifies")
            return party.do_verify(self._resolve_fname(step))
        raise ScenarioError(step.index, f"unknown action {step.action!r}")

    def _drain(self, step: _Step, queue: list[Message]):
        queue = list(queue)
        seq = 0
        while queue:
            msg = queue.pop(0)
            receiver = self.parties.get(msg.receiver)
            if receiver is None:
                raise ScenarioError(step.index, f"message to unknown party {msg.receiver!r}")
            if not isinstance(msg.kind, MsgKind):
                raise ScenarioError(step.index, f"unknown message kind {msg.kind!r}")
            queue.extend(receiver.handle(msg))
            notes = tuple(self._pending_notes)
            self._pending_notes.clear()
            self.trace.entries.append(
                TraceEntry(step.index, seq, msg, self.state_digest(), notes)
            )
            seq += 1

    def _check_expect(self, step: _Step):
        want = step.args.get("expect")
        if not want:
            return
        if step.action == "fetch":
            fname = self.fnames[step.args["file"]]
            party = self.parties[step.party]
            status, data = party.fetched.get(fname, ("missing", b""))
            if status != want:
                raise ScenarioError(step.index, f"fetch expected {want}, got {status}")
            if want == "ok" and data != self.uploads[fname]:
                raise ScenarioError(step.index, "fetched data does not match upload")
            return
        if step.action == "verify":
            fname = self.fnames[step.args["file"]]
            got = self.parties[step.party].verify_results.get(fname)
            got_text = {True: "true", False: "false", None: "missing"}[got]
            if got_text != want:
                raise ScenarioError(step.index, f"verify expected {want}, got {got_text}")
            return
        raise ScenarioError(step.index, f"expect= not supported on {step.action}")


def run_scenario(script: str, seed: int, root, profile: str | None = None) -> TraceLog:
    """Execute a scenario script deterministically; see the module docstring
    for the script format."""
    with Simulation(script, seed, root, profile) as sim:
        return sim.run()
