"""TLV wire format shared by files, stores, and simulation messages.

A *stream* is ``b"CPAD" || version(1) || records``; message bodies and
nested payloads are bare record sequences.  Each record is
``type(1) || length(4, big-endian) || payload``.  The type-code table is
frozen in docs/wire_format.md; changing a code is a format break.
"""

from __future__ import annotations

from .errors import WireError
from .group import SCALAR_LEN

MAGIC = b"CPAD"
VERSION = 1

T_U32 = 0x01
T_STR = 0x02
T_BYTES = 0x03
T_SCALAR = 0x04
T_POINT = 0x05
T_TARGET = 0x06
T_NESTED = 0x07

_TYPE_NAMES = {
    T_U32: "u32",
    T_STR: "str",
    T_BYTES: "bytes",
    T_SCALAR: "scalar",
    T_POINT: "point",
    T_TARGET: "target",
    T_NESTED: "nested",
}


def record(rtype: int, payload: bytes) -> bytes:
    if len(payload) > 0xFFFFFFFF:
        raise WireError("record payload too large")
    return bytes([rtype]) + len(payload).to_bytes(4, "big") + payload


def rec_u32(value: int) -> bytes:
    if not 0 <= value <= 0xFFFFFFFF:
        raise WireError(f"u32 out of range: {value}")
    return record(T_U32, value.to_bytes(4, "big"))


def rec_str(value: str) -> bytes:
    return record(T_STR, value.encode("utf-8"))


def rec_bytes(value: bytes) -> bytes:
    return record(T_BYTES, value)


def rec_scalar(value: int) -> bytes:
    return record(T_SCALAR, value.to_bytes(SCALAR_LEN, "big"))


def rec_point(elem) -> bytes:
    return record(T_POINT, elem.to_bytes())


def rec_target(elem) -> bytes:
    return record(T_TARGET, elem.to_bytes())


def rec_nested(records: bytes) -> bytes:
    return record(T_NESTED, records)


def encode_stream(records: bytes) -> bytes:
    return MAGIC + bytes([VERSION]) + records


def strip_stream_header(data: bytes) -> bytes:
    if len(data) < 5 or data[:4] != MAGIC:
        raise WireError("missing stream magic")
    if data[4] != VERSION:
        raise WireError(f"unsupported stream version {data[4]}")
    return data[5:]


class Reader:
    """Sequential record reader with type checking."""

    def __init__(self, data: bytes, stream: bool = False):
        self._data = strip_stream_header(data) if stream else data
        self._pos = 0

    def at_end(self) -> bool:
        return self._pos >= len(self._data)

    def _next(self):
        d, pos = self._data, self._pos
        if pos + 5 > len(d):
            raise WireError("truncated record header")
        rtype = d[pos]
        length = int.from_bytes(d[pos + 1 : pos + 5], "big")
        if pos + 5 + length > len(d):
            raise WireError("truncated record payload")
        self._pos = pos + 5 + length
        return rtype, d[pos + 5 : self._pos]

    def expect(self, rtype: int) -> bytes:
        got, payload = self._next()
        if got != rtype:
            raise WireError(
                f"expected {_TYPE_NAMES.get(rtype, rtype)} record, "
                f"got {_TYPE_NAMES.get(got, got)}"
            )
        return payload

    def u32(self) -> int:
        payload = self.expect(T_U32)
        if len(payload) != 4:
            raise WireError("bad u32 length")
        return int.from_bytes(payload, "big")

    def str(self) -> str:
        try:
            return self.expect(T_STR).decode("utf-8")
        except UnicodeDecodeError as exc:
            raise WireError("invalid utf-8 in string record") from exc

    def bytes(self) -> bytes:
        return self.expect(T_BYTES)

    def scalar(self) -> int:
        payload = self.expect(T_SCALAR)
        from .group import BilinearGroup

        try:
            return BilinearGroup.scalar_from_bytes(payload)
        except Exception as exc:
            raise WireError(str(exc)) from exc

    def point(self, group):
        return group.decode_point(self.expect(T_POINT))

    def target(self, group):
        return group.decode_target(self.expect(T_TARGET))

    def nested(self) -> "Reader":
        return Reader(self.expect(T_NESTED))

    def finish(self):
        if not self.at_end():
            raise WireError("trailing data after final record")


def file_header(kind: str, profile: str) -> bytes:
    return rec_str(kind) + rec_str(profile)


def open_file(data: bytes, kind: str):
    """Reader over a file stream, checking kind tag; returns (reader, profile)."""
    r = Reader(data, stream=True)
    got = r.str()
    if got != kind:
        raise WireError(f"expected a {kind!r} file, got {got!r}")
    return r, r.str()
