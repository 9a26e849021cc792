"""Canonical byte serialization: length-prefixed field concatenation.

This is the bit-exact wire contract every signature and content hash in the
system is computed over (see docs/protocol.md). A field is a big-endian u32
length followed by the raw bytes; a message is the concatenation of its
fields in declared order. Inside its field, a list is a u32 count followed
by each item as a field, and an integer (chain heights) is fixed-width
big-endian u64 — so ``Cursor.u64``/``Cursor.list`` read one field each and
parse its content.
"""

from __future__ import annotations

import struct
from typing import Iterable, List

from .errors import ValidationError

MAX_FIELD_LEN = 0xFFFFFFFF


def encode_field(data: bytes) -> bytes:
    if len(data) > MAX_FIELD_LEN:
        raise ValidationError("field exceeds u32 length prefix")
    return struct.pack(">I", len(data)) + data


def encode_fields(*fields: bytes) -> bytes:
    return b"".join(encode_field(f) for f in fields)


def encode_list(items: Iterable[bytes]) -> bytes:
    items = list(items)
    return struct.pack(">I", len(items)) + b"".join(encode_field(i) for i in items)


def encode_u64(value: int) -> bytes:
    if value < 0:
        raise ValidationError("u64 fields are non-negative")
    return struct.pack(">Q", value)


def encode_str(text: str) -> bytes:
    return text.encode("utf-8")


class Cursor:
    """Sequential decoder for the canonical format."""

    def __init__(self, data: bytes) -> None:
        self._data = data
        self._pos = 0

    def _take(self, n: int) -> bytes:
        if self._pos + n > len(self._data):
            raise ValidationError("truncated canonical message")
        chunk = self._data[self._pos : self._pos + n]
        self._pos += n
        return chunk

    def field(self) -> bytes:
        (length,) = struct.unpack(">I", self._take(4))
        return self._take(length)

    def list(self) -> List[bytes]:
        sub = Cursor(self.field())
        (count,) = struct.unpack(">I", sub._take(4))
        items = [sub.field() for _ in range(count)]
        sub.expect_done()
        return items

    def u64(self) -> int:
        data = self.field()
        if len(data) != 8:
            raise ValidationError("u64 field must contain exactly 8 bytes")
        (value,) = struct.unpack(">Q", data)
        return value

    def text(self) -> str:
        return self.field().decode("utf-8")

    def done(self) -> bool:
        return self._pos == len(self._data)

    def expect_done(self) -> None:
        if not self.done():
            raise ValidationError("trailing bytes in canonical message")
