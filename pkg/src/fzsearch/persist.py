"""File formats: key files, index files, user directories.

All integers are big-endian.  Layouts:

``FZKY`` key file
    magic "FZKY", version byte, security bits (2), trapdoor bits (2),
    symbol bits (1), then trapdoor key, record key, blind key as 2-byte
    length-prefixed strings.  Written owner-readable only (0600).

``FZIX`` index file
    magic "FZIX", version byte, flags byte (bit0: 1=trie 0=listing,
    bit1: verifiable, bit2: 1=gram 0=wildcard), symbol bits (1),
    trapdoor bits (2), d (1), entry count (8).  Listing body: entries
    sorted by trapdoor bytes, each trapdoor || entry flag (1, bit0 =
    exact keyword entry) || record count (2) || 4-byte length-prefixed
    record blobs.  Trie body: nodes in depth-first pre-order, children
    sorted by symbol; per node a flag byte (bit0 = exact), a record
    count (2) with the record blobs, then a child count (2) followed
    by symbol byte + child subtree.  Verifiable tries add the 32-byte
    r1 before each node's record count and the 32-byte leaf tag after
    a leaf's records.  Builds are byte-deterministic.

``FZUD`` directory file
    magic "FZUD", version byte, epoch (8), entry count (4), then
    user id (2-byte length-prefixed UTF-8) || wrapped blob (2-byte
    length-prefixed).  Personal keys are never written.
"""

from __future__ import annotations

import io
import os

from .crypto import EncryptedRecord, KeyMaterial, check_geometry
from .errors import BadMagic, BadParameter, Truncated, VersionUnsupported
from .index import ListingIndex, TrieIndex, TrieNode
from .multiuser import UserDirectory
from .verifiable import AuthTrieIndex, AuthTrieNode, R1_BYTES

KEY_MAGIC = b"FZKY"
INDEX_MAGIC = b"FZIX"
DIR_MAGIC = b"FZUD"
VERSION = 1

FLAG_TRIE = 0x01
FLAG_VERIFIABLE = 0x02
FLAG_GRAM = 0x04


class _Reader:
    def __init__(self, data: bytes):
        self._view = memoryview(data)
        self._pos = 0

    def take(self, n: int) -> bytes:
        if self._pos + n > len(self._view):
            raise Truncated(f"need {n} bytes at offset {self._pos}")
        chunk = bytes(self._view[self._pos : self._pos + n])
        self._pos += n
        return chunk

    def u8(self) -> int:
        return self.take(1)[0]

    def u16(self) -> int:
        return int.from_bytes(self.take(2), "big")

    def u32(self) -> int:
        return int.from_bytes(self.take(4), "big")

    def u64(self) -> int:
        return int.from_bytes(self.take(8), "big")

    def done(self) -> bool:
        return self._pos == len(self._view)


def _check_header(r: _Reader, magic: bytes) -> None:
    got = r.take(len(magic))
    if got != magic:
        raise BadMagic(f"expected {magic!r}, found {got!r}")
    version = r.u8()
    if version != VERSION:
        raise VersionUnsupported(f"version {version} not supported")


# -- keys ------------------------------------------------------------------

def dumps_keys(km: KeyMaterial) -> bytes:
    out = io.BytesIO()
    out.write(KEY_MAGIC)
    out.write(bytes([VERSION]))
    out.write(km.security_bits.to_bytes(2, "big"))
    out.write(km.trapdoor_bits.to_bytes(2, "big"))
    out.write(bytes([km.symbol_bits]))
    for key in (km.trapdoor_key, km.record_key, km.blind_key):
        out.write(len(key).to_bytes(2, "big"))
        out.write(key)
    return out.getvalue()


def loads_keys(data: bytes) -> KeyMaterial:
    r = _Reader(data)
    _check_header(r, KEY_MAGIC)
    security_bits = r.u16()
    trapdoor_bits = r.u16()
    symbol_bits = r.u8()
    check_geometry(trapdoor_bits, symbol_bits)
    keys = [r.take(r.u16()) for _ in range(3)]
    if not r.done():
        raise Truncated("trailing bytes after key material")
    return KeyMaterial(
        trapdoor_key=keys[0],
        record_key=keys[1],
        blind_key=keys[2],
        security_bits=security_bits,
        trapdoor_bits=trapdoor_bits,
        symbol_bits=symbol_bits,
    )


def save_keys(km: KeyMaterial, path: str) -> None:
    """Write the key file with owner-only permissions."""
    fd = os.open(path, os.O_WRONLY | os.O_CREAT | os.O_TRUNC, 0o600)
    with os.fdopen(fd, "wb") as fh:
        fh.write(dumps_keys(km))


def load_keys(path: str) -> KeyMaterial:
    with open(path, "rb") as fh:
        return loads_keys(fh.read())


# -- indexes ---------------------------------------------------------------

def _write_records(out: io.BytesIO, records: list[EncryptedRecord]) -> None:
    out.write(len(records).to_bytes(2, "big"))
    for rec in records:
        blob = rec.blob
        out.write(len(blob).to_bytes(4, "big"))
        out.write(blob)


def _read_records(r: _Reader) -> list[EncryptedRecord]:
    return [EncryptedRecord.from_blob(r.take(r.u32())) for _ in range(r.u16())]


def _write_trie_node(out: io.BytesIO, node, verifiable: bool) -> None:
    out.write(bytes([1 if node.exact else 0]))
    if verifiable:
        out.write(node.r1)
    _write_records(out, node.records)
    if verifiable and node.records:
        out.write(node.tag)
    out.write(len(node.children).to_bytes(2, "big"))
    for sym in sorted(node.children):
        out.write(bytes([sym]))
        _write_trie_node(out, node.children[sym], verifiable)


def _read_trie_node(r: _Reader, verifiable: bool, parent_sym: int | None):
    node = AuthTrieNode(r0=parent_sym) if verifiable else TrieNode()
    node.exact = bool(r.u8() & 0x01)
    if verifiable:
        node.r1 = r.take(R1_BYTES)
    node.records = _read_records(r)
    if verifiable and node.records:
        node.tag = r.take(R1_BYTES)
    for _ in range(r.u16()):
        sym = r.u8()
        node.children[sym] = _read_trie_node(r, verifiable, sym)
    return node


def _count_leaves(node) -> int:
    if not node.children:
        return 1 if node.records else 0
    return sum(_count_leaves(c) for c in node.children.values())


def dumps_index(index) -> bytes:
    if isinstance(index, ListingIndex):
        flags = 0
    elif isinstance(index, AuthTrieIndex):
        flags = FLAG_TRIE | FLAG_VERIFIABLE
    elif isinstance(index, TrieIndex):
        flags = FLAG_TRIE
    else:
        raise BadParameter(f"cannot serialize {type(index).__name__}")
    if index.method == "gram":
        flags |= FLAG_GRAM
    if index.symbol_bits > 8:
        raise BadParameter("symbol_bits > 8 cannot serialize symbols as bytes")
    out = io.BytesIO()
    out.write(INDEX_MAGIC)
    out.write(bytes([VERSION, flags, index.symbol_bits]))
    out.write(index.trapdoor_bits.to_bytes(2, "big"))
    out.write(bytes([index.d]))
    if flags & FLAG_TRIE:
        out.write(_count_leaves(index.root).to_bytes(8, "big"))
        _write_trie_node(out, index.root, bool(flags & FLAG_VERIFIABLE))
    else:
        out.write(len(index.table).to_bytes(8, "big"))
        for t in sorted(index.table):
            out.write(t)
            out.write(bytes([1 if t in index.exact else 0]))
            _write_records(out, index.table[t])
    return out.getvalue()


def loads_index(data: bytes):
    r = _Reader(data)
    _check_header(r, INDEX_MAGIC)
    flags = r.u8()
    if flags & ~(FLAG_TRIE | FLAG_VERIFIABLE | FLAG_GRAM):
        raise BadParameter(f"unknown index flags {flags:#x}")
    if flags & FLAG_VERIFIABLE and not flags & FLAG_TRIE:
        raise BadParameter("verifiable flag requires a trie index")
    symbol_bits = r.u8()
    trapdoor_bits = r.u16()
    d = r.u8()
    check_geometry(trapdoor_bits, symbol_bits)
    count = r.u64()
    method = "gram" if flags & FLAG_GRAM else "wildcard"
    if flags & FLAG_TRIE:
        verifiable = bool(flags & FLAG_VERIFIABLE)
        root = _read_trie_node(r, verifiable, None)
        if not r.done():
            raise Truncated("trailing bytes after trie")
        cls = AuthTrieIndex if verifiable else TrieIndex
        index = cls(
            root=root, trapdoor_bits=trapdoor_bits, symbol_bits=symbol_bits, d=d, method=method
        )
        if _count_leaves(root) != count:
            raise Truncated("leaf count does not match header")
    else:
        table: dict[bytes, list[EncryptedRecord]] = {}
        exact: set[bytes] = set()
        for _ in range(count):
            t = r.take(trapdoor_bits // 8)
            if r.u8() & 0x01:
                exact.add(t)
            table[t] = _read_records(r)
        if not r.done():
            raise Truncated("trailing bytes after listing")
        index = ListingIndex(
            table=table,
            trapdoor_bits=trapdoor_bits,
            symbol_bits=symbol_bits,
            d=d,
            method=method,
            exact=exact,
        )
    return index


def save_index(index, path: str) -> None:
    with open(path, "wb") as fh:
        fh.write(dumps_index(index))


def load_index(path: str):
    with open(path, "rb") as fh:
        return loads_index(fh.read())


# -- user directories ------------------------------------------------------

def dumps_directory(directory: UserDirectory) -> bytes:
    out = io.BytesIO()
    out.write(DIR_MAGIC)
    out.write(bytes([VERSION]))
    out.write(directory.epoch.to_bytes(8, "big"))
    out.write(len(directory.wrapped).to_bytes(4, "big"))
    for user_id in sorted(directory.wrapped):
        uid = user_id.encode("utf-8")
        blob = directory.wrapped[user_id]
        out.write(len(uid).to_bytes(2, "big"))
        out.write(uid)
        out.write(len(blob).to_bytes(2, "big"))
        out.write(blob)
    return out.getvalue()


def loads_directory(data: bytes, current_xi: bytes = b"") -> UserDirectory:
    """Published view: wrapped blobs only; personal keys are not on disk."""
    r = _Reader(data)
    _check_header(r, DIR_MAGIC)
    epoch = r.u64()
    wrapped = {}
    for _ in range(r.u32()):
        user_id = r.take(r.u16()).decode("utf-8")
        wrapped[user_id] = r.take(r.u16())
    if not r.done():
        raise Truncated("trailing bytes after directory")
    return UserDirectory(current_xi=current_xi, epoch=epoch, wrapped=wrapped)


def save_directory(directory: UserDirectory, path: str) -> None:
    with open(path, "wb") as fh:
        fh.write(dumps_directory(directory))


def load_directory(path: str, current_xi: bytes = b"") -> UserDirectory:
    with open(path, "rb") as fh:
        return loads_directory(fh.read(), current_xi)
