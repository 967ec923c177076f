"""Verifiable search: an authenticated trie, per-trapdoor proofs, and Verify.

Every node carries a chain digest ``r1 = PRF(sk0, depth || symbol || parent_r1)``
(root: ``PRF(sk0, "root")``), so anyone holding ``sk0`` can recompute the r1
of the node a trapdoor's own symbols lead to — a proof cannot borrow the r1
of a different node.  Leaves additionally carry
``leaf_tag = PRF(sk0, r1 || digest(records))`` binding the exact record list.

A proof per trapdoor reports the matched prefix length as a bit sequence
(all ones on a full match, ones then a single zero on a mismatch), the
deepest matched node's r1, and for full matches the leaf tag and record
digest.  The verifier checks the proof count, recomputes each sampled chain,
and re-derives every full-match digest from the records actually returned.

Known residual gap (inherited from the protocol): a server that claims a
SHORTER match than reality presents the r1 of a real ancestor node, which
verifies; without knowledge of the trie shape the client cannot tell a true
mismatch from an under-reported one.  Dropping, forging, or tampering with
results is detected; silent under-reporting at a true prefix is not.
"""

from __future__ import annotations

import enum
import hmac as _hmac
import random
from dataclasses import dataclass, field
from hashlib import sha256
from typing import Iterator

from .crypto import EncryptedRecord, KeyMaterial, prf_bytes, record_digest
from .errors import EditBoundExceeded, Truncated
from .index import ResultSet, SearchRequest, _dedup, build_entries, iter_leaves, symbolize

R1_BYTES = 32


def root_r1(record_key: bytes) -> bytes:
    return prf_bytes(record_key, b"C:root", R1_BYTES)


def chain_r1(record_key: bytes, depth: int, symbol: int, parent_r1: bytes) -> bytes:
    return prf_bytes(record_key, b"C:" + bytes([depth, symbol]) + parent_r1, R1_BYTES)


def leaf_tag(record_key: bytes, r1: bytes, digest: bytes) -> bytes:
    return prf_bytes(record_key, b"L:" + r1 + digest, R1_BYTES)


@dataclass
class AuthTrieNode:
    children: dict[int, "AuthTrieNode"] = field(default_factory=dict)
    records: list[EncryptedRecord] = field(default_factory=list)
    r0: int | None = None  # symbol on the edge from the parent; None at the root
    r1: bytes = b""
    tag: bytes | None = None  # populated at leaves only
    exact: bool = False  # leaf is some keyword's zero-edit variant


@dataclass
class AuthTrieIndex:
    root: AuthTrieNode
    trapdoor_bits: int
    symbol_bits: int
    d: int
    method: str = "wildcard"

    @property
    def depth(self) -> int:
        return self.trapdoor_bits // self.symbol_bits

    def nodes(self) -> Iterator[AuthTrieNode]:
        stack = [self.root]
        while stack:
            node = stack.pop()
            yield node
            stack.extend(node.children.values())

    def leaves(self) -> Iterator[tuple[tuple[int, ...], AuthTrieNode]]:
        return iter_leaves(self.root)


@dataclass(frozen=True)
class Proof:
    matched_len: int
    match_bits: tuple[int, ...]
    last_r1: bytes
    leaf_tag: bytes | None = None
    record_digest: bytes | None = None


class VerdictReason(enum.Enum):
    OK = "Ok"
    COUNT_MISMATCH = "CountMismatch"
    CHAIN_MISMATCH = "ChainMismatch"
    LEAF_TAG_MISMATCH = "LeafTagMismatch"
    BIT_PATTERN_INVALID = "BitPatternInvalid"


@dataclass(frozen=True)
class Verdict:
    accepted: bool
    reason: VerdictReason
    failing_index: int | None = None


def build_auth_trie(
    corpus: dict[str, list[bytes]], d: int, km: KeyMaterial, method: str = "wildcard"
) -> AuthTrieIndex:
    """Trie build plus (r0, r1) on every node and a tag on every leaf."""
    root = AuthTrieNode(r1=root_r1(km.record_key))
    entries, exact = build_entries(corpus, d, km, method)
    for t, records in entries.items():
        node = root
        for depth, sym in enumerate(symbolize(t, km.symbol_bits), start=1):
            child = node.children.get(sym)
            if child is None:
                child = AuthTrieNode(r0=sym, r1=chain_r1(km.record_key, depth, sym, node.r1))
                node.children[sym] = child
            node = child
        node.records.extend(records)
        node.exact = t in exact
    index = AuthTrieIndex(
        root=root,
        trapdoor_bits=km.trapdoor_bits,
        symbol_bits=km.symbol_bits,
        d=d,
        method=method,
    )
    for node in index.nodes():
        if node.records:
            node.tag = leaf_tag(km.record_key, node.r1, record_digest(node.records))
    return index


def search_with_proof(index: AuthTrieIndex, req: SearchRequest) -> tuple[ResultSet, list[Proof]]:
    """Search plus one proof per trapdoor.

    The record list short-circuits on an exact hit exactly like the plain
    trie search, but proofs are still produced for every trapdoor — the
    verifier's first check is that none went missing.
    """
    if req.k > index.d:
        raise EditBoundExceeded(f"request k={req.k} exceeds index d={index.d}")
    depth = index.depth
    proofs: list[Proof] = []
    gathered: list[EncryptedRecord] = []
    exact: list[EncryptedRecord] | None = None
    for i, t in enumerate(req.trapdoors):
        node = index.root
        matched = 0
        for sym in symbolize(t, index.symbol_bits):
            child = node.children.get(sym)
            if child is None:
                break
            node = child
            matched += 1
        if matched == depth:
            proofs.append(
                Proof(
                    matched_len=matched,
                    match_bits=(1,) * matched,
                    last_r1=node.r1,
                    leaf_tag=node.tag,
                    record_digest=record_digest(node.records),
                )
            )
            if i == 0 and node.exact:
                exact = list(node.records)
            elif exact is None:
                gathered.extend(node.records)
        else:
            proofs.append(
                Proof(matched_len=matched, match_bits=(1,) * matched + (0,), last_r1=node.r1)
            )
    if exact is not None:
        return ResultSet(records=_dedup(exact), exact_hit=True), proofs
    return ResultSet(records=_dedup(gathered), exact_hit=False), proofs


def _shape_ok(proof: Proof, depth: int) -> bool:
    if not 0 <= proof.matched_len <= depth:
        return False
    if proof.matched_len == depth:
        return (
            proof.match_bits == (1,) * depth
            and proof.leaf_tag is not None
            and proof.record_digest is not None
        )
    return (
        proof.match_bits == (1,) * proof.matched_len + (0,)
        and proof.leaf_tag is None
        and proof.record_digest is None
    )


def verify(
    req: SearchRequest,
    results: ResultSet,
    proofs: list[Proof],
    km: KeyMaterial,
    sample_rate: float = 1.0,
    rng: random.Random | None = None,
) -> Verdict:
    """Check a search transcript; every failure is a Verdict, never an exception.

    Checks, in order: proof count; per-proof bit-pattern shape; for sampled
    proofs the r1 chain recomputed from the trapdoor's own symbols; and for
    full matches the record digest re-derived from the returned records
    (consumed in proof order) plus the leaf tag binding that digest.  With an
    exact hit only the first proof's records are present.
    """
    if len(proofs) != len(req.trapdoors):
        return Verdict(False, VerdictReason.COUNT_MISMATCH)
    depth = km.depth
    rng = rng or random.Random()
    base = root_r1(km.record_key)
    records = results.records
    if results.exact_hit and (not proofs or proofs[0].matched_len != depth):
        return Verdict(False, VerdictReason.BIT_PATTERN_INVALID, 0)
    pos = 0
    for i, proof in enumerate(proofs):
        if not _shape_ok(proof, depth):
            return Verdict(False, VerdictReason.BIT_PATTERN_INVALID, i)
        sampled = sample_rate >= 1.0 or rng.random() < sample_rate
        if sampled:
            r = base
            for j, sym in enumerate(symbolize(req.trapdoors[i], km.symbol_bits), start=1):
                if j > proof.matched_len:
                    break
                r = chain_r1(km.record_key, j, sym, r)
            if not _hmac.compare_digest(r, proof.last_r1):
                return Verdict(False, VerdictReason.CHAIN_MISMATCH, i)
        if proof.matched_len == depth and (not results.exact_hit or i == 0):
            digest = sha256()
            found = False
            while pos < len(records):
                digest.update(records[pos].blob)
                pos += 1
                if digest.digest() == proof.record_digest:
                    found = True
                    break
            if not found:
                return Verdict(False, VerdictReason.LEAF_TAG_MISMATCH, i)
            if sampled:
                expect = leaf_tag(km.record_key, proof.last_r1, proof.record_digest)
                if not _hmac.compare_digest(expect, proof.leaf_tag):
                    return Verdict(False, VerdictReason.LEAF_TAG_MISMATCH, i)
    if pos != len(records):
        return Verdict(False, VerdictReason.LEAF_TAG_MISMATCH)
    return Verdict(True, VerdictReason.OK)


def _pack_bits(bits: tuple[int, ...]) -> bytes:
    out = bytearray((len(bits) + 7) // 8)
    for i, b in enumerate(bits):
        if b:
            out[i // 8] |= 0x80 >> (i % 8)
    return bytes(out)


def _unpack_bits(buf: bytes, count: int) -> tuple[int, ...]:
    return tuple((buf[i // 8] >> (7 - i % 8)) & 1 for i in range(count))


def encode_proof(proof: Proof) -> bytes:
    """Wire form: matched_len, packed bits, then length-prefixed r1 (+ tag, digest)."""
    out = bytes([proof.matched_len]) + _pack_bits(proof.match_bits)
    out += bytes([len(proof.last_r1)]) + proof.last_r1
    if proof.leaf_tag is not None:
        out += bytes([len(proof.leaf_tag)]) + proof.leaf_tag
        out += bytes([len(proof.record_digest)]) + proof.record_digest
    return out


def decode_proof(buf: bytes, depth: int) -> Proof:
    """Inverse of ``encode_proof``; needs the tree depth to size the bitfield."""
    view = memoryview(buf)
    pos = 0

    def take(n: int) -> bytes:
        nonlocal pos
        if pos + n > len(view):
            raise Truncated("proof encoding ends early")
        chunk = bytes(view[pos : pos + n])
        pos += n
        return chunk

    matched_len = take(1)[0]
    full = matched_len == depth
    nbits = matched_len if full else matched_len + 1
    bits = _unpack_bits(take((nbits + 7) // 8), nbits)
    r1 = take(take(1)[0])
    tag = digest = None
    if full:
        tag = take(take(1)[0])
        digest = take(take(1)[0])
    if pos != len(view):
        raise Truncated("trailing bytes after proof")
    return Proof(matched_len=matched_len, match_bits=bits, last_r1=r1, leaf_tag=tag, record_digest=digest)
