"""Server-side index structures and search over them.

Two layouts share one entry map: the listing index is a flat table from
trapdoor to encrypted records; the trie splits each trapdoor into n-bit
symbols and files it root-to-leaf, so trapdoors sharing a prefix share
nodes.  Both answer the same requests with the same records — the trie is
an access structure, not a semantics change.

Requests put the exact word's trapdoor first; a search that matches it
returns only that entry's records (the exact hit short-circuits the fuzzy
walk, mirroring the search definition's exact-match rule).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterator

from .crypto import KeyMaterial, EncryptedRecord, encrypt_record, record_nonce, trapdoor
from .errors import BadParameter, EditBoundExceeded
from .fuzzyset import fuzzy_set


def symbolize(t: bytes, n: int) -> tuple[int, ...]:
    """Split a trapdoor into big-endian symbols of ``n`` bits each."""
    bits = len(t) * 8
    if n <= 0 or bits % n != 0:
        raise BadParameter(f"{n} bits does not evenly divide a {bits}-bit trapdoor")
    val = int.from_bytes(t, "big")
    count = bits // n
    mask = (1 << n) - 1
    return tuple((val >> (n * (count - 1 - i))) & mask for i in range(count))


def symbols_to_bytes(symbols: tuple[int, ...], n: int) -> bytes:
    """Recompose a symbol sequence into the trapdoor it came from."""
    bits = n * len(symbols)
    if bits % 8 != 0:
        raise BadParameter("symbol sequence does not recompose into whole bytes")
    val = 0
    for s in symbols:
        val = (val << n) | s
    return val.to_bytes(bits // 8, "big")


@dataclass
class TrieNode:
    children: dict[int, "TrieNode"] = field(default_factory=dict)
    records: list[EncryptedRecord] = field(default_factory=list)
    # True when this leaf's entry is some keyword's own zero-edit variant, so a
    # hit on the request's first trapdoor really means "the query is indexed".
    # Gram variants are concrete words, so without the marker a query could
    # collide with another keyword's variant and wrongly short-circuit.
    exact: bool = False


def iter_leaves(root) -> Iterator[tuple[tuple[int, ...], TrieNode]]:
    """(path, leaf) pairs in sorted-symbol order; works for plain and auth nodes."""
    stack = [((), root)]
    while stack:
        path, node = stack.pop()
        if not node.children:
            yield path, node
            continue
        for sym in sorted(node.children, reverse=True):
            stack.append((path + (sym,), node.children[sym]))


@dataclass
class TrieIndex:
    root: TrieNode
    trapdoor_bits: int
    symbol_bits: int
    d: int
    method: str = "wildcard"

    @property
    def depth(self) -> int:
        return self.trapdoor_bits // self.symbol_bits

    def leaves(self) -> Iterator[tuple[tuple[int, ...], TrieNode]]:
        return iter_leaves(self.root)


@dataclass
class ListingIndex:
    table: dict[bytes, list[EncryptedRecord]]
    trapdoor_bits: int
    symbol_bits: int
    d: int
    method: str = "wildcard"
    exact: set[bytes] = field(default_factory=set)  # trapdoors of zero-edit variants


@dataclass(frozen=True)
class SearchRequest:
    """Ordered trapdoors for a (word, k) query; the exact word comes first."""

    trapdoors: tuple[bytes, ...]
    k: int


@dataclass
class ResultSet:
    records: list[EncryptedRecord]
    exact_hit: bool


def build_entries(
    corpus: dict[str, list[bytes]], d: int, km: KeyMaterial, method: str = "wildcard"
) -> tuple[dict[bytes, list[EncryptedRecord]], set[bytes]]:
    """Trapdoor -> records map shared by both index layouts.

    Keywords are processed in sorted order and every (entry, keyword, fid)
    triple is encrypted with a nonce derived from those inputs, so two builds
    from the same corpus and keys produce identical bytes.  A variant shared
    by several keywords accumulates all their records under one trapdoor.

    Also returns the set of canonical trapdoors (each keyword's own zero-edit
    variant); only those entries terminate a search as an exact hit.
    """
    entries: dict[bytes, list[EncryptedRecord]] = {}
    exact: set[bytes] = set()
    for keyword in sorted(corpus):
        fids = list(dict.fromkeys(corpus[keyword]))
        exact.add(trapdoor(km, keyword))
        for variant in fuzzy_set(keyword, d, method):
            t = trapdoor(km, variant)
            bucket = entries.setdefault(t, [])
            for fid in fids:
                nonce = record_nonce(km, variant, keyword, fid)
                bucket.append(encrypt_record(km, fid, keyword, nonce=nonce))
    return entries, exact


def build_listing_index(
    corpus: dict[str, list[bytes]], d: int, km: KeyMaterial, method: str = "wildcard"
) -> ListingIndex:
    entries, exact = build_entries(corpus, d, km, method)
    return ListingIndex(
        table=entries,
        trapdoor_bits=km.trapdoor_bits,
        symbol_bits=km.symbol_bits,
        d=d,
        method=method,
        exact=exact,
    )


def build_trie_index(
    corpus: dict[str, list[bytes]], d: int, km: KeyMaterial, method: str = "wildcard"
) -> TrieIndex:
    root = TrieNode()
    entries, exact = build_entries(corpus, d, km, method)
    for t, records in entries.items():
        node = root
        for sym in symbolize(t, km.symbol_bits):
            node = node.children.setdefault(sym, TrieNode())
        node.records.extend(records)
        node.exact = t in exact
    return TrieIndex(
        root=root,
        trapdoor_bits=km.trapdoor_bits,
        symbol_bits=km.symbol_bits,
        d=d,
        method=method,
    )


def make_request(word: str, k: int, km: KeyMaterial, method: str = "wildcard") -> SearchRequest:
    """Trapdoors for every variant of (word, k); exact word first, rest lexicographic."""
    if k < 0:
        raise BadParameter("edit bound must be >= 0")
    variants = fuzzy_set(word, k, method)
    ordered = [word] + [v for v in variants if v != word]
    return SearchRequest(trapdoors=tuple(trapdoor(km, v) for v in ordered), k=k)


def _dedup(records: list[EncryptedRecord]) -> list[EncryptedRecord]:
    seen: set[bytes] = set()
    out = []
    for rec in records:
        key = rec.blob
        if key not in seen:
            seen.add(key)
            out.append(rec)
    return out


def walk_trie(root: TrieNode, symbols: tuple[int, ...]) -> TrieNode | None:
    """Follow ``symbols`` from ``root``; None as soon as an edge is missing."""
    node = root
    for sym in symbols:
        node = node.children.get(sym)
        if node is None:
            return None
    return node


def search_trie(index: TrieIndex, req: SearchRequest) -> ResultSet:
    """Walk each trapdoor's symbols; exact-first short-circuit, dedup the rest."""
    if req.k > index.d:
        raise EditBoundExceeded(f"request k={req.k} exceeds index d={index.d}")
    gathered: list[EncryptedRecord] = []
    for i, t in enumerate(req.trapdoors):
        node = walk_trie(index.root, symbolize(t, index.symbol_bits))
        if node is None or not node.records:
            continue
        if i == 0 and node.exact:
            return ResultSet(records=_dedup(node.records), exact_hit=True)
        gathered.extend(node.records)
    return ResultSet(records=_dedup(gathered), exact_hit=False)


def search_listing(index: ListingIndex, req: SearchRequest) -> ResultSet:
    """Same contract as ``search_trie`` over the flat table."""
    if req.k > index.d:
        raise EditBoundExceeded(f"request k={req.k} exceeds index d={index.d}")
    gathered: list[EncryptedRecord] = []
    for i, t in enumerate(req.trapdoors):
        records = index.table.get(t)
        if not records:
            continue
        if i == 0 and t in index.exact:
            return ResultSet(records=_dedup(records), exact_hit=True)
        gathered.extend(records)
    return ResultSet(records=_dedup(gathered), exact_hit=False)
