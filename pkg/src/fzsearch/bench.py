"""Desk-scale measurements: set construction, index build, storage, search.

Numbers land in a CSV with a fixed header so runs are comparable.  Absolute
times depend on the machine; the interesting outputs are ratios (linear
scaling with keyword count, wildcard-vs-exhaustive entry counts, trie vs
listing storage) and the measured gram false-positive rate.
"""

from __future__ import annotations

import csv
import random
import time
from dataclasses import dataclass, field

from .crypto import KeyMaterial, decrypt_record, keygen
from .errors import DegenerateWord
from .fuzzyset import (
    ALPHABET,
    edit_distance,
    enumeration_fuzzy_set,
    fuzzy_set,
    normalize_keyword,
    wildcard_fuzzy_set,
)
from .index import build_listing_index, build_trie_index, make_request, search_listing, search_trie
from .persist import dumps_index

REPORT_HEADER = (
    "experiment",
    "method",
    "d",
    "keyword_count",
    "avg_word_len",
    "elapsed_ms",
    "bytes",
    "result_count",
)


@dataclass(frozen=True)
class BenchRow:
    experiment: str
    method: str
    d: int
    keyword_count: int
    avg_word_len: float
    elapsed_ms: float
    bytes: int
    result_count: int


@dataclass
class BenchReport:
    rows: list[BenchRow] = field(default_factory=list)

    def write_csv(self, path: str) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(REPORT_HEADER)
            for row in self.rows:
                writer.writerow(
                    [
                        row.experiment,
                        row.method,
                        row.d,
                        row.keyword_count,
                        f"{row.avg_word_len:.2f}",
                        f"{row.elapsed_ms:.3f}",
                        row.bytes,
                        row.result_count,
                    ]
                )


@dataclass
class BenchConfig:
    keyword_counts: tuple[int, ...] = (500, 1000)
    methods: tuple[str, ...] = ("wildcard", "gram")
    d_values: tuple[int, ...] = (1, 2)
    index_d: int = 1
    avg_len: float = 7.44
    seed: int = 7
    query_count: int = 50
    csv_path: str | None = None
    wordlist: str | None = None


def synth_corpus(count: int, avg_len: float = 7.44, seed: int = 0) -> dict[str, list[bytes]]:
    """``count`` distinct random words, mean length close to ``avg_len``."""
    rng = random.Random(seed)
    corpus: dict[str, list[bytes]] = {}
    while len(corpus) < count:
        length = max(3, round(rng.gauss(avg_len, 2.0)))
        word = "".join(rng.choice(ALPHABET) for _ in range(length))
        if word not in corpus:
            corpus[word] = [b"doc%05d" % len(corpus)]
    return corpus


def load_wordlist(path: str) -> dict[str, list[bytes]]:
    """User-supplied word list, one word per line."""
    corpus: dict[str, list[bytes]] = {}
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            word = normalize_keyword(line)
            if word not in corpus:
                corpus[word] = [b"doc%05d" % len(corpus)]
    return corpus


def mean_word_len(corpus: dict[str, list[bytes]]) -> float:
    return sum(map(len, corpus)) / len(corpus)


def time_fuzzyset_build(corpus: dict[str, list[bytes]], d: int, method: str) -> tuple[float, int]:
    """(elapsed ms, total variants) for constructing every keyword's set."""
    total = 0
    start = time.perf_counter()
    for word in corpus:
        try:
            total += len(fuzzy_set(word, d, method))
        except DegenerateWord:
            pass  # gram sets skip words shorter than d+1
    return (time.perf_counter() - start) * 1000.0, total


def mutate_word(word: str, edits: int, rng: random.Random) -> str:
    for _ in range(edits):
        ops = ["sub", "ins"] + (["del"] if len(word) > 1 else [])
        op = rng.choice(ops)
        i = rng.randrange(len(word) + (1 if op == "ins" else 0))
        if op == "sub":
            word = word[:i] + rng.choice(ALPHABET) + word[i + 1 :]
        elif op == "del":
            word = word[:i] + word[i + 1 :]
        else:
            word = word[:i] + rng.choice(ALPHABET) + word[i:]
    return word


def sample_queries(corpus: dict[str, list[bytes]], count: int, rng: random.Random) -> list[str]:
    """Mix of exact keywords, one-edit neighbors and unrelated words."""
    words = sorted(corpus)
    out = []
    for _ in range(count):
        roll = rng.random()
        base = rng.choice(words)
        if roll < 0.3:
            out.append(base)
        elif roll < 0.8:
            out.append(mutate_word(base, 1, rng))
        else:
            out.append("".join(rng.choice(ALPHABET) for _ in range(rng.randint(3, 9))))
    return out


def measure_gram_false_positives(
    corpus: dict[str, list[bytes]],
    km: KeyMaterial,
    queries: list[str],
    k: int = 1,
) -> tuple[int, int]:
    """(false positives, total returned keywords) for gram search at bound k."""
    index = build_listing_index(corpus, k, km, method="gram")
    false_pos = 0
    total = 0
    for q in queries:
        try:
            req = make_request(q, k, km, method="gram")
        except DegenerateWord:
            continue
        for rec in search_listing(index, req).records:
            _, keyword = decrypt_record(km, rec)
            total += 1
            if edit_distance(q, keyword) > k:
                false_pos += 1
    return false_pos, total


def storage_ratio_row(word_len: int = 10, d: int = 1) -> BenchRow:
    """Wildcard entries per keyword against the exhaustive neighborhood size."""
    word = (ALPHABET * (word_len // 26 + 1))[:word_len]
    wildcard_entries = len(wildcard_fuzzy_set(word, d))
    start = time.perf_counter()
    exact_entries = len(enumeration_fuzzy_set(word, d))
    elapsed = (time.perf_counter() - start) * 1000.0
    return BenchRow(
        experiment="storage_ratio",
        method="wildcard",
        d=d,
        keyword_count=1,
        avg_word_len=float(word_len),
        elapsed_ms=elapsed,
        bytes=wildcard_entries,
        result_count=exact_entries,
    )


def _corpora(config: BenchConfig):
    if config.wordlist:
        corpus = load_wordlist(config.wordlist)
        yield len(corpus), corpus
        return
    for count in config.keyword_counts:
        yield count, synth_corpus(count, config.avg_len, config.seed)


def run_bench(config: BenchConfig) -> BenchReport:
    report = BenchReport()
    km = keygen(128, seed=b"bench-%d" % config.seed)
    rng = random.Random(config.seed)
    for count, corpus in _corpora(config):
        avg = mean_word_len(corpus)
        for method in config.methods:
            for d in config.d_values:
                elapsed, variants = time_fuzzyset_build(corpus, d, method)
                report.rows.append(
                    BenchRow("fuzzyset_build", method, d, count, avg, elapsed, 0, variants)
                )

            d = config.index_d
            start = time.perf_counter()
            listing = build_listing_index(corpus, d, km, method)
            listing_ms = (time.perf_counter() - start) * 1000.0
            listing_bytes = len(dumps_index(listing))
            report.rows.append(
                BenchRow(
                    "index_build_listing", method, d, count, avg,
                    listing_ms, listing_bytes, len(listing.table),
                )
            )

            start = time.perf_counter()
            trie = build_trie_index(corpus, d, km, method)
            trie_ms = (time.perf_counter() - start) * 1000.0
            trie_bytes = len(dumps_index(trie))
            report.rows.append(
                BenchRow(
                    "index_build_trie", method, d, count, avg,
                    trie_ms, trie_bytes, len(listing.table),
                )
            )

            queries = sample_queries(corpus, config.query_count, rng)
            for kind, index, search in (
                ("listing", listing, search_listing),
                ("trie", trie, search_trie),
            ):
                for k, label in ((0, "search_exact"), (d, "search_fuzzy")):
                    reqs = []
                    for q in queries:
                        try:
                            reqs.append(make_request(q, k, km, method))
                        except DegenerateWord:
                            continue
                    hits = 0
                    start = time.perf_counter()
                    for req in reqs:
                        hits += len(search(index, req).records)
                    elapsed = (time.perf_counter() - start) * 1000.0 / max(1, len(reqs))
                    report.rows.append(
                        BenchRow(f"{label}_{kind}", method, k, count, avg, elapsed, 0, hits)
                    )

        if "gram" in config.methods:
            queries = sample_queries(corpus, config.query_count, rng)
            start = time.perf_counter()
            fp, total = measure_gram_false_positives(corpus, km, queries, k=1)
            elapsed = (time.perf_counter() - start) * 1000.0
            report.rows.append(
                BenchRow("gram_false_positive", "gram", 1, count, avg, elapsed, total, fp)
            )

    report.rows.append(storage_ratio_row())
    if config.csv_path:
        report.write_csv(config.csv_path)
    return report
