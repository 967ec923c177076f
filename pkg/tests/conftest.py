import itertools
import random

import pytest

from fzsearch import keygen

ALPHABET = "abcdefghijklmnopqrstuvwxyz"


@pytest.fixture(scope="session")
def km():
    return keygen(128, seed=b"test-keys")


def random_word(rng: random.Random, lo: int = 3, hi: int = 8) -> str:
    return "".join(rng.choice(ALPHABET) for _ in range(rng.randint(lo, hi)))


def random_corpus(rng: random.Random, size: int = 100, lo: int = 3, hi: int = 8):
    corpus = {}
    while len(corpus) < size:
        word = random_word(rng, lo, hi)
        if word not in corpus:
            corpus[word] = [b"f%04d" % len(corpus)]
    return corpus


def reference_edit_distance(a: str, b: str) -> int:
    """Independent full-matrix implementation used to cross-check the fast one."""
    rows = len(a) + 1
    cols = len(b) + 1
    m = [[0] * cols for _ in range(rows)]
    for i in range(rows):
        m[i][0] = i
    for j in range(cols):
        m[0][j] = j
    for i in range(1, rows):
        for j in range(1, cols):
            cost = 0 if a[i - 1] == b[j - 1] else 1
            m[i][j] = min(m[i - 1][j] + 1, m[i][j - 1] + 1, m[i - 1][j - 1] + cost)
    return m[-1][-1]


def brute_force_neighborhood(word: str, d: int, letters: str) -> set[str]:
    """Exhaustive oracle: every string (length >= 1) over ``letters`` at distance <= d."""
    out = set()
    for length in range(max(1, len(word) - d), len(word) + d + 1):
        for tup in itertools.product(letters, repeat=length):
            cand = "".join(tup)
            if reference_edit_distance(word, cand) <= d:
                out.add(cand)
    return out


def mutate(word: str, rng: random.Random) -> str:
    """One random primitive edit."""
    ops = ["sub", "ins"] + (["del"] if len(word) > 1 else [])
    op = rng.choice(ops)
    if op == "ins":
        i = rng.randrange(len(word) + 1)
        return word[:i] + rng.choice(ALPHABET) + word[i:]
    i = rng.randrange(len(word))
    if op == "sub":
        return word[:i] + rng.choice(ALPHABET) + word[i + 1 :]
    return word[:i] + word[i + 1 :]
