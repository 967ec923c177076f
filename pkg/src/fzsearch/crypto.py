"""Keys, trapdoors, record encryption and the blinding permutation.

The server only ever sees trapdoors: keyed pseudorandom digests of keyword
variants, 160 bits by default so they split evenly into 4-bit symbols.  File
identifiers travel inside authenticated ciphertexts under a separate key, and
a Feistel permutation keyed by the rotating blind key turns trapdoors into
per-epoch request tokens for the multi-user setting.
"""

from __future__ import annotations

import hashlib
import hmac
import secrets
from dataclasses import dataclass

from cryptography.exceptions import InvalidTag
from cryptography.hazmat.primitives.ciphers.aead import AESGCM

from .errors import AuthFailure, BadLength, BadParameter

NONCE_BYTES = 12
MAX_FID_BYTES = 64

_FEISTEL_ROUNDS = 4


def prf_bytes(key: bytes, msg: bytes, n: int, digestmod: str = "sha256") -> bytes:
    """Keyed pseudorandom bytes: HMAC expanded in counter mode to ``n`` bytes."""
    out = b""
    counter = 0
    while len(out) < n:
        block = hmac.new(key, msg + counter.to_bytes(4, "big"), digestmod).digest()
        out += block
        counter += 1
    return out[:n]


@dataclass(frozen=True)
class KeyMaterial:
    """Secret keys plus the trapdoor geometry they were generated for.

    ``trapdoor_key`` feeds the trapdoor PRF, ``record_key`` encrypts records
    and keys the proof chain, ``blind_key`` is the current request-blinding
    key (rotated on revocation).
    """

    trapdoor_key: bytes
    record_key: bytes
    blind_key: bytes
    security_bits: int
    trapdoor_bits: int = 160
    symbol_bits: int = 4

    @property
    def trapdoor_bytes(self) -> int:
        return self.trapdoor_bits // 8

    @property
    def depth(self) -> int:
        """Symbols per trapdoor; the height of the search tree."""
        return self.trapdoor_bits // self.symbol_bits


def check_geometry(trapdoor_bits: int, symbol_bits: int) -> None:
    """Validate the trapdoor/symbol split shared by keys and indexes."""
    if trapdoor_bits <= 0 or trapdoor_bits % 16 != 0:
        raise BadParameter("trapdoor_bits must be a positive multiple of 16")
    if not 1 <= symbol_bits <= 8:
        raise BadParameter("symbol_bits must be in 1..8")
    if trapdoor_bits % symbol_bits != 0:
        raise BadParameter("symbol_bits must divide trapdoor_bits")
    if trapdoor_bits // symbol_bits > 255:
        raise BadParameter("trapdoor_bits/symbol_bits must fit one byte")


def _derive(seed: bytes, label: bytes, n: int) -> bytes:
    for counter in range(256):
        key = prf_bytes(seed, label + bytes([counter]), n)
        if any(key):
            return key
    raise BadParameter("seed derives only zero keys")  # unreachable in practice


def _fresh(n: int) -> bytes:
    while True:
        key = secrets.token_bytes(n)
        if any(key):
            return key


def keygen(
    security_bits: int = 128,
    seed: bytes | None = None,
    trapdoor_bits: int = 160,
    symbol_bits: int = 4,
) -> KeyMaterial:
    """Generate key material; a seed makes the output reproducible."""
    if security_bits not in (128, 256):
        raise BadParameter(f"unsupported security parameter {security_bits}")
    check_geometry(trapdoor_bits, symbol_bits)
    nb = security_bits // 8
    if seed is not None:
        sk = _derive(seed, b"trapdoor-key", nb)
        sk0 = _derive(seed, b"record-key", nb)
        xi = _derive(seed, b"blind-key", nb)
    else:
        sk, sk0, xi = _fresh(nb), _fresh(nb), _fresh(nb)
    return KeyMaterial(
        trapdoor_key=sk,
        record_key=sk0,
        blind_key=xi,
        security_bits=security_bits,
        trapdoor_bits=trapdoor_bits,
        symbol_bits=symbol_bits,
    )


def trapdoor(km: KeyMaterial, variant: str) -> bytes:
    """Keyed digest of a keyword variant, exactly ``trapdoor_bits`` long."""
    return prf_bytes(km.trapdoor_key, b"T:" + variant.encode("ascii"), km.trapdoor_bytes)


@dataclass(frozen=True)
class EncryptedRecord:
    """Authenticated ciphertext of one (file id, keyword) pair."""

    nonce: bytes
    ciphertext: bytes

    @property
    def blob(self) -> bytes:
        """Wire/storage form: nonce followed by ciphertext."""
        return self.nonce + self.ciphertext

    @classmethod
    def from_blob(cls, blob: bytes) -> "EncryptedRecord":
        if len(blob) < NONCE_BYTES + 16:
            raise AuthFailure("record blob too short")
        return cls(nonce=blob[:NONCE_BYTES], ciphertext=blob[NONCE_BYTES:])


def record_nonce(km: KeyMaterial, variant: str, keyword: str, fid: bytes) -> bytes:
    """Deterministic nonce for index builds; unique per (variant, keyword, fid)."""
    msg = b"N:" + variant.encode("ascii") + b"\x00" + keyword.encode("ascii") + b"\x00" + fid
    return prf_bytes(km.record_key, msg, NONCE_BYTES)


def encrypt_record(
    km: KeyMaterial, fid: bytes, keyword: str, nonce: bytes | None = None
) -> EncryptedRecord:
    """Encrypt ``fid`` together with its keyword; fresh nonce unless one is given."""
    if not fid or len(fid) > MAX_FID_BYTES:
        raise BadParameter(f"fid must be 1..{MAX_FID_BYTES} bytes")
    if nonce is None:
        nonce = secrets.token_bytes(NONCE_BYTES)
    payload = bytes([len(fid)]) + fid + keyword.encode("ascii")
    ct = AESGCM(km.record_key).encrypt(nonce, payload, None)
    return EncryptedRecord(nonce=nonce, ciphertext=ct)


def decrypt_record(km: KeyMaterial, rec: EncryptedRecord) -> tuple[bytes, str]:
    """Recover (fid, keyword); any tamper or wrong key raises AuthFailure."""
    try:
        payload = AESGCM(km.record_key).decrypt(rec.nonce, rec.ciphertext, None)
    except (InvalidTag, ValueError) as exc:
        raise AuthFailure("record failed authentication") from exc
    if not payload:
        raise AuthFailure("empty record payload")
    n = payload[0]
    if n == 0 or len(payload) < 1 + n:
        raise AuthFailure("malformed record payload")
    return payload[1 : 1 + n], payload[1 + n :].decode("ascii")


def _feistel_f(key: bytes, rnd: int, half: bytes) -> bytes:
    return prf_bytes(key, b"F:" + bytes([rnd]) + half, len(half))


def prp(key: bytes, block: bytes, direction: str = "forward") -> bytes:
    """Keyed bijection on even-byte blocks: a 4-round Feistel network.

    ``prp(k, prp(k, b, "forward"), "inverse") == b`` for every block.  Works
    for any even byte length, so a 160-bit trapdoor needs no block-cipher
    padding.
    """
    if direction not in ("forward", "inverse"):
        raise BadParameter(f"unknown direction {direction!r}")
    if not block or len(block) % 2 != 0:
        raise BadLength(f"block must be a positive even number of bytes, got {len(block)}")
    h = len(block) // 2
    left, right = block[:h], block[h:]
    rounds = range(_FEISTEL_ROUNDS)
    if direction == "forward":
        for i in rounds:
            left, right = right, bytes(a ^ b for a, b in zip(left, _feistel_f(key, i, right)))
    else:
        for i in reversed(rounds):
            left, right = bytes(a ^ b for a, b in zip(right, _feistel_f(key, i, left))), left
    return left + right


def record_digest(records) -> bytes:
    """Plain digest of record blobs in order; bound to a key via the leaf tag."""
    h = hashlib.sha256()
    for rec in records:
        h.update(rec.blob)
    return h.digest()
