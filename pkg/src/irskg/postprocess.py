"""Information reconciliation and privacy amplification.

Reconciliation uses a code-offset secure sketch: Alice publishes her key
block XOR a random codeword, Bob shifts his block by the helper, decodes
to the nearest codeword within radius t and undoes the shift. Blocks
whose verification digest mismatches are dropped on both sides. Privacy
amplification compresses the surviving bits with a publicly seeded binary
Toeplitz hash, shedding the helper leakage plus a safety margin.
"""
from __future__ import annotations

import hashlib
import hmac
import struct
from dataclasses import dataclass

import numpy as np

from .bch import BchCode

__all__ = [
    "SketchHelper",
    "HashSeed",
    "ReconciliationResult",
    "PostprocessResult",
    "sketch",
    "recover",
    "privacy_amplify",
    "verify_keys",
    "key_digest",
    "amplified_length",
    "make_hash_seed",
    "reconcile",
    "postprocess_keys",
    "serialize_helpers",
    "deserialize_helpers",
    "DEFAULT_MARGIN_BITS",
]

DEFAULT_MARGIN_BITS = 32


@dataclass(frozen=True)
class SketchHelper:
    """Public code-offset block plus the code parameters that formed it."""

    offset: np.ndarray  # (n,) uint8
    n_code: int
    k_code: int
    t: int

    def __post_init__(self):
        off = np.asarray(self.offset, dtype=np.uint8)
        if off.shape != (self.n_code,):
            raise ValueError(
                f"offset length {off.shape} does not match n_code={self.n_code}")
        off.setflags(write=False)
        object.__setattr__(self, "offset", off)


@dataclass(frozen=True)
class HashSeed:
    """Public seed bits of a binary Toeplitz hash with ``out_len`` outputs."""

    bits: np.ndarray  # (in_len + out_len - 1,) uint8
    out_len: int

    def __post_init__(self):
        b = np.asarray(self.bits, dtype=np.uint8)
        if self.out_len < 1 or b.size < self.out_len:
            raise ValueError("seed bits too short for requested output length")
        b.setflags(write=False)
        object.__setattr__(self, "bits", b)

    @property
    def in_len(self) -> int:
        return self.bits.size - self.out_len + 1


def sketch(block: np.ndarray, code: BchCode, rng: np.random.Generator) -> SketchHelper:
    """Code-offset helper: key block XOR a uniformly random codeword."""
    key = np.asarray(block, dtype=np.uint8).ravel()
    if key.size != code.n:
        raise ValueError(f"block length {key.size} != code length {code.n}")
    offset = key ^ code.random_codeword(rng)
    return SketchHelper(offset=offset, n_code=code.n, k_code=code.k, t=code.t)


def recover(block: np.ndarray, helper: SketchHelper,
            code: BchCode | None = None) -> np.ndarray | None:
    """Reconcile a block against a helper; None on decode failure.

    Success returns the sketching party's block whenever the two blocks
    differ in at most t positions; a failure signals that this block is
    to be discarded, not that the protocol aborts.
    """
    key = np.asarray(block, dtype=np.uint8).ravel()
    if key.size != helper.n_code:
        raise ValueError(f"block length {key.size} != helper length {helper.n_code}")
    if code is None:
        code = BchCode(int(helper.n_code + 1).bit_length() - 1, helper.t)
    if (code.n, code.k, code.t) != (helper.n_code, helper.k_code, helper.t):
        raise ValueError("code does not match helper parameters")
    decoded = code.decode(key ^ helper.offset)
    if decoded is None:
        return None
    return decoded ^ helper.offset


def privacy_amplify(bits: np.ndarray, seed: HashSeed) -> np.ndarray:
    """Binary Toeplitz hash of the input bits (2-universal family).

    Row j of the implied matrix reads seed bits [j .. j + in_len - 1]
    reversed; the product is a mod-2 convolution.
    """
    x = np.asarray(bits, dtype=np.uint8).ravel()
    if x.size != seed.in_len:
        raise ValueError(
            f"input length {x.size} does not match hash input length {seed.in_len}")
    conv = np.convolve(seed.bits.astype(np.int64), x.astype(np.int64))
    return (conv[x.size - 1:x.size - 1 + seed.out_len] & 1).astype(np.uint8)


def amplified_length(input_length: int, blocks: int, code: BchCode,
                     margin_bits: int = DEFAULT_MARGIN_BITS) -> int:
    """Output length after removing per-block helper leakage and margin."""
    out = input_length - code.parity_bits * blocks - margin_bits
    if out < 1:
        raise ValueError(
            f"leakage budget exceeded: {input_length} bits cannot cover "
            f"{blocks} blocks of {code.parity_bits} leaked bits plus margin")
    return out


def make_hash_seed(rng: np.random.Generator, in_len: int, out_len: int) -> HashSeed:
    bits = rng.integers(0, 2, size=in_len + out_len - 1).astype(np.uint8)
    return HashSeed(bits=bits, out_len=out_len)


def key_digest(bits: np.ndarray) -> bytes:
    arr = np.asarray(bits, dtype=np.uint8)
    return hashlib.sha256(np.packbits(arr).tobytes() + str(arr.size).encode()).digest()


def verify_keys(key_a: np.ndarray, key_b: np.ndarray) -> bool:
    """Constant-pattern digest comparison of two equal-length keys."""
    a = np.asarray(key_a, dtype=np.uint8).ravel()
    b = np.asarray(key_b, dtype=np.uint8).ravel()
    if a.size != b.size:
        raise ValueError("keys must have equal length")
    return hmac.compare_digest(key_digest(a), key_digest(b))


@dataclass
class ReconciliationResult:
    """Per-block outcome of the sketch/recover exchange."""

    kept: np.ndarray  # (blocks,) bool
    key_a: np.ndarray  # surviving bits, sketching party
    key_b: np.ndarray  # surviving bits, recovering party
    blocks_total: int
    blocks_failed: int
    leakage_bits: int

    @property
    def failure_rate(self) -> float:
        return self.blocks_failed / self.blocks_total if self.blocks_total else 0.0


def reconcile(bits_a: np.ndarray, bits_b: np.ndarray, code: BchCode,
              rng: np.random.Generator) -> ReconciliationResult:
    """Blockwise code-offset reconciliation with digest verification.

    Trailing bits that do not fill a block are discarded. A block is kept
    only when decoding succeeds and the recovered block's digest equals
    the digest published by the sketching party, so miscorrections are
    dropped rather than silently kept.
    """
    a = np.asarray(bits_a, dtype=np.uint8).ravel()
    b = np.asarray(bits_b, dtype=np.uint8).ravel()
    if a.size != b.size:
        raise ValueError("key streams must have equal length")
    blocks = a.size // code.n
    if blocks == 0:
        raise ValueError(f"need at least {code.n} bits, got {a.size}")
    kept = np.zeros(blocks, dtype=bool)
    rec_a, rec_b = [], []
    for i in range(blocks):
        blk_a = a[i * code.n:(i + 1) * code.n]
        blk_b = b[i * code.n:(i + 1) * code.n]
        helper = sketch(blk_a, code, rng)
        recovered = recover(blk_b, helper, code)
        if recovered is None:
            continue
        if not hmac.compare_digest(key_digest(recovered), key_digest(blk_a)):
            continue
        kept[i] = True
        rec_a.append(blk_a)
        rec_b.append(recovered)
    key_a = np.concatenate(rec_a) if rec_a else np.zeros(0, dtype=np.uint8)
    key_b = np.concatenate(rec_b) if rec_b else np.zeros(0, dtype=np.uint8)
    return ReconciliationResult(
        kept=kept, key_a=key_a, key_b=key_b, blocks_total=blocks,
        blocks_failed=int(blocks - kept.sum()),
        leakage_bits=code.parity_bits * blocks)


@dataclass
class PostprocessResult:
    """Reconciliation plus privacy amplification of a key-stream pair."""

    reconciliation: ReconciliationResult
    final_a: np.ndarray
    final_b: np.ndarray
    verified: bool

    @property
    def final_bits(self) -> int:
        return self.final_a.size


def postprocess_keys(bits_a: np.ndarray, bits_b: np.ndarray, code: BchCode,
                     rng: np.random.Generator,
                     margin_bits: int = DEFAULT_MARGIN_BITS) -> PostprocessResult:
    """Reconcile, then hash both surviving streams with one public seed."""
    rec = reconcile(bits_a, bits_b, code, rng)
    kept_blocks = int(rec.kept.sum())
    if kept_blocks == 0:
        empty = np.zeros(0, dtype=np.uint8)
        return PostprocessResult(reconciliation=rec, final_a=empty,
                                 final_b=empty, verified=True)
    out_len = amplified_length(rec.key_a.size, kept_blocks, code, margin_bits)
    seed = make_hash_seed(rng, rec.key_a.size, out_len)
    final_a = privacy_amplify(rec.key_a, seed)
    final_b = privacy_amplify(rec.key_b, seed)
    return PostprocessResult(reconciliation=rec, final_a=final_a,
                             final_b=final_b,
                             verified=verify_keys(final_a, final_b))


def serialize_helpers(helpers: list[SketchHelper]) -> bytes:
    """Length-prefixed big-endian binary encoding of helper blocks.

    Layout per block: uint32 bit length, then the offset bits packed most
    significant bit first and zero-padded to a whole byte.
    """
    out = bytearray()
    for helper in helpers:
        out += struct.pack(">I", helper.n_code)
        out += np.packbits(helper.offset).tobytes()
    return bytes(out)


def deserialize_helpers(data: bytes, code: BchCode) -> list[SketchHelper]:
    helpers = []
    view = memoryview(data)
    while view:
        if len(view) < 4:
            raise ValueError("truncated helper stream")
        (nbits,) = struct.unpack(">I", view[:4])
        if nbits != code.n:
            raise ValueError(f"helper block length {nbits} != code length {code.n}")
        nbytes = (nbits + 7) // 8
        if len(view) < 4 + nbytes:
            raise ValueError("truncated helper block")
        bits = np.unpackbits(np.frombuffer(view[4:4 + nbytes], dtype=np.uint8))[:nbits]
        helpers.append(SketchHelper(offset=bits.astype(np.uint8), n_code=nbits,
                                    k_code=code.k, t=code.t))
        view = view[4 + nbytes:]
    return helpers
