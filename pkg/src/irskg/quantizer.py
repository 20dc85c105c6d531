"""Equiprobable CDF quantization of normalized observations to key bits.

Thresholds are the empirical quantiles of a party's own series (linear
interpolation between order statistics), bin indices are labeled with a
reflected binary code so neighboring bins differ in a single bit, and
codes are emitted most significant bit first.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "QuantizerSpec",
    "BitSequence",
    "fit_thresholds",
    "quantize",
    "gray_encode",
    "gray_decode",
    "bits_to_ascii",
    "bits_from_ascii",
    "write_bits",
    "read_bits",
]

MAX_BITS = 4


@dataclass(frozen=True)
class QuantizerSpec:
    """Bits per sample and the 2**b - 1 strictly increasing thresholds."""

    bits: int
    thresholds: np.ndarray

    def __post_init__(self):
        if not 1 <= self.bits <= MAX_BITS:
            raise ValueError(f"bits must lie in 1..{MAX_BITS}")
        thr = np.asarray(self.thresholds, dtype=np.float64)
        if thr.shape != (2 ** self.bits - 1,):
            raise ValueError(
                f"expected {2 ** self.bits - 1} thresholds, got {thr.shape}")
        if not np.all(np.diff(thr) > 0):
            raise ValueError("thresholds must be strictly increasing")
        thr.setflags(write=False)
        object.__setattr__(self, "thresholds", thr)


@dataclass(frozen=True)
class BitSequence:
    """Ordered key bits with provenance (party and series identity)."""

    bits: np.ndarray
    origin: str = ""

    def __post_init__(self):
        b = np.asarray(self.bits, dtype=np.uint8)
        if b.ndim != 1 or not np.all(b <= 1):
            raise ValueError("bits must be a flat 0/1 vector")
        b.setflags(write=False)
        object.__setattr__(self, "bits", b)

    def __len__(self) -> int:
        return self.bits.size


def fit_thresholds(series: np.ndarray, bits: int) -> QuantizerSpec:
    """Empirical quantile thresholds at levels q / 2**b, q = 1..2**b - 1.

    Fitted independently per party on that party's own series; no
    threshold exchange takes place.
    """
    x = np.asarray(series, dtype=np.float64).ravel()
    if not 1 <= bits <= MAX_BITS:
        raise ValueError(f"bits must lie in 1..{MAX_BITS}")
    if x.size < 2 ** bits:
        raise ValueError(
            f"series of length {x.size} too short for {bits}-bit quantization")
    if not np.all(np.isfinite(x)):
        raise ValueError("series contains non-finite values")
    levels = np.arange(1, 2 ** bits) / 2 ** bits
    thr = np.quantile(x, levels, method="linear")
    if not np.all(np.diff(thr) > 0):
        raise ValueError(
            "degenerate series: quantile thresholds are not strictly increasing")
    return QuantizerSpec(bits=bits, thresholds=thr)


def quantize(series: np.ndarray, spec: QuantizerSpec, origin: str = "") -> BitSequence:
    """Map each sample to its bin's reflected-binary code, MSB first.

    A sample exactly on a threshold is assigned to the lower bin, which
    keeps the mapping deterministic and identical on both parties.
    """
    x = np.asarray(series, dtype=np.float64).ravel()
    bins = np.searchsorted(spec.thresholds, x, side="left")
    codes = gray_encode(bins)
    b = spec.bits
    out = np.empty(x.size * b, dtype=np.uint8)
    for r in range(b):
        out[r::b] = (codes >> (b - 1 - r)) & 1
    return BitSequence(bits=out, origin=origin)


def gray_encode(v):
    """Reflected binary code of v: adjacent integers differ in one bit."""
    v = np.asarray(v)
    return v ^ (v >> 1)


def gray_decode(g):
    """Inverse of gray_encode (prefix-XOR with doubling shifts)."""
    g = np.asarray(g).copy()
    shift = 1
    while np.any(g >> shift):
        g ^= g >> shift
        shift *= 2
    return g


def bits_to_ascii(bits) -> str:
    """'0'/'1' characters without separators, newline-terminated."""
    arr = bits.bits if isinstance(bits, BitSequence) else np.asarray(bits, dtype=np.uint8)
    return "".join("1" if b else "0" for b in arr) + "\n"


def bits_from_ascii(text: str) -> np.ndarray:
    chars = [ch for ch in text if not ch.isspace()]
    if any(ch not in "01" for ch in chars):
        raise ValueError("bit stream may only contain '0', '1' and whitespace")
    return np.frombuffer("".join(chars).encode(), dtype=np.uint8) - ord("0")


def write_bits(path, bits) -> None:
    with open(path, "w") as fh:
        fh.write(bits_to_ascii(bits))


def read_bits(path) -> np.ndarray:
    with open(path) as fh:
        return bits_from_ascii(fh.read())
