"""Statistical randomness tests for generated key material.

Implements the NIST SP 800-22 tests used to validate key bit sequences:
Frequency, Block Frequency, Runs, Longest Run of Ones, Binary Matrix
Rank, DFT, Non-overlapping Template Matching, Maurer's Universal, Serial,
Approximate Entropy and Cumulative Sums. Each test follows the published
reference algorithm; sequences too short for a test are reported as
skipped, never as passed.

Input is a flat 0/1 vector (or the ASCII '0'/'1' serialization produced
by the quantizer).
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import erfc, gammaincc, ndtr

__all__ = [
    "TestResult",
    "TestReport",
    "nist_suite",
    "frequency",
    "block_frequency",
    "runs",
    "longest_runs",
    "binary_matrix_rank",
    "dft",
    "non_overlapping_template",
    "universal",
    "serial",
    "approximate_entropy",
    "cumulative_sums",
    "ALPHA",
    "DEFAULT_TEMPLATE",
    "UNIVERSAL_MIN_BITS",
]

ALPHA = 0.01
DEFAULT_TEMPLATE = "000000001"
UNIVERSAL_MIN_BITS = 387_840

# Maurer test constants per block length L: expected value and variance.
_UNIVERSAL_TABLE = {
    2: (1.5374383, 1.338),
    3: (2.4016068, 1.901),
    4: (3.3112247, 2.358),
    5: (4.2534266, 2.705),
    6: (5.2177052, 2.954),
    7: (6.1962507, 3.125),
    8: (7.1836656, 3.238),
    9: (8.1764248, 3.311),
    10: (9.1723243, 3.356),
    11: (10.170032, 3.384),
    12: (11.168765, 3.401),
    13: (12.168070, 3.410),
    14: (13.167693, 3.416),
    15: (14.167488, 3.419),
    16: (15.167379, 3.421),
}
# Minimum sequence length for choosing L = 6, 7, ..., 16.
_UNIVERSAL_THRESHOLDS = [
    (1_059_061_760, 16), (496_435_200, 15), (231_669_760, 14),
    (107_560_960, 13), (49_643_520, 12), (22_753_280, 11),
    (10_342_400, 10), (4_654_080, 9), (2_068_480, 8),
    (904_960, 7), (387_840, 6),
]

# Longest-run-of-ones category tables: (M, categories, probabilities).
_LONGEST_RUN_TABLES = [
    (8, [1, 2, 3, 4], [0.2148, 0.3672, 0.2305, 0.1875]),
    (128, [4, 5, 6, 7, 8, 9],
     [0.1174, 0.2430, 0.2493, 0.1752, 0.1027, 0.1124]),
    (10_000, [10, 11, 12, 13, 14, 15, 16],
     [0.0882, 0.2092, 0.2483, 0.1933, 0.1208, 0.0675, 0.0727]),
]


@dataclass
class TestResult:
    """Outcome of a single test: p-values, verdict and echoed parameters."""

    name: str
    p_values: tuple
    passed: bool | None
    statistic: float | None = None
    skipped: str | None = None
    params: dict = field(default_factory=dict)

    @classmethod
    def from_p(cls, name, p_values, statistic=None, **params):
        ps = tuple(float(p) for p in (p_values if isinstance(p_values, (tuple, list)) else (p_values,)))
        return cls(name=name, p_values=ps, passed=all(p >= ALPHA for p in ps),
                   statistic=statistic, params=params)

    @classmethod
    def skip(cls, name, reason, **params):
        return cls(name=name, p_values=(), passed=None, skipped=reason,
                   params=params)


@dataclass
class TestReport:
    """Suite outcome: one TestResult per test plus sequence metadata."""

    results: list
    n_bits: int
    alpha: float = ALPHA

    def __iter__(self):
        return iter(self.results)

    def __getitem__(self, name: str) -> TestResult:
        for res in self.results:
            if res.name == name:
                return res
        raise KeyError(name)

    @property
    def all_passed(self) -> bool:
        """True when every applicable (non-skipped) test passed."""
        applicable = [r for r in self.results if r.skipped is None]
        return bool(applicable) and all(r.passed for r in applicable)

    @property
    def min_p_value(self) -> float:
        ps = [p for r in self.results if r.skipped is None for p in r.p_values]
        return min(ps) if ps else float("nan")

    def rows(self):
        out = []
        for res in self.results:
            if res.skipped is not None:
                out.append((res.name, "", "skipped: " + res.skipped))
            elif len(res.p_values) == 1:
                out.append((res.name, f"{res.p_values[0]:.6f}",
                            "pass" if res.passed else "fail"))
            else:
                for i, p in enumerate(res.p_values, 1):
                    out.append((f"{res.name}_{i}", f"{p:.6f}",
                                "pass" if p >= self.alpha else "fail"))
        return out

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["test", "p_value", "result"])
            writer.writerows(self.rows())


def _as_bits(bits) -> np.ndarray:
    arr = np.asarray(getattr(bits, "bits", bits), dtype=np.uint8).ravel()
    if arr.size and arr.max() > 1:
        raise ValueError("bit sequence must contain only 0 and 1")
    return arr


def frequency(bits) -> TestResult:
    """Monobit test: balance of ones and zeros."""
    x = _as_bits(bits)
    n = x.size
    s = abs(2.0 * np.count_nonzero(x) - n)
    p = erfc(s / math.sqrt(n) / math.sqrt(2.0))
    return TestResult.from_p("frequency", p, statistic=s / math.sqrt(n))


def block_frequency(bits, block_size: int = 128) -> TestResult:
    """Proportion of ones within non-overlapping blocks."""
    x = _as_bits(bits)
    n_blocks = x.size // block_size
    if n_blocks < 1:
        raise ValueError("sequence shorter than one block")
    prop = x[:n_blocks * block_size].reshape(n_blocks, block_size).mean(axis=1)
    chi2 = 4.0 * block_size * np.sum((prop - 0.5) ** 2)
    p = gammaincc(n_blocks / 2.0, chi2 / 2.0)
    return TestResult.from_p("block_frequency", p, statistic=chi2,
                             block_size=block_size)


def runs(bits) -> TestResult:
    """Total number of runs against its expectation for the observed bias."""
    x = _as_bits(bits)
    n = x.size
    pi = np.count_nonzero(x) / n
    if abs(pi - 0.5) >= 2.0 / math.sqrt(n):
        # Frequency prerequisite failed; the reference assigns p = 0.
        return TestResult.from_p("runs", 0.0, statistic=float("nan"))
    v_obs = np.count_nonzero(np.diff(x)) + 1
    num = abs(v_obs - 2.0 * n * pi * (1 - pi))
    den = 2.0 * math.sqrt(2.0 * n) * pi * (1 - pi)
    return TestResult.from_p("runs", erfc(num / den), statistic=float(v_obs))


def _longest_ones_run_rows(mat: np.ndarray) -> np.ndarray:
    """Longest run of ones per row of a 0/1 matrix."""
    n_rows, width = mat.shape
    padded = np.zeros((n_rows, width + 2), dtype=np.int8)
    padded[:, 1:-1] = mat
    flat = padded.ravel()
    d = np.diff(flat)
    starts = np.nonzero(d == 1)[0]
    ends = np.nonzero(d == -1)[0]
    out = np.zeros(n_rows, dtype=np.int64)
    np.maximum.at(out, starts // (width + 2), ends - starts)
    return out


def longest_runs(bits) -> TestResult:
    """Distribution of the longest run of ones within fixed-size blocks."""
    x = _as_bits(bits)
    n = x.size
    if n < 128:
        raise ValueError("longest-runs test needs at least 128 bits")
    if n < 6272:
        m, cats, pi = _LONGEST_RUN_TABLES[0]
    elif n < 750_000:
        m, cats, pi = _LONGEST_RUN_TABLES[1]
    else:
        m, cats, pi = _LONGEST_RUN_TABLES[2]
    n_blocks = n // m
    longest = _longest_ones_run_rows(x[:n_blocks * m].reshape(n_blocks, m))
    clipped = np.clip(longest, cats[0], cats[-1])
    counts = np.array([np.count_nonzero(clipped == c) for c in cats], dtype=np.float64)
    expected = n_blocks * np.asarray(pi)
    chi2 = float(np.sum((counts - expected) ** 2 / expected))
    k = len(cats) - 1
    p = gammaincc(k / 2.0, chi2 / 2.0)
    return TestResult.from_p("longest_runs", p, statistic=chi2,
                             block_size=m, n_blocks=n_blocks)


def _gf2_rank(rows: list, width: int) -> int:
    rank = 0
    n_rows = len(rows)
    for bitpos in range(width - 1, -1, -1):
        mask = 1 << bitpos
        pivot = next((i for i in range(rank, n_rows) if rows[i] & mask), None)
        if pivot is None:
            continue
        rows[rank], rows[pivot] = rows[pivot], rows[rank]
        pr = rows[rank]
        for i in range(rank + 1, n_rows):
            if rows[i] & mask:
                rows[i] ^= pr
        rank += 1
        if rank == n_rows:
            break
    return rank


def _rank_probabilities(m: int, q: int) -> tuple[float, float, float]:
    """P(rank = m), P(rank = m - 1) and the remainder for a random matrix."""
    def prob(r):
        product = 1.0
        for i in range(r):
            product *= ((1.0 - 2.0 ** (i - m)) * (1.0 - 2.0 ** (i - q))
                        / (1.0 - 2.0 ** (i - r)))
        return 2.0 ** (r * (m + q - r) - m * q) * product

    p_full, p_minus1 = prob(min(m, q)), prob(min(m, q) - 1)
    return p_full, p_minus1, 1.0 - p_full - p_minus1


def binary_matrix_rank(bits, matrix_size: int = 32) -> TestResult:
    """Rank distribution of disjoint square binary matrices."""
    x = _as_bits(bits)
    m = q = matrix_size
    n_matrices = x.size // (m * q)
    if n_matrices < 1:
        raise ValueError("sequence shorter than one matrix")
    weights = 1 << np.arange(q - 1, -1, -1, dtype=np.uint64)
    blocks = x[:n_matrices * m * q].reshape(n_matrices, m, q).astype(np.uint64)
    row_ints = blocks @ weights  # (n_matrices, m)
    full = minus1 = 0
    for mat_rows in row_ints:
        r = _gf2_rank([int(v) for v in mat_rows], q)
        if r == m:
            full += 1
        elif r == m - 1:
            minus1 += 1
    rest = n_matrices - full - minus1
    p_full, p_minus1, p_rest = _rank_probabilities(m, q)
    expected = np.array([p_full, p_minus1, p_rest]) * n_matrices
    observed = np.array([full, minus1, rest], dtype=np.float64)
    chi2 = float(np.sum((observed - expected) ** 2 / expected))
    p = math.exp(-chi2 / 2.0)  # chi-square with 2 degrees of freedom
    return TestResult.from_p("binary_matrix_rank", p, statistic=chi2,
                             matrix_size=matrix_size, n_matrices=n_matrices)


def dft(bits) -> TestResult:
    """Peak count of the discrete Fourier transform below the 95% bound."""
    x = _as_bits(bits)
    n = x.size
    s = 2.0 * x.astype(np.float64) - 1.0
    half = np.abs(np.fft.rfft(s))[:n // 2]
    threshold = math.sqrt(math.log(1.0 / 0.05) * n)
    n0 = 0.95 * n / 2.0
    n1 = float(np.count_nonzero(half < threshold))
    d = (n1 - n0) / math.sqrt(n * 0.95 * 0.05 / 4.0)
    return TestResult.from_p("dft", erfc(abs(d) / math.sqrt(2.0)), statistic=d)


def non_overlapping_template(bits, template: str = DEFAULT_TEMPLATE,
                             n_blocks: int = 8) -> TestResult:
    """Occurrences of an aperiodic template in disjoint blocks.

    The scan window jumps past a match, so occurrences never overlap.
    """
    x = _as_bits(bits)
    tpl = np.asarray([int(ch) for ch in template], dtype=np.uint8)
    m = tpl.size
    block_size = x.size // n_blocks
    if block_size < m:
        raise ValueError("blocks shorter than the template")
    windows = np.lib.stride_tricks.sliding_window_view(
        x[:n_blocks * block_size], m)
    match = np.all(windows == tpl, axis=1)
    counts = np.zeros(n_blocks, dtype=np.float64)
    for b in range(n_blocks):
        lo = b * block_size
        # Window starts that lie fully inside the block.
        idx = np.nonzero(match[lo:lo + block_size - m + 1])[0]
        w = 0
        nxt = 0
        for i in idx:
            if i >= nxt:
                w += 1
                nxt = i + m
        counts[b] = w
    mu = (block_size - m + 1) / 2.0 ** m
    var = block_size * (1.0 / 2.0 ** m - (2.0 * m - 1.0) / 2.0 ** (2 * m))
    chi2 = float(np.sum((counts - mu) ** 2 / var))
    p = gammaincc(n_blocks / 2.0, chi2 / 2.0)
    return TestResult.from_p("non_overlapping_template", p, statistic=chi2,
                             template=template, n_blocks=n_blocks)


def _universal_params(n: int) -> tuple[int, int]:
    for threshold, ell in _UNIVERSAL_THRESHOLDS:
        if n >= threshold:
            return ell, 10 * 2 ** ell
    raise ValueError(
        f"universal test needs at least {UNIVERSAL_MIN_BITS} bits, got {n}")


def universal(bits, block_size: int | None = None,
              init_blocks: int | None = None) -> TestResult:
    """Maurer's universal statistical test (compressibility).

    Parameters default to the reference choice for the sequence length;
    they can be forced for short validation inputs.
    """
    x = _as_bits(bits)
    n = x.size
    if block_size is None or init_blocks is None:
        ell, q = _universal_params(n)
    else:
        ell, q = block_size, init_blocks
    if ell not in _UNIVERSAL_TABLE:
        raise ValueError(f"no reference constants for block size {ell}")
    total = n // ell
    k = total - q
    if k < 1:
        raise ValueError("sequence too short for the given init segment")
    weights = 1 << np.arange(ell - 1, -1, -1, dtype=np.int64)
    vals = x[:total * ell].reshape(total, ell).astype(np.int64) @ weights
    # Index of the previous occurrence of each block value, -1 if none.
    order = np.argsort(vals, kind="stable")
    prev = np.full(total, -1, dtype=np.int64)
    same = vals[order[1:]] == vals[order[:-1]]
    prev[order[1:][same]] = order[:-1][same]
    idx = np.arange(q, total)
    dist = np.where(prev[q:] >= 0, idx - prev[q:], idx + 1)
    fn = float(np.sum(np.log2(dist)) / k)
    expected, variance = _UNIVERSAL_TABLE[ell]
    c = 0.7 - 0.8 / ell + (4.0 + 32.0 / ell) * k ** (-3.0 / ell) / 15.0
    sigma = c * math.sqrt(variance / k)
    p = erfc(abs(fn - expected) / (math.sqrt(2.0) * sigma))
    return TestResult.from_p("universal", p, statistic=fn,
                             block_size=ell, init_blocks=q)


def _psi_squared(x: np.ndarray, m: int) -> float:
    """Overlapping m-bit pattern statistic with cyclic wraparound."""
    if m == 0:
        return 0.0
    n = x.size
    aug = np.concatenate([x, x[:m - 1]])
    vals = aug[:n].astype(np.int64).copy()
    for i in range(1, m):
        vals = vals * 2 + aug[i:i + n]
    counts = np.bincount(vals, minlength=2 ** m).astype(np.float64)
    return float(2.0 ** m / n * np.sum(counts ** 2) - n)


def serial(bits, pattern_length: int = 2) -> TestResult:
    """Uniformity of overlapping patterns; yields two p-values."""
    x = _as_bits(bits)
    m = pattern_length
    if m < 2:
        raise ValueError("pattern_length must be >= 2")
    psi_m = _psi_squared(x, m)
    psi_m1 = _psi_squared(x, m - 1)
    psi_m2 = _psi_squared(x, m - 2)
    d1 = psi_m - psi_m1
    d2 = psi_m - 2.0 * psi_m1 + psi_m2
    p1 = gammaincc(2.0 ** (m - 2), d1 / 2.0)
    p2 = gammaincc(2.0 ** (m - 3), d2 / 2.0)
    return TestResult.from_p("serial", (p1, p2), statistic=psi_m,
                             pattern_length=m)


def approximate_entropy(bits, pattern_length: int = 2) -> TestResult:
    """Relative frequency of overlapping patterns of lengths m and m + 1."""
    x = _as_bits(bits)
    n = x.size
    m = pattern_length

    def phi(mm):
        if mm == 0:
            return 0.0
        aug = np.concatenate([x, x[:mm - 1]])
        vals = aug[:n].astype(np.int64).copy()
        for i in range(1, mm):
            vals = vals * 2 + aug[i:i + n]
        counts = np.bincount(vals, minlength=2 ** mm).astype(np.float64)
        nz = counts[counts > 0] / n
        return float(np.sum(nz * np.log(nz)))

    apen = phi(m) - phi(m + 1)
    chi2 = 2.0 * n * (math.log(2.0) - apen)
    p = gammaincc(2.0 ** (m - 1), chi2 / 2.0)
    return TestResult.from_p("approximate_entropy", p, statistic=apen,
                             pattern_length=m)


def cumulative_sums(bits, reverse: bool = False) -> TestResult:
    """Maximum excursion of the +-1 random walk from the origin."""
    x = _as_bits(bits)
    n = x.size
    steps = 2.0 * x.astype(np.float64) - 1.0
    if reverse:
        steps = steps[::-1]
    z = float(np.max(np.abs(np.cumsum(steps))))
    if z == 0:
        return TestResult.from_p(
            "cumulative_sums_reverse" if reverse else "cumulative_sums_forward",
            0.0, statistic=0.0)
    sqrt_n = math.sqrt(n)

    def phi_terms(shift_lo, shift_hi, k_lo, k_hi):
        ks = np.arange(k_lo, k_hi + 1)
        return float(np.sum(ndtr((4 * ks + shift_hi) * z / sqrt_n)
                            - ndtr((4 * ks + shift_lo) * z / sqrt_n)))

    k1_lo = math.floor((-n / z + 1) / 4)
    k1_hi = math.floor((n / z - 1) / 4)
    k2_lo = math.floor((-n / z - 3) / 4)
    term1 = phi_terms(-1, 1, k1_lo, k1_hi)
    term2 = phi_terms(1, 3, k2_lo, k1_hi)
    p = 1.0 - term1 + term2
    p = min(max(p, 0.0), 1.0)
    name = "cumulative_sums_reverse" if reverse else "cumulative_sums_forward"
    return TestResult.from_p(name, p, statistic=z)


def nist_suite(bits, *, block_frequency_size: int = 128,
               template: str = DEFAULT_TEMPLATE, serial_length: int = 2,
               apen_length: int = 2) -> TestReport:
    """Run every implemented test that is applicable to the sequence.

    Tests whose length requirement is not met are marked skipped with a
    reason; they are never counted as passed.
    """
    x = _as_bits(bits)
    n = x.size
    results = []

    def run_test(min_bits, func, *args, **kwargs):
        name = kwargs.pop("_name", func.__name__)
        if n < min_bits:
            results.append(TestResult.skip(
                name, f"needs >= {min_bits} bits, got {n}"))
        else:
            results.append(func(x, *args, **kwargs))

    run_test(100, frequency)
    run_test(max(100, block_frequency_size), block_frequency,
             block_size=block_frequency_size)
    run_test(100, runs)
    run_test(128, longest_runs)
    run_test(38 * 32 * 32, binary_matrix_rank)
    run_test(1000, dft)
    run_test(100 * len(template), non_overlapping_template, template=template)
    run_test(UNIVERSAL_MIN_BITS, universal)
    run_test(100, serial, pattern_length=serial_length)
    run_test(100, approximate_entropy, pattern_length=apen_length)
    run_test(100, cumulative_sums, _name="cumulative_sums_forward")
    run_test(100, cumulative_sums, reverse=True, _name="cumulative_sums_reverse")
    return TestReport(results=results, n_bits=n)
