"""Key disagreement rate, key generation rate, and correlation structure."""
from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

from .probing import ProbingSchedule

__all__ = [
    "kdr",
    "kgr",
    "kgr_bound",
    "pearson_matrix",
    "avg_abs_corr",
    "ExperimentReport",
    "REPORT_COLUMNS",
    "write_reports_csv",
    "write_matrix_csv",
    "format_float",
]


def kdr(bits_x, bits_y) -> float:
    """Fraction of disagreeing positions between two bit sequences."""
    x = np.asarray(getattr(bits_x, "bits", bits_x), dtype=np.uint8).ravel()
    y = np.asarray(getattr(bits_y, "bits", bits_y), dtype=np.uint8).ravel()
    if x.size == 0 or x.size != y.size:
        raise ValueError("sequences must be non-empty and of equal length")
    return float(np.count_nonzero(x != y)) / x.size


def kgr_bound(schedule: ProbingSchedule, bits_per_config: int = 1) -> float:
    """Upper bound b / (T_su + L * T_p) on achievable bits per second."""
    denom = schedule.t_surface_update + schedule.oversampling * schedule.t_probe
    if denom <= 0:
        raise ValueError("schedule has zero duration per configuration")
    return bits_per_config / denom


def kgr(n_bits: int, schedule: ProbingSchedule, bits_per_config: int = 1) -> float:
    """Key bits per second of simulated probing time.

    Computed as bound * kept fraction, which is algebraically identical
    to n_bits / (m * (T_su + L * T_p)) and keeps the bound relation exact
    in floating point.
    """
    if n_bits < 0:
        raise ValueError("n_bits must be >= 0")
    total = schedule.n_configs * bits_per_config
    return kgr_bound(schedule, bits_per_config) * (n_bits / total)


def pearson_matrix(series_x: np.ndarray, series_y: np.ndarray) -> np.ndarray:
    """Pearson coefficients between all column pairs of two (m, K) arrays.

    Entry (k, k') correlates column k of x with column k' of y. Columns
    with zero variance produce NaN entries, which downstream averages
    exclude.
    """
    x = np.asarray(series_x, dtype=np.float64)
    y = np.asarray(series_y, dtype=np.float64)
    if x.ndim == 1:
        x = x[:, None]
    if y.ndim == 1:
        y = y[:, None]
    if x.shape[0] != y.shape[0] or x.shape[0] < 2:
        raise ValueError("series must share a common length >= 2")
    m = x.shape[0]

    def standardize(a):
        centered = a - a.mean(axis=0)
        std = centered.std(axis=0)
        with np.errstate(invalid="ignore", divide="ignore"):
            z = centered / std
        z[:, std == 0] = np.nan
        return z

    rho = standardize(x).T @ standardize(y) / m
    return np.clip(rho, -1.0, 1.0)


def avg_abs_corr(matrices) -> float:
    """Mean absolute diagonal correlation across one or more K x K matrices.

    NaN entries (zero-variance series) are excluded; an all-NaN input
    yields NaN.
    """
    if isinstance(matrices, np.ndarray) and matrices.ndim == 2:
        matrices = [matrices]
    diags = np.concatenate([np.abs(np.diagonal(np.asarray(m))) for m in matrices])
    if np.all(np.isnan(diags)):
        return float("nan")
    return float(np.nanmean(diags))


REPORT_COLUMNS = [
    "experiment", "repetition", "seed_key",
    "n_elements", "n_active", "n_subcarriers", "n_spatial",
    "oversampling", "n_configs", "quantizer_bits",
    "d_ai", "d_bi", "d_ei", "d_ab", "d_ae", "los", "rho_env",
    "noise_variance",
    "kdr_ab", "kdr_ab_std", "kdr_ae", "kdr_ae_std",
    "kgr", "kgr_bound",
    "avg_abs_corr_ab", "avg_abs_corr_ae",
    "n_key_bits", "block_failure_rate", "final_key_bits", "keys_verified",
    "min_p_value", "randomness_all_pass",
    "rng",
]


@dataclass
class ExperimentReport:
    """Scalar metrics of one pipeline execution plus its provenance.

    ``params`` echoes every input needed to re-run the point in
    isolation; matrix-valued outputs are carried separately and written
    as dense CSV grids on demand.
    """

    params: dict = field(default_factory=dict)
    kdr_ab: float = float("nan")
    kdr_ab_std: float = float("nan")
    kdr_ae: float = float("nan")
    kdr_ae_std: float = float("nan")
    kgr: float = float("nan")
    kgr_bound: float = float("nan")
    avg_abs_corr_ab: float = float("nan")
    avg_abs_corr_ae: float = float("nan")
    n_key_bits: int = 0
    block_failure_rate: float = float("nan")
    final_key_bits: int = 0
    keys_verified: bool | None = None
    min_p_value: float = float("nan")
    randomness_all_pass: bool | None = None
    rng: str = "numpy-PCG64"
    corr_ab: np.ndarray | None = None  # (J, K, K) same-index spatial pairs
    corr_ae: np.ndarray | None = None

    def __post_init__(self):
        for name in ("kdr_ab", "kdr_ae"):
            v = getattr(self, name)
            if not np.isnan(v) and not 0.0 <= v <= 1.0:
                raise ValueError(f"{name}={v} outside [0, 1]")
        if not np.isnan(self.kgr) and not np.isnan(self.kgr_bound):
            if self.kgr > self.kgr_bound:
                raise ValueError("kgr exceeds kgr_bound")
        for mat in (self.corr_ab, self.corr_ae):
            if mat is not None:
                finite = mat[np.isfinite(mat)]
                if finite.size and (finite.min() < -1.0 or finite.max() > 1.0):
                    raise ValueError("correlation entries outside [-1, 1]")

    def row(self) -> dict:
        out = {}
        for col in REPORT_COLUMNS:
            if col in self.params:
                out[col] = self.params[col]
            else:
                out[col] = getattr(self, col, "")
        return out


def format_float(value) -> str:
    """Stable 6-significant-digit rendering for CSV cells."""
    if isinstance(value, bool):
        return "true" if value else "false"
    if value is None or value == "":
        return ""
    if isinstance(value, float):
        if np.isnan(value):
            return ""
        return f"{value:.6g}"
    return str(value)


def write_reports_csv(reports, path, columns=None) -> None:
    """One data row per report with a stable header and column order."""
    reports = list(reports)
    if not reports:
        raise ValueError("no reports to emit")
    columns = list(columns) if columns else REPORT_COLUMNS
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(columns)
        for rep in reports:
            row = rep.row() if isinstance(rep, ExperimentReport) else rep
            writer.writerow([format_float(row.get(c, "")) for c in columns])


def write_matrix_csv(matrix: np.ndarray, path) -> None:
    """Dense CSV grid of a 2-D matrix."""
    mat = np.asarray(matrix)
    if mat.ndim != 2:
        raise ValueError("matrix must be 2-D")
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        for row in mat:
            writer.writerow([format_float(float(v)) for v in row])
