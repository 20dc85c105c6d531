"""Synchronized ping-pong channel probing with oversampling and averaging.

For every surface configuration the two parties exchange L bidirectional
probes and take least-squares channel estimates; Eve overhears Bob's
transmissions and estimates her own effective channel. Magnitudes are
block-averaged per configuration and z-scored over the configuration
series before quantization.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .channel import LinkEnsemble, Scenario, crandn, draw_links, effective_channel_batch
from .surface import SurfaceSchedule, draw_configs

__all__ = [
    "ProbingSchedule",
    "PilotSymbols",
    "ObservationSeries",
    "ProbingRun",
    "ProbingStreams",
    "DegenerateEntropyError",
    "probe_round",
    "run_probing",
    "block_average",
    "normalize",
    "estimate_surface_period",
]

PARTIES = ("alice", "bob", "eve")


class DegenerateEntropyError(ValueError):
    """A series carries no variation, so no key material can be derived."""


@dataclass(frozen=True)
class ProbingSchedule:
    """Timing of the probing protocol.

    ``t_surface_update`` is the surface reconfiguration time, ``t_probe``
    the duration of one bidirectional probe; ``oversampling`` probes are
    exchanged per configuration, which fits one dwell by construction.
    """

    t_surface_update: float = 0.002
    t_probe: float = 0.002
    oversampling: int = 1
    n_configs: int = 1

    def __post_init__(self):
        if self.t_surface_update <= 0 or self.t_probe <= 0:
            raise ValueError("timing parameters must be > 0")
        if self.oversampling < 1 or self.n_configs < 1:
            raise ValueError("oversampling and n_configs must be >= 1")

    @property
    def duration(self) -> float:
        """Total simulated time m * (T_su + L * T_p) in seconds."""
        return self.n_configs * (self.t_surface_update
                                 + self.oversampling * self.t_probe)


@dataclass(frozen=True)
class PilotSymbols:
    """Unit-modulus pilot symbols per party and subcarrier for one probe."""

    alice: np.ndarray
    bob: np.ndarray

    def __post_init__(self):
        for name in ("alice", "bob"):
            x = np.asarray(getattr(self, name))
            if not np.allclose(np.abs(x), 1.0, rtol=0, atol=1e-12):
                raise ValueError(f"{name} pilots must have unit modulus")

    @classmethod
    def random_phases(cls, rng: np.random.Generator, n_subcarriers: int) -> "PilotSymbols":
        phases = rng.uniform(0.0, 2.0 * np.pi, size=(2, n_subcarriers))
        x = np.exp(1j * phases)
        return cls(alice=x[0], bob=x[1])


@dataclass
class ProbingStreams:
    """Independent random substreams consumed during one probing run."""

    surface: np.random.Generator
    pilots_alice: np.random.Generator
    pilots_bob: np.random.Generator
    noise_alice: np.random.Generator
    noise_bob: np.random.Generator
    noise_eve: np.random.Generator

    @classmethod
    def from_seed(cls, seed) -> "ProbingStreams":
        ss = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
        children = ss.spawn(6)
        return cls(*(np.random.default_rng(c) for c in children))


@dataclass
class ObservationSeries:
    """One party's channel estimate series for all (subcarrier, spatial).

    ``raw`` holds the m*L complex estimates (None if dropped to save
    memory), ``averaged`` the m per-configuration magnitude means and
    ``normalized`` the z-scored averaged series.
    """

    owner: str
    averaged: np.ndarray  # (m, K, J)
    normalized: np.ndarray  # (m, K, J)
    raw: np.ndarray | None = None  # (m*L, K, J)


@dataclass
class ProbingRun:
    """Outcome of a probing exchange: series per party plus provenance."""

    series: dict[str, ObservationSeries]
    configs: np.ndarray  # (m, N)
    links: LinkEnsemble
    schedule: ProbingSchedule

    @property
    def duration(self) -> float:
        return self.schedule.duration

    def __getitem__(self, party: str) -> ObservationSeries:
        return self.series[party]


def probe_round(links: LinkEnsemble, config: np.ndarray, pilots: PilotSymbols,
                noise_variance: float, streams: ProbingStreams,
                ) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """One bidirectional probe under a fixed configuration.

    Returns least-squares estimates (alice, bob, eve), each of shape
    (K, J). Both directions observe the same configuration; Eve estimates
    her own effective channel from Bob's transmission.
    """
    c = np.asarray(config, dtype=np.float64).reshape(1, -1)
    h_ab = effective_channel_batch(links, c, "alice_bob")[0]
    h_eb = effective_channel_batch(links, c, "eve_bob")[0]
    k, j = h_ab.shape
    sigma = np.sqrt(noise_variance)
    z_a = sigma * crandn(streams.noise_alice, (k, j))
    z_b = sigma * crandn(streams.noise_bob, (k, j))
    z_e = sigma * crandn(streams.noise_eve, (k, j))
    est_a = h_ab + z_a / pilots.bob[:, None]
    est_b = h_ab + z_b / pilots.alice[:, None]
    est_e = h_eb + z_e / pilots.bob[:, None]
    return est_a, est_b, est_e


def run_probing(scenario: Scenario, schedule: ProbingSchedule,
                surface: SurfaceSchedule, *, links: LinkEnsemble | None = None,
                streams: ProbingStreams | None = None, seed=None,
                keep_raw: bool = True) -> ProbingRun:
    """Full probing exchange over m configurations with L probes each.

    Equivalent to looping probe_round L times per configuration; the
    batched implementation consumes the same random substreams in the
    same order. Randomness enters only through ``streams`` (or the seed
    they are derived from, default ``scenario.master_seed``).
    """
    if surface.n_elements != scenario.n_elements:
        raise ValueError("surface schedule and scenario disagree on element count")
    if streams is None or links is None:
        ss = seed if isinstance(seed, np.random.SeedSequence) else \
            np.random.SeedSequence(scenario.master_seed if seed is None else seed)
        link_ss, stream_ss = ss.spawn(2)
        if streams is None:
            streams = ProbingStreams.from_seed(stream_ss)
        if links is None:
            links = draw_links(scenario, np.random.default_rng(link_ss))

    m, ell = schedule.n_configs, schedule.oversampling
    k, j = scenario.n_subcarriers, scenario.n_spatial
    configs = draw_configs(surface, streams.surface, m)

    h_ab = effective_channel_batch(links, configs, "alice_bob")  # (m, K, J)
    h_eb = effective_channel_batch(links, configs, "eve_bob")

    sigma = np.sqrt(scenario.noise_variance)
    x_a = np.exp(1j * streams.pilots_alice.uniform(0.0, 2.0 * np.pi, size=(m * ell, k)))
    x_b = np.exp(1j * streams.pilots_bob.uniform(0.0, 2.0 * np.pi, size=(m * ell, k)))

    def estimates(base, noise_rng, pilot):
        rep = np.repeat(base, ell, axis=0)  # (m*L, K, J)
        rep += sigma * crandn(noise_rng, (m * ell, k, j)) / pilot[:, :, None]
        return rep

    raw = {
        "alice": estimates(h_ab, streams.noise_alice, x_b),
        "bob": estimates(h_ab, streams.noise_bob, x_a),
        "eve": estimates(h_eb, streams.noise_eve, x_b),
    }

    series = {}
    for party, est in raw.items():
        averaged = block_average(np.abs(est), ell)
        normalized = normalize(averaged)
        series[party] = ObservationSeries(
            owner=party, averaged=averaged, normalized=normalized,
            raw=est if keep_raw else None)
    return ProbingRun(series=series, configs=configs, links=links,
                      schedule=schedule)


def block_average(values: np.ndarray, block: int) -> np.ndarray:
    """Mean over consecutive blocks of ``block`` samples along axis 0."""
    values = np.asarray(values)
    if block < 1:
        raise ValueError("block length must be >= 1")
    if values.shape[0] % block:
        raise ValueError(
            f"series length {values.shape[0]} not divisible by block {block}")
    shaped = values.reshape((values.shape[0] // block, block) + values.shape[1:])
    return shaped.mean(axis=1)


def normalize(values: np.ndarray, axis: int = 0) -> np.ndarray:
    """Z-score along ``axis`` using the population standard deviation."""
    values = np.asarray(values, dtype=np.float64)
    if values.shape[axis] < 2:
        raise ValueError("need at least two samples to normalize")
    mean = values.mean(axis=axis, keepdims=True)
    std = values.std(axis=axis, keepdims=True)
    if np.any(std == 0):
        raise DegenerateEntropyError(
            "constant observation series, no entropy to extract")
    return (values - mean) / std


def estimate_surface_period(raw_magnitudes: np.ndarray) -> tuple[int, int]:
    """Estimate (period, offset) of a piecewise-constant magnitude series.

    Change points are where consecutive-sample differences exceed an
    Otsu-style two-class threshold; the period is the most common spacing
    between change points and the offset the sample count before the
    first full block.
    """
    x = np.asarray(raw_magnitudes, dtype=np.float64).ravel()
    if x.size < 4:
        raise ValueError("series too short for period detection")
    d = np.abs(np.diff(x))
    if d.max() == 0:
        raise DegenerateEntropyError("no detectable variation in series")
    tau = _otsu_threshold(d)
    cps = np.nonzero(d > tau)[0]
    if cps.size < 2:
        raise DegenerateEntropyError("too few level changes to estimate a period")
    spacings = np.diff(cps)
    values, counts = np.unique(spacings, return_counts=True)
    period = int(values[np.argmax(counts)])
    offset = int((cps[0] + 1) % period)
    return period, offset


def _otsu_threshold(values: np.ndarray) -> float:
    """Threshold maximizing between-class variance of a 1-D sample."""
    v = np.sort(values.astype(np.float64))
    n = v.size
    csum = np.cumsum(v)
    total = csum[-1]
    counts = np.arange(1, n)  # split after index i-1: low class size i
    mean_low = csum[:-1] / counts
    mean_high = (total - csum[:-1]) / (n - counts)
    between = counts * (n - counts) * (mean_low - mean_high) ** 2
    split = int(np.argmax(between))
    return 0.5 * (v[split] + v[split + 1])
