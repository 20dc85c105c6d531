"""Static propagation environment and surface-dependent effective channel.

The environment consists of per-element reflector links (Alice-surface,
Bob-surface, Eve-surface) and direct links between the parties, each a
frequency-selective fading channel synthesized from a tapped delay line
with exponential power decay. The effective channel seen by a receiver is
the sum of the reflected per-element paths, signed by the binary surface
control vector, plus the direct path.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "Scenario",
    "LinkEnsemble",
    "draw_links",
    "effective_channel",
    "effective_channel_batch",
    "crandn",
]

# (first leg, second leg, direct link) attribute names per party pair.
# The second party of the pair is the transmitter whose signal the first
# party observes; the legitimate pair is symmetric by reciprocity.
_PAIRS = {
    "alice_bob": ("h", "g", "d_ab"),
    "eve_bob": ("e", "g", "d_be"),
    "eve_alice": ("e", "h", "d_ae"),
}


@dataclass(frozen=True)
class Scenario:
    """Geometry, fading and noise parameters of one simulated setup.

    Distances are in meters. ``rho_env`` in [0, 1] correlates Eve's links
    with Alice's (0 = spatially decorrelated, 1 = fully shared, i.e. Eve
    collocated with Alice and observing her exact channel).
    """

    n_elements: int = 128
    n_subcarriers: int = 114
    n_spatial: int = 4
    d_ai: float = 3.0
    d_bi: float = 1.5
    d_ei: float = 3.0
    d_ab: float = 4.0
    d_ae: float = 1.0
    los: bool = True
    path_loss_exponent: float = 2.0
    rician_k: float = 4.0
    taps: int = 8
    noise_variance: float = 1e-2
    rho_env: float = 0.0
    master_seed: int = 0

    def __post_init__(self):
        if self.n_elements < 0:
            raise ValueError("n_elements must be >= 0")
        if self.n_subcarriers < 1 or self.n_spatial < 1:
            raise ValueError("n_subcarriers and n_spatial must be >= 1")
        for name in ("d_ai", "d_bi", "d_ei", "d_ab", "d_ae"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be > 0")
        if self.noise_variance < 0:
            raise ValueError("noise_variance must be >= 0")
        if self.taps < 1:
            raise ValueError("taps must be >= 1")
        if not 0.0 <= self.rho_env <= 1.0:
            raise ValueError("rho_env must lie in [0, 1]")

    @property
    def d_be(self) -> float:
        # No explicit Eve-Bob geometry is configured; Eve sits d_ae away
        # from Alice, so her direct path to Bob is bounded by the detour.
        return self.d_ab + self.d_ae


@dataclass(frozen=True)
class LinkEnsemble:
    """All static complex link gains for one environment realization.

    Per-element links have shape (N, K, J), direct links (K, J), with
    K subcarriers and J spatial channels. A single ensemble serves both
    probing directions of a pair, which makes reciprocity exact.
    """

    h: np.ndarray  # Alice <-> surface
    g: np.ndarray  # Bob <-> surface
    e: np.ndarray  # Eve <-> surface
    d_ab: np.ndarray  # Alice <-> Bob direct
    d_ae: np.ndarray  # Eve <-> Alice direct
    d_be: np.ndarray  # Eve <-> Bob direct

    def __post_init__(self):
        n, k, j = self.h.shape
        for name in ("h", "g", "e"):
            arr = getattr(self, name)
            if arr.shape != (n, k, j):
                raise ValueError(f"{name} has shape {arr.shape}, expected {(n, k, j)}")
        for name in ("d_ab", "d_ae", "d_be"):
            arr = getattr(self, name)
            if arr.shape != (k, j):
                raise ValueError(f"{name} has shape {arr.shape}, expected {(k, j)}")
        for name in ("h", "g", "e", "d_ab", "d_ae", "d_be"):
            arr = getattr(self, name)
            if not np.all(np.isfinite(arr)):
                raise ValueError(f"{name} contains non-finite gains")
            arr.setflags(write=False)

    @property
    def n_elements(self) -> int:
        return self.h.shape[0]

    @property
    def n_subcarriers(self) -> int:
        return self.h.shape[1]

    @property
    def n_spatial(self) -> int:
        return self.h.shape[2]

    def pair(self, name: str) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Return (first leg, second leg, direct) arrays for a party pair."""
        try:
            a, b, d = _PAIRS[name]
        except KeyError:
            raise ValueError(f"unknown pair {name!r}, expected one of {sorted(_PAIRS)}")
        return getattr(self, a), getattr(self, b), getattr(self, d)

    def with_zero_direct(self, name: str = "alice_bob") -> "LinkEnsemble":
        """Copy of the ensemble with one direct link zeroed (for tests)."""
        fields = {f: getattr(self, f).copy() for f in ("h", "g", "e", "d_ab", "d_ae", "d_be")}
        fields[_PAIRS[name][2]] = np.zeros_like(fields[_PAIRS[name][2]])
        return LinkEnsemble(**fields)


def crandn(rng: np.random.Generator, shape) -> np.ndarray:
    """Unit-variance circularly symmetric complex Gaussian draws.

    Real and imaginary parts are interleaved in the underlying stream so
    that batched and per-sample draws consume the generator identically.
    """
    u = rng.standard_normal(tuple(shape) + (2,))
    return (u[..., 0] + 1j * u[..., 1]) / np.sqrt(2.0)


def _delay_profile(taps: int) -> np.ndarray:
    p = np.exp(-0.5 * np.arange(taps))
    return p / p.sum()


def _fading(rng: np.random.Generator, lead_shape, taps: int, k: int) -> np.ndarray:
    """Frequency response of a tapped-delay-line channel, unit mean power.

    Taps are independent complex Gaussians with exponentially decaying
    power, evaluated on the K subcarrier frequencies.
    """
    p = _delay_profile(taps)
    a = crandn(rng, tuple(lead_shape) + (taps,)) * np.sqrt(p)
    t = np.arange(taps)
    w = np.exp(-2j * np.pi * np.outer(t, np.arange(k)) / k)
    return a @ w


def _los_mixture(diffuse: np.ndarray, rician_k: float) -> np.ndarray:
    # Deterministic unit component plus diffuse part at the configured
    # power ratio; total mean power stays 1.
    if math.isinf(rician_k):
        return np.ones_like(diffuse)
    c_los = math.sqrt(rician_k / (1.0 + rician_k))
    c_nlos = math.sqrt(1.0 / (1.0 + rician_k))
    return c_los + c_nlos * diffuse


def draw_links(scenario: Scenario, rng: np.random.Generator) -> LinkEnsemble:
    """Synthesize every link gain of the environment from a seeded stream.

    Per-element and direct links are multipath fading responses scaled by
    the amplitude path gain d**(-eta/2) of their geometric distance. Under
    LOS the direct links gain a deterministic component with power ratio
    ``rician_k`` relative to the diffuse part. Eve's links are mixed with
    Alice's according to ``rho_env``.
    """
    n, k, j, t = (scenario.n_elements, scenario.n_subcarriers,
                  scenario.n_spatial, scenario.taps)
    eta = scenario.path_loss_exponent

    def gain(dist):
        return dist ** (-eta / 2.0)

    def element_link(dist):
        f = _fading(rng, (n, j), t, k)  # (N, J, K)
        return gain(dist) * np.ascontiguousarray(f.transpose(0, 2, 1))

    def direct_link(dist, los):
        f = _fading(rng, (j,), t, k)  # (J, K)
        if los:
            f = _los_mixture(f, scenario.rician_k)
        return gain(dist) * np.ascontiguousarray(f.T)

    h = element_link(scenario.d_ai)
    g = element_link(scenario.d_bi)
    e = element_link(scenario.d_ei)
    d_ab = direct_link(scenario.d_ab, scenario.los)
    d_ae = direct_link(scenario.d_ae, scenario.los)
    d_be = direct_link(scenario.d_be, scenario.los)

    rho = scenario.rho_env
    if rho > 0.0:
        # Near-collocation of Eve with Alice: Eve's observing-side links
        # drift toward Alice's, making her view of Bob's transmissions
        # coincide with Alice's at rho = 1.
        mix = math.sqrt(1.0 - rho * rho)
        e = rho * h + mix * e
        d_be = rho * d_ab + mix * d_be

    return LinkEnsemble(h=h, g=g, e=e, d_ab=d_ab, d_ae=d_ae, d_be=d_be)


def effective_channel(links: LinkEnsemble, config: np.ndarray, k: int, j: int,
                      pair: str = "alice_bob") -> complex:
    """Composite channel sum(first_i * c_i * second_i) + direct at (k, j)."""
    first, second, direct = links.pair(pair)
    c = np.asarray(config)
    if c.shape != (links.n_elements,):
        raise ValueError(
            f"config length {c.shape} does not match {links.n_elements} elements")
    return complex(np.sum(first[:, k, j] * c * second[:, k, j]) + direct[k, j])


def effective_channel_batch(links: LinkEnsemble, configs: np.ndarray,
                            pair: str = "alice_bob") -> np.ndarray:
    """Effective channels for a batch of configurations, shape (m, K, J)."""
    first, second, direct = links.pair(pair)
    configs = np.asarray(configs, dtype=np.float64)
    if configs.ndim != 2 or configs.shape[1] != links.n_elements:
        raise ValueError(
            f"configs must have shape (m, {links.n_elements}), got {configs.shape}")
    n, k, j = first.shape
    prod = (first * second).reshape(n, k * j)
    out = configs @ prod  # (m, K*J) complex
    return out.reshape(-1, k, j) + direct
