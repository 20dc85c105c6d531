"""Random binary surface configurations, the system's entropy source.

A schedule draws fresh fair +-1 states for a chosen subset of active
elements each step while the remaining elements keep a frozen random
pattern. Configurations are kept in memory for analysis but are never
persisted by the experiment drivers.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = ["SurfaceConfig", "SurfaceSchedule", "next_config", "draw_configs",
           "verify_balance"]


@dataclass(frozen=True)
class SurfaceConfig:
    """One +-1 control vector together with its sequence number."""

    c: np.ndarray
    index: int

    def __post_init__(self):
        c = np.asarray(self.c, dtype=np.int8)
        if c.ndim != 1 or not np.all(np.abs(c) == 1):
            raise ValueError("control vector entries must be exactly -1 or +1")
        c.setflags(write=False)
        object.__setattr__(self, "c", c)


@dataclass
class SurfaceSchedule:
    """Stateful generator description for a configuration sequence.

    ``active_set`` lists the element indices that are re-drawn each step;
    all other elements keep ``frozen_config``. One consumer per instance.
    """

    n_configs: int
    active_set: np.ndarray
    frozen_config: np.ndarray
    seed: int = 0
    _index: int = field(default=0, repr=False)

    def __post_init__(self):
        self.active_set = np.asarray(self.active_set, dtype=np.intp)
        self.frozen_config = np.asarray(self.frozen_config, dtype=np.int8)
        n = self.frozen_config.shape[0]
        if self.n_configs < 1:
            raise ValueError("n_configs must be >= 1")
        if len(np.unique(self.active_set)) != self.active_set.size:
            raise ValueError("active_set contains duplicate element indices")
        if self.active_set.size and (self.active_set.min() < 0 or self.active_set.max() >= n):
            raise ValueError("active_set indices out of range")
        if not np.all(np.abs(self.frozen_config) == 1):
            raise ValueError("frozen_config entries must be exactly -1 or +1")

    @property
    def n_elements(self) -> int:
        return self.frozen_config.shape[0]

    @property
    def n_active(self) -> int:
        return self.active_set.size

    def rng(self) -> np.random.Generator:
        return np.random.default_rng(self.seed)

    @classmethod
    def random(cls, n_elements: int, n_active: int, n_configs: int,
               rng: np.random.Generator, seed: int = 0) -> "SurfaceSchedule":
        """Schedule with a randomly chosen active subset and frozen pattern."""
        if not 0 <= n_active <= n_elements:
            raise ValueError("need 0 <= n_active <= n_elements")
        active = np.sort(rng.choice(n_elements, size=n_active, replace=False))
        frozen = _fair_signs(rng, n_elements)
        return cls(n_configs=n_configs, active_set=active, frozen_config=frozen,
                   seed=seed)


def _fair_signs(rng: np.random.Generator, *shape) -> np.ndarray:
    return (2 * rng.integers(0, 2, size=shape) - 1).astype(np.int8)


def next_config(schedule: SurfaceSchedule, rng: np.random.Generator) -> SurfaceConfig:
    """Next configuration: fresh fair draws on the active set, frozen rest."""
    c = schedule.frozen_config.copy()
    if schedule.n_active:
        c[schedule.active_set] = _fair_signs(rng, schedule.n_active)
    cfg = SurfaceConfig(c=c, index=schedule._index)
    schedule._index += 1
    return cfg


def draw_configs(schedule: SurfaceSchedule, rng: np.random.Generator,
                 count: int) -> np.ndarray:
    """Batch of ``count`` consecutive configurations as an (m, N) array.

    Consumes the generator exactly like ``count`` calls of next_config.
    """
    out = np.tile(schedule.frozen_config, (count, 1))
    if schedule.n_active:
        out[:, schedule.active_set] = _fair_signs(rng, count, schedule.n_active)
    schedule._index += count
    return out


def verify_balance(configs) -> np.ndarray:
    """Fraction of +1 per element over a sequence of configurations.

    Accepts an iterable of SurfaceConfig or an (m, N) array. For fair
    generation every entry should sit within 3 * (4 m)**-0.5 of 0.5.
    """
    if isinstance(configs, np.ndarray):
        mat = configs
    else:
        mat = np.stack([cfg.c for cfg in configs]) if configs else np.empty((0, 0))
    if mat.shape[0] == 0:
        raise ValueError("need at least one configuration")
    return np.mean(mat > 0, axis=0)
