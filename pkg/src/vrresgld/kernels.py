"""Langevin transition kernel and the step-indexed schedules that drive it."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, DivergenceError, SchedulingError

SCHEDULE_KINDS = ("constant", "geometric", "cosine")


@dataclass(frozen=True)
class ChainState:
    position: float | np.ndarray
    temperature: float
    lr: float
    chain_id: str = "low"

    def __post_init__(self):
        if self.temperature < 0:
            raise ConfigError(f"temperature must be >= 0, got {self.temperature}")
        if not self.lr > 0:
            raise ConfigError(f"learning rate must be > 0, got {self.lr}")


def sgld_step(state: ChainState, grad_estimate, rng, step=None) -> ChainState:
    """One SGLD move: ``position - lr * grad + sqrt(2 lr T) * xi``.

    At zero temperature the noise draw is skipped entirely, which turns the
    kernel into plain gradient descent and leaves ``rng`` untouched.
    """
    grad = np.asarray(grad_estimate, dtype=float)
    if not np.all(np.isfinite(grad)):
        raise DivergenceError(step, "non-finite gradient estimate")
    # overflow is reported below as a divergence, not as a warning
    with np.errstate(over="ignore", invalid="ignore"):
        pos = state.position - state.lr * grad
        if state.temperature > 0:
            scale = math.sqrt(2.0 * state.lr * state.temperature)
            xi = rng.standard_normal() if grad.ndim == 0 else rng.standard_normal(grad.shape)
            pos = pos + scale * xi
    if not np.all(np.isfinite(pos)):
        raise DivergenceError(step, "non-finite position")
    pos = float(pos) if np.ndim(pos) == 0 else pos
    return ChainState(pos, state.temperature, state.lr, state.chain_id)


@dataclass(frozen=True)
class Schedule:
    """Value as a function of a step index in ``[0, horizon)``.

    ``geometric`` holds ``base`` until ``start_step`` and multiplies by
    ``decay`` every step after it. ``cosine`` restarts ``cycles`` times:
    ``base/2 * (cos(pi * (k mod P) / P) + 1)`` with ``P = ceil(horizon / cycles)``.
    """

    kind: str = "constant"
    base: float = 1.0
    decay: float = 1.0
    cycles: int = 1
    horizon: int = 1
    start_step: int = 0

    def __post_init__(self):
        if self.kind not in SCHEDULE_KINDS:
            raise ConfigError(f"unknown schedule kind {self.kind!r}; expected one of {SCHEDULE_KINDS}")
        if not self.base > 0:
            raise ConfigError(f"schedule base must be > 0, got {self.base}")
        if self.kind == "geometric" and not 0 < self.decay <= 1:
            raise ConfigError(f"geometric decay must lie in (0, 1], got {self.decay}")
        if self.kind == "cosine" and not 1 <= self.cycles <= self.horizon:
            raise ConfigError(f"cycles must satisfy 1 <= cycles <= horizon, got {self.cycles}")

    @property
    def period(self) -> int:
        return math.ceil(self.horizon / self.cycles)

    def phase(self, k: int) -> float:
        """Position inside the current cosine cycle, in ``[0, 1)``."""
        return (k % self.period) / self.period


def schedule_at(s: Schedule, k: int) -> float:
    if not 0 <= k < s.horizon:
        raise SchedulingError(f"schedule step {k} outside [0, {s.horizon})")
    if s.kind == "constant":
        return s.base
    if s.kind == "geometric":
        return s.base if k < s.start_step else s.base * s.decay ** (k - s.start_step)
    return 0.5 * s.base * (math.cos(math.pi * s.phase(k)) + 1.0)


def correction_schedule(F0: float, k: int, growth: float = 1.02) -> float:
    """Correction factor ``F0 * growth**k``."""
    if not F0 > 0:
        raise ConfigError(f"F0 must be > 0, got {F0}")
    return F0 * growth**k
