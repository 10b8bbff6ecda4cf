"""Noisy and variance-reduced energy estimators.

The control variate for a chain is a stale copy of its parameter together
with the exact energy at that copy. Adding ``c * (batch energy at snapshot -
exact energy at snapshot)`` to the plain batch energy keeps the estimator
unbiased for any constant ``c`` and cancels most of the batch noise when the
chain has not moved far since the snapshot.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, SchedulingError, StaleControlVariateError
from .model import PerDatumModel, sample_batch

# fallback when the control term is flat; also the standard fixed choice
DEFAULT_COEFF = -1.0


@dataclass(frozen=True)
class ControlVariate:
    snapshot: float
    cached_full_energy: float
    refreshed_at: int
    period: int

    @classmethod
    def at(cls, model: PerDatumModel, theta, k: int, period: int) -> "ControlVariate":
        if period < 1:
            raise ConfigError(f"control-variate period must be >= 1, got {period}")
        return cls(float(theta), float(model.full_energy(theta)), int(k), int(period))


@dataclass
class SwapState:
    """Smoothed quantities that drive the swap correction.

    ``var_estimate`` is taken verbatim from the first probe and smoothed
    afterwards; ``coeff`` starts at the fixed coefficient and is smoothed from
    the first update on.
    """

    var_estimate: float = 0.0
    coeff: float = DEFAULT_COEFF
    smoothing: float = 0.1
    correction_factor: float = 2.0
    probe_count: int = 10
    n_var_updates: int = 0

    def __post_init__(self):
        if not 0.0 < self.smoothing <= 1.0:
            raise ConfigError(f"smoothing must lie in (0, 1], got {self.smoothing}")

    def update_variance(self, sample: float) -> float:
        if self.n_var_updates == 0:
            self.var_estimate = float(sample)
        else:
            self.var_estimate = smooth_update(self.var_estimate, sample, self.smoothing)
        self.n_var_updates += 1
        return self.var_estimate

    def update_coeff(self, sample: float) -> float:
        self.coeff = smooth_update(self.coeff, sample, self.smoothing)
        return self.coeff


def combine(plain, at_snapshot, cached_full_energy, c):
    """Control-variate combination ``plain + c * (at_snapshot - cached)``."""
    return plain + c * (at_snapshot - cached_full_energy)


def vr_energy(theta, batch, cv: ControlVariate, c: float, model: PerDatumModel, check: bool = False):
    """Variance-reduced estimate of ``sum_i l_i(theta)`` on one mini-batch.

    With ``c = -1`` this is ``N/n * sum_B [l_i(theta) - l_i(snapshot)] +
    L(snapshot)``; ``c = 0`` gives back the plain estimator. Pass
    ``check=True`` to recompute the exact energy at the snapshot and fail on a
    stale cache.
    """
    if check:
        exact = float(model.full_energy(cv.snapshot))
        if not np.isclose(exact, cv.cached_full_energy, rtol=1e-12, atol=1e-9):
            raise StaleControlVariateError(
                f"cached energy {cv.cached_full_energy!r} != {exact!r} at snapshot {cv.snapshot!r}"
            )
    idx = _indices(batch)
    plain = model.batch_energy(theta, idx)
    at_snap = model.batch_energy(cv.snapshot, idx)
    return combine(plain, at_snap, cv.cached_full_energy, c)


def refresh_control_variate(cv: ControlVariate, theta, k: int, model: PerDatumModel) -> ControlVariate:
    """Move the snapshot to ``theta``; only legal when ``k`` is a multiple of the period."""
    if k % cv.period:
        raise SchedulingError(f"control variate refresh at k={k} is not a multiple of m={cv.period}")
    return ControlVariate(float(theta), float(model.full_energy(theta)), int(k), cv.period)


def draw_batches(rng, n: int, N: int, J: int) -> np.ndarray:
    """``J`` independent without-replacement batches stacked into shape ``(J, n)``."""
    return np.stack([sample_batch(rng, n, N).indices for _ in range(J)])


def probe_variance(theta1, theta2, cv1, cv2, c, n, J, rng, model: PerDatumModel, batches=None):
    """Sample variance of the energy-difference estimator across fresh batches.

    Each probe batch is shared by both chains. ``cv1 = cv2 = None`` probes the
    plain estimator. ``batches`` (shape ``(J, n)``) replaces the random draw.
    """
    if batches is None:
        if J < 2:
            raise ConfigError(f"probe count must be >= 2, got {J}")
        batches = draw_batches(rng, n, model.n_data, J)
    batches = np.asarray(batches)
    if batches.shape[0] < 2:
        raise ConfigError(f"probe count must be >= 2, got {batches.shape[0]}")
    if cv1 is None and cv2 is None:
        e = model.batch_energy(np.array([theta1, theta2], dtype=float), batches)
        d = e[0] - e[1]
    else:
        pts = np.array([theta1, theta2, cv1.snapshot, cv2.snapshot], dtype=float)
        e = model.batch_energy(pts, batches)
        d = combine(e[0], e[2], cv1.cached_full_energy, c) - combine(e[1], e[3], cv2.cached_full_energy, c)
    return float(np.var(d, ddof=1))


def smooth_update(old: float, new_sample: float, gamma: float) -> float:
    """Stochastic-approximation step ``(1 - gamma) * old + gamma * new_sample``."""
    if not 0.0 < gamma <= 1.0:
        raise ConfigError(f"gamma must lie in (0, 1], got {gamma}")
    return (1.0 - gamma) * old + gamma * new_sample


def estimate_coeff(theta, cv: ControlVariate, n, J, rng, model: PerDatumModel, batches=None) -> float:
    """Empirical variance-minimising coefficient ``-Cov(A, D) / Var(D)``.

    ``A`` is the plain batch energy at ``theta`` and ``D`` the batch energy at
    the snapshot, both over the same ``J`` batches. A flat control term
    (``Var(D) < 1e-300``) returns the fixed coefficient ``-1``.
    """
    if batches is None:
        if J < 2:
            raise ConfigError(f"probe count must be >= 2, got {J}")
        batches = draw_batches(rng, n, model.n_data, J)
    e = model.batch_energy(np.array([theta, cv.snapshot], dtype=float), np.asarray(batches))
    dA = e[0] - e[0].mean()
    dD = e[1] - e[1].mean()
    var_d = float(np.mean(dD * dD))
    if var_d < 1e-300:
        return DEFAULT_COEFF
    return -float(np.mean(dA * dD)) / var_d


def _indices(batch):
    return batch.indices if hasattr(batch, "indices") else np.asarray(batch)
