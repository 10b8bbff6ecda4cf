"""Swap rates between the low- and high-temperature chains and the swap move."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import log_ndtr

# exp(700) is close to the largest finite double
EXP_CLAMP = 700.0


@dataclass
class SwapDiagnostics:
    overflow_count: int = 0


@dataclass(frozen=True)
class SwapDecision:
    raw_rate: float
    truncated_rate: float
    uniform_draw: float
    accepted: bool
    iteration: int


@dataclass(frozen=True)
class ReplicaState:
    """Two chain positions; slot 0 is the low-temperature chain.

    ``control_variates`` travel with the positions on an accepted swap while
    ``temperatures`` stay with their slots.
    """

    positions: tuple
    temperatures: tuple
    step: int = 0
    control_variates: tuple = field(default=(None, None))


def _clamped_exp(x: float, diag: SwapDiagnostics | None) -> float:
    if x > EXP_CLAMP:
        if diag is not None:
            diag.overflow_count += 1
        return math.inf
    return math.exp(x)


def deterministic_rate(E1, E2, tau1, tau2, diag=None) -> float:
    """``exp{(1/tau1 - 1/tau2) (E1 - E2)}`` for exact energies."""
    d = 1.0 / tau1 - 1.0 / tau2
    return _clamped_exp(d * (E1 - E2), diag)


def corrected_rate(E1_hat, E2_hat, sigma2_hat, F, tau1, tau2, diag=None) -> float:
    """Noisy-energy rate with the variance correction ``(1/tau1 - 1/tau2) * sigma2 / F``."""
    d = 1.0 / tau1 - 1.0 / tau2
    return _clamped_exp(d * (E1_hat - E2_hat - d * sigma2_hat / F), diag)


def vr_rate(Lt1, Lt2, sigma2_tilde, F, tau1, tau2, diag=None) -> float:
    """Rate fed by variance-reduced energies and the smoothed variance.

    Same algebra as :func:`corrected_rate`, with ``F = 2`` reproducing the
    exact Gaussian-noise correction ``sigma2 / 2``.
    """
    d = 1.0 / tau1 - 1.0 / tau2
    return _clamped_exp(d * (Lt1 - Lt2 - (1.0 / F) * d * sigma2_tilde), diag)


def truncate(rate: float) -> float:
    if math.isnan(rate):
        raise ValueError("swap rate is NaN")
    return min(1.0, rate)


def attempt_swap(pair: ReplicaState, rate: float, intensity_r, eta: float, rng):
    """Swap the two positions with probability ``min(1, r * eta * rate)``.

    ``intensity_r=None`` uses ``r = 1/eta``. One uniform is drawn on every
    call so the swap stream advances identically whatever the rate.
    """
    u = float(rng.random())
    r = 1.0 / eta if intensity_r is None else float(intensity_r)
    scale = r * eta
    prob = 0.0 if scale == 0.0 or rate == 0.0 else min(1.0, scale * rate)
    accepted = u < prob
    decision = SwapDecision(float(rate), truncate(rate), u, accepted, pair.step)
    if accepted:
        p0, p1 = pair.positions
        c0, c1 = pair.control_variates
        pair = ReplicaState((p1, p0), pair.temperatures, pair.step, (c1, c0))
    return pair, decision


def lognormal_truncated_mean(u: float, sigma: float) -> float:
    """``E[min(1, S)]`` for ``log S ~ N(u - sigma**2/2, sigma**2)``.

    Closed form ``e^u Phi(-u/sigma - sigma/2) + Phi(u/sigma - sigma/2)``,
    evaluated in log space so large ``u`` does not overflow.
    """
    if sigma < 0:
        raise ValueError(f"sigma must be >= 0, got {sigma}")
    if sigma == 0:
        return min(1.0, math.exp(min(u, EXP_CLAMP)))
    below = math.exp(u + float(log_ndtr(-u / sigma - sigma / 2)))
    above = math.exp(float(log_ndtr(u / sigma - sigma / 2)))
    return min(1.0, below + above)


def lognormal_bound(u: float, sigma: float) -> float:
    """Tail bound ``(e^u + 1/sigma^2) exp(-(sigma/2 - u/sigma)^2 / 2)``."""
    return (math.exp(u) + 1.0 / sigma**2) * math.exp(-0.5 * (sigma / 2 - u / sigma) ** 2)


def mc_truncated_mean(u, sigma, draws, rng):
    """Monte-Carlo ``E[min(1, S)]`` and its standard error."""
    s = np.exp(u - 0.5 * sigma**2 + sigma * rng.standard_normal(int(draws)))
    v = np.minimum(1.0, s)
    return float(v.mean()), float(v.std(ddof=1) / math.sqrt(v.size))
