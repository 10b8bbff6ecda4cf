"""Evaluation tools: quadrature reference posterior, exact 1-D W2, occupancy, histograms."""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np
from scipy.integrate import cumulative_trapezoid

from .errors import GridTooNarrowError

TAIL_TOLERANCE = 1e-6


@dataclass(frozen=True, eq=False)
class ReferencePosterior:
    grid: np.ndarray
    log_density: np.ndarray
    cdf: np.ndarray

    def __post_init__(self):
        if self.grid.ndim != 1 or self.grid.shape != self.cdf.shape or self.grid.shape != self.log_density.shape:
            raise ValueError("grid, log_density and cdf must be 1-D arrays of equal length")
        if np.any(np.diff(self.grid) <= 0):
            raise ValueError("grid must be strictly ascending")
        if np.any(np.diff(self.cdf) < 0) or abs(self.cdf[-1] - 1.0) > 1e-12:
            raise ValueError("cdf must be non-decreasing and end at 1")

    @property
    def density(self) -> np.ndarray:
        return np.exp(self.log_density)

    def quantile(self, p):
        """Inverse CDF by linear interpolation inside the containing cell."""
        p = np.asarray(p, dtype=float)
        j = np.clip(np.searchsorted(self.cdf, p, side="left"), 1, self.cdf.size - 1)
        c0, c1 = self.cdf[j - 1], self.cdf[j]
        width = c1 - c0
        safe = np.where(width > 0, width, 1.0)
        t = np.where(width > 0, (p - c0) / safe, 0.0)
        g0, g1 = self.grid[j - 1], self.grid[j]
        return g0 + np.clip(t, 0.0, 1.0) * (g1 - g0)

    def mass_between(self, lo, hi) -> float:
        return float(np.interp(hi, self.grid, self.cdf) - np.interp(lo, self.grid, self.cdf))

    def sample(self, rng, size):
        return self.quantile(rng.random(size))

    def mean(self) -> float:
        return float(np.trapezoid(self.grid * self.density, self.grid))

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["theta", "log_density", "cdf"])
            for row in zip(self.grid, self.log_density, self.cdf):
                w.writerow([f"{v:.17g}" for v in row])

    @classmethod
    def from_csv(cls, path) -> "ReferencePosterior":
        arr = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
        return cls(arr[:, 0].copy(), arr[:, 1].copy(), arr[:, 2].copy())


@dataclass(frozen=True, eq=False)
class SampleSet:
    values: np.ndarray
    burn_in: int = 0
    thinning: int = 1

    def __post_init__(self):
        if not np.all(np.isfinite(self.values)):
            raise ValueError("sample values must be finite")

    def __len__(self):
        return int(self.values.shape[0])


def build_reference(model, grid_lo=-30.0, grid_hi=50.0, grid_n=4000) -> ReferencePosterior:
    """Normalised posterior on a uniform grid by the trapezoid rule.

    Raises :class:`GridTooNarrowError` when the exponential extrapolation of
    the log-density beyond either end puts more than ``1e-6`` of the mass
    off-grid (including the case of a density that still rises at an edge).
    """
    if not grid_lo < grid_hi:
        raise ValueError(f"need grid_lo < grid_hi, got {grid_lo}, {grid_hi}")
    if grid_n < 100:
        raise ValueError(f"grid_n must be >= 100, got {grid_n}")
    grid = np.linspace(grid_lo, grid_hi, int(grid_n))
    energy = np.asarray(model.full_energy(grid), dtype=float)
    shifted = -(energy - energy.min())
    z = np.trapezoid(np.exp(shifted), grid)
    log_density = shifted - np.log(z)
    dens = np.exp(log_density)
    _check_tails(grid, log_density)
    cdf = cumulative_trapezoid(dens, grid, initial=0.0)
    cdf = cdf / cdf[-1]
    return ReferencePosterior(grid, log_density, cdf)


def _check_tails(grid, log_density):
    h = grid[1] - grid[0]
    tails = []
    for edge, inner, outward in ((0, 1, -1.0), (-1, -2, 1.0)):
        p_edge = np.exp(log_density[edge])
        decay = (log_density[inner] - log_density[edge]) / h
        if p_edge == 0.0:
            tails.append(0.0)
        elif decay <= 0:
            tails.append(np.inf)
        else:
            tails.append(p_edge / decay)
    if sum(tails) > TAIL_TOLERANCE:
        raise GridTooNarrowError(
            f"grid [{grid[0]}, {grid[-1]}] misses an estimated {sum(tails):.3g} of the mass "
            f"(low tail {tails[0]:.3g}, high tail {tails[1]:.3g})"
        )


def _values(samples):
    return np.asarray(samples.values if isinstance(samples, SampleSet) else samples, dtype=float)


def w2_empirical_vs_reference(samples, ref: ReferencePosterior) -> float:
    """Exact W2 between an empirical measure and the reference (quantile coupling)."""
    x = np.sort(_values(samples))
    n = x.size
    if n == 0:
        raise ValueError("empty sample set")
    q = ref.quantile((np.arange(1, n + 1) - 0.5) / n)
    return float(np.sqrt(np.mean((x - q) ** 2)))


def w2_samples(a, b) -> float:
    """Exact W2 between two empirical measures with uniform weights.

    Integrates the squared difference of the two quantile functions over the
    merged set of breakpoints ``i/n`` and ``j/m``.
    """
    a = np.sort(_values(a))
    b = np.sort(_values(b))
    if a.size == 0 or b.size == 0:
        raise ValueError("empty sample set")
    if a.size == b.size:
        return float(np.sqrt(np.mean((a - b) ** 2)))
    qs = np.union1d(np.arange(1, a.size + 1) / a.size, np.arange(1, b.size + 1) / b.size)
    lo = np.concatenate([[0.0], qs[:-1]])
    mid = 0.5 * (lo + qs)
    ia = np.minimum((mid * a.size).astype(int), a.size - 1)
    ib = np.minimum((mid * b.size).astype(int), b.size - 1)
    return float(np.sqrt(np.sum((qs - lo) * (a[ia] - b[ib]) ** 2)))


def mode_occupancy(samples, centers, radius):
    """Fraction of samples within ``radius`` of each centre."""
    if not radius > 0:
        raise ValueError(f"radius must be > 0, got {radius}")
    x = _values(samples)
    c = np.asarray(centers, dtype=float)
    if x.size == 0:
        return np.zeros(c.shape)
    return (np.abs(x[None, :] - c[:, None]) <= radius).mean(axis=1)


@dataclass(frozen=True, eq=False)
class Histogram:
    counts: np.ndarray
    edges: np.ndarray
    underflow: int
    overflow: int


def histogram(samples, lo, hi, bins) -> Histogram:
    """Equal-width counts on ``[lo, hi]``; the last bin includes ``hi``."""
    if bins < 1 or not lo < hi:
        raise ValueError(f"need bins >= 1 and lo < hi, got bins={bins}, lo={lo}, hi={hi}")
    x = _values(samples)
    counts, edges = np.histogram(x, bins=int(bins), range=(lo, hi))
    return Histogram(counts, edges, int(np.sum(x < lo)), int(np.sum(x > hi)))


def kept_window(step, burn_frac):
    """Half-open index window ``[start, step)`` used for an evaluation at ``step``."""
    return int(np.floor(burn_frac * step)), int(step)


def w2_series(chain, ref: ReferencePosterior, every=5000, burn_frac=0.2, thinning=1, min_samples=100):
    """W2 of the running sample against ``ref`` at ``every, 2*every, ...`` steps.

    At evaluation step ``s`` the first ``burn_frac`` of the ``s`` recorded
    positions are dropped and the rest thinned. Evaluations with fewer than
    ``min_samples`` kept samples are skipped.
    """
    chain = np.asarray(chain, dtype=float)
    out = []
    for s in range(every, chain.size + 1, every):
        start, stop = kept_window(s, burn_frac)
        kept = chain[start:stop][thinning - 1::thinning]
        if kept.size >= min_samples:
            out.append((s, w2_empirical_vs_reference(kept, ref)))
    return out


def write_metrics(path_or_file, rows):
    """Flat ``metric_name,step,value`` CSV."""
    def _write(fh):
        w = csv.writer(fh)
        w.writerow(["metric_name", "step", "value"])
        for name, step, value in rows:
            w.writerow([name, int(step), f"{float(value):.17g}"])

    if hasattr(path_or_file, "write"):
        _write(path_or_file)
    else:
        with open(path_or_file, "w", newline="") as fh:
            _write(fh)
