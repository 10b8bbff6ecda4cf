"""Target posterior for the bimodal mixture benchmark.

Observations follow ``x | theta ~ 0.5 N(theta, s^2) + 0.5 N(sep - theta, s^2)``
with a Gaussian prior ``theta ~ N(0, prior_var)``. The likelihood is symmetric
under ``theta -> sep - theta``, so the posterior has two modes and only the
prior tells them apart.

Energies are per datum: each term carries ``1/N`` of the prior so that any
mini-batch estimate ``N/n * sum_B l_i`` is unbiased for the full negative
log-posterior.
"""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import ConfigError
from .streams import stream

_LOG2 = math.log(2.0)


@dataclass(frozen=True)
class MixtureSpec:
    """Parameters of the mixture model and of the synthetic data set."""

    sep: float = 20.0
    noise_sd: float = 5.0
    prior_var: float = 100.0
    n_data: int = 5000
    gen_theta: float = -5.0
    gen_seed: int = 0

    def __post_init__(self):
        if not self.noise_sd > 0:
            raise ConfigError(f"noise_sd must be > 0, got {self.noise_sd}")
        if not self.prior_var > 0:
            raise ConfigError(f"prior_var must be > 0, got {self.prior_var}")
        if int(self.n_data) != self.n_data or self.n_data < 1:
            raise ConfigError(f"n_data must be a positive integer, got {self.n_data}")
        if int(self.gen_seed) != self.gen_seed or not 0 <= self.gen_seed < 2**64:
            raise ConfigError(f"gen_seed must be an unsigned 64-bit integer, got {self.gen_seed}")


@dataclass(frozen=True, eq=False)
class Dataset:
    xs: np.ndarray
    gen_seed: int | None = None

    @property
    def n_data(self) -> int:
        return int(self.xs.shape[0])


@dataclass(frozen=True, eq=False)
class MiniBatch:
    indices: np.ndarray

    @property
    def size(self) -> int:
        return int(self.indices.shape[0])


def make_dataset(spec: MixtureSpec) -> Dataset:
    """Draw ``spec.n_data`` i.i.d. observations at ``theta = spec.gen_theta``.

    The draw is a pure function of ``spec``: the generator is the ``data-gen``
    stream of ``spec.gen_seed``.
    """
    rng = stream(spec.gen_seed, "data-gen")
    first = rng.random(spec.n_data) < 0.5
    centres = np.where(first, spec.gen_theta, spec.sep - spec.gen_theta)
    xs = centres + spec.noise_sd * rng.standard_normal(spec.n_data)
    return Dataset(xs=xs, gen_seed=spec.gen_seed)


def save_dataset(path, data: Dataset) -> None:
    """Binary dump: little-endian uint64 count followed by float64 values."""
    xs = np.ascontiguousarray(data.xs, dtype="<f8")
    with open(path, "wb") as fh:
        fh.write(struct.pack("<Q", xs.shape[0]))
        fh.write(xs.tobytes())


def load_dataset(path) -> Dataset:
    raw = Path(path).read_bytes()
    if len(raw) < 8:
        raise ValueError(f"{path}: truncated dataset header")
    (count,) = struct.unpack("<Q", raw[:8])
    if len(raw) != 8 + 8 * count:
        raise ValueError(f"{path}: expected {count} values, file holds {(len(raw) - 8) / 8:g}")
    return Dataset(xs=np.frombuffer(raw, dtype="<f8", offset=8).astype(float))


def pairwise_sum(values, axis=-1):
    """Sum along ``axis`` with a fixed balanced binary reduction tree.

    The tree depends only on the length of the axis, so the result is
    reproducible bit for bit however the terms are later sharded.
    """
    a = np.moveaxis(np.asarray(values, dtype=float), axis, -1)
    if a.shape[-1] == 0:
        return np.zeros(a.shape[:-1])[()]
    while a.shape[-1] > 1:
        if a.shape[-1] % 2:
            a = np.concatenate([a, np.zeros(a.shape[:-1] + (1,))], axis=-1)
        a = a[..., 0::2] + a[..., 1::2]
    return a[..., 0][()]


def sample_batch(rng: np.random.Generator, n: int, N: int) -> MiniBatch:
    """Uniform sample of ``n`` distinct indices from ``range(N)``, sorted."""
    if not 1 <= n <= N:
        raise ConfigError(f"batch size must satisfy 1 <= n <= N, got n={n}, N={N}")
    idx = rng.choice(N, size=n, replace=False)
    idx.sort()
    return MiniBatch(indices=idx)


class PerDatumModel:
    """Interface for posteriors written as a sum of per-datum energies.

    Subclasses implement :meth:`energies` and :meth:`grads`; both broadcast a
    parameter array of shape ``P`` against an index array of shape ``I`` and
    return shape ``P + I``.
    """

    n_data: int

    def energies(self, theta, idx=None):
        raise NotImplementedError

    def grads(self, theta, idx=None):
        raise NotImplementedError

    def batch_energy(self, theta, idx):
        """``N/n * sum_{i in B} l_i(theta)``; sums over the last axis of ``idx``."""
        idx = np.asarray(idx)
        return self.energies(theta, idx).sum(axis=-1) * (self.n_data / idx.shape[-1])

    def batch_grad(self, theta, idx):
        idx = np.asarray(idx)
        return self.grads(theta, idx).sum(axis=-1) * (self.n_data / idx.shape[-1])

    def full_energy(self, theta, chunk=512):
        """Exact energy ``sum_i l_i(theta)`` via :func:`pairwise_sum`."""
        theta = np.asarray(theta, dtype=float)
        flat = theta.reshape(-1)
        out = np.empty(flat.shape[0])
        for start in range(0, flat.shape[0], chunk):
            part = flat[start:start + chunk]
            out[start:start + chunk] = pairwise_sum(self.energies(part))
        return out.reshape(theta.shape)[()]


class MixtureModel(PerDatumModel):
    """Per-datum energies and gradients of the mixture posterior."""

    def __init__(self, spec: MixtureSpec, data: Dataset):
        if data.n_data != spec.n_data:
            raise ConfigError(f"dataset holds {data.n_data} points, expected n_data={spec.n_data}")
        self.spec = spec
        self.xs = np.asarray(data.xs, dtype=float)
        self.n_data = spec.n_data
        self._inv_var = 1.0 / spec.noise_sd**2
        self._norm = _LOG2 + 0.5 * math.log(2.0 * math.pi * spec.noise_sd**2)
        self._prior_scale = 1.0 / (spec.prior_var * spec.n_data)

    @classmethod
    def from_spec(cls, spec: MixtureSpec) -> "MixtureModel":
        return cls(spec, make_dataset(spec))

    def _logits(self, theta, idx):
        x = self.xs if idx is None else self.xs[np.asarray(idx)]
        th = np.asarray(theta, dtype=float)
        th = th.reshape(th.shape + (1,) * x.ndim)
        r1 = x - th
        r2 = x - (self.spec.sep - th)
        h = -0.5 * self._inv_var
        return th, r1, r2, h * r1 * r1, h * r2 * r2

    def likelihood_energies(self, theta, idx=None):
        _, _, _, a1, a2 = self._logits(theta, idx)
        return self._norm - np.logaddexp(a1, a2)

    def energies(self, theta, idx=None):
        th, _, _, a1, a2 = self._logits(theta, idx)
        return self._norm - np.logaddexp(a1, a2) + (0.5 * self._prior_scale) * th * th

    def likelihood_grads(self, theta, idx=None):
        _, r1, r2, a1, a2 = self._logits(theta, idx)
        w1, w2 = _responsibilities(a1, a2)
        return -self._inv_var * (w1 * r1 - w2 * r2)

    def grads(self, theta, idx=None):
        th, r1, r2, a1, a2 = self._logits(theta, idx)
        w1, w2 = _responsibilities(a1, a2)
        return -self._inv_var * (w1 * r1 - w2 * r2) + self._prior_scale * th


def _responsibilities(a1, a2):
    # both weights from tanh so that swapping components swaps them exactly
    d = 0.5 * (a1 - a2)
    return 0.5 * (1.0 + np.tanh(d)), 0.5 * (1.0 + np.tanh(-d))


def per_datum_energy(theta, i, spec: MixtureSpec, data: Dataset) -> float:
    if not 0 <= i < spec.n_data:
        raise IndexError(f"datum index {i} outside [0, {spec.n_data})")
    return float(MixtureModel(spec, data).energies(theta, np.array([i]))[..., 0])


def per_datum_grad(theta, i, spec: MixtureSpec, data: Dataset) -> float:
    if not 0 <= i < spec.n_data:
        raise IndexError(f"datum index {i} outside [0, {spec.n_data})")
    return float(MixtureModel(spec, data).grads(theta, np.array([i]))[..., 0])


def full_energy(theta, spec: MixtureSpec, data: Dataset):
    return MixtureModel(spec, data).full_energy(theta)
