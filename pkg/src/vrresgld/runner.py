"""Iteration loop gluing the kernels, estimators and swap move together."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .config import REPLICA_SAMPLERS, VR_SAMPLERS, RunConfig, serialize_config
from .diagnostics import SampleSet
from .errors import ConfigError
from .estimators import (
    ControlVariate,
    SwapState,
    combine,
    estimate_coeff,
    probe_variance,
    refresh_control_variate,
)
from .exchange import ReplicaState, SwapDiagnostics, attempt_swap, corrected_rate, vr_rate
from .kernels import ChainState, Schedule, correction_schedule, schedule_at, sgld_step
from .model import MixtureModel, sample_batch
from .streams import rng_streams

TRACE_COLUMNS = (
    "step", "theta1", "theta2", "energy1", "energy2", "sigma2", "sigma2_probe",
    "coeff", "raw_rate", "truncated_rate", "accepted", "eta1", "eta2", "tau1", "tau2", "F",
)
_INT_COLUMNS = ("step", "accepted")


@dataclass(eq=False)
class RunResult:
    samples: SampleSet
    summary: dict
    trace: dict
    config: RunConfig


def _per_step(cfg: RunConfig):
    """Learning rates, temperatures and correction factor for steps 1..K."""
    K = cfg.steps
    unit = cfg.steps_per_unit
    horizon = max(1, math.ceil(K / unit))
    if cfg.lr_schedule == "cosine" and cfg.cycles > horizon:
        raise ConfigError(f"cycles={cfg.cycles} exceeds the schedule horizon of {horizon} units")

    def lr(base):
        return Schedule(cfg.lr_schedule, base, cfg.lr_decay, cfg.cycles, horizon, cfg.lr_start)

    def temp(base):
        return Schedule(cfg.tau_schedule, base, cfg.tau_decay, 1, horizon, cfg.tau_start)

    s_eta1, s_eta2, s_tau1, s_tau2 = lr(cfg.eta1), lr(cfg.eta2), temp(cfg.tau1), temp(cfg.tau2)
    units = np.arange(K) // unit
    table = {}
    for name, s in (("eta1", s_eta1), ("eta2", s_eta2), ("tau1", s_tau1), ("tau2", s_tau2)):
        values = np.array([schedule_at(s, u) for u in range(horizon)])
        table[name] = values[units]
    f = np.array([correction_schedule(cfg.F0, u, cfg.F_growth) for u in range(horizon)])
    table["F"] = f[units]
    if cfg.sampler == "cyc_sgld":
        phase = np.array([s_eta1.phase(u) for u in range(horizon)])
        table["collect"] = phase[units] >= cfg.cyc_threshold
    else:
        table["collect"] = np.ones(K, dtype=bool)
    return table


def run(cfg: RunConfig, out_dir=None, model: MixtureModel | None = None) -> RunResult:
    """Run the configured sampler for ``cfg.steps`` iterations.

    Every iteration draws one batch shared by both chains, moves each chain
    with SGLD, refreshes control variates and probes the estimator variance
    every ``cv_period`` iterations, then attempts a swap. The low-temperature
    positions after the swap are thinned into the returned sample set.
    """
    spec = cfg.model_spec
    if model is None:
        model = MixtureModel.from_spec(spec)
    rngs = rng_streams(cfg.seed)
    batch_rng, noise1, noise2 = rngs["batch"], rngs["chain1-noise"], rngs["chain2-noise"]
    swap_rng, probe_rng = rngs["swap"], rngs["probe"]

    K, N, n, m, J = cfg.steps, spec.n_data, cfg.batch_size, cfg.cv_period, cfg.probe_count
    replica = cfg.sampler in REPLICA_SAMPLERS
    vr = cfg.sampler in VR_SAMPLERS
    adaptive = cfg.sampler == "avr_re_sgld"
    sched = _per_step(cfg)
    eta1, eta2, tau1, tau2, F = (sched[c] for c in ("eta1", "eta2", "tau1", "tau2", "F"))

    trace = {c: np.full(K, np.nan) for c in TRACE_COLUMNS}
    trace["step"] = np.arange(1, K + 1)
    trace["accepted"] = np.zeros(K, dtype=np.int64)
    for c in ("eta1", "eta2", "tau1", "tau2", "F"):
        trace[c] = sched[c].copy()

    p0, p1 = float(cfg.init1), float(cfg.init2)
    cv0 = cv1 = None
    if vr:
        cv0 = ControlVariate.at(model, p0, 0, m)
        cv1 = ControlVariate.at(model, p1, 0, m)
    swap = SwapState(smoothing=cfg.smoothing, coeff=cfg.cv_coeff, correction_factor=cfg.F0, probe_count=J)
    diag = SwapDiagnostics()
    burn = int(math.floor(cfg.burn_in * K))
    collect = sched["collect"]
    kept, kept_steps = [], []

    for k in range(1, K + 1):
        i = k - 1
        idx = sample_batch(batch_rng, n, N).indices
        if replica:
            g = model.batch_grad(np.array((p0, p1)), idx)
            p0 = sgld_step(ChainState(p0, tau1[i], eta1[i], "low"), g[0], noise1, k).position
            p1 = sgld_step(ChainState(p1, tau2[i], eta2[i], "high"), g[1], noise2, k).position
            if k % m == 0:
                if J:
                    # probe before the refresh: the snapshots are m steps old here
                    sig = probe_variance(p0, p1, cv0, cv1, swap.coeff, n, J, probe_rng, model)
                    swap.update_variance(sig)
                    trace["sigma2_probe"][i] = sig
                    if adaptive:
                        c_k = 0.5 * (estimate_coeff(p0, cv0, n, J, probe_rng, model)
                                     + estimate_coeff(p1, cv1, n, J, probe_rng, model))
                        swap.update_coeff(c_k)
                if vr:
                    cv0 = refresh_control_variate(cv0, p0, k, model)
                    cv1 = refresh_control_variate(cv1, p1, k, model)
            trace["sigma2"][i] = swap.var_estimate
            if k % cfg.swap_every == 0:
                if vr:
                    e = model.batch_energy(np.array((p0, p1, cv0.snapshot, cv1.snapshot)), idx)
                    E0 = combine(e[0], e[2], cv0.cached_full_energy, swap.coeff)
                    E1 = combine(e[1], e[3], cv1.cached_full_energy, swap.coeff)
                    rate = vr_rate(E0, E1, swap.var_estimate, F[i], tau1[i], tau2[i], diag)
                    trace["coeff"][i] = swap.coeff
                else:
                    E0, E1 = model.batch_energy(np.array((p0, p1)), idx)
                    rate = corrected_rate(E0, E1, swap.var_estimate, F[i], tau1[i], tau2[i], diag)
                pair = ReplicaState((p0, p1), (tau1[i], tau2[i]), k, (cv0, cv1))
                pair, decision = attempt_swap(pair, rate, cfg.intensity, eta1[i], swap_rng)
                p0, p1 = pair.positions
                cv0, cv1 = pair.control_variates
                trace["energy1"][i], trace["energy2"][i] = E0, E1
                trace["raw_rate"][i] = decision.raw_rate
                trace["truncated_rate"][i] = decision.truncated_rate
                trace["accepted"][i] = decision.accepted
            trace["theta2"][i] = p1
        else:
            g = model.batch_grad(p0, idx)
            p0 = sgld_step(ChainState(p0, tau1[i], eta1[i], "low"), g, noise1, k).position
        trace["theta1"][i] = p0
        if k > burn and (k - burn) % cfg.thinning == 0 and collect[i]:
            kept.append(p0)
            kept_steps.append(k)

    samples = SampleSet(np.array(kept, dtype=float), burn_in=burn, thinning=cfg.thinning)
    summary = _summarise(cfg, trace, samples, burn, diag)
    summary["sample_steps"] = kept_steps
    result = RunResult(samples, summary, trace, cfg)
    if out_dir is not None:
        write_outputs(result, out_dir)
    return result


def _summarise(cfg, trace, samples, burn, diag):
    attempts = np.isfinite(trace["raw_rate"])
    post = slice(burn, None)
    probes = trace["sigma2_probe"][post]
    probes = probes[np.isfinite(probes)]
    smoothed = trace["sigma2"][post]
    smoothed = smoothed[np.isfinite(smoothed)]
    coeff = trace["coeff"][post]
    coeff = coeff[np.isfinite(coeff)]
    K = cfg.steps
    return {
        "sampler": cfg.sampler,
        "seed": cfg.seed,
        "steps": K,
        "burn_in_steps": burn,
        "n_samples": len(samples),
        "initial": [cfg.init1, cfg.init2],
        "final": [float(trace["theta1"][-1]) if K else cfg.init1,
                  float(trace["theta2"][-1]) if K and np.isfinite(trace["theta2"][-1]) else cfg.init2],
        "swap_attempts": int(attempts.sum()),
        "accepted_swaps": int(trace["accepted"].sum()),
        "mean_sigma2": float(smoothed.mean()) if smoothed.size else math.nan,
        "mean_sigma2_probe": float(probes.mean()) if probes.size else math.nan,
        "mean_coeff": float(coeff.mean()) if coeff.size else math.nan,
        "overflow_count": diag.overflow_count,
    }


def write_trace(path, trace) -> None:
    cols = [np.asarray(trace[c]) for c in TRACE_COLUMNS]
    fmt = ["%d" if c in _INT_COLUMNS else "%.17g" for c in TRACE_COLUMNS]
    data = np.column_stack([c.astype(float) for c in cols]) if cols[0].size else np.empty((0, len(cols)))
    np.savetxt(path, data, fmt=fmt, delimiter=",", header=",".join(TRACE_COLUMNS), comments="")


def read_trace(path) -> dict:
    path = Path(path)
    with open(path) as fh:
        header = fh.readline().strip().split(",")
    arr = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    if arr.size == 0:
        arr = np.empty((0, len(header)))
    return {name: arr[:, j] for j, name in enumerate(header)}


def write_outputs(result: RunResult, out_dir) -> None:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    if result.config.write_trace:
        write_trace(out / "trace.csv", result.trace)
    np.savetxt(out / "samples.csv", result.samples.values, fmt="%.17g", header="theta1", comments="")
    summary = {k: v for k, v in result.summary.items() if k != "sample_steps"}
    (out / "summary.json").write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n")
    (out / "config.txt").write_text(serialize_config(result.config))
