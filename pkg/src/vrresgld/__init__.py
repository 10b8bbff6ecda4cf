"""Variance-reduced replica-exchange SGLD on a one-dimensional mixture posterior."""

from .config import PRESETS, RunConfig, parse_config, parse_text, preset
from .diagnostics import (
    Histogram,
    ReferencePosterior,
    SampleSet,
    build_reference,
    histogram,
    mode_occupancy,
    w2_empirical_vs_reference,
    w2_samples,
    w2_series,
)
from .errors import (
    ConfigError,
    DivergenceError,
    GridTooNarrowError,
    SamplerError,
    SchedulingError,
    StaleControlVariateError,
)
from .estimators import (
    ControlVariate,
    SwapState,
    estimate_coeff,
    probe_variance,
    refresh_control_variate,
    smooth_update,
    vr_energy,
)
from .exchange import (
    ReplicaState,
    SwapDecision,
    attempt_swap,
    corrected_rate,
    deterministic_rate,
    lognormal_bound,
    lognormal_truncated_mean,
    mc_truncated_mean,
    truncate,
    vr_rate,
)
from .kernels import ChainState, Schedule, correction_schedule, schedule_at, sgld_step
from .model import (
    Dataset,
    MiniBatch,
    MixtureModel,
    MixtureSpec,
    full_energy,
    make_dataset,
    per_datum_energy,
    per_datum_grad,
    sample_batch,
)
from .runner import RunResult, run

__version__ = "0.1.0"
