"""Run configuration: flat ``key = value`` files, env overrides, and presets."""

from __future__ import annotations

import dataclasses
import math
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

from .errors import ConfigError
from .model import MixtureSpec

SAMPLERS = ("sgld", "cyc_sgld", "re_sgld", "vr_re_sgld", "avr_re_sgld")
REPLICA_SAMPLERS = ("re_sgld", "vr_re_sgld", "avr_re_sgld")
VR_SAMPLERS = ("vr_re_sgld", "avr_re_sgld")
ENV_PREFIX = "VRRESGLD_"
REQUIRED = ("sampler", "seed")


def _opt(default, help):
    return field(default=default, metadata={"help": help})


@dataclass(frozen=True)
class RunConfig:
    sampler: str = _opt(None, "one of " + ", ".join(SAMPLERS) + " (required)")
    seed: int = _opt(None, "master seed for all random streams (required)")
    steps: int = _opt(10000, "number of iterations K")
    batch_size: int = _opt(64, "mini-batch size n")
    eta1: float = _opt(1e-4, "learning rate of the low-temperature chain")
    eta2: float = _opt(1e-4, "learning rate of the high-temperature chain")
    tau1: float = _opt(1.0, "low temperature")
    tau2: float = _opt(1000.0, "high temperature (must be >= tau1)")
    lr_schedule: str = _opt("constant", "constant, geometric or cosine")
    lr_decay: float = _opt(1.0, "geometric learning-rate factor per schedule unit")
    lr_start: int = _opt(0, "schedule unit at which learning-rate decay starts")
    cycles: int = _opt(1, "number of cosine cycles")
    tau_schedule: str = _opt("constant", "constant or geometric")
    tau_decay: float = _opt(1.0, "geometric temperature factor per schedule unit")
    tau_start: int = _opt(0, "schedule unit at which temperature decay starts")
    schedule_unit: str = _opt("step", "step, or epoch (= ceil(N/n) steps)")
    F0: float = _opt(2.0, "correction factor at step 0")
    F_growth: float = _opt(1.0, "correction factor growth per schedule unit")
    intensity: Optional[float] = _opt(None, "swap intensity r; auto means 1/eta")
    swap_every: int = _opt(1, "attempt a swap every this many iterations")
    cv_period: int = _opt(50, "control-variate period m (also the variance-probe cadence)")
    cv_coeff: float = _opt(-1.0, "fixed control-variate coefficient c (vr_re_sgld)")
    smoothing: float = _opt(0.1, "stochastic-approximation step gamma in (0, 1]")
    probe_count: int = _opt(10, "batches per variance probe J; 0 disables probes")
    thinning: int = _opt(1, "keep every T-th low-temperature sample")
    burn_in: float = _opt(0.2, "fraction of iterations discarded before sampling")
    cyc_threshold: float = _opt(0.25, "cyc_sgld: collect only past this fraction of each cycle")
    init1: float = _opt(0.0, "initial position of the low-temperature chain")
    init2: float = _opt(0.0, "initial position of the high-temperature chain")
    sep: float = _opt(20.0, "mixture separation")
    noise_sd: float = _opt(5.0, "observation noise standard deviation")
    prior_var: float = _opt(100.0, "prior variance")
    n_data: int = _opt(5000, "number of observations N")
    gen_theta: float = _opt(-5.0, "parameter used to generate the data")
    gen_seed: Optional[int] = _opt(None, "data seed; auto means the master seed")
    write_trace: bool = _opt(True, "write trace.csv next to the summary")

    def __post_init__(self):
        validate(self)

    @property
    def model_spec(self) -> MixtureSpec:
        return MixtureSpec(
            sep=self.sep,
            noise_sd=self.noise_sd,
            prior_var=self.prior_var,
            n_data=self.n_data,
            gen_theta=self.gen_theta,
            gen_seed=self.seed if self.gen_seed is None else self.gen_seed,
        )

    @property
    def steps_per_unit(self) -> int:
        return math.ceil(self.n_data / self.batch_size) if self.schedule_unit == "epoch" else 1

    def replace(self, **changes) -> "RunConfig":
        return dataclasses.replace(self, **changes)


FIELDS = {f.name: f for f in dataclasses.fields(RunConfig)}


def validate(cfg: RunConfig, lines=None):
    """Raise :class:`ConfigError` on the first violated constraint."""
    lines = lines or {}

    def fail(msg, *keys):
        raise ConfigError(msg, [lines[k] for k in keys if k in lines])

    for key in REQUIRED:
        if getattr(cfg, key) is None:
            fail(f"missing required key {key!r}", key)
    if cfg.sampler not in SAMPLERS:
        fail(f"sampler must be one of {SAMPLERS}, got {cfg.sampler!r}", "sampler")
    if not 0 <= cfg.seed < 2**64:
        fail(f"seed must be an unsigned 64-bit integer, got {cfg.seed}", "seed")
    if cfg.steps < 0:
        fail(f"steps must be >= 0, got {cfg.steps}", "steps")
    for key in ("eta1", "eta2", "tau1", "tau2", "F0", "noise_sd", "prior_var"):
        if not getattr(cfg, key) > 0:
            fail(f"{key} must be > 0, got {getattr(cfg, key)}", key)
    if cfg.tau1 > cfg.tau2:
        fail(f"tau1 ({cfg.tau1}) must not exceed tau2 ({cfg.tau2})", "tau1", "tau2")
    if cfg.n_data < 1:
        fail(f"n_data must be >= 1, got {cfg.n_data}", "n_data")
    if not 1 <= cfg.batch_size <= cfg.n_data:
        fail(f"batch_size must satisfy 1 <= n <= N={cfg.n_data}, got {cfg.batch_size}", "batch_size", "n_data")
    for key in ("cv_period", "thinning", "swap_every", "cycles"):
        if getattr(cfg, key) < 1:
            fail(f"{key} must be >= 1, got {getattr(cfg, key)}", key)
    if not 0 < cfg.smoothing <= 1:
        fail(f"smoothing must lie in (0, 1], got {cfg.smoothing}", "smoothing")
    if cfg.probe_count == 1 or cfg.probe_count < 0:
        fail(f"probe_count must be 0 or >= 2, got {cfg.probe_count}", "probe_count")
    if not 0 <= cfg.burn_in < 1:
        fail(f"burn_in must lie in [0, 1), got {cfg.burn_in}", "burn_in")
    if not 0 <= cfg.cyc_threshold < 1:
        fail(f"cyc_threshold must lie in [0, 1), got {cfg.cyc_threshold}", "cyc_threshold")
    if cfg.lr_schedule not in ("constant", "geometric", "cosine"):
        fail(f"lr_schedule must be constant, geometric or cosine, got {cfg.lr_schedule!r}", "lr_schedule")
    if cfg.tau_schedule not in ("constant", "geometric"):
        fail(f"tau_schedule must be constant or geometric, got {cfg.tau_schedule!r}", "tau_schedule")
    for key in ("lr_decay", "tau_decay"):
        if not 0 < getattr(cfg, key) <= 1:
            fail(f"{key} must lie in (0, 1], got {getattr(cfg, key)}", key)
    if cfg.schedule_unit not in ("step", "epoch"):
        fail(f"schedule_unit must be step or epoch, got {cfg.schedule_unit!r}", "schedule_unit")
    if cfg.intensity is not None and cfg.intensity < 0:
        fail(f"intensity must be >= 0, got {cfg.intensity}", "intensity")
    if cfg.gen_seed is not None and not 0 <= cfg.gen_seed < 2**64:
        fail(f"gen_seed must be an unsigned 64-bit integer, got {cfg.gen_seed}", "gen_seed")


def _convert(key: str, text: str):
    kind = FIELDS[key].type
    text = text.strip()
    optional = kind.startswith("Optional[")
    if optional:
        if text.lower() in ("auto", "none", ""):
            return None
        kind = kind[len("Optional["):-1]
    if kind == "str":
        return text
    if kind == "bool":
        low = text.lower()
        if low in ("true", "yes", "1", "on"):
            return True
        if low in ("false", "no", "0", "off"):
            return False
        raise ValueError(f"expected a boolean, got {text!r}")
    if kind == "int":
        value = float(text) if any(ch in text for ch in ".eE") and "x" not in text else int(text, 0)
        if isinstance(value, float):
            if not value.is_integer():
                raise ValueError(f"expected an integer, got {text!r}")
            value = int(value)
        return value
    if kind == "float":
        return float(text)
    raise AssertionError(f"unhandled field type {kind}")


def parse_text(text: str, base: dict | None = None, env: dict | None = None) -> RunConfig:
    """Parse config text on top of ``base`` values; ``env`` entries win over both."""
    values = dict(base or {})
    lines: dict[str, int] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"expected 'key = value', got {raw.strip()!r}", [lineno])
        key, value = (part.strip() for part in line.split("=", 1))
        if key not in FIELDS:
            raise ConfigError(f"unknown key {key!r}", [lineno])
        if key in lines:
            raise ConfigError(f"duplicate key {key!r} (first set on line {lines[key]})", [lineno])
        try:
            values[key] = _convert(key, value)
        except ValueError as exc:
            raise ConfigError(f"{key}: {exc}", [lineno]) from None
        lines[key] = lineno
    for name, value in (env if env is not None else os.environ).items():
        if not name.startswith(ENV_PREFIX):
            continue
        key = name[len(ENV_PREFIX):]
        key = key if key in FIELDS else key.lower()
        if key not in FIELDS:
            raise ConfigError(f"environment variable {name} names unknown key {key!r}")
        try:
            values[key] = _convert(key, value)
        except ValueError as exc:
            raise ConfigError(f"{name}: {exc}") from None
        lines.pop(key, None)
    return build(values, lines)


def build(values: dict, lines=None) -> RunConfig:
    """Construct a config, mapping constraint failures to their source lines."""
    unknown = set(values) - set(FIELDS)
    if unknown:
        raise ConfigError(f"unknown keys {sorted(unknown)}")
    merged = {name: f.default for name, f in FIELDS.items()}
    merged.update(values)
    # validate an uninitialised instance first so errors can cite line numbers
    probe = object.__new__(RunConfig)
    for name, value in merged.items():
        object.__setattr__(probe, name, value)
    validate(probe, lines)
    return RunConfig(**merged)


def parse_config(path, base: dict | None = None, env: dict | None = None) -> RunConfig:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror or exc}") from exc
    return parse_text(text, base=base, env=env)


def _format(value) -> str:
    if value is None:
        return "auto"
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def serialize_config(cfg: RunConfig) -> str:
    return "".join(f"{name} = {_format(getattr(cfg, name))}\n" for name in FIELDS)


def describe_keys() -> str:
    """One line per key with its default, for ``--help``."""
    rows = []
    for name, f in FIELDS.items():
        default = "(required)" if name in REQUIRED else _format(f.default)
        rows.append(f"  {name:<14} {default:<12} {f.metadata.get('help', '')}")
    return "\n".join(rows)


PRESETS = {
    # mixture benchmark: low chain at the posterior temperature, hot chain at 1000
    "mixture": dict(
        sampler="vr_re_sgld", sep=20.0, noise_sd=5.0, prior_var=100.0, n_data=5000,
        gen_theta=-5.0, gen_seed=0, tau1=1.0, tau2=1000.0, eta1=1e-4, eta2=1e-4,
        F0=2.0, cv_period=50, init1=30.0, init2=30.0, batch_size=64, steps=200000,
        thinning=10, probe_count=10, smoothing=0.1,
    ),
    "mixture-cyc": dict(
        sampler="cyc_sgld", sep=20.0, noise_sd=5.0, prior_var=100.0, n_data=5000,
        gen_theta=-5.0, gen_seed=0, tau1=1.0, tau2=1.0, eta1=1e-4, eta2=1e-4,
        lr_schedule="cosine", cycles=30, cyc_threshold=0.25, init1=0.0, init2=0.0,
        batch_size=64, steps=200000, thinning=10, burn_in=0.0,
    ),
}
PRESETS["mixture-lr1e-3"] = dict(PRESETS["mixture"], eta1=1e-3, eta2=1e-3)
PRESET_ALIASES = {"sec51": "mixture", "sec51-cyc": "mixture-cyc", "sec51-lr1e-3": "mixture-lr1e-3"}


def preset_values(name: str) -> dict:
    try:
        return dict(PRESETS[PRESET_ALIASES.get(name, name)])
    except KeyError:
        raise ConfigError(f"unknown preset {name!r}; expected one of {sorted(PRESETS)}") from None


def preset(name: str, **overrides) -> RunConfig:
    values = preset_values(name)
    values.setdefault("seed", 0)
    values.update(overrides)
    return build(values)
