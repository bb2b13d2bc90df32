"""Declarative experiment configuration: a flat, strictly validated YAML document.

Every key maps straight onto an :class:`ExperimentConfig` field; unknown keys
are rejected and all validation problems are reported together.  The scaling
exponent gamma is kept as an exact rational string ("1/3", not 0.333...) so
that file names and result rows never suffer decimal drift.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, fields, replace
from fractions import Fraction

import yaml

__all__ = ["ExperimentConfig", "ConfigError", "parse_config", "canonical_text", "config_hash"]

EXPERIMENTS = (
    "acceptance-sweep",
    "ell-curve",
    "gamma-scaling",
    "q-decomposition",
    "diffusion-limit",
    "esjd-sweep",
    "rwm-baseline",
)
PSI_KINDS = ("zero", "quadratic", "smooth")
KERNELS = ("mala", "rwm")
RECORDINGS = ("summary", "thinned", "full")

# Experiments whose observables are defined at the critical scaling only.
_CRITICAL_ONLY = ("q-decomposition", "diffusion-limit")


class ConfigError(ValueError):
    """Invalid configuration; carries every validation problem found."""

    def __init__(self, problems):
        self.problems = list(problems)
        super().__init__("invalid configuration:\n" + "\n".join(f"  - {p}" for p in self.problems))


@dataclass(frozen=True)
class ExperimentConfig:
    """One declarative sweep over (N, gamma, ell) for a fixed target and kernel."""

    experiment: str
    n_grid: tuple
    gamma_grid: tuple       # exact rational strings, e.g. "1/3"
    ell_grid: tuple
    n_steps: int
    psi: str = "zero"
    kappa: float = 1.0
    s: float = 0.0
    a: float = 1.0
    kernel: str = "mala"
    burn_in: int = 0
    thinning: int = 10
    recording: str = "summary"
    replicas: int = 1
    master_seed: int = 0
    output_dir: str = "results"

    def with_overrides(self, **kw) -> "ExperimentConfig":
        return replace(self, **kw)

    def gamma_values(self) -> tuple:
        """The gamma grid as floats."""
        return tuple(float(Fraction(g)) for g in self.gamma_grid)


_REQUIRED = ("experiment", "n_grid", "gamma_grid", "ell_grid", "n_steps")
_FIELDS = {f.name for f in fields(ExperimentConfig)}


def _canonical_gamma(value, problems) -> str:
    """Normalize a gamma entry to an exact rational string."""
    try:
        frac = Fraction(str(value))
    except (ValueError, ZeroDivisionError):
        problems.append(f"gamma_grid entry {value!r} is not a rational number")
        return "0"
    if not 0 < frac <= 1:
        problems.append(f"gamma_grid entry {value!r} must lie in (0, 1]")
    return str(frac)


def _as_int(raw, key, problems, minimum=None):
    if not isinstance(raw, int) or isinstance(raw, bool):
        problems.append(f"{key} must be an integer, got {raw!r}")
        return 0
    if minimum is not None and raw < minimum:
        problems.append(f"{key} must be >= {minimum}, got {raw}")
    return raw


def _as_float(raw, key, problems):
    if isinstance(raw, bool) or not isinstance(raw, (int, float)):
        problems.append(f"{key} must be a number, got {raw!r}")
        return 0.0
    return float(raw)


def parse_config(text: str) -> ExperimentConfig:
    """Parse and validate a config document, reporting every problem at once."""
    try:
        raw = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError([f"not valid YAML: {exc}"])
    if not isinstance(raw, dict):
        raise ConfigError(["the config must be a mapping of keys to values"])

    problems = []
    unknown = sorted(set(raw) - _FIELDS)
    for key in unknown:
        problems.append(f"unknown key {key!r}")
    for key in _REQUIRED:
        if key not in raw:
            problems.append(f"missing required key {key!r}")
    if problems and any(k not in raw for k in _REQUIRED):
        raise ConfigError(problems)

    experiment = raw.get("experiment")
    if experiment not in EXPERIMENTS:
        problems.append(f"experiment must be one of {EXPERIMENTS}, got {experiment!r}")

    psi = raw.get("psi", "zero")
    if psi not in PSI_KINDS:
        problems.append(f"psi must be one of {PSI_KINDS}, got {psi!r}")
    kernel = raw.get("kernel", "mala")
    if kernel not in KERNELS:
        problems.append(f"kernel must be one of {KERNELS}, got {kernel!r}")
    recording = raw.get("recording", "summary")
    if recording not in RECORDINGS:
        problems.append(f"recording must be one of {RECORDINGS}, got {recording!r}")

    kappa = _as_float(raw.get("kappa", 1.0), "kappa", problems)
    if kappa <= 0.5:
        problems.append(f"the decay exponent must satisfy kappa > 1/2, got {kappa}")
    s = _as_float(raw.get("s", 0.0), "s", problems)
    if not 0.0 <= s < kappa - 0.5:
        problems.append(f"s must satisfy 0 <= s < kappa - 1/2, got s={s} with kappa={kappa}")
    a = _as_float(raw.get("a", 1.0), "a", problems)
    if a < 0:
        problems.append(f"a must be non-negative, got {a}")

    def grid(key, conv):
        values = raw.get(key)
        if not isinstance(values, (list, tuple)) or len(values) == 0:
            problems.append(f"{key} must be a non-empty list")
            return ()
        return tuple(conv(v) for v in values)

    n_grid = grid("n_grid", lambda v: _as_int(v, "n_grid entry", problems, minimum=1))
    gamma_grid = grid("gamma_grid", lambda v: _canonical_gamma(v, problems))
    ell_grid = grid("ell_grid", lambda v: _as_float(v, "ell_grid entry", problems))
    for ell in ell_grid:
        if ell <= 0:
            problems.append(f"ell_grid entries must be positive, got {ell}")

    n_steps = _as_int(raw.get("n_steps", 0), "n_steps", problems, minimum=1)
    burn_in = _as_int(raw.get("burn_in", 0), "burn_in", problems, minimum=0)
    thinning = _as_int(raw.get("thinning", 10), "thinning", problems, minimum=1)
    replicas = _as_int(raw.get("replicas", 1), "replicas", problems, minimum=1)
    master_seed = _as_int(raw.get("master_seed", 0), "master_seed", problems, minimum=0)
    if isinstance(master_seed, int) and master_seed >= 2**64:
        problems.append("master_seed must fit in 64 bits")
    output_dir = raw.get("output_dir", "results")
    if not isinstance(output_dir, str) or not output_dir:
        problems.append(f"output_dir must be a non-empty string, got {output_dir!r}")

    if experiment in _CRITICAL_ONLY and gamma_grid:
        for g in gamma_grid:
            if Fraction(g) != Fraction(1, 3):
                problems.append(
                    f"experiment {experiment!r} is defined at gamma = 1/3 only, got {g!r}"
                )
    if experiment == "rwm-baseline" and kernel != "rwm":
        problems.append("experiment 'rwm-baseline' requires kernel: rwm")
    if experiment == "q-decomposition" and psi == "smooth":
        problems.append("q-decomposition needs an exactly samplable target (zero or quadratic)")

    if problems:
        raise ConfigError(problems)

    return ExperimentConfig(
        experiment=experiment,
        n_grid=n_grid,
        gamma_grid=gamma_grid,
        ell_grid=ell_grid,
        n_steps=n_steps,
        psi=psi,
        kappa=kappa,
        s=s,
        a=a,
        kernel=kernel,
        burn_in=burn_in,
        thinning=thinning,
        recording=recording,
        replicas=replicas,
        master_seed=master_seed,
        output_dir=output_dir,
    )


def _canonical_dict(cfg: ExperimentConfig) -> dict:
    out = {}
    for f in fields(ExperimentConfig):
        value = getattr(cfg, f.name)
        if isinstance(value, tuple):
            value = list(value)
        out[f.name] = value
    return out


def canonical_text(cfg: ExperimentConfig) -> str:
    """Canonical YAML form; parsing it reproduces ``cfg`` exactly."""
    return yaml.safe_dump(_canonical_dict(cfg), sort_keys=True, default_flow_style=None)


def config_hash(cfg: ExperimentConfig) -> str:
    """SHA-256 of the canonical JSON encoding."""
    payload = json.dumps(_canonical_dict(cfg), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(payload.encode("utf-8")).hexdigest()
