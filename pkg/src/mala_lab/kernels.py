"""Langevin and random-walk proposal kernels and the Metropolis-Hastings chain.

The Langevin proposal from state x is

    y = x + delta * mu(x) + sqrt(2 delta) * C^{1/2} xi,    delta = ell * dt,

with dt = N**-gamma and xi standard Gaussian coefficients.  The log
acceptance ratio is computed from (x, y) through the proposal density, so it
applies to anything sharing that transition density:

    Q(x, y) = -1/2 (||y||_C^2 - ||x||_C^2) - (psi(y) - psi(x))
              - 1/(4 delta) (||x - y - delta mu(y)||_C^2
                             - ||y - x - delta mu(x)||_C^2)

The random-walk kernel drops the drift term and, being symmetric, accepts on
the plain log-density difference.

Reproducibility contract: each step consumes the Gaussian proposal draws
first and the acceptance uniform second, so a (seed, config) pair fixes the
trace bit-for-bit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .spectral import SpectralField, CovarianceSpectrum, power_weights, sample_reference
from .targets import TargetModel

__all__ = [
    "KernelParams",
    "RecordingPolicy",
    "StepOutcome",
    "ChainTrace",
    "RecordingError",
    "MALA",
    "RWM",
    "mala_propose",
    "rwm_propose",
    "log_accept_ratio",
    "rwm_log_accept_ratio",
    "mh_step",
    "run_chain",
    "stationary_start",
]

MALA = "mala"
RWM = "rwm"
_KERNELS = (MALA, RWM)


class RecordingError(RuntimeError):
    """The trace was not recorded with enough detail for the requested quantity."""


@dataclass(frozen=True)
class KernelParams:
    """Proposal tuning: time step dt = n_dim**-gamma, proposal step delta = ell * dt."""

    ell: float
    gamma: float
    n_dim: int

    def __post_init__(self):
        if not (np.isfinite(self.ell) and self.ell > 0):
            raise ValueError(f"ell must be positive, got {self.ell}")
        if not 0.0 < self.gamma <= 1.0:
            raise ValueError(f"gamma must lie in (0, 1], got {self.gamma}")
        if self.n_dim < 1:
            raise ValueError(f"n_dim must be at least 1, got {self.n_dim}")

    @property
    def dt(self) -> float:
        return float(self.n_dim) ** (-self.gamma)

    @property
    def delta(self) -> float:
        return self.ell * self.dt


@dataclass(frozen=True)
class RecordingPolicy:
    """What a chain run keeps besides the always-on summaries.

    ``states_stride``: 0 stores no states, 1 every state, k>1 every k-th.
    ``thin``/``coord``: stride and coordinate (0-based) of the scalar trace.
    Acceptance flags, log-ratio values, per-coordinate moment and
    squared-jump accumulators are always recorded.
    """

    states_stride: int = 0
    thin: int = 10
    coord: int = 0

    def __post_init__(self):
        if self.states_stride < 0:
            raise ValueError("states_stride must be >= 0")
        if self.thin < 1:
            raise ValueError("thin must be >= 1")
        if self.coord < 0:
            raise ValueError("coord must be >= 0")

    @classmethod
    def default(cls, n_dim: int) -> "RecordingPolicy":
        """Full states for small dimensions, summaries plus a thinned scalar trace above 1024."""
        if n_dim <= 1024:
            return cls(states_stride=1, thin=1)
        return cls(states_stride=0, thin=10)


@dataclass(frozen=True)
class StepOutcome:
    """One Metropolis-Hastings step: the proposal, its noise, and the verdict."""

    state: SpectralField
    proposal: SpectralField
    noise: SpectralField
    q_value: float
    accepted: bool


@dataclass
class ChainTrace:
    """Recorded output of a chain run with fixed (N, gamma, ell) metadata."""

    params: KernelParams
    kernel: str
    n_steps: int
    accepted: np.ndarray
    q_values: np.ndarray
    coord_index: int
    thin: int
    coord_trace: np.ndarray
    state_mean: np.ndarray
    state_var: np.ndarray
    jump_sq_mean: np.ndarray
    initial: np.ndarray
    final: np.ndarray
    states_stride: int = 0
    states: Optional[np.ndarray] = field(default=None, repr=False)

    @property
    def acceptance_rate(self) -> float:
        return float(self.accepted.mean())

    @property
    def duration(self) -> float:
        """Algorithmic time covered: n_steps * dt exactly."""
        return self.n_steps * self.params.dt

    def require_states(self, consecutive: bool = False) -> np.ndarray:
        if self.states is None:
            raise RecordingError("this trace was recorded without states")
        if consecutive and self.states_stride != 1:
            raise RecordingError(
                f"consecutive states are required, but the trace stride is {self.states_stride}"
            )
        return self.states


def _q_mala(w2k, delta, x, y, mu_x, mu_y, psi_x, psi_y):
    """Canonical log acceptance ratio; works on vectors or (m, n) batches."""
    cm_x = np.matmul(x * x, w2k)
    cm_y = np.matmul(y * y, w2k)
    t_rev = x - y - delta * mu_y
    t_fwd = y - x - delta * mu_x
    r_rev = np.matmul(t_rev * t_rev, w2k)
    r_fwd = np.matmul(t_fwd * t_fwd, w2k)
    return -0.5 * (cm_y - cm_x) - (psi_y - psi_x) - (r_rev - r_fwd) / (4.0 * delta)


def log_accept_ratio(x: SpectralField, y: SpectralField, model: TargetModel,
                     p: KernelParams) -> float:
    """Log of the Metropolis-Hastings ratio for the Langevin transition density.

    Antisymmetric under swapping x and y; the acceptance probability is
    exp(min(0, Q)), which cannot overflow.
    """
    if x.dim != y.dim or x.dim != p.n_dim:
        raise ValueError(
            f"dimension mismatch: x.dim={x.dim}, y.dim={y.dim}, params n_dim={p.n_dim}"
        )
    w2k = model.spectrum.inv_lam_sq(p.n_dim)
    xa, ya = x.coeffs, y.coeffs
    return float(_q_mala(w2k, p.delta, xa, ya,
                         model.drift_of(xa), model.drift_of(ya),
                         model.psi_of(xa), model.psi_of(ya)))


def rwm_log_accept_ratio(x: SpectralField, y: SpectralField, model: TargetModel) -> float:
    """Symmetric-proposal log ratio: just the log-density difference."""
    if x.dim != y.dim:
        raise ValueError(f"dimension mismatch: {x.dim} != {y.dim}")
    return float(model.log_density_of(y.coeffs) - model.log_density_of(x.coeffs))


def mala_propose(x: SpectralField, model: TargetModel, p: KernelParams,
                 rng: np.random.Generator):
    """Draw a Langevin proposal; returns (proposal, noise)."""
    if x.dim != p.n_dim:
        raise ValueError(f"dimension mismatch: x.dim={x.dim}, params n_dim={p.n_dim}")
    lam = model.spectrum.lam(p.n_dim)
    xi = rng.standard_normal(p.n_dim)
    # Grouped exactly as in run_chain so one step reproduces bit-for-bit.
    y = x.coeffs + p.delta * model.drift_of(x.coeffs) + math.sqrt(2.0 * p.delta) * (lam * xi)
    return SpectralField(y), SpectralField(xi)


def rwm_propose(x: SpectralField, p: KernelParams, spec: CovarianceSpectrum,
                rng: np.random.Generator):
    """Draw a preconditioned random-walk proposal; returns (proposal, noise)."""
    if x.dim != p.n_dim:
        raise ValueError(f"dimension mismatch: x.dim={x.dim}, params n_dim={p.n_dim}")
    lam = spec.lam(p.n_dim)
    xi = rng.standard_normal(p.n_dim)
    y = x.coeffs + math.sqrt(2.0 * p.delta) * (lam * xi)
    return SpectralField(y), SpectralField(xi)


def mh_step(x: SpectralField, model: TargetModel, p: KernelParams,
            rng: np.random.Generator, kernel: str = MALA) -> StepOutcome:
    """One Metropolis-Hastings step; accepts with probability exp(min(0, Q))."""
    if kernel not in _KERNELS:
        raise ValueError(f"unknown kernel {kernel!r}")
    if kernel == MALA:
        y, xi = mala_propose(x, model, p, rng)
        q = log_accept_ratio(x, y, model, p)
    else:
        y, xi = rwm_propose(x, p, model.spectrum, rng)
        q = rwm_log_accept_ratio(x, y, model)
    u = rng.uniform()
    accepted = bool(u < math.exp(min(0.0, q)))
    return StepOutcome(state=y if accepted else x, proposal=y, noise=xi,
                       q_value=q, accepted=accepted)


def run_chain(x0: SpectralField, model: TargetModel, p: KernelParams,
              n_steps: int, rng: np.random.Generator,
              record: Optional[RecordingPolicy] = None,
              kernel: str = MALA) -> ChainTrace:
    """Iterate mh_step from x0, recording per the policy.

    The same (x0, seed, params, policy) always reproduces the trace
    bit-for-bit.
    """
    if n_steps < 1:
        raise ValueError("n_steps must be at least 1")
    if kernel not in _KERNELS:
        raise ValueError(f"unknown kernel {kernel!r}")
    if x0.dim != p.n_dim:
        raise ValueError(f"dimension mismatch: x0.dim={x0.dim}, params n_dim={p.n_dim}")
    if record is None:
        record = RecordingPolicy.default(p.n_dim)
    if record.coord >= p.n_dim:
        raise ValueError(f"tracked coordinate {record.coord} outside dimension {p.n_dim}")

    n = p.n_dim
    delta = p.delta
    sq2d = math.sqrt(2.0 * delta)
    lam = model.spectrum.lam(n)
    w2k = model.spectrum.inv_lam_sq(n)
    is_mala = kernel == MALA

    x = np.array(x0.coeffs)
    mu_x = model.drift_of(x) if is_mala else None
    psi_x = model.psi_of(x) if is_mala else None
    logpi_x = None if is_mala else model.log_density_of(x)

    accepted = np.empty(n_steps, dtype=bool)
    q_values = np.empty(n_steps)
    sum_x = np.zeros(n)
    sum_x2 = np.zeros(n)
    jump_sq = np.zeros(n)

    stride = record.states_stride
    states = None
    if stride:
        states = np.empty((n_steps // stride + 1, n))
        states[0] = x
    coord_samples = np.empty(n_steps // record.thin + 1)
    coord_samples[0] = x[record.coord]
    n_coord = 1
    initial = x.copy()

    for k in range(n_steps):
        xi = rng.standard_normal(n)
        if is_mala:
            y = x + delta * mu_x + sq2d * (lam * xi)
            mu_y = model.drift_of(y)
            psi_y = model.psi_of(y)
            q = float(_q_mala(w2k, delta, x, y, mu_x, mu_y, psi_x, psi_y))
        else:
            y = x + sq2d * (lam * xi)
            logpi_y = model.log_density_of(y)
            q = float(logpi_y - logpi_x)
        u = rng.uniform()
        acc = u < math.exp(min(0.0, q))
        accepted[k] = acc
        q_values[k] = q
        if acc:
            d = y - x
            jump_sq += d * d
            x = y
            if is_mala:
                mu_x, psi_x = mu_y, psi_y
            else:
                logpi_x = logpi_y
        sum_x += x
        sum_x2 += x * x
        if stride and (k + 1) % stride == 0:
            states[(k + 1) // stride] = x
        if (k + 1) % record.thin == 0:
            coord_samples[n_coord] = x[record.coord]
            n_coord += 1

    mean = sum_x / n_steps
    var = sum_x2 / n_steps - mean * mean
    np.maximum(var, 0.0, out=var)

    return ChainTrace(
        params=p,
        kernel=kernel,
        n_steps=n_steps,
        accepted=accepted,
        q_values=q_values,
        coord_index=record.coord,
        thin=record.thin,
        coord_trace=coord_samples[:n_coord],
        state_mean=mean,
        state_var=var,
        jump_sq_mean=jump_sq / n_steps,
        initial=initial,
        final=x.copy(),
        states_stride=stride,
        states=states,
    )


def default_burn_in(n_dim: int) -> int:
    """Burn-in length used when no exact sampler exists: 50 * N**(1/3) steps."""
    return math.ceil(50.0 * float(n_dim) ** (1.0 / 3.0))


def stationary_start(model: TargetModel, p: KernelParams, rng: np.random.Generator,
                     burn_in: Optional[int] = None, kernel: str = MALA) -> SpectralField:
    """Initial state for a stationary run.

    Exact target draw where the target is Gaussian (zero and quadratic
    kinds).  The smooth kind starts from a reference draw and discards a
    burn-in (default 50 * N**(1/3) steps), so it is only approximately
    stationary.
    """
    n = p.n_dim
    if model.psi_kind in ("zero", "quadratic"):
        x = model.sample_exact(n, rng)
        if not burn_in:
            return x
    else:
        x = sample_reference(n, model.spectrum, rng)
        if burn_in is None or burn_in == 0:
            burn_in = default_burn_in(n)
    trace = run_chain(x, model, p, burn_in, rng,
                      record=RecordingPolicy(states_stride=0, thin=max(1, burn_in)),
                      kernel=kernel)
    return SpectralField(trace.final)
