"""Limit-theory observables of the chain.

At the critical scaling gamma = 1/3 the log acceptance ratio splits as

    Q = Z + i + err,
    Z = -ell^3/4 - (ell^{3/2}/sqrt 2) N^{-1/2} sum_j lambda_j^{-1} xi_j x_j,
    i = 1/2 (ell dt)^2 (||x||_C^2 - ||C^{1/2} xi||_C^2),

with Z -> Normal(-ell^3/4, ell^3/2) in stationarity, |i| = O(N^{-1/6}) and
|err| = O(N^{-1/3}).  The limiting mean acceptance is

    alpha(ell) = E[min(1, e^Z_ell)] = 2 Phi(-sqrt(ell^3 / 8)),

a closed form that follows from mean = -variance/2 and is re-validated here
by Monte Carlo.  The induced speed h(ell) = ell * alpha(ell) is maximized
near ell ~ 1.3617 where the acceptance probability is 0.574.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .kernels import ChainTrace, KernelParams, _q_mala
from .limits import PathSample
from .spectral import CovarianceSpectrum, SpectralField, power_weights
from .targets import TargetModel

__all__ = [
    "QDecomposition",
    "QStudy",
    "SpeedCurve",
    "decompose_q",
    "limiting_alpha",
    "limiting_alpha_mc",
    "speed_and_optimum",
    "esjd",
    "empirical_drift",
    "martingale_increments",
    "martingale_path",
    "nested_drift_estimates",
    "martingale_cov_trace",
    "sample_q_values",
]

_CRITICAL_GAMMA = 1.0 / 3.0
# Rows per block in the batched Monte Carlo estimators.  Fixed, so that the
# RNG stream (and hence every estimate) is independent of memory pressure.
_BLOCK_ROWS = 256


@dataclass(frozen=True)
class QDecomposition:
    """Split of one log acceptance ratio into its Gaussian part and remainders."""

    z_term: float
    i_term: float
    err_term: float
    q_total: float


@dataclass(frozen=True)
class QStudy:
    """Arrays of Q draws and their decomposition over stationary (x, xi) pairs."""

    q: np.ndarray
    z_term: np.ndarray
    i_term: np.ndarray
    err_term: np.ndarray


@dataclass(frozen=True)
class SpeedCurve:
    """alpha(ell) and h(ell) = ell alpha(ell) on a grid, with the refined maximizer."""

    ells: np.ndarray
    alphas: np.ndarray
    speeds: np.ndarray
    ell_star: float
    alpha_star: float

    @property
    def h_star(self) -> float:
        return self.ell_star * self.alpha_star


def decompose_q(x: SpectralField, xi: SpectralField, q_total: float,
                p: KernelParams, spec: CovarianceSpectrum) -> QDecomposition:
    """Decompose Q into Gaussian term, chi-square fluctuation and residual.

    Defined only at the critical scaling gamma = 1/3.  The residual is
    q_total - z - i by construction, so the three parts always reassemble
    exactly.
    """
    if abs(p.gamma - _CRITICAL_GAMMA) > 1e-12:
        raise ValueError(
            f"the Q decomposition is defined at gamma = 1/3 only, got gamma={p.gamma}"
        )
    if x.dim != xi.dim or x.dim != p.n_dim:
        raise ValueError("state, noise and params must share one dimension")
    n = p.n_dim
    ell = p.ell
    inv_lam = power_weights(spec.kappa, n)
    cross = float(np.matmul(inv_lam * xi.coeffs, x.coeffs))
    z = -ell**3 / 4.0 - (ell**1.5 / math.sqrt(2.0)) * cross / math.sqrt(n)
    cm_x = float(np.matmul(spec.inv_lam_sq(n) * x.coeffs, x.coeffs))
    noise_sq = float(np.matmul(xi.coeffs, xi.coeffs))
    i_term = 0.5 * (ell * p.dt) ** 2 * (cm_x - noise_sq)
    return QDecomposition(z_term=z, i_term=i_term,
                          err_term=q_total - z - i_term, q_total=q_total)


def limiting_alpha(ell: float) -> float:
    """Limiting mean acceptance 2 Phi(-sqrt(ell^3 / 8)).

    Equals E[min(1, e^Z)] for Z ~ Normal(-ell^3/4, ell^3/2); the two halves
    of that expectation coincide because the mean is minus half the
    variance.  Phi is evaluated through erfc, accurate to ~1e-15.
    """
    ell = float(ell)
    if not (np.isfinite(ell) and ell > 0):
        raise ValueError(f"ell must be positive, got {ell}")
    t = math.sqrt(ell**3 / 8.0)
    return math.erfc(t / math.sqrt(2.0))


def limiting_alpha_mc(ell: float, n_draws: int, rng: np.random.Generator,
                      chunk: int = 1_000_000):
    """Monte Carlo E[min(1, e^Z)], Z ~ Normal(-ell^3/4, ell^3/2).

    Returns (estimate, standard error).  Oracle for the closed form above.
    """
    if ell <= 0:
        raise ValueError(f"ell must be positive, got {ell}")
    mean = -(ell**3) / 4.0
    sd = math.sqrt(ell**3 / 2.0)
    total = 0.0
    total_sq = 0.0
    left = int(n_draws)
    while left > 0:
        m = min(chunk, left)
        a = np.minimum(1.0, np.exp(mean + sd * rng.standard_normal(m)))
        total += float(a.sum())
        total_sq += float(np.matmul(a, a))
        left -= m
    est = total / n_draws
    var = max(total_sq / n_draws - est * est, 0.0)
    return est, math.sqrt(var / n_draws)


def _golden_section_max(f, lo: float, hi: float, tol: float) -> float:
    """Maximizer of a unimodal f on [lo, hi] by golden-section search."""
    invphi = (math.sqrt(5.0) - 1.0) / 2.0
    a, b = lo, hi
    c = b - invphi * (b - a)
    d = a + invphi * (b - a)
    fc, fd = f(c), f(d)
    while b - a > tol:
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - invphi * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + invphi * (b - a)
            fd = f(d)
    return 0.5 * (a + b)


def speed_and_optimum(ell_grid, tol: float = 1e-6) -> SpeedCurve:
    """Tabulate alpha and h on the grid and refine the speed maximizer.

    The grid argmax is refined by golden-section search on the bracketing
    grid interval down to ``tol``; the acceptance at the refined maximizer
    is 0.574 to three decimals.
    """
    ells = np.asarray(ell_grid, dtype=float)
    if ells.ndim != 1 or ells.size < 1:
        raise ValueError("need a non-empty 1-d grid")
    if np.any(ells <= 0):
        raise ValueError("grid values must be positive")
    if np.any(np.diff(ells) <= 0):
        raise ValueError("grid must be strictly increasing")
    alphas = np.array([limiting_alpha(l) for l in ells])
    speeds = ells * alphas

    def h(l):
        return l * limiting_alpha(l)

    i = int(np.argmax(speeds))
    lo = ells[max(i - 1, 0)]
    hi = ells[min(i + 1, ells.size - 1)]
    ell_star = float(ells[i]) if lo == hi else _golden_section_max(h, lo, hi, tol)
    alpha_star = limiting_alpha(ell_star)
    return SpeedCurve(ells=ells, alphas=alphas, speeds=speeds,
                      ell_star=float(ell_star), alpha_star=float(alpha_star))


def esjd(trace: ChainTrace, r: float = 0.0) -> float:
    """Mean squared jump per step, measured in the weighted norm of index r."""
    w = power_weights(2.0 * float(r), trace.jump_sq_mean.size)
    return float(np.matmul(w, trace.jump_sq_mean))


def _batched_steps(x: np.ndarray, model: TargetModel, p: KernelParams,
                   n_samples: int, rng: np.random.Generator,
                   force_reject: bool = False):
    """Yield (increments, accept mask) for one-step transitions from fixed x."""
    n = p.n_dim
    delta = p.delta
    sq2d = math.sqrt(2.0 * delta)
    lam = model.spectrum.lam(n)
    w2k = model.spectrum.inv_lam_sq(n)
    mu_x = model.drift_of(x)
    psi_x = model.psi_of(x)
    drift_part = x + delta * mu_x
    left = int(n_samples)
    while left > 0:
        m = min(_BLOCK_ROWS, left)
        xi = rng.standard_normal((m, n))
        y = drift_part + sq2d * (lam * xi)
        q = _q_mala(w2k, delta, x, y, mu_x, model.drift_of(y), psi_x, model.psi_of(y))
        u = rng.uniform(size=m)
        acc = u < np.exp(np.minimum(0.0, q))
        if force_reject:
            acc = np.zeros(m, dtype=bool)
        yield (y - x) * acc[:, None], acc
        left -= m


def empirical_drift(x: SpectralField, model: TargetModel, p: KernelParams,
                    n_samples: int, rng: np.random.Generator,
                    with_stderr: bool = False):
    """Monte Carlo one-step drift from x, normalized by the speed time scale.

    Averages (x' - x) over n_samples independent single steps started at x
    and divides by h(ell) * dt, h(ell) = ell * alpha(ell).  Converges to the
    limiting drift mu(x) as the dimension grows.  With ``with_stderr`` the
    per-coordinate Monte Carlo standard errors are returned alongside.
    """
    if n_samples < 1:
        raise ValueError("n_samples must be at least 1")
    if x.dim != p.n_dim:
        raise ValueError(f"dimension mismatch: x.dim={x.dim}, params n_dim={p.n_dim}")
    h = p.ell * limiting_alpha(p.ell)
    total = np.zeros(p.n_dim)
    total_sq = np.zeros(p.n_dim)
    for inc, _ in _batched_steps(np.array(x.coeffs), model, p, n_samples, rng):
        total += inc.sum(axis=0)
        total_sq += (inc * inc).sum(axis=0)
    scale = n_samples * h * p.dt
    drift = SpectralField(total / scale)
    if not with_stderr:
        return drift
    mean = total / n_samples
    var = np.maximum(total_sq / n_samples - mean * mean, 0.0)
    stderr = np.sqrt(var / n_samples) / (h * p.dt)
    return drift, stderr


def martingale_increments(trace: ChainTrace, p: KernelParams,
                          model: Optional[TargetModel] = None,
                          d_values: Optional[np.ndarray] = None) -> np.ndarray:
    """Rescaled fluctuation of each step once the estimated drift is removed.

    Gamma_k = (2 h dt)^{-1/2} (x_{k+1} - x_k - h dt d(x_k)).  ``d_values``
    supplies per-state drift estimates (one row per visited state); when
    omitted, the limiting drift mu(x_k) is substituted, which is the cheap
    asymptotically-equivalent default.
    """
    states = trace.require_states(consecutive=True)
    if d_values is None:
        if model is None:
            raise ValueError("provide either a model (for the mu substitution) or d_values")
        d_values = model.drift_of(states[:-1])
    else:
        d_values = np.asarray(d_values, dtype=float)
        if d_values.shape != states[:-1].shape:
            raise ValueError("d_values must hold one row per visited state")
    h = p.ell * limiting_alpha(p.ell)
    hdt = h * p.dt
    return (states[1:] - states[:-1] - hdt * d_values) / math.sqrt(2.0 * hdt)


def martingale_path(trace: ChainTrace, p: KernelParams,
                    model: Optional[TargetModel] = None,
                    d_values: Optional[np.ndarray] = None) -> PathSample:
    """Rescaled noise path: W(0) = 0 and W(m dt) = sqrt(dt) * sum_{k<m} Gamma_k.

    Piecewise linear between knots; after one step W(dt) = sqrt(dt) Gamma_0.
    Its increments approach a Brownian motion with the covariance of the
    reference measure weighted into the chain's natural norm.
    """
    gam = martingale_increments(trace, p, model=model, d_values=d_values)
    w = np.zeros((gam.shape[0] + 1, gam.shape[1]))
    np.cumsum(gam, axis=0, out=w[1:])
    w[1:] *= math.sqrt(p.dt)
    times = np.arange(w.shape[0]) * p.dt
    return PathSample(times=times, values=w, kind="martingale-noise")


def nested_drift_estimates(trace: ChainTrace, model: TargetModel, p: KernelParams,
                           n_samples: int, rng: np.random.Generator) -> np.ndarray:
    """Per-visited-state Monte Carlo drift estimates (exact but expensive mode).

    Intended for short traces; cost is n_samples one-step transitions per
    visited state.
    """
    states = trace.require_states(consecutive=True)
    out = np.empty_like(states[:-1])
    for k in range(out.shape[0]):
        out[k] = empirical_drift(SpectralField(states[k]), model, p, n_samples, rng).coeffs
    return out


def martingale_cov_trace(x: SpectralField, model: TargetModel, p: KernelParams,
                         n_samples: int, rng: np.random.Generator,
                         s: Optional[float] = None,
                         d_value: Optional[np.ndarray] = None,
                         force_reject: bool = False) -> float:
    """Monte Carlo trace of the one-step fluctuation covariance at x.

    Estimates E_x ||Gamma_0||_s^2, to be compared with the weighted trace of
    the reference covariance (``trace_sobolev(spec, s, N)``).  The drift in
    Gamma defaults to the limiting drift mu(x); pass ``d_value`` to use a
    different estimate.  ``force_reject`` rejects every proposal, leaving
    only the drift-correction term (h dt / 2) ||d||_s^2, a closed form used
    as an oracle.
    """
    if n_samples < 1:
        raise ValueError("n_samples must be at least 1")
    if x.dim != p.n_dim:
        raise ValueError(f"dimension mismatch: x.dim={x.dim}, params n_dim={p.n_dim}")
    s = model.s if s is None else float(s)
    xa = np.array(x.coeffs)
    d = model.drift_of(xa) if d_value is None else np.asarray(d_value, dtype=float)
    h = p.ell * limiting_alpha(p.ell)
    hdt = h * p.dt
    w2s = power_weights(2.0 * s, p.n_dim)
    correction = hdt * d
    total = 0.0
    for inc, _ in _batched_steps(xa, model, p, n_samples, rng, force_reject=force_reject):
        g = inc - correction
        total += float(np.matmul(g * g, w2s).sum())
    return total / (2.0 * hdt * n_samples)


def sample_q_values(model: TargetModel, p: KernelParams, n_draws: int,
                    rng: np.random.Generator) -> QStudy:
    """Draw stationary (x, xi) pairs and decompose Q for each.

    Requires an exactly samplable target (zero or quadratic kind) and the
    critical scaling gamma = 1/3.  One Gaussian state and one noise vector
    are consumed per draw, in that order.
    """
    if abs(p.gamma - _CRITICAL_GAMMA) > 1e-12:
        raise ValueError(
            f"the Q decomposition is defined at gamma = 1/3 only, got gamma={p.gamma}"
        )
    n = p.n_dim
    spec = model.spectrum
    sd = model.stationary_sd(n)
    delta = p.delta
    sq2d = math.sqrt(2.0 * delta)
    lam = spec.lam(n)
    w2k = spec.inv_lam_sq(n)
    inv_lam = power_weights(spec.kappa, n)
    ell = p.ell
    z_const = -(ell**3) / 4.0
    z_scale = (ell**1.5 / math.sqrt(2.0)) / math.sqrt(n)
    i_scale = 0.5 * (ell * p.dt) ** 2

    qs = np.empty(n_draws)
    zs = np.empty(n_draws)
    is_ = np.empty(n_draws)
    done = 0
    while done < n_draws:
        m = min(_BLOCK_ROWS, n_draws - done)
        x = sd * rng.standard_normal((m, n))
        xi = rng.standard_normal((m, n))
        mu_x = model.drift_of(x)
        y = x + delta * mu_x + sq2d * (lam * xi)
        q = _q_mala(w2k, delta, x, y, mu_x, model.drift_of(y),
                    model.psi_of(x), model.psi_of(y))
        cross = np.einsum("ij,ij->i", inv_lam * xi, x)
        cm_x = np.matmul(x * x, w2k)
        noise_sq = np.einsum("ij,ij->i", xi, xi)
        sl = slice(done, done + m)
        qs[sl] = q
        zs[sl] = z_const - z_scale * cross
        is_[sl] = i_scale * (cm_x - noise_sq)
        done += m
    return QStudy(q=qs, z_term=zs, i_term=is_, err_term=qs - zs - is_)
