"""Continuous-time views of chains and the limiting Langevin diffusion.

A chain of n steps at scale gamma covers algorithmic time T = n * dt with
dt = N**-gamma; its piecewise-linear interpolant can be compared against an
Euler-Maruyama integration of

    dz/dt = h * mu(z) + sqrt(2 h) dW/dt

run at the same truncation.  The cheapest falsifiable consequence of that
comparison is the exponential decay rate of a coordinate's autocorrelation,
which for the Gaussian target equals h.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .kernels import ChainTrace, KernelParams
from .spectral import SpectralField
from .targets import TargetModel

__all__ = [
    "PathSample",
    "AcfFitError",
    "interpolate_chain",
    "coord_path",
    "euler_spde",
    "autocorrelation",
    "acf_rate_fit",
]


class AcfFitError(RuntimeError):
    """The empirical autocorrelation admits no exponential-rate fit."""


@dataclass(frozen=True)
class PathSample:
    """A path sampled on a time grid.

    ``values`` has one row per time; ``coords`` names which coordinate each
    column holds (None means columns 0..N-1 in order).
    """

    times: np.ndarray
    values: np.ndarray
    kind: str
    coords: Optional[tuple] = None

    def __post_init__(self):
        t = np.asarray(self.times, dtype=float)
        if t.ndim != 1 or t.size < 1:
            raise ValueError("times must be a non-empty 1-d array")
        if t[0] != 0.0:
            raise ValueError("paths start at time 0")
        if t.size > 1 and not np.all(np.diff(t) > 0):
            raise ValueError("times must be strictly increasing")
        if self.values.shape[0] != t.size:
            raise ValueError(
                f"{self.values.shape[0]} value rows for {t.size} times"
            )

    def column(self, coord: int) -> np.ndarray:
        """Series of the given (0-based) coordinate."""
        if self.coords is None:
            return self.values[:, coord]
        try:
            idx = self.coords.index(coord)
        except ValueError:
            raise ValueError(f"coordinate {coord} was not recorded (have {self.coords})")
        return self.values[:, idx]


def interpolate_chain(trace: ChainTrace, p: KernelParams,
                      t_grid: Optional[Sequence[float]] = None,
                      method: str = "linear") -> PathSample:
    """Continuous-time view of a full-state trace.

    Knot m sits at time m * stride * dt and carries the recorded state
    exactly.  ``method="linear"`` interpolates linearly between knots;
    ``method="hold"`` is the piecewise-constant variant that keeps the
    previous knot value.  ``t_grid`` defaults to the knots themselves and
    must stay inside [0, n_steps * dt].
    """
    if method not in ("linear", "hold"):
        raise ValueError(f"unknown interpolation method {method!r}")
    states = trace.require_states()
    knot_dt = trace.states_stride * p.dt
    n_knots = states.shape[0]
    t_max = (n_knots - 1) * knot_dt
    if t_grid is None:
        times = np.arange(n_knots) * knot_dt
        return PathSample(times=times, values=states.copy(), kind="interpolated-chain")
    times = np.asarray(t_grid, dtype=float)
    if times.size and (times.min() < 0.0 or times.max() > t_max * (1 + 1e-12)):
        raise ValueError(f"interpolation times must lie in [0, {t_max}]")
    pos = np.clip(times / knot_dt, 0.0, n_knots - 1)
    if n_knots == 1:
        vals = states[np.zeros(times.size, int)]
    elif method == "hold":
        vals = states[np.minimum(pos.astype(int), n_knots - 1)]
    else:
        lo = np.minimum(pos.astype(int), n_knots - 2)
        frac = (pos - lo)[:, None]
        vals = (1.0 - frac) * states[lo] + frac * states[lo + 1]
    return PathSample(times=times, values=vals, kind="interpolated-chain")


def coord_path(trace: ChainTrace, p: KernelParams) -> PathSample:
    """The tracked coordinate of the interpolated chain, sampled at its knots."""
    times = np.arange(trace.coord_trace.size) * (trace.thin * p.dt)
    return PathSample(times=times, values=trace.coord_trace[:, None],
                      kind="interpolated-chain", coords=(trace.coord_index,))


def euler_spde(z0: SpectralField, model: TargetModel, h_speed: float, T: float,
               dt_integrator: float, rng: np.random.Generator,
               coords: Optional[tuple] = None) -> PathSample:
    """Euler-Maruyama integration of dz = h mu(z) dt + sqrt(2 h) C^{1/2} dW.

    One step: z <- z + h dt mu(z) + sqrt(2 h dt) C^{1/2} xi.  Records either
    all coordinates or just the requested ones.
    """
    if dt_integrator <= 0:
        raise ValueError("dt_integrator must be positive")
    if h_speed <= 0:
        raise ValueError("h_speed must be positive")
    n = z0.dim
    lam = model.spectrum.lam(n)
    m_steps = int(round(T / dt_integrator))
    if m_steps < 1:
        raise ValueError("T must cover at least one integrator step")
    keep = None if coords is None else np.asarray(coords, dtype=int)
    width = n if keep is None else keep.size
    values = np.empty((m_steps + 1, width))
    z = np.array(z0.coeffs)
    values[0] = z if keep is None else z[keep]
    drift_scale = h_speed * dt_integrator
    noise_scale = math.sqrt(2.0 * h_speed * dt_integrator)
    for m in range(m_steps):
        xi = rng.standard_normal(n)
        z = z + drift_scale * model.drift_of(z) + noise_scale * (lam * xi)
        values[m + 1] = z if keep is None else z[keep]
    times = np.arange(m_steps + 1) * dt_integrator
    return PathSample(times=times, values=values, kind="euler-spde",
                      coords=None if coords is None else tuple(coords))


def _acf_fft(x: np.ndarray, n_lags: int) -> np.ndarray:
    """Empirical autocorrelation at lags 0..n_lags via FFT (biased estimator)."""
    x = x - x.mean()
    m = x.size
    nfft = 1 << int(np.ceil(np.log2(2 * m)))
    f = np.fft.rfft(x, nfft)
    acov = np.fft.irfft(f * np.conj(f), nfft)[: n_lags + 1] / m
    if acov[0] <= 0:
        raise AcfFitError("series has zero variance")
    return acov / acov[0]


def autocorrelation(path: PathSample, coord: int, max_lag: float):
    """(lag times, ACF values) of a coordinate on a uniform time grid."""
    series = path.column(coord)
    if path.times.size < 3:
        raise ValueError("need at least three samples for an autocorrelation")
    steps = np.diff(path.times)
    step = steps[0]
    if not np.allclose(steps, step, rtol=1e-9, atol=0.0):
        raise ValueError("autocorrelation needs a uniform time grid")
    n_lags = min(int(max_lag / step), path.times.size - 2)
    if n_lags < 1:
        raise ValueError(f"max_lag {max_lag} shorter than the grid step {step}")
    acf = _acf_fft(series, n_lags)
    return np.arange(n_lags + 1) * step, acf


def acf_rate_fit(path: PathSample, coord: int, max_lag: float) -> float:
    """Exponential decay rate of a coordinate's autocorrelation.

    Log-linear regression (with intercept) of log ACF on the lag time, over
    the positive lags before the ACF first drops to 0.2.  The residuals are
    weighted by ACF**2, the delta-method variance stabilization for a log
    transform, which keeps the noisy small-ACF lags from dominating.  For
    the limiting process of the Gaussian target the true rate is the
    speed h.
    """
    lags, acf = autocorrelation(path, coord, max_lag)
    below = np.nonzero(acf <= 0.2)[0]
    stop = int(below[0]) if below.size else acf.size
    if stop <= 1:
        raise AcfFitError("autocorrelation is below the fit threshold at every lag")
    t = lags[1:stop]
    logy = np.log(acf[1:stop])
    if t.size == 1:
        return float(-logy[0] / t[0])
    w = acf[1:stop] ** 2
    t_bar = np.sum(w * t) / np.sum(w)
    y_bar = np.sum(w * logy) / np.sum(w)
    slope = np.sum(w * (t - t_bar) * (logy - y_bar)) / np.sum(w * (t - t_bar) ** 2)
    return float(-slope)
