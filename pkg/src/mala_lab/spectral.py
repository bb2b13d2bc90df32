"""Coefficient-space representation of functions and the reference Gaussian measure.

Everything lives in the eigenbasis of the reference covariance operator, so a
"function" is just the vector of its leading basis coefficients.  The
covariance acts diagonally with eigenvalues ``lambda_j**2`` where
``lambda_j = j**-kappa`` exactly, which makes every norm, trace and marginal
closed-form computable.
"""

from __future__ import annotations

from functools import lru_cache

import numpy as np

__all__ = [
    "SpectralField",
    "CovarianceSpectrum",
    "sobolev_inner",
    "sobolev_norm_sq",
    "cameron_martin_norm_sq",
    "covariance_apply",
    "sample_reference",
    "trace_sobolev",
    "project",
]


# Weight arrays above this size are not kept in the cache.
_CACHE_MAX_N = 65536


@lru_cache(maxsize=256)
def _power_weights_cached(exponent: float, n: int) -> np.ndarray:
    j = np.arange(1, n + 1, dtype=float)
    w = j ** exponent
    w.flags.writeable = False
    return w


def power_weights(exponent: float, n: int) -> np.ndarray:
    """Read-only array (1**e, 2**e, ..., n**e), cached for moderate n."""
    if n <= _CACHE_MAX_N:
        return _power_weights_cached(float(exponent), int(n))
    j = np.arange(1, n + 1, dtype=float)
    w = j ** exponent
    w.flags.writeable = False
    return w


class SpectralField:
    """A function stored as its leading basis coefficients x_1..x_N.

    Instances are immutable: the coefficient array is copied on construction
    and marked read-only.  All coefficients must be finite.
    """

    __slots__ = ("coeffs",)

    def __init__(self, coeffs):
        arr = np.array(coeffs, dtype=float)
        if arr.ndim != 1:
            raise ValueError(f"coefficients must be one-dimensional, got shape {arr.shape}")
        if arr.size < 1:
            raise ValueError("a field needs at least one coefficient")
        if not np.all(np.isfinite(arr)):
            raise ValueError("coefficients must be finite (no NaN/Inf)")
        arr.flags.writeable = False
        self.coeffs = arr

    @property
    def dim(self) -> int:
        return self.coeffs.size

    @classmethod
    def zeros(cls, dim: int) -> "SpectralField":
        return cls(np.zeros(int(dim)))

    @classmethod
    def basis(cls, j: int, dim: int) -> "SpectralField":
        """Unit coefficient vector e_j (1-based index j)."""
        if not 1 <= j <= dim:
            raise ValueError(f"basis index {j} outside 1..{dim}")
        c = np.zeros(int(dim))
        c[j - 1] = 1.0
        return cls(c)

    def __eq__(self, other):
        if not isinstance(other, SpectralField):
            return NotImplemented
        return np.array_equal(self.coeffs, other.coeffs)

    __hash__ = None

    def __repr__(self):
        return f"SpectralField(dim={self.dim})"


class CovarianceSpectrum:
    """Eigenvalues lambda_j = j**-kappa of the reference covariance.

    ``kappa > 1/2`` so the covariance is trace class on the base space.  The
    eigenvalues are precomputed up to ``n_max`` and are strictly positive and
    non-increasing by construction.
    """

    __slots__ = ("kappa", "lambdas")

    def __init__(self, kappa: float, n_max: int):
        kappa = float(kappa)
        if not np.isfinite(kappa) or kappa <= 0.5:
            raise ValueError(f"decay exponent must satisfy kappa > 1/2, got {kappa}")
        if n_max < 1:
            raise ValueError("n_max must be at least 1")
        self.kappa = kappa
        self.lambdas = power_weights(-kappa, int(n_max))

    @property
    def n_max(self) -> int:
        return self.lambdas.size

    def require(self, n: int) -> None:
        if n > self.n_max:
            raise ValueError(
                f"dimension {n} exceeds the {self.n_max} precomputed eigenvalues"
            )

    def lam(self, n: int) -> np.ndarray:
        """lambda_1..lambda_n."""
        self.require(n)
        return self.lambdas[:n]

    def lam_sq(self, n: int) -> np.ndarray:
        """lambda_j**2 for j=1..n, i.e. the action of the covariance."""
        self.require(n)
        return power_weights(-2.0 * self.kappa, n)

    def inv_lam_sq(self, n: int) -> np.ndarray:
        """lambda_j**-2 for j=1..n, the Cameron-Martin weights."""
        self.require(n)
        return power_weights(2.0 * self.kappa, n)

    def is_trace_class(self, r: float) -> bool:
        """Whether sum lambda_j**2 j**(2r) converges, i.e. r < kappa - 1/2."""
        return float(r) < self.kappa - 0.5

    def __eq__(self, other):
        if not isinstance(other, CovarianceSpectrum):
            return NotImplemented
        return self.kappa == other.kappa and self.n_max == other.n_max

    __hash__ = None

    def __repr__(self):
        return f"CovarianceSpectrum(kappa={self.kappa}, n_max={self.n_max})"


def _check_same_dim(x: SpectralField, y: SpectralField) -> None:
    if x.dim != y.dim:
        raise ValueError(f"dimension mismatch: {x.dim} != {y.dim}")


def sobolev_inner(x: SpectralField, y: SpectralField, r: float) -> float:
    """Weighted inner product sum_j j**(2r) x_j y_j.

    r = 0 recovers the plain coefficient dot product.
    """
    _check_same_dim(x, y)
    w = power_weights(2.0 * float(r), x.dim)
    return float(np.matmul(w * x.coeffs, y.coeffs))


def sobolev_norm_sq(x: SpectralField, r: float) -> float:
    """Squared weighted norm sum_j j**(2r) x_j**2; non-negative."""
    return sobolev_inner(x, x, r)


def cameron_martin_norm_sq(x: SpectralField, spec: CovarianceSpectrum) -> float:
    """Squared Cameron-Martin norm sum_j lambda_j**-2 x_j**2."""
    w = spec.inv_lam_sq(x.dim)
    return float(np.matmul(w * x.coeffs, x.coeffs))


def covariance_apply(x: SpectralField, spec: CovarianceSpectrum, power: float) -> SpectralField:
    """Apply C**power coordinatewise: coefficient j is scaled by lambda_j**(2*power)."""
    spec.require(x.dim)
    factor = power_weights(-2.0 * spec.kappa * float(power), x.dim)
    return SpectralField(factor * x.coeffs)


def sample_reference(n: int, spec: CovarianceSpectrum, rng: np.random.Generator) -> SpectralField:
    """Draw from the reference Gaussian: coefficient j is lambda_j * xi_j, xi_j iid N(0,1)."""
    if n < 1:
        raise ValueError("dimension must be at least 1")
    return SpectralField(spec.lam(n) * rng.standard_normal(n))


def trace_sobolev(spec: CovarianceSpectrum, r: float, n: int) -> float:
    """Partial trace sum_{j<=n} lambda_j**2 j**(2r) = sum_{j<=n} j**(2r - 2 kappa).

    Monotone non-decreasing in n; converges iff ``spec.is_trace_class(r)``.
    np.sum is pairwise, which keeps the O(1e6)-term sums accurate.
    """
    if n < 1:
        raise ValueError("n must be at least 1")
    return float(np.sum(power_weights(2.0 * (float(r) - spec.kappa), n)))


def project(x: SpectralField, n: int) -> SpectralField:
    """Keep the first min(n, x.dim) coefficients, dropping the rest. Idempotent."""
    if n < 0:
        raise ValueError("projection dimension must be non-negative")
    if n >= x.dim:
        return x
    if n == 0:
        raise ValueError("cannot project to an empty field")
    return SpectralField(x.coeffs[:n])
