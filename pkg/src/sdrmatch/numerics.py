"""Dense symmetric linear algebra, chi-square tails, and seeded sampling.

All other modules build on the handful of kernels defined here. Matrices are
plain float64 numpy arrays; eigen-decompositions follow a fixed ordering and
sign convention so that downstream bases are reproducible run to run.
"""

from __future__ import annotations

from typing import NamedTuple

import numpy as np
from scipy import special

from .errors import InvalidArgument, InvalidMatrix, NotPSD

__all__ = [
    "EigenDecomposition",
    "RngStream",
    "sym_eigen",
    "inverse_sqrt_spd",
    "psd_sqrt",
    "chi_square_sf",
    "chi_square_cdf",
    "sample_mvn",
    "sample_bernoulli",
]

_SYMMETRY_RTOL = 1e-10
_PSD_RTOL = 1e-10
_RIDGE_SCALE = 1e-8
_UINT64_MASK = (1 << 64) - 1
_INV_2POW53 = 2.0 ** -53


class EigenDecomposition(NamedTuple):
    """Eigenvalues sorted descending with matching orthonormal column vectors."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray


def _as_symmetric(m, name: str = "matrix") -> np.ndarray:
    a = np.asarray(m, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise InvalidMatrix(f"{name} must be square, got shape {a.shape}")
    if not np.isfinite(a).all():
        raise InvalidMatrix(f"{name} contains non-finite entries")
    scale = 1.0 + (np.abs(a).max() if a.size else 0.0)
    if np.abs(a - a.T).max() > _SYMMETRY_RTOL * scale:
        raise InvalidMatrix(f"{name} is not symmetric within tolerance")
    return 0.5 * (a + a.T)


def sym_eigen(m) -> EigenDecomposition:
    """Eigen-decompose a symmetric matrix.

    Eigenvalues come back in descending order. Each eigenvector is scaled so
    its largest-magnitude component is positive (ties go to the first such
    component), which pins down an otherwise arbitrary sign.

    Raises:
        InvalidMatrix: non-square, non-finite, or asymmetric input.
    """
    a = _as_symmetric(m)
    values, vectors = np.linalg.eigh(a)
    values = values[::-1].copy()
    vectors = vectors[:, ::-1].copy()
    lead = np.argmax(np.abs(vectors), axis=0)
    signs = np.where(vectors[lead, np.arange(vectors.shape[1])] < 0.0, -1.0, 1.0)
    return EigenDecomposition(values, vectors * signs)


def _check_psd(values: np.ndarray, name: str) -> None:
    if values.size == 0:
        return
    tol = _PSD_RTOL * max(1.0, float(np.abs(values).max()))
    if float(values.min()) < -tol:
        raise NotPSD(f"{name} has eigenvalue {values.min():.3e} below -{tol:.1e}")


def default_ridge(m: np.ndarray) -> float:
    """Scale-aware ridge: 1e-8 * mean diagonal, or 1e-8 for a zero matrix."""
    a = np.asarray(m, dtype=float)
    mean_diag = float(np.trace(a)) / a.shape[0]
    return _RIDGE_SCALE * (mean_diag if mean_diag > 0.0 else 1.0)


def inverse_sqrt_spd(m, ridge: float | None = None) -> np.ndarray:
    """Inverse square root of a symmetric PSD matrix.

    Computes V diag((lambda_i + ridge)^(-1/2)) V'. Near-zero eigenvalues are
    clamped at zero before the ridge is added. With ridge=None a scale-aware
    default of 1e-8 * trace/p is used.

    Raises:
        NotPSD: an eigenvalue is meaningfully negative.
        InvalidArgument: negative ridge.
    """
    a = _as_symmetric(m)
    if ridge is None:
        ridge = default_ridge(a)
    elif ridge < 0.0:
        raise InvalidArgument(f"ridge must be >= 0, got {ridge}")
    values, vectors = np.linalg.eigh(a)
    _check_psd(values, "matrix")
    scaled = np.maximum(values, 0.0) + ridge
    with np.errstate(divide="ignore"):
        inv_root = scaled ** -0.5
    out = (vectors * inv_root) @ vectors.T
    return 0.5 * (out + out.T)


def psd_sqrt(m) -> np.ndarray:
    """Symmetric square root of a PSD matrix (eigen factorization)."""
    a = _as_symmetric(m)
    values, vectors = np.linalg.eigh(a)
    _check_psd(values, "matrix")
    root = np.sqrt(np.maximum(values, 0.0))
    out = (vectors * root) @ vectors.T
    return 0.5 * (out + out.T)


def chi_square_sf(x: float, df: int) -> float:
    """P(chi-square_df > x) via the regularized upper incomplete gamma."""
    if not float(x) >= 0.0:
        raise InvalidArgument(f"x must be >= 0, got {x}")
    if int(df) != df or df < 1:
        raise InvalidArgument(f"df must be a positive integer, got {df}")
    return float(special.gammaincc(df / 2.0, float(x) / 2.0))


def chi_square_cdf(x: float, df: int) -> float:
    """P(chi-square_df <= x), the complement of :func:`chi_square_sf`."""
    if not float(x) >= 0.0:
        raise InvalidArgument(f"x must be >= 0, got {x}")
    if int(df) != df or df < 1:
        raise InvalidArgument(f"df must be a positive integer, got {df}")
    return float(special.gammainc(df / 2.0, float(x) / 2.0))


class RngStream:
    """Counter-based random stream keyed by (seed, stream id).

    Identical keys reproduce identical draw sequences; distinct stream ids give
    statistically independent streams (Philox). Uniforms land strictly inside
    (0, 1) and every normal consumes exactly one 64-bit word, so draw counts
    per call are fixed and replicate scheduling cannot shift the sequence.

    A stream is single-owner: share the (seed, stream) recipe, not the object.
    """

    def __init__(self, seed: int, stream: int = 0):
        self.seed = int(seed)
        self.stream = int(stream)
        key = np.array(
            [self.seed & _UINT64_MASK, self.stream & _UINT64_MASK], dtype=np.uint64
        )
        self._gen = np.random.Generator(np.random.Philox(key=key))

    def __repr__(self) -> str:  # pragma: no cover - debugging aid
        return f"RngStream(seed={self.seed}, stream={self.stream})"

    def uniform(self, size=None) -> np.ndarray:
        """Open-interval (0, 1) uniforms, one word each."""
        raw = self._gen.integers(0, 1 << 53, size=size, dtype=np.int64)
        return (raw.astype(np.float64) + 0.5) * _INV_2POW53

    def normal(self, size=None) -> np.ndarray:
        """Standard normals via the inverse CDF, one uniform per draw."""
        return special.ndtri(self.uniform(size))


def sample_mvn(rng: RngStream, mean, cov, n: int) -> np.ndarray:
    """Draw n rows from N(mean, cov) as mean + z @ sqrt(cov).

    The covariance square root comes from the eigen factorization, so a
    singular (but PSD) covariance degenerates cleanly: cov = 0 returns the
    mean exactly in every row.
    """
    mu = np.atleast_1d(np.asarray(mean, dtype=float))
    root = psd_sqrt(cov)
    if root.shape[0] != mu.shape[0]:
        raise InvalidArgument(
            f"mean has length {mu.shape[0]} but cov is {root.shape[0]}x{root.shape[0]}"
        )
    z = rng.normal((int(n), mu.shape[0]))
    return mu + z @ root


def sample_bernoulli(rng: RngStream, prob: float, n: int) -> np.ndarray:
    """n i.i.d. 0/1 draws with success probability prob."""
    if not 0.0 <= prob <= 1.0:
        raise InvalidArgument(f"prob must lie in [0, 1], got {prob}")
    return (rng.uniform(int(n)) < prob).astype(np.int64)
