"""Two-component Gaussian mixtures used as input laws.

The input law is ``alpha * N(mean1, diag(cov1)) + (1 - alpha) * N(mean2, cov2)``.
The first component, which has independent coordinates, doubles as the
product reference measure against which densities are expressed.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np
from scipy import stats
from scipy.special import logsumexp

from ..exceptions import SpecError

PD_RTOL = 1e-10


@dataclass(frozen=True)
class GaussianMixtureSpec:
    """Mixture ``alpha * N(mean1, diag(cov1)) + (1 - alpha) * N(mean2, cov2)``.

    Parameters
    ----------
    alpha : float
        Weight of the reference (independent) component, in (0, 1).
    mean1, mean2 : array_like, shape (p,)
        Component means.
    cov1 : array_like, shape (p,)
        Diagonal of the reference covariance.
    cov2 : array_like, shape (p, p)
        Symmetric positive-definite covariance of the dependent component.
        Off-diagonal entries are covariances, not correlations.
    """

    alpha: float
    mean1: np.ndarray
    mean2: np.ndarray
    cov1: np.ndarray
    cov2: np.ndarray
    _chol2: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        mean1 = np.atleast_1d(np.asarray(self.mean1, dtype=float))
        mean2 = np.atleast_1d(np.asarray(self.mean2, dtype=float))
        cov1 = np.atleast_1d(np.asarray(self.cov1, dtype=float))
        cov2 = np.atleast_2d(np.asarray(self.cov2, dtype=float))
        p = mean1.shape[0]
        if not 0.0 < float(self.alpha) < 1.0:
            raise SpecError(f"alpha must lie in (0, 1), got {self.alpha}")
        if mean1.ndim != 1 or mean2.shape != (p,) or cov1.shape != (p,):
            raise SpecError("mean1, mean2 and cov1 must be vectors of equal length")
        if cov2.shape != (p, p):
            raise SpecError(f"cov2 must be {p}x{p}, got {cov2.shape}")
        arrays = (mean1, mean2, cov1, cov2)
        if not all(np.all(np.isfinite(a)) for a in arrays):
            raise SpecError("mixture parameters must be finite")
        if np.any(cov1 <= 0):
            raise SpecError("cov1 entries must be strictly positive")
        if not np.allclose(cov2, cov2.T, rtol=0, atol=1e-12):
            raise SpecError("cov2 must be symmetric")
        eig = np.linalg.eigvalsh(cov2)
        if eig[0] <= 0:
            raise SpecError(f"cov2 is not positive definite (smallest eigenvalue {eig[0]:.3g})")
        for name, value in zip(("mean1", "mean2", "cov1", "cov2"), arrays):
            value.setflags(write=False)
            object.__setattr__(self, name, value)
        object.__setattr__(self, "alpha", float(self.alpha))
        object.__setattr__(self, "_chol2", np.linalg.cholesky(cov2))

    @property
    def dim(self) -> int:
        return self.mean1.shape[0]

    @property
    def centered(self) -> bool:
        return bool(np.array_equal(self.mean1, self.mean2))

    def marginal(self, idx) -> "GaussianMixtureSpec":
        """Mixture law of the coordinates ``idx``."""
        idx = np.atleast_1d(np.asarray(idx, dtype=int))
        return GaussianMixtureSpec(
            self.alpha,
            self.mean1[idx],
            self.mean2[idx],
            self.cov1[idx],
            self.cov2[np.ix_(idx, idx)],
        )

    def to_dict(self) -> dict:
        return {
            "alpha": self.alpha,
            "mean1": self.mean1.tolist(),
            "mean2": self.mean2.tolist(),
            "cov1_diag": self.cov1.tolist(),
            "cov2": self.cov2.tolist(),
        }

    @classmethod
    def from_dict(cls, record: dict) -> "GaussianMixtureSpec":
        missing = {"alpha", "mean1", "mean2", "cov1_diag", "cov2"} - set(record)
        if missing:
            raise SpecError(f"mixture record is missing fields: {sorted(missing)}")
        return cls(
            record["alpha"],
            record["mean1"],
            record["mean2"],
            record["cov1_diag"],
            record["cov2"],
        )

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_json(cls, text: str) -> "GaussianMixtureSpec":
        return cls.from_dict(json.loads(text))


def centered_mixture(alpha, cov2, cov1=None) -> GaussianMixtureSpec:
    """Zero-mean mixture with reference covariance ``diag(cov1)`` (identity by default)."""
    cov2 = np.atleast_2d(np.asarray(cov2, dtype=float))
    p = cov2.shape[0]
    cov1 = np.ones(p) if cov1 is None else cov1
    return GaussianMixtureSpec(alpha, np.zeros(p), np.zeros(p), cov1, cov2)


def sample_mixture(spec: GaussianMixtureSpec, n: int, seed) -> np.ndarray:
    """Draw ``n`` i.i.d. points from the mixture.

    Each draw first picks its component, then draws from that Gaussian.
    ``seed`` is anything accepted by :func:`numpy.random.default_rng`.
    """
    if int(n) < 1:
        raise ValueError(f"sample size must be at least 1, got {n}")
    n = int(n)
    rng = np.random.default_rng(seed)
    first = rng.random(n) < spec.alpha
    z = rng.standard_normal((n, spec.dim))
    x = np.empty_like(z)
    x[first] = spec.mean1 + z[first] * np.sqrt(spec.cov1)
    x[~first] = spec.mean2 + z[~first] @ spec._chol2.T
    return x


def _component_logpdfs(spec, x, idx):
    x = np.atleast_2d(np.asarray(x, dtype=float))
    sub = spec.marginal(idx) if idx is not None else spec
    lp1 = stats.norm.logpdf(x, sub.mean1, np.sqrt(sub.cov1)).sum(axis=1)
    lp2 = stats.multivariate_normal(sub.mean2, sub.cov2).logpdf(x)
    return lp1, np.atleast_1d(lp2)


def mixture_logpdf(spec: GaussianMixtureSpec, x, idx=None) -> np.ndarray:
    """Lebesgue log-density of the mixture, or of its marginal on ``idx``."""
    lp1, lp2 = _component_logpdfs(spec, x, idx)
    return logsumexp(
        np.stack([lp1, lp2]),
        axis=0,
        b=np.array([[spec.alpha], [1.0 - spec.alpha]]),
    )


def mixture_pdf(spec: GaussianMixtureSpec, x, idx=None) -> np.ndarray:
    return np.exp(mixture_logpdf(spec, x, idx))


def mixture_density_wrt_nu(spec: GaussianMixtureSpec, x) -> np.ndarray | float:
    """Density of the mixture with respect to the reference ``N(mean1, diag(cov1))``.

    Equals ``alpha + (1 - alpha) * N(x; mean2, cov2) / N(x; mean1, diag(cov1))``,
    which for ``mean1 == mean2`` reduces to the closed form
    ``alpha + (1 - alpha) |S|^(1/2) |O|^(-1/2) exp(-q/2)`` with
    ``q = (x - m)' (O^-1 - S^-1) (x - m)``.
    Accepts a single point or an ``(n, p)`` array.
    """
    arr = np.asarray(x, dtype=float)
    single = arr.ndim == 1
    lp1, lp2 = _component_logpdfs(spec, np.atleast_2d(arr), None)
    out = spec.alpha + (1.0 - spec.alpha) * np.exp(lp2 - lp1)
    return float(out[0]) if single else out


def mixture_moments(spec: GaussianMixtureSpec):
    """Mean vector and covariance matrix of the mixture."""
    a = spec.alpha
    mean = a * spec.mean1 + (1 - a) * spec.mean2
    second = a * (np.diag(spec.cov1) + np.outer(spec.mean1, spec.mean1)) + (1 - a) * (
        spec.cov2 + np.outer(spec.mean2, spec.mean2)
    )
    return mean, second - np.outer(mean, mean)


def sample_conditional(spec: GaussianMixtureSpec, x_given, given, rng) -> np.ndarray:
    """Redraw the coordinates outside ``given`` from their conditional law.

    ``x_given`` holds the frozen coordinates row by row. Returns full rows
    with the frozen coordinates copied through. Used by the pick-freeze
    oracle, which needs conditional redraws because the inputs are dependent.
    """
    x_given = np.atleast_2d(np.asarray(x_given, dtype=float))
    given = np.atleast_1d(np.asarray(given, dtype=int))
    free = np.setdiff1d(np.arange(spec.dim), given)
    n = x_given.shape[0]
    out = np.empty((n, spec.dim))
    out[:, given] = x_given
    if free.size == 0:
        return out

    lp1, lp2 = _component_logpdfs(spec, x_given, given)
    logw1 = np.log(spec.alpha) + lp1
    logw2 = np.log1p(-spec.alpha) + lp2
    post1 = np.exp(logw1 - np.logaddexp(logw1, logw2))
    first = rng.random(n) < post1
    z = rng.standard_normal((n, free.size))

    # the reference component has independent coordinates
    out[np.ix_(first, free)] = spec.mean1[free] + z[first] * np.sqrt(spec.cov1[free])

    c = spec.cov2
    c_fg = c[np.ix_(free, given)]
    c_gg = c[np.ix_(given, given)]
    gain = np.linalg.solve(c_gg, c_fg.T).T
    cond_cov = c[np.ix_(free, free)] - gain @ c_fg.T
    chol = np.linalg.cholesky(cond_cov + 1e-15 * np.eye(free.size))
    shift = (x_given[~first] - spec.mean2[given]) @ gain.T
    out[np.ix_(~first, free)] = spec.mean2[free] + shift + z[~first] @ chol.T
    return out
