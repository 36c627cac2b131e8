"""Leave-one-out local-polynomial estimates of conditional expectations.

At a query point ``x`` the local fit solves the weighted least-squares
problem with design rows ``(1, X_i - x, ..., (X_i - x)^q)`` and Gaussian
product-kernel weights. The fitted intercept estimates ``E(Y | X = x)``.

For the leave-one-out value at observation ``k`` the normal matrix
``S_n(X_k)`` is formed once over all observations and observation ``k`` is
removed with a Sherman-Morrison rank-one downdate. Since ``X_k - X_k = 0``,
the removed row is ``sqrt(w_kk) * e_1`` and the intercept row of the
downdated inverse is ``e_1' S_n^-1 / (1 - w_kk [S_n^-1]_00)``.

Because the weights depend on the conditioning columns only, the estimator
is a fixed linear map ``y -> L y``. :class:`LocalPolynomialSmoother` builds
``L`` once and reuses it, which the Gauss-Seidel sweeps rely on.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .exceptions import DegenerateError, SmootherError

SINGULAR_TOL = 1e-10
_DENSE_LIMIT = 6000
_CHUNK = 256


@dataclass(frozen=True)
class SmootherConfig:
    """Settings of the local-polynomial smoother.

    ``degree`` is the total polynomial degree ``q``. ``ridge`` adds
    ``ridge * trace(S_n) / m`` to the non-intercept diagonal entries of the
    ``m x m`` normal matrix; the intercept is left unpenalized so constants
    are reproduced exactly.
    ``max_row_norm`` caps the absolute row sum of the smoother matrix: a query
    point whose local-polynomial row exceeds it (an isolated tail point where
    the leave-one-out fit extrapolates) falls back to the local-constant row.
    ``None`` disables the guard.
    """

    degree: int = 1
    bandwidth_rule: str = "silverman"
    fixed_h: tuple | None = None
    kernel: str = "gaussian"
    ridge: float = 1e-8
    max_row_norm: float | None = 2.0

    def __post_init__(self):
        if not 0 <= int(self.degree) <= 3:
            raise ValueError(f"degree must be in 0..3, got {self.degree}")
        if self.bandwidth_rule not in ("silverman", "fixed"):
            raise ValueError(f"unknown bandwidth rule {self.bandwidth_rule!r}")
        if (self.bandwidth_rule == "fixed") != (self.fixed_h is not None):
            raise ValueError("fixed_h is required exactly when bandwidth_rule='fixed'")
        if self.fixed_h is not None:
            h = tuple(float(v) for v in np.atleast_1d(self.fixed_h))
            if any(not v > 0 for v in h):
                raise ValueError("fixed bandwidths must be positive")
            object.__setattr__(self, "fixed_h", h)
        if self.kernel != "gaussian":
            raise ValueError(f"unsupported kernel {self.kernel!r}")
        if self.ridge < 0:
            raise ValueError("ridge must be nonnegative")
        if self.max_row_norm is not None and not self.max_row_norm >= 1:
            raise ValueError("max_row_norm must be at least 1")


def bandwidth(x_col) -> float:
    """Silverman's rule ``1.06 * s * n^(-1/5)`` with ``s = min(std, IQR / 1.349)``.

    A zero IQR with positive spread falls back to the standard deviation.
    """
    x = np.asarray(x_col, dtype=float).ravel()
    n = x.size
    if n < 2:
        raise DegenerateError("bandwidth needs at least two observations")
    sd = float(np.std(x, ddof=1))
    if not sd > 0:
        raise DegenerateError("degenerate conditioning variable: zero sample variance")
    q75, q25 = np.percentile(x, [75, 25])
    iqr = (q75 - q25) / 1.349
    scale = min(sd, iqr) if iqr > 0 else sd
    return 1.06 * scale * n ** (-0.2)


def basis_exponents(d: int, degree: int) -> list:
    """Monomial exponents of total degree <= ``degree`` in ``d`` variables, constant first."""
    out = [e for e in itertools.product(range(degree + 1), repeat=d) if sum(e) <= degree]
    return sorted(out, key=lambda e: (sum(e), tuple(-v for v in e)))


def _resolve_bandwidths(x, cfg) -> np.ndarray:
    d = x.shape[1]
    if cfg.bandwidth_rule == "fixed":
        h = np.asarray(cfg.fixed_h, dtype=float)
        if h.size == 1:
            h = np.repeat(h, d)
        if h.size != d:
            raise ValueError(f"fixed_h needs {d} entries")
        return h
    return np.array([bandwidth(x[:, j]) for j in range(d)])


def _local_design(x, rows, h, exponents):
    """Kernel weights ``(len(rows), n)`` and centred basis ``(len(rows), n, m)``.

    Basis columns use ``(X_i - x) / h``; the rescaling leaves the fitted
    intercept unchanged and keeps the normal matrix well scaled.
    """
    z = (x[None, :, :] - x[rows, None, :]) / h
    w = np.exp(-0.5 * np.sum(z**2, axis=2))
    basis = np.stack([np.prod(z ** np.array(e), axis=2) for e in exponents], axis=2)
    return w, basis


def _ridge_pattern(m) -> np.ndarray:
    pattern = np.eye(m)
    pattern[0, 0] = 0.0
    return pattern


def _as_columns(x_cond) -> np.ndarray:
    x = np.asarray(x_cond, dtype=float)
    x = x[:, None] if x.ndim == 1 else x
    if x.ndim != 2 or x.shape[1] not in (1, 2):
        raise ValueError("conditioning data must have one or two columns")
    if not np.all(np.isfinite(x)):
        raise ValueError("conditioning data must be finite")
    return x


def _apply_guard(out, w, rows, cfg, n_basis) -> np.ndarray:
    """Swap in local-constant rows where the row's absolute sum exceeds the cap."""
    wild = np.zeros(len(rows), dtype=bool)
    if cfg.max_row_norm is None or n_basis == 1:
        return wild
    wild = np.abs(out).sum(axis=1) > cfg.max_row_norm
    if np.any(wild):
        flat = w[wild].copy()
        flat[np.arange(flat.shape[0]), rows[wild]] = 0.0
        out[wild] = flat / flat.sum(axis=1, keepdims=True)
    return wild


class LocalPolynomialSmoother:
    """Leave-one-out smoother for fixed conditioning columns.

    Parameters
    ----------
    x_cond : array_like, shape (n,) or (n, d)
        Conditioning observations, ``d`` in {1, 2}.
    cfg : SmootherConfig
    """

    def __init__(self, x_cond, cfg: SmootherConfig | None = None):
        self.cfg = cfg or SmootherConfig()
        self.x = _as_columns(x_cond)
        self.n, self.d = self.x.shape
        self.exponents = basis_exponents(self.d, self.cfg.degree)
        self.n_basis = len(self.exponents)
        if self.n < 10 * self.n_basis:
            raise ValueError(
                f"need at least {10 * self.n_basis} observations for "
                f"{self.n_basis} basis terms, got {self.n}"
            )
        self.h = _resolve_bandwidths(self.x, self.cfg)
        self._hat = None
        self._guarded = None
        if self.n <= _DENSE_LIMIT:
            parts = [self._build_rows(rows) for rows in self._chunks()]
            self._hat = np.vstack([p[0] for p in parts])
            self._guarded = np.concatenate([p[1] for p in parts])

    @property
    def guarded(self) -> np.ndarray:
        """Mask of query points that fell back to the local-constant row."""
        if self._guarded is None:
            self._guarded = np.concatenate([self._build_rows(rows)[1] for rows in self._chunks()])
        return self._guarded

    def _build_rows(self, rows):
        """Rows ``rows`` of the leave-one-out hat matrix and their guard mask."""
        w, basis = _local_design(self.x, rows, self.h, self.exponents)
        m = self.n_basis
        s = np.einsum("ki,kia,kib->kab", w, basis, basis)
        if self.cfg.ridge > 0:
            tr = np.trace(s, axis1=1, axis2=2)
            s = s + (self.cfg.ridge * tr / m)[:, None, None] * _ridge_pattern(m)
        local = np.arange(rows.size)
        w_self = w[local, rows]
        with np.errstate(all="ignore"):
            s_inv = np.linalg.inv(s)
            denom = 1.0 - w_self * s_inv[:, 0, 0]
            coef = s_inv[:, 0, :] / denom[:, None]
        bad = ~(np.abs(denom) >= SINGULAR_TOL) | ~np.all(np.isfinite(coef), axis=1)
        for j in np.flatnonzero(bad):
            coef[j] = self._direct_intercept_row(s[j], w_self[j], rows[j])
        out = w * np.einsum("kia,ka->ki", basis, coef)
        out[local, rows] = 0.0
        wild = _apply_guard(out, w, rows, self.cfg, self.n_basis)
        return out, wild

    def _direct_intercept_row(self, s_full, w_self, k):
        s = s_full.copy()
        s[0, 0] -= w_self
        try:
            row = np.linalg.solve(s.T, np.eye(self.n_basis)[0])
        except np.linalg.LinAlgError:
            row = None
        if row is None or not np.all(np.isfinite(row)):
            raise SmootherError(
                f"normal matrix singular at query point {k} even after ridge", index=int(k)
            )
        return row

    def _chunks(self):
        for i in range(0, self.n, _CHUNK):
            yield np.arange(i, min(i + _CHUNK, self.n))

    def hat_matrix(self) -> np.ndarray:
        """The ``n x n`` leave-one-out smoother matrix (zero diagonal)."""
        if self._hat is not None:
            return self._hat
        return np.vstack([self._build_rows(rows)[0] for rows in self._chunks()])

    def apply(self, y) -> np.ndarray:
        """Leave-one-out fitted values ``m_hat(X_k)`` for ``k = 1..n``."""
        y = np.asarray(y, dtype=float)
        if y.shape[0] != self.n:
            raise ValueError(f"expected {self.n} responses, got {y.shape[0]}")
        if self._hat is not None:
            return self._hat @ y
        return np.concatenate([self._build_rows(rows)[0] @ y for rows in self._chunks()])


def loo_conditional_mean(x_cond, y, cfg: SmootherConfig | None = None) -> np.ndarray:
    """Leave-one-out local-polynomial estimate of ``E(Y | X = X_k)`` at every observation."""
    return LocalPolynomialSmoother(x_cond, cfg).apply(y)


def loo_direct(x_cond, y, cfg: SmootherConfig | None = None) -> np.ndarray:
    """Reference leave-one-out fit that re-solves the system with row ``k`` deleted.

    Slow; kept as the oracle for the downdated path. The ridge term is sized
    from the full-sample normal matrix and the tail guard is applied, as in
    the fast path.
    """
    cfg = cfg or SmootherConfig()
    x = _as_columns(x_cond)
    n, d = x.shape
    exponents = basis_exponents(d, cfg.degree)
    m = len(exponents)
    h = _resolve_bandwidths(x, cfg)
    y = np.asarray(y, dtype=float)
    out = np.empty(n)
    for k in range(n):
        w, basis = _local_design(x, np.array([k]), h, exponents)
        ridge = cfg.ridge * np.einsum("i,ia,ia->", w[0], basis[0], basis[0]) / m
        keep = np.arange(n) != k
        wk, bk = w[0, keep], basis[0, keep]
        s = bk.T @ (wk[:, None] * bk) + ridge * _ridge_pattern(m)
        row = np.zeros((1, n))
        row[0, keep] = wk * (bk @ np.linalg.solve(s, np.eye(m)[0]))
        _apply_guard(row, w, np.array([k]), cfg, m)
        out[k] = row[0] @ y
    return out
