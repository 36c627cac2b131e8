"""Reference values for the benchmark models.

Three independent routes are offered:

* closed-form Gaussian-mixture moments for models whose decomposition is
  known in closed form (bilinear and additive test models);
* an exact decomposition of a two-input function under a mixture law,
  computed by running the Gauss-Seidel sweeps with quadrature conditional
  expectations on a fine tensor grid (no smoothing, no sampling);
* Monte Carlo: pick-freeze estimates of classical first-order indices with
  conditional redraws, and large-sample runs of the estimation pipeline.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .distributions.mixture import (
    GaussianMixtureSpec,
    mixture_moments,
    mixture_pdf,
    sample_conditional,
    sample_mixture,
)
from .distributions.pairs import PairStructure
from .exceptions import SpecError
from .hofd import GaussSeidelConfig, ipdv_decompose
from .indices import FirstOrder, SensitivityReport, block_name, generalized_indices, variable_name


@dataclass(frozen=True)
class MixtureMoments:
    """Second- and fourth-order moments of a centered two-input mixture."""

    var1: float
    var2: float
    cov: float
    fourth: float  # E[X1^2 X2^2]

    @property
    def var_product(self) -> float:
        return self.fourth - self.cov**2


def mixture_moments_2d(spec: GaussianMixtureSpec) -> MixtureMoments:
    """Moments of a centered 2-D mixture.

    Each component is a centered Gaussian, for which
    ``E[X^2 Y^2] = V_x V_y + 2 Cov^2``; the mixture moment is the weighted sum.
    """
    if spec.dim != 2 or not spec.centered or np.any(spec.mean1 != 0):
        raise SpecError("closed-form moments need a centered two-input mixture")
    a = spec.alpha
    s1, s2 = spec.cov1
    o = spec.cov2
    fourth = a * (s1 * s2) + (1 - a) * (o[0, 0] * o[1, 1] + 2 * o[0, 1] ** 2)
    _, cov = mixture_moments(spec)
    return MixtureMoments(float(cov[0, 0]), float(cov[1, 1]), float(cov[0, 1]), float(fourth))


def _pair_report(names, pair_name, v1, v2, c12, v12, var_y, nested=0.0, between=0.0):
    first = {
        names[0]: FirstOrder((v1 + c12) / var_y, v1 / var_y, c12 / var_y),
        names[1]: FirstOrder((v2 + c12) / var_y, v2 / var_y, c12 / var_y),
    }
    return SensitivityReport(first, {pair_name: v12 / var_y}, var_y, nested, between)


def bilinear_model_indices(spec: GaussianMixtureSpec) -> SensitivityReport:
    """Indices of ``Y = X1 + X2 + X1 X2`` from its stated components.

    Uses ``eta1 = X1``, ``eta2 = X2`` and ``eta12 = X1 X2 - E[X1 X2]``. Odd
    moments vanish for a centered mixture, so the interaction is uncorrelated
    with both inputs and ``V(Y) = V1 + V2 + 2 Cov + V(X1 X2)``.
    """
    m = mixture_moments_2d(spec)
    var_y = m.var1 + m.var2 + 2 * m.cov + m.var_product
    return _pair_report(("X1", "X2"), "X1X2", m.var1, m.var2, m.cov, m.var_product, var_y)


def linear4_model_indices(spec1: GaussianMixtureSpec, spec2: GaussianMixtureSpec, coeffs) -> SensitivityReport:
    """Indices of ``Y = c1 X1 + c2 X2 + c3 X3 + c4 X4`` with pairs (X1, X3) and (X2, X4).

    ``spec1`` is the law of (X1, X3) and ``spec2`` that of (X2, X4). The model
    is additive, so every interaction index is exactly zero.
    """
    c = np.asarray(coeffs, dtype=float)
    if c.shape != (4,):
        raise ValueError("need four coefficients")
    blocks = (((0, 2), spec1), ((1, 3), spec2))
    parts = []
    for cols, spec in blocks:
        m = mixture_moments_2d(spec)
        a, b = c[cols[0]], c[cols[1]]
        parts.append((cols, a * a * m.var1, b * b * m.var2, a * b * m.cov))
    var_y = sum(v1 + v2 + 2 * cv for _, v1, v2, cv in parts)
    if not var_y > 0:
        raise ValueError("all coefficients are zero")
    first, second = {}, {}
    for cols, v1, v2, cv in parts:
        first[variable_name(cols[0])] = FirstOrder((v1 + cv) / var_y, v1 / var_y, cv / var_y)
        first[variable_name(cols[1])] = FirstOrder((v2 + cv) / var_y, v2 / var_y, cv / var_y)
        second[block_name(cols)] = 0.0
    first = {k: first[k] for k in sorted(first, key=lambda s: int(s[1:]))}
    return SensitivityReport(first, second, var_y)


@dataclass
class GridLaw:
    """A two-input law discretized on a tensor grid; ``weights`` sums to one."""

    x1: np.ndarray
    x2: np.ndarray
    weights: np.ndarray

    @classmethod
    def from_mixture(cls, spec: GaussianMixtureSpec, nodes: int = 401, width: float = 9.0) -> "GridLaw":
        if spec.dim != 2:
            raise SpecError("grid laws are two-dimensional")
        mean, cov = mixture_moments(spec)
        sd = np.sqrt(np.maximum(np.maximum(spec.cov1, np.diag(spec.cov2)), np.diag(cov)))
        x1 = np.linspace(mean[0] - width * sd[0], mean[0] + width * sd[0], nodes)
        x2 = np.linspace(mean[1] - width * sd[1], mean[1] + width * sd[1], nodes)
        g1, g2 = np.meshgrid(x1, x2, indexing="ij")
        w = mixture_pdf(spec, np.column_stack([g1.ravel(), g2.ravel()])).reshape(g1.shape)
        return cls(x1, x2, w / w.sum())

    def mesh(self):
        return np.meshgrid(self.x1, self.x2, indexing="ij")

    def expect(self, f) -> float:
        return float(np.sum(self.weights * f))

    def cond_first(self, f) -> np.ndarray:
        """``E(f | X1)`` as a function on the grid (constant along axis 1)."""
        num = np.sum(self.weights * f, axis=1) / np.sum(self.weights, axis=1)
        return np.broadcast_to(num[:, None], f.shape)

    def cond_second(self, f) -> np.ndarray:
        num = np.sum(self.weights * f, axis=0) / np.sum(self.weights, axis=0)
        return np.broadcast_to(num[None, :], f.shape)


@dataclass
class GridDecomposition:
    eta0: float
    eta1: np.ndarray
    eta2: np.ndarray
    eta12: np.ndarray
    law: GridLaw
    iterations: int

    def moments(self):
        law = self.law

        def cov(a, b):
            return law.expect((a - law.expect(a)) * (b - law.expect(b)))

        return {
            "v1": cov(self.eta1, self.eta1),
            "v2": cov(self.eta2, self.eta2),
            "c12": cov(self.eta1, self.eta2),
            "v12": cov(self.eta12, self.eta12),
            "c1_12": cov(self.eta1, self.eta12),
            "c2_12": cov(self.eta2, self.eta12),
        }


def grid_hofd(func, law: GridLaw, tol: float = 1e-13, max_iter: int = 10_000) -> GridDecomposition:
    """Exact decomposition of ``func(x1, x2)`` under a discretized law.

    Runs the same Gauss-Seidel fixed point as the estimator but with exact
    conditional expectations of the grid law, to machine tolerance.
    """
    g1, g2 = law.mesh()
    y = np.asarray(func(g1, g2), dtype=float)
    eta0 = law.expect(y)
    d1 = np.zeros_like(y)
    d2 = np.zeros_like(y)
    scale = max(np.sqrt(law.expect((y - eta0) ** 2)), 1e-300)
    for it in range(1, max_iter + 1):
        r1 = y - d2
        n1 = law.cond_first(r1) - law.expect(r1)
        r2 = y - n1
        n2 = law.cond_second(r2) - law.expect(r2)
        change = np.sqrt(law.expect((n1 - d1) ** 2 + (n2 - d2) ** 2))
        d1, d2 = np.array(n1), np.array(n2)
        if change <= tol * scale:
            break
    else:
        raise RuntimeError("grid Gauss-Seidel did not converge")
    eta12 = y - eta0 - d1 - d2
    return GridDecomposition(eta0, d1, d2, eta12, law, it)


def grid_pair_indices(func, spec: GaussianMixtureSpec, total_variance=None, names=("X1", "X2"), nodes=401):
    """Population indices of a two-input function from the exact grid decomposition.

    ``total_variance`` defaults to the variance of ``func`` itself; pass the
    output variance when the function is one block of a larger model.
    """
    law = GridLaw.from_mixture(spec, nodes)
    dec = grid_hofd(func, law)
    mo = dec.moments()
    var_y = mo["v1"] + mo["v2"] + mo["v12"] + 2 * (mo["c12"] + mo["c1_12"] + mo["c2_12"])
    nested = 2 * (mo["c1_12"] + mo["c2_12"])
    if total_variance is None:
        return _pair_report(names, "".join(names), mo["v1"], mo["v2"], mo["c12"], mo["v12"], var_y, nested / var_y)
    return _pair_report(
        names, "".join(names), mo["v1"], mo["v2"], mo["c12"], mo["v12"], total_variance,
        nested / total_variance, (total_variance - var_y) / total_variance,
    )


def _sin_sq_mean(var: float) -> float:
    """``E[sin^2 Z]`` for ``Z ~ N(0, var)``."""
    return 0.5 * (1.0 - np.exp(-2.0 * var))


def ishigami(x, a: float, b: float) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    return np.sin(x[:, 0]) + a * np.sin(x[:, 1]) ** 2 + b * x[:, 2] ** 3 * np.sin(x[:, 0])


def ishigami_indices(spec: GaussianMixtureSpec, a: float, b: float, nodes: int = 401) -> SensitivityReport:
    """Population indices of the Ishigami function with blocks (X1, X2) and (X3).

    ``spec`` is the centered three-input mixture with X3 uncorrelated with
    the pair inside each component. Given (X1, X2), X3 is a mixture of
    centered Gaussians, so ``E(Y | X1, X2) = sin X1 + a sin^2 X2`` and the
    X3 term is uncorrelated with it. The X3 index is the classical one,
    ``V(E(Y | X3)) / V(Y)``, computed by one-dimensional quadrature.
    """
    if spec.dim != 3 or not spec.centered or np.any(spec.mean1 != 0):
        raise SpecError("need a centered three-input mixture")
    if np.any(spec.cov2[2, :2] != 0):
        raise SpecError("X3 must be uncorrelated with (X1, X2) in the dependent component")
    al = spec.alpha
    pair_spec = spec.marginal([0, 1])

    def g(x1, x2):
        return np.sin(x1) + a * np.sin(x2) ** 2

    # E[X3^6 sin^2 X1]: X3 is independent of X1 within each component
    e6 = al * 15 * spec.cov1[2] ** 3 * _sin_sq_mean(spec.cov1[0]) + (1 - al) * 15 * spec.cov2[2, 2] ** 3 * _sin_sq_mean(
        spec.cov2[0, 0]
    )
    law = GridLaw.from_mixture(pair_spec, nodes)
    g1, g2 = law.mesh()
    gv = g(g1, g2)
    var_g = law.expect((gv - law.expect(gv)) ** 2)
    var_y = var_g + b * b * e6

    # E(g | X3) = sum_c P(c | X3) E_c[g], with E_c[sin X1] = 0
    comp_means = [a * _sin_sq_mean(spec.cov1[1]), a * _sin_sq_mean(spec.cov2[1, 1])]
    s3 = np.sqrt([spec.cov1[2], spec.cov2[2, 2]])
    t = np.linspace(-12 * s3.max(), 12 * s3.max(), 20001)
    dens = np.array([al, 1 - al])[:, None] * np.exp(-0.5 * (t / s3[:, None]) ** 2) / (s3[:, None] * np.sqrt(2 * np.pi))
    p3 = dens.sum(axis=0)
    cond = (dens * np.array(comp_means)[:, None]).sum(axis=0) / p3
    w = p3 / p3.sum()
    mu = np.sum(w * cond)
    v3 = float(np.sum(w * (cond - mu) ** 2))

    pair = grid_pair_indices(g, pair_spec, total_variance=var_y, nodes=nodes)
    first = dict(pair.first_order)
    first["X3"] = FirstOrder(v3 / var_y, v3 / var_y, 0.0)
    between = 1.0 - (pair.index_sum() + pair.nested + v3 / var_y)
    return SensitivityReport(first, dict(pair.second_order), var_y, pair.nested, between)


def pick_freeze_first_order(model, spec: GaussianMixtureSpec, subsets, n_mc: int, seed) -> dict:
    """Classical indices ``V(E(Y | X_u)) / V(Y)`` by pick-freeze with conditional redraws.

    For each draw the coordinates in ``u`` are frozen and the others are
    redrawn from their conditional law, so ``Cov(Y, Y') = V(E(Y | X_u))``
    even for dependent inputs.
    """
    rng = np.random.default_rng(seed)
    x = sample_mixture(spec, n_mc, rng)
    y = model(x)
    var_y = float(np.var(y))
    out = {}
    for u in subsets:
        u = tuple(sorted(int(c) for c in u))
        x_new = sample_conditional(spec, x[:, list(u)], u, rng)
        y_new = model(x_new)
        out[block_name(u)] = float(np.mean((y - y.mean()) * (y_new - y_new.mean()))) / var_y
    return out


@dataclass
class BruteForceResult:
    mean: dict
    std: dict
    total_variance_mc: float
    reps: int


def brute_force_indices(
    model, spec: GaussianMixtureSpec, pairs: PairStructure, n_mc: int = 100_000, seed=0,
    n_pipeline: int = 5000, reps: int = 3, cfg: GaussSeidelConfig | None = None,
) -> BruteForceResult:
    """Indices from large-sample runs of the estimation pipeline.

    The pipeline is repeated ``reps`` times at ``n_pipeline`` points and the
    mean and spread of every index are returned; ``n_mc`` plain Monte Carlo
    draws give the output variance. Meant for magnitude and trend checks on
    models without a closed form.
    """
    if n_mc < 100_000:
        raise ValueError("brute-force oracle needs at least 1e5 Monte Carlo draws")
    root = np.random.SeedSequence(seed)
    mc_seed, *rep_seeds = root.spawn(reps + 1)
    y_mc = model(sample_mixture(spec, n_mc, mc_seed))
    var_mc = float(np.var(y_mc))
    runs = []
    for s in rep_seeds:
        x = sample_mixture(spec, n_pipeline, s)
        y = model(x)
        tables, _ = ipdv_decompose(x, y, pairs, cfg)
        runs.append(generalized_indices(tables, y).flat())
    keys = list(runs[0])
    mean = {k: float(np.mean([r[k] for r in runs])) for k in keys}
    std = {k: float(np.std([r[k] for r in runs], ddof=1)) if reps > 1 else 0.0 for k in keys}
    return BruteForceResult(mean, std, var_mc, reps)
