"""Hierarchically orthogonal decomposition of a model output.

For one dependent pair the first-order components solve the block system

    [ I    P1 ] [eta1]   [E(Y|X1) - E(Y)]
    [ P2   I  ] [eta2] = [E(Y|X2) - E(Y)]

with ``Pi(U) = E(U|Xi) - E(U)``. It is solved by Gauss-Seidel sweeps in
which every conditional expectation is a leave-one-out local-polynomial fit.
The interaction is what is left of the output once the constant and
first-order terms are removed.

With several mutually independent blocks of inputs, the output is first
split over blocks with a grouped Sobol decomposition
(``eta_i = E(Y | X^(i)) - E(Y)``) and each block component is then
decomposed as above. Under block independence these components are also the
projection of the output on functions additive over blocks, so they can be
estimated by backfitting, which removes the other blocks' signal before
each smoothing pass.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field

import numpy as np

from .distributions.pairs import PairStructure
from .smoother import LocalPolynomialSmoother, SmootherConfig


@dataclass(frozen=True)
class GaussSeidelConfig:
    """Stopping rule of the Gauss-Seidel sweeps.

    ``epsilon`` bounds the root-mean-square change of the stacked
    ``(eta1, eta2)`` vector between sweeps. ``None`` means ``1e-4 * std(target)``,
    floored at a few ulps of the target scale so a constant target stops.

    With ``orthogonalize`` the interaction left by subtraction is regressed on
    the two main effects and the fitted part is folded back into them, so the
    sample components are exactly hierarchically orthogonal and still
    reconstruct the target.
    """

    epsilon: float | None = None
    max_iter: int = 100
    smoother: SmootherConfig = field(default_factory=SmootherConfig)
    orthogonalize: bool = True
    stage_one: str = "backfit"

    def __post_init__(self):
        if self.stage_one not in ("backfit", "direct"):
            raise ValueError(f"stage_one must be 'backfit' or 'direct', got {self.stage_one!r}")
        if self.epsilon is not None and not self.epsilon > 0:
            raise ValueError("epsilon must be positive")
        if int(self.max_iter) < 1:
            raise ValueError("max_iter must be at least 1")


@dataclass
class ComponentTable:
    """Decomposition components of one block, evaluated at the sample points.

    For a pair, ``eta0 + eta1 + eta2 + eta12`` reproduces the block target.
    A singleton block carries only ``eta1``; ``eta2`` and ``eta12`` are zero.
    """

    eta0: float
    eta1: np.ndarray
    eta2: np.ndarray
    eta12: np.ndarray
    pair_id: int = 0
    columns: tuple = ()

    @property
    def is_singleton(self) -> bool:
        return len(self.columns) == 1

    def total(self) -> np.ndarray:
        return self.eta0 + self.eta1 + self.eta2 + self.eta12

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write(f"# eta0={self.eta0!r},pair_id={self.pair_id},columns={'|'.join(map(str, self.columns))}\n")
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["row_index", "eta1", "eta2", "eta12"])
        for k, row in enumerate(zip(self.eta1, self.eta2, self.eta12)):
            writer.writerow([k, *(repr(float(v)) for v in row)])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str) -> "ComponentTable":
        lines = text.splitlines()
        if not lines or not lines[0].startswith("# "):
            raise ValueError("component table CSV must start with a '# eta0=...' header record")
        meta = dict(item.split("=", 1) for item in lines[0][2:].split(","))
        rows = list(csv.DictReader(lines[1:]))
        cols = tuple(int(c) for c in meta.get("columns", "").split("|") if c != "")

        def column(name):
            return np.array([float(r[name]) for r in rows])

        return cls(float(meta["eta0"]), column("eta1"), column("eta2"), column("eta12"), int(meta["pair_id"]), cols)


@dataclass
class ConvergenceReport:
    iterations: int
    final_change: float
    converged: bool
    per_iteration_changes: list
    epsilon: float = float("nan")


@dataclass
class PairSmoothers:
    """Smoothers on each coordinate of a pair; built once and reused by every sweep."""

    first: LocalPolynomialSmoother
    second: LocalPolynomialSmoother

    @classmethod
    def build(cls, x1, x2, cfg: SmootherConfig) -> "PairSmoothers":
        return cls(LocalPolynomialSmoother(x1, cfg), LocalPolynomialSmoother(x2, cfg))


def _default_epsilon(y) -> float:
    return max(1e-4 * float(np.std(y)), 1e-12 * float(np.max(np.abs(y), initial=0.0)), 1e-300)


def gauss_seidel(target, smoothers: PairSmoothers, cfg: GaussSeidelConfig):
    """Run the sweeps on prepared smoothers; returns ``(eta1, eta2, report)`` before re-centering."""
    y = np.asarray(target, dtype=float)
    n = y.size
    eps = cfg.epsilon if cfg.epsilon is not None else _default_epsilon(y)
    d1 = np.zeros(n)
    d2 = np.zeros(n)
    changes = []
    converged = False
    for _ in range(int(cfg.max_iter)):
        r1 = y - d2
        new1 = smoothers.first.apply(r1) - r1.mean()
        r2 = y - new1
        new2 = smoothers.second.apply(r2) - r2.mean()
        change = float(np.sqrt((np.sum((new1 - d1) ** 2) + np.sum((new2 - d2) ** 2)) / (2 * n)))
        changes.append(change)
        d1, d2 = new1, new2
        if change <= eps:
            converged = True
            break
    report = ConvergenceReport(len(changes), changes[-1], converged, changes, eps)
    return d1, d2, report


def _finish_pair(y, d1, d2, pair_id, columns, orthogonalize=False) -> ComponentTable:
    eta1 = d1 - d1.mean()
    eta2 = d2 - d2.mean()
    eta0 = float(np.mean(y))
    eta12 = y - eta0 - eta1 - eta2
    if orthogonalize:
        coef, *_ = np.linalg.lstsq(np.column_stack([eta1, eta2]), eta12, rcond=None)
        eta1 = eta1 * (1.0 + coef[0])
        eta2 = eta2 * (1.0 + coef[1])
        eta12 = y - eta0 - eta1 - eta2
    return ComponentTable(eta0, eta1, eta2, eta12, pair_id, tuple(columns))


def hofd_bivariate(x1, x2, y, cfg: GaussSeidelConfig | None = None, *, smoothers=None, pair_id=0, columns=(0, 1)):
    """Decompose ``y`` over one dependent pair ``(x1, x2)``.

    Returns ``(ComponentTable, ConvergenceReport)``. Non-convergence is
    reported, not raised. ``smoothers`` may carry prebuilt
    :class:`PairSmoothers` for the same columns.
    """
    cfg = cfg or GaussSeidelConfig()
    y = np.asarray(y, dtype=float)
    if y.size < 50:
        raise ValueError(f"the pair decomposition needs at least 50 observations, got {y.size}")
    if smoothers is None:
        smoothers = PairSmoothers.build(x1, x2, cfg.smoother)
    d1, d2, report = gauss_seidel(y, smoothers, cfg)
    return _finish_pair(y, d1, d2, pair_id, columns, cfg.orthogonalize), report


class SmootherCache:
    """Memo of smoothers keyed by conditioning columns, for one input sample."""

    def __init__(self, x, cfg: SmootherConfig):
        self.x = np.asarray(x, dtype=float)
        self.cfg = cfg
        self._store = {}

    def get(self, cols) -> LocalPolynomialSmoother:
        cols = tuple(int(c) for c in cols)
        if cols not in self._store:
            self._store[cols] = LocalPolynomialSmoother(self.x[:, list(cols)], self.cfg)
        return self._store[cols]


def block_components(x, y, pairs: PairStructure, cache: SmootherCache, cfg: GaussSeidelConfig | None = None):
    """Grouped Sobol first stage: ``E(Y | X^(i)) - E(Y)`` for each block.

    Returns ``(components, report)``; ``report`` is None for the direct
    estimate and describes the sweeps for backfitting. A block that spans
    every input has ``E(Y | X) = Y`` exactly, so no smoothing is done for it.
    """
    cfg = cfg or GaussSeidelConfig()
    y = np.asarray(y, dtype=float)
    mean = float(y.mean())
    if len(pairs.blocks) == 1:
        return [y - mean], None
    if cfg.stage_one == "direct":
        return [cache.get(block).apply(y) - mean for block in pairs.blocks], None
    eps = cfg.epsilon if cfg.epsilon is not None else _default_epsilon(y)
    comps = [np.zeros_like(y) for _ in pairs.blocks]
    changes = []
    converged = False
    for _ in range(int(cfg.max_iter)):
        sq = 0.0
        for i, block in enumerate(pairs.blocks):
            partial = y - mean - (sum(comps) - comps[i])
            new = cache.get(block).apply(partial)
            new -= new.mean()
            sq += float(np.sum((new - comps[i]) ** 2))
            comps[i] = new
        changes.append(float(np.sqrt(sq / (len(comps) * y.size))))
        if changes[-1] <= eps:
            converged = True
            break
    return comps, ConvergenceReport(len(changes), changes[-1], converged, changes, eps)


def ipdv_decompose(x, y, pairs: PairStructure, cfg: GaussSeidelConfig | None = None, cache=None):
    """Two-stage decomposition for independent blocks of dependent pairs.

    Parameters
    ----------
    x : ndarray, shape (n, p)
    y : ndarray, shape (n,)
    pairs : PairStructure
    cfg : GaussSeidelConfig

    Returns
    -------
    tables : list of ComponentTable, one per block in ``pairs.blocks`` order
    reports : list of ConvergenceReport or None, one per block. A singleton
        carries the first-stage report (None when no sweeps were run); a pair
        is flagged non-convergent when either stage failed to converge.
    """
    cfg = cfg or GaussSeidelConfig()
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.ndim != 2 or x.shape[1] != pairs.dim:
        raise ValueError(f"input has {x.shape[-1]} columns but the pair structure covers {pairs.dim}")
    if x.shape[0] != y.size:
        raise ValueError("row count of inputs and outputs differ")
    cache = cache or SmootherCache(x, cfg.smoother)
    targets, stage_report = block_components(x, y, pairs, cache, cfg)
    tables, reports = [], []
    for i, (block, target) in enumerate(zip(pairs.blocks, targets)):
        if len(block) == 1:
            zeros = np.zeros_like(target)
            centered = target - target.mean()
            tables.append(ComponentTable(float(target.mean()), centered, zeros, zeros.copy(), i, block))
            reports.append(stage_report)
            continue
        smoothers = PairSmoothers(cache.get((block[0],)), cache.get((block[1],)))
        table, report = hofd_bivariate(
            x[:, block[0]], x[:, block[1]], target, cfg, smoothers=smoothers, pair_id=i, columns=block
        )
        if stage_report is not None and not stage_report.converged:
            report.converged = False
        tables.append(table)
        reports.append(report)
    return tables, reports


@dataclass
class ConstraintDiagnostics:
    corr_eta1_eta12: float
    corr_eta2_eta12: float
    corr_eta1_eta2_allowed: float
    cond_mean_sup: tuple
    stone_lhs: float
    stone_rhs: float
    delta: float

    @property
    def stone_holds(self) -> bool:
        return self.stone_lhs >= self.stone_rhs


def _corr(a, b) -> float:
    sa, sb = np.std(a), np.std(b)
    if sa == 0 or sb == 0:
        return 0.0
    return float(np.mean((a - a.mean()) * (b - b.mean())) / (sa * sb))


def constraint_diagnostics(
    table: ComponentTable, x1, x2, m_bound: float, cfg: SmootherConfig | None = None, smoothers=None
) -> ConstraintDiagnostics:
    """Empirical checks of hierarchical orthogonality and of the norm inequality.

    Orthogonality is only required between nested components, so
    ``corr(eta1, eta12)`` and ``corr(eta2, eta12)`` should be near zero while
    ``corr(eta1, eta2)`` is free. ``cond_mean_sup`` holds the sup-norms of the
    smoothed ``E(eta12 | X1)`` and ``E(eta12 | X2)``. The inequality checked is
    ``E[(eta1 + eta2 + eta12)^2] >= delta^3 (E eta1^2 + E eta2^2 + E eta12^2)``
    with ``delta = 1 - sqrt(1 - M)``; the exponent is one less than the size of
    the hierarchical collection {(), (1,), (2,), (1, 2)}, whose constant member is
    taken as zero.
    """
    if not 0 < m_bound <= 1:
        raise ValueError("m_bound must lie in (0, 1]")
    cfg = cfg or SmootherConfig()
    if smoothers is None:
        smoothers = PairSmoothers.build(x1, x2, cfg)
    e1, e2, e12 = table.eta1, table.eta2, table.eta12
    sup1 = float(np.max(np.abs(smoothers.first.apply(e12))))
    sup2 = float(np.max(np.abs(smoothers.second.apply(e12))))
    delta = 1.0 - np.sqrt(1.0 - m_bound)
    lhs = float(np.mean((e1 + e2 + e12) ** 2))
    rhs = float(delta**3 * (np.mean(e1**2) + np.mean(e2**2) + np.mean(e12**2)))
    return ConstraintDiagnostics(
        corr_eta1_eta12=_corr(e1, e12),
        corr_eta2_eta12=_corr(e2, e12),
        corr_eta1_eta2_allowed=_corr(e1, e2),
        cond_mean_sup=(sup1, sup2),
        stone_lhs=lhs,
        stone_rhs=rhs,
        delta=float(delta),
    )
