"""Sensitivity indices built from decomposition components.

All moments use the biased (denominator ``n``) estimator, which makes the
variance identity behind the sum-to-one property hold exactly on a sample.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field

import numpy as np

from .exceptions import DegenerateError
from .hofd import ComponentTable, SmootherCache
from .smoother import SmootherConfig


def _cov(a, b) -> float:
    return float(np.mean((a - a.mean()) * (b - b.mean())))


def variable_name(col: int) -> str:
    return f"X{col + 1}"


def block_name(cols) -> str:
    return "".join(variable_name(c) for c in cols)


@dataclass
class FirstOrder:
    s: float
    s_v: float
    s_c: float

    def __post_init__(self):
        self.s, self.s_v, self.s_c = float(self.s), float(self.s_v), float(self.s_c)


@dataclass
class SensitivityReport:
    """Generalized indices of one sample.

    ``first_order`` maps a variable name to its index and its variance and
    covariance parts; ``second_order`` maps a pair name to its interaction
    index. Two bookkeeping entries close the variance identity on a finite
    sample: ``nested`` collects twice the covariances between each pair's
    interaction and its own main effects, and ``between_pairs`` collects
    covariances across blocks plus the part of the output no block explains.
    Both vanish in the population for a model that splits over independent
    blocks.
    """

    first_order: dict
    second_order: dict
    total_variance: float
    nested: float = 0.0
    between_pairs: float = 0.0
    sum_all: float = field(init=False)

    def __post_init__(self):
        self.second_order = {k: float(v) for k, v in self.second_order.items()}
        self.total_variance = float(self.total_variance)
        self.nested = float(self.nested)
        self.between_pairs = float(self.between_pairs)
        self.sum_all = self.index_sum() + self.nested + self.between_pairs

    def index_sum(self) -> float:
        return sum(f.s for f in self.first_order.values()) + sum(self.second_order.values())

    def flat(self) -> dict:
        """Every reported quantity keyed by a flat name, in a stable order."""
        out = {}
        for name, f in self.first_order.items():
            out[f"S_{name}"] = f.s
            out[f"Sv_{name}"] = f.s_v
            out[f"Sc_{name}"] = f.s_c
        for name, s in self.second_order.items():
            out[f"S_{name}"] = s
        out["nested"] = self.nested
        out["between_pairs"] = self.between_pairs
        out["sum_all"] = self.sum_all
        return out

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["scope", "name", "s", "s_v", "s_c"])
        for name, f in self.first_order.items():
            w.writerow(["first_order", name, repr(f.s), repr(f.s_v), repr(f.s_c)])
        for name, s in self.second_order.items():
            w.writerow(["pair", name, repr(s), "", ""])
        w.writerow(["bookkeeping", "nested", repr(self.nested), "", ""])
        w.writerow(["bookkeeping", "between_pairs", repr(self.between_pairs), "", ""])
        w.writerow(["summary", "sum_all", repr(self.sum_all), "total_variance", repr(self.total_variance)])
        return buf.getvalue()


def generalized_indices(tables: list, y) -> SensitivityReport:
    """Generalized indices from the block component tables of one sample.

    For a pair with main effects ``phi1, phi2`` and interaction ``phi12``::

        S_1 = [V(phi1) + Cov(phi1, phi2)] / V(Y)     (variance + covariance parts)
        S_12 = V(phi12) / V(Y)

    A singleton block contributes ``V(phi1) / V(Y)`` with no covariance part.
    """
    y = np.asarray(y, dtype=float)
    var_y = float(np.var(y))
    if not var_y > 0:
        raise DegenerateError("degenerate output: zero total variance")
    first, second = {}, {}
    nested = 0.0
    block_parts = []
    for t in tables:
        block_parts.append(t.total() - t.eta0)
        if t.is_singleton:
            v = float(np.var(t.eta1)) / var_y
            first[variable_name(t.columns[0])] = FirstOrder(v, v, 0.0)
            continue
        c12 = _cov(t.eta1, t.eta2) / var_y
        for col, eta in zip(t.columns, (t.eta1, t.eta2)):
            s_v = float(np.var(eta)) / var_y
            first[variable_name(col)] = FirstOrder(s_v + c12, s_v, c12)
        second[block_name(t.columns)] = float(np.var(t.eta12)) / var_y
        nested += 2.0 * (_cov(t.eta1, t.eta12) + _cov(t.eta2, t.eta12)) / var_y

    resid = (y - y.mean()) - np.sum(block_parts, axis=0)
    between = float(np.var(resid))
    for i, a in enumerate(block_parts):
        between += 2.0 * _cov(a, resid)
        for b in block_parts[i + 1:]:
            between += 2.0 * _cov(a, b)
    return SensitivityReport(first, second, var_y, nested, between / var_y)


def classical_hoeffding_reference(tables: list, y) -> SensitivityReport:
    """Generalized indices read as classical Sobol indices.

    Under independent inputs the components are mutually orthogonal, every
    covariance part vanishes and the generalized indices are the Sobol
    indices. The report is that of :func:`generalized_indices`; callers check
    the covariance parts against zero.
    """
    return generalized_indices(tables, y)


@dataclass
class DvpReport:
    """Classical Sobol indices estimated by smoothing; they need not sum to one."""

    estimates: dict
    sum_all: float = field(init=False)

    def __post_init__(self):
        self.sum_all = float(sum(self.estimates.values()))


def dvp_sobol(x, y, subsets, cfg: SmootherConfig | None = None, cache=None) -> DvpReport:
    """Classical Sobol indices ``S_u = V(eta_u) / V(Y)`` from smoothed conditional means.

    The classical components are ``eta_i = m_i - E(Y)`` and
    ``eta_ij = m_ij - eta_i - eta_j - E(Y)`` with ``m_u`` the leave-one-out
    estimate of ``E(Y | X_u)``, ``|u| <= 2``. Under dependent inputs these
    components are correlated, so the indices need not sum to one.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    var_y = float(np.var(y))
    if not var_y > 0:
        raise DegenerateError("degenerate output: zero total variance")
    cache = cache or SmootherCache(x, cfg or SmootherConfig())
    mean = float(y.mean())
    fitted = {}

    def closed(cols):
        if cols not in fitted:
            fitted[cols] = y - mean if cols == tuple(range(x.shape[1])) else cache.get(cols).apply(y) - mean
        return fitted[cols]

    out = {}
    for u in subsets:
        u = tuple(sorted(int(c) for c in u))
        if len(u) not in (1, 2):
            raise ValueError(f"subsets must have one or two columns, got {u}")
        eta = closed(u)
        if len(u) == 2:
            eta = eta - closed((u[0],)) - closed((u[1],))
        out[block_name(u)] = float(np.var(eta)) / var_y
    return DvpReport(out)
