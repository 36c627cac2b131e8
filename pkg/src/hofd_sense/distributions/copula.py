"""Bivariate copulas and their density lower bounds.

A two-dimensional law satisfies the density lower-bound condition with
constant ``M`` iff its copula density stays above ``M``, equivalently iff
``C(u, v) = M uv + (1 - M) C~(u, v)`` for some copula ``C~``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..exceptions import SpecError
from .admissibility import AdmissibilityReport

FAMILIES = ("morgenstern", "frank", "archimedean_tabulated")


@dataclass(frozen=True)
class CopulaSpec:
    """A bivariate copula.

    ``generator`` is only used by ``archimedean_tabulated`` and holds the
    triple ``(phi, phi', phi'')`` sampled on a uniform grid of [0, 1].
    """

    family: str
    theta: float = 0.0
    generator: tuple | None = field(default=None, compare=False)

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise SpecError(f"unknown copula family {self.family!r}")
        theta = float(self.theta)
        if not np.isfinite(theta):
            raise SpecError("theta must be finite")
        object.__setattr__(self, "theta", theta)
        if self.family == "morgenstern" and abs(theta) > 1:
            raise SpecError(f"Morgenstern parameter must lie in [-1, 1], got {theta}")
        if self.family == "frank" and theta == 0:
            raise SpecError("Frank parameter must be nonzero")
        if self.family == "archimedean_tabulated":
            object.__setattr__(self, "generator", _validate_generator(self.generator))

    @property
    def grid(self) -> np.ndarray:
        return np.linspace(0.0, 1.0, self.generator[0].size)

    def to_dict(self) -> dict:
        record = {"family": self.family, "theta": self.theta}
        if self.generator is not None:
            record["generator_grid"] = [g.tolist() for g in self.generator]
        return record

    @classmethod
    def from_dict(cls, record: dict) -> "CopulaSpec":
        if "family" not in record:
            raise SpecError("copula record needs a 'family' field")
        return cls(record["family"], record.get("theta", 0.0), record.get("generator_grid"))


def _validate_generator(generator):
    if generator is None or len(generator) != 3:
        raise SpecError("tabulated generator must be a triple (phi, dphi, d2phi)")
    phi, dphi, d2phi = (np.asarray(g, dtype=float) for g in generator)
    if not phi.ndim == 1 or phi.size < 3 or dphi.shape != phi.shape or d2phi.shape != phi.shape:
        raise SpecError("generator arrays must be 1-D, equal length, with at least 3 nodes")
    if not all(np.all(np.isfinite(g)) for g in (phi, dphi, d2phi)):
        raise SpecError("generator table must be finite")
    if abs(phi[-1]) > 1e-12 * max(1.0, abs(phi[0])):
        raise SpecError(f"generator must vanish at 1, got phi(1)={phi[-1]:.3g}")
    if np.any(dphi >= 0):
        bad = int(np.argmax(dphi >= 0))
        raise SpecError(f"generator must be strictly decreasing; phi'>=0 at node {bad}")
    if np.any(d2phi <= 0):
        bad = int(np.argmax(d2phi <= 0))
        raise SpecError(f"generator must be strictly convex; phi''<=0 at node {bad}")
    if np.any(np.diff(phi) >= 0):
        raise SpecError("tabulated phi values are not decreasing")
    for g in (phi, dphi, d2phi):
        g.setflags(write=False)
    return phi, dphi, d2phi


def tabulate_generator(phi, dphi, d2phi, nodes: int = 1001, floor: float = 1e-12) -> tuple:
    """Sample a generator and its derivatives on a uniform grid of [0, 1].

    Evaluation points are clipped below at ``floor`` so generators with a
    singular derivative at 0 (such as ``x log x``) stay finite.
    """
    u = np.clip(np.linspace(0.0, 1.0, nodes), floor, 1.0)
    values = (np.asarray(phi(u), float), np.asarray(dphi(u), float), np.asarray(d2phi(u), float))
    out = list(values)
    out[0] = out[0] - out[0][-1]  # exact zero at 1
    return tuple(out)


def exponential_generator(a: float, theta: float, beta: float, nodes: int = 1001) -> tuple:
    """``-(a/theta) e^{-theta x} + beta x + (a/theta) e^{-theta} - beta`` with a<0, theta>0."""
    if not (a < 0 and theta > 0 and beta < -a * np.exp(-theta)):
        raise SpecError("need a < 0, theta > 0 and beta < -a exp(-theta)")
    return tabulate_generator(
        lambda x: -(a / theta) * np.exp(-theta * x) + beta * x + (a / theta) * np.exp(-theta) - beta,
        lambda x: a * np.exp(-theta * x) + beta,
        lambda x: -a * theta * np.exp(-theta * x),
        nodes,
    )


def xlogx_generator(c: float, nodes: int = 1001) -> tuple:
    """``x log x + (c - 1) x + (1 - c)`` with c < 0."""
    if not c < 0:
        raise SpecError("need c < 0")
    return tabulate_generator(
        lambda x: x * np.log(x) + (c - 1) * x + (1 - c),
        lambda x: np.log(x) + c,
        lambda x: 1.0 / x,
        nodes,
    )


def _archimedean_parts(spec, u, v):
    phi, dphi, d2phi = spec.generator
    grid = spec.grid
    s = np.interp(u, grid, phi) + np.interp(v, grid, phi)
    # phi is decreasing; invert on the reversed table, clamping to the pseudo-inverse 0
    c = np.where(s >= phi[0], 0.0, np.interp(s, phi[::-1], grid[::-1]))
    return c, grid, dphi, d2phi


def copula_cdf(spec: CopulaSpec, u, v) -> np.ndarray:
    u, v = np.broadcast_arrays(np.asarray(u, float), np.asarray(v, float))
    if spec.family == "morgenstern":
        return u * v * (1 + spec.theta * (1 - u) * (1 - v))
    if spec.family == "frank":
        t = spec.theta
        num = np.expm1(-t * u) * np.expm1(-t * v)
        return -np.log1p(num / np.expm1(-t)) / t
    return _archimedean_parts(spec, u, v)[0]


def copula_density(spec: CopulaSpec, u, v) -> np.ndarray:
    u, v = np.broadcast_arrays(np.asarray(u, float), np.asarray(v, float))
    if spec.family == "morgenstern":
        return 1 + spec.theta * (1 - 2 * u) * (1 - 2 * v)
    if spec.family == "frank":
        t = spec.theta
        a = -np.expm1(-t)
        den = a - (-np.expm1(-t * u)) * (-np.expm1(-t * v))
        return t * a * np.exp(-t * (u + v)) / den**2
    c, grid, dphi, d2phi = _archimedean_parts(spec, u, v)
    g_u = -np.interp(u, grid, dphi)
    g_v = -np.interp(v, grid, dphi)
    g_c = -np.interp(c, grid, dphi)
    return np.interp(c, grid, d2phi) * g_u * g_v / g_c**3


def frank_bound(theta: float) -> float:
    """Lower bound on the Frank copula density.

    For ``theta > 0`` this is ``theta (1 - e^-theta) e^(-2 theta)``. Negative
    parameters reuse it at ``|theta|`` because the Frank density satisfies
    ``c_{-t}(u, v) = c_t(1 - u, v)``.
    """
    t = abs(float(theta))
    return float(-t * np.expm1(-t) * np.exp(-2 * t))


def copula_lower_bound(spec: CopulaSpec) -> AdmissibilityReport:
    """Certify ``c(u, v) >= M`` on the unit square and report ``M``."""
    if spec.family == "morgenstern":
        t = spec.theta
        if abs(t) >= 1:
            return AdmissibilityReport(
                False, None, "copula_lower_bound",
                f"Morgenstern density 1+theta(1-2u)(1-2v) reaches 0 at |theta|=1 (theta={t:g})",
            )
        return AdmissibilityReport(
            True, 1.0 - abs(t), "copula_lower_bound", f"Morgenstern theta={t:g}: min density 1-|theta|"
        )
    if spec.family == "frank":
        bound = min(1.0, frank_bound(spec.theta))
        if not bound > 0:
            return AdmissibilityReport(
                False, None, "copula_lower_bound", f"Frank bound underflows at theta={spec.theta:g}"
            )
        return AdmissibilityReport(
            True, bound, "copula_lower_bound",
            f"Frank theta={spec.theta:g}: |t|(1-e^-|t|)e^(-2|t|) = {bound:.6g}",
        )

    phi, dphi, d2phi = spec.generator
    m1 = float(np.min(-dphi))
    m2 = float(np.min(d2phi / (-dphi) ** 3))
    grid = spec.grid
    uu, vv = np.meshgrid(grid, grid, indexing="ij")
    dens = copula_density(spec, uu, vv)
    grid_min = float(np.min(dens))
    details = (
        f"-phi' >= {m1:.6g}, d/du(1/(2 phi'^2)) >= {m2:.6g} on {grid.size} nodes; "
        f"grid-minimum density {grid_min:.6g}"
    )
    if not (m1 > 0 and m2 > 0 and grid_min > 0):
        return AdmissibilityReport(False, None, "copula_lower_bound", details)
    return AdmissibilityReport(True, min(1.0, grid_min), "copula_lower_bound", details)


@dataclass(frozen=True)
class TabulatedCopula:
    """Copula values ``values[i, j] = C(grid[i], grid[j])``."""

    grid: np.ndarray
    values: np.ndarray

    def rectangle_masses(self) -> np.ndarray:
        c = self.values
        return c[1:, 1:] - c[:-1, 1:] - c[1:, :-1] + c[:-1, :-1]


def copula_decompose(spec: CopulaSpec, m: float, k: int = 101, atol: float = 1e-10) -> TabulatedCopula:
    """Tabulate ``C~ = (C - m uv) / (1 - m)`` on a ``k x k`` grid and check it is a copula."""
    report = copula_lower_bound(spec)
    if not report.holds:
        raise ValueError(f"copula has no positive density lower bound: {report.details}")
    if not 0 < m <= report.bound_m:
        raise ValueError(f"m must lie in (0, {report.bound_m:.6g}], got {m}")
    if m >= 1:
        raise ValueError("m = 1 leaves nothing to decompose; C~ is undefined")
    grid = np.linspace(0.0, 1.0, k)
    uu, vv = np.meshgrid(grid, grid, indexing="ij")
    values = (copula_cdf(spec, uu, vv) - m * uu * vv) / (1 - m)
    table = TabulatedCopula(grid, values)

    margins = {
        "C~(u,0)": (values[:, 0], 0.0 * grid),
        "C~(0,v)": (values[0, :], 0.0 * grid),
        "C~(u,1)": (values[:, -1], grid),
        "C~(1,v)": (values[-1, :], grid),
    }
    for name, (got, want) in margins.items():
        err = np.abs(got - want)
        if np.max(err) > atol:
            i = int(np.argmax(err))
            raise ValueError(f"margin {name} violated at grid node {i}: error {err[i]:.3g}")
    masses = table.rectangle_masses()
    if np.min(masses) < -atol:
        i, j = np.unravel_index(int(np.argmin(masses)), masses.shape)
        raise ValueError(
            f"rectangle [{grid[i]:.4g},{grid[i + 1]:.4g}]x[{grid[j]:.4g},{grid[j + 1]:.4g}] "
            f"has negative mass {masses[i, j]:.3g}"
        )
    return table
