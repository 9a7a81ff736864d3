"""
Polar (amplitude/phase) machinery of the f-potential method.

A generating function f(x, t) with f' > 0 yields

    A = sqrt(f'),    S = mu(t) - m * int_0^x (fdot / f') dx'

for which the continuity equation holds identically. Feeding A and S into
the quantum Hamilton-Jacobi equation defines the external potential

    V = -[ (m/2) (fdot/f')^2 - (hbar^2/4m) (f'''/f' - f''^2 / 2f'^2)
           + m int_0^x (fdot fdot' / f'^2 - fddot / f') dx' + mu_dot ]

and its force F = -dV/dx, which needs no quadrature.

Checks come in two flavours. The symbolic path evaluates the exact
residual expression on the grid; the finite-difference path samples psi
(or A, S) and differentiates numerically, reporting the observed
convergence order under one refinement.
"""

import logging
from dataclasses import dataclass, field, replace
from typing import Any, Dict, Mapping, Optional, Tuple, Union

import numpy as np
import sympy

from .config import PhysicalConstants, Tolerances
from .errors import ConfigError, DomainError, SingularPathError
from .expr import T, X, XI, bind_constants, diff, evaluate_array, exact, print_expr
from .numerics import T_AXIS, X_AXIS, Grid, boundary_mask, fd_derivative, quadrature

logger = logging.getLogger(__name__)

__all__ = [
    "PhysicalConstants",
    "Exclusion",
    "SolutionBundle",
    "ResidualReport",
    "VVMReport",
    "amplitude_from_f",
    "phase_from_f",
    "bohm_potential",
    "infer_potential",
    "infer_force",
    "force_expr",
    "cubic_f",
    "vanishing_bohm_expr",
    "vanishing_bohm_residual",
    "continuity_residual",
    "qhje_residual",
    "schrodinger_residual",
    "bohm_consistency",
    "vvm_check",
    "bundle_from_f",
]

AMPLITUDE_FLOOR = 1e-6


@dataclass(frozen=True)
class Exclusion:
    """
    A region where a closed form is singular or undefined.

    ``near_zero`` excludes cells with |expr| < threshold; ``non_positive``
    excludes cells with expr <= threshold; ``outside`` excludes cells where
    expr leaves ``bounds`` (the range a tabulated profile covers). A ``polar``
    exclusion marks where only the amplitude/phase split breaks down (a signed
    amplitude crossing zero); psi itself stays smooth there and the propagator
    keeps those cells.
    """

    expr: sympy.Expr
    label: str
    threshold: float = 1e-3
    kind: str = "near_zero"
    polar: bool = False
    bounds: Optional[Tuple[float, float]] = None

    def mask(self, xx: np.ndarray, tt: np.ndarray) -> np.ndarray:
        values = evaluate_array(self.expr, {"x": xx, "t": tt})
        with np.errstate(invalid="ignore"):
            if self.kind == "outside":
                lo, hi = self.bounds
                bad = (values < lo) | (values > hi)
            elif self.kind == "non_positive":
                bad = values <= self.threshold
            else:
                bad = np.abs(values) < self.threshold
        return bad | ~np.isfinite(values)


@dataclass(frozen=True)
class SolutionBundle:
    """
    One exact solution: amplitude, phase, gauge and potentials.

    ``S`` or ``V_declared`` may be None for bundles built from a bare
    generating function; they are then computed on the grid through
    ``phase_from_f`` and ``infer_potential``.
    """

    family_id: str
    A: sympy.Expr
    S: Optional[sympy.Expr]
    mu: sympy.Expr
    V_declared: Optional[sympy.Expr]
    V_B_declared: Optional[sympy.Expr]
    constants: PhysicalConstants = PhysicalConstants()
    f: Optional[sympy.Expr] = None
    singularities: Tuple[Exclusion, ...] = ()
    vanishing_bohm: bool = False
    S2: Optional[sympy.Expr] = None
    params: Mapping[str, Any] = field(default_factory=dict)

    def with_phase(self, S: sympy.Expr) -> "SolutionBundle":
        return replace(self, S=S, S2=None)

    def masked(self, grid: Grid) -> Grid:
        """``grid`` with every declared singular cell excluded."""
        if not self.singularities:
            return grid
        xx, tt = grid.mesh()
        mask = np.zeros(grid.shape, dtype=bool)
        for exclusion in self.singularities:
            mask |= exclusion.mask(xx, tt)
        return grid.with_excluded(mask)

    def report_coverage(self, grid: Grid) -> Dict[str, float]:
        """
        Log a warning for every tabulated profile that does not cover ``grid``.

        Returns:
            label -> fraction of cells that fall outside the tabulated range
        """
        xx, tt = grid.mesh()
        fractions = {}
        for exclusion in self.singularities:
            if exclusion.kind != "outside":
                continue
            fraction = float(exclusion.mask(xx, tt).mean())
            fractions[exclusion.label] = fraction
            if fraction > 0:
                logger.warning(
                    "%s: %.1f%% of the grid lies outside the tabulated range (%s)",
                    self.family_id,
                    100 * fraction,
                    exclusion.label,
                )
        return fractions

    def _on(self, e: sympy.Expr, grid: Grid) -> np.ndarray:
        xx, tt = grid.mesh()
        values = evaluate_array(e, {"x": xx, "t": tt})
        values[grid.mask()] = np.nan
        return values

    def amplitude(self, grid: Grid) -> np.ndarray:
        return self._on(self.A, self.masked(grid))

    def phase(self, grid: Grid) -> np.ndarray:
        grid = self.masked(grid)
        if self.S is not None:
            return self._on(self.S, grid)
        values = phase_from_f(self.f, self.mu, grid, self.constants, strict=False)
        values[grid.mask()] = np.nan
        return values

    def potential(self, grid: Grid) -> np.ndarray:
        grid = self.masked(grid)
        if self.V_declared is not None:
            return self._on(self.V_declared, grid)
        values = infer_potential(self.f, self.mu, grid, self.constants, strict=False)
        values[grid.mask()] = np.nan
        return values

    def bohm(self, grid: Grid) -> np.ndarray:
        V_B = self.V_B_declared if self.V_B_declared is not None else bohm_potential(self.A, self.constants)
        return self._on(V_B, self.masked(grid))

    def psi(self, grid: Grid) -> np.ndarray:
        """Complex wavefunction A exp(iS/hbar); NaN on excluded cells."""
        return self.amplitude(grid) * np.exp(1j * self.phase(grid) / self.constants.hbar)

    def fields(self, grid: Grid) -> Dict[str, np.ndarray]:
        psi = self.psi(grid)
        return {
            "A": self.amplitude(grid),
            "S": self.phase(grid),
            "psi_re": psi.real,
            "psi_im": psi.imag,
            "V": self.potential(grid),
            "V_B": self.bohm(grid),
        }

    def metadata(self) -> Dict[str, Any]:
        return {
            "family": self.family_id,
            "params": {k: (v if isinstance(v, (int, float, str)) else str(v)) for k, v in self.params.items()},
            "constants": self.constants.as_dict(),
            "vanishing_bohm": self.vanishing_bohm,
            "A": print_expr(self.A),
            "S": print_expr(self.S) if self.S is not None else None,
            "mu": print_expr(self.mu),
            "f": print_expr(self.f) if self.f is not None else None,
            "V": print_expr(self.V_declared) if self.V_declared is not None else None,
            "V_B": print_expr(self.V_B_declared) if self.V_B_declared is not None else None,
            "singularities": [e.label for e in self.singularities],
        }


@dataclass(frozen=True)
class ResidualReport:
    """Norms of one residual on one grid, relative to the field scale."""

    name: str
    linf: float
    l2: float
    grid: Dict[str, float]
    excluded_fraction: float
    order: Optional[float] = None
    scale: float = 1.0
    path: str = "fd"

    def __post_init__(self):
        if self.linf < 0 or self.l2 < 0:
            raise ValueError("Residual norms must be non-negative")

    def passed(self, tolerance: float, tolerances: Optional[Tolerances] = None) -> bool:
        ok = self.linf <= tolerance
        if tolerances is not None:
            ok = ok and tolerances.order_ok(self.order)
        return ok

    def as_dict(self) -> Dict[str, Any]:
        return {
            "name": self.name,
            "linf": self.linf,
            "l2": self.l2,
            "order": self.order,
            "excluded_fraction": self.excluded_fraction,
            "scale": self.scale,
            "path": self.path,
            "grid": self.grid,
        }


@dataclass(frozen=True)
class VVMReport:
    matches: bool
    ratio: float
    variation: float
    ratio_field: np.ndarray = field(repr=False, compare=False)

    def as_dict(self) -> Dict[str, Any]:
        return {"matches": self.matches, "ratio": self.ratio, "variation": self.variation}


# ---------------------------------------------------------------------------
# f -> (A, S, V_B, V, F)
# ---------------------------------------------------------------------------


def _check_positive(e: sympy.Expr, grid: Grid, what: str) -> None:
    xx, tt = grid.mesh()
    values = evaluate_array(e, {"x": xx, "t": tt})
    bad = (values <= 0) & ~grid.mask()
    if bad.any():
        i, j = np.argwhere(bad)[0]
        raise DomainError(f"{what} <= 0 at x={xx[i, j]:.6g}, t={tt[i, j]:.6g}")


def amplitude_from_f(f: sympy.Expr, sample: Optional[Grid] = None) -> sympy.Expr:
    """
    A = sqrt(f'), so that A^2 = f' identically.

    Raises:
        DomainError: f' <= 0 at a point of ``sample``
    """
    fx = diff(f, X)
    if sample is not None:
        _check_positive(fx, sample, "f'")
    return sympy.sqrt(fx)


def _phase_integrand(f: sympy.Expr) -> sympy.Expr:
    return sympy.cancel(sympy.together(diff(f, T) / diff(f, X)))


def _potential_integrand(f: sympy.Expr) -> sympy.Expr:
    ft, fx = diff(f, T), diff(f, X)
    return sympy.cancel(sympy.together(ft * diff(ft, X) / fx ** 2 - diff(ft, T) / fx))


def _path_integral(integrand: sympy.Expr, grid: Grid, strict: bool) -> np.ndarray:
    """int_0^x integrand dx' on every grid cell, extending the path to reach x = 0."""
    dx = grid.dx
    k_lo = min(0, int(np.floor(-grid.x_min / dx)))
    k_hi = max(grid.nx - 1, int(np.ceil(-grid.x_min / dx)))
    path = grid.x_min + dx * np.arange(k_lo, k_hi + 1)
    tt, xx = np.meshgrid(grid.t, path, indexing="ij")
    values = evaluate_array(integrand, {"x": xx, "t": tt})
    cumulative = quadrature(values, path, origin=0.0, strict=strict)
    return cumulative[:, -k_lo : -k_lo + grid.nx]


def phase_from_f(
    f: sympy.Expr,
    mu: sympy.Expr,
    grid: Grid,
    consts: PhysicalConstants = PhysicalConstants(),
    strict: bool = True,
) -> np.ndarray:
    """
    S = mu(t) - m * int_0^x (fdot/f') dx' on ``grid``.

    The lower limit is fixed at x = 0; when 0 lies outside the grid the path
    is extended with the grid spacing.

    Raises:
        SingularPathError: strict and f' vanishes between 0 and some x
    """
    integral = _path_integral(_phase_integrand(f), grid, strict)
    mu_t = evaluate_array(mu, {"t": grid.t})
    return np.broadcast_to(mu_t, (grid.nx, grid.nt)).T - consts.mass * integral


def bohm_potential(
    A: Union[sympy.Expr, np.ndarray],
    consts: PhysicalConstants = PhysicalConstants(),
    dx: Optional[float] = None,
) -> Union[sympy.Expr, np.ndarray]:
    """
    V_B = -hbar^2 A'' / (2 m A).

    Symbolic for an expression; for a sampled field pass ``dx`` and the
    second x-derivative is taken with central differences. Cells where A
    vanishes come back as NaN.
    """
    if isinstance(A, sympy.Basic):
        return -exact(consts.hbar) ** 2 * diff(A, X, 2) / (2 * exact(consts.mass) * A)
    if dx is None:
        raise ConfigError("bohm_potential on a sampled field needs the spacing dx")
    A = np.asarray(A, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        V_B = -consts.hbar ** 2 * fd_derivative(A, dx, X_AXIS, 2) / (2 * consts.mass * A)
    V_B[np.abs(A) < AMPLITUDE_FLOOR * np.nanmax(np.abs(A))] = np.nan
    return V_B


def vanishing_bohm_expr(f: sympy.Expr) -> sympy.Expr:
    """f'''/f' - f''^2/(2 f'^2): zero exactly when the Bohm potential vanishes."""
    f1, f2, f3 = diff(f, X), diff(f, X, 2), diff(f, X, 3)
    return f3 / f1 - f2 ** 2 / (2 * f1 ** 2)


def vanishing_bohm_residual(f: sympy.Expr, sample: Grid) -> float:
    """
    max over the sample of |f'''/f' - f''^2/(2 f'^2)|.

    Raises:
        DomainError: f' <= 0 at a sample point
    """
    _check_positive(diff(f, X), sample, "f'")
    xx, tt = sample.mesh()
    values = evaluate_array(vanishing_bohm_expr(f), {"x": xx, "t": tt})
    values[sample.mask()] = np.nan
    if np.all(np.isnan(values)):
        raise DomainError("Vanishing-Bohm residual undefined on every sample point")
    return float(np.nanmax(np.abs(values)))


def _local_potential(f: sympy.Expr, mu: sympy.Expr, consts: PhysicalConstants) -> sympy.Expr:
    """Every term of the inferred potential except the quadrature."""
    hbar, m = exact(consts.hbar), exact(consts.mass)
    ratio = diff(f, T) / diff(f, X)
    return -(m / 2 * ratio ** 2 - hbar ** 2 / (4 * m) * vanishing_bohm_expr(f) + diff(mu, T))


def infer_potential(
    f: sympy.Expr,
    mu: sympy.Expr,
    grid: Grid,
    consts: PhysicalConstants = PhysicalConstants(),
    strict: bool = True,
) -> np.ndarray:
    """
    External potential defined by ``f`` and ``mu`` on ``grid``.

    Raises:
        SingularPathError: strict and the quadrature path is singular
    """
    xx, tt = grid.mesh()
    local = evaluate_array(_local_potential(f, mu, consts), {"x": xx, "t": tt})
    integral = _path_integral(_potential_integrand(f), grid, strict)
    V = local - consts.mass * integral
    V[grid.mask()] = np.nan
    return V


def force_expr(f: sympy.Expr, consts: PhysicalConstants = PhysicalConstants()) -> sympy.Expr:
    """
    F = (m/2) ((fdot/f')^2)' - (hbar^2/4m) (f'''/f' - f''^2/2f'^2)'
        + m (fdot fdot'/f'^2 - fddot/f')
    """
    hbar, m = exact(consts.hbar), exact(consts.mass)
    ft, fx = diff(f, T), diff(f, X)
    return (
        m / 2 * diff((ft / fx) ** 2, X)
        - hbar ** 2 / (4 * m) * diff(vanishing_bohm_expr(f), X)
        + m * (ft * diff(ft, X) / fx ** 2 - diff(ft, T) / fx)
    )


def infer_force(f: sympy.Expr, grid: Grid, consts: PhysicalConstants = PhysicalConstants()) -> np.ndarray:
    """Force field -dV/dx from the symbolic force expression."""
    xx, tt = grid.mesh()
    F = evaluate_array(force_expr(f, consts), {"x": xx, "t": tt})
    F[grid.mask()] = np.nan
    return F


def cubic_f(a, b, c) -> sympy.Expr:
    """
    The vanishing-Bohm generating function (a^2/3) x^3 + a b x^2 + b^2 x + c,
    with f' = (a x + b)^2, for functions a, b, c of t only.

    Raises:
        ConfigError: a coefficient depends on x
    """
    a, b, c = (exact(v) if not isinstance(v, sympy.Basic) else v for v in (a, b, c))
    for name, coeff in (("a", a), ("b", b), ("c", c)):
        if X in coeff.free_symbols:
            raise ConfigError(f"cubic_f coefficient {name} must not depend on x")
    return a ** 2 / 3 * X ** 3 + a * b * X ** 2 + b ** 2 * X + c


def bundle_from_f(
    f: sympy.Expr,
    mu: sympy.Expr = sympy.Integer(0),
    consts: PhysicalConstants = PhysicalConstants(),
    family_id: str = "custom",
) -> SolutionBundle:
    """
    Bundle for an arbitrary generating function; phase and potential are
    computed on the grid when requested.
    """
    f = bind_constants(f, consts)
    mu = bind_constants(mu, consts)
    if f.free_symbols - {X, T}:
        names = sorted(s.name for s in f.free_symbols - {X, T})
        raise ConfigError(f"Generating function has unbound parameters: {', '.join(names)}")
    A = amplitude_from_f(f)
    vanishing = sympy.simplify(vanishing_bohm_expr(f)) == 0
    return SolutionBundle(
        family_id=family_id,
        A=A,
        S=None,
        mu=mu,
        V_declared=None,
        V_B_declared=bohm_potential(A, consts),
        constants=consts,
        f=f,
        singularities=(Exclusion(diff(f, X), "f' <= 0", threshold=0.0, kind="non_positive"),),
        vanishing_bohm=bool(vanishing),
    )


# ---------------------------------------------------------------------------
# Residual checks
# ---------------------------------------------------------------------------


def _norms(residual: np.ndarray, scale: float, valid: np.ndarray) -> Tuple[float, float]:
    r = np.abs(residual[valid])
    if r.size == 0:
        raise DomainError("No valid cells left to measure the residual on")
    return float(r.max() / scale), float(np.sqrt(np.mean(r ** 2)) / scale)


def _order(coarse: float, fine: float) -> Optional[float]:
    if coarse <= 1e-14 and fine <= 1e-14:
        return None
    if fine <= 0.0:
        return None
    return float(np.log2(coarse / fine))


def _report(name, residual, scale_field, grid, path, order=None, halfwidth=1):
    valid = np.isfinite(residual)
    if path == "fd":
        valid &= ~boundary_mask(grid.shape, halfwidth, 1)
    scale = float(np.nanmax(np.abs(scale_field[valid]))) if valid.any() else 1.0
    scale = scale if scale > 0 else 1.0
    linf, l2 = _norms(residual, scale, valid)
    return ResidualReport(
        name=name,
        linf=linf,
        l2=l2,
        grid=grid.descriptor(),
        excluded_fraction=float(np.mean(~np.isfinite(scale_field))),
        order=order,
        scale=scale,
        path=path,
    )


def _symbolic(bundle: SolutionBundle) -> bool:
    return bundle.S is not None and bundle.V_declared is not None


def _continuity_fields(bundle: SolutionBundle, grid: Grid):
    m = bundle.constants.mass
    A = bundle.amplitude(grid)
    S = bundle.phase(grid)
    rho = A ** 2
    flux = rho * fd_derivative(S, grid.dx, X_AXIS, 1) / m
    residual = fd_derivative(flux, grid.dx, X_AXIS, 1) + fd_derivative(rho, grid.dt, T_AXIS, 1)
    return residual, rho


def continuity_residual(bundle: SolutionBundle, grid: Grid, symbolic: Optional[bool] = None) -> ResidualReport:
    """
    Residual of (1/m)(A^2 S')' + d_t(A^2), relative to max A^2.

    The symbolic path evaluates the exact expression; the FD path reports the
    convergence order under one refinement.
    """
    grid = bundle.masked(grid)
    symbolic = bundle.S is not None if symbolic is None else symbolic
    if symbolic:
        m = exact(bundle.constants.mass)
        rho = bundle.A ** 2
        expr = diff(rho * diff(bundle.S, X) / m, X) + diff(rho, T)
        return _report("continuity", bundle._on(expr, grid), bundle._on(rho, grid), grid, "symbolic")

    residual, rho = _continuity_fields(bundle, grid)
    fine = bundle.masked(grid.refine())
    residual_f, rho_f = _continuity_fields(bundle, fine)
    coarse_report = _report("continuity", residual, rho, grid, "fd")
    fine_report = _report("continuity", residual_f, rho_f, fine, "fd")
    return replace(coarse_report, order=_order(coarse_report.linf, fine_report.linf))


def qhje_residual(bundle: SolutionBundle, grid: Grid, symbolic: Optional[bool] = None) -> ResidualReport:
    """
    Residual of S'^2/2m - hbar^2 A''/(2mA) + V + S_t, relative to the largest
    term magnitude. Cells where A is below a relative floor are skipped.
    """
    grid = bundle.masked(grid)
    consts = bundle.constants
    hbar, m = consts.hbar, consts.mass
    symbolic = _symbolic(bundle) if symbolic is None else symbolic

    A = bundle.amplitude(grid)
    floor = np.abs(A) < AMPLITUDE_FLOOR * np.nanmax(np.abs(A))
    if symbolic:
        terms = [
            diff(bundle.S, X) ** 2 / (2 * exact(m)),
            bohm_potential(bundle.A, consts),
            bundle.V_declared,
            diff(bundle.S, T),
        ]
        values = [bundle._on(term, grid) for term in terms]
        path = "symbolic"
    else:
        S = bundle.phase(grid)
        values = [
            fd_derivative(S, grid.dx, X_AXIS, 1) ** 2 / (2 * m),
            bohm_potential(A, consts, dx=grid.dx),
            bundle.potential(grid),
            fd_derivative(S, grid.dt, T_AXIS, 1),
        ]
        path = "fd"
    residual = sum(values)
    magnitude = sum(np.abs(v) for v in values)
    residual[floor] = np.nan
    magnitude[floor] = np.nan
    return _report("qhje", residual, magnitude, grid, path)


def _schrodinger_field(bundle: SolutionBundle, grid: Grid) -> Tuple[np.ndarray, np.ndarray]:
    hbar, m = bundle.constants.hbar, bundle.constants.mass
    psi = bundle.psi(grid)
    V = bundle.potential(grid)
    psi_xx = fd_derivative(psi, grid.dx, X_AXIS, 2)
    psi_t = fd_derivative(psi, grid.dt, T_AXIS, 1)
    residual = -(hbar ** 2) / (2 * m) * psi_xx + V * psi - 1j * hbar * psi_t
    return residual, psi


def schrodinger_residual(bundle: SolutionBundle, grid: Grid, refine: bool = True) -> ResidualReport:
    """
    FD residual of -(hbar^2/2m) psi_xx + V psi - i hbar psi_t relative to max|psi|.

    With ``refine`` the residual is recomputed on a grid with halved
    spacings and the observed order log2(linf_coarse / linf_fine) reported.
    """
    grid = bundle.masked(grid)
    residual, psi = _schrodinger_field(bundle, grid)
    report = _report("schrodinger", residual, psi, grid, "fd")
    if not refine:
        return report
    fine = bundle.masked(grid.refine())
    residual_f, psi_f = _schrodinger_field(bundle, fine)
    fine_report = _report("schrodinger", residual_f, psi_f, fine, "fd")
    order = _order(report.linf, fine_report.linf)
    logger.debug(
        "schrodinger %s: linf %.3e -> %.3e (order %s)", bundle.family_id, report.linf, fine_report.linf, order
    )
    return replace(report, order=order)


def bohm_consistency(bundle: SolutionBundle, grid: Grid) -> ResidualReport:
    """bohm_potential(A) against the declared Bohm potential, relative to max(1, max|V_B|)."""
    if bundle.V_B_declared is None:
        raise ConfigError(f"{bundle.family_id} declares no Bohm potential")
    grid = bundle.masked(grid)
    A = bundle.amplitude(grid)
    computed = bundle._on(bohm_potential(bundle.A, bundle.constants), grid)
    declared = bundle._on(bundle.V_B_declared, grid)
    computed[np.abs(A) < AMPLITUDE_FLOOR * np.nanmax(np.abs(A))] = np.nan
    scale_field = np.maximum(np.abs(declared), 1.0)
    scale_field[~np.isfinite(computed)] = np.nan
    return _report("bohm_consistency", computed - declared, scale_field, grid, "symbolic")


def vvm_check(
    S2: sympy.Expr,
    A: sympy.Expr,
    grid: Grid,
    consts: PhysicalConstants = PhysicalConstants(),
    xi: float = 0.0,
    rtol: float = 1e-6,
) -> VVMReport:
    """
    Compare A^2 with the Van Vleck-Morette determinant |d^2 S2 / dx dx_i|.

    ``S2`` is the two-point phase in x, x_i and t; ``A`` the amplitude for
    the initial point ``xi``. The amplitude matches when A^2 / |M| is a
    constant over the grid (relative spread at most ``rtol``).
    """
    M = diff(diff(S2, X), XI)
    if M == 0:
        return VVMReport(False, float("nan"), float("inf"), np.full(grid.shape, np.nan))
    xx, tt = grid.mesh()
    bindings = {"x": xx, "t": tt, "x_i": np.full_like(xx, xi)}
    det = np.abs(evaluate_array(M, bindings))
    rho = evaluate_array(A, bindings) ** 2
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = rho / det
    ratio[grid.mask() | (det == 0)] = np.nan
    finite = ratio[np.isfinite(ratio)]
    if finite.size == 0:
        return VVMReport(False, float("nan"), float("inf"), ratio)
    mean = float(np.mean(finite))
    variation = float(np.ptp(finite) / abs(mean)) if mean != 0 else float("inf")
    return VVMReport(variation <= rtol, mean, variation, ratio)
