"""
Verification suites and parameter sweeps.

A suite runs every check that applies to a bundle (Schrödinger residual,
continuity, quantum Hamilton-Jacobi, Bohm consistency, the vanishing-Bohm
classification, the phase quadrature and optionally the VVM amplitude) and
collects one ``CheckResult`` per check. Families and sweep points are
processed in a thread pool; results come back in submission order.
"""

import logging
from concurrent.futures import ThreadPoolExecutor, as_completed
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, List, Optional, Sequence

import numpy as np
import pandas as pd

from .config import PhysicalConstants, Tolerances
from .errors import BohmlabError, ConfigError
from .expr import evaluate_array
from .families import FamilyFactory, make_config
from .families.base import FamilyConfig
from .numerics import Grid, bohmian_trajectory, fd_derivative, fit_acceleration
from .polar import (
    ResidualReport,
    SolutionBundle,
    bohm_consistency,
    continuity_residual,
    infer_potential,
    phase_from_f,
    qhje_residual,
    schrodinger_residual,
    vanishing_bohm_residual,
    vvm_check,
)

logger = logging.getLogger(__name__)

# a non-vanishing Bohm potential must exceed this somewhere on the grid
NONVANISHING_FLOOR = 1e-3


@dataclass
class CheckResult:
    name: str
    passed: bool
    linf: Optional[float] = None
    l2: Optional[float] = None
    order: Optional[float] = None
    excluded_fraction: Optional[float] = None
    detail: str = ""
    extra: Dict[str, Any] = field(default_factory=dict)

    @classmethod
    def from_report(cls, report: ResidualReport, passed: bool, detail: str = "") -> "CheckResult":
        return cls(
            name=report.name,
            passed=passed,
            linf=report.linf,
            l2=report.l2,
            order=report.order,
            excluded_fraction=report.excluded_fraction,
            detail=detail or report.path,
            extra={"grid": report.grid, "scale": report.scale},
        )

    def as_dict(self) -> Dict[str, Any]:
        return {
            "name": self.name,
            "passed": self.passed,
            "linf": self.linf,
            "l2": self.l2,
            "order": self.order,
            "excluded_fraction": self.excluded_fraction,
            "detail": self.detail,
            **self.extra,
        }


@dataclass
class VerificationResult:
    """All checks for one bundle."""

    family: str
    checks: List[CheckResult]
    error: Optional[str] = None

    @property
    def passed(self) -> bool:
        return self.error is None and all(c.passed for c in self.checks)

    @property
    def failed(self) -> List[str]:
        names = [c.name for c in self.checks if not c.passed]
        return names + (["error"] if self.error else [])

    def as_dict(self) -> Dict[str, Any]:
        return {
            "family": self.family,
            "passed": self.passed,
            "error": self.error,
            "checks": [c.as_dict() for c in self.checks],
        }


def _schrodinger(bundle: SolutionBundle, grid: Grid, tol: Tolerances) -> CheckResult:
    report = schrodinger_residual(bundle, grid)
    return CheckResult.from_report(report, report.passed(tol.residual, tol))


def _continuity(bundle: SolutionBundle, grid: Grid, tol: Tolerances) -> CheckResult:
    report = continuity_residual(bundle, grid)
    if report.path == "symbolic":
        return CheckResult.from_report(report, report.passed(tol.bohm))
    return CheckResult.from_report(report, report.passed(tol.residual, tol))


def _qhje(bundle: SolutionBundle, grid: Grid, tol: Tolerances) -> CheckResult:
    report = qhje_residual(bundle, grid)
    limit = tol.bohm if report.path == "symbolic" else tol.residual
    return CheckResult.from_report(report, report.passed(limit))


def _bohm(bundle: SolutionBundle, grid: Grid, tol: Tolerances) -> CheckResult:
    report = bohm_consistency(bundle, grid)
    return CheckResult.from_report(report, report.passed(tol.bohm))


def vanishing_measure(bundle: SolutionBundle, grid: Grid) -> float:
    """
    max |f'''/f' - f''^2/2f'^2| on the grid; from the declared Bohm potential
    (-4m V_B / hbar^2) when the bundle has no generating function.
    """
    grid = bundle.masked(grid)
    if bundle.f is not None:
        return vanishing_bohm_residual(bundle.f, grid)
    consts = bundle.constants
    values = 4 * consts.mass * bundle.bohm(grid) / consts.hbar ** 2
    return float(np.nanmax(np.abs(values)))


def _vanishing(bundle: SolutionBundle, grid: Grid, tol: Tolerances) -> CheckResult:
    value = vanishing_measure(bundle, grid)
    if bundle.vanishing_bohm:
        passed, detail = value <= tol.bohm, "flagged vanishing"
    else:
        passed, detail = value > NONVANISHING_FLOOR, "flagged non-vanishing"
    return CheckResult("vanishing_bohm", passed, linf=value, detail=detail)


def _phase(bundle: SolutionBundle, grid: Grid, tol: Tolerances) -> Optional[CheckResult]:
    """
    Closed-form S against the quadrature of fdot/f'.

    Cells the quadrature path cannot reach are left out and counted in
    ``excluded_fraction``; a grid with no comparable cell fails.
    """
    if bundle.f is None or bundle.S is None:
        return None
    grid = bundle.masked(grid)
    computed = phase_from_f(bundle.f, bundle.mu, grid, bundle.constants, strict=False)
    declared = bundle._on(bundle.S, grid)
    diff = np.abs(computed - declared)
    valid = np.isfinite(diff)
    excluded = float(np.mean(~valid))
    if excluded > 0.5:
        logger.warning("%s: phase quadrature unreachable on %.0f%% of the grid", bundle.family_id, 100 * excluded)
    if not valid.any():
        return CheckResult("phase", False, excluded_fraction=1.0, detail="no cell reachable by the quadrature path")
    scale = max(1.0, float(np.nanmax(np.abs(declared[valid]))))
    linf = float(diff[valid].max()) / scale
    l2 = float(np.sqrt(np.mean(diff[valid] ** 2))) / scale
    return CheckResult("phase", linf <= tol.residual, linf=linf, l2=l2, excluded_fraction=excluded, detail="quadrature")


def _vvm(bundle: SolutionBundle, grid: Grid, tol: Tolerances) -> CheckResult:
    if bundle.S2 is None:
        return CheckResult("vvm", False, detail="no two-point phase")
    report = vvm_check(
        bundle.S2, bundle.A, bundle.masked(grid), bundle.constants, xi=float(bundle.params.get("xi", 0.0)), rtol=tol.vvm
    )
    return CheckResult(
        "vvm",
        report.matches,
        linf=report.variation if np.isfinite(report.variation) else None,
        detail=f"ratio={report.ratio:.10g}",
        extra={"ratio": report.ratio, "matches": report.matches},
    )


CHECKS: Dict[str, Callable] = {
    "schrodinger": _schrodinger,
    "continuity": _continuity,
    "qhje": _qhje,
    "bohm_consistency": _bohm,
    "vanishing_bohm": _vanishing,
    "phase": _phase,
}


def verify_bundle(
    bundle: SolutionBundle,
    grid: Grid,
    tolerances: Tolerances = Tolerances(),
    vvm: bool = False,
    only: Optional[Sequence[str]] = None,
) -> VerificationResult:
    """
    Run every applicable check on ``bundle``.

    Args:
        only: restrict to these check names

    Returns:
        VerificationResult; a check that raises a numeric-domain error is
        recorded as failed with the message as detail
    """
    names = list(only) if only else list(CHECKS)
    unknown = [n for n in names if n not in CHECKS and n != "vvm"]
    if unknown:
        raise ConfigError(f"Unknown check(s): {', '.join(unknown)}. Available: {', '.join([*CHECKS, 'vvm'])}")
    if vvm and "vvm" not in names:
        names.append("vvm")

    bundle.report_coverage(grid)
    checks = []
    for name in names:
        if name == "bohm_consistency" and bundle.V_B_declared is None:
            continue
        run = _vvm if name == "vvm" else CHECKS[name]
        try:
            result = run(bundle, grid, tolerances)
        except ConfigError:
            raise
        except BohmlabError as e:
            logger.warning("%s: check %s failed with %s", bundle.family_id, name, e)
            result = CheckResult(name, False, detail=str(e))
        if result is not None:
            logger.debug("%s %s: %s", bundle.family_id, name, result)
            checks.append(result)
    return VerificationResult(bundle.family_id, checks)


def verify_family(
    config: FamilyConfig,
    consts: PhysicalConstants = PhysicalConstants(),
    grid: Optional[Grid] = None,
    tolerances: Tolerances = Tolerances(),
    vvm: bool = False,
) -> VerificationResult:
    bundle = FamilyFactory.create(config, consts).build()
    return verify_bundle(bundle, grid or config.default_grid(), tolerances, vvm)


def _pool(tasks: List[Callable[[], Any]], threads: int, label: Callable[[int], str]) -> List[Any]:
    """Run callables in a thread pool; results in submission order, exceptions returned in place."""
    results: Dict[int, Any] = {}
    with ThreadPoolExecutor(max_workers=max(1, threads)) as executor:
        futures = {executor.submit(task): i for i, task in enumerate(tasks)}
        for future in as_completed(futures):
            index = futures[future]
            try:
                results[index] = future.result()
            except Exception as e:
                logger.error("%s failed: %s", label(index), e)
                results[index] = e
    return [results[i] for i in range(len(tasks))]


def run_suite(
    configs: Sequence[FamilyConfig],
    consts: PhysicalConstants = PhysicalConstants(),
    tolerances: Tolerances = Tolerances(),
    threads: int = 1,
    grid: Optional[Grid] = None,
    vvm: bool = False,
) -> List[VerificationResult]:
    """Verify several family configs concurrently."""
    tasks = [
        (lambda cfg=cfg: verify_family(cfg, consts, grid, tolerances, vvm))
        for cfg in configs
    ]
    outcomes = _pool(tasks, threads, lambda i: configs[i].family)
    results = []
    for cfg, outcome in zip(configs, outcomes):
        if isinstance(outcome, Exception):
            results.append(VerificationResult(cfg.family, [], error=f"{type(outcome).__name__}: {outcome}"))
        else:
            results.append(outcome)
    return results


# ---------------------------------------------------------------------------
# Measured quantities and sweeps
# ---------------------------------------------------------------------------


def trajectory_acceleration(
    bundle: SolutionBundle, config: FamilyConfig, x0: Optional[float] = None, samples: int = 64
) -> Dict[str, float]:
    """Fitted acceleration of one Bohmian path against the declared value."""
    x_min, x_max, t_min, t_max = config.current_window()
    span = config.trajectory_span or (t_min, t_max)
    x0 = 0.5 * (x_min + x_max) if x0 is None else x0
    traj = bohmian_trajectory(bundle.S, x0, span, bundle.constants, samples=samples)
    fitted, rms = fit_acceleration(traj)
    declared = FamilyFactory.create(config, bundle.constants).declared_acceleration()
    declared_values = evaluate_array(declared, {"t": traj.times})
    return {
        "fitted_acceleration": fitted,
        "fit_rms": rms,
        "declared_acceleration": float(np.mean(declared_values)),
    }


def measured_phase_velocity(bundle: SolutionBundle, grid: Grid) -> float:
    """Median of -S_t / S_x over the grid."""
    S = bundle.phase(grid)
    S_t = fd_derivative(S, grid.dt, 0, 1)
    S_x = fd_derivative(S, grid.dx, 1, 1)
    with np.errstate(divide="ignore", invalid="ignore"):
        v = -S_t / S_x
    return float(np.nanmedian(v))


def fitted_inverse_square(bundle: SolutionBundle, grid: Grid, omega: float) -> float:
    """
    Least-squares c in V - m omega^2 x^2 / 2 = c / x^2 on the middle time
    slice of the inferred potential.
    """
    if bundle.f is None:
        raise ConfigError(f"{bundle.family_id} has no generating function to infer V from")
    grid = bundle.masked(grid)
    V = infer_potential(bundle.f, bundle.mu, grid, bundle.constants)
    row = grid.nt // 2
    x = grid.x
    residual = V[row] - bundle.constants.mass * omega ** 2 * x ** 2 / 2
    valid = np.isfinite(residual)
    basis = 1.0 / x[valid] ** 2
    return float(np.sum(residual[valid] * basis) / np.sum(basis ** 2))


def measure(config: FamilyConfig, consts: PhysicalConstants = PhysicalConstants()) -> Dict[str, float]:
    """Derived closed-form scalars plus the quantities measured from the bundle."""
    family = FamilyFactory.create(config, consts)
    bundle = family.build()
    row: Dict[str, float] = dict(family.derived())
    if config.accelerating:
        row.update(trajectory_acceleration(bundle, config))
    if config.family == "exponential_free":
        row["measured_phase_velocity"] = measured_phase_velocity(bundle, config.default_grid(128, 64))
    if config.family == "power_cosine":
        row["fitted_inverse_square"] = fitted_inverse_square(bundle, config.default_grid(256, 16), config.omega)
    return row


def sweep(
    family: str,
    param: str,
    values: Sequence[Any],
    consts: PhysicalConstants = PhysicalConstants(),
    base: Optional[Dict[str, Any]] = None,
    threads: int = 1,
) -> pd.DataFrame:
    """
    One row per parameter value with every derived and measured scalar.

    A value whose evaluation fails is kept as a row with an ``error`` column.
    """
    configs = [make_config(family, {**(base or {}), param: value}) for value in values]
    tasks = [(lambda cfg=cfg: measure(cfg, consts)) for cfg in configs]
    outcomes = _pool(tasks, threads, lambda i: f"{family} {param}={values[i]}")
    rows = []
    for value, outcome in zip(values, outcomes):
        row = {param: value}
        if isinstance(outcome, Exception):
            row["error"] = f"{type(outcome).__name__}: {outcome}"
        else:
            row.update(outcome)
        rows.append(row)
    return pd.DataFrame(rows)


def parse_values(text: str) -> List[float]:
    """
    Sweep values from ``"a:b:n"`` (n evenly spaced points) or ``"v1,v2,..."``.
    """
    text = text.strip()
    try:
        if ":" in text:
            start, stop, count = text.split(":")
            n = int(count)
            if n < 1:
                raise ConfigError(f"Sweep needs at least one point, got {n}")
            return [float(v) for v in np.linspace(float(start), float(stop), n)]
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError as e:
        raise ConfigError(f"Invalid sweep range '{text}': {e}") from None
