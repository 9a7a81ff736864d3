"""
Split-step Fourier propagation of the time-dependent Schrödinger equation.

Each step is the symmetric (Strang) product

    exp(-i V dt / 2 hbar) F^-1 exp(-i hbar k^2 dt / 2m) F exp(-i V dt / 2 hbar)

with V sampled at the step midpoint. The spatial grid is periodic; a
cosine taper at the edges damps what reaches the boundary when the
wavefunction is not localized.
"""

import logging
from dataclasses import dataclass, field, replace
from typing import Callable, Dict, List, Tuple, Union

import numpy as np
import pandas as pd
import sympy
from scipy import fft

from .config import PhysicalConstants
from .errors import ConfigError, PropagationError
from .expr import evaluate_array
from .polar import ResidualReport, SolutionBundle

logger = logging.getLogger(__name__)

METRICS = ("abs", "density", "phase")
CFL_LIMIT = 0.1
DEFAULT_INTERIOR = 0.25

Potential = Union[None, float, np.ndarray, sympy.Expr, Callable[[np.ndarray, float], np.ndarray]]


@dataclass(frozen=True)
class PropagationSetup:
    """
    Periodic spatial grid and time step.

    ``absorber`` is the width in cells of the cosine taper applied at each
    edge after every step (0 disables it).
    """

    x_min: float
    x_max: float
    nx: int
    dt: float
    absorber: int = 0
    consts: PhysicalConstants = PhysicalConstants()

    def __post_init__(self):
        if self.nx < 8 or self.nx & (self.nx - 1):
            raise ConfigError(f"nx must be a power of two >= 8, got {self.nx}")
        if not self.x_max > self.x_min:
            raise ConfigError(f"Empty propagation domain [{self.x_min}, {self.x_max}]")
        if not self.dt > 0:
            raise ConfigError(f"dt must be positive, got {self.dt}")
        if not 0 <= self.absorber < self.nx / 4:
            raise ConfigError(f"Absorber width must be in [0, nx/4), got {self.absorber}")

    @property
    def dx(self) -> float:
        return (self.x_max - self.x_min) / self.nx

    @property
    def x(self) -> np.ndarray:
        return np.linspace(self.x_min, self.x_max, self.nx, endpoint=False)

    @property
    def k(self) -> np.ndarray:
        return 2.0 * np.pi * fft.fftfreq(self.nx, d=self.dx)

    def kinetic(self, dt: float) -> np.ndarray:
        hbar, m = self.consts.hbar, self.consts.mass
        return np.exp(-1j * hbar * self.k ** 2 * dt / (2 * m))

    def taper(self) -> np.ndarray:
        """1 in the interior, falling as cos^2 to 0 over ``absorber`` cells at each edge."""
        mask = np.ones(self.nx)
        if self.absorber:
            ramp = np.sin(0.5 * np.pi * np.arange(self.absorber) / self.absorber) ** 2
            mask[: self.absorber] = ramp
            mask[-self.absorber :] = ramp[::-1]
        return mask

    def with_dt(self, dt: float) -> "PropagationSetup":
        return replace(self, dt=dt)


@dataclass(frozen=True)
class Snapshots:
    """psi at increasing times; ``psi`` has shape (len(times), nx)."""

    times: np.ndarray
    x: np.ndarray
    psi: np.ndarray
    norms: np.ndarray = field(default=None, repr=False)

    def __post_init__(self):
        if self.psi.shape != (len(self.times), len(self.x)):
            raise ConfigError(f"Snapshot shape {self.psi.shape} does not match {len(self.times)} times x {len(self.x)} nodes")

    @property
    def final(self) -> np.ndarray:
        return self.psi[-1]

    def to_frame(self) -> pd.DataFrame:
        """Long table with columns t, x, re, im."""
        tt, xx = np.meshgrid(self.times, self.x, indexing="ij")
        return pd.DataFrame(
            {"t": tt.ravel(), "x": xx.ravel(), "re": self.psi.real.ravel(), "im": self.psi.imag.ravel()}
        )


def _potential_function(V: Potential) -> Callable[[np.ndarray, float], np.ndarray]:
    if V is None:
        return lambda x, t: np.zeros_like(x)
    if isinstance(V, sympy.Basic):
        return lambda x, t: evaluate_array(V, {"x": x, "t": np.full_like(x, t)})
    if callable(V):
        return lambda x, t: np.asarray(V(x, t), dtype=float) * np.ones_like(x)
    values = np.asarray(V, dtype=float)
    return lambda x, t: values * np.ones_like(x)


def norm(psi: np.ndarray, dx: float) -> float:
    """sum |psi|^2 dx."""
    return float(np.sum(np.abs(psi) ** 2) * dx)


def _evolve(
    psi: np.ndarray,
    potential: Callable,
    setup: PropagationSetup,
    t0: float,
    steps: int,
    dt: float,
    every: int = 1,
) -> Tuple[List[float], List[np.ndarray]]:
    x, hbar = setup.x, setup.consts.hbar
    kinetic = setup.kinetic(dt)
    taper = setup.taper() if setup.absorber else None
    warned = False
    times, frames = [t0], [psi.copy()]
    for step in range(1, steps + 1):
        t_mid = t0 + (step - 0.5) * dt
        V = potential(x, t_mid)
        if not np.all(np.isfinite(V)):
            raise PropagationError(f"Potential is not finite at t={t_mid:.6g}", step)
        if not warned and abs(dt) * np.max(np.abs(V)) / hbar > CFL_LIMIT:
            logger.warning(
                "dt*max|V|/hbar = %.3g exceeds %.1f; the splitting error may dominate",
                abs(dt) * np.max(np.abs(V)) / hbar,
                CFL_LIMIT,
            )
            warned = True
        half = np.exp(-0.5j * V * dt / hbar)
        psi = half * fft.ifft(kinetic * fft.fft(half * psi))
        if taper is not None:
            psi = psi * taper
        if not np.all(np.isfinite(psi)):
            raise PropagationError(f"Wavefunction became non-finite at t={t0 + step * dt:.6g}", step)
        if step % every == 0 or step == steps:
            times.append(t0 + step * dt)
            frames.append(psi.copy())
    return times, frames


def _step_count(duration: float, dt: float) -> int:
    steps = int(round(duration / dt))
    if steps < 1 or abs(steps * dt - duration) > 1e-9 * max(1.0, abs(duration)):
        raise ConfigError(f"Duration {duration} is not a whole number of steps of {dt}")
    return steps


def split_step(
    psi0: np.ndarray,
    V: Potential,
    setup: PropagationSetup,
    t0: float = 0.0,
    t1: float = 1.0,
    snapshots: int = 2,
) -> Snapshots:
    """
    Evolve ``psi0`` from ``t0`` to ``t1``.

    Args:
        psi0: initial wavefunction on ``setup.x``
        V: potential as an expression in x and t, a callable ``V(x, t)``,
            a fixed array, a constant or None for a free particle
        setup: grid, time step and absorber
        snapshots: number of stored frames including both ends

    Raises:
        ConfigError: psi0 does not fit the grid or is not finite
        PropagationError: the potential or the wavefunction turned non-finite
    """
    psi0 = np.asarray(psi0, dtype=complex)
    if psi0.shape != (setup.nx,):
        raise ConfigError(f"psi0 has shape {psi0.shape}, expected ({setup.nx},)")
    if not np.all(np.isfinite(psi0)):
        raise ConfigError("psi0 must be finite on the whole grid")
    steps = _step_count(t1 - t0, setup.dt)
    every = max(1, steps // max(1, snapshots - 1))
    logger.debug("split_step: %d steps of %.3g from t=%.3g", steps, setup.dt, t0)
    times, frames = _evolve(psi0, _potential_function(V), setup, t0, steps, setup.dt, every)
    psi = np.array(frames)
    return Snapshots(np.array(times), setup.x, psi, np.sum(np.abs(psi) ** 2, axis=1) * setup.dx)


def initial_state(bundle: SolutionBundle, setup: PropagationSetup, t0: float) -> np.ndarray:
    """Closed-form psi on the propagation grid at ``t0``."""
    return closed_form(bundle, setup.x, np.array([t0]))[0]


def closed_form(bundle: SolutionBundle, x: np.ndarray, times: np.ndarray) -> np.ndarray:
    """
    A exp(iS/hbar) on (times, x); NaN where the closed form is undefined or
    excluded. Polar-only exclusions (sign changes of A) are kept.
    """
    if bundle.S is None:
        raise ConfigError(f"{bundle.family_id} has no closed-form phase to propagate")
    tt, xx = np.meshgrid(times, x, indexing="ij")
    bindings = {"x": xx, "t": tt}
    A = evaluate_array(bundle.A, bindings)
    S = evaluate_array(bundle.S, bindings)
    for exclusion in bundle.singularities:
        if not exclusion.polar:
            A[exclusion.mask(xx, tt)] = np.nan
    return A * np.exp(1j * S / bundle.constants.hbar)


def interior_mask(nx: int, fraction: float) -> np.ndarray:
    """True on the cells kept after dropping ``fraction`` of the grid at each edge."""
    if not 0 <= fraction < 0.5:
        raise ConfigError(f"Interior fraction must be in [0, 0.5), got {fraction}")
    mask = np.ones(nx, dtype=bool)
    cut = int(np.floor(fraction * nx))
    if cut:
        mask[:cut] = False
        mask[-cut:] = False
    return mask


def _gauged(numeric: np.ndarray, closed: np.ndarray, valid: np.ndarray) -> np.ndarray:
    overlap = np.sum(np.conj(closed[valid]) * numeric[valid])
    if overlap == 0:
        return numeric
    return numeric * np.conj(overlap) / abs(overlap)


def snapshot_errors(
    closed: np.ndarray,
    numeric: Snapshots,
    metric: str = "abs",
    interior: float = 0.0,
) -> pd.DataFrame:
    """
    Per-snapshot distances between a closed-form field and the numerical one.

    Columns: t, linf, l2 (both relative to the closed-form scale of the
    snapshot) and excluded (fraction of cells skipped).
    """
    if metric not in METRICS:
        raise ConfigError(f"metric must be one of {METRICS}, got {metric!r}")
    if closed.shape != numeric.psi.shape:
        raise ConfigError(f"Shape mismatch: closed form {closed.shape} vs snapshots {numeric.psi.shape}")
    keep = interior_mask(len(numeric.x), interior)
    rows = []
    for i, t in enumerate(numeric.times):
        ref, num = closed[i], numeric.psi[i]
        valid = keep & np.isfinite(ref)
        if not valid.any():
            raise ConfigError(f"No comparable cells at t={t:.6g}")
        if metric == "density":
            ref, num = np.abs(ref) ** 2, np.abs(num) ** 2
        elif metric == "phase":
            num = _gauged(num, ref, valid)
        diff = np.abs(num[valid] - ref[valid])
        scale = float(np.max(np.abs(ref[valid]))) or 1.0
        l2_ref = float(np.sqrt(np.sum(np.abs(ref[valid]) ** 2))) or 1.0
        rows.append(
            {
                "t": float(t),
                "linf": float(diff.max()) / scale,
                "l2": float(np.sqrt(np.sum(diff ** 2))) / l2_ref,
                "excluded": float(1.0 - valid.mean()),
            }
        )
    return pd.DataFrame(rows)


def compare_evolution(
    bundle: SolutionBundle,
    numeric: Snapshots,
    metric: str = "abs",
    interior: float = 0.0,
) -> ResidualReport:
    """
    Worst snapshot distance between ``bundle`` and the propagated snapshots.

    ``phase`` removes one global phase per snapshot before comparing, which
    absorbs a different gauge mu(t).

    Raises:
        ConfigError: unknown metric or mismatched shapes
    """
    closed = closed_form(bundle, numeric.x, numeric.times)
    table = snapshot_errors(closed, numeric, metric, interior)
    dx = float(numeric.x[1] - numeric.x[0])
    return ResidualReport(
        name=f"evolution_{metric}",
        linf=float(table["linf"].max()),
        l2=float(table["l2"].max()),
        grid={
            "x_min": float(numeric.x[0]),
            "x_max": float(numeric.x[-1] + dx),
            "nx": len(numeric.x),
            "t_min": float(numeric.times[0]),
            "t_max": float(numeric.times[-1]),
            "nt": len(numeric.times),
        },
        excluded_fraction=float(table["excluded"].max()),
        path="spectral",
    )


def strang_order(
    psi0: np.ndarray,
    V: Potential,
    setup: PropagationSetup,
    t0: float = 0.0,
    t1: float = 1.0,
    reference_factor: int = 32,
) -> Dict[str, float]:
    """
    Error ratio under dt halving against a run with dt / reference_factor.

    Returns:
        dict with the errors at dt and dt/2, their ratio (about 4 for a
        second-order scheme) and the observed order log2(ratio)
    """
    reference = split_step(psi0, V, setup.with_dt(setup.dt / reference_factor), t0, t1).final
    coarse = split_step(psi0, V, setup, t0, t1).final
    fine = split_step(psi0, V, setup.with_dt(setup.dt / 2), t0, t1).final
    e_coarse = np.sqrt(np.sum(np.abs(coarse - reference) ** 2) * setup.dx)
    e_fine = np.sqrt(np.sum(np.abs(fine - reference) ** 2) * setup.dx)
    ratio = float(e_coarse / e_fine) if e_fine > 0 else float("inf")
    return {
        "error_dt": float(e_coarse),
        "error_half_dt": float(e_fine),
        "ratio": ratio,
        "order": float(np.log2(ratio)) if np.isfinite(ratio) and ratio > 0 else float("nan"),
    }


def time_reversal(
    psi0: np.ndarray,
    V: Potential,
    setup: PropagationSetup,
    t0: float = 0.0,
    t1: float = 1.0,
) -> float:
    """Max |psi0 - U(-T) U(T) psi0| relative to max |psi0|."""
    if setup.absorber:
        raise ConfigError("Time reversal needs a setup without absorber")
    forward = split_step(psi0, V, setup, t0, t1).final
    steps = _step_count(t1 - t0, setup.dt)
    _, frames = _evolve(forward, _potential_function(V), setup, t1, steps, -setup.dt, steps)
    psi0 = np.asarray(psi0, dtype=complex)
    return float(np.max(np.abs(frames[-1] - psi0)) / np.max(np.abs(psi0)))


def propagate_bundle(
    bundle: SolutionBundle,
    setup: PropagationSetup,
    t0: float,
    t1: float,
    snapshots: int = 6,
    V: Potential = None,
) -> Snapshots:
    """
    Start from the closed form at ``t0`` and evolve under the bundle's
    declared potential (or ``V`` when given).
    """
    potential = V if V is not None else bundle.V_declared
    if potential is None:
        raise ConfigError(f"{bundle.family_id} declares no potential; pass one explicitly")
    psi0 = initial_state(bundle, setup, t0)
    if not np.all(np.isfinite(psi0)):
        raise ConfigError(f"{bundle.family_id} is not defined on the whole propagation grid at t={t0}")
    return split_step(psi0, potential, setup, t0, t1, snapshots)
