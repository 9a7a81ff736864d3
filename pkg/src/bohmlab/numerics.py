"""
Numerical kernels shared by the verification checks.

Uniform space-time grids with exclusion masks, second-order finite-difference
stencils, cumulative Simpson quadrature from an interior origin, adaptive
ODE integration and Bohmian trajectories.

Fields on a grid are arrays of shape ``(nt, nx)``: axis 0 is time, axis 1 is
space.
"""

import logging
from dataclasses import dataclass, field, replace
from typing import Callable, Dict, Optional, Sequence, Tuple, Union

import numpy as np
import sympy
from scipy.integrate import cumulative_simpson, solve_ivp

from .config import PhysicalConstants
from .errors import ConfigError, IntegrationError, SingularPathError

logger = logging.getLogger(__name__)

MIN_NODES = 8
X_AXIS = 1
T_AXIS = 0


@dataclass(frozen=True)
class Grid:
    """Uniform lattice over [x_min, x_max] x [t_min, t_max]."""

    x_min: float
    x_max: float
    nx: int
    t_min: float
    t_max: float
    nt: int
    excluded: Optional[np.ndarray] = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        if self.nx < MIN_NODES or self.nt < MIN_NODES:
            raise ConfigError(f"Grid needs at least {MIN_NODES} nodes per axis, got nx={self.nx}, nt={self.nt}")
        if not self.x_max > self.x_min:
            raise ConfigError(f"Grid x range is empty: [{self.x_min}, {self.x_max}]")
        if not self.t_max > self.t_min:
            raise ConfigError(f"Grid t range is empty: [{self.t_min}, {self.t_max}]")
        if self.excluded is not None and self.excluded.shape != self.shape:
            raise ConfigError(f"Exclusion mask shape {self.excluded.shape} does not match grid {self.shape}")

    @classmethod
    def parse(cls, text: str) -> "Grid":
        """Grid from ``"xmin,xmax,nx,tmin,tmax,nt"``."""
        parts = [p.strip() for p in text.split(",")]
        if len(parts) != 6:
            raise ConfigError(f"Grid must be xmin,xmax,nx,tmin,tmax,nt, got '{text}'")
        try:
            return cls(float(parts[0]), float(parts[1]), int(parts[2]), float(parts[3]), float(parts[4]), int(parts[5]))
        except ValueError as e:
            raise ConfigError(f"Invalid grid '{text}': {e}") from None

    @property
    def shape(self) -> Tuple[int, int]:
        return (self.nt, self.nx)

    @property
    def x(self) -> np.ndarray:
        return np.linspace(self.x_min, self.x_max, self.nx)

    @property
    def t(self) -> np.ndarray:
        return np.linspace(self.t_min, self.t_max, self.nt)

    @property
    def dx(self) -> float:
        return (self.x_max - self.x_min) / (self.nx - 1)

    @property
    def dt(self) -> float:
        return (self.t_max - self.t_min) / (self.nt - 1)

    def mesh(self) -> Tuple[np.ndarray, np.ndarray]:
        """(x, t) arrays of shape (nt, nx)."""
        tt, xx = np.meshgrid(self.t, self.x, indexing="ij")
        return xx, tt

    def mask(self) -> np.ndarray:
        if self.excluded is None:
            return np.zeros(self.shape, dtype=bool)
        return self.excluded

    def with_excluded(self, mask: np.ndarray) -> "Grid":
        return replace(self, excluded=np.asarray(mask, dtype=bool) | self.mask())

    @property
    def excluded_fraction(self) -> float:
        return float(self.mask().mean())

    def refine(self) -> "Grid":
        """Halve both spacings; every coarse node stays a node."""
        return Grid(self.x_min, self.x_max, 2 * self.nx - 1, self.t_min, self.t_max, 2 * self.nt - 1)

    def resized(self, nx: int, nt: int) -> "Grid":
        return Grid(self.x_min, self.x_max, nx, self.t_min, self.t_max, nt)

    def descriptor(self) -> Dict[str, float]:
        return {
            "x_min": self.x_min,
            "x_max": self.x_max,
            "nx": self.nx,
            "t_min": self.t_min,
            "t_max": self.t_max,
            "nt": self.nt,
        }


@dataclass(frozen=True)
class Trajectory:
    """Bohmian path sampled at increasing times."""

    times: np.ndarray
    positions: np.ndarray
    velocities: np.ndarray

    def __post_init__(self):
        if not (len(self.times) == len(self.positions) == len(self.velocities)):
            raise ConfigError("Trajectory arrays must have equal length")
        if np.any(np.diff(self.times) <= 0):
            raise ConfigError("Trajectory times must be strictly increasing")


# ---------------------------------------------------------------------------
# Finite differences
# ---------------------------------------------------------------------------

# one-sided second-order stencils: (offsets from the boundary, weights)
_FORWARD = {
    1: np.array([-1.5, 2.0, -0.5]),
    2: np.array([2.0, -5.0, 4.0, -1.0]),
    3: np.array([-2.5, 9.0, -12.0, 7.0, -1.5]),
}
_CENTRAL = {
    1: (np.array([-1, 1]), np.array([-0.5, 0.5])),
    2: (np.array([-1, 0, 1]), np.array([1.0, -2.0, 1.0])),
    3: (np.array([-2, -1, 1, 2]), np.array([-0.5, 1.0, -1.0, 0.5])),
}


def stencil_halfwidth(order: int) -> int:
    return 2 if order == 3 else 1


def fd_derivative(values: np.ndarray, spacing: float, axis: int = X_AXIS, order: int = 1) -> np.ndarray:
    """
    Derivative of ``order`` 1, 2 or 3 along ``axis`` with O(h^2) stencils.

    Interior nodes use central differences; the ``stencil_halfwidth(order)``
    nodes at each end use one-sided second-order stencils.

    Raises:
        ConfigError: unsupported order, axis out of range or too few nodes
    """
    if order not in _CENTRAL:
        raise ConfigError(f"Derivative order must be 1, 2 or 3, got {order}")
    values = np.asarray(values, dtype=float) if not np.iscomplexobj(values) else np.asarray(values)
    if not -values.ndim <= axis < values.ndim:
        raise ConfigError(f"Axis {axis} out of range for a {values.ndim}-d field")
    f = np.moveaxis(values, axis, 0)
    n = f.shape[0]
    if n < len(_FORWARD[order]) + 1:
        raise ConfigError(f"Need at least {len(_FORWARD[order]) + 1} nodes for order {order}")

    out = np.empty_like(f)
    w = stencil_halfwidth(order)
    offsets, weights = _CENTRAL[order]
    out[w : n - w] = sum(c * f[w + k : n - w + k] for k, c in zip(offsets, weights))

    forward = _FORWARD[order]
    backward = forward * (-1) ** order
    for i in range(w):
        out[i] = sum(c * f[i + k] for k, c in enumerate(forward))
        out[n - 1 - i] = sum(c * f[n - 1 - i - k] for k, c in enumerate(backward))

    return np.moveaxis(out / spacing ** order, 0, axis)


def boundary_mask(shape: Tuple[int, int], width_x: int = 1, width_t: int = 1) -> np.ndarray:
    """True on the cells computed with one-sided stencils."""
    mask = np.zeros(shape, dtype=bool)
    mask[:width_t, :] = True
    mask[-width_t:, :] = True
    mask[:, :width_x] = True
    mask[:, -width_x:] = True
    return mask


# ---------------------------------------------------------------------------
# Quadrature
# ---------------------------------------------------------------------------


def _partial_interval(values: np.ndarray, x: np.ndarray, origin: float, node: int) -> np.ndarray:
    """Integral of the local quadratic interpolant from ``origin`` to ``x[node]``."""
    n = x.size
    c = min(max(node, 1), n - 2)
    h = x[1] - x[0]
    fm, f0, fp = values[..., c - 1], values[..., c], values[..., c + 1]
    b1 = (fp - fm) / 2.0
    b2 = (fp - 2.0 * f0 + fm) / 2.0

    def antiderivative(u):
        return h * (f0 * u + b1 * u ** 2 / 2.0 + b2 * u ** 3 / 3.0)

    return antiderivative((x[node] - x[c]) / h) - antiderivative((origin - x[c]) / h)


def _one_sided(values: np.ndarray, h: float) -> np.ndarray:
    if values.shape[-1] == 1:
        return np.zeros_like(values)
    if values.shape[-1] == 2:
        return np.concatenate([np.zeros_like(values[..., :1]), h * (values[..., :1] + values[..., 1:]) / 2.0], axis=-1)
    return cumulative_simpson(values, dx=h, axis=-1, initial=0.0)


def quadrature(values: np.ndarray, x: np.ndarray, origin: float = 0.0, strict: bool = True) -> np.ndarray:
    """
    Cumulative integral of ``values`` along the last axis from ``origin`` to each node.

    Composite Simpson outward from the node nearest to ``origin`` in both
    directions; the piece between ``origin`` and that node uses the local
    quadratic interpolant. Cells beyond a non-finite integrand value on the
    path come back as NaN.

    Args:
        values: integrand sampled on the uniform nodes ``x`` (last axis)
        x: uniform nodes
        origin: lower limit, inside [x[0], x[-1]]
        strict: raise instead of returning NaN when the path is singular

    Raises:
        ConfigError: origin outside the node range
        SingularPathError: strict and a path from origin crosses a non-finite value
    """
    values = np.asarray(values, dtype=float)
    x = np.asarray(x, dtype=float)
    if not x[0] - 1e-12 <= origin <= x[-1] + 1e-12:
        raise ConfigError(f"Quadrature origin {origin} outside [{x[0]}, {x[-1]}]")
    h = x[1] - x[0]
    node = int(np.clip(np.rint((origin - x[0]) / h), 0, x.size - 1))

    right = _one_sided(values[..., node:], h)
    left = -_one_sided(values[..., : node + 1][..., ::-1], h)[..., ::-1]
    result = np.concatenate([left[..., :-1], right], axis=-1)

    bad = ~np.isfinite(values)
    if bad.any():
        # everything past the first non-finite node on each side is unreachable
        idx = np.arange(x.size)
        after = np.maximum.accumulate(np.where(idx >= node, bad, False), axis=-1)
        before = np.maximum.accumulate(np.where(idx <= node, bad, False)[..., ::-1], axis=-1)[..., ::-1]
        unreachable = after | before
        if strict:
            where = np.argwhere(bad)[0]
            raise SingularPathError(
                f"Integration path from x={origin} crosses a singular point at x={x[where[-1]]:.6g}",
                x=float(x[where[-1]]),
            )
        result = np.where(unreachable, np.nan, result)

    if abs(x[node] - origin) > 1e-12 * max(1.0, abs(origin)):
        result = result + _partial_interval(values, x, origin, node)[..., None]
    return result


# ---------------------------------------------------------------------------
# ODE integration
# ---------------------------------------------------------------------------


def integrate(
    rhs: Callable,
    y0: Sequence[float],
    t_span: Tuple[float, float],
    t_eval: Optional[np.ndarray] = None,
    rtol: float = 1e-9,
    atol: float = 1e-12,
    method: str = "RK45",
    events=None,
):
    """
    Adaptive Runge-Kutta integration through scipy's solve_ivp.

    Raises:
        IntegrationError: step-size underflow or any other solver failure
    """
    sol = solve_ivp(rhs, t_span, list(y0), method=method, t_eval=t_eval, rtol=rtol, atol=atol, events=events)
    if sol.status < 0:
        raise IntegrationError(f"Integration failed: {sol.message}", location=float(sol.t[-1]))
    return sol


def _velocity_function(S: Union[sympy.Expr, Callable], consts: PhysicalConstants) -> Callable:
    if callable(S) and not isinstance(S, sympy.Basic):
        return S
    from .expr import X, diff, evaluate_array

    gradient = diff(S, X)
    mass = consts.mass

    def velocity(x, t):
        return float(evaluate_array(gradient, {"x": x, "t": t})) / mass

    return velocity


def bohmian_trajectory(
    S: Union[sympy.Expr, Callable],
    x0: float,
    t_span: Tuple[float, float],
    consts: PhysicalConstants = PhysicalConstants(),
    samples: int = 64,
    bounds: Optional[Tuple[float, float]] = None,
    rtol: float = 1e-9,
) -> Trajectory:
    """
    Integrate dx/dt = S'(x, t)/m from ``x0``.

    Args:
        S: closed-form phase in x and t, or a velocity callable v(x, t)
        x0: start position
        t_span: (t_start, t_end)
        consts: physical constants (mass)
        samples: number of output times
        bounds: optional (x_min, x_max) the path must stay inside
        rtol: local relative tolerance

    Raises:
        IntegrationError: integrator failure, non-finite velocity, or the
            path leaving ``bounds``
    """
    velocity = _velocity_function(S, consts)

    def rhs(t, y):
        v = velocity(y[0], t)
        if not np.isfinite(v):
            raise IntegrationError(f"Non-finite velocity at x={y[0]:.6g}, t={t:.6g}", location=float(y[0]))
        return [v]

    events = None
    if bounds is not None:
        lo, hi = bounds

        def leave(t, y):
            return (y[0] - lo) * (hi - y[0])

        leave.terminal = True
        events = [leave]

    times = np.linspace(t_span[0], t_span[1], samples)
    sol = integrate(rhs, [x0], t_span, t_eval=times, rtol=rtol, atol=1e-12, events=events)
    if sol.status == 1:
        raise IntegrationError(
            f"Trajectory from x0={x0} left the grid at t={sol.t_events[0][0]:.6g}",
            location=float(sol.y_events[0][0][0]),
        )
    positions = sol.y[0]
    velocities = np.array([velocity(x, t) for x, t in zip(positions, sol.t)])
    logger.debug("Trajectory x0=%s: %d samples, x_end=%.6g", x0, sol.t.size, positions[-1])
    return Trajectory(sol.t, positions, velocities)


def fit_acceleration(traj: Trajectory) -> Tuple[float, float]:
    """
    Acceleration from a least-squares quadratic fit to the positions.

    Returns:
        (2 * quadratic coefficient, RMS residual of the fit)

    Raises:
        ConfigError: fewer than 16 samples
    """
    if len(traj.times) < 16:
        raise ConfigError(f"Acceleration fit needs at least 16 samples, got {len(traj.times)}")
    if np.ptp(traj.positions) == 0.0:
        return 0.0, 0.0
    coeffs = np.polyfit(traj.times, traj.positions, 2)
    residual = traj.positions - np.polyval(coeffs, traj.times)
    return float(2.0 * coeffs[0]), float(np.sqrt(np.mean(residual ** 2)))
