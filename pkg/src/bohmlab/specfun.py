"""
Special functions used by the solution families.

- Airy ``Ai`` and ``Ai'`` on real arguments. The central band |y| <= 4.5 uses
  the Maclaurin series; outside it the Bessel-function representations
  (scipy.special) are used, and the oscillatory asymptotic expansion takes
  over past the overflow guard y < -200. Ai underflows to 0 for y > 200.
- Weber-type functions: solutions of ``G'' = (sign*scale*y**n + offset) * G``
  tabulated by adaptive high-order integration with dense output. This covers
  the parabolic cylinder equation ``u'' = (z1*y**2 + z2) u`` and the
  generalized ``G'' = +-y**n G``.
"""

import logging
from dataclasses import dataclass, field
from functools import lru_cache
from itertools import count
from typing import Optional, Tuple

import numpy as np
import pandas as pd
import sympy
from scipy import special
from scipy.integrate import solve_ivp

from .errors import ConfigError, IntegrationError

logger = logging.getLogger(__name__)

SERIES_LIMIT = 4.5
OVERFLOW_GUARD = 200.0

# Ai(0) = 3^(-2/3)/Gamma(2/3), Ai'(0) = -3^(-1/3)/Gamma(1/3)
AI0 = 3.0 ** (-2.0 / 3.0) / special.gamma(2.0 / 3.0)
AIP0 = -(3.0 ** (-1.0 / 3.0)) / special.gamma(1.0 / 3.0)

_SERIES_TERMS = 48


def _maclaurin(y: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Ai and Ai' from the two fundamental power series of the Airy equation."""
    y3 = y ** 3
    # f = sum a_k y^{3k},   a_k = a_{k-1} / ((3k-1) 3k)
    # g = sum b_k y^{3k+1}, b_k = b_{k-1} / (3k (3k+1))
    # term ratios of f' and g' follow from the same recurrences
    tf = np.ones_like(y)
    tg = y.copy()
    tfp = y * y / 2.0
    tgp = np.ones_like(y)
    f, g, fp, gp = tf.copy(), tg.copy(), tfp.copy(), tgp.copy()
    for k in range(1, _SERIES_TERMS):
        tf = tf * y3 / ((3 * k - 1) * (3 * k))
        tg = tg * y3 / ((3 * k) * (3 * k + 1))
        tgp = tgp * y3 / ((3 * k - 2) * (3 * k))
        f += tf
        g += tg
        gp += tgp
        if k >= 2:
            tfp = tfp * y3 / ((3 * k - 3) * (3 * k - 1))
            fp += tfp
    return AI0 * f + AIP0 * g, AI0 * fp + AIP0 * gp


def _bessel_positive(y: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Ai, Ai' for y > 0 through modified Bessel functions K_{1/3}, K_{2/3}."""
    zeta = 2.0 / 3.0 * y ** 1.5
    ai = np.sqrt(y / 3.0) * special.kv(1.0 / 3.0, zeta) / np.pi
    aip = -y / (np.pi * np.sqrt(3.0)) * special.kv(2.0 / 3.0, zeta)
    return ai, aip


def _bessel_negative(z: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Ai(-z), Ai'(-z) for z > 0 through ordinary Bessel functions."""
    zeta = 2.0 / 3.0 * z ** 1.5
    ai = np.sqrt(z) / 3.0 * (special.jv(1.0 / 3.0, zeta) + special.jv(-1.0 / 3.0, zeta))
    aip = z / 3.0 * (special.jv(2.0 / 3.0, zeta) - special.jv(-2.0 / 3.0, zeta))
    return ai, aip


@lru_cache(maxsize=None)
def _asymptotic_coefficients(terms: int) -> Tuple[np.ndarray, np.ndarray]:
    k = np.arange(terms)
    # u_k = Gamma(3k + 1/2) / (54^k k! Gamma(k + 1/2)),  v_k = -(6k+1)/(6k-1) u_k
    log_u = (
        special.gammaln(3 * k + 0.5)
        - k * np.log(54.0)
        - special.gammaln(k + 1)
        - special.gammaln(k + 0.5)
    )
    u = np.exp(log_u)
    v = -(6 * k + 1) / (6 * k - 1) * u
    return u, v


def _asymptotic_negative(z: np.ndarray, terms: int = 8) -> Tuple[np.ndarray, np.ndarray]:
    """Oscillatory asymptotic expansion of Ai(-z), Ai'(-z) for large z."""
    u, v = _asymptotic_coefficients(2 * terms)
    zeta = 2.0 / 3.0 * z ** 1.5
    phase = zeta - np.pi / 4.0
    even_u = sum((-1) ** k * u[2 * k] / zeta ** (2 * k) for k in range(terms))
    odd_u = sum((-1) ** k * u[2 * k + 1] / zeta ** (2 * k + 1) for k in range(terms))
    even_v = sum((-1) ** k * v[2 * k] / zeta ** (2 * k) for k in range(terms))
    odd_v = sum((-1) ** k * v[2 * k + 1] / zeta ** (2 * k + 1) for k in range(terms))
    ai = (np.cos(phase) * even_u + np.sin(phase) * odd_u) / (np.sqrt(np.pi) * z ** 0.25)
    aip = z ** 0.25 / np.sqrt(np.pi) * (np.sin(phase) * even_v - np.cos(phase) * odd_v)
    return ai, aip


def airy(y) -> Tuple[np.ndarray, np.ndarray]:
    """
    Evaluate Ai(y) and Ai'(y) for real y (scalar or array).

    Returns:
        Tuple (Ai, Ai') with the shape of ``y``; scalars in, scalars out
    """
    arr = np.asarray(y, dtype=float)
    scalar = arr.ndim == 0
    arr = np.atleast_1d(arr)
    ai = np.full(arr.shape, np.nan)
    aip = np.full(arr.shape, np.nan)

    central = np.abs(arr) <= SERIES_LIMIT
    positive = (arr > SERIES_LIMIT) & (arr <= OVERFLOW_GUARD)
    negative = (arr < -SERIES_LIMIT) & (arr >= -OVERFLOW_GUARD)
    underflow = arr > OVERFLOW_GUARD
    far_negative = arr < -OVERFLOW_GUARD

    if central.any():
        ai[central], aip[central] = _maclaurin(arr[central])
    if positive.any():
        ai[positive], aip[positive] = _bessel_positive(arr[positive])
    if negative.any():
        ai[negative], aip[negative] = _bessel_negative(-arr[negative])
    if underflow.any():
        ai[underflow] = 0.0
        aip[underflow] = 0.0
    if far_negative.any():
        ai[far_negative], aip[far_negative] = _asymptotic_negative(-arr[far_negative])

    if scalar:
        return float(ai[0]), float(aip[0])
    return ai, aip


def airy_ai(y):
    """Ai(y) for real y."""
    return airy(y)[0]


def airy_ai_prime(y):
    """Ai'(y) for real y."""
    return airy(y)[1]


# ---------------------------------------------------------------------------
# Weber-type functions
# ---------------------------------------------------------------------------

PARITIES = ("even", "odd")
SIGNS = (1, -1)


@dataclass(frozen=True)
class WeberSpec:
    """
    Specification of one solution of ``G'' = (sign*scale*y**n + offset) * G``.

    ``parity`` selects the initial data at y=0 (even: G=1, G'=0; odd: G=0,
    G'=1); ``initial`` overrides it with explicit ``(G(0), G'(0))``.
    """

    n: int = 2
    sign: int = 1
    parity: str = "even"
    y_range: Tuple[float, float] = (-6.0, 6.0)
    scale: float = 1.0
    offset: float = 0.0
    initial: Optional[Tuple[float, float]] = None

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 1:
            raise ConfigError(f"WeberSpec.n must be a positive integer, got {self.n}")
        if self.sign not in SIGNS:
            raise ConfigError(f"WeberSpec.sign must be +1 or -1, got {self.sign}")
        if self.parity not in PARITIES:
            raise ConfigError(f"WeberSpec.parity must be one of {PARITIES}, got {self.parity}")
        lo, hi = self.y_range
        if not (np.isfinite(lo) and np.isfinite(hi) and lo < 0.0 < hi):
            raise ConfigError(f"WeberSpec.y_range must be finite and contain 0, got {self.y_range}")
        if not self.scale > 0:
            raise ConfigError(f"WeberSpec.scale must be positive, got {self.scale}")

    def coefficient(self, y):
        """The factor q(y) in G'' = q(y) G."""
        return self.sign * self.scale * np.asarray(y, dtype=float) ** self.n + self.offset

    def initial_values(self) -> Tuple[float, float]:
        if self.initial is not None:
            return float(self.initial[0]), float(self.initial[1])
        return (1.0, 0.0) if self.parity == "even" else (0.0, 1.0)


@dataclass(frozen=True)
class WeberTable:
    """
    Tabulated Weber-type solution with dense interpolation on both branches.

    Alongside G and G' the table carries the running integral
    ``W(y) = int_0^y G(s)**2 ds``, the antiderivative a generating function
    with f' = G**2 is built from.
    """

    spec: WeberSpec
    nodes: np.ndarray
    values: np.ndarray
    derivatives: np.ndarray
    integrals: np.ndarray
    _left: object = field(repr=False, compare=False)
    _right: object = field(repr=False, compare=False)

    def _evaluate(self, y, component: int):
        arr = np.asarray(y, dtype=float)
        out = np.full(arr.shape, np.nan)
        lo, hi = self.spec.y_range
        left = (arr >= lo) & (arr < 0.0)
        right = (arr >= 0.0) & (arr <= hi)
        if left.any():
            out[left] = self._left(arr[left])[component]
        if right.any():
            out[right] = self._right(arr[right])[component]
        if arr.ndim == 0:
            return float(out)
        return out

    def value(self, y):
        """G(y); NaN outside the tabulated range."""
        return self._evaluate(y, 0)

    def derivative(self, y):
        """G'(y); NaN outside the tabulated range."""
        return self._evaluate(y, 1)

    def integral(self, y):
        """int_0^y G(s)**2 ds; NaN outside the tabulated range."""
        return self._evaluate(y, 2)

    def second_derivative(self, y):
        """G''(y) from the defining equation."""
        return self.spec.coefficient(y) * self.value(y)

    def outside(self, y) -> np.ndarray:
        """Boolean mask of the points that fall outside the tabulated range."""
        arr = np.asarray(y, dtype=float)
        lo, hi = self.spec.y_range
        return ~((arr >= lo) & (arr <= hi))

    def ode_residual(self, points: int = 8) -> float:
        """
        Path-averaged residual of G'' = q G, relative to max|G|.

        D(y) = G'(y) - G'(0) - int_0^y q G ds is accumulated over the
        integration steps, with the stored derivatives on the left and a
        Gauss-Legendre rule over the dense interpolant of G on the right.
        Returns max|D| / (max|G| * max|y|).
        """
        a, b = self.nodes[:-1], self.nodes[1:]
        mid, half = (a + b) / 2, (b - a) / 2
        roots, weights = np.polynomial.legendre.leggauss(points)
        y = mid[:, None] + half[:, None] * roots
        integral = half * np.sum(weights * self.spec.coefficient(y) * self.value(y), axis=1)
        steps = np.diff(self.derivatives) - integral
        origin = int(np.flatnonzero(self.nodes == 0.0)[0])
        drift = np.zeros(self.nodes.size)
        drift[origin + 1 :] = np.cumsum(steps[origin:])
        drift[:origin] = -np.cumsum(steps[:origin][::-1])[::-1]
        return float(np.max(np.abs(drift)) / (np.max(np.abs(self.values)) * np.max(np.abs(self.nodes))))

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame({"y": self.nodes, "G": self.values, "dG": self.derivatives, "intG2": self.integrals})


def weber_solve(spec: WeberSpec, rtol: float = 1e-13, atol: float = 1e-15) -> WeberTable:
    """
    Tabulate the solution described by ``spec``.

    The equation is integrated from y=0 towards both ends of ``spec.y_range``
    with an adaptive eighth-order Runge-Kutta scheme and dense output; the
    running integral of G**2 is carried as a third state component.

    Raises:
        IntegrationError: if the integrator fails (step-size underflow)
    """

    def rhs(y, state):
        return [state[1], spec.coefficient(y) * state[0], state[0] ** 2]

    g0 = [*spec.initial_values(), 0.0]
    lo, hi = spec.y_range
    branches = []
    for end in (lo, hi):
        sol = solve_ivp(rhs, (0.0, end), g0, method="DOP853", rtol=rtol, atol=atol, dense_output=True)
        if sol.status != 0:
            raise IntegrationError(f"Weber integration failed: {sol.message}", location=float(sol.t[-1]))
        branches.append(sol)

    left, right = branches
    nodes = np.concatenate([left.t[::-1][:-1], right.t])
    states = [np.concatenate([left.y[i][::-1][:-1], right.y[i]]) for i in range(3)]
    logger.debug("Weber table n=%s sign=%s: %d nodes on %s", spec.n, spec.sign, nodes.size, spec.y_range)
    return WeberTable(spec, nodes, *states, left.sol, right.sol)


# ---------------------------------------------------------------------------
# Symbolic bindings: Weber functions as expression-tree nodes
# ---------------------------------------------------------------------------

_ids = count(1)


def weber_function(table: WeberTable):
    """
    Build a pair of sympy function classes ``(G, Gp)`` backed by ``table``.

    ``diff(G(u), u) = Gp(u)`` and ``diff(Gp(u), u) = q(u) G(u)``, so symbolic
    differentiation stays closed; numeric evaluation goes through the
    tabulation via the ``_imp_`` hook used by ``lambdify``. ``G.squared_integral``
    is a third class W with ``diff(W(u), u) = G(u)**2``.
    """
    ident = next(_ids)
    spec = table.spec
    scale = sympy.nsimplify(spec.scale)
    offset = sympy.nsimplify(spec.offset)

    def prime_fdiff(self, argindex=1):
        u = self.args[0]
        return (spec.sign * scale * u ** spec.n + offset) * weber(u)

    def value_fdiff(self, argindex=1):
        return weber_prime(self.args[0])

    def integral_fdiff(self, argindex=1):
        return weber(self.args[0]) ** 2

    weber_prime = type(
        f"Gp{ident}",
        (sympy.Function,),
        {"nargs": 1, "_imp_": staticmethod(table.derivative), "fdiff": prime_fdiff, "table": table},
    )
    weber_integral = type(
        f"W{ident}",
        (sympy.Function,),
        {"nargs": 1, "_imp_": staticmethod(table.integral), "fdiff": integral_fdiff, "table": table},
    )
    weber = type(
        f"G{ident}",
        (sympy.Function,),
        {
            "nargs": 1,
            "_imp_": staticmethod(table.value),
            "fdiff": value_fdiff,
            "table": table,
            "squared_integral": weber_integral,
        },
    )
    return weber, weber_prime


@lru_cache(maxsize=64)
def weber_pair(spec: WeberSpec):
    """Cached ``weber_function(weber_solve(spec))`` so equal specs share one tabulation."""
    return weber_function(weber_solve(spec))
