"""
Harmonic-oscillator families and the exponential force family.

All four have a vanishing Bohm potential: OscillatorVVM reproduces the
Van Vleck-Morette amplitude of the oscillator propagator; OscillatorAlt1 and
OscillatorAlt3 share its phase with amplitudes that are not VVM; ExpCubic
decays every cubic coefficient exponentially and yields a time-independent
force.
"""

from dataclasses import dataclass
from typing import Dict, Optional

import sympy

from ..errors import ConfigError
from ..expr import T, X, XI, exact
from ..polar import Exclusion, SolutionBundle, cubic_f
from .base import Family, FamilyConfig, require_positive, theta

ZERO = sympy.Integer(0)


def _harmonic(m, omega) -> sympy.Expr:
    return m * exact(omega) ** 2 * X ** 2 / 2


def _oscillator_phase(m, omega, th) -> sympy.Expr:
    """-m omega x^2 tan(theta) / 2, the phase shared by the alternative amplitudes."""
    return -m * exact(omega) * X ** 2 * sympy.tan(th) / 2


@dataclass
class OscillatorVVMConfig(FamilyConfig):
    family = "oscillator_vvm"
    title = "OscillatorVVM"
    section = "VI.A"
    vanishing_bohm = True

    omega: float = 1.0
    alpha: float = 1.0
    ti: float = 0.0
    xi: float = 0.0

    def validate(self):
        require_positive(self, "omega", "alpha")


class OscillatorVVM(Family):
    """
    Propagator-like solution from x_i at t_i: A = sqrt(alpha / sin theta),
    S = m omega ((x^2 + x_i^2) cos theta - 2 x x_i) / (2 sin theta).

    A^2 over the VVM determinant is the constant alpha / (m omega).
    """

    def two_point_phase(self) -> sympy.Expr:
        cfg = self.config
        m, w = self.m, exact(cfg.omega)
        th = theta(cfg.omega, cfg.ti)
        return m * w * (X ** 2 + XI ** 2) / (2 * sympy.tan(th)) - m * w * X * XI / sympy.sin(th)

    def build(self) -> SolutionBundle:
        cfg = self.config
        m, w, alpha, xi = self.m, exact(cfg.omega), exact(cfg.alpha), exact(cfg.xi)
        th = theta(cfg.omega, cfg.ti)
        S2 = self.two_point_phase()
        return self.bundle(
            f=cubic_f(0, sympy.sqrt(alpha / sympy.sin(th)), -alpha * xi * sympy.cot(th)),
            A=sympy.sqrt(alpha / sympy.sin(th)),
            S=S2.subs(XI, xi),
            S2=S2,
            mu=m * w * xi ** 2 / (2 * sympy.tan(th)),
            V_declared=_harmonic(m, cfg.omega),
            V_B_declared=ZERO,
            vanishing_bohm=True,
            singularities=(Exclusion(sympy.sin(th), "sin(omega (t - t_i)) = 0"),),
        )

    def derived(self) -> Dict[str, float]:
        return {"vvm_ratio": self.config.alpha / (self.consts.mass * self.config.omega)}


@dataclass
class OscillatorAlt1Config(FamilyConfig):
    family = "oscillator_alt1"
    title = "OscillatorAlt1"
    section = "VI.B"
    vanishing_bohm = True

    omega: float = 1.0
    ti: float = 0.0

    def validate(self):
        require_positive(self, "omega")


class OscillatorAlt1(Family):
    """f = x / cos(theta): A = cos(theta)^(-1/2), trajectories x0 cos(theta)."""

    def build(self) -> SolutionBundle:
        cfg = self.config
        th = theta(cfg.omega, cfg.ti)
        S = _oscillator_phase(self.m, cfg.omega, th)
        return self.bundle(
            f=X / sympy.cos(th),
            A=sympy.cos(th) ** sympy.Rational(-1, 2),
            S=S,
            S2=S,
            mu=ZERO,
            V_declared=_harmonic(self.m, cfg.omega),
            V_B_declared=ZERO,
            vanishing_bohm=True,
            singularities=(Exclusion(sympy.cos(th), "cos(omega (t - t_i)) = 0"),),
        )


@dataclass
class OscillatorAlt3Config(FamilyConfig):
    family = "oscillator_alt3"
    title = "OscillatorAlt3"
    section = "VI.C"
    vanishing_bohm = True
    window = (0.25, 0.75, 0.5, 0.7)

    omega: float = 1.0
    ti: float = 0.0

    def validate(self):
        require_positive(self, "omega")


class OscillatorAlt3(Family):
    """f = x^3 / (3 cos^3 theta): A = x cos(theta)^(-3/2), same phase as Alt1."""

    def build(self) -> SolutionBundle:
        cfg = self.config
        th = theta(cfg.omega, cfg.ti)
        S = _oscillator_phase(self.m, cfg.omega, th)
        A = X * sympy.cos(th) ** sympy.Rational(-3, 2)
        return self.bundle(
            f=X ** 3 / (3 * sympy.cos(th) ** 3),
            A=A,
            S=S,
            S2=S,
            mu=ZERO,
            V_declared=_harmonic(self.m, cfg.omega),
            V_B_declared=ZERO,
            vanishing_bohm=True,
            singularities=(
                Exclusion(sympy.cos(th), "cos(omega (t - t_i)) = 0"),
                Exclusion(A, "x cos^(-3/2) <= 0", threshold=0.0, kind="non_positive", polar=True),
            ),
        )


# preset -> coefficients forced to zero
EXP_CUBIC_PRESETS = {
    "ac": ("a", "c"),
    "bc": ("b", "c"),
    "a": ("a",),
    "b": ("b",),
    "free": ("mu",),
}


@dataclass
class ExpCubicConfig(FamilyConfig):
    """
    Cubic f with a e^(-mu t), b e^(-mu t), c e^(-2 mu t).

    A preset zeroes the named coefficients before validation.
    """

    family = "exp_cubic"
    title = "ExpCubic"
    section = "VI.D"
    vanishing_bohm = True

    a: float = 1.0
    b: float = 1.0
    c: float = 0.0
    mu: float = 0.5
    preset: Optional[str] = None

    def validate(self):
        if self.preset is not None:
            if self.preset not in EXP_CUBIC_PRESETS:
                raise ConfigError(
                    f"exp_cubic.preset must be one of {sorted(EXP_CUBIC_PRESETS)}, got {self.preset!r}"
                )
            for name in EXP_CUBIC_PRESETS[self.preset]:
                setattr(self, name, 0.0)
        if self.a == 0 and self.b == 0:
            raise ConfigError("exp_cubic needs a or b non-zero (f' = (a x + b)^2 e^(-2 mu t))")

    def current_window(self):
        x_min, x_max, t_min, t_max = super().current_window()
        if self.b == 0:
            return 0.25, 0.75, t_min, t_max
        return x_min, x_max, t_min, t_max


class ExpCubic(Family):
    """
    g = (a^2/3) x^3 + a b x^2 + b^2 x + c and f = e^(-2 mu t) g, so that
    S = 2 m mu int (g/g') dx, V = -2 m mu^2 (g/g')^2 and the force
    F = 2 m mu^2 ((g/g')^2)' does not depend on t.
    """

    def _g(self) -> sympy.Expr:
        cfg = self.config
        return cubic_f(exact(cfg.a), exact(cfg.b), exact(cfg.c))

    def _ratio(self) -> sympy.Expr:
        g = self._g()
        return sympy.cancel(g / sympy.diff(g, X))

    def _phase_profile(self) -> sympy.Expr:
        """Antiderivative of g/g', anchored at x = 0 when it is finite there."""
        G = sympy.integrate(self._ratio(), X)
        at_zero = sympy.limit(G, X, 0)
        if at_zero.is_finite:
            G = G - at_zero
        return G

    def build(self) -> SolutionBundle:
        cfg = self.config
        m, mu = self.m, exact(cfg.mu)
        decay = sympy.exp(-mu * T)
        A = (exact(cfg.a) * X + exact(cfg.b)) * decay
        return self.bundle(
            f=sympy.exp(-2 * mu * T) * self._g(),
            A=A,
            S=2 * m * mu * self._phase_profile(),
            mu=ZERO,
            V_declared=-2 * m * mu ** 2 * self._ratio() ** 2,
            V_B_declared=ZERO,
            vanishing_bohm=True,
            singularities=(Exclusion(A, "a x + b <= 0", threshold=0.0, kind="non_positive"),),
        )

    def force(self) -> sympy.Expr:
        """-dV/dx from the closed-form potential."""
        return 2 * self.m * exact(self.config.mu) ** 2 * sympy.diff(self._ratio() ** 2, X)

    def expected_force(self) -> sympy.Expr:
        """Published closed force for the active preset; the general force otherwise."""
        cfg = self.config
        m, mu = self.m, exact(cfg.mu)
        a, b, c = exact(cfg.a), exact(cfg.b), exact(cfg.c)
        k = 4 * m * mu ** 2
        if cfg.preset == "ac":
            return k * X
        if cfg.preset == "bc":
            return k * X / 9
        if cfg.preset == "a":
            return k * (X + c / b ** 2)
        if cfg.preset == "b":
            return k * (X / 9 - c / (3 * a ** 2 * X ** 2) - 2 * c ** 2 / (a ** 4 * X ** 5))
        if cfg.preset == "free":
            return ZERO
        return self.force()
