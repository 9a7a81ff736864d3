"""
Families with non-trivial external potentials.

PowerCosine adds an inverse-square term to the harmonic oscillator. The
remaining three share one construction: the amplitude is a profile G of the
moving coordinate y = beta x / hbar^(2/3) + zeta(t) with G'' = +-y^n G, and
the phase absorbs the motion of zeta:

    S = -(hbar^(2/3) m / beta) x zeta_dot + mu(t)
    V = +-(hbar^(2/3) beta^2 / 2m)(y^n - zeta^n) + (hbar^(2/3) m / beta) x zeta_ddot

n = 1 gives Airy profiles (AiryForced), n = 2 with zeta_ddot = -+omega^2 zeta
gives the oscillator and inverted oscillator (WeberOscillator); general n is
tabulated (GeneralPower).
"""

import logging
from abc import abstractmethod
from dataclasses import dataclass
from typing import Callable, Dict, Optional, Tuple, Union

import sympy

from ..errors import ConfigError
from ..expr import T, X, exact
from ..polar import Exclusion, SolutionBundle
from ..specfun import WeberSpec, weber_pair
from .base import Family, FamilyConfig, parse_sign, require_integer, require_nonzero, require_positive, theta, time_function

logger = logging.getLogger(__name__)


@dataclass
class PowerCosineConfig(FamilyConfig):
    family = "power_cosine"
    title = "PowerCosine"
    section = "VII.A"
    window = (0.5, 1.0, 0.5, 0.7)

    n: int = 2
    omega: float = 1.0
    ti: float = 0.0

    def validate(self):
        require_integer(self, "n")
        require_positive(self, "omega")
        self.n = int(self.n)


class PowerCosine(Family):
    """
    f = x^n / cos^n(theta): the oscillator phase with amplitude
    sqrt(n x^(n-1)) cos^(-n/2)(theta) and the potential

        V = m omega^2 x^2 / 2 + hbar^2 (n-1)(n-3) / (8 m x^2)

    whose inverse-square term vanishes only for n = 1 and n = 3.
    """

    def inverse_square(self) -> sympy.Expr:
        n = self.config.n
        return self.hbar ** 2 * (n - 1) * (n - 3) / (8 * self.m)

    def build(self) -> SolutionBundle:
        cfg = self.config
        n, m, w = cfg.n, self.m, exact(cfg.omega)
        th = theta(cfg.omega, cfg.ti)
        coeff = self.inverse_square()
        exclusions = [
            Exclusion(X, "x = 0"),
            Exclusion(sympy.cos(th), "cos(omega (t - t_i)) = 0"),
        ]
        if n % 2 == 0:
            exclusions.append(Exclusion(X, "x <= 0 (even n)", threshold=0.0, kind="non_positive"))
        return self.bundle(
            f=X ** n / sympy.cos(th) ** n,
            A=sympy.sqrt(n * X ** (n - 1)) * sympy.cos(th) ** sympy.Rational(-n, 2),
            S=-m * w * X ** 2 * sympy.tan(th) / 2,
            mu=sympy.Integer(0),
            V_declared=m * w ** 2 * X ** 2 / 2 + coeff / X ** 2,
            V_B_declared=-coeff / X ** 2,
            vanishing_bohm=n in (1, 3),
            singularities=tuple(exclusions),
        )

    def derived(self) -> Dict[str, float]:
        n = self.config.n
        return {"inverse_square_coefficient": self.consts.hbar ** 2 * (n - 1) * (n - 3) / (8 * self.consts.mass)}


def _gauge(integrand: sympy.Expr, family: str) -> sympy.Expr:
    """mu(t) = int_0^t integrand; the closed form must exist."""
    tau = sympy.Dummy("tau", real=True)
    mu = sympy.integrate(integrand.subs(T, tau), (tau, 0, T))
    if mu.has(sympy.Integral):
        raise ConfigError(f"{family}: no closed form for the gauge integral of {integrand}")
    return sympy.simplify(mu)


class LinearForcing(Family):
    """
    Shared construction for amplitudes G(beta x / hbar^(2/3) + zeta(t)) with
    G'' = sign * y^n * G. Subclasses provide zeta and the profile.
    """

    power: int = 1

    def sign(self) -> int:
        return parse_sign(self.config.sign)

    @abstractmethod
    def zeta(self) -> sympy.Expr:
        """The drive zeta(t) of the moving coordinate."""

    @abstractmethod
    def profile(self) -> Union[Callable, sympy.FunctionClass]:
        """G as a callable on sympy expressions."""

    def beta(self) -> sympy.Expr:
        return exact(self.config.beta)

    def coordinate(self) -> sympy.Expr:
        return self.beta() * X / self.hbar ** sympy.Rational(2, 3) + self.zeta()

    def bohm_scale(self) -> sympy.Expr:
        """hbar^(2/3) beta^2 / 2m."""
        return self.hbar ** sympy.Rational(2, 3) * self.beta() ** 2 / (2 * self.m)

    def generating_function(self, y: sympy.Expr) -> Optional[sympy.Expr]:
        """(hbar^(2/3)/beta) W(y) with W' = G^2, for tabulated profiles."""
        integral = getattr(self.profile(), "squared_integral", None)
        if integral is None:
            return None
        return self.hbar ** sympy.Rational(2, 3) / self.beta() * integral(y)

    def exclusions(self, A: sympy.Expr, y: sympy.Expr) -> Tuple[Exclusion, ...]:
        exclusions = (Exclusion(A, "G(y) <= 0", kind="non_positive", polar=True),)
        table = getattr(self.profile(), "table", None)
        if table is not None:
            bounds = table.spec.y_range
            exclusions += (Exclusion(y, f"y outside {bounds}", kind="outside", bounds=bounds),)
        return exclusions

    def build(self) -> SolutionBundle:
        cfg = self.config
        m, n, s = self.m, self.power, self.sign()
        h23, beta = self.hbar ** sympy.Rational(2, 3), self.beta()
        zeta = self.zeta()
        zeta_dot, zeta_ddot = sympy.diff(zeta, T), sympy.diff(zeta, T, 2)
        y = self.coordinate()
        mu = _gauge(-(h23 ** 2) * m * zeta_dot ** 2 / (2 * beta ** 2) + s * self.bohm_scale() * zeta ** n, cfg.family)
        A = self.profile()(y)
        logger.debug("%s: zeta=%s mu=%s", cfg.family, zeta, mu)
        return self.bundle(
            f=self.generating_function(y),
            A=A,
            S=-(h23 * m / beta) * X * zeta_dot + mu,
            mu=mu,
            V_declared=s * self.bohm_scale() * (y ** n - zeta ** n) + (h23 * m / beta) * X * zeta_ddot,
            V_B_declared=-s * self.bohm_scale() * y ** n,
            singularities=self.exclusions(A, y),
            params={**cfg.params(), "sign": s},
        )

    def declared_acceleration(self) -> sympy.Expr:
        """-(hbar^(2/3)/beta) zeta_ddot."""
        return -(self.hbar ** sympy.Rational(2, 3)) / self.beta() * sympy.diff(self.zeta(), T, 2)


@dataclass
class AiryForcedConfig(FamilyConfig):
    family = "airy_forced"
    title = "AiryForced"
    section = "VII.B"
    accelerating = True
    window = (-0.5, 0.0, 0.5, 0.7)

    beta: float = 1.0
    zeta: str = "t^2/2"
    sign: Union[int, str] = 1

    def validate(self):
        require_nonzero(self, "beta")
        self.sign = parse_sign(self.sign)
        time_function(self.zeta, self.family, "zeta")


class AiryForced(LinearForcing):
    """
    Airy profile driven by an arbitrary zeta(t): V = -F(t) x with

        F(t) = -(hbar^(2/3) m / beta) zeta_ddot -+ beta^3 / 2m.

    zeta = -+beta^4 t^2 / (4 m^2 hbar^(2/3)) switches the force off and
    recovers the free accelerating Airy packet.
    """

    power = 1

    def zeta(self) -> sympy.Expr:
        return self.bind(time_function(self.config.zeta, self.config.family, "zeta"), self.hbar, self.m)

    def profile(self):
        if self.sign() > 0:
            return sympy.airyai
        return lambda y: sympy.airyai(-y)

    def generating_function(self, y: sympy.Expr) -> sympy.Expr:
        """(hbar^(2/3)/beta)(y G^2 -+ G'^2), whose x-derivative is G^2."""
        s = self.sign()
        G = sympy.airyai(s * y)
        Gp = sympy.airyaiprime(s * y)
        return self.hbar ** sympy.Rational(2, 3) / self.beta() * (y * G ** 2 - s * Gp ** 2)

    def force(self) -> sympy.Expr:
        """F(t) with V = -F(t) x."""
        m, beta = self.m, self.beta()
        h23 = self.hbar ** sympy.Rational(2, 3)
        return -(h23 * m / beta) * sympy.diff(self.zeta(), T, 2) - self.sign() * beta ** 3 / (2 * m)

    def vacuum_zeta(self) -> sympy.Expr:
        """The zeta(t) for which F = 0."""
        return -self.sign() * self.beta() ** 4 * T ** 2 / (4 * self.m ** 2 * self.hbar ** sympy.Rational(2, 3))


@dataclass
class WeberOscillatorConfig(FamilyConfig):
    family = "weber_oscillator"
    title = "WeberOscillator"
    section = "VII.C"
    accelerating = True

    beta: float = 1.0
    zeta0: float = 1.0
    sign: Union[int, str] = 1

    def validate(self):
        require_nonzero(self, "beta")
        self.sign = parse_sign(self.sign)


class WeberOscillator(LinearForcing):
    """
    Harmonic (+) or inverted (-) oscillator with omega = beta^2 / (m hbar^(1/3)):
    zeta = zeta0 cos(omega t) or zeta0 exp(-omega t) solves
    zeta_ddot +- omega^2 zeta = 0, leaving V = +-m omega^2 x^2 / 2.
    """

    power = 2

    def omega(self) -> sympy.Expr:
        return self.beta() ** 2 / (self.m * self.hbar ** sympy.Rational(1, 3))

    def zeta(self) -> sympy.Expr:
        zeta0, w = exact(self.config.zeta0), self.omega()
        if self.sign() > 0:
            return zeta0 * sympy.cos(w * T)
        return zeta0 * sympy.exp(-w * T)

    def profile(self):
        G, _ = weber_pair(WeberSpec(n=2, sign=self.sign()))
        return G

    def derived(self) -> Dict[str, float]:
        return {"omega": float(self.omega())}


@dataclass
class GeneralPowerConfig(FamilyConfig):
    family = "general_power"
    title = "GeneralPower"
    section = "VII.D"
    accelerating = True
    window = (-0.75, -0.25, 0.5, 0.7)

    n: int = 3
    beta: float = 1.0
    zeta: str = "t"
    sign: Union[int, str] = -1

    def validate(self):
        require_integer(self, "n")
        require_nonzero(self, "beta")
        self.n = int(self.n)
        self.sign = parse_sign(self.sign)
        time_function(self.zeta, self.family, "zeta")


class GeneralPower(LinearForcing):
    """Polynomial potentials from tabulated profiles G'' = +-y^n G."""

    @property
    def power(self) -> int:
        return self.config.n

    def zeta(self) -> sympy.Expr:
        return self.bind(time_function(self.config.zeta, self.config.family, "zeta"), self.hbar, self.m)

    def profile(self):
        G, _ = weber_pair(WeberSpec(n=self.config.n, sign=self.sign()))
        return G
