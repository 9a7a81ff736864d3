"""
Free-particle families (V = 0).

Vanishing Bohm potential: the plane wave and the non-separable cubic packet.
Non-vanishing Bohm potential: the exponential packet, the accelerating Airy
packet and the self-similar scaling packets (Gaussian, trigonometric and
Weber profiles).
"""

from dataclasses import dataclass
from typing import Dict, Optional

import sympy

from ..errors import ConfigError
from ..expr import T, X, exact
from ..polar import Exclusion, SolutionBundle, cubic_f
from ..specfun import PARITIES, WeberSpec, weber_pair
from .base import Family, FamilyConfig, require_nonzero, require_positive

ZERO = sympy.Integer(0)


@dataclass
class PlaneWaveConfig(FamilyConfig):
    family = "plane_wave"
    title = "PlaneWave"
    section = "IV.A"
    vanishing_bohm = True

    k: float = 1.0


class PlaneWave(Family):
    """psi = exp(i(kx - k^2 t/2m)/hbar) from f = x - k t/m."""

    def build(self) -> SolutionBundle:
        k, m = exact(self.config.k), self.m
        mu = -k ** 2 * T / (2 * m)
        S = k * X + mu
        return self.bundle(
            f=cubic_f(0, 1, -k * T / m),
            A=sympy.Integer(1),
            S=S,
            S2=S,
            mu=mu,
            V_declared=ZERO,
            V_B_declared=ZERO,
            vanishing_bohm=True,
        )

    def derived(self) -> Dict[str, float]:
        return {"phase_velocity": self.config.k / (2 * self.consts.mass)}


@dataclass
class NonSeparableFreeConfig(FamilyConfig):
    family = "non_separable_free"
    title = "NonSeparableFree"
    section = "IV.B"
    vanishing_bohm = True
    window = (-0.25, 0.25, 1.5, 1.7)

    alpha: float = 1.0
    beta: float = 1.0
    gamma: float = 0.0
    ti: float = 0.0

    def validate(self):
        require_positive(self, "alpha", "beta")


class NonSeparableFree(Family):
    """
    Cubic f with a = sqrt(alpha/tau^3), b = sqrt(beta/tau), c = gamma,
    tau = t - t_i: A = a x + b, S = m x^2 / (2 tau). gamma only shifts f.
    """

    def build(self) -> SolutionBundle:
        cfg = self.config
        tau = T - exact(cfg.ti)
        a = sympy.sqrt(exact(cfg.alpha)) * tau ** sympy.Rational(-3, 2)
        b = sympy.sqrt(exact(cfg.beta)) * tau ** sympy.Rational(-1, 2)
        A = a * X + b
        return self.bundle(
            f=cubic_f(a, b, exact(cfg.gamma)),
            A=A,
            S=self.m * X ** 2 / (2 * tau),
            mu=ZERO,
            V_declared=ZERO,
            V_B_declared=ZERO,
            vanishing_bohm=True,
            singularities=(
                Exclusion(tau, "t = t_i"),
                Exclusion(A, "a x + b <= 0", threshold=0.0, kind="non_positive", polar=True),
            ),
        )


@dataclass
class ExponentialFreeConfig(FamilyConfig):
    family = "exponential_free"
    title = "ExponentialFree"
    section = "V.A"

    lam: float = 1.0
    k: float = 1.0

    def validate(self):
        require_nonzero(self, "lam", "k")


class ExponentialFree(Family):
    """
    f = exp(lam x - hbar lam k t / m) / lam: constant Bohm potential
    -hbar^2 lam^2 / 8m and phase velocity (hbar k / 2m)(1 - lam^2 / 4k^2).
    """

    def build(self) -> SolutionBundle:
        lam, k = exact(self.config.lam), exact(self.config.k)
        hbar, m = self.hbar, self.m
        E = lam * X - hbar * lam * k * T / m
        mu = -hbar ** 2 * T / (2 * m) * (k ** 2 - lam ** 2 / 4)
        return self.bundle(
            f=sympy.exp(E) / lam,
            A=sympy.exp(E / 2),
            S=hbar * k * X + mu,
            mu=mu,
            V_declared=ZERO,
            V_B_declared=-hbar ** 2 * lam ** 2 / (8 * m),
        )

    def derived(self) -> Dict[str, float]:
        lam, k = self.config.lam, self.config.k
        hbar, m = self.consts.hbar, self.consts.mass
        return {
            "phase_velocity": hbar * k / (2 * m) * (1 - lam ** 2 / (4 * k ** 2)),
            "bohm_potential": -(hbar ** 2) * lam ** 2 / (8 * m),
            "vanishing_bohm_residual": lam ** 2 / 2,
        }


@dataclass
class AiryPacketConfig(FamilyConfig):
    family = "airy_packet"
    title = "AiryPacket"
    section = "V.B"
    accelerating = True
    window = (-0.5, 0.0, 0.5, 0.7)
    trajectory_span = (0.0, 2.0)

    beta: float = 1.0

    def validate(self):
        require_nonzero(self, "beta")


class AiryPacket(Family):
    """
    Free Airy packet Ai((beta/hbar^(2/3))(x - beta^3 t^2 / 4m^2)) whose
    profile accelerates at beta^3 / 2m^2 with V = 0.
    """

    def build(self) -> SolutionBundle:
        beta, hbar, m = exact(self.config.beta), self.hbar, self.m
        h23 = hbar ** sympy.Rational(2, 3)
        shift = X - beta ** 3 * T ** 2 / (4 * m ** 2)
        y = beta / h23 * shift
        mu = -beta ** 6 * T ** 3 / (12 * m ** 3)
        G, Gp = sympy.airyai(y), sympy.airyaiprime(y)
        return self.bundle(
            f=h23 / beta * (y * G ** 2 - Gp ** 2),
            A=G,
            S=beta ** 3 * T * X / (2 * m) + mu,
            mu=mu,
            V_declared=ZERO,
            V_B_declared=-beta ** 3 / (2 * m) * shift,
            singularities=(Exclusion(G, "Ai(y) <= 0", threshold=0.0, kind="non_positive", polar=True),),
        )

    def declared_acceleration(self) -> sympy.Expr:
        return exact(self.config.beta) ** 3 / (2 * self.m ** 2)

    def derived(self) -> Dict[str, float]:
        return {"acceleration": self.config.beta ** 3 / (2 * self.consts.mass ** 2)}


SCALING_KINDS = ("gaussian", "trig", "weber")


@dataclass
class ScalingPacketConfig(FamilyConfig):
    """
    Self-similar packets sigma^(-1/2) Z(x/sigma) with Z'' = (z1 y^2 + z2) Z.

    ``gaussian`` takes z1 = 4q^2, z2 = -2q; ``trig`` has z1 = 0; ``weber``
    takes z1 > 0 and z2 explicitly and tabulates Z.
    """

    family = "scaling_packet"
    title = "ScalingPacket"
    section = "V.C"
    window = (-0.25, 0.25, 1.0, 1.2)

    kind: str = "gaussian"
    alpha: float = 1.0
    beta: float = 0.0
    q: float = 0.25
    zeta1: Optional[float] = None
    zeta2: Optional[float] = None
    parity: str = "even"

    def validate(self):
        if self.kind not in SCALING_KINDS:
            raise ConfigError(f"scaling_packet.kind must be one of {SCALING_KINDS}, got {self.kind!r}")
        if self.parity not in PARITIES:
            raise ConfigError(f"scaling_packet.parity must be one of {PARITIES}, got {self.parity!r}")
        require_positive(self, "alpha")
        if self.kind == "gaussian":
            require_positive(self, "q")
        if self.kind == "weber" and self.zeta1 is not None and not self.zeta1 > 0:
            raise ConfigError(f"scaling_packet.zeta1 must be > 0 for the arctan gauge, got {self.zeta1}")

    def coefficients(self):
        """(zeta1, zeta2) of the profile equation."""
        if self.kind == "gaussian":
            return 4 * self.q ** 2, -2 * self.q
        if self.kind == "trig":
            return 0.0, self.zeta2 if self.zeta2 is not None else -0.5
        return (
            self.zeta1 if self.zeta1 is not None else 0.25,
            self.zeta2 if self.zeta2 is not None else -0.5,
        )


class ScalingPacket(Family):
    def _weber(self, z1, z2):
        return weber_pair(WeberSpec(n=2, sign=1, parity=self.config.parity, scale=float(z1), offset=float(z2)))[0]

    def _profile(self, y: sympy.Expr, z1, z2) -> sympy.Expr:
        cfg = self.config
        if cfg.kind == "gaussian":
            return sympy.exp(-exact(cfg.q) * y ** 2)
        if cfg.kind == "trig":
            if z2 == 0:
                return sympy.Integer(1) if cfg.parity == "even" else y
            w = sympy.sqrt(abs(exact(z2)))
            if z2 < 0:
                return sympy.cos(w * y) if cfg.parity == "even" else sympy.sin(w * y)
            return sympy.cosh(w * y) if cfg.parity == "even" else sympy.sinh(w * y)
        return self._weber(z1, z2)(y)

    def _generating_function(self, y: sympy.Expr, z1, z2) -> sympy.Expr:
        """W(x/sigma) with W' = Z^2, so that f' = A^2."""
        cfg = self.config
        if cfg.kind == "gaussian":
            q = exact(cfg.q)
            return sympy.sqrt(sympy.pi / (8 * q)) * sympy.erf(sympy.sqrt(2 * q) * y)
        if cfg.kind == "trig":
            u = sympy.Dummy("u", real=True)
            return sympy.integrate(self._profile(u, z1, z2) ** 2, u).subs(u, y)
        return self._weber(z1, z2).squared_integral(y)

    def build(self) -> SolutionBundle:
        cfg = self.config
        hbar, m = self.hbar, self.m
        alpha, beta = exact(cfg.alpha), exact(cfg.beta)
        z1, z2 = cfg.coefficients()
        Z1, Z2 = exact(z1), exact(z2)
        drift = 2 * alpha * T + beta

        singularities = ()
        if cfg.kind == "trig":
            sigma = drift / (2 * sympy.sqrt(alpha))
            mu = -hbar ** 2 * Z2 / (m * drift)
            singularities = (Exclusion(drift, "2 alpha t + beta = 0"),)
        else:
            sigma2 = alpha * T ** 2 + beta * T + beta ** 2 / (4 * alpha) + hbar ** 2 * Z1 / (alpha * m ** 2)
            sigma = sympy.sqrt(sigma2)
            root = sympy.sqrt(Z1)
            mu = hbar * Z2 / (2 * root) * sympy.atan(m * drift / (2 * hbar * root))

        y = X / sigma
        A = sigma ** sympy.Rational(-1, 2) * self._profile(y, z1, z2)
        if cfg.kind != "gaussian":
            singularities += (Exclusion(A, "Z(y) <= 0", threshold=0.0, kind="non_positive", polar=True),)
        if cfg.kind == "weber":
            bounds = self._weber(z1, z2).table.spec.y_range
            singularities += (Exclusion(y, f"x/sigma outside {bounds}", kind="outside", bounds=bounds),)
        return self.bundle(
            f=self._generating_function(y, z1, z2),
            A=A,
            S=m * drift * X ** 2 / (4 * sigma ** 2) + mu,
            mu=mu,
            V_declared=ZERO,
            V_B_declared=-hbar ** 2 * (Z1 * y ** 2 + Z2) / (2 * m * sigma ** 2),
            singularities=singularities,
            params={**cfg.params(), "zeta1": z1, "zeta2": z2},
        )
