"""
Base classes for solution families.

Each family is a pair: a ``FamilyConfig`` dataclass holding and validating
its parameters, and a ``Family`` subclass that turns a config plus physical
constants into a ``SolutionBundle``.
"""

from abc import ABC, abstractmethod
from dataclasses import asdict, dataclass, fields
from typing import Any, ClassVar, Dict, Optional, Tuple

import sympy

from ..config import PhysicalConstants
from ..errors import ConfigError
from ..expr import HBAR, MASS, T, X, exact, parse
from ..numerics import Grid
from ..polar import SolutionBundle

SIGN_ALIASES = {"+": 1, "-": -1, "+1": 1, "1": 1, "-1": -1, 1: 1, -1: -1, "plus": 1, "minus": -1}

DEFAULT_NX = 512
DEFAULT_NT = 256


def parse_sign(value) -> int:
    try:
        return SIGN_ALIASES[value if not isinstance(value, float) else int(value)]
    except (KeyError, TypeError, ValueError):
        raise ConfigError(f"sign must be '+' or '-', got {value!r}") from None


def require_positive(cfg, *names: str) -> None:
    for name in names:
        value = getattr(cfg, name)
        if not value > 0:
            raise ConfigError(f"{cfg.family}.{name} must be > 0, got {value}")


def require_nonzero(cfg, *names: str) -> None:
    for name in names:
        value = getattr(cfg, name)
        if value == 0:
            raise ConfigError(f"{cfg.family}.{name} must be non-zero")


def require_integer(cfg, name: str, minimum: int = 1) -> None:
    value = getattr(cfg, name)
    if int(value) != value or value < minimum:
        raise ConfigError(f"{cfg.family}.{name} must be an integer >= {minimum}, got {value}")


def time_function(text: str, family: str, name: str) -> sympy.Expr:
    """Parse a function of t only (such as zeta(t))."""
    e = parse(text).doit() if isinstance(text, str) else exact(text)
    if X in e.free_symbols:
        raise ConfigError(f"{family}.{name} must depend on t only, got '{text}'")
    return e


@dataclass
class FamilyConfig:
    """
    Tagged parameter record. Subclasses set the class-level descriptor
    fields and add their parameters as dataclass fields with defaults.
    """

    family: ClassVar[str] = ""
    title: ClassVar[str] = ""
    section: ClassVar[str] = ""
    vanishing_bohm: ClassVar[bool] = False
    accelerating: ClassVar[bool] = False
    # default window (x_min, x_max, t_min, t_max)
    window: ClassVar[Tuple[float, float, float, float]] = (-0.25, 0.25, 0.5, 0.7)
    # time span for Bohmian trajectories; None means the window times
    trajectory_span: ClassVar[Optional[Tuple[float, float]]] = None

    def __post_init__(self):
        self.validate()

    def validate(self) -> None:
        """Raise ConfigError on an invalid parameter domain."""

    def params(self) -> Dict[str, Any]:
        return asdict(self)

    def to_dict(self) -> Dict[str, Any]:
        return {"family": self.family, "params": self.params()}

    def current_window(self) -> Tuple[float, float, float, float]:
        """Default (x_min, x_max, t_min, t_max), with times shifted by t_i when the family has one."""
        x_min, x_max, t_min, t_max = self.window
        ti = getattr(self, "ti", 0.0)
        return x_min, x_max, t_min + ti, t_max + ti

    def default_grid(self, nx: int = DEFAULT_NX, nt: int = DEFAULT_NT) -> Grid:
        x_min, x_max, t_min, t_max = self.current_window()
        return Grid(x_min, x_max, nx, t_min, t_max, nt)

    @classmethod
    def schema(cls) -> Dict[str, Any]:
        return {f.name: f.default for f in fields(cls)}


class Family(ABC):
    """Builder for one family of exact solutions."""

    def __init__(self, config: FamilyConfig, consts: PhysicalConstants):
        self.config = config
        self.consts = consts
        self.hbar = exact(consts.hbar)
        self.m = exact(consts.mass)

    @abstractmethod
    def build(self) -> SolutionBundle:
        """Construct the bundle for this configuration."""

    def declared_acceleration(self) -> sympy.Expr:
        """Closed-form packet acceleration -(V' + V_B')/m as a function of t."""
        raise ConfigError(f"{self.config.family} has no declared packet acceleration")

    def derived(self) -> Dict[str, float]:
        """Closed-form scalars (velocities, coefficients) for sweeps and reports."""
        return {}

    def bundle(self, **kwargs) -> SolutionBundle:
        kwargs.setdefault("params", self.config.params())
        return SolutionBundle(family_id=self.config.family, constants=self.consts, **kwargs)

    @staticmethod
    def bind(e: Optional[sympy.Expr], hbar, m) -> Optional[sympy.Expr]:
        if e is None:
            return None
        return e.subs({HBAR: hbar, MASS: m})


def theta(omega, ti) -> sympy.Expr:
    """omega (t - t_i)."""
    return exact(omega) * (T - exact(ti))
