"""
Configuration loading for bohmlab.

Values are resolved in three layers: built-in defaults, then ``BOHMLAB_*``
environment variables (a ``.env`` file in the working directory is loaded
first), then explicit command-line flags.

Supported environment variables:

    BOHMLAB_THREADS   worker cap for sweeps and verification suites
    BOHMLAB_HBAR      default reduced Planck constant (natural units: 1)
    BOHMLAB_MASS      default particle mass (natural units: 1)
    BOHMLAB_TOL       default finite-difference residual tolerance
    BOHMLAB_OUT       default output directory
    BOHMLAB_FORMAT    default output format, csv or json
"""

import logging
import os
from dataclasses import dataclass
from typing import Any, Dict, Optional

from dotenv import load_dotenv

from .errors import ConfigError

logger = logging.getLogger(__name__)

OUTPUT_FORMATS = ("csv", "json")


@dataclass(frozen=True)
class PhysicalConstants:
    """Reduced Planck constant and particle mass."""

    hbar: float = 1.0
    mass: float = 1.0

    def __post_init__(self):
        for field, value in (("hbar", self.hbar), ("mass", self.mass)):
            if not value > 0:
                raise ConfigError(f"{field} must be strictly positive, got {value}")

    def as_dict(self) -> Dict[str, float]:
        return {"hbar": self.hbar, "mass": self.mass}


@dataclass(frozen=True)
class Tolerances:
    """Pass/fail thresholds for the verification checks."""

    symbolic: float = 1e-10
    residual: float = 1e-6
    order: float = 2.0
    order_slack: float = 0.3
    vvm: float = 1e-6
    bohm: float = 1e-8

    def __post_init__(self):
        for field in ("symbolic", "residual", "vvm", "bohm", "order_slack"):
            value = getattr(self, field)
            if not value > 0:
                raise ConfigError(f"Tolerance '{field}' must be positive, got {value}")

    def order_ok(self, order: Optional[float]) -> bool:
        if order is None:
            return True
        return abs(order - self.order) <= self.order_slack


@dataclass(frozen=True)
class RunSettings:
    """Settings shared by every command."""

    threads: int = 1
    out_dir: str = "bohmlab_out"
    fmt: str = "csv"
    constants: PhysicalConstants = PhysicalConstants()
    tolerances: Tolerances = Tolerances()

    def __post_init__(self):
        if self.threads < 1:
            raise ConfigError(f"threads must be >= 1, got {self.threads}")
        if self.fmt not in OUTPUT_FORMATS:
            raise ConfigError(
                f"Invalid output format: {self.fmt}. Supported: {', '.join(OUTPUT_FORMATS)}"
            )


def _env_float(name: str, default: float) -> float:
    raw = os.getenv(name, "").strip()
    if not raw:
        return default
    try:
        return float(raw)
    except ValueError:
        logger.warning("Ignoring %s=%r (not a number); using %s", name, raw, default)
        return default


def _env_int(name: str, default: int) -> int:
    raw = os.getenv(name, "").strip()
    if not raw:
        return default
    try:
        value = int(raw)
    except ValueError:
        logger.warning("Ignoring %s=%r (not an integer); using %s", name, raw, default)
        return default
    if value < 1:
        logger.warning("Ignoring %s=%r (must be >= 1); using %s", name, raw, default)
        return default
    return value


def default_threads() -> int:
    return max(1, os.cpu_count() or 1)


def load_constants(
    hbar: Optional[float] = None, mass: Optional[float] = None
) -> PhysicalConstants:
    """Physical constants from flags, falling back to BOHMLAB_HBAR / BOHMLAB_MASS."""
    load_dotenv()
    return PhysicalConstants(
        hbar=hbar if hbar is not None else _env_float("BOHMLAB_HBAR", 1.0),
        mass=mass if mass is not None else _env_float("BOHMLAB_MASS", 1.0),
    )


def load_settings(overrides: Optional[Dict[str, Any]] = None) -> RunSettings:
    """
    Resolve run settings from defaults, environment and explicit overrides.

    Args:
        overrides: values given on the command line; ``None`` entries are ignored

    Returns:
        Validated RunSettings
    """
    load_dotenv()
    given = {k: v for k, v in (overrides or {}).items() if v is not None}

    fmt = given.get("fmt") or os.getenv("BOHMLAB_FORMAT", "csv").strip().lower() or "csv"
    if fmt not in OUTPUT_FORMATS:
        logger.warning("Ignoring BOHMLAB_FORMAT=%r; using csv", fmt)
        fmt = "csv"

    tolerances = Tolerances(
        residual=given.get("tol", _env_float("BOHMLAB_TOL", Tolerances.residual))
    )
    return RunSettings(
        threads=given.get("threads", _env_int("BOHMLAB_THREADS", default_threads())),
        out_dir=given.get("out_dir") or os.getenv("BOHMLAB_OUT", "bohmlab_out").strip()
        or "bohmlab_out",
        fmt=fmt,
        constants=load_constants(given.get("hbar"), given.get("mass")),
        tolerances=tolerances,
    )
