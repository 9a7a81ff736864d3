"""
Catalogue of exact solution families.

Families are looked up by their snake-case id (``airy_packet``) or their
title (``AiryPacket``) and built through ``FamilyFactory``.
"""

import json
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Dict, List, Mapping, Tuple, Type, Union

import sympy

from ..config import PhysicalConstants
from ..errors import ConfigError
from ..numerics import Grid
from ..polar import SolutionBundle
from .base import DEFAULT_NT, DEFAULT_NX, Family, FamilyConfig

logger = logging.getLogger(__name__)


def _registry() -> Dict[str, Tuple[Type[FamilyConfig], Type[Family]]]:
    from .forced import (
        AiryForced,
        AiryForcedConfig,
        GeneralPower,
        GeneralPowerConfig,
        PowerCosine,
        PowerCosineConfig,
        WeberOscillator,
        WeberOscillatorConfig,
    )
    from .free import (
        AiryPacket,
        AiryPacketConfig,
        ExponentialFree,
        ExponentialFreeConfig,
        NonSeparableFree,
        NonSeparableFreeConfig,
        PlaneWave,
        PlaneWaveConfig,
        ScalingPacket,
        ScalingPacketConfig,
    )
    from .oscillator import (
        ExpCubic,
        ExpCubicConfig,
        OscillatorAlt1,
        OscillatorAlt1Config,
        OscillatorAlt3,
        OscillatorAlt3Config,
        OscillatorVVM,
        OscillatorVVMConfig,
    )

    pairs = [
        (PlaneWaveConfig, PlaneWave),
        (NonSeparableFreeConfig, NonSeparableFree),
        (ExponentialFreeConfig, ExponentialFree),
        (AiryPacketConfig, AiryPacket),
        (ScalingPacketConfig, ScalingPacket),
        (OscillatorVVMConfig, OscillatorVVM),
        (OscillatorAlt1Config, OscillatorAlt1),
        (OscillatorAlt3Config, OscillatorAlt3),
        (ExpCubicConfig, ExpCubic),
        (PowerCosineConfig, PowerCosine),
        (AiryForcedConfig, AiryForced),
        (WeberOscillatorConfig, WeberOscillator),
        (GeneralPowerConfig, GeneralPower),
    ]
    return {config_class.family: (config_class, family_class) for config_class, family_class in pairs}


@dataclass(frozen=True)
class FamilyDescriptor:
    id: str
    title: str
    section: str
    params: Dict[str, Any]
    vanishing_bohm: bool
    accelerating: bool
    default_grid: Dict[str, float]
    window: Tuple[float, float, float, float]

    def window_label(self) -> str:
        x_min, x_max, t_min, t_max = self.window
        return f"x[{x_min:g},{x_max:g}] t[{t_min:g},{t_max:g}]"

    def as_dict(self) -> Dict[str, Any]:
        return {
            "id": self.id,
            "title": self.title,
            "section": self.section,
            "params": self.params,
            "vanishing_bohm": self.vanishing_bohm,
            "accelerating": self.accelerating,
            "default_grid": self.default_grid,
            "window": list(self.window),
        }


def family_ids() -> List[str]:
    return list(_registry())


def resolve_family(name: str) -> str:
    """Canonical id for a snake-case id or a title."""
    registry = _registry()
    if name in registry:
        return name
    for family_id, (config_class, _) in registry.items():
        if name == config_class.title or name.lower() == config_class.title.lower():
            return family_id
    raise ConfigError(f"Unknown family '{name}'. Available: {', '.join(registry)}")


def list_families(section: str = None) -> List[FamilyDescriptor]:
    """Descriptors of every registered family, optionally filtered by section ("VI" or "VI.A")."""
    descriptors = []
    prefix = section.rstrip(".") if section else None
    for family_id, (config_class, _) in _registry().items():
        if prefix and not (config_class.section == prefix or config_class.section.startswith(prefix + ".")):
            continue
        default = config_class()
        descriptors.append(
            FamilyDescriptor(
                id=family_id,
                title=config_class.title,
                section=config_class.section,
                params=config_class.schema(),
                vanishing_bohm=config_class.vanishing_bohm,
                accelerating=config_class.accelerating,
                default_grid=default.default_grid(DEFAULT_NX, DEFAULT_NT).descriptor(),
                window=default.current_window(),
            )
        )
    return descriptors


def make_config(family: str, params: Mapping[str, Any] = None) -> FamilyConfig:
    """
    Build and validate a config from a family name and a parameter mapping.

    Raises:
        ConfigError: unknown family, unknown parameter or invalid value
    """
    config_class, _ = _registry()[resolve_family(family)]
    params = dict(params or {})
    known = set(config_class.schema())
    unknown = sorted(set(params) - known)
    if unknown:
        raise ConfigError(
            f"Unknown parameter(s) for {config_class.family}: {', '.join(unknown)}. "
            f"Expected: {', '.join(sorted(known))}"
        )
    try:
        return config_class(**params)
    except TypeError as e:
        raise ConfigError(f"Invalid parameters for {config_class.family}: {e}") from None


def config_from_dict(data: Mapping[str, Any]) -> FamilyConfig:
    """Inverse of ``FamilyConfig.to_dict``."""
    if "family" not in data:
        raise ConfigError("Family config needs a 'family' key")
    return make_config(data["family"], data.get("params", {}))


def load_config(path: Union[str, Path]) -> FamilyConfig:
    """Read a ``{"family": ..., "params": {...}}`` JSON file."""
    path = Path(path)
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise ConfigError(f"Config file not found: {path}") from None
    except json.JSONDecodeError as e:
        raise ConfigError(f"Config file {path} is not valid JSON: {e}") from None
    return config_from_dict(data)


class FamilyFactory:
    """Factory for family builders keyed by config type."""

    @staticmethod
    def create(config: FamilyConfig, consts: PhysicalConstants = PhysicalConstants()) -> Family:
        registry = _registry()
        entry = registry.get(config.family)
        if entry is None:
            raise ConfigError(f"Family not supported: {config.family}")
        return entry[1](config, consts)


def build(config: FamilyConfig, consts: PhysicalConstants = PhysicalConstants()) -> SolutionBundle:
    """Construct the solution bundle for ``config``."""
    logger.debug("Building %s with %s", config.family, config.params())
    return FamilyFactory.create(config, consts).build()


def declared_acceleration(config: FamilyConfig, consts: PhysicalConstants = PhysicalConstants()) -> sympy.Expr:
    """
    Closed-form packet acceleration for the accelerating families.

    Raises:
        ConfigError: the family declares none
    """
    return FamilyFactory.create(config, consts).declared_acceleration()


def derived_quantities(config: FamilyConfig, consts: PhysicalConstants = PhysicalConstants()) -> Dict[str, float]:
    return FamilyFactory.create(config, consts).derived()


def default_grid(config: FamilyConfig, nx: int = DEFAULT_NX, nt: int = DEFAULT_NT) -> Grid:
    return config.default_grid(nx, nt)


__all__ = [
    "Family",
    "FamilyConfig",
    "FamilyDescriptor",
    "FamilyFactory",
    "build",
    "config_from_dict",
    "declared_acceleration",
    "default_grid",
    "derived_quantities",
    "family_ids",
    "list_families",
    "load_config",
    "make_config",
    "resolve_family",
]
