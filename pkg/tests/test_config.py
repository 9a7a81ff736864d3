import pytest

from bohmlab.config import PhysicalConstants, RunSettings, Tolerances, load_constants, load_settings
from bohmlab.errors import ConfigError


def test_defaults_are_natural_units():
    settings = load_settings()
    assert settings.constants == PhysicalConstants(1.0, 1.0)
    assert settings.fmt == "csv"
    assert settings.tolerances.residual == pytest.approx(1e-6)
    assert settings.threads >= 1


def test_environment_then_flags(monkeypatch):
    monkeypatch.setenv("BOHMLAB_HBAR", "2.0")
    monkeypatch.setenv("BOHMLAB_FORMAT", "json")
    monkeypatch.setenv("BOHMLAB_TOL", "1e-5")
    settings = load_settings({"mass": 3.0})
    assert settings.constants.hbar == 2.0
    assert settings.constants.mass == 3.0
    assert settings.fmt == "json"
    assert settings.tolerances.residual == pytest.approx(1e-5)

    overridden = load_settings({"hbar": 0.5, "fmt": "csv", "tol": 1e-7})
    assert overridden.constants.hbar == 0.5
    assert overridden.fmt == "csv"
    assert overridden.tolerances.residual == pytest.approx(1e-7)


def test_invalid_environment_falls_back(monkeypatch):
    monkeypatch.setenv("BOHMLAB_MASS", "heavy")
    monkeypatch.setenv("BOHMLAB_THREADS", "0")
    monkeypatch.setenv("BOHMLAB_FORMAT", "xml")
    settings = load_settings()
    assert settings.constants.mass == 1.0
    assert settings.threads >= 1
    assert settings.fmt == "csv"


@pytest.mark.parametrize("hbar, mass", [(0.0, 1.0), (1.0, -2.0)])
def test_constants_must_be_positive(hbar, mass):
    with pytest.raises(ConfigError):
        PhysicalConstants(hbar, mass)
    with pytest.raises(ConfigError):
        load_constants(hbar, mass)


def test_order_window():
    tol = Tolerances()
    assert tol.order_ok(2.2)
    assert tol.order_ok(None)
    assert not tol.order_ok(1.5)


def test_run_settings_validation():
    with pytest.raises(ConfigError):
        RunSettings(threads=0)
    with pytest.raises(ConfigError):
        RunSettings(fmt="xlsx")
