import json

import numpy as np
import pytest
import sympy

from bohmlab.config import PhysicalConstants
from bohmlab.errors import ConfigError
from bohmlab.expr import T, X, evaluate_array
from bohmlab.families import (
    FamilyFactory,
    build,
    config_from_dict,
    declared_acceleration,
    default_grid,
    derived_quantities,
    family_ids,
    list_families,
    load_config,
    make_config,
    resolve_family,
)
from bohmlab.numerics import Grid
from bohmlab.families.forced import LinearForcing
from bohmlab.polar import bohm_consistency, bohm_potential, infer_force, infer_potential
from bohmlab.suite import fitted_inverse_square

ALL_FAMILIES = [
    "plane_wave",
    "non_separable_free",
    "exponential_free",
    "airy_packet",
    "scaling_packet",
    "oscillator_vvm",
    "oscillator_alt1",
    "oscillator_alt3",
    "exp_cubic",
    "power_cosine",
    "airy_forced",
    "weber_oscillator",
    "general_power",
]


def test_catalogue():
    assert family_ids() == ALL_FAMILIES
    descriptors = list_families()
    assert [d.id for d in descriptors] == ALL_FAMILIES
    assert {d.id for d in descriptors if d.vanishing_bohm} == {
        "plane_wave",
        "non_separable_free",
        "oscillator_vvm",
        "oscillator_alt1",
        "oscillator_alt3",
        "exp_cubic",
    }
    assert [d.id for d in list_families("VI")] == ["oscillator_vvm", "oscillator_alt1", "oscillator_alt3", "exp_cubic"]
    json.dumps([d.as_dict() for d in descriptors])


@pytest.mark.parametrize("name", ["airy_packet", "AiryPacket", "airypacket"])
def test_resolve_family(name):
    assert resolve_family(name) == "airy_packet"


def test_unknown_family_and_parameters():
    with pytest.raises(ConfigError):
        resolve_family("hydrogen")
    with pytest.raises(ConfigError):
        make_config("plane_wave", {"omega": 1.0})


@pytest.mark.parametrize(
    "family, params",
    [
        ("non_separable_free", {"alpha": -1.0}),
        ("exponential_free", {"lam": 0.0}),
        ("airy_packet", {"beta": 0.0}),
        ("scaling_packet", {"kind": "lorentzian"}),
        ("scaling_packet", {"kind": "weber", "zeta1": -1.0}),
        ("oscillator_vvm", {"omega": 0.0}),
        ("exp_cubic", {"a": 0.0, "b": 0.0}),
        ("exp_cubic", {"preset": "xyz"}),
        ("power_cosine", {"n": 1.5}),
        ("airy_forced", {"sign": "sideways"}),
        ("airy_forced", {"zeta": "x*t"}),
        ("general_power", {"n": 0}),
    ],
)
def test_invalid_parameters(family, params):
    with pytest.raises(ConfigError):
        make_config(family, params)


def test_config_round_trip(tmp_path):
    config = make_config("scaling_packet", {"kind": "trig", "zeta2": -1.0})
    assert config_from_dict(config.to_dict()) == config
    path = tmp_path / "family.json"
    path.write_text(json.dumps(config.to_dict()))
    assert load_config(path) == config
    with pytest.raises(ConfigError):
        load_config(tmp_path / "missing.json")
    (tmp_path / "broken.json").write_text("{")
    with pytest.raises(ConfigError):
        load_config(tmp_path / "broken.json")


def test_window_follows_initial_time():
    grid = default_grid(make_config("oscillator_alt1", {"ti": 1.0}), 16, 8)
    assert (grid.t_min, grid.t_max) == pytest.approx((1.5, 1.7))
    assert make_config("exp_cubic", {"preset": "bc"}).default_grid(16, 8).x_min == 0.25


@pytest.mark.parametrize("family", ALL_FAMILIES)
def test_declared_bohm_potential_matches_amplitude(family):
    config = make_config(family)
    bundle = build(config)
    report = bohm_consistency(bundle, config.default_grid(48, 8))
    assert report.linf <= 1e-8


@pytest.mark.parametrize(
    "family, params, x_range",
    [
        ("airy_packet", {}, (-3.0, 3.0)),
        ("airy_forced", {}, (-3.0, 3.0)),
        ("general_power", {}, (0.5, 3.0)),
        ("scaling_packet", {"kind": "trig", "zeta2": -1.0}, (-3.0, 3.0)),
    ],
)
def test_signed_amplitudes_are_excluded(family, params, x_range):
    config = make_config(family, params)
    bundle = build(config)
    _, _, t_min, t_max = config.current_window()
    grid = Grid(*x_range, 64, t_min, t_max, 8)
    A = bundle.amplitude(grid)
    assert np.isnan(A).any()
    assert np.nanmin(A) > 0
    assert any(e.polar and e.expr == bundle.A for e in bundle.singularities)


def test_exponential_free_bohm_potential():
    bundle = build(make_config("exponential_free", {"lam": 2.0}), PhysicalConstants(hbar=1.0, mass=2.0))
    assert bundle.V_B_declared == sympy.Rational(-1, 4)
    assert sympy.simplify(bohm_potential(bundle.A, bundle.constants) - bundle.V_B_declared) == 0
    derived = derived_quantities(make_config("exponential_free"))
    assert derived["phase_velocity"] == pytest.approx(0.375)
    assert derived["vanishing_bohm_residual"] == pytest.approx(0.5)


@pytest.mark.parametrize("beta", [0.5, 1.0, 2.0])
def test_airy_bohm_potential_is_linear(beta):
    bundle = build(make_config("airy_packet", {"beta": beta}))
    slope = sympy.diff(bundle.V_B_declared, X)
    assert float(slope) == pytest.approx(-(beta ** 3) / 2, abs=1e-8)
    assert float(declared_acceleration(make_config("airy_packet", {"beta": beta}))) == pytest.approx(beta ** 3 / 2)


def test_gaussian_gouy_phase():
    bundle = build(make_config("scaling_packet"))
    assert sympy.simplify(bundle.mu + sympy.atan(2 * T) / 2) == 0
    assert bundle.params["zeta1"] == pytest.approx(0.25)


def test_trig_gauge():
    bundle = build(make_config("scaling_packet", {"kind": "trig", "zeta2": -1.0}))
    assert sympy.simplify(bundle.mu - 1 / (2 * T)) == 0


@pytest.mark.parametrize(
    "preset, params, expected",
    [
        ("ac", {}, X),
        ("bc", {}, X / 9),
        ("a", {"c": 0.5}, X + sympy.Rational(1, 2)),
        ("free", {}, sympy.Integer(0)),
    ],
)
def test_exp_cubic_forces(preset, params, expected):
    config = make_config("exp_cubic", {"preset": preset, **params})
    family = FamilyFactory.create(config, PhysicalConstants())
    assert sympy.simplify(family.force() - expected) == 0
    assert sympy.simplify(family.expected_force() - family.force()) == 0


def test_exp_cubic_general_preset_b():
    config = make_config("exp_cubic", {"preset": "b", "c": 0.25})
    family = FamilyFactory.create(config, PhysicalConstants())
    assert sympy.simplify(family.expected_force() - family.force()) == 0


def test_exp_cubic_force_is_static():
    from bohmlab.polar import infer_force

    config = make_config("exp_cubic", {"preset": "ac"})
    bundle = build(config)
    grid = Grid(0.25, 0.75, 16, 0.0, 2.0, 16)
    F = infer_force(bundle.f, grid)
    xx, _ = grid.mesh()
    np.testing.assert_allclose(F, xx, atol=1e-8)
    assert np.max(np.ptp(F, axis=0)) <= 1e-8


@pytest.mark.parametrize("n", [1, 2, 3, 4])
def test_power_cosine_potential(n):
    config = make_config("power_cosine", {"n": n})
    bundle = build(config)
    grid = config.default_grid(128, 8)
    inferred = infer_potential(bundle.f, bundle.mu, bundle.masked(grid))
    xx, _ = grid.mesh()
    expected = xx ** 2 / 2 + (n - 1) * (n - 3) / (8 * xx ** 2)
    np.testing.assert_allclose(inferred, expected, rtol=0, atol=1e-6)
    coefficient = fitted_inverse_square(bundle, config.default_grid(256, 16), 1.0)
    assert coefficient == pytest.approx((n - 1) * (n - 3) / 8, abs=1e-8)
    assert bundle.vanishing_bohm == (n in (1, 3))


def test_power_cosine_degenerates_to_oscillators():
    for n, other in ((1, "oscillator_alt1"), (3, "oscillator_alt3")):
        power = build(make_config("power_cosine", {"n": n}))
        oscillator = build(make_config(other))
        assert sympy.simplify(power.V_declared - oscillator.V_declared) == 0
        assert sympy.simplify(power.S - oscillator.S) == 0


def test_airy_forced_vacuum_limit():
    config = make_config("airy_forced", {"zeta": "-t^2/4"})
    family = FamilyFactory.create(config, PhysicalConstants())
    assert sympy.simplify(family.vacuum_zeta() - family.zeta()) == 0
    assert sympy.simplify(family.force()) == 0
    bundle = family.build()
    assert sympy.simplify(bundle.V_declared) == 0
    free = build(make_config("airy_packet"))
    assert float(declared_acceleration(config)) == pytest.approx(float(declared_acceleration(make_config("airy_packet"))))
    assert sympy.simplify(bundle.V_B_declared - free.V_B_declared) == 0


def test_airy_forced_generating_function():
    bundle = build(make_config("airy_forced"))
    ratio = sympy.diff(bundle.f, X) / bundle.A ** 2
    xs = [(-0.3, 0.6), (-0.1, 0.55)]
    for x, t in xs:
        assert float(ratio.subs({X: x, T: t}).evalf()) == pytest.approx(1.0, rel=1e-10)


def test_weber_oscillator_potential():
    for sign, omega_sq in ((1, 1), (-1, -1)):
        bundle = build(make_config("weber_oscillator", {"sign": sign}))
        assert sympy.simplify(bundle.V_declared - omega_sq * X ** 2 / 2) == 0
    assert derived_quantities(make_config("weber_oscillator", {"beta": 2.0}))["omega"] == pytest.approx(4.0)


def test_no_acceleration_for_plane_wave():
    with pytest.raises(ConfigError):
        declared_acceleration(make_config("plane_wave"))


def test_descriptor_states_default_window():
    (descriptor,) = list_families("VII.B")
    assert descriptor.window == (-0.5, 0.0, 0.5, 0.7)
    assert descriptor.window_label() == "x[-0.5,0] t[0.5,0.7]"
    assert descriptor.as_dict()["window"] == [-0.5, 0.0, 0.5, 0.7]


@pytest.mark.parametrize(
    "family, params",
    [
        ("scaling_packet", {}),
        ("scaling_packet", {"kind": "trig", "zeta2": -1.0}),
        ("scaling_packet", {"kind": "weber"}),
        ("weber_oscillator", {}),
        ("weber_oscillator", {"sign": -1}),
        ("general_power", {}),
    ],
)
def test_generating_function_squares_to_amplitude(family, params):
    config = make_config(family, params)
    bundle = build(config)
    grid = bundle.masked(config.default_grid(64, 8))
    xx, tt = grid.mesh()
    valid = ~grid.mask()
    assert valid.any()
    fx = evaluate_array(sympy.diff(bundle.f, X), {"x": xx, "t": tt})
    A2 = evaluate_array(bundle.A ** 2, {"x": xx, "t": tt})
    np.testing.assert_allclose(fx[valid], A2[valid], rtol=1e-9)
    assert np.isfinite(infer_force(bundle.f, grid)[valid]).all()


def test_gaussian_generating_function_is_closed_form():
    bundle = build(make_config("scaling_packet"))
    assert bundle.f.has(sympy.erf)


def test_cells_outside_the_table_are_reported(caplog):
    bundle = build(make_config("weber_oscillator"))
    inside = make_config("weber_oscillator").default_grid(32, 4)
    assert bundle.report_coverage(inside) == {"y outside (-6.0, 6.0)": 0.0}
    wide = Grid(-8.0, 8.0, 64, 0.5, 0.7, 4)
    with caplog.at_level("WARNING", logger="bohmlab.polar"):
        fractions = bundle.report_coverage(wide)
    assert 0 < fractions["y outside (-6.0, 6.0)"] < 1
    assert "outside the tabulated range" in caplog.text
    assert bundle.masked(wide).excluded_fraction >= fractions["y outside (-6.0, 6.0)"]


def test_linear_forcing_hooks_are_abstract():
    class Incomplete(LinearForcing):
        def zeta(self):
            return T

    with pytest.raises(TypeError):
        Incomplete(make_config("airy_forced"), PhysicalConstants())
