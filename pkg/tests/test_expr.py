import numpy as np
import pytest
import sympy
from scipy import special

from bohmlab.config import PhysicalConstants
from bohmlab.errors import ConfigError, DomainError, ExprSyntaxError, UnknownIdentifierError
from bohmlab.expr import (
    X,
    bind_constants,
    depends_on,
    diff,
    evaluate,
    evaluate_array,
    free_parameters,
    parse,
    print_expr,
    simplify,
    simplify_with_notes,
    substitute,
)


@pytest.mark.parametrize(
    "text, bindings, expected",
    [
        ("x^2 + 3*x", {"x": 2.0}, 10.0),
        ("-x^2", {"x": 3.0}, -9.0),
        ("2^3^2", {}, 512.0),
        ("2^-1", {}, 0.5),
        ("(x + t) / 2", {"x": 1.0, "t": 3.0}, 2.0),
        ("x - t - 1", {"x": 5.0, "t": 1.0}, 3.0),
        ("exp(0) + sin(pi/2)", {}, 2.0),
        ("1.5e1 * .2", {}, 3.0),
    ],
)
def test_parse_and_evaluate(text, bindings, expected):
    assert evaluate(parse(text), bindings) == pytest.approx(expected, rel=1e-14)


def test_syntax_error_carries_position():
    with pytest.raises(ExprSyntaxError) as info:
        parse("x + * 2")
    assert isinstance(info.value.position, int)
    assert info.value.text == "x + * 2"


def test_unknown_identifier():
    with pytest.raises(UnknownIdentifierError) as info:
        parse("y * x")
    assert info.value.name == "y"


def test_unknown_function():
    with pytest.raises(UnknownIdentifierError):
        parse("erf(x)")


def test_declared_parameters():
    e = parse("a * x + b", params=["a", "b"])
    assert free_parameters(e) == ["a", "b"]
    assert evaluate(substitute(e, {"a": 2, "b": 1}), {"x": 3.0}) == pytest.approx(7.0)


@pytest.mark.parametrize(
    "text, bindings",
    [
        ("log(x)", {"x": 0.0}),
        ("log(x)", {"x": -1.0}),
        ("sqrt(x)", {"x": -4.0}),
        ("1/x", {"x": 0.0}),
    ],
)
def test_domain_errors(text, bindings):
    with pytest.raises(DomainError):
        evaluate(parse(text), bindings)


def test_abs_derivative_undefined_at_kink():
    derivative = diff(parse("abs(x)"), "x")
    assert evaluate(derivative, {"x": 2.0}) == 1.0
    assert evaluate(derivative, {"x": -2.0}) == -1.0
    with pytest.raises(DomainError):
        evaluate(derivative, {"x": 0.0})


def test_unbound_variable():
    with pytest.raises(ConfigError):
        evaluate(parse("x + t"), {"x": 1.0})


def test_derivatives():
    e = parse("sin(x) * t + x^3")
    assert evaluate(diff(e, "x"), {"x": 0.0, "t": 2.0}) == pytest.approx(2.0)
    assert evaluate(diff(e, "x", 3), {"x": 0.0, "t": 2.0}) == pytest.approx(-2.0 + 6.0)
    assert evaluate(diff(e, "t"), {"x": np.pi / 2, "t": 0.0}) == pytest.approx(1.0)
    with pytest.raises(ConfigError):
        diff(e, "y")


def test_evaluate_array_marks_domain_as_nan():
    values = evaluate_array(parse("sqrt(x)"), {"x": np.array([-1.0, 0.0, 4.0])})
    assert np.isnan(values[0])
    np.testing.assert_allclose(values[1:], [0.0, 2.0])


def test_evaluate_array_broadcasts_constants():
    xx, tt = np.meshgrid(np.linspace(0, 1, 5), np.linspace(0, 1, 3))
    values = evaluate_array(parse("2"), {"x": xx, "t": tt})
    assert values.shape == (3, 5)
    assert np.all(values == 2.0)


def test_airy_names():
    assert evaluate(parse("Ai(x)"), {"x": 0.0}) == pytest.approx(special.airy(0.0)[0], abs=1e-12)
    assert evaluate(parse("Aip(x)"), {"x": 1.0}) == pytest.approx(special.airy(1.0)[1], abs=1e-12)
    assert diff(parse("Ai(x)"), "x") == sympy.airyaiprime(X)


def test_printer_reparses():
    e = parse("x^2 * exp(-t) / (1 + x^2)")
    again = parse(print_expr(e))
    assert simplify(e - again) == 0
    assert "^" in print_expr(e)


def test_simplify_reports_dropped_restrictions():
    result, notes = simplify_with_notes(parse("x / x"))
    assert result == 1
    assert notes == ["x != 0"]


def test_bind_constants():
    e = bind_constants(parse("hbar^2 / m"), PhysicalConstants(hbar=2.0, mass=4.0))
    assert e == 1
    assert depends_on(parse("hbar * x"), "hbar")
    assert not depends_on(parse("hbar * x"), "t")


SMOOTH = ("sin", "cos", "exp", "atan", "tanh")


def _random_text(rng, depth=3):
    if depth == 0 or rng.random() < 0.25:
        leaf = rng.integers(3)
        if leaf == 0:
            return "x"
        if leaf == 1:
            return "t"
        return f"({rng.uniform(-2, 2):.3f})"
    if rng.random() < 0.4:
        return f"{SMOOTH[rng.integers(len(SMOOTH))]}({_random_text(rng, depth - 1)})"
    op = "+-*"[rng.integers(3)]
    return f"({_random_text(rng, depth - 1)} {op} {_random_text(rng, depth - 1)})"


def test_derivative_matches_central_difference(rng):
    h = 1e-4
    x = rng.uniform(-1, 1, 16)
    t = rng.uniform(0, 1, 16)
    for _ in range(100):
        e = parse(_random_text(rng))
        exact_slope = evaluate_array(diff(e, "x"), {"x": x, "t": t})
        f = [evaluate_array(e, {"x": x + k * h, "t": t}) for k in (-2, -1, 1, 2)]
        slope = (f[0] - 8 * f[1] + 8 * f[2] - f[3]) / (12 * h)
        scale = max(1.0, np.max(np.abs(f)), np.max(np.abs(exact_slope)))
        assert np.max(np.abs(slope - exact_slope)) <= 1e-6 * scale, print_expr(e)


def test_simplify_preserves_values(rng):
    x = rng.uniform(-1, 1, 64)
    t = rng.uniform(0, 1, 64)
    for _ in range(20):
        e = parse(_random_text(rng))
        before = evaluate_array(e, {"x": x, "t": t})
        after = evaluate_array(simplify(e), {"x": x, "t": t})
        scale = max(1.0, np.max(np.abs(before)))
        assert np.max(np.abs(after - before)) <= 1e-12 * scale, print_expr(e)
