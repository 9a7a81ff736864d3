"""
Expression language for generating functions.

Text in the grammar documented in ``docs/grammar.md`` is parsed with pyparsing
into sympy expression trees. Trees are built unevaluated so that
``simplify`` can report what it cancelled; differentiation and evaluation
work on any tree.

Numeric evaluation goes through ``sympy.lambdify`` with a namespace that
routes ``Ai``/``Ai'`` to :mod:`bohmlab.specfun` instead of scipy.
"""

import logging
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Dict, Iterable, List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np
import sympy
from pyparsing import (
    Forward,
    Group,
    Literal,
    Optional as Opt,
    ParseBaseException,
    ParserElement,
    Regex,
    Suppress,
    ZeroOrMore,
    delimited_list,
    one_of,
)
from scipy import special
from sympy.printing.str import StrPrinter

from . import specfun
from .config import PhysicalConstants
from .errors import ConfigError, DomainError, ExprSyntaxError, UnknownIdentifierError

logger = logging.getLogger(__name__)

ParserElement.enable_packrat()

Expr = sympy.Expr

X = sympy.Symbol("x", real=True)
T = sympy.Symbol("t", real=True)
HBAR = sympy.Symbol("hbar", positive=True)
MASS = sympy.Symbol("m", positive=True)
# initial point of a two-point phase S2(x, x_i, t)
XI = sympy.Symbol("x_i", real=True)

BUILTIN_SYMBOLS: Dict[str, sympy.Basic] = {
    "x": X,
    "t": T,
    "hbar": HBAR,
    "m": MASS,
    "pi": sympy.pi,
}

FUNCTIONS: Dict[str, Callable] = {
    "sqrt": sympy.sqrt,
    "exp": sympy.exp,
    "log": sympy.log,
    "ln": sympy.log,
    "sin": sympy.sin,
    "cos": sympy.cos,
    "tan": sympy.tan,
    "cot": sympy.cot,
    "sec": sympy.sec,
    "csc": sympy.csc,
    "arctan": sympy.atan,
    "atan": sympy.atan,
    "sinh": sympy.sinh,
    "cosh": sympy.cosh,
    "tanh": sympy.tanh,
    "abs": sympy.Abs,
    "sign": sympy.sign,
    "Ai": sympy.airyai,
    "Aip": sympy.airyaiprime,
    "Ai'": sympy.airyaiprime,
}

_NUMERIC_NAMESPACE = {
    "airyai": specfun.airy_ai,
    "airyaiprime": specfun.airy_ai_prime,
    # closed-form integrals of Gaussian densities; not part of the grammar
    "erf": special.erf,
}

Bindings = Mapping[Union[str, sympy.Symbol], float]


def symbol(name: str) -> sympy.Symbol:
    """The symbol used for ``name`` everywhere in the package."""
    if name in BUILTIN_SYMBOLS and isinstance(BUILTIN_SYMBOLS[name], sympy.Symbol):
        return BUILTIN_SYMBOLS[name]
    if name == "x_i":
        return XI
    return sympy.Symbol(name, real=True)


def exact(value: float) -> sympy.Expr:
    """Rational for values that are short decimals, Float otherwise."""
    if isinstance(value, sympy.Basic):
        return value
    value = float(value)
    if value == int(value):
        return sympy.Integer(int(value))
    r = sympy.Rational(value).limit_denominator(10**6)
    if abs(float(r) - value) <= 1e-15 * abs(value):
        return r
    return sympy.Float(value)


# ---------------------------------------------------------------------------
# Grammar
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class _Node:
    kind: str
    value: object = None
    loc: int = 0
    args: Tuple = field(default=())


def _fold_left(tokens) -> _Node:
    items = list(tokens)
    node = items[0]
    for op, rhs in zip(items[1::2], items[2::2]):
        node = _Node("bin", op, node.loc, (node, rhs))
    return node


def _build_grammar() -> ParserElement:
    """
    expr    :: term  [ ('+' | '-') term ]*
    term    :: unary [ ('*' | '/') unary ]*
    unary   :: ('-' | '+') unary | factor
    factor  :: atom [ '^' unary ]
    atom    :: number | name '(' args ')' | identifier | '(' expr ')'
    """
    expr = Forward()
    unary = Forward()

    number = Regex(r"(\d+\.?\d*|\.\d+)([eE][+-]?\d+)?")
    number.set_parse_action(lambda s, loc, t: _Node("num", t[0], loc))
    name = Regex(r"[A-Za-z_][A-Za-z0-9_]*'?")
    identifier = Regex(r"[A-Za-z_][A-Za-z0-9_]*")
    identifier.set_parse_action(lambda s, loc, t: _Node("id", t[0], loc))

    lpar, rpar = Suppress("("), Suppress(")")
    call = name + lpar + Group(Opt(delimited_list(expr))) + rpar
    call.set_parse_action(lambda s, loc, t: _Node("call", t[0], loc, tuple(t[1])))
    atom = number | call | identifier | (lpar + expr + rpar)

    factor = atom + Opt(Literal("^") + unary)
    factor.set_parse_action(
        lambda s, loc, t: t[0] if len(t) == 1 else _Node("bin", "^", t[0].loc, (t[0], t[2]))
    )
    unary <<= (one_of("- +") + unary) | factor
    unary.set_parse_action(
        lambda s, loc, t: t[0]
        if len(t) == 1
        else (_Node("neg", None, loc, (t[1],)) if t[0] == "-" else t[1])
    )
    term = unary + ZeroOrMore(one_of("* /") + unary)
    term.set_parse_action(lambda s, loc, t: _fold_left(t))
    expr <<= term + ZeroOrMore(one_of("+ -") + term)
    expr.set_parse_action(lambda s, loc, t: _fold_left(t))
    return expr


_GRAMMAR = _build_grammar()


def _to_sympy(
    node: _Node,
    text: str,
    names: Mapping[str, sympy.Basic],
    functions: Mapping[str, Callable],
) -> sympy.Expr:
    if node.kind == "num":
        return sympy.Rational(node.value)
    if node.kind == "id":
        if node.value in names:
            return names[node.value]
        if node.value in functions:
            raise ExprSyntaxError(f"Function '{node.value}' needs an argument list", text, node.loc)
        raise UnknownIdentifierError(node.value, text, node.loc)
    if node.kind == "call":
        func = functions.get(node.value)
        if func is None:
            raise UnknownIdentifierError(node.value, text, node.loc)
        if len(node.args) != 1:
            raise ExprSyntaxError(
                f"Function '{node.value}' takes 1 argument, got {len(node.args)}", text, node.loc
            )
        return func(_to_sympy(node.args[0], text, names, functions), evaluate=False)
    if node.kind == "neg":
        return sympy.Mul(-1, _to_sympy(node.args[0], text, names, functions), evaluate=False)

    lhs = _to_sympy(node.args[0], text, names, functions)
    rhs = _to_sympy(node.args[1], text, names, functions)
    if node.value == "+":
        return sympy.Add(lhs, rhs, evaluate=False)
    if node.value == "-":
        return sympy.Add(lhs, sympy.Mul(-1, rhs, evaluate=False), evaluate=False)
    if node.value == "*":
        return sympy.Mul(lhs, rhs, evaluate=False)
    if node.value == "/":
        return sympy.Mul(lhs, sympy.Pow(rhs, -1, evaluate=False), evaluate=False)
    return sympy.Pow(lhs, rhs, evaluate=False)


def parse(
    text: str,
    params: Optional[Iterable[str]] = None,
    functions: Optional[Mapping[str, Callable]] = None,
) -> sympy.Expr:
    """
    Parse expression text into an expression tree.

    Args:
        text: expression in the documented grammar
        params: names accepted as free parameters besides x, t, hbar, m, pi
        functions: extra unary functions (name -> sympy function class)

    Returns:
        Unevaluated sympy expression

    Raises:
        ExprSyntaxError: text does not match the grammar
        UnknownIdentifierError: identifier neither built in nor declared
    """
    names: Dict[str, sympy.Basic] = dict(BUILTIN_SYMBOLS)
    for p in params or ():
        names.setdefault(p, symbol(p))
    funcs = dict(FUNCTIONS)
    funcs.update(functions or {})

    try:
        tokens = _GRAMMAR.parse_string(text, parse_all=True)
    except ParseBaseException as e:
        raise ExprSyntaxError(f"Syntax error: {e.msg}", text, e.loc) from None
    return _to_sympy(tokens[0], text, names, funcs)


# ---------------------------------------------------------------------------
# Printing
# ---------------------------------------------------------------------------


class GrammarPrinter(StrPrinter):
    """Prints expression trees back into the parse grammar."""

    def _print_Pow(self, expr, rational=False):
        return super()._print_Pow(expr, rational).replace("**", "^")

    def _print_airyai(self, expr):
        return f"Ai({self._print(expr.args[0])})"

    def _print_airyaiprime(self, expr):
        return f"Aip({self._print(expr.args[0])})"

    def _print_atan(self, expr):
        return f"arctan({self._print(expr.args[0])})"

    def _print_Abs(self, expr):
        return f"abs({self._print(expr.args[0])})"

    def _print_Exp1(self, expr):
        return "exp(1)"


def print_expr(e: sympy.Expr) -> str:
    return GrammarPrinter().doprint(e)


# ---------------------------------------------------------------------------
# Evaluation
# ---------------------------------------------------------------------------


def _sorted_symbols(e: sympy.Expr) -> Tuple[sympy.Symbol, ...]:
    return tuple(sorted(e.free_symbols, key=lambda s: s.name))


@lru_cache(maxsize=1024)
def _compiled(e: sympy.Expr, args: Tuple[sympy.Symbol, ...]) -> Callable:
    return sympy.lambdify(args, e, modules=[_NUMERIC_NAMESPACE, "numpy"])


def _resolve(e: sympy.Expr, bindings: Optional[Bindings]) -> Tuple[Tuple[sympy.Symbol, ...], List]:
    given = {(k.name if isinstance(k, sympy.Symbol) else k): v for k, v in (bindings or {}).items()}
    args = _sorted_symbols(e)
    missing = [s.name for s in args if s.name not in given]
    if missing:
        raise ConfigError(f"Unbound variables: {', '.join(missing)}")
    return args, [given[s.name] for s in args]


def _kinks(e: sympy.Expr) -> List[sympy.Expr]:
    """Arguments of sign(), where the derivative of abs is undefined at 0."""
    return [s.args[0] for s in e.atoms(sympy.sign)]


def evaluate(e: sympy.Expr, bindings: Optional[Bindings] = None) -> float:
    """
    Evaluate ``e`` at a single point.

    Raises:
        ConfigError: a free variable is unbound
        DomainError: log of non-positive, sqrt of negative, division by zero,
            derivative of abs at 0, or any non-finite result
    """
    args, values = _resolve(e, bindings)
    values = [np.float64(v) for v in values]
    for kink in _kinks(e):
        if evaluate(kink, bindings) == 0.0:
            raise DomainError(f"Derivative of abs undefined at {print_expr(kink)} = 0")
    try:
        with np.errstate(divide="raise", invalid="raise", over="ignore", under="ignore"):
            result = _compiled(e, args)(*values)
    except (FloatingPointError, ZeroDivisionError) as err:
        raise DomainError(f"Evaluation of {print_expr(e)} failed: {err}") from None
    result = complex(result)
    if result.imag != 0.0 or not np.isfinite(result.real):
        raise DomainError(f"Evaluation of {print_expr(e)} is not a finite real number: {result}")
    return result.real


def evaluate_array(e: sympy.Expr, bindings: Optional[Bindings] = None) -> np.ndarray:
    """
    Evaluate ``e`` on broadcast arrays. Points outside the domain come back
    as NaN, so callers can turn them into excluded cells.
    """
    args, values = _resolve(e, bindings)
    arrays = [np.asarray(v, dtype=float) for v in values]
    shape = np.broadcast_shapes(*(np.shape(v) for v in (bindings or {}).values()))
    with np.errstate(all="ignore"):
        result = _compiled(e, args)(*arrays)
        out = np.array(np.broadcast_to(result, shape), dtype=complex)
        real = np.where(out.imag == 0.0, out.real, np.nan)
        for kink in _kinks(e):
            real = np.where(evaluate_array(kink, bindings) == 0.0, np.nan, real)
    real = np.atleast_1d(real) if real.ndim == 0 else real
    real[~np.isfinite(real)] = np.nan
    return real.reshape(shape)


def bind_constants(e: sympy.Expr, consts: PhysicalConstants) -> sympy.Expr:
    """Substitute numeric values for hbar and m."""
    return e.subs({HBAR: exact(consts.hbar), MASS: exact(consts.mass)})


def substitute(e: sympy.Expr, values: Mapping[str, float]) -> sympy.Expr:
    """Substitute parameter values by name."""
    by_name = {s.name: s for s in e.free_symbols}
    return e.subs({by_name[k]: exact(v) for k, v in values.items() if k in by_name})


# ---------------------------------------------------------------------------
# Symbolic operations
# ---------------------------------------------------------------------------


def _variable(v: Union[str, sympy.Symbol]) -> sympy.Symbol:
    name = v.name if isinstance(v, sympy.Symbol) else v
    if name == "x":
        return X
    if name == "t":
        return T
    if name == "x_i":
        return XI
    raise ConfigError(f"Can only differentiate with respect to x, t or x_i, got '{name}'")


def diff(e: sympy.Expr, v: Union[str, sympy.Symbol], order: int = 1) -> sympy.Expr:
    """Symbolic derivative of ``e`` with respect to x or t."""
    return sympy.diff(e, _variable(v), order)


def _denominators(e: sympy.Expr) -> set:
    found = set()
    for node in sympy.preorder_traversal(e):
        if node.is_Pow and node.exp.is_negative:
            found.add(node.base.doit())
    return found


def simplify_with_notes(e: sympy.Expr) -> Tuple[sympy.Expr, List[str]]:
    """
    Simplify ``e`` and report the domain restrictions the result no longer shows.

    Returns:
        (simplified expression, notes such as ``"x != 0"``)
    """
    before = _denominators(e)
    result = sympy.simplify(e.doit())
    after = _denominators(result)
    notes = [f"{print_expr(d)} != 0" for d in sorted(before - after, key=sympy.default_sort_key)]
    if notes:
        logger.debug("simplify dropped restrictions: %s", notes)
    return result, notes


def simplify(e: sympy.Expr) -> sympy.Expr:
    return simplify_with_notes(e)[0]


def free_parameters(e: sympy.Expr) -> List[str]:
    """Names of free symbols other than x, t, hbar, m."""
    reserved = {"x", "t", "hbar", "m", "x_i"}
    return sorted(s.name for s in e.free_symbols if s.name not in reserved)


def depends_on(e: sympy.Expr, *names: str) -> bool:
    return any(s.name in names for s in e.free_symbols)


def as_expr(value: Union[str, float, sympy.Expr], params: Sequence[str] = ()) -> sympy.Expr:
    """Accept text, numbers or trees wherever a generating function is expected."""
    if isinstance(value, sympy.Basic):
        return value
    if isinstance(value, str):
        return parse(value, params)
    return exact(value)
