"""
Scalar Expression Language

This module:
1. Tokenizes and parses expression source (precedence climbing)
2. Evaluates expression trees in IEEE double precision
3. Differentiates expression trees symbolically

Expressions define metric entries, warping functions, vector field components
and potentials. Trees are immutable; the only simplification performed is
folding of literal zeros and ones while differentiating.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Iterable, Iterator, Mapping, Sequence, Union

from src.geometry.errors import (
    DivisionByZeroError,
    DomainError,
    EmptyExpressionError,
    EvaluationError,
    ExpressionError,
    ExpressionSyntaxError,
    MissingBindingError,
    UnknownIdentifierError,
)

FUNCTIONS: dict[str, Callable[[float], float]] = {
    "exp": math.exp,
    "ln": math.log,
    "sin": math.sin,
    "cos": math.cos,
    "sinh": math.sinh,
    "cosh": math.cosh,
    "sqrt": math.sqrt,
}

Number = Union[int, float]


# ===========================
# Tree nodes
# ===========================


class Node:
    """Base class of expression tree nodes"""

    __slots__ = ()

    def evaluate(self, env: Mapping[str, float]) -> float:
        raise NotImplementedError

    def derivative(self, var: str) -> Node:
        raise NotImplementedError

    def to_source(self) -> str:
        raise NotImplementedError

    def substitute(self, values: Mapping[str, float]) -> Node:
        raise NotImplementedError

    def variables(self) -> Iterator[str]:
        raise NotImplementedError


@dataclass(frozen=True, slots=True)
class Const(Node):
    value: float

    def evaluate(self, env: Mapping[str, float]) -> float:
        return self.value

    def derivative(self, var: str) -> Node:
        return ZERO

    def to_source(self) -> str:
        text = repr(self.value)
        return f"({text})" if text.startswith("-") else text

    def substitute(self, values: Mapping[str, float]) -> Node:
        return self

    def variables(self) -> Iterator[str]:
        return iter(())


@dataclass(frozen=True, slots=True)
class Var(Node):
    name: str

    def evaluate(self, env: Mapping[str, float]) -> float:
        try:
            return env[self.name]
        except KeyError:
            raise MissingBindingError(f"no binding for variable '{self.name}'", self.name) from None

    def derivative(self, var: str) -> Node:
        return ONE if var == self.name else ZERO

    def to_source(self) -> str:
        return self.name

    def substitute(self, values: Mapping[str, float]) -> Node:
        if self.name in values:
            return Const(float(values[self.name]))
        return self

    def variables(self) -> Iterator[str]:
        yield self.name


@dataclass(frozen=True, slots=True)
class Unary(Node):
    op: str
    operand: Node

    def evaluate(self, env: Mapping[str, float]) -> float:
        arg = self.operand.evaluate(env)
        if self.op == "neg":
            return -arg
        if self.op == "ln" and arg <= 0.0:
            raise DomainError(f"ln of non-positive value {arg!r}", self.to_source())
        if self.op == "sqrt" and arg < 0.0:
            raise DomainError(f"sqrt of negative value {arg!r}", self.to_source())
        try:
            return FUNCTIONS[self.op](arg)
        except OverflowError:
            raise EvaluationError("floating-point overflow", self.to_source()) from None

    def derivative(self, var: str) -> Node:
        inner = self.operand.derivative(var)
        if _is_zero(inner):
            return ZERO
        u = self.operand
        if self.op == "neg":
            return _neg(inner)
        if self.op == "exp":
            outer: Node = self
        elif self.op == "ln":
            return _div(inner, u)
        elif self.op == "sin":
            outer = Unary("cos", u)
        elif self.op == "cos":
            outer = _neg(Unary("sin", u))
        elif self.op == "sinh":
            outer = Unary("cosh", u)
        elif self.op == "cosh":
            outer = Unary("sinh", u)
        else:  # sqrt
            return _div(inner, _mul(TWO, self))
        return _mul(outer, inner)

    def to_source(self) -> str:
        if self.op == "neg":
            return f"(-{self.operand.to_source()})"
        return f"{self.op}({self.operand.to_source()})"

    def substitute(self, values: Mapping[str, float]) -> Node:
        return Unary(self.op, self.operand.substitute(values))

    def variables(self) -> Iterator[str]:
        return self.operand.variables()


@dataclass(frozen=True, slots=True)
class Binary(Node):
    op: str
    left: Node
    right: Node

    def evaluate(self, env: Mapping[str, float]) -> float:
        a = self.left.evaluate(env)
        b = self.right.evaluate(env)
        if self.op == "+":
            return a + b
        if self.op == "-":
            return a - b
        if self.op == "*":
            return a * b
        if self.op == "/":
            if b == 0.0:
                raise DivisionByZeroError("division by zero", self.to_source())
            return a / b
        if a == 0.0 and b < 0.0:
            raise DivisionByZeroError("zero raised to a negative power", self.to_source())
        try:
            return math.pow(a, b)
        except ValueError:
            raise DomainError(f"power of negative base {a!r}", self.to_source()) from None
        except OverflowError:
            raise EvaluationError("floating-point overflow", self.to_source()) from None

    def derivative(self, var: str) -> Node:
        u, v = self.left, self.right
        du, dv = u.derivative(var), v.derivative(var)
        if self.op == "+":
            return _add(du, dv)
        if self.op == "-":
            return _sub(du, dv)
        if self.op == "*":
            return _add(_mul(du, v), _mul(u, dv))
        if self.op == "/":
            return _div(_sub(_mul(du, v), _mul(u, dv)), _pow(v, TWO))
        if _is_zero(dv):
            # constant exponent: c * u^(c-1) * u'
            if _is_zero(du):
                return ZERO
            reduced = Const(v.value - 1.0) if isinstance(v, Const) else _sub(v, ONE)
            return _mul(_mul(v, _pow(u, reduced)), du)
        # u^v * (v' ln u + v u'/u)
        log_term = _mul(dv, Unary("ln", u))
        return _mul(self, _add(log_term, _div(_mul(v, du), u)))

    def to_source(self) -> str:
        return f"({self.left.to_source()} {self.op} {self.right.to_source()})"

    def substitute(self, values: Mapping[str, float]) -> Node:
        return Binary(self.op, self.left.substitute(values), self.right.substitute(values))

    def variables(self) -> Iterator[str]:
        yield from self.left.variables()
        yield from self.right.variables()


ZERO = Const(0.0)
ONE = Const(1.0)
TWO = Const(2.0)


def _is_zero(node: Node) -> bool:
    return isinstance(node, Const) and node.value == 0.0


def _is_one(node: Node) -> bool:
    return isinstance(node, Const) and node.value == 1.0


def _add(a: Node, b: Node) -> Node:
    if _is_zero(a):
        return b
    if _is_zero(b):
        return a
    return Binary("+", a, b)


def _sub(a: Node, b: Node) -> Node:
    if _is_zero(b):
        return a
    if _is_zero(a):
        return _neg(b)
    return Binary("-", a, b)


def _mul(a: Node, b: Node) -> Node:
    if _is_zero(a) or _is_zero(b):
        return ZERO
    if _is_one(a):
        return b
    if _is_one(b):
        return a
    return Binary("*", a, b)


def _div(a: Node, b: Node) -> Node:
    if _is_zero(a):
        return ZERO
    if _is_one(b):
        return a
    return Binary("/", a, b)


def _neg(a: Node) -> Node:
    if isinstance(a, Const):
        return Const(-a.value)
    if isinstance(a, Unary) and a.op == "neg":
        return a.operand
    return Unary("neg", a)


def _pow(a: Node, b: Node) -> Node:
    if _is_zero(b):
        return ONE
    if _is_one(b):
        return a
    return Binary("^", a, b)


# ===========================
# Expression wrapper
# ===========================


@dataclass(frozen=True, eq=False)
class Expression:
    """
    Parsed expression together with its declared variable set.

    Every variable in the tree belongs to `variables`. Arithmetic operators
    combine expressions (and numbers) and merge their variable sets.
    """

    root: Node
    variables: tuple[str, ...]
    source: str = field(default="")

    def __post_init__(self) -> None:
        unknown = self.free_variables - set(self.variables)
        if unknown:
            raise ExpressionError(
                f"variables {sorted(unknown)} used but not declared in {list(self.variables)}"
            )

    @cached_property
    def free_variables(self) -> frozenset[str]:
        return frozenset(self.root.variables())

    @property
    def is_zero(self) -> bool:
        return _is_zero(self.root)

    @property
    def is_constant(self) -> bool:
        return not self.free_variables

    def evaluate(self, bindings: Mapping[str, float]) -> float:
        return self.root.evaluate(bindings)

    def differentiate(self, var: str) -> Expression:
        if var not in self.variables:
            raise ExpressionError(f"'{var}' is not a declared variable of {self.to_source()}")
        if var not in self.free_variables:
            return Expression(ZERO, self.variables)
        return Expression(self.root.derivative(var), self.variables)

    def to_source(self) -> str:
        return self.root.to_source()

    def substitute(self, values: Mapping[str, float]) -> Expression:
        """Replace variables by numeric constants (used for slice restrictions)"""
        return Expression(self.root.substitute(values), self.variables)

    def with_variables(self, variables: Iterable[str]) -> Expression:
        return Expression(self.root, tuple(variables), self.source)

    @classmethod
    def constant(cls, value: Number, variables: Sequence[str] = ()) -> Expression:
        return cls(Const(float(value)), tuple(variables))

    def __str__(self) -> str:
        return self.source or self.to_source()

    def __repr__(self) -> str:
        return f"Expression({self.to_source()!r}, variables={list(self.variables)})"

    # Arithmetic ------------------------------------------------------------

    def _combine(self, other: Union[Expression, Number], build: Callable[[Node, Node], Node],
                 reflected: bool = False) -> Expression:
        if isinstance(other, Expression):
            node, names = other.root, other.variables
        else:
            node, names = Const(float(other)), ()
        merged = tuple(dict.fromkeys(self.variables + names))
        left, right = (node, self.root) if reflected else (self.root, node)
        return Expression(build(left, right), merged)

    def __add__(self, other: Union[Expression, Number]) -> Expression:
        return self._combine(other, _add)

    def __radd__(self, other: Number) -> Expression:
        return self._combine(other, _add, reflected=True)

    def __sub__(self, other: Union[Expression, Number]) -> Expression:
        return self._combine(other, _sub)

    def __rsub__(self, other: Number) -> Expression:
        return self._combine(other, _sub, reflected=True)

    def __mul__(self, other: Union[Expression, Number]) -> Expression:
        return self._combine(other, _mul)

    def __rmul__(self, other: Number) -> Expression:
        return self._combine(other, _mul, reflected=True)

    def __truediv__(self, other: Union[Expression, Number]) -> Expression:
        return self._combine(other, _div)

    def __pow__(self, other: Union[Expression, Number]) -> Expression:
        return self._combine(other, _pow)

    def __neg__(self) -> Expression:
        return Expression(_neg(self.root), self.variables)

    def apply(self, function: str) -> Expression:
        """function(self) for a name in FUNCTIONS"""
        if function not in FUNCTIONS:
            raise UnknownIdentifierError(function, 0)
        return Expression(Unary(function, self.root), self.variables)


# ===========================
# Tokenizer and parser
# ===========================

_TOKEN_PATTERN = re.compile(
    r"\s*(?:"
    r"(?P<number>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)"
    r"|(?P<name>[A-Za-z_][A-Za-z0-9_]*)"
    r"|(?P<op>[-+*/^()])"
    r"|(?P<bad>\S)"
    r")"
)


@dataclass(frozen=True)
class Token:
    kind: str  # number, name, op, end
    text: str
    position: int


def tokenize(source: str) -> list[Token]:
    tokens: list[Token] = []
    for match in _TOKEN_PATTERN.finditer(source):
        kind = match.lastgroup
        if kind is None:
            continue
        start = match.start(kind)
        if kind == "bad":
            raise ExpressionSyntaxError(
                f"unexpected character '{match.group(kind)}'", start,
                "number, identifier or operator",
            )
        tokens.append(Token(kind, match.group(kind), start))
    tokens.append(Token("end", "", len(source)))
    return tokens


class _Parser:
    """
    Precedence climbing over the grammar

        sum     := product (('+' | '-') product)*
        product := unary (('*' | '/') unary)*
        unary   := '-' unary | power
        power   := primary ('^' unary)?
        primary := number | variable | function '(' sum ')' | '(' sum ')'
    """

    def __init__(self, tokens: list[Token], variables: frozenset[str]):
        self.tokens = tokens
        self.variables = variables
        self.index = 0

    @property
    def current(self) -> Token:
        return self.tokens[self.index]

    def advance(self) -> Token:
        token = self.tokens[self.index]
        self.index += 1
        return token

    def expect(self, text: str) -> None:
        if self.current.text != text or self.current.kind == "end":
            raise ExpressionSyntaxError(
                f"unexpected {self._describe(self.current)}", self.current.position, f"'{text}'"
            )
        self.advance()

    @staticmethod
    def _describe(token: Token) -> str:
        return "end of input" if token.kind == "end" else f"'{token.text}'"

    def parse(self) -> Node:
        node = self.parse_sum()
        if self.current.kind != "end":
            raise ExpressionSyntaxError(
                f"unexpected {self._describe(self.current)}",
                self.current.position,
                "operator or end of input",
            )
        return node

    def parse_sum(self) -> Node:
        node = self.parse_product()
        while self.current.kind == "op" and self.current.text in "+-":
            op = self.advance().text
            node = Binary(op, node, self.parse_product())
        return node

    def parse_product(self) -> Node:
        node = self.parse_unary()
        while self.current.kind == "op" and self.current.text in "*/":
            op = self.advance().text
            node = Binary(op, node, self.parse_unary())
        return node

    def parse_unary(self) -> Node:
        if self.current.kind == "op" and self.current.text == "-":
            self.advance()
            return Unary("neg", self.parse_unary())
        return self.parse_power()

    def parse_power(self) -> Node:
        base = self.parse_primary()
        if self.current.kind == "op" and self.current.text == "^":
            self.advance()
            return Binary("^", base, self.parse_unary())
        return base

    def parse_primary(self) -> Node:
        token = self.current
        if token.kind == "number":
            self.advance()
            return Const(float(token.text))
        if token.kind == "name":
            self.advance()
            if token.text in FUNCTIONS:
                self.expect("(")
                argument = self.parse_sum()
                self.expect(")")
                return Unary(token.text, argument)
            if token.text in self.variables:
                return Var(token.text)
            raise UnknownIdentifierError(token.text, token.position)
        if token.kind == "op" and token.text == "(":
            self.advance()
            node = self.parse_sum()
            self.expect(")")
            return node
        raise ExpressionSyntaxError(
            f"unexpected {self._describe(token)}", token.position, "number, identifier or '('"
        )


# ===========================
# Public operations
# ===========================


def parse(source: str, variables: Sequence[str]) -> Expression:
    """
    Parse expression source over the declared variables.

    Args:
        source: Expression text, e.g. "x^2 + sin(y)"
        variables: Declared variable names (distinct, not function names)

    Raises:
        EmptyExpressionError, ExpressionSyntaxError, UnknownIdentifierError
    """
    names = tuple(variables)
    if len(set(names)) != len(names):
        raise ExpressionError(f"duplicate variable names in {list(names)}")
    clashes = [name for name in names if name in FUNCTIONS]
    if clashes:
        raise ExpressionError(f"variable names {clashes} collide with function names")
    if not source.strip():
        raise EmptyExpressionError("empty expression")
    root = _Parser(tokenize(source), frozenset(names)).parse()
    return Expression(root, names, source)


def evaluate(expr: Expression, bindings: Mapping[str, float]) -> float:
    return expr.evaluate(bindings)


def differentiate(expr: Expression, var: str) -> Expression:
    return expr.differentiate(var)
