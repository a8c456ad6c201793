"""Symbolic scalar expressions over the reals.

The expression language is deliberately small: rational constants, variables,
n-ary sums and products, rational powers, log and exp. There is no subtraction
or division node (a - b is Sum(a, -1*b), a/b is Product(a, b^-1)) and no
ceiling; transcendental constants appear only as Exp(Const(1)) etc.

All values are immutable; normalize() is the only canonicalizer and every
other module assumes normalized input.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Iterator, Mapping, Union

Rational = Union[int, Fraction]


class DomainError(ArithmeticError):
    """Evaluation outside the domain of definition (log of x <= 0, 0^-1, ...)."""


@dataclass(frozen=True)
class Expr:
    """Base class; concrete nodes below."""

    def __add__(self, other: "Expr | Rational") -> "Expr":
        return add(self, _coerce(other))

    def __radd__(self, other: "Expr | Rational") -> "Expr":
        return add(_coerce(other), self)

    def __mul__(self, other: "Expr | Rational") -> "Expr":
        return mul(self, _coerce(other))

    def __rmul__(self, other: "Expr | Rational") -> "Expr":
        return mul(_coerce(other), self)

    def __sub__(self, other: "Expr | Rational") -> "Expr":
        return sub(self, _coerce(other))

    def __rsub__(self, other: "Expr | Rational") -> "Expr":
        return sub(_coerce(other), self)

    def __truediv__(self, other: "Expr | Rational") -> "Expr":
        return div(self, _coerce(other))

    def __rtruediv__(self, other: "Expr | Rational") -> "Expr":
        return div(_coerce(other), self)

    def __pow__(self, p: Rational) -> "Expr":
        return pow_(self, p)

    def __neg__(self) -> "Expr":
        return mul(const(-1), self)


@dataclass(frozen=True)
class Const(Expr):
    value: Fraction

    def __post_init__(self):
        object.__setattr__(self, "value", Fraction(self.value))


@dataclass(frozen=True)
class Var(Expr):
    name: str


@dataclass(frozen=True)
class Sum(Expr):
    terms: tuple[Expr, ...]


@dataclass(frozen=True)
class Product(Expr):
    factors: tuple[Expr, ...]


@dataclass(frozen=True)
class Power(Expr):
    base: Expr
    exponent: Fraction

    def __post_init__(self):
        object.__setattr__(self, "exponent", Fraction(self.exponent))


@dataclass(frozen=True)
class Log(Expr):
    arg: Expr


@dataclass(frozen=True)
class Exp(Expr):
    arg: Expr


ZERO = Const(Fraction(0))
ONE = Const(Fraction(1))


def const(v: Rational) -> Const:
    return Const(Fraction(v))


def var(name: str) -> Var:
    return Var(name)


def _coerce(e: "Expr | Rational") -> Expr:
    if isinstance(e, Expr):
        return e
    return Const(Fraction(e))


# ---------------------------------------------------------------------------
# Serialization: stable s-expression text form, one expression per line.
# Children of Sum/Product are ordered lexicographically on their serialized
# form, so serialize(normalize(e)) is a canonical key.
# ---------------------------------------------------------------------------

def serialize(e: Expr) -> str:
    if isinstance(e, Const):
        return str(e.value)
    if isinstance(e, Var):
        return e.name
    if isinstance(e, Sum):
        return "(+ " + " ".join(serialize(t) for t in e.terms) + ")"
    if isinstance(e, Product):
        return "(* " + " ".join(serialize(f) for f in e.factors) + ")"
    if isinstance(e, Power):
        return f"(^ {serialize(e.base)} {e.exponent})"
    if isinstance(e, Log):
        return f"(log {serialize(e.arg)})"
    if isinstance(e, Exp):
        return f"(exp {serialize(e.arg)})"
    raise TypeError(f"not an Expr: {e!r}")


def count_nodes(e: Expr) -> int:
    if isinstance(e, (Const, Var)):
        return 1
    if isinstance(e, Sum):
        return 1 + sum(count_nodes(t) for t in e.terms)
    if isinstance(e, Product):
        return 1 + sum(count_nodes(f) for f in e.factors)
    if isinstance(e, Power):
        return 1 + count_nodes(e.base)
    if isinstance(e, (Log, Exp)):
        return 1 + count_nodes(e.arg)
    raise TypeError(f"not an Expr: {e!r}")


def free_vars(e: Expr) -> frozenset[str]:
    if isinstance(e, Const):
        return frozenset()
    if isinstance(e, Var):
        return frozenset((e.name,))
    if isinstance(e, Sum):
        return frozenset().union(*(free_vars(t) for t in e.terms)) if e.terms else frozenset()
    if isinstance(e, Product):
        return frozenset().union(*(free_vars(f) for f in e.factors)) if e.factors else frozenset()
    if isinstance(e, Power):
        return free_vars(e.base)
    if isinstance(e, (Log, Exp)):
        return free_vars(e.arg)
    raise TypeError(f"not an Expr: {e!r}")


def children(e: Expr) -> Iterator[Expr]:
    if isinstance(e, Sum):
        yield from e.terms
    elif isinstance(e, Product):
        yield from e.factors
    elif isinstance(e, Power):
        yield e.base
    elif isinstance(e, (Log, Exp)):
        yield e.arg


def subexpressions(e: Expr) -> Iterator[Expr]:
    yield e
    for c in children(e):
        yield from subexpressions(c)


# ---------------------------------------------------------------------------
# Normalization
# ---------------------------------------------------------------------------

def exact_rational_pow(c: Fraction, p: Fraction) -> Fraction | None:
    """c**p as an exact rational, or None when no exact value exists.

    0**0 is defined as 1 here; 0 to a negative power has no value (caller
    decides whether that is a DomainError).
    """
    if p.denominator == 1:
        n = p.numerator
        if c == 0 and n < 0:
            return None
        return c ** n
    if c < 0:
        return None
    if c == 0:
        return Fraction(0) if p > 0 else None
    # exact q-th root of numerator and denominator, if both are perfect powers
    q = p.denominator
    rn = _iroot(c.numerator, q)
    rd = _iroot(c.denominator, q)
    if rn is None or rd is None:
        return None
    root = Fraction(rn, rd)
    return root ** p.numerator


def _iroot(n: int, q: int) -> int | None:
    if n == 0:
        return 0
    r = round(n ** (1.0 / q))
    for cand in (r - 1, r, r + 1):
        if cand >= 0 and cand ** q == n:
            return cand
    return None


def _split_coeff(e: Expr) -> tuple[Fraction, tuple[Expr, ...]]:
    """Split a normalized term into (rational coefficient, non-const factors)."""
    if isinstance(e, Const):
        return e.value, ()
    if isinstance(e, Product):
        coeff = Fraction(1)
        rest = []
        for f in e.factors:
            if isinstance(f, Const):
                coeff *= f.value
            else:
                rest.append(f)
        return coeff, tuple(rest)
    return Fraction(1), (e,)


def _make_product(coeff: Fraction, factors: Iterable[Expr]) -> Expr:
    factors = sorted(factors, key=serialize)
    if coeff == 0:
        return ZERO
    if not factors:
        return Const(coeff)
    if coeff == 1:
        return factors[0] if len(factors) == 1 else Product(tuple(factors))
    return Product((Const(coeff), *factors))


def normalize(e: Expr) -> Expr:
    """Canonical form: flattened, constant-folded, like terms/powers collected.

    Idempotent and value-preserving on every assignment where the input is
    defined (the result may be defined on more points, e.g. x^0 -> 1).
    """
    if isinstance(e, (Const, Var)):
        return e
    if isinstance(e, Sum):
        return _norm_sum([normalize(t) for t in e.terms])
    if isinstance(e, Product):
        return _norm_product([normalize(f) for f in e.factors])
    if isinstance(e, Power):
        return _norm_power(normalize(e.base), e.exponent)
    if isinstance(e, Log):
        return _norm_log(normalize(e.arg))
    if isinstance(e, Exp):
        return _norm_exp(normalize(e.arg))
    raise TypeError(f"not an Expr: {e!r}")


def _norm_sum(terms: list[Expr]) -> Expr:
    flat: list[Expr] = []
    for t in terms:
        if isinstance(t, Sum):
            flat.extend(t.terms)
        else:
            flat.append(t)
    coeffs: dict[tuple[Expr, ...], Fraction] = {}
    keys: dict[tuple[Expr, ...], str] = {}
    order: list[tuple[Expr, ...]] = []
    total = Fraction(0)
    for t in flat:
        c, rest = _split_coeff(t)
        if not rest:
            total += c
            continue
        k = rest
        if k not in coeffs:
            coeffs[k] = Fraction(0)
            keys[k] = " ".join(serialize(f) for f in k)
            order.append(k)
        coeffs[k] += c
    out: list[Expr] = []
    for k in sorted(order, key=lambda k: keys[k]):
        if coeffs[k] != 0:
            out.append(_make_product(coeffs[k], k))
    if total != 0 or not out:
        out.insert(0, Const(total))
    if len(out) == 1:
        return out[0]
    return Sum(tuple(out))


def _norm_product(factors: list[Expr]) -> Expr:
    flat: list[Expr] = []
    for f in factors:
        if isinstance(f, Product):
            flat.extend(f.factors)
        else:
            flat.append(f)
    # exp factors combine first: e^a * e^b = e^(a+b), cancelling oppositions
    exp_arg_terms: list[Expr] = []
    rest: list[Expr] = []
    for f in flat:
        b, p = (f.base, f.exponent) if isinstance(f, Power) else (f, Fraction(1))
        if isinstance(b, Exp):
            exp_arg_terms.append(_norm_product([Const(p), b.arg]))
        else:
            rest.append(f)
    if exp_arg_terms:
        combined = _norm_sum(exp_arg_terms)
        for t in (combined.terms if isinstance(combined, Sum) else (combined,)):
            ef = _norm_exp(t)
            if isinstance(ef, Product):
                rest.extend(ef.factors)
            else:
                rest.append(ef)
    coeff = Fraction(1)
    expo: dict[str, Fraction] = {}
    base_of: dict[str, Expr] = {}
    exp_out: list[Expr] = []
    for f in rest:
        if isinstance(f, Const):
            coeff *= f.value
            continue
        if isinstance(f, Exp):
            exp_out.append(f)  # already combined and atomic
            continue
        if isinstance(f, Power):
            b, p = f.base, f.exponent
        else:
            b, p = f, Fraction(1)
        k = serialize(b)
        if k not in expo:
            expo[k] = Fraction(0)
            base_of[k] = b
        expo[k] += p
    if coeff == 0:
        return ZERO
    out: list[Expr] = list(exp_out)
    for k, p in expo.items():
        f = _norm_power(base_of[k], p)
        if isinstance(f, Const):
            coeff *= f.value
        else:
            out.append(f)
    if coeff == 0:
        return ZERO
    # collected powers may themselves be products (e.g. Exp splitting); reflatten once
    if any(isinstance(f, Product) for f in out):
        return _norm_product([Const(coeff), *out])
    # distribute a constant over a lone sum: 2*(a+b) -> 2a+2b (linear, no blowup)
    if coeff != 1 and len(out) == 1 and isinstance(out[0], Sum):
        return _norm_sum([_norm_product([Const(coeff), t]) for t in out[0].terms])
    return _make_product(coeff, out)


def _norm_power(base: Expr, p: Fraction) -> Expr:
    p = Fraction(p)
    if p == 0:
        return ONE
    if p == 1:
        return base
    if isinstance(base, Const):
        v = exact_rational_pow(base.value, p)
        if v is not None:
            return Const(v)
        return Power(base, p)
    if isinstance(base, Exp):
        return _norm_exp(_norm_product([Const(p), base.arg]))
    if isinstance(base, Product) and p.denominator == 1:
        # (a*b)^n = a^n * b^n for integer n (same domain of definition)
        return _norm_product([_norm_power(f, p) for f in base.factors])
    if isinstance(base, Power):
        q = base.exponent
        # (b^q)^p == b^(q*p) except when q is an even integer and p is not an
        # integer: ((x^2)^(1/2) is |x|, not x).
        q_even_int = q.denominator == 1 and q.numerator % 2 == 0
        if not (q_even_int and p.denominator != 1):
            return _norm_power(base.base, q * p)
    return Power(base, p)


def _norm_log(arg: Expr) -> Expr:
    if isinstance(arg, Const) and arg.value == 1:
        return ZERO
    if isinstance(arg, Exp):
        return arg.arg
    return Log(arg)


def _norm_exp(arg: Expr) -> Expr:
    if isinstance(arg, Const) and arg.value == 0:
        return ONE
    if isinstance(arg, Log):
        return arg.arg
    if isinstance(arg, Sum):
        # e^(a+b) = e^a * e^b everywhere; canonical form keeps exp args atomic
        return _norm_product([_norm_exp(t) for t in arg.terms])
    return Exp(arg)


# Smart constructors (normalize as they build).

def add(*terms: Expr | Rational) -> Expr:
    return _norm_sum([normalize(_coerce(t)) for t in terms])


def mul(*factors: Expr | Rational) -> Expr:
    return _norm_product([normalize(_coerce(f)) for f in factors])


def sub(a: Expr | Rational, b: Expr | Rational) -> Expr:
    return add(_coerce(a), mul(const(-1), _coerce(b)))


def div(a: Expr | Rational, b: Expr | Rational) -> Expr:
    return mul(_coerce(a), pow_(_coerce(b), Fraction(-1)))


def pow_(base: Expr | Rational, p: Rational) -> Expr:
    return _norm_power(normalize(_coerce(base)), Fraction(p))


def log(arg: Expr | Rational) -> Expr:
    return _norm_log(normalize(_coerce(arg)))


def exp(arg: Expr | Rational) -> Expr:
    return _norm_exp(normalize(_coerce(arg)))


# ---------------------------------------------------------------------------
# Evaluation: exact rational arithmetic where possible, round-to-nearest
# float otherwise. Overflow becomes +/-inf, never an exception; undefined
# operations raise DomainError.
# ---------------------------------------------------------------------------

Number = Union[Fraction, float]


def evaluate(e: Expr, assignment: Mapping[str, "Number | int"]) -> Number:
    v = _eval(e, assignment)
    if isinstance(v, float) and math.isnan(v):
        raise DomainError(f"indeterminate value for {serialize(e)}")
    return v


def _eval(e: Expr, a: Mapping[str, "Number | int"]) -> Number:
    if isinstance(e, Const):
        return e.value
    if isinstance(e, Var):
        try:
            v = a[e.name]
        except KeyError:
            raise DomainError(f"unassigned variable {e.name}") from None
        return Fraction(v) if isinstance(v, int) else v
    if isinstance(e, Sum):
        vals = [_eval(t, a) for t in e.terms]
        if all(isinstance(v, Fraction) for v in vals):
            return sum(vals, Fraction(0))
        out = 0.0
        for v in vals:
            out += float(v)
        if math.isnan(out):
            raise DomainError("inf - inf in sum")
        return out
    if isinstance(e, Product):
        vals = [_eval(f, a) for f in e.factors]
        if all(isinstance(v, Fraction) for v in vals):
            out_f = Fraction(1)
            for v in vals:
                out_f *= v
            return out_f
        out = 1.0
        for v in vals:
            out *= float(v)
        if math.isnan(out):
            raise DomainError("0 * inf in product")
        return out
    if isinstance(e, Power):
        b = _eval(e.base, a)
        p = e.exponent
        if isinstance(b, Fraction):
            v = exact_rational_pow(b, p)
            if v is not None:
                return v
            if b == 0 and p < 0:
                raise DomainError("0 to a negative power")
            if b < 0 and p.denominator != 1:
                raise DomainError("negative base with non-integer exponent")
            b = float(b)
        if math.isinf(b):
            if b > 0:
                return math.inf if p > 0 else 0.0
            if p.denominator != 1:
                raise DomainError("negative base with non-integer exponent")
            mag = math.inf if p > 0 else 0.0
            return -mag if p.numerator % 2 else mag
        if b == 0.0 and p < 0:
            raise DomainError("0 to a negative power")
        if b < 0 and p.denominator != 1:
            raise DomainError("negative base with non-integer exponent")
        try:
            if b < 0:
                m = math.pow(-b, float(p))
                return -m if p.numerator % 2 else m
            return math.pow(b, float(p))
        except OverflowError:
            return math.inf
    if isinstance(e, Log):
        v = _eval(e.arg, a)
        if isinstance(v, Fraction):
            if v <= 0:
                raise DomainError("log of a non-positive value")
            if v == 1:
                return Fraction(0)
            # stays accurate for huge rationals that overflow float()
            return math.log(v.numerator) - math.log(v.denominator)
        if math.isinf(v):
            return math.inf
        if v <= 0:
            raise DomainError("log of a non-positive value")
        return math.log(v)
    if isinstance(e, Exp):
        v = _eval(e.arg, a)
        if isinstance(v, Fraction):
            if v == 0:
                return Fraction(1)
            v = float(v)
        if math.isinf(v):
            return math.inf if v > 0 else 0.0
        try:
            return math.exp(v)
        except OverflowError:
            return math.inf
    raise TypeError(f"not an Expr: {e!r}")


# ---------------------------------------------------------------------------
# Differentiation (result normalized)
# ---------------------------------------------------------------------------

def differentiate(e: Expr, v: str) -> Expr:
    return normalize(_diff(e, v))


def _diff(e: Expr, v: str) -> Expr:
    if isinstance(e, Const):
        return ZERO
    if isinstance(e, Var):
        return ONE if e.name == v else ZERO
    if isinstance(e, Sum):
        return Sum(tuple(_diff(t, v) for t in e.terms))
    if isinstance(e, Product):
        parts = []
        for i, f in enumerate(e.factors):
            others = e.factors[:i] + e.factors[i + 1:]
            parts.append(Product((_diff(f, v), *others)))
        return Sum(tuple(parts))
    if isinstance(e, Power):
        return Product((Const(e.exponent), Power(e.base, e.exponent - 1), _diff(e.base, v)))
    if isinstance(e, Log):
        return Product((_diff(e.arg, v), Power(e.arg, Fraction(-1))))
    if isinstance(e, Exp):
        return Product((_diff(e.arg, v), e))
    raise TypeError(f"not an Expr: {e!r}")


# ---------------------------------------------------------------------------
# Substitution and expansion
# ---------------------------------------------------------------------------

def substitute(e: Expr, v: str, replacement: Expr) -> Expr:
    """Replace every occurrence of variable v; result normalized."""
    return normalize(_subst(e, v, replacement))


def _subst(e: Expr, v: str, r: Expr) -> Expr:
    if isinstance(e, Const):
        return e
    if isinstance(e, Var):
        return r if e.name == v else e
    if isinstance(e, Sum):
        return Sum(tuple(_subst(t, v, r) for t in e.terms))
    if isinstance(e, Product):
        return Product(tuple(_subst(f, v, r) for f in e.factors))
    if isinstance(e, Power):
        return Power(_subst(e.base, v, r), e.exponent)
    if isinstance(e, Log):
        return Log(_subst(e.arg, v, r))
    if isinstance(e, Exp):
        return Exp(_subst(e.arg, v, r))
    raise TypeError(f"not an Expr: {e!r}")


_EXPAND_TERM_CAP = 512


def expand(e: Expr) -> Expr:
    """Distribute products over sums (and small positive integer powers of
    sums). Value-preserving everywhere; may grow the expression, so capped.
    """
    return normalize(_expand(normalize(e)))


def _expand(e: Expr) -> Expr:
    if isinstance(e, (Const, Var)):
        return e
    if isinstance(e, Sum):
        return _norm_sum([_expand(t) for t in e.terms])
    if isinstance(e, Power):
        base = _expand(e.base)
        p = e.exponent
        if isinstance(base, Sum) and p.denominator == 1 and 1 < p.numerator <= 8:
            if len(base.terms) ** p.numerator <= _EXPAND_TERM_CAP:
                out = base
                for _ in range(p.numerator - 1):
                    out = _expand_product_pair(out, base)
                return out
        return _norm_power(base, p)
    if isinstance(e, Product):
        factors = [_expand(f) for f in e.factors]
        out: Expr = ONE
        for f in factors:
            out = _expand_product_pair(out, f)
        return out
    if isinstance(e, Log):
        return _norm_log(_expand(e.arg))
    if isinstance(e, Exp):
        return _norm_exp(_expand(e.arg))
    raise TypeError(f"not an Expr: {e!r}")


def _expand_product_pair(a: Expr, b: Expr) -> Expr:
    a_terms = a.terms if isinstance(a, Sum) else (a,)
    b_terms = b.terms if isinstance(b, Sum) else (b,)
    if len(a_terms) * len(b_terms) > _EXPAND_TERM_CAP:
        return _norm_product([a, b])
    return _norm_sum([_norm_product([x, y]) for x in a_terms for y in b_terms])
