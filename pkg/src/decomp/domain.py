"""Regions (variable declarations + constraint conjunctions) and the
structural facts derivable from them: per-variable bounds, term signs,
and monotonicity of expressions along a variable.

Everything here is sound but incomplete: Unknown is always a legal answer.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Mapping, Optional

from .expr import (
    Const, Var, Sum, Product, Power, Log, Exp, Expr,
    free_vars, normalize, serialize, sub as expr_sub,
    exp as expr_exp, mul, const, ZERO,
)

Relation = str  # one of "<=", "<", ">=", ">", "="
_RELATIONS = ("<=", "<", ">=", ">", "=")
_FLIP = {"<=": ">=", "<": ">", ">=": "<=", ">": "<", "=": "="}


@dataclass(frozen=True)
class Constraint:
    lhs: Expr
    rel: Relation
    rhs: Expr

    def __post_init__(self):
        if self.rel not in _RELATIONS:
            raise ValueError(f"bad relation {self.rel!r}")
        object.__setattr__(self, "lhs", normalize(self.lhs))
        object.__setattr__(self, "rhs", normalize(self.rhs))

    def flipped(self) -> "Constraint":
        return Constraint(self.rhs, _FLIP[self.rel], self.lhs)

    def negated(self) -> "Constraint":
        neg = {"<=": ">", "<": ">=", ">=": "<", ">": "<="}
        if self.rel == "=":
            raise ValueError("cannot negate an equation into one constraint")
        return Constraint(self.lhs, neg[self.rel], self.rhs)

    def key(self) -> str:
        return f"{serialize(self.lhs)} {self.rel} {serialize(self.rhs)}"


class VarRole(enum.Enum):
    REAL = "real"
    INDEX = "index"


@dataclass(frozen=True)
class Region:
    """Ordered variables with roles plus a deduplicated constraint conjunction."""

    variables: tuple[tuple[str, VarRole], ...]
    constraints: tuple[Constraint, ...]

    def __post_init__(self):
        names = self.var_names()
        if len(set(names)) != len(names):
            raise ValueError("duplicate variable declaration")
        for c in self.constraints:
            undeclared = (free_vars(c.lhs) | free_vars(c.rhs)) - set(names)
            if undeclared:
                raise ValueError(f"constraint uses undeclared variables {sorted(undeclared)}")
        seen: dict[str, Constraint] = {}
        for c in self.constraints:
            seen.setdefault(c.key(), c)
        object.__setattr__(self, "constraints", tuple(seen.values()))

    def var_names(self) -> tuple[str, ...]:
        return tuple(n for n, _ in self.variables)

    def role(self, name: str) -> VarRole:
        for n, r in self.variables:
            if n == name:
                return r
        raise KeyError(name)

    def with_constraints(self, *extra: Constraint) -> "Region":
        return Region(self.variables, self.constraints + tuple(extra))

    def without_var(self, name: str) -> "Region":
        """Project out a variable, keeping only constraints that avoid it."""
        keep = tuple(
            c for c in self.constraints
            if name not in free_vars(c.lhs) | free_vars(c.rhs)
        )
        return Region(tuple(v for v in self.variables if v[0] != name), keep)

    def key(self) -> str:
        vs = ",".join(f"{n}:{r.value}" for n, r in self.variables)
        cs = " & ".join(sorted(c.key() for c in self.constraints))
        return f"[{vs}] {cs}"


def region(names: "list[str] | tuple[str, ...]", constraints: "list[Constraint] | tuple[Constraint, ...]" = (),
           index_vars: "tuple[str, ...]" = ()) -> Region:
    vs = tuple((n, VarRole.INDEX if n in index_vars else VarRole.REAL) for n in names)
    return Region(vs, tuple(constraints))


Assignment = Mapping[str, "Fraction | int | float"]


# ---------------------------------------------------------------------------
# Per-variable bounds solved out of the constraints
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Bound:
    expr: Expr       # bound value, free of the bounded variable
    strict: bool


@dataclass
class VarBounds:
    lowers: list[Bound] = field(default_factory=list)
    uppers: list[Bound] = field(default_factory=list)


def _linear_in(e: Expr, v: str) -> Optional[tuple[Fraction, Expr]]:
    """If e == a*v + rest with rational a != 0 and v not in rest, return (a, rest)."""
    terms = e.terms if isinstance(e, Sum) else (e,)
    coeff = Fraction(0)
    rest: list[Expr] = []
    for t in terms:
        fv = free_vars(t)
        if v not in fv:
            rest.append(t)
            continue
        if isinstance(t, Var):
            coeff += 1
            continue
        if isinstance(t, Product):
            others = []
            hits = 0
            for f in t.factors:
                if isinstance(f, Var) and f.name == v:
                    hits += 1
                elif v in free_vars(f):
                    return None
                else:
                    others.append(f)
            if hits != 1:
                return None
            c = Fraction(1)
            clean = []
            for f in others:
                if isinstance(f, Const):
                    c *= f.value
                else:
                    clean.append(f)
            if clean:
                return None  # non-constant coefficient
            coeff += c
            continue
        return None
    if coeff == 0:
        return None
    rest_e = normalize(Sum(tuple(rest))) if rest else ZERO
    return coeff, rest_e


def _log_pattern(e: Expr, v: str) -> Optional[tuple[Fraction, Expr]]:
    """If e == a*log(v) + rest (v nowhere else), return (a, rest)."""
    terms = e.terms if isinstance(e, Sum) else (e,)
    coeff = Fraction(0)
    rest: list[Expr] = []
    for t in terms:
        if v not in free_vars(t):
            rest.append(t)
            continue
        c, fs = _split_term(t)
        if len(fs) == 1 and isinstance(fs[0], Log) and fs[0].arg == Var(v):
            coeff += c
            continue
        return None
    if coeff == 0:
        return None
    rest_e = normalize(Sum(tuple(rest))) if rest else ZERO
    return coeff, rest_e


def _split_term(t: Expr) -> tuple[Fraction, tuple[Expr, ...]]:
    if isinstance(t, Const):
        return t.value, ()
    if isinstance(t, Product):
        c = Fraction(1)
        fs = []
        for f in t.factors:
            if isinstance(f, Const):
                c *= f.value
            else:
                fs.append(f)
        return c, tuple(fs)
    return Fraction(1), (t,)


_bounds_cache: dict[str, dict[str, VarBounds]] = {}


def solved_bounds(r: Region) -> dict[str, VarBounds]:
    """Per-variable bounds isolated from the region's constraints.

    Handles v rel E, a*v + rest rel E, and a*log(v) + rest rel E (log is
    total on the regions we build, where every log argument has a positive
    lower bound; exponentiation of both sides is then order-preserving).
    """
    ck = r.key()
    hit = _bounds_cache.get(ck)
    if hit is not None:
        return hit
    out: dict[str, VarBounds] = {n: VarBounds() for n in r.var_names()}

    def record(v: str, rel: Relation, bound: Expr):
        if v in free_vars(bound):
            return
        b = Bound(normalize(bound), strict=rel in ("<", ">"))
        if rel in ("<=", "<"):
            out[v].uppers.append(b)
        elif rel in (">=", ">"):
            out[v].lowers.append(b)
        else:
            out[v].uppers.append(Bound(b.expr, False))
            out[v].lowers.append(Bound(b.expr, False))

    for c in r.constraints:
        diff = normalize(expr_sub(c.lhs, c.rhs))  # diff rel 0
        rel = c.rel
        for v in free_vars(diff):
            lin = _linear_in(diff, v)
            if lin is not None:
                a, rest = lin
                bound = normalize(mul(const(Fraction(-1) / a), rest))
                record(v, rel if a > 0 else _FLIP[rel], bound)
                continue
            lg = _log_pattern(diff, v)
            if lg is not None:
                a, rest = lg
                # a*log v rel -rest  ->  v rel' exp(-rest/a); needs v > 0
                bound = expr_exp(mul(const(Fraction(-1) / a), rest))
                record(v, rel if a > 0 else _FLIP[rel], bound)
    if len(_bounds_cache) > 4096:
        _bounds_cache.clear()
    _bounds_cache[ck] = out
    return out


# ---------------------------------------------------------------------------
# Rational interval facts (best-effort constant bounds over a region)
# ---------------------------------------------------------------------------

_DEPTH_CAP = 12


def const_lower(e: Expr, r: Region, _depth: int = 0) -> Optional[Fraction]:
    lo, _ = _const_range(e, r, _depth)
    return lo


def const_upper(e: Expr, r: Region, _depth: int = 0) -> Optional[Fraction]:
    _, hi = _const_range(e, r, _depth)
    return hi


def _const_range(e: Expr, r: Region, d: int) -> tuple[Optional[Fraction], Optional[Fraction]]:
    """Rational (lo, hi) bounds valid on all of r; None means unbounded/unknown.

    Log/exp values are bounded only by rationals (log x >= 0 for x >= 1, ...),
    which is all the structural rules need.
    """
    if d > _DEPTH_CAP:
        return None, None
    if isinstance(e, Const):
        return e.value, e.value
    if isinstance(e, Var):
        lo = hi = None
        for b in solved_bounds(r).get(e.name, VarBounds()).lowers:
            blo, _ = _const_range(b.expr, r.without_var(e.name), d + 1)
            if blo is not None and (lo is None or blo > lo):
                lo = blo
        for b in solved_bounds(r).get(e.name, VarBounds()).uppers:
            _, bhi = _const_range(b.expr, r.without_var(e.name), d + 1)
            if bhi is not None and (hi is None or bhi < hi):
                hi = bhi
        return lo, hi
    if isinstance(e, Sum):
        lo = Fraction(0)
        hi = Fraction(0)
        for t in e.terms:
            tlo, thi = _const_range(t, r, d + 1)
            lo = None if (lo is None or tlo is None) else lo + tlo
            hi = None if (hi is None or thi is None) else hi + thi
        return lo, hi
    if isinstance(e, Product):
        lo, hi = Fraction(1), Fraction(1)
        for f in e.factors:
            flo, fhi = _const_range(f, r, d + 1)
            lo, hi = _interval_mul(lo, hi, flo, fhi)
        return lo, hi
    if isinstance(e, Power):
        blo, bhi = _const_range(e.base, r, d + 1)
        p = e.exponent
        if p > 0:
            if blo is not None and blo >= 0:
                plo = _rat_pow_down(blo, p)
                phi = _rat_pow_up(bhi, p) if bhi is not None else None
                return plo, phi
            return None, None
        # p < 0 on a positive base
        if blo is not None and blo > 0:
            phi = _rat_pow_up_inv(blo, p)
            plo = _rat_pow_down_inv(bhi, p) if bhi is not None else Fraction(0)
            return plo, phi
        return None, None
    if isinstance(e, Log):
        alo, ahi = _const_range(e.arg, r, d + 1)
        lo = Fraction(0) if (alo is not None and alo >= 1) else None
        hi = Fraction(0) if (ahi is not None and ahi <= 1) else None
        # crude rational log bounds: log x <= x - 1, log x >= 1 - 1/x (x > 0)
        if hi is None and ahi is not None:
            hi = ahi - 1
        if lo is None and alo is not None and alo > 0:
            lo = 1 - Fraction(1, 1) / alo
        return lo, hi
    if isinstance(e, Exp):
        alo, ahi = _const_range(e.arg, r, d + 1)
        lo = Fraction(0)
        if alo is not None and alo >= 0:
            lo = 1 + alo  # e^x >= 1 + x
        hi = None
        if ahi is not None and ahi <= 0:
            hi = Fraction(1)
        return lo, hi
    return None, None


def _interval_mul(alo, ahi, blo, bhi):
    def m(x, y):
        if x is None or y is None:
            return None
        return x * y
    cands_lo = []
    cands_hi = []
    # None endpoints poison any product they participate in except when the
    # other side pins the sign; keep it simple and conservative.
    for x, xs in ((alo, "lo"), (ahi, "hi")):
        for y, ys in ((blo, "lo"), (bhi, "hi")):
            v = m(x, y)
            cands_lo.append(v)
            cands_hi.append(v)
    if any(v is None for v in cands_lo):
        # one special case worth keeping: both factors nonnegative
        if alo is not None and alo >= 0 and blo is not None and blo >= 0:
            lo = alo * blo
            hi = None if (ahi is None or bhi is None) else ahi * bhi
            return lo, hi
        return None, None
    return min(cands_lo), max(cands_hi)


def _rat_pow_down(x: Fraction, p: Fraction) -> Optional[Fraction]:
    from .expr import exact_rational_pow
    v = exact_rational_pow(x, p)
    if v is not None:
        return v
    if x >= 1:
        return _rat_pow_down(x, Fraction(int(p)))  # floor exponent keeps it a lower bound
    return Fraction(0)


def _rat_pow_up(x: Fraction, p: Fraction) -> Optional[Fraction]:
    from .expr import exact_rational_pow
    v = exact_rational_pow(x, p)
    if v is not None:
        return v
    if x >= 1:
        q = Fraction(int(p) + 1)
        return exact_rational_pow(x, q)
    return Fraction(1) if p > 0 else None


def _rat_pow_up_inv(blo: Fraction, p: Fraction) -> Optional[Fraction]:
    # upper bound of x^p (p<0) given x >= blo > 0
    v = _rat_pow_down(blo, -p)
    if v is None or v == 0:
        return None
    return Fraction(1) / v


def _rat_pow_down_inv(bhi: Fraction, p: Fraction) -> Optional[Fraction]:
    v = _rat_pow_up(bhi, -p)
    if v is None or v == 0:
        return None
    return Fraction(1) / v


# ---------------------------------------------------------------------------
# Sign analysis
# ---------------------------------------------------------------------------

class Sign(enum.Enum):
    POS = "pos"            # > 0 everywhere on the region
    NONNEG = "nonneg"      # >= 0
    NEG = "neg"
    NONPOS = "nonpos"
    ZERO = "zero"
    UNKNOWN = "unknown"


def sign_of(e: Expr, r: Region) -> Sign:
    if isinstance(e, Const):
        if e.value > 0:
            return Sign.POS
        if e.value < 0:
            return Sign.NEG
        return Sign.ZERO
    if isinstance(e, Exp):
        return Sign.POS
    if isinstance(e, Var):
        lo, hi = _const_range(e, r, 0)
        if lo is not None:
            if lo > 0:
                return Sign.POS
            if lo >= 0:
                strict = any(
                    b.strict and const_lower(b.expr, r.without_var(e.name)) is not None
                    and const_lower(b.expr, r.without_var(e.name)) >= 0
                    for b in solved_bounds(r).get(e.name, VarBounds()).lowers
                )
                return Sign.POS if strict else Sign.NONNEG
        if hi is not None:
            if hi < 0:
                return Sign.NEG
            if hi <= 0:
                return Sign.NONPOS
        return Sign.UNKNOWN
    if isinstance(e, Sum):
        signs = [sign_of(t, r) for t in e.terms]
        if all(s in (Sign.POS, Sign.NONNEG, Sign.ZERO) for s in signs):
            return Sign.POS if any(s == Sign.POS for s in signs) else Sign.NONNEG
        if all(s in (Sign.NEG, Sign.NONPOS, Sign.ZERO) for s in signs):
            return Sign.NEG if any(s == Sign.NEG for s in signs) else Sign.NONPOS
        return Sign.UNKNOWN
    if isinstance(e, Product):
        sign = Sign.POS
        for f in e.factors:
            s = sign_of(f, r)
            if s == Sign.UNKNOWN:
                return Sign.UNKNOWN
            if s == Sign.ZERO:
                return Sign.ZERO
            sign = _sign_mul(sign, s)
        return sign
    if isinstance(e, Power):
        s = sign_of(e.base, r)
        p = e.exponent
        if s == Sign.POS:
            return Sign.POS
        if s == Sign.ZERO:
            return Sign.ZERO if p > 0 else Sign.UNKNOWN
        if s == Sign.NONNEG:
            return Sign.NONNEG if p > 0 else Sign.UNKNOWN
        if p.denominator == 1:
            even = p.numerator % 2 == 0
            if s == Sign.NEG:
                return Sign.POS if even else Sign.NEG
            if s == Sign.NONPOS and p > 0:
                return Sign.NONNEG if even else Sign.NONPOS
        # even integer exponent of an unknown base is still nonnegative
        if p.denominator == 1 and p.numerator % 2 == 0 and p > 0:
            return Sign.NONNEG
        return Sign.UNKNOWN
    if isinstance(e, Log):
        lo = const_lower(e.arg, r)
        if lo is not None and lo >= 1:
            return Sign.POS if lo > 1 else Sign.NONNEG
        hi = const_upper(e.arg, r)
        if hi is not None and hi <= 1 and (const_lower(e.arg, r) or 0) > 0:
            return Sign.NEG if hi < 1 else Sign.NONPOS
        return Sign.UNKNOWN
    raise TypeError(f"not an Expr: {e!r}")


def _sign_mul(a: Sign, b: Sign) -> Sign:
    neg = {Sign.POS: Sign.NEG, Sign.NONNEG: Sign.NONPOS,
           Sign.NEG: Sign.POS, Sign.NONPOS: Sign.NONNEG}
    weak = {Sign.POS: Sign.NONNEG, Sign.NEG: Sign.NONPOS}
    if b in (Sign.POS, Sign.NONNEG):
        out = a
    else:
        out = neg[a]
    if b in (Sign.NONNEG, Sign.NONPOS):
        out = weak.get(out, out)
    return out


def is_nonneg(e: Expr, r: Region) -> bool:
    return sign_of(e, r) in (Sign.POS, Sign.NONNEG, Sign.ZERO)


def is_pos(e: Expr, r: Region) -> bool:
    return sign_of(e, r) == Sign.POS


# ---------------------------------------------------------------------------
# Structural monotonicity
# ---------------------------------------------------------------------------

class Monotonicity(enum.Enum):
    INCREASING = "increasing"   # nondecreasing in v on all of r
    DECREASING = "decreasing"   # nonincreasing
    UNKNOWN = "unknown"


# internal lattice: CONST is both, so it combines freely
_CONST, _INC, _DEC, _UNK = 0, 1, 2, 3


def structural_monotonicity(e: Expr, v: str, r: Region) -> Monotonicity:
    """Sound rule base: nonnegative combinations of increasing nonnegative
    factors are increasing, exp/log preserve direction, positive powers
    preserve it on nonnegative bases, negative powers flip it on positive
    bases. Unknown is the fallback; never claims both directions.
    """
    m = _mono(normalize(e), v, r)
    if m == _INC or m == _CONST:
        return Monotonicity.INCREASING
    if m == _DEC:
        return Monotonicity.DECREASING
    return Monotonicity.UNKNOWN


def _mono_join(a: int, b: int) -> int:
    if a == _CONST:
        return b
    if b == _CONST or a == b:
        return a
    return _UNK


def _mono_flip(a: int) -> int:
    return {_CONST: _CONST, _INC: _DEC, _DEC: _INC, _UNK: _UNK}[a]


def _mono(e: Expr, v: str, r: Region) -> int:
    if v not in free_vars(e):
        return _CONST
    if isinstance(e, Var):
        return _INC
    if isinstance(e, Sum):
        out = _CONST
        for t in e.terms:
            out = _mono_join(out, _mono(t, v, r))
            if out == _UNK:
                return _UNK
        return out
    if isinstance(e, Product):
        dep = [f for f in e.factors if v in free_vars(f)]
        indep = [f for f in e.factors if v not in free_vars(f)]
        coeff_sign = Sign.POS
        for f in indep:
            s = sign_of(f, r)
            if s in (Sign.UNKNOWN,):
                return _UNK
            if s == Sign.ZERO:
                return _CONST
            coeff_sign = _sign_mul(coeff_sign, s)
        if len(dep) == 1:
            m = _mono(dep[0], v, r)
        else:
            # product of several v-dependent factors: need all nonnegative
            # and monotone the same way
            ms = []
            for f in dep:
                if sign_of(f, r) not in (Sign.POS, Sign.NONNEG, Sign.ZERO):
                    return _UNK
                ms.append(_mono(f, v, r))
            m = _CONST
            for mi in ms:
                m = _mono_join(m, mi)
            if m == _UNK:
                return _UNK
        if coeff_sign in (Sign.NEG, Sign.NONPOS):
            return _mono_flip(m)
        return m
    if isinstance(e, Power):
        mb = _mono(e.base, v, r)
        p = e.exponent
        s = sign_of(e.base, r)
        if p > 0:
            if s in (Sign.POS, Sign.NONNEG, Sign.ZERO):
                return mb
            if p.denominator == 1 and p.numerator % 2 == 1:
                return mb  # odd powers are increasing on all reals
            return _UNK
        if s == Sign.POS:
            return _mono_flip(mb)
        return _UNK
    if isinstance(e, Log):
        return _mono(e.arg, v, r)
    if isinstance(e, Exp):
        return _mono(e.arg, v, r)
    return _UNK
