"""Regime-wise leading-term replacement.

dominate_bound turns an expression with rational structure (a product of
sums and powers of sums) into a certified claim source <= K * bound on a
region, where bound is a single monomial and K a positive rational. The
derivation is a list of justification steps drawn from a closed rule set;
replay() re-checks every step independently plus a numeric spot check.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional

import numpy as np

from . import kernels
from .domain import (
    Monotonicity, Region, Sign, is_nonneg, is_pos, sign_of,
    structural_monotonicity,
)
from .expr import (
    Const, Expr, Power, Product, Sum, const, count_nodes, exact_rational_pow,
    expand, mul, normalize, pow_, serialize, sub, substitute,
)
from .prover import cheap_nonneg, sample_region
from .tape import compile_expr

RULES = (
    "NumeratorTermCount",
    "DenominatorLeadingTerm",
    "PositivityDrop",
    "MonotoneSubstitution",
    "ConstantAbsorb",
)


class PositivityUnderivable(ValueError):
    """A sum whose term signs cannot be established from the region."""

    def __init__(self, sub_sum: Expr):
        self.sub_sum = sub_sum
        super().__init__(f"cannot derive positivity of {serialize(sub_sum)}")


class NoDominantTerm(ValueError):
    """No term of a sum provably dominates the others on the region."""

    def __init__(self, sub_sum: Expr):
        self.sub_sum = sub_sum
        super().__init__(f"no dominant term in {serialize(sub_sum)}")


@dataclass(frozen=True)
class JustificationStep:
    rule: str
    position: str          # "upper" (claims before <= after) or "lower" (>=)
    before: Expr
    after: Expr
    count: int = 0         # NumeratorTermCount arity
    var: str = ""          # MonotoneSubstitution variable
    bound: Optional[Expr] = None
    factor: Fraction = Fraction(1)  # ConstantAbsorb contribution to K

    def to_dict(self) -> dict:
        d = {"rule": self.rule, "position": self.position,
             "before": serialize(self.before), "after": serialize(self.after)}
        if self.count:
            d["count"] = self.count
        if self.var:
            d["var"] = self.var
        if self.bound is not None:
            d["bound"] = serialize(self.bound)
        if self.factor != 1:
            d["factor"] = str(self.factor)
        return d


@dataclass(frozen=True)
class RegimeBound:
    source: Expr
    region: Region
    bound: Expr
    factor: Fraction
    steps: tuple[JustificationStep, ...] = ()

    def to_dict(self) -> dict:
        return {
            "source": serialize(self.source),
            "region": self.region.key(),
            "bound": serialize(self.bound),
            "factor": str(self.factor),
            "steps": [s.to_dict() for s in self.steps],
        }


def _dominant_term(terms: tuple[Expr, ...], r: Region) -> Optional[Expr]:
    """The term provably >= every other term, ties broken by smaller AST."""
    winners = []
    for t in terms:
        if all(t is u or cheap_nonneg(normalize(sub(t, u)), r, nodes=16)[0]
               for u in terms):
            winners.append(t)
    if not winners:
        return None
    return min(winners, key=lambda t: (count_nodes(t), serialize(t)))


def _count_power(n: int, p: Fraction) -> Fraction:
    """Rational upper bound for n**p (n >= 1, p > 0)."""
    v = exact_rational_pow(Fraction(n), p)
    if v is not None:
        return v
    return Fraction(n) ** math.ceil(p)


def dominate_bound(e: Expr, r: Region) -> RegimeBound:
    """Bound e above by K times a single monomial on r.

    Per sum factor the dominating term is chosen by the prover's comparison
    engine; positive powers pay a term-count factor into K, negative powers
    keep only the leading denominator term. Raises PositivityUnderivable or
    NoDominantTerm when the region does not support the derivation.
    """
    source = normalize(e)
    factors = source.factors if isinstance(source, Product) else (source,)
    steps: list[JustificationStep] = []
    k = Fraction(1)
    pieces: list[Expr] = []
    for f in factors:
        base, p = (f.base, f.exponent) if isinstance(f, Power) else (f, Fraction(1))
        base = expand(base)
        if not isinstance(base, Sum):
            pieces.append(f)
            continue
        terms = base.terms
        for t in terms:
            if sign_of(t, r) not in (Sign.POS, Sign.NONNEG, Sign.ZERO):
                raise PositivityUnderivable(base)
        lead = _dominant_term(terms, r)
        if lead is None:
            raise NoDominantTerm(base)
        if p > 0:
            n = len(terms)
            steps.append(JustificationStep(
                "NumeratorTermCount", "upper", base,
                normalize(mul(const(n), lead)), count=n))
            k *= _count_power(n, p)
        else:
            if not is_pos(lead, r):
                raise PositivityUnderivable(base)
            steps.append(JustificationStep(
                "DenominatorLeadingTerm", "lower", base, lead))
        pieces.append(pow_(lead, p))
    raw = normalize(mul(*pieces)) if pieces else const(1)
    coeff = Fraction(1)
    if isinstance(raw, Const):
        coeff, raw = raw.value, const(1)
    elif isinstance(raw, Product):
        rest = []
        for f in raw.factors:
            if isinstance(f, Const):
                coeff *= f.value
            else:
                rest.append(f)
        if rest:
            raw = rest[0] if len(rest) == 1 else Product(tuple(rest))
        else:
            raw = const(1)
    if coeff <= 0:
        raise PositivityUnderivable(source)
    if coeff != 1:
        steps.append(JustificationStep(
            "ConstantAbsorb", "upper", normalize(mul(const(coeff), raw)), raw,
            factor=coeff))
        k *= coeff
    return RegimeBound(source, r, raw, k, tuple(steps))


# ---------------------------------------------------------------------------
# Certificate replay
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ReplayResult:
    valid: bool
    failed_step: int = -1   # index of the first bad step; len(steps) = spot check

    def __bool__(self) -> bool:
        return self.valid


def _check_step(s: JustificationStep, r: Region) -> bool:
    if s.rule not in RULES:
        return False
    if s.rule == "NumeratorTermCount":
        if s.position != "upper" or not isinstance(s.before, Sum):
            return False
        terms = s.before.terms
        if s.count != len(terms):
            return False
        lead = normalize(mul(const(Fraction(1, s.count)), s.after))
        if not all(is_nonneg(t, r) for t in terms):
            return False
        return all(cheap_nonneg(normalize(sub(lead, t)), r, nodes=16)[0]
                   for t in terms)
    if s.rule == "DenominatorLeadingTerm":
        if s.position != "lower" or not isinstance(s.before, Sum):
            return False
        if serialize(s.after) not in {serialize(t) for t in s.before.terms}:
            return False
        return all(is_nonneg(t, r) for t in s.before.terms)
    if s.rule == "PositivityDrop":
        diff = sub(s.before, s.after) if s.position == "lower" else sub(s.after, s.before)
        return cheap_nonneg(normalize(diff), r)[0]
    if s.rule == "MonotoneSubstitution":
        if not s.var or s.bound is None:
            return False
        mono = structural_monotonicity(s.before, s.var, r)
        if s.position == "upper":
            if mono is not Monotonicity.INCREASING:
                return False
            ok = any(serialize(b.expr) == serialize(s.bound)
                     for b in _solved_uppers(r, s.var))
        else:
            if mono is not Monotonicity.DECREASING:
                return False
            ok = any(serialize(b.expr) == serialize(s.bound)
                     for b in _solved_lowers(r, s.var))
        if not ok:
            return False
        return serialize(substitute(s.before, s.var, s.bound)) == serialize(s.after)
    if s.rule == "ConstantAbsorb":
        want = normalize(mul(const(s.factor), s.after))
        return serialize(want) == serialize(s.before) and s.factor > 0
    return False


def _solved_uppers(r: Region, v: str):
    from .domain import solved_bounds, VarBounds
    return solved_bounds(r).get(v, VarBounds()).uppers


def _solved_lowers(r: Region, v: str):
    from .domain import solved_bounds, VarBounds
    return solved_bounds(r).get(v, VarBounds()).lowers


def replay(rb: RegimeBound, spot_samples: int = 200, seed: int = 0) -> ReplayResult:
    """Re-verify every justification step, then numerically spot-check the
    final claim source <= K * bound on sampled region points."""
    for i, s in enumerate(rb.steps):
        if not _check_step(s, rb.region):
            return ReplayResult(False, i)
    rng = np.random.default_rng(seed + 17)
    names = rb.region.var_names()
    pts = sample_region(rb.region, spot_samples, rng)
    if pts.shape[1]:
        ts = compile_expr(rb.source, names)
        tb = compile_expr(normalize(mul(const(rb.factor), rb.bound)), names)
        vs, oks = kernels.eval_points(ts, pts)
        vb, okb = kernels.eval_points(tb, pts)
        good = oks & okb
        slack = 1e-9 * np.maximum(1.0, np.abs(vb[good]))
        if np.any(vs[good] > vb[good] + slack):
            return ReplayResult(False, len(rb.steps))
    return ReplayResult(True)
