"""Series verification: segment sums by integral comparison, plus the
geometric closed-form special case.

A ladder 0 = d_0 < d_1 < ... < d_k < inf splits the integer index range into
half-open segments. The first index point is always verified on its own (so
segment bounds may assume index >= start + 1), each segment's summand is
replaced by a certified monomial bound, and the segment sum is bounded in
closed form: increasing integrands integrate to b+1, decreasing ones pay one
endpoint term plus the integral.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional

from .domain import Constraint, Region, VarRole
from .expr import (
    Const, Expr, Power, Product, Var, add, const, free_vars, log, mul,
    normalize, pow_, serialize, sub, substitute,
)
from .prover import GridSpec, PieceResult, ProverOptions, cheap_nonneg, grid_search
from .simplify import NoDominantTerm, PositivityUnderivable, RegimeBound, dominate_bound
from .statements import Series


class DivergentTail(ValueError):
    """Infinite segment whose bound exponent is >= -1."""


class NonMonotoneBound(ValueError):
    """Segment bound is not a monomial with derivable-sign coefficient."""


def _split_monomial(bound: Expr, index: str) -> Optional[tuple[Expr, Fraction]]:
    """bound == c * index^k with c free of the index: return (c, k)."""
    factors = bound.factors if isinstance(bound, Product) else (bound,)
    k = Fraction(0)
    coeff: list[Expr] = []
    for f in factors:
        base, p = (f.base, f.exponent) if isinstance(f, Power) else (f, Fraction(1))
        if isinstance(base, Var) and base.name == index:
            k += p
            continue
        if index in free_vars(f):
            return None
        coeff.append(f)
    c = normalize(mul(*coeff)) if coeff else const(1)
    return c, k


def bound_segment_sum(rb: RegimeBound, index: str, a: Expr,
                      b: Optional[Expr]) -> Expr:
    """Closed-form upper bound for sum of rb.factor*rb.bound over the
    integers in [a, b) (b None means infinity).

    Increasing bounds (k >= 0): K * integral_a^(b+1) c t^k dt, the +1 shift
    covering the last integer cell exactly. Decreasing bounds (k < 0, needs
    a >= 1): K * (c a^k + integral_a^b c t^k dt); infinite b needs k < -1.
    """
    pm = _split_monomial(normalize(rb.bound), index)
    if pm is None:
        raise NonMonotoneBound(f"bound {serialize(rb.bound)} is not a monomial in {index}")
    c, k = pm
    params_r = rb.region.without_var(index)
    from .domain import is_nonneg
    if not is_nonneg(c, params_r):
        raise NonMonotoneBound(f"coefficient {serialize(c)} has underivable sign")
    kf = Fraction(rb.factor)
    if k >= 0:
        if b is None:
            raise DivergentTail("increasing bound summed to infinity")
        upper = add(b, 1)
        integral = mul(const(Fraction(1, 1) / (k + 1)),
                       sub(pow_(upper, k + 1), pow_(a, k + 1)))
        return normalize(mul(const(kf), c, integral))
    if not cheap_nonneg(normalize(sub(a, const(1))), params_r)[0]:
        raise NonMonotoneBound(f"segment start {serialize(a)} not provably >= 1")
    head = pow_(a, k)
    if b is None:
        if k >= -1:
            raise DivergentTail(f"tail exponent {k} >= -1 diverges")
        integral = mul(const(Fraction(-1) / (k + 1)), pow_(a, k + 1))
    elif k == -1:
        integral = sub(log(b), log(a))
    else:
        integral = mul(const(Fraction(1, 1) / (k + 1)),
                       sub(pow_(b, k + 1), pow_(a, k + 1)))
    return normalize(mul(const(kf), c, add(head, integral)))


@dataclass
class SeriesPiece:
    label: str
    result: PieceResult
    regime: Optional[dict] = None       # RegimeBound.to_dict()
    closed_form: str = ""

    def to_dict(self) -> dict:
        d = {"label": self.label, **self.result.to_dict()}
        if self.regime is not None:
            d["regime"] = self.regime
        if self.closed_form:
            d["closed_form"] = self.closed_form
        return d


@dataclass
class SeriesOutcome:
    status: str                     # "proved" | "unknown"
    c: Optional[Fraction]           # sum of segment constants
    pieces: list[SeriesPiece] = field(default_factory=list)
    reason: str = ""
    assumptions: list[str] = field(default_factory=list)
    elapsed: float = 0.0


def _match_geometric(s: Series) -> Optional[tuple[Fraction, Fraction]]:
    """summand == c * r^index with literal rationals, 0 < r < 1: (c, r)."""
    from .expr import Exp as _Exp, Log as _Log, exact_rational_pow
    summand = normalize(s.summand)
    factors = summand.factors if isinstance(summand, Product) else (summand,)
    c = Fraction(1)
    r: Optional[Fraction] = None
    for f in factors:
        if isinstance(f, Const):
            c *= f.value
            continue
        if isinstance(f, _Exp):
            # r^d normalizes to exp(scale * d * log(base))
            arg = f.arg
            fs = arg.factors if isinstance(arg, Product) else (arg,)
            scale = Fraction(1)
            seen_index = False
            base_val: Optional[Fraction] = None
            for p in fs:
                if isinstance(p, Const):
                    scale *= p.value
                elif isinstance(p, Var) and p.name == s.index:
                    seen_index = True
                elif isinstance(p, _Log) and isinstance(p.arg, Const):
                    base_val = p.arg.value
                else:
                    return None
            if not (seen_index and base_val is not None and base_val > 0):
                return None
            ratio = exact_rational_pow(base_val, scale)
            if ratio is None or not 0 < ratio < 1 or r is not None:
                return None
            r = ratio
            continue
        return None
    if r is None or c <= 0:
        return None
    return c, r


def prove_series(s: Series, ladder: tuple[Expr, ...],
                 grid: Optional[GridSpec] = None,
                 opts: Optional[ProverOptions] = None) -> SeriesOutcome:
    """Verify sum over the index of the summand << target on the parameter
    region: first index point separately, then one certified regime bound and
    closed-form segment sum per ladder segment. The global constant is the
    sum of segment constants (segments add)."""
    grid = grid or GridSpec.default()
    opts = opts or ProverOptions()
    t0 = time.monotonic()
    params = s.params_region
    pieces: list[SeriesPiece] = []
    assumptions = [c.key() for c in params.constraints]

    geo = _match_geometric(s)
    if geo is not None:
        c0, r0 = geo
        closed = const(c0 * r0 ** s.start / (1 - r0))
        res = grid_search(closed, s.target, params, grid, opts)
        pieces.append(SeriesPiece("geometric-closed-form", res,
                                  closed_form=serialize(closed)))
        status = "proved" if res.status == "proved" else "unknown"
        return SeriesOutcome(status, res.c, pieces,
                             "" if status == "proved" else res.reason,
                             assumptions, time.monotonic() - t0)

    # defense in depth: a ladder out of order would make half-open segment
    # arithmetic meaningless even though validate_cover normally rejects it
    edges_check = [const(s.start), *ladder]
    for a, b in zip(edges_check, edges_check[1:]):
        if not cheap_nonneg(normalize(sub(b, a)), params)[0]:
            return SeriesOutcome(
                "unknown", None, [],
                f"ladder order unprovable: {serialize(a)} <= {serialize(b)}",
                assumptions, time.monotonic() - t0)

    first = normalize(substitute(s.summand, s.index, const(s.start)))
    res0 = grid_search(first, s.target, params, grid, opts)
    pieces.append(SeriesPiece(f"index={s.start}", res0,
                              closed_form=serialize(first)))
    total: Optional[Fraction] = res0.c if res0.status == "proved" else None
    reason = "" if res0.status == "proved" else f"first term: {res0.reason}"

    bounds_list: list[tuple[Expr, Optional[Expr]]] = []
    edges: list[Expr] = [const(s.start + 1), *ladder]
    for i, a in enumerate(edges):
        b = edges[i + 1] if i + 1 < len(edges) else None
        bounds_list.append((normalize(a), normalize(b) if b is not None else None))

    idx_role = tuple(list(params.variables) + [(s.index, VarRole.INDEX)])
    for i, (a, b) in enumerate(bounds_list):
        label = f"segment[{serialize(a)}, {serialize(b) if b is not None else 'inf'})"
        cons = list(params.constraints) + [Constraint(Var(s.index), ">=", a)]
        if b is not None:
            cons.append(Constraint(Var(s.index), "<=", b))
        seg_region = Region(idx_role, tuple(cons))
        try:
            rb = dominate_bound(s.summand, seg_region)
            closed = bound_segment_sum(rb, s.index, a, b)
        except (PositivityUnderivable, NoDominantTerm, DivergentTail,
                NonMonotoneBound) as exc:
            pieces.append(SeriesPiece(label, PieceResult(
                seg_region, "unknown", reason=f"{type(exc).__name__}: {exc}")))
            total = None
            reason = reason or f"segment {i}: {exc}"
            continue
        res = grid_search(closed, s.target, params, grid, opts)
        pieces.append(SeriesPiece(label, res, regime=rb.to_dict(),
                                  closed_form=serialize(closed)))
        if res.status == "proved" and total is not None:
            total += res.c
        else:
            total = None
            reason = reason or f"segment {i}: {res.reason}"

    if total is not None:
        return SeriesOutcome("proved", total, pieces, "", assumptions,
                             time.monotonic() - t0)
    return SeriesOutcome("unknown", None, pieces, reason, assumptions,
                         time.monotonic() - t0)
