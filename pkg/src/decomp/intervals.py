"""Rigorous numeric helpers for the prover.

Three pieces live here:

* a tiny outward-rounded scalar interval type (certificate-side arithmetic,
  witness re-verification, tail bounds);
* a batched branch-and-bound driver that certifies ``expr >= 0`` on a compact
  box using the tape kernels;
* the tail analysis for half-open claims: after the change of variables
  u = x0/x or u = e^-(y-y0) a one-variable residual is certified on a ladder
  of boxes [2^-j, 1] and the remaining (0, 2^-40) tail is closed by bounding
  every vanishing u^d * log(1/u)^b term by its global maximum.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional

import numpy as np

from . import kernels
from .expr import (
    Const, Exp, Expr, Log, Power, Product, Sum, Var,
    exact_rational_pow, free_vars,
)
from .tape import Tape, compile_expr, _float_pair

_NEG = -math.inf
_POS = math.inf


def _dn(x: float) -> float:
    return math.nextafter(math.nextafter(x, _NEG), _NEG)


def _up(x: float) -> float:
    return math.nextafter(math.nextafter(x, _POS), _POS)


@dataclass(frozen=True)
class Interval:
    lo: float
    hi: float

    @staticmethod
    def from_fraction(x: Fraction) -> "Interval":
        lo, hi = _float_pair(Fraction(x))
        return Interval(lo, hi)

    @staticmethod
    def point(x: float) -> "Interval":
        return Interval(x, x)

    def __add__(self, o: "Interval") -> "Interval":
        return Interval(_dn(self.lo + o.lo), _up(self.hi + o.hi))

    def __mul__(self, o: "Interval") -> "Interval":
        ps = [self.lo * o.lo, self.lo * o.hi, self.hi * o.lo, self.hi * o.hi]
        ps = [p for p in ps if not math.isnan(p)] or [math.nan]
        return Interval(_dn(min(ps)), _up(max(ps)))

    def __neg__(self) -> "Interval":
        return Interval(-self.hi, -self.lo)

    def pow_real(self, p: float) -> "Interval":
        """x^p for an interval with lo >= 0 (p any sign; 0 allowed iff p >= 0)."""
        if self.lo < 0:
            return Interval(_NEG, _POS)
        cands = []
        for b in (self.lo, self.hi):
            if b == 0 and p < 0:
                return Interval(_NEG, _POS)
            cands.append(math.pow(b, p))
        return Interval(max(_dn(min(cands)), 0.0), _up(max(cands)))

    def abs_hi(self) -> float:
        return max(abs(self.lo), abs(self.hi))


E_INTERVAL = Interval(math.nextafter(math.e, _NEG), math.nextafter(math.e, _POS))


def const_interval(e: Expr) -> Optional[Interval]:
    """Enclosure of a constant expression (no free variables), or None."""
    if free_vars(e):
        return None
    t = compile_expr(e, ())
    lo, hi, ok = kernels.eval_boxes(t, np.zeros((0, 1)), np.zeros((0, 1)))
    if not bool(ok[0]):
        return None
    return Interval(float(lo[0]), float(hi[0]))


# ---------------------------------------------------------------------------
# Branch-and-bound on compact boxes
# ---------------------------------------------------------------------------

@dataclass
class BoxBudget:
    limit: int
    used: int = 0

    def take(self, n: int) -> int:
        room = max(self.limit - self.used, 0)
        n = min(n, room)
        self.used += n
        return n


@dataclass
class BnbResult:
    proved: bool
    boxes_used: int
    exhausted: bool


def prove_nonneg_on_box(
    expr_tape: Tape,
    lo0: np.ndarray,
    hi0: np.ndarray,
    budget: BoxBudget,
    constraint_tapes: "list[tuple[Tape, bool]] | None" = None,
) -> BnbResult:
    """Certify expr >= 0 over the box [lo0, hi0] (finite, per-dimension).

    constraint_tapes are (gap_tape, strict) pairs with the meaning gap <= 0
    (or < 0) on the region; boxes certainly violating one are discarded, so
    the certificate covers region-intersected boxes. Splitting is on the
    widest dimension; deterministic.
    """
    nv = expr_tape.n_vars
    frontier_lo = lo0.reshape(nv, 1).astype(np.float64)
    frontier_hi = hi0.reshape(nv, 1).astype(np.float64)
    used0 = budget.used
    while frontier_lo.shape[1] > 0:
        n = frontier_lo.shape[1]
        granted = budget.take(n)
        if granted < n:
            return BnbResult(False, budget.used - used0, True)
        rlo, _, rok = kernels.eval_boxes(expr_tape, frontier_lo, frontier_hi)
        keep = ~((rlo >= 0.0) & rok)
        if constraint_tapes:
            outside = np.zeros(n, dtype=np.bool_)
            for gap_tape, strict in constraint_tapes:
                glo, _, gok = kernels.eval_boxes(gap_tape, frontier_lo, frontier_hi)
                if strict:
                    outside |= gok & (glo >= 0.0)
                else:
                    outside |= gok & (glo > 0.0)
            keep &= ~outside
        if not keep.any():
            return BnbResult(True, budget.used - used0, False)
        flo = frontier_lo[:, keep]
        fhi = frontier_hi[:, keep]
        width = fhi - flo
        dim = np.argmax(width, axis=0)
        cols = np.arange(flo.shape[1])
        mid = 0.5 * (flo[dim, cols] + fhi[dim, cols])
        degenerate = ~(mid > flo[dim, cols]) | ~(mid < fhi[dim, cols])
        if degenerate.any():
            # cannot split further at float resolution: undecidable box
            return BnbResult(False, budget.used - used0, False)
        left_lo, left_hi = flo.copy(), fhi.copy()
        right_lo, right_hi = flo.copy(), fhi.copy()
        left_hi[dim, cols] = mid
        right_lo[dim, cols] = mid
        frontier_lo = np.concatenate([left_lo, right_lo], axis=1)
        frontier_hi = np.concatenate([left_hi, right_hi], axis=1)
    return BnbResult(True, budget.used - used0, False)


# ---------------------------------------------------------------------------
# One-variable half-open claims: ladder + tail
# ---------------------------------------------------------------------------

TAIL_J = 40  # ladder reaches u = 2^-40


@dataclass(frozen=True)
class LogMonomial:
    """c * u^a * log(1/u)^b with an interval coefficient."""
    coeff: Interval
    a: Fraction
    b: Fraction


def extract_log_monomials(resid: Expr, v: str, v0: Fraction, exp_type: bool) -> Optional[list[LogMonomial]]:
    """Write a one-variable residual as sum of c*u^a*log(1/u)^b terms.

    exp_type: u = e^-(v-v0), so v = v0 + L and e^(k v) = e^(k v0) u^-k.
    power type: u = v0/v (v0 > 0), so v^p = v0^p u^-p and log v = log v0 + L.
    Returns None when the residual leaves this class.
    """
    terms = resid.terms if isinstance(resid, Sum) else (resid,)
    out: list[LogMonomial] = []
    for t in terms:
        factors = t.factors if isinstance(t, Product) else (t,)
        parts: list[list[LogMonomial]] = []
        okay = True
        for f in factors:
            if v not in free_vars(f):
                ci = const_interval(f)
                if ci is None:
                    okay = False
                    break
                parts.append([LogMonomial(ci, Fraction(0), Fraction(0))])
                continue
            base, p = (f.base, f.exponent) if isinstance(f, Power) else (f, Fraction(1))
            if isinstance(base, Var) and base.name == v:
                if exp_type:
                    if p.denominator != 1 or p < 0:
                        okay = False
                        break
                    parts.append(_binomial_shift(Interval.from_fraction(v0), int(p)))
                else:
                    c = exact_rational_pow(v0, p)
                    ci = Interval.from_fraction(c) if c is not None else \
                        Interval.from_fraction(v0).pow_real(float(p))
                    parts.append([LogMonomial(ci, -p, Fraction(0))])
                continue
            if isinstance(base, Log) and isinstance(base.arg, Var) and base.arg.name == v and not exp_type:
                if v0 == 1:
                    if p < 0:
                        okay = False
                        break
                    parts.append([LogMonomial(Interval(1.0, 1.0), Fraction(0), p)])
                elif p.denominator == 1 and p >= 0 and v0 > 0:
                    lg = math.log(float(v0))
                    lgi = Interval(_dn(lg), _up(lg))
                    parts.append(_binomial_shift(lgi, int(p)))
                else:
                    okay = False
                    break
                continue
            if isinstance(base, Exp) and exp_type:
                lin = _linear_coeff(base.arg, v)
                if lin is None:
                    okay = False
                    break
                alpha = lin * p
                at0 = Interval.from_fraction(alpha * v0)
                scale = _interval_exp(at0)
                parts.append([LogMonomial(scale, -alpha, Fraction(0))])
                continue
            okay = False
            break
        if not okay:
            return None
        acc = [LogMonomial(Interval(1.0, 1.0), Fraction(0), Fraction(0))]
        for grp in parts:
            acc = [LogMonomial(x.coeff * y.coeff, x.a + y.a, x.b + y.b)
                   for x in acc for y in grp]
        out.extend(acc)
    merged: dict[tuple[Fraction, Fraction], Interval] = {}
    for lm in out:
        key = (lm.a, lm.b)
        merged[key] = merged[key] + lm.coeff if key in merged else lm.coeff
    return [LogMonomial(c, a, b) for (a, b), c in sorted(merged.items())]


def _binomial_shift(c0: Interval, p: int) -> list[LogMonomial]:
    """(c0 + L)^p expanded into L-powers, p a nonnegative integer."""
    out = []
    for k in range(p + 1):
        coeff = Interval.from_fraction(Fraction(math.comb(p, k)))
        acc = coeff
        for _ in range(p - k):
            acc = acc * c0
        out.append(LogMonomial(acc, Fraction(0), Fraction(k)))
    return out


def _linear_coeff(arg: Expr, v: str) -> Optional[Fraction]:
    """If arg == c*v exactly, return c (normalized exp arguments are atomic)."""
    if isinstance(arg, Var) and arg.name == v:
        return Fraction(1)
    if isinstance(arg, Product):
        c = Fraction(1)
        seen = False
        for f in arg.factors:
            if isinstance(f, Const):
                c *= f.value
            elif isinstance(f, Var) and f.name == v and not seen:
                seen = True
            else:
                return None
        return c if seen else None
    return None


def _interval_exp(x: Interval) -> Interval:
    try:
        lo = math.exp(x.lo)
    except OverflowError:
        lo = math.inf
    try:
        hi = math.exp(x.hi)
    except OverflowError:
        hi = math.inf
    return Interval(max(_dn(lo), 0.0), _up(hi))


def tail_nonneg(monomials: list[LogMonomial], eps_log2: int = TAIL_J) -> bool:
    """Certify sum c u^(a) L^b >= 0 on u in (0, 2^-eps_log2].

    Divides out the smallest u-power, bounds every vanishing term (d > 0)
    with a negative coefficient by its maximum over the tail, and checks the
    surviving polynomial in L is >= that slack for all L >= L0 by requiring
    nonnegative shifted coefficients.
    """
    if not monomials:
        return True
    a_min = min(lm.a for lm in monomials)
    l0 = math.log(2.0) * eps_log2
    l0_iv = Interval(_dn(l0), _up(l0))
    poly: dict[int, Interval] = {}
    slack = 0.0
    for lm in monomials:
        d = lm.a - a_min
        if d == 0:
            if lm.b.denominator != 1:
                return False
            k = int(lm.b)
            poly[k] = poly[k] + lm.coeff if k in poly else lm.coeff
            continue
        if lm.coeff.lo >= 0:
            continue  # vanishing nonnegative terms only help
        m = _tail_term_max(float(d), float(lm.b), eps_log2)
        slack = _up(slack + _up(lm.coeff.abs_hi() * m))
    if not poly:
        return slack <= 0.0
    deg = max(poly)
    # shift: P(L0 + s) coefficients must be nonnegative, constant >= slack
    shifted: dict[int, Interval] = {}
    for k, c in poly.items():
        for j in range(k + 1):
            term = c * Interval.from_fraction(Fraction(math.comb(k, j)))
            for _ in range(k - j):
                term = term * l0_iv
            shifted[j] = shifted[j] + term if j in shifted else term
    for j in range(1, deg + 1):
        if j in shifted and shifted[j].lo < 0:
            return False
    c0 = shifted.get(0, Interval(0.0, 0.0))
    return c0.lo >= slack


_TAIL_MARGIN = 1.0 + 1e-9  # swallows exponent-product rounding (~1e-14 rel)


def _tail_term_max(d: float, b: float, eps_log2: int) -> float:
    """Upper bound for u^d * log(1/u)^b on (0, 2^-eps_log2], d > 0, b >= 0."""
    l0 = math.log(2.0) * eps_log2  # exact value is slightly larger
    if b == 0.0:
        return _up(math.pow(2.0, -d * eps_log2) * _TAIL_MARGIN)
    lstar = b / d
    if l0 >= lstar:
        # decreasing beyond the critical point: max at the ladder edge
        return _up(math.pow(2.0, -d * eps_log2)
                   * _up(math.pow(_up(l0), b)) * _TAIL_MARGIN)
    return _up(math.pow(b / (d * math.nextafter(math.e, _NEG)), b) * _TAIL_MARGIN)


def prove_nonneg_tail_to_one(
    resid_u: Expr,
    u_name: str,
    monomials: Optional[list[LogMonomial]],
    budget: BoxBudget,
) -> tuple[bool, int]:
    """Certify resid_u >= 0 on (0, 1]: ladder of boxes [2^-j-1, 2^-j] plus the
    log-monomial tail bound below 2^-TAIL_J. Returns (proved, boxes_used)."""
    t = compile_expr(resid_u, (u_name,))
    used = 0
    for j in range(TAIL_J):
        lo = np.array([math.pow(2.0, -(j + 1))])
        hi = np.array([math.pow(2.0, -j)])
        res = prove_nonneg_on_box(t, lo, hi, budget)
        used += res.boxes_used
        if not res.proved:
            return False, used
    if monomials is None:
        return False, used
    return tail_nonneg(monomials), used
