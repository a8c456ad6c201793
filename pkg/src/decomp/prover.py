"""Built-in verification engine.

prove_piece certifies f <= C*g on a region by searching a small space of
sound reductions:

* residual reasoning: R = C*g - f is shown nonnegative by term-sign analysis,
  corner substitution along monotone directions, guarded rewrites, expansion,
  and exact constant evaluation;
* claim reductions: replacing f by a monotone upper substitute, keeping a
  single nonnegative term of g, mapping f-terms onto g-terms, and rescaling
  homogeneous claims onto the unit box;
* rigorous numerics: outward-rounded interval subdivision on compact boxes,
  and a ladder-plus-tail argument after compactifying a half-line.

Unknown is always an acceptable answer; Proved is backed by a replayable
step list. The falsifier searches for interval-verified counterexamples and
never produces proofs.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional

import numpy as np

from . import kernels
from .domain import (
    Constraint, Monotonicity, Region, Sign, VarBounds, const_lower,
    const_upper, is_nonneg, is_pos, sign_of, solved_bounds,
    structural_monotonicity,
)
from .expr import (
    Const, DomainError, Exp, Expr, Log, Power, Product, Sum, Var, add, const,
    evaluate, expand, free_vars, log as expr_log, mul, normalize,
    pow_, serialize, sub, substitute, var,
)
from .intervals import (
    BoxBudget, extract_log_monomials, prove_nonneg_on_box,
    prove_nonneg_tail_to_one,
)
from .tape import Tape, compile_expr

# ---------------------------------------------------------------------------
# Public result types
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class GridSpec:
    """Ordered candidate constants for the grid search."""

    values: tuple[Fraction, ...]

    def __post_init__(self):
        vals = tuple(Fraction(v) for v in self.values)
        if not vals or any(v <= 0 for v in vals):
            raise ValueError("grid must be nonempty and positive")
        if any(b <= a for a, b in zip(vals, vals[1:])):
            raise ValueError("grid must be strictly increasing")
        object.__setattr__(self, "values", vals)

    @staticmethod
    def default(max_c: "int | Fraction" = 10_000) -> "GridSpec":
        """Geometric doublings 1, 2, 4, ... capped by max_c (default 10^4)."""
        max_c = Fraction(max_c)
        vals = []
        c = Fraction(1)
        while c < max_c:
            vals.append(c)
            c *= 2
        vals.append(max_c)
        return GridSpec(tuple(vals))

    @property
    def max(self) -> Fraction:
        return self.values[-1]


@dataclass
class ProverOptions:
    box_budget: int = 100_000
    cex_samples: int = 256
    search_nodes: int = 48
    search_depth: int = 4
    lift_grid: Optional[GridSpec] = None  # grid used for the monotone C-lift
    seed: int = 0

    def lift_values(self) -> tuple[Fraction, ...]:
        grid = self.lift_grid or GridSpec.default()
        return grid.values


@dataclass
class ProveOutcome:
    proved: bool
    steps: list = field(default_factory=list)
    reason: str = ""
    boxes_used: int = 0


@dataclass
class PieceResult:
    region: Region
    status: str                      # "proved" | "unknown"
    c: Optional[Fraction] = None     # smallest grid C that succeeded
    steps: list = field(default_factory=list)
    reason: str = ""
    backend: str = "builtin"
    elapsed: float = 0.0
    boxes_used: int = 0

    def to_dict(self) -> dict:
        return {
            "region": self.region.key(),
            "status": self.status,
            "c": str(self.c) if self.c is not None else None,
            "steps": self.steps,
            "reason": self.reason,
            "backend": self.backend,
            "elapsed": round(self.elapsed, 6),
            "boxes_used": self.boxes_used,
        }


@dataclass
class Counterexample:
    assignment: dict[str, float]
    lhs_value: float
    rhs_value: float
    c: Fraction

    def to_dict(self) -> dict:
        return {
            "assignment": self.assignment,
            "lhs_value": self.lhs_value,
            "rhs_value": self.rhs_value,
            "c": str(self.c),
        }


# ---------------------------------------------------------------------------
# Region sampling (shared by falsifier, coverage checks, and tests)
# ---------------------------------------------------------------------------

SAMPLE_SPAN = 1.0e6  # documented sampler: log-uniform over [boundary, boundary + 1e6]


def sample_box(r: Region, n: int, rng: np.random.Generator) -> np.ndarray:
    """Draw per-variable log-uniform candidates (n_vars, n); no feasibility."""
    names = r.var_names()
    bounds = solved_bounds(r)
    pts = np.empty((len(names), n))
    for i, name in enumerate(names):
        lo = const_lower(Var(name), r)
        hi = const_upper(Var(name), r)
        b = float(lo) if lo is not None else -SAMPLE_SPAN
        span = SAMPLE_SPAN
        if hi is not None:
            span = min(span, float(hi) - b)
        if span <= 0:
            pts[i] = b
        else:
            u = rng.random(n)
            pts[i] = b + np.expm1(u * np.log1p(span))
        if r.role(name).value == "index":
            pts[i] = np.maximum(np.round(pts[i]), math.ceil(b))
    _ = bounds
    return pts


_GAP_RELS = {"<=": False, "<": True}


def constraint_gap_tapes(r: Region, var_order: tuple[str, ...]) -> list[tuple[Tape, bool]]:
    """(gap_tape, strict) pairs meaning gap <= 0 (or < 0) on the region.

    Constraints over variables outside var_order are skipped (conservative).
    """
    out = []
    for c in r.constraints:
        pairs: list[tuple[Expr, Expr, str]] = []
        if c.rel in ("<=", "<"):
            pairs.append((c.lhs, c.rhs, c.rel))
        elif c.rel in (">=", ">"):
            pairs.append((c.rhs, c.lhs, "<=" if c.rel == ">=" else "<"))
        else:
            pairs.append((c.lhs, c.rhs, "<="))
            pairs.append((c.rhs, c.lhs, "<="))
        for small, big, rel in pairs:
            gap = normalize(sub(small, big))
            if not free_vars(gap) <= set(var_order):
                continue
            out.append((compile_expr(gap, var_order), _GAP_RELS[rel]))
    return out


def feasible_mask(r: Region, pts: np.ndarray, var_order: tuple[str, ...]) -> np.ndarray:
    mask = np.ones(pts.shape[1], dtype=np.bool_)
    for gap_tape, strict in constraint_gap_tapes(r, var_order):
        v, ok = kernels.eval_points(gap_tape, pts)
        mask &= ok & ((v < 0.0) if strict else (v <= 0.0))
    return mask


def sample_region(r: Region, n: int, rng: np.random.Generator,
                  oversample: int = 4) -> np.ndarray:
    """Feasible sample points (n_vars, m), m <= n, via rejection."""
    names = r.var_names()
    cand = sample_box(r, n * oversample, rng)
    mask = feasible_mask(r, cand, names)
    return cand[:, mask][:, :n]


def point_matrix(names: tuple[str, ...], point: dict[str, float]) -> np.ndarray:
    """Column matrix (n_vars, 1) for a single point; empty-safe."""
    if not names:
        return np.zeros((0, 1))
    return np.array([[float(point[n])] for n in names])


def point_feasible_verified(r: Region, point: dict[str, float]) -> bool:
    """Interval-verified region membership of a single point."""
    names = r.var_names()
    x = point_matrix(names, point)
    for gap_tape, strict in constraint_gap_tapes(r, names):
        lo, hi, ok = kernels.eval_boxes(gap_tape, x, x)
        if not bool(ok[0]):
            return False
        if strict and not hi[0] < 0.0:
            return False
        if not strict and not hi[0] <= 0.0:
            return False
    return True


# ---------------------------------------------------------------------------
# Cheap nonnegativity search (no interval subdivision)
# ---------------------------------------------------------------------------

def _segment_region(r: Region, v: str, bound: Expr, lower: bool) -> Region:
    """Region containing every axis segment between a point of r and its
    corner substitute: constraints not mentioning v, plus v's one-sided
    bounds that the segment preserves, plus the new corner bound."""
    keep = [c for c in r.constraints if v not in free_vars(c.lhs) | free_vars(c.rhs)]
    vb = solved_bounds(r).get(v, VarBounds())
    side = vb.uppers if lower else vb.lowers
    for b in side:
        rel = ("<" if b.strict else "<=") if lower else (">" if b.strict else ">=")
        keep.append(Constraint(Var(v), rel, b.expr))
    keep.append(Constraint(Var(v), ">=" if lower else "<=", bound))
    return Region(r.variables, tuple(keep))


def _ge_one(e: Expr, r: Region) -> bool:
    lo = const_lower(e, r)
    return lo is not None and lo >= 1


def _terms(e: Expr) -> tuple[Expr, ...]:
    return e.terms if isinstance(e, Sum) else (e,)


def _const_sign_interval(e: Expr) -> Optional[bool]:
    """True if the constant expression is certainly >= 0, None if unknown."""
    from .intervals import const_interval
    ci = const_interval(e)
    if ci is None:
        return None
    if ci.lo >= 0:
        return True
    if ci.hi < 0:
        return False
    return None


def _rewrite_logs(e: Expr, r: Region) -> Expr:
    """log(x*y) -> log x + log y and log(x^p) -> p log x where positivity of
    the pieces is derivable from the region (domain-sound directions only)."""
    def rec(node: Expr) -> Expr:
        if isinstance(node, Sum):
            return Sum(tuple(rec(t) for t in node.terms))
        if isinstance(node, Product):
            return Product(tuple(rec(f) for f in node.factors))
        if isinstance(node, Power):
            return Power(rec(node.base), node.exponent)
        if isinstance(node, Exp):
            return Exp(rec(node.arg))
        if isinstance(node, Log):
            arg = rec(node.arg)
            if isinstance(arg, Product) and all(is_pos(f, r) for f in arg.factors):
                return Sum(tuple(Log(f) for f in arg.factors))
            if isinstance(arg, Power) and is_pos(arg.base, r):
                return Product((Const(arg.exponent), Log(arg.base)))
            return Log(arg)
        return node
    return normalize(rec(normalize(e)))


def cheap_nonneg(e: Expr, r: Region, nodes: int = 40) -> tuple[bool, list]:
    """Certify e >= 0 on r using sign analysis, corner substitution along
    structurally monotone directions, positivity-drop, guarded log rewrites,
    expansion, ratio domination, and exact constant evaluation."""
    start = normalize(e)
    queue: list[tuple[Expr, list]] = [(start, [])]
    seen: set[str] = set()
    visited = 0
    while queue and visited < nodes:
        cur, steps = queue.pop(0)
        key = serialize(cur)
        if key in seen:
            continue
        seen.add(key)
        visited += 1

        s = sign_of(cur, r)
        if s in (Sign.POS, Sign.NONNEG, Sign.ZERO):
            return True, steps + [{"rule": "sign", "expr": key}]
        if s in (Sign.NEG, Sign.NONPOS) and key == serialize(start) and not steps:
            return False, []

        if not free_vars(cur):
            ok = _const_sign_interval(cur)
            if ok is True:
                return True, steps + [{"rule": "const-eval", "expr": key}]
            continue  # a definite constant cannot be improved by rewrites

        terms = _terms(cur)

        # ratio domination: A - B >= 0 from A/B >= 1 on positive B
        if len(terms) == 2:
            pos = [t for t in terms if sign_of(t, r) in (Sign.POS, Sign.NONNEG)]
            neg = [t for t in terms if t not in pos]
            if len(pos) == 1 and len(neg) == 1:
                b_abs = normalize(mul(const(-1), neg[0]))
                if is_pos(b_abs, r):
                    ratio = normalize(mul(pos[0], pow_(b_abs, -1)))
                    if _ge_one(ratio, r):
                        return True, steps + [{
                            "rule": "ratio", "num": serialize(pos[0]),
                            "den": serialize(b_abs)}]

        # drop provably nonnegative terms
        if len(terms) > 1:
            nn = [t for t in terms if is_nonneg(t, r)]
            if nn and len(nn) < len(terms):
                rest = normalize(Sum(tuple(t for t in terms if t not in nn)))
                queue.append((rest, steps + [{
                    "rule": "drop-nonneg",
                    "dropped": [serialize(t) for t in nn]}]))

        # corner substitution along monotone directions
        for v in sorted(free_vars(cur)):
            vb = solved_bounds(r).get(v, VarBounds())
            for b in vb.lowers:
                if v in free_vars(b.expr):
                    continue
                seg = _segment_region(r, v, b.expr, lower=True)
                if structural_monotonicity(cur, v, seg) is Monotonicity.INCREASING:
                    nxt = substitute(cur, v, b.expr)
                    if serialize(nxt) != key:
                        queue.append((nxt, steps + [{
                            "rule": "corner", "var": v, "side": "lower",
                            "bound": serialize(b.expr)}]))
            for b in vb.uppers:
                if v in free_vars(b.expr):
                    continue
                seg = _segment_region(r, v, b.expr, lower=False)
                if structural_monotonicity(cur, v, seg) is Monotonicity.DECREASING:
                    nxt = substitute(cur, v, b.expr)
                    if serialize(nxt) != key:
                        queue.append((nxt, steps + [{
                            "rule": "corner", "var": v, "side": "upper",
                            "bound": serialize(b.expr)}]))

        rewritten = _rewrite_logs(cur, r)
        if serialize(rewritten) != key:
            queue.append((rewritten, steps + [{"rule": "log-rewrite"}]))

        expanded = expand(cur)
        if serialize(expanded) != key:
            queue.append((expanded, steps + [{"rule": "expand"}]))

    return False, []


# ---------------------------------------------------------------------------
# Homogeneity
# ---------------------------------------------------------------------------

def homogeneity_degree(e: Expr, names: frozenset[str]) -> Optional[Fraction]:
    if isinstance(e, Const):
        return Fraction(0)
    if isinstance(e, Var):
        return Fraction(1) if e.name in names else Fraction(0)
    if isinstance(e, Sum):
        degs = {homogeneity_degree(t, names) for t in e.terms}
        if len(degs) == 1 and None not in degs:
            return degs.pop()
        return None
    if isinstance(e, Product):
        total = Fraction(0)
        for f in e.factors:
            d = homogeneity_degree(f, names)
            if d is None:
                return None
            total += d
        return total
    if isinstance(e, Power):
        d = homogeneity_degree(e.base, names)
        return None if d is None else d * e.exponent
    if isinstance(e, (Log, Exp)):
        d = homogeneity_degree(e.arg, names)
        return Fraction(0) if d == 0 else None
    raise TypeError(f"not an Expr: {e!r}")


def _upper_var_chain(r: Region, v: str, target: str, depth: int = 3) -> bool:
    """v <= target derivable through bare-variable upper bounds."""
    if v == target:
        return True
    if depth == 0:
        return False
    for b in solved_bounds(r).get(v, VarBounds()).uppers:
        if isinstance(b.expr, Var) and _upper_var_chain(r, b.expr.name, target, depth - 1):
            return True
    return False


def _homogeneous_scale(f: Expr, g: Expr, r: Region) -> Optional[tuple[Expr, Expr, Region, str]]:
    """Scale-invariant claims restrict to the slice max-var = 1 on [0,1]^k."""
    names = frozenset(r.var_names())
    if len(names) < 2:
        return None
    df = homogeneity_degree(f, names)
    dg = homogeneity_degree(g, names)
    if df is None or dg is None or df != dg or df <= 0:
        return None
    for c in r.constraints:
        # scale-invariant constraints only: equal positive degrees, or a
        # comparison against literal zero (x >= 0 scales; x >= 1 does not)
        zl = isinstance(c.lhs, Const) and c.lhs.value == 0
        zr = isinstance(c.rhs, Const) and c.rhs.value == 0
        dl = homogeneity_degree(c.lhs, names)
        dr_ = homogeneity_degree(c.rhs, names)
        if zl or zr:
            if (zl or dl is not None) and (zr or dr_ is not None):
                continue
            return None
        if dl is None or dr_ is None or dl != dr_ or dl == 0:
            return None
    for n in names:
        lo = const_lower(Var(n), r)
        if lo is None or lo < 0:
            return None
    for m in sorted(names):
        if all(_upper_var_chain(r, v, m) for v in names if v != m):
            one = const(1)
            f2 = substitute(f, m, one)
            g2 = substitute(g, m, one)
            rest = [n for n in r.var_names() if n != m]
            cons = []
            for c in r.constraints:
                lhs = substitute(c.lhs, m, one)
                rhs = substitute(c.rhs, m, one)
                cons.append(Constraint(lhs, c.rel, rhs))
            for n in rest:
                cons.append(Constraint(Var(n), "<=", const(1)))
                cons.append(Constraint(Var(n), ">=", const(0)))
            r2 = Region(tuple(vr for vr in r.variables if vr[0] != m), tuple(cons))
            return f2, g2, r2, m
    return None


# ---------------------------------------------------------------------------
# Interval routes
# ---------------------------------------------------------------------------

_U = "_u"


def _clearly_negative_somewhere(t: Tape, pts: np.ndarray) -> bool:
    v, ok = kernels.eval_points(t, pts)
    return bool(np.any(ok & (v < 0.0)))


def _interval_route(resid: Expr, r: Region, budget: BoxBudget) -> tuple[bool, list, int]:
    """Try to certify resid >= 0 on r by rigorous interval methods."""
    vs = sorted(free_vars(resid))
    if not vs:
        return False, [], 0
    los = {v: const_lower(Var(v), r) for v in vs}
    his = {v: const_upper(Var(v), r) for v in vs}
    if all(los[v] is not None and his[v] is not None for v in vs):
        order = tuple(vs)
        t = compile_expr(resid, order)
        lo0 = np.array([float(los[v]) for v in vs])
        hi0 = np.array([float(his[v]) for v in vs])
        cons = constraint_gap_tapes(r, order)
        # hopeless-claim guard: residual negative at an in-region sample
        rng = np.random.default_rng(7)
        probe = lo0[:, None] + rng.random((len(vs), 64)) * (hi0 - lo0)[:, None]
        pmask = np.ones(64, dtype=np.bool_)
        for gt, strict in cons:
            gv, gok = kernels.eval_points(gt, probe)
            pmask &= gok & ((gv < 0) if strict else (gv <= 0))
        if _clearly_negative_somewhere(t, probe[:, pmask]):
            return False, [], 0
        res = prove_nonneg_on_box(t, lo0, hi0, budget, cons)
        if res.proved:
            return True, [{"rule": "interval-box", "vars": vs,
                           "boxes": res.boxes_used}], res.boxes_used
        return False, [], res.boxes_used
    if len(vs) == 1:
        v = vs[0]
        v0 = los[v]
        if v0 is None or his[v] is not None:
            return False, [], 0
        exp_type = any(isinstance(s, Exp) and v in free_vars(s)
                       for s in _walk(resid))
        if exp_type:
            repl = add(const(v0), mul(-1, expr_log(var(_U))))
        else:
            if v0 <= 0:
                return False, [], 0
            repl = mul(const(v0), pow_(var(_U), -1))
        resid_u = substitute(resid, v, repl)
        t = compile_expr(resid_u, (_U,))
        probe = np.exp2(-40.0 * np.linspace(0.0, 1.0, 64))[None, :]
        if _clearly_negative_somewhere(t, probe):
            return False, [], 0
        monos = extract_log_monomials(resid, v, v0, exp_type)
        proved, used = prove_nonneg_tail_to_one(resid_u, _U, monos, budget)
        if proved:
            return True, [{"rule": "interval-halfline", "var": v,
                           "compactification": "exp" if exp_type else "reciprocal",
                           "from": str(v0), "boxes": used}], used
        return False, [], used
    return False, [], 0


def _walk(e: Expr):
    from .expr import subexpressions
    yield from subexpressions(e)


# ---------------------------------------------------------------------------
# prove_piece
# ---------------------------------------------------------------------------

def _residual(f: Expr, g: Expr, c: Fraction) -> Expr:
    return normalize(sub(mul(const(c), g), f))


def _check_defined(f: Expr, g: Expr, r: Region, rng: np.random.Generator) -> None:
    """DomainError when f or g is actually undefined at a feasible point."""
    pts = sample_region(r, 16, rng)
    names = r.var_names()
    for j in range(min(pts.shape[1], 16)):
        a = {n: float(pts[i, j]) for i, n in enumerate(names)}
        for e in (f, g):
            try:
                evaluate(e, a)
            except DomainError as exc:
                raise DomainError(
                    f"{exc} at {a} inside the piece region; the claim is "
                    "undefined on part of its region") from exc


def _quick_counterexample(f: Expr, g: Expr, r: Region, c: Fraction,
                          n: int, rng: np.random.Generator) -> Optional[Counterexample]:
    names = r.var_names()
    pts = sample_region(r, n, rng)
    if pts.shape[1] == 0:
        return None
    tf = compile_expr(f, names)
    tg = compile_expr(g, names)
    vf, okf = kernels.eval_points(tf, pts)
    vg, okg = kernels.eval_points(tg, pts)
    with np.errstate(all="ignore"):
        gap = vf - float(c) * vg
    gap[~(okf & okg) | np.isnan(gap)] = -np.inf
    j = int(np.argmax(gap))
    if not gap[j] > 0:
        return None
    point = {nm: float(pts[i, j]) for i, nm in enumerate(names)}
    return verify_counterexample(f, g, r, c, point)


def verify_counterexample(f: Expr, g: Expr, r: Region, c: Fraction,
                          point: dict[str, float]) -> Optional[Counterexample]:
    """Re-verify a candidate with outward interval evaluation so it cannot
    be a rounding artifact; also requires g >= 0 there so the point defeats
    every constant up to c."""
    names = r.var_names()
    if not point_feasible_verified(r, point):
        return None
    x = point_matrix(names, point)
    flo, fhi, fok = kernels.eval_boxes(compile_expr(f, names), x, x)
    glo, ghi, gok = kernels.eval_boxes(compile_expr(g, names), x, x)
    if not (bool(fok[0]) and bool(gok[0])):
        return None
    if glo[0] < 0.0:
        return None
    c_up = float(c)
    if Fraction(c_up) < c:
        c_up = math.nextafter(c_up, math.inf)
    if not flo[0] > math.nextafter(c_up * ghi[0], math.inf):
        return None
    return Counterexample(point, float(flo[0]), float(ghi[0]), c)


def prove_piece(f: Expr, g: Expr, r: Region, c: "Fraction | int",
                opts: Optional[ProverOptions] = None,
                _lift: bool = True) -> ProveOutcome:
    """Sound: Proved implies f <= c*g on all of r."""
    opts = opts or ProverOptions()
    c = Fraction(c)
    f = normalize(f)
    g = normalize(g)
    rng = np.random.default_rng(_stable_seed(f, g, r, opts.seed))
    _check_defined(f, g, r, rng)

    budget = BoxBudget(opts.box_budget)
    cex = _quick_counterexample(f, g, r, c, opts.cex_samples, rng)
    if cex is not None:
        return ProveOutcome(False, [], f"counterexample at C={c}: {cex.assignment}")

    steps = _search_claim(f, g, r, c, opts, budget, depth=0, seen=set())
    if steps is not None:
        return ProveOutcome(True, steps, boxes_used=budget.used)

    # monotone lift: f <= c'*g <= c*g for grid c' < c when g >= 0
    if _lift and is_nonneg(g, r):
        for c2 in opts.lift_values():
            if c2 >= c:
                break
            sub_budget = BoxBudget(opts.box_budget)
            steps = _search_claim(f, g, r, c2, opts, sub_budget, depth=0, seen=set())
            if steps is not None:
                steps = steps + [{"rule": "scale-lift", "from": str(c2), "to": str(c)}]
                return ProveOutcome(True, steps, boxes_used=budget.used + sub_budget.used)

    reason = "budget exhausted" if budget.used >= opts.box_budget else "no applicable reduction"
    return ProveOutcome(False, [], reason, boxes_used=budget.used)


def _stable_seed(f: Expr, g: Expr, r: Region, seed: int) -> int:
    import zlib
    text = serialize(f) + "|" + serialize(g) + "|" + r.key()
    return (zlib.crc32(text.encode()) + seed) % (2 ** 32)


def _search_claim(f: Expr, g: Expr, r: Region, c: Fraction,
                  opts: ProverOptions, budget: BoxBudget,
                  depth: int, seen: set) -> Optional[list]:
    """Depth-first search over sound claim reductions; returns steps or None."""
    key = (serialize(f), serialize(g), r.key())
    if key in seen or depth > opts.search_depth or len(seen) > opts.search_nodes:
        return None
    seen.add(key)

    resid = _residual(f, g, c)
    ok, rsteps = cheap_nonneg(resid, r)
    if ok:
        return [{"rule": "residual", "expr": serialize(resid), "steps": rsteps}]

    tm = _term_map(f, g, r, c)
    if tm is not None:
        return tm

    children: list[tuple[dict, Expr, Expr, Region]] = []

    if depth == 0:
        scaled = _homogeneous_scale(f, g, r)
        if scaled is not None:
            f2, g2, r2, mvar = scaled
            children.append((
                {"rule": "homogeneous-scale", "unit_var": mvar},
                f2, g2, r2))

    for v in sorted(free_vars(f)):
        vb = solved_bounds(r).get(v, VarBounds())
        for b in vb.uppers:
            if v in free_vars(b.expr):
                continue
            seg = _segment_region(r, v, b.expr, lower=False)
            if structural_monotonicity(f, v, seg) is Monotonicity.INCREASING:
                f2 = substitute(f, v, b.expr)
                if serialize(f2) != serialize(f):
                    children.append((
                        {"rule": "monotone-substitution", "var": v,
                         "direction": "increasing", "bound": serialize(b.expr)},
                        f2, g, r))
        for b in vb.lowers:
            if v in free_vars(b.expr):
                continue
            seg = _segment_region(r, v, b.expr, lower=True)
            if structural_monotonicity(f, v, seg) is Monotonicity.DECREASING:
                f2 = substitute(f, v, b.expr)
                if serialize(f2) != serialize(f):
                    children.append((
                        {"rule": "monotone-substitution", "var": v,
                         "direction": "decreasing", "bound": serialize(b.expr)},
                        f2, g, r))

    g_terms = _terms(g)
    if len(g_terms) > 1:
        for j, t in enumerate(g_terms):
            others = [u for i, u in enumerate(g_terms) if i != j]
            if all(is_nonneg(u, r) for u in others):
                children.append((
                    {"rule": "positivity-drop", "kept": serialize(t),
                     "dropped": [serialize(u) for u in others]},
                    f, t, r))

    for step, f2, g2, r2 in children:
        rest = _search_claim(f2, g2, r2, c, opts, budget, depth + 1, seen)
        if rest is not None:
            return [step] + rest

    # interval routes, most constrained first
    proved, isteps, _ = _interval_route(resid, r, budget)
    if proved:
        return [{"rule": "residual-interval", "expr": serialize(resid),
                 "steps": isteps}]
    for step, f2, g2, r2 in children:
        resid2 = _residual(f2, g2, c)
        proved, isteps, _ = _interval_route(resid2, r2, budget)
        if proved:
            return [step, {"rule": "residual-interval", "expr": serialize(resid2),
                           "steps": isteps}]
    return None


def _term_map(f: Expr, g: Expr, r: Region, c: Fraction) -> Optional[list]:
    """Map f-terms under terms of c*g: each onto a distinct g-term, or all
    onto one g-term with its capacity split evenly. Unused g-terms and
    dropped f-terms must be nonnegative."""
    cg = normalize(mul(const(c), g))
    f_terms = list(_terms(f))
    g_terms = list(_terms(cg))
    if len(f_terms) < 2:
        return None
    keep = []
    for t in f_terms:
        if sign_of(t, r) in (Sign.NEG, Sign.NONPOS, Sign.ZERO):
            continue  # dropping a nonpositive f-term only weakens f
        keep.append(t)
    if not keep:
        return None
    used = [False] * len(g_terms)
    assignment = []
    distinct_ok = True
    for t in keep:
        found = False
        for j, u in enumerate(g_terms):
            if used[j]:
                continue
            okd, _ = cheap_nonneg(normalize(sub(u, t)), r, nodes=12)
            if okd:
                used[j] = True
                assignment.append((serialize(t), serialize(u)))
                found = True
                break
        if not found:
            distinct_ok = False
            break
    if distinct_ok and all(used[j] or is_nonneg(u, r)
                           for j, u in enumerate(g_terms)):
        return [{"rule": "term-map", "pairs": assignment}]
    # shared target: every f-term under u/n for a single g-term u
    n = len(keep)
    for j, u in enumerate(g_terms):
        share = normalize(mul(const(Fraction(1, n)), u))
        if all(cheap_nonneg(normalize(sub(share, t)), r, nodes=12)[0] for t in keep):
            others = [w for i, w in enumerate(g_terms) if i != j]
            if all(is_nonneg(w, r) for w in others):
                return [{"rule": "term-map", "shared": serialize(u),
                         "count": n}]
    return None


# ---------------------------------------------------------------------------
# grid search
# ---------------------------------------------------------------------------

def grid_search(f: Expr, g: Expr, r: Region, grid: Optional[GridSpec] = None,
                opts: Optional[ProverOptions] = None) -> PieceResult:
    """Try candidates in increasing order; first success wins. The reported
    C is minimal over the grid for this backend, not globally minimal."""
    grid = grid or GridSpec.default()
    opts = opts or ProverOptions()
    t0 = time.monotonic()
    last_reason = ""
    boxes = 0
    for c in grid.values:
        out = prove_piece(f, g, r, c, opts, _lift=False)
        boxes += out.boxes_used
        if out.proved:
            return PieceResult(r, "proved", c, out.steps,
                               elapsed=time.monotonic() - t0, boxes_used=boxes)
        last_reason = out.reason
    return PieceResult(r, "unknown", None, [], last_reason,
                       elapsed=time.monotonic() - t0, boxes_used=boxes)


# ---------------------------------------------------------------------------
# Falsifier
# ---------------------------------------------------------------------------

def falsify_inequality(f: Expr, g: Expr, r: Region, c_ceiling: "Fraction | int",
                       budget: int = 4096, seed: int = 0) -> Optional[Counterexample]:
    """Log-uniform sampling plus coordinate ascent; counterexamples are
    interval-verified. None is not a proof."""
    c = Fraction(c_ceiling)
    names = r.var_names()
    rng = np.random.default_rng(_stable_seed(f, g, r, seed) ^ 0x5F5F)
    pts = sample_region(r, budget, rng)
    if pts.shape[1] == 0:
        return None
    tf = compile_expr(f, names)
    tg = compile_expr(g, names)

    def score(p):
        vf, okf = kernels.eval_points(tf, p)
        vg, okg = kernels.eval_points(tg, p)
        with np.errstate(all="ignore"):
            s = vf - float(c) * vg
        s[~(okf & okg) | np.isnan(s)] = -np.inf
        return s

    s = score(pts)
    order = np.argsort(s)[::-1][:8]
    best = pts[:, order].copy()
    for _ in range(24):  # coordinate ascent from the best candidates
        cand = [best]
        for i in range(len(names)):
            for factor in (0.5, 0.9, 1.1, 2.0, 8.0):
                p = best.copy()
                p[i] *= factor
                cand.append(p)
            for delta in (-1.0, 1.0, 16.0):
                p = best.copy()
                p[i] += delta
                cand.append(p)
        allp = np.concatenate(cand, axis=1)
        mask = feasible_mask(r, allp, names)
        if not mask.any():
            break
        allp = allp[:, mask]
        sa = score(allp)
        order = np.argsort(sa)[::-1][:8]
        improved = allp[:, order]
        if sa[order[0]] <= np.max(score(best)):
            best = improved
            break
        best = improved
    sb = score(best)
    for j in np.argsort(sb)[::-1]:
        if not sb[j] > 0:
            break
        point = {nm: float(best[i, j]) for i, nm in enumerate(names)}
        for nm in names:
            if r.role(nm).value == "index":
                point[nm] = float(round(point[nm]))
        ver = verify_counterexample(f, g, r, c, point)
        if ver is not None:
            return ver
    return None
