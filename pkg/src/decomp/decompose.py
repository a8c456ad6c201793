"""Candidate decompositions: region covers for inequalities, breakpoint
ladders for series, plus the coverage validator that makes per-piece
verification sound (a proved verdict is only as good as the cover).
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional

import numpy as np

from . import kernels
from .domain import Constraint, Region
from .expr import (
    Const, Exp, Expr, Power, Product, Sum, Var, const, log,
    mul, normalize, pow_, serialize, sub, substitute,
)
from .prover import (
    cheap_nonneg, constraint_gap_tapes, feasible_mask, point_feasible_verified,
    sample_box,
)
from .statements import Inequality, ProblemStatement, Series


class NoCandidate(ValueError):
    """The heuristic pattern base produced nothing; fall back to the LLM."""


@dataclass(frozen=True)
class RegionCover:
    pieces: tuple[Region, ...]

    def __post_init__(self):
        if len(self.pieces) < 1:
            raise ValueError("a cover needs at least one piece")

    @property
    def k(self) -> int:
        return len(self.pieces)

    def key(self) -> str:
        return "cover|" + "||".join(p.key() for p in self.pieces)


@dataclass(frozen=True)
class Breakpoints:
    """Ladder d_1 < ... < d_k of parameter expressions; d_0 is the series
    start and d_{k+1} is infinity, so an empty ladder means one segment."""

    ladder: tuple[Expr, ...]

    def __post_init__(self):
        keys = [serialize(normalize(e)) for e in self.ladder]
        if len(set(keys)) != len(keys):
            raise ValueError("ladder expressions must be pairwise distinct")
        object.__setattr__(self, "ladder", tuple(normalize(e) for e in self.ladder))

    @property
    def k(self) -> int:
        return len(self.ladder) + 1

    def key(self) -> str:
        return "ladder|" + "|".join(serialize(e) for e in self.ladder)


Decomposition = RegionCover | Breakpoints


@dataclass(frozen=True)
class CoverageReport:
    status: str                                  # proved | sampled | not-cover
    n_samples: int = 0
    n_uncovered: int = 0
    witness: Optional[dict] = None

    @property
    def is_cover(self) -> bool:
        return self.status != "not-cover"

    def to_dict(self) -> dict:
        return {"status": self.status, "n_samples": self.n_samples,
                "n_uncovered": self.n_uncovered, "witness": self.witness}


PROVED_COVER = CoverageReport("proved")


# ---------------------------------------------------------------------------
# Heuristic proposer
# ---------------------------------------------------------------------------

CROSSOVER_CONSTANTS = (Fraction(1), Fraction(2))
MAX_CANDIDATES = 8


def _exp_linear_var(term: Expr) -> Optional[tuple[str, Fraction]]:
    """Term containing a factor exp(alpha*v): (v, alpha) with alpha > 0."""
    factors = term.factors if isinstance(term, Product) else (term,)
    for f in factors:
        if not isinstance(f, Exp):
            continue
        arg = f.arg
        if isinstance(arg, Var):
            return arg.name, Fraction(1)
        if isinstance(arg, Product):
            c = Fraction(1)
            v = None
            for p in arg.factors:
                if isinstance(p, Const):
                    c *= p.value
                elif isinstance(p, Var) and v is None:
                    v = p.name
                else:
                    return None
            if v is not None and c > 0:
                return v, c
    return None


def _power_var(term: Expr, exclude: str) -> Optional[tuple[str, Fraction]]:
    """Highest positive power of a variable other than exclude; no exp."""
    factors = term.factors if isinstance(term, Product) else (term,)
    best: Optional[tuple[str, Fraction]] = None
    for f in factors:
        if isinstance(f, Exp):
            return None
        base, p = (f.base, f.exponent) if isinstance(f, Power) else (f, Fraction(1))
        if isinstance(base, Var) and base.name != exclude and p > 0:
            if best is None or p > best[1]:
                best = (base.name, p)
    return best


def _crossover_covers(p: Inequality) -> list[RegionCover]:
    """Splits from rhs term pairs where an exponential crosses a power:
    exp(a*v) vs w^b (maybe with log factors) crosses near v = (b/a) log w."""
    rhs_terms = p.rhs.terms if isinstance(p.rhs, Sum) else (p.rhs,)
    out = []
    seen = set()
    for t1, t2 in itertools.permutations(rhs_terms, 2):
        ev = _exp_linear_var(t1)
        if ev is None:
            continue
        v, alpha = ev
        pv = _power_var(t2, v)
        if pv is None:
            continue
        w, beta = pv
        for c in CROSSOVER_CONSTANTS:
            theta = normalize(mul(const(c * beta / alpha), log(Var(w))))
            key = f"{v}|{serialize(theta)}"
            if key in seen:
                continue
            seen.add(key)
            below = p.region.with_constraints(Constraint(Var(v), "<=", theta))
            above = p.region.with_constraints(Constraint(Var(v), ">", theta))
            out.append(RegionCover((below, above)))
    return out


def _is_symmetric(p: Inequality) -> bool:
    names = list(p.region.var_names())
    if len(names) < 2:
        return False

    def swapped(e: Expr, a: str, b: str) -> Expr:
        tmp = "_swap_tmp"
        return substitute(substitute(substitute(e, a, Var(tmp)), b, Var(a)), tmp, Var(b))

    for a, b in itertools.combinations(names, 2):
        for e in (p.lhs, p.rhs):
            if serialize(swapped(e, a, b)) != serialize(normalize(e)):
                return False
        before = sorted(c.key() for c in p.region.constraints)
        after = sorted(Constraint(swapped(c.lhs, a, b), c.rel,
                                  swapped(c.rhs, a, b)).key()
                       for c in p.region.constraints)
        if before != after:
            return False
    return True


def _ordering_cover(p: Inequality) -> Optional[RegionCover]:
    names = list(p.region.var_names())
    if not 2 <= len(names) <= 4:
        return None
    pieces = []
    for perm in itertools.permutations(names):
        chain = [Constraint(Var(a), "<=", Var(b)) for a, b in zip(perm, perm[1:])]
        pieces.append(p.region.with_constraints(*chain))
    return RegionCover(tuple(pieces))


def _leading_index_monomial(term: Expr, index: str) -> Optional[tuple[Fraction, Fraction, dict[str, Fraction]]]:
    """Monomial c*d^p*prod(params^q): (c, p, {param: q}); None otherwise."""
    factors = term.factors if isinstance(term, Product) else (term,)
    c = Fraction(1)
    p = Fraction(0)
    params: dict[str, Fraction] = {}
    for f in factors:
        if isinstance(f, Const):
            c *= f.value
            continue
        base, q = (f.base, f.exponent) if isinstance(f, Power) else (f, Fraction(1))
        if not isinstance(base, Var):
            return None
        if base.name == index:
            p += q
        else:
            params[base.name] = params.get(base.name, Fraction(0)) + q
    return c, p, params


def _series_ladders(s: Series) -> list[Breakpoints]:
    """Thresholds where denominator sum factors flip from the constant term
    to an index-power term: solve the leading monomial = 1 for the index."""
    from .expr import expand
    summand = normalize(s.summand)
    factors = summand.factors if isinstance(summand, Product) else (summand,)
    thresholds: list[Expr] = []
    for f in factors:
        base, pw = (f.base, f.exponent) if isinstance(f, Power) else (f, Fraction(1))
        if pw >= 0:
            continue
        base = expand(base)
        if not isinstance(base, Sum):
            continue
        terms = base.terms
        if not any(isinstance(t, Const) for t in terms):
            continue
        lead = None
        for t in terms:
            m = _leading_index_monomial(t, s.index)
            if m is None:
                continue
            c, p, params = m
            if p <= 0 or c <= 0:
                continue
            if lead is None or p > lead[1]:
                lead = (c, p, params)
        if lead is None:
            continue
        c, p, params = lead
        # c * d^p * prod(w^q) = 1  =>  d = c^(-1/p) * prod(w^(-q/p))
        pieces = [pow_(const(c), Fraction(-1) / p)] if c != 1 else []
        for w, q in params.items():
            pieces.append(pow_(Var(w), -q / p))
        theta = normalize(mul(*pieces)) if pieces else const(1)
        if isinstance(theta, Const):
            continue
        if serialize(theta) not in {serialize(t) for t in thresholds}:
            thresholds.append(theta)
    if not thresholds:
        return [Breakpoints(())]
    params_r = s.params_region
    thresholds.sort(key=serialize)
    # order by how many other thresholds each provably dominates
    ordered = sorted(
        thresholds,
        key=lambda t: sum(
            1 for u in thresholds
            if u is not t and cheap_nonneg(normalize(sub(t, u)), params_r, nodes=8)[0]
        ),
    )
    out = [Breakpoints(tuple(ordered))]
    if len(ordered) > 1:
        out.append(Breakpoints((ordered[0],)))
    out.append(Breakpoints(()))
    return out


def heuristic_propose(p: ProblemStatement) -> list[Decomposition]:
    """Deterministic candidates in priority order: crossover threshold splits,
    variable-ordering covers for symmetric problems, denominator-transition
    ladders for series, then the trivial whole-domain candidate."""
    out: list[Decomposition] = []
    if isinstance(p, Series):
        out.extend(_series_ladders(p))
    else:
        out.extend(_crossover_covers(p))
        if _is_symmetric(p):
            oc = _ordering_cover(p)
            if oc is not None:
                out.append(oc)
        out.append(RegionCover((p.region,)))
    if not out:
        raise NoCandidate("no decomposition pattern applies")
    return out[:MAX_CANDIDATES]


# ---------------------------------------------------------------------------
# Coverage validation
# ---------------------------------------------------------------------------

COVER_SAMPLES = 10_000


def _extra_constraints(parent: Region, piece: Region) -> list[Constraint]:
    base = {c.key() for c in parent.constraints}
    return [c for c in piece.constraints if c.key() not in base]


def _complementary_pair(parent: Region, cover: RegionCover) -> bool:
    if cover.k != 2:
        return False
    e1 = _extra_constraints(parent, cover.pieces[0])
    e2 = _extra_constraints(parent, cover.pieces[1])
    if len(e1) != 1 or len(e2) != 1:
        return False
    try:
        neg = e1[0].negated()
    except ValueError:
        return False
    return e2[0].key() == neg.key() or e2[0].key() == neg.flipped().key()


def _full_ordering(parent: Region, cover: RegionCover) -> bool:
    names = parent.var_names()
    n = len(names)
    if n < 2 or cover.k != len(list(itertools.permutations(names))):
        return False
    want = set()
    for perm in itertools.permutations(names):
        want.add(tuple(f"{a}<={b}" for a, b in zip(perm, perm[1:])))
    got = set()
    for piece in cover.pieces:
        extras = _extra_constraints(parent, piece)
        chain = []
        for c in extras:
            if c.rel != "<=" or not isinstance(c.lhs, Var) or not isinstance(c.rhs, Var):
                return False
            chain.append(f"{c.lhs.name}<={c.rhs.name}")
        got.add(tuple(chain))
    return got == want


def point_not_in_region_verified(r: Region, point: dict[str, float]) -> bool:
    """Interval-verified non-membership: some constraint certainly fails."""
    names = r.var_names()
    from .prover import point_matrix
    x = point_matrix(names, point)
    for gap_tape, strict in constraint_gap_tapes(r, names):
        lo, hi, ok = kernels.eval_boxes(gap_tape, x, x)
        if not bool(ok[0]):
            continue
        if strict and lo[0] >= 0.0:
            return True
        if not strict and lo[0] > 0.0:
            return True
    return False


def validate_cover(p: ProblemStatement, d: Decomposition,
                   seed: int = 0) -> CoverageReport:
    """ProvedCover by syntactic argument for complementary pairs, full
    ordering covers, and provably increasing ladders; otherwise sampled
    coverage with an interval-verified NotCover witness."""
    if isinstance(d, Breakpoints):
        assert isinstance(p, Series)
        params = p.params_region
        edges = [const(p.start), *d.ladder]
        if all(cheap_nonneg(normalize(sub(b, a)), params)[0]
               for a, b in zip(edges, edges[1:])):
            return PROVED_COVER
        return _sampled_ladder(p, d, seed)
    assert isinstance(p, Inequality)
    parent = p.region
    for piece in d.pieces:
        if piece.var_names() != parent.var_names():
            raise ValueError("piece variables must match the domain")
    if any(not _extra_constraints(parent, pc) for pc in d.pieces):
        return PROVED_COVER  # some piece is the whole domain
    if _complementary_pair(parent, d):
        return PROVED_COVER
    if _full_ordering(parent, d):
        return PROVED_COVER
    return _sampled_cover(p, d, seed)


def _sampled_cover(p: Inequality, d: RegionCover, seed: int) -> CoverageReport:
    parent = p.region
    names = parent.var_names()
    rng = np.random.default_rng(seed + 101)
    pts = sample_box(parent, COVER_SAMPLES * 2, rng)
    in_parent = feasible_mask(parent, pts, names)
    pts = pts[:, in_parent][:, :COVER_SAMPLES]
    n = pts.shape[1]
    covered = np.zeros(n, dtype=np.bool_)
    for piece in d.pieces:
        covered |= feasible_mask(piece, pts, names)
    n_unc = int((~covered).sum())
    if n_unc == 0:
        return CoverageReport("sampled", n, 0)
    for j in np.flatnonzero(~covered):
        point = {nm: float(pts[i, j]) for i, nm in enumerate(names)}
        if point_feasible_verified(parent, point) and \
                all(point_not_in_region_verified(pc, point) for pc in d.pieces):
            return CoverageReport("not-cover", n, n_unc, point)
    return CoverageReport("sampled", n, n_unc)


def _sampled_ladder(p: Series, d: Breakpoints, seed: int) -> CoverageReport:
    params = p.params_region
    names = params.var_names()
    rng = np.random.default_rng(seed + 202)
    pts = sample_box(params, 2048, rng)
    mask = feasible_mask(params, pts, names)
    pts = pts[:, mask]
    if pts.shape[1] == 0:
        return CoverageReport("sampled", 0, 0)
    from .tape import compile_expr
    prev = np.full(pts.shape[1], float(p.start))
    for e in d.ladder:
        v, ok = kernels.eval_points(compile_expr(normalize(e), names), pts)
        bad = ok & (v < prev)
        if bad.any():
            j = int(np.flatnonzero(bad)[0])
            point = {nm: float(pts[i, j]) for i, nm in enumerate(names)}
            return CoverageReport("not-cover", pts.shape[1], int(bad.sum()), point)
        prev = v
    return CoverageReport("sampled", pts.shape[1], 0)
