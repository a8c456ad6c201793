import math

import numpy as np
import pytest

from decomp.decompose import (
    Breakpoints, RegionCover, heuristic_propose, validate_cover,
)
from decomp.domain import Constraint
from decomp.expr import add, const, exp, log, mul, pow_, serialize, var
from decomp.latex import parse_problem
from decomp.prover import feasible_mask, sample_box

x, y = var("x"), var("y")


def _keys(cands):
    return [c.key() for c in cands]


class TestHeuristicPropose:
    def test_crossover_split_for_fenchel(self, fenchel):
        cands = heuristic_propose(fenchel)
        below = fenchel.region.with_constraints(Constraint(y, "<=", mul(2, log(x))))
        above = fenchel.region.with_constraints(Constraint(y, ">", mul(2, log(x))))
        want = RegionCover((below, above)).key()
        assert want in _keys(cands)

    def test_ladder_for_spectral_sum(self, spectral):
        cands = heuristic_propose(spectral)
        h, m = var("h"), var("m")
        assert Breakpoints((h, mul(h, m))).key() == cands[0].key()

    def test_ordering_cover_for_symmetric(self):
        p = parse_problem(
            r"(x_1 x_2 x_3)^{\frac{1}{3}} \ll \frac{1}{3} (x_1 + x_2 + x_3), "
            r"x_1 \ge 0, x_2 \ge 0, x_3 \ge 0")
        cands = heuristic_propose(p)
        orderings = [c for c in cands if isinstance(c, RegionCover) and c.k == 6]
        assert orderings, "expected the 6-permutation ordering cover"

    def test_deterministic(self, fenchel, spectral):
        for p in (fenchel, spectral):
            assert _keys(heuristic_propose(p)) == _keys(heuristic_propose(p))

    def test_candidate_budget(self, fenchel):
        assert len(heuristic_propose(fenchel)) <= 8

    def test_whole_domain_fallback(self):
        p = parse_problem(r"\log x \ll x, x \ge 1")
        cands = heuristic_propose(p)
        assert any(isinstance(c, RegionCover) and c.k == 1 for c in cands)


class TestValidateCover:
    def test_complementary_pair_proved(self, fenchel):
        below = fenchel.region.with_constraints(Constraint(y, "<=", mul(2, log(x))))
        above = fenchel.region.with_constraints(Constraint(y, ">", mul(2, log(x))))
        rep = validate_cover(fenchel, RegionCover((below, above)))
        assert rep.status == "proved"

    def test_gapped_cover_not_cover_with_witness(self, fenchel):
        """Pieces {y <= log x} and {y > 2 log x} leave the band in between."""
        gap_lo = fenchel.region.with_constraints(Constraint(y, "<=", log(x)))
        gap_hi = fenchel.region.with_constraints(Constraint(y, ">", mul(2, log(x))))
        rep = validate_cover(fenchel, RegionCover((gap_lo, gap_hi)))
        assert rep.status == "not-cover"
        w = rep.witness
        assert w is not None
        # the witness is checkable by hand: log x < y <= 2 log x
        assert math.log(w["x"]) < w["y"] <= 2 * math.log(w["x"]) + 1e-9
        assert w["x"] >= 1 and w["y"] >= 0

    def test_ladder_proved_on_params(self, spectral):
        h, m = var("h"), var("m")
        rep = validate_cover(spectral, Breakpoints((h, mul(h, m))))
        assert rep.status == "proved"

    def test_ordering_cover_full_sampled_coverage(self):
        """The union of all orderings covers the domain: 100% of sampled
        points must land in some piece."""
        p = parse_problem(
            r"x y \ll x^2 + y^2, x \ge 0, y \ge 0")
        cands = heuristic_propose(p)
        cover = next(c for c in cands if isinstance(c, RegionCover) and c.k == 2)
        rep = validate_cover(p, cover)
        assert rep.status == "proved"  # 2 == 2! permutations, syntactic
        # and by sampling, every point of D lies in some ordering piece
        rng = np.random.default_rng(5)
        names = p.region.var_names()
        pts = sample_box(p.region, 10_000, rng)
        inside = feasible_mask(p.region, pts, names)
        pts = pts[:, inside]
        covered = np.zeros(pts.shape[1], dtype=bool)
        for piece in cover.pieces:
            covered |= feasible_mask(piece, pts, names)
        assert covered.all()

    def test_whole_domain_always_covers(self, fenchel):
        rep = validate_cover(fenchel, RegionCover((fenchel.region,)))
        assert rep.status == "proved"
