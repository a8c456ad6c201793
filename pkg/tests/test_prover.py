import math
from fractions import Fraction

import numpy as np
import pytest

from decomp.domain import Constraint, region
from decomp.expr import (
    add, const, evaluate, exp, log, mul, pow_, serialize, sub, var,
)
from decomp.prover import (
    Counterexample, GridSpec, ProverOptions, cheap_nonneg, falsify_inequality,
    grid_search, prove_piece, verify_counterexample,
)

x, y = var("x"), var("y")

D = region(["x", "y"], [Constraint(x, ">=", const(1)), Constraint(y, ">=", const(0))])
F_XY = mul(x, y)
G_FY = add(mul(x, log(x)), exp(y))
PIECE_BELOW = D.with_constraints(Constraint(y, "<=", mul(2, log(x))))
PIECE_ABOVE = D.with_constraints(Constraint(y, ">", mul(2, log(x))))

RX1 = region(["x"], [Constraint(x, ">=", const(1))])


def _max_1d(f, lo, hi, iters=200):
    """Golden-section oracle for the maximum of a 1-D function."""
    phi = (math.sqrt(5) - 1) / 2
    a, b = lo, hi
    c, d_ = b - phi * (b - a), a + phi * (b - a)
    for _ in range(iters):
        if f(c) > f(d_):
            b, d_ = d_, c
            c = b - phi * (b - a)
        else:
            a, c = c, d_
            d_ = a + phi * (b - a)
    m = 0.5 * (a + b)
    return m, f(m)


class TestResidualOracle:
    def test_piece_two_residual_max_is_2_over_e(self):
        """Oracle first: after eliminating x < e^{y/2}, piece 2 reduces to
        y e^{-y/2} <= 1; its maximum is 2/e ~ 0.7358 < 1, at y = 2."""
        arg, val = _max_1d(lambda t: t * math.exp(-t / 2), 0.0, 50.0)
        assert val == pytest.approx(2 / math.e, rel=1e-9)
        assert arg == pytest.approx(2.0, abs=1e-6)
        assert val < 1


class TestProvePiece:
    def test_piece_below_threshold_at_2(self):
        out = prove_piece(F_XY, G_FY, PIECE_BELOW, 2)
        assert out.proved
        rules = [s["rule"] for s in out.steps]
        assert "monotone-substitution" in rules

    def test_piece_above_threshold_at_1(self):
        out = prove_piece(F_XY, G_FY, PIECE_ABOVE, 1)
        assert out.proved

    def test_sound_proved_claims_hold_numerically(self):
        """No Proved piece may admit a verified counterexample at its C."""
        cases = [
            (F_XY, G_FY, PIECE_BELOW, Fraction(2)),
            (F_XY, G_FY, PIECE_ABOVE, Fraction(1)),
            (log(x), x, RX1, Fraction(1)),
        ]
        for f, g, r, c in cases:
            assert prove_piece(f, g, r, c).proved
            assert falsify_inequality(f, g, r, c, budget=2048) is None

    def test_unbounded_ratio_unknown_at_every_grid_c(self):
        res = grid_search(pow_(x, 2), x, RX1)
        assert res.status == "unknown"

    def test_domain_error_on_undefined_claim(self):
        from decomp.expr import DomainError
        r = region(["x"], [Constraint(x, ">=", const(-5)),
                           Constraint(x, "<=", const(-1))])
        with pytest.raises(DomainError):
            prove_piece(log(x), x, r, 1)


class TestGridSearch:
    def test_fenchel_piece_constants(self):
        p1 = grid_search(F_XY, G_FY, PIECE_BELOW)
        p2 = grid_search(F_XY, G_FY, PIECE_ABOVE)
        assert (p1.status, p1.c) == ("proved", 2)
        assert (p2.status, p2.c) == ("proved", 1)

    def test_identity_at_1(self):
        res = grid_search(x, x, region(["x"], [Constraint(x, ">=", const(0))]))
        assert (res.status, res.c) == ("proved", 1)

    def test_reported_c_is_minimal_over_grid(self):
        # x <= C * (x/4) needs C >= 4
        res = grid_search(x, mul(Fraction(1, 4), x), RX1)
        assert (res.status, res.c) == ("proved", 4)

    def test_monotone_in_c(self):
        """If prove_piece proves at C, it proves at the next grid point."""
        grid = GridSpec.default()
        cases = [
            (F_XY, G_FY, PIECE_BELOW),
            (F_XY, G_FY, PIECE_ABOVE),
            (log(x), x, RX1),
            (add(pow_(x, 3), x), pow_(x, 3), RX1),
        ]
        for f, g, r in cases:
            res = grid_search(f, g, r, grid)
            assert res.status == "proved"
            idx = grid.values.index(res.c)
            if idx + 1 < len(grid.values):
                nxt = grid.values[idx + 1]
                assert prove_piece(f, g, r, nxt).proved, \
                    f"not monotone at C={nxt} for {serialize(f)}"

    def test_grid_refinement_never_flips_proved(self):
        small = GridSpec.default(16)
        large = GridSpec.default(10_000)
        cases = [
            (F_XY, G_FY, PIECE_BELOW),
            (x, mul(Fraction(1, 4), x), RX1),
            (log(x), x, RX1),
        ]
        for f, g, r in cases:
            rs = grid_search(f, g, r, small)
            rl = grid_search(f, g, r, large)
            if rs.status == "proved":
                assert rl.status == "proved"
                assert rl.c <= rs.c

    def test_grid_spec_invariants(self):
        g = GridSpec.default()
        assert g.values[0] == 1 and g.max == 10_000
        assert all(b > a for a, b in zip(g.values, g.values[1:]))
        with pytest.raises(ValueError):
            GridSpec((Fraction(2), Fraction(1)))
        # user-overridable upward
        assert GridSpec.default(10 ** 6).max == 10 ** 6


class TestFalsifier:
    def test_x_squared_exceeds_any_c(self):
        cex = falsify_inequality(pow_(x, 2), x, RX1, 10_000)
        assert cex is not None
        assert cex.assignment["x"] > 10_000
        assert cex.lhs_value > 10_000 * cex.rhs_value

    def test_true_estimate_not_found(self, fenchel):
        assert falsify_inequality(fenchel.lhs, fenchel.rhs, fenchel.region, 10_000) is None

    def test_product_vs_sum(self):
        r = region(["x", "y"], [Constraint(x, ">=", const(1)),
                                Constraint(y, ">=", const(1))])
        cex = falsify_inequality(mul(x, y), add(x, y), r, 10_000)
        assert cex is not None
        a = cex.assignment
        assert a["x"] * a["y"] > 10_000 * (a["x"] + a["y"])

    def test_counterexample_is_interval_verified(self):
        """A numerically marginal candidate is rejected, not reported."""
        # x <= 1*x is tight everywhere; no rounding artifact may slip through
        assert falsify_inequality(x, x, RX1, 1, budget=512) is None
        assert verify_counterexample(x, x, RX1, Fraction(1), {"x": 3.0}) is None

    def test_verified_counterexample_fields(self):
        cex = verify_counterexample(pow_(x, 2), x, RX1, Fraction(10),
                                    {"x": 100.0})
        assert isinstance(cex, Counterexample)
        assert cex.lhs_value > float(cex.c) * cex.rhs_value
        # infeasible points are rejected outright
        assert verify_counterexample(pow_(x, 2), x, RX1, Fraction(10),
                                     {"x": 0.5}) is None


class TestCheapNonneg:
    def test_corner_substitution(self):
        d, h = var("d"), var("h")
        r = region(["d", "h"], [Constraint(h, ">=", const(1)),
                                Constraint(d, ">=", h)])
        ok, steps = cheap_nonneg(sub(mul(pow_(d, 2), pow_(h, -2)), const(1)), r)
        assert ok
        assert any(s["rule"] == "corner" for s in steps)

    def test_ratio_rule(self):
        ok, steps = cheap_nonneg(sub(pow_(x, 3), x), RX1)
        assert ok

    def test_rejects_false_claims(self):
        ok, _ = cheap_nonneg(sub(x, pow_(x, 2)), RX1)
        assert not ok
