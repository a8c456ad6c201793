import numpy as np
import pytest
from fractions import Fraction

from decomp import kernels
from decomp.domain import Constraint, region
from decomp.expr import add, const, div, mul, normalize, pow_, serialize, var
from decomp.prover import sample_region
from decomp.simplify import (
    JustificationStep, NoDominantTerm, PositivityUnderivable, RegimeBound,
    dominate_bound, replay,
)
from decomp.tape import compile_expr

d, h, m, x = var("d"), var("h"), var("m"), var("x")

PARAMS = [Constraint(h, ">=", const(1)), Constraint(m, ">=", const(1))]


def _summand(spectral):
    return spectral.summand


def _regime_region(*extra):
    return region(["d", "h", "m"], PARAMS + list(extra), index_vars=("d",))


REGIME_LOW = _regime_region(Constraint(d, ">=", const(1)), Constraint(d, "<=", h))
REGIME_MID = _regime_region(Constraint(d, ">=", h), Constraint(d, "<=", mul(h, m)))
REGIME_TAIL = _regime_region(Constraint(d, ">=", mul(h, m)))


class TestCaseStudyRegimes:
    """The three regime simplifications with their certified constants."""

    def test_low_regime_d_over_h2(self, spectral):
        rb = dominate_bound(_summand(spectral), REGIME_LOW)
        assert serialize(rb.bound) == "(* (^ h -2) d)"
        assert rb.factor <= 6
        assert replay(rb).valid

    def test_mid_regime_1_over_d(self, spectral):
        rb = dominate_bound(_summand(spectral), REGIME_MID)
        assert serialize(rb.bound) == "(^ d -1)"
        assert rb.factor <= 8
        assert replay(rb).valid

    def test_tail_regime_h4m4_over_d5(self, spectral):
        rb = dominate_bound(_summand(spectral), REGIME_TAIL)
        assert serialize(rb.bound) == "(* (^ d -5) (^ h 4) (^ m 4))"
        assert rb.factor <= 16
        assert replay(rb).valid

    @pytest.mark.parametrize("regime", [REGIME_LOW, REGIME_MID, REGIME_TAIL],
                             ids=["low", "mid", "tail"])
    def test_sampled_domination(self, spectral, regime):
        """source <= K * bound at 1000 log-uniform region points, zero
        violations allowed."""
        rb = dominate_bound(_summand(spectral), regime)
        rng = np.random.default_rng(4)
        pts = sample_region(regime, 1000, rng)
        assert pts.shape[1] > 100
        names = regime.var_names()
        vs, oks = kernels.eval_points(compile_expr(rb.source, names), pts)
        kb = normalize(mul(const(rb.factor), rb.bound))
        vb, okb = kernels.eval_points(compile_expr(kb, names), pts)
        good = oks & okb
        assert good.sum() > 100
        assert np.all(vs[good] <= vb[good] * (1 + 1e-12))


class TestErrors:
    def test_positivity_underivable(self):
        r = region(["x"], [])  # sign of x unknown
        e = div(const(1), add(1, x))
        with pytest.raises(PositivityUnderivable):
            dominate_bound(e, r)

    def test_no_dominant_term(self):
        # on 0 <= x <= 2 neither 1 nor x dominates the other
        r = region(["x"], [Constraint(x, ">=", const(0)),
                           Constraint(x, "<=", const(2))])
        with pytest.raises(NoDominantTerm):
            dominate_bound(div(const(1), add(1, x)), r)


class TestReplay:
    def test_valid_by_construction(self, spectral):
        for regime in (REGIME_LOW, REGIME_MID, REGIME_TAIL):
            assert replay(dominate_bound(_summand(spectral), regime)).valid

    def test_denominator_leading_term_hand_built(self):
        """1/(1+x) <= 1/x on x > 0 via DenominatorLeadingTerm is valid."""
        r = region(["x"], [Constraint(x, ">", const(0))])
        s = add(1, x)
        step = JustificationStep("DenominatorLeadingTerm", "lower", s, x)
        rb = RegimeBound(div(1, s), r, pow_(x, -1), Fraction(1), (step,))
        assert replay(rb).valid

    def test_positivity_drop_misuse_invalid_at_step_0(self):
        """Claiming x+1 <= x via PositivityDrop must be Invalid(0)."""
        r = region(["x"], [Constraint(x, ">=", const(0))])
        step = JustificationStep("PositivityDrop", "upper", add(x, 1), x)
        rb = RegimeBound(add(x, 1), r, x, Fraction(1), (step,))
        res = replay(rb)
        assert not res.valid
        assert res.failed_step == 0

    def test_numeric_spot_check_catches_wrong_claim(self):
        """A bound whose steps look plausible but whose claim is false is
        caught by the final numeric check."""
        r = region(["x"], [Constraint(x, ">=", const(1))])
        rb = RegimeBound(pow_(x, 2), r, x, Fraction(1), ())
        res = replay(rb)
        assert not res.valid
        assert res.failed_step == 0  # no steps: the spot check is step 0


class TestMonotoneRefinement:
    def test_shrinking_region_never_increases_k(self, spectral):
        """Adding a constraint keeps the same K for the same dominant-term
        choice."""
        rb1 = dominate_bound(_summand(spectral), REGIME_MID)
        tighter = REGIME_MID.with_constraints(Constraint(m, ">=", const(5)))
        rb2 = dominate_bound(_summand(spectral), tighter)
        if serialize(rb2.bound) == serialize(rb1.bound):
            assert rb2.factor <= rb1.factor
