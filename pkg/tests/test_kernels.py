import math
import random

import numpy as np
import pytest

from decomp.expr import DomainError, evaluate, free_vars, normalize
from decomp.kernels import available_backends, get_backend
from decomp.tape import compile_expr
from .conftest import random_expr

BACKENDS = available_backends()


def _tape_and_points(seed, n_pts=16):
    rng = random.Random(seed)
    e = normalize(random_expr(rng))
    names = tuple(sorted(free_vars(e))) or ("x",)
    t = compile_expr(e, names)
    nrng = np.random.default_rng(seed)
    pts = nrng.uniform(0.5, 25.0, size=(len(names), n_pts))
    return e, names, t, pts


class TestPointEval:
    @pytest.mark.parametrize("backend", BACKENDS)
    def test_matches_reference_evaluator(self, backend):
        impl = get_backend(backend)
        for seed in range(60):
            e, names, t, pts = _tape_and_points(seed)
            vals, ok = impl.eval_points(t, pts)
            for j in range(pts.shape[1]):
                a = {n: float(pts[i, j]) for i, n in enumerate(names)}
                try:
                    want = float(evaluate(e, a))
                except DomainError:
                    assert not ok[j]
                    continue
                if not ok[j]:
                    continue
                if math.isinf(want):
                    assert math.isinf(vals[j])
                else:
                    assert vals[j] == pytest.approx(want, rel=1e-10, abs=1e-250)

    def test_backends_agree(self):
        if len(BACKENDS) < 2:
            pytest.skip("single backend")
        a, b = (get_backend(n) for n in ("numpy", "numba"))
        for seed in range(40):
            _, _, t, pts = _tape_and_points(seed, n_pts=64)
            va, oka = a.eval_points(t, pts)
            vb, okb = b.eval_points(t, pts)
            assert np.array_equal(oka, okb)
            assert np.allclose(va[oka], vb[oka], rtol=1e-12, atol=0, equal_nan=True)

    def test_log_domain_flag(self):
        from decomp.expr import log, var
        t = compile_expr(log(var("x")), ("x",))
        for backend in BACKENDS:
            vals, ok = get_backend(backend).eval_points(
                t, np.array([[1.0, 0.0, -2.0]]))
            assert ok.tolist() == [True, False, False]


class TestIntervalConservativeness:
    @pytest.mark.parametrize("backend", BACKENDS)
    def test_boxes_enclose_sampled_points(self, backend):
        """1000 random (expr, box) pairs; each enclosure must contain 1000
        sampled point values."""
        impl = get_backend(backend)
        nrng = np.random.default_rng(99)
        pairs = 0
        seed = 0
        while pairs < 1000:
            seed += 1
            rng = random.Random(seed)
            e = normalize(random_expr(rng))
            names = tuple(sorted(free_vars(e)))
            if not names:
                continue
            t = compile_expr(e, names)
            lo = nrng.uniform(0.5, 20.0, size=(len(names), 1))
            hi = lo * nrng.uniform(1.0, 1.8, size=lo.shape)
            blo, bhi, bok = impl.eval_boxes(t, lo, hi)
            if not bool(bok[0]):
                continue
            pairs += 1
            u = nrng.random((len(names), 1000))
            pts = lo + u * (hi - lo)
            vals, ok = impl.eval_points(t, pts)
            good = ok & np.isfinite(vals)
            assert np.all(vals[good] >= blo[0] - 0.0), \
                f"lower enclosure violated for {e}"
            assert np.all(vals[good] <= bhi[0] + 0.0), \
                f"upper enclosure violated for {e}"

    def test_degenerate_box_is_tight_interval(self):
        from decomp.expr import add, exp, log, mul, var
        e = add(mul(var("x"), log(var("x"))), exp(var("y")))
        t = compile_expr(e, ("x", "y"))
        x = np.array([[3.0], [1.5]])
        for backend in BACKENDS:
            lo, hi, ok = get_backend(backend).eval_boxes(t, x, x)
            assert bool(ok[0])
            want = 3 * math.log(3) + math.exp(1.5)
            assert lo[0] <= want <= hi[0]
            assert hi[0] - lo[0] < 1e-12 * abs(want)

    def test_backends_boxes_agree(self):
        if len(BACKENDS) < 2:
            pytest.skip("single backend")
        a, b = (get_backend(n) for n in ("numpy", "numba"))
        for seed in range(40):
            _, names, t, pts = _tape_and_points(seed, n_pts=32)
            lo = pts * 0.95
            hi = pts * 1.05
            la, ha, oka = a.eval_boxes(t, lo, hi)
            lb, hb, okb = b.eval_boxes(t, lo, hi)
            assert np.array_equal(oka, okb)
            assert np.allclose(la[oka], lb[oka], rtol=1e-12)
            assert np.allclose(ha[oka], hb[oka], rtol=1e-12)
