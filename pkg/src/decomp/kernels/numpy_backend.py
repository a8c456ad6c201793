"""Pure-numpy tape kernels (the fallback backend).

Point evaluation is round-to-nearest. Interval evaluation is outward-rounded:
exact IEEE ops are widened by one ulp, libm-backed ops (pow/log/exp) by two,
so every returned [lo, hi] encloses the true value set of the box.
"""

from __future__ import annotations

import numpy as np

from ..tape import (
    OP_ADD, OP_CONST, OP_LOG, OP_MUL, OP_POW, OP_POW_INT, OP_VAR, Tape,
)

NAME = "numpy"

_NEG = np.float64(-np.inf)
_POS = np.float64(np.inf)


def _down1(x):
    return np.nextafter(x, _NEG)


def _up1(x):
    return np.nextafter(x, _POS)


def _down2(x):
    return np.nextafter(np.nextafter(x, _NEG), _NEG)


def _up2(x):
    return np.nextafter(np.nextafter(x, _POS), _POS)


def eval_points(tape: Tape, x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Evaluate at points x (n_vars, n). Returns (values, defined_mask)."""
    n = x.shape[1]
    m = len(tape)
    vals = np.empty((m, n), dtype=np.float64)
    ok = np.ones(n, dtype=np.bool_)
    ops, aa, ab = tape.ops, tape.arg_a, tape.arg_b
    with np.errstate(all="ignore"):
        for i in range(m):
            op = ops[i]
            if op == OP_CONST:
                vals[i] = tape.aux_pt[i]
            elif op == OP_VAR:
                vals[i] = x[aa[i]]
            elif op == OP_ADD:
                vals[i] = vals[aa[i]] + vals[ab[i]]
            elif op == OP_MUL:
                vals[i] = vals[aa[i]] * vals[ab[i]]
            elif op == OP_POW_INT:
                base = vals[aa[i]]
                p = int(ab[i])
                if p < 0:
                    ok &= base != 0.0
                vals[i] = base ** float(p)
            elif op == OP_POW:
                base = vals[aa[i]]
                p = tape.aux_pt[i]
                ok &= base >= 0.0 if p > 0 else base > 0.0
                vals[i] = np.power(base, p)
            elif op == OP_LOG:
                arg = vals[aa[i]]
                ok &= arg > 0.0
                vals[i] = np.log(np.where(arg > 0.0, arg, 1.0))
            else:  # OP_EXP
                vals[i] = np.exp(vals[aa[i]])
    out = vals[m - 1]
    ok &= ~np.isnan(out)
    return out, ok


def eval_boxes(tape: Tape, xl: np.ndarray, xh: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Interval-evaluate over boxes (n_vars, n). Returns (lo, hi, certified).

    certified[j] is False when the box may leave the domain of definition
    (log of a non-positive value, division by zero, negative base under a
    fractional power); lo/hi are then [-inf, inf].
    """
    n = xl.shape[1]
    m = len(tape)
    lo = np.empty((m, n), dtype=np.float64)
    hi = np.empty((m, n), dtype=np.float64)
    ok = np.ones(n, dtype=np.bool_)
    ops, aa, ab = tape.ops, tape.arg_a, tape.arg_b
    with np.errstate(all="ignore"):
        for i in range(m):
            op = ops[i]
            if op == OP_CONST:
                lo[i] = tape.aux_lo[i]
                hi[i] = tape.aux_hi[i]
            elif op == OP_VAR:
                lo[i] = xl[aa[i]]
                hi[i] = xh[aa[i]]
            elif op == OP_ADD:
                a, b = aa[i], ab[i]
                nn = (lo[a] >= 0.0) & (lo[b] >= 0.0)  # exact-zero floor survives rounding
                lo[i] = np.where(nn, np.fmax(_down1(lo[a] + lo[b]), 0.0),
                                 _down1(lo[a] + lo[b]))
                hi[i] = _up1(hi[a] + hi[b])
            elif op == OP_MUL:
                a, b = aa[i], ab[i]
                p1 = lo[a] * lo[b]
                p2 = lo[a] * hi[b]
                p3 = hi[a] * lo[b]
                p4 = hi[a] * hi[b]
                nn = (lo[a] >= 0.0) & (lo[b] >= 0.0)
                raw = _down1(np.fmin(np.fmin(p1, p2), np.fmin(p3, p4)))
                lo[i] = np.where(nn, np.fmax(raw, 0.0), raw)
                hi[i] = _up1(np.fmax(np.fmax(p1, p2), np.fmax(p3, p4)))
            elif op == OP_POW_INT:
                a = aa[i]
                p = int(ab[i])
                q = abs(p)
                al, ah = lo[a], hi[a]
                if q % 2 == 1:
                    yl = _down2(np.power(al, float(q)))
                    yl = np.where(al >= 0.0, np.fmax(yl, 0.0), yl)
                    yh = _up2(np.power(ah, float(q)))
                else:
                    abs_lo = np.where((al <= 0.0) & (ah >= 0.0), 0.0,
                                      np.fmin(np.abs(al), np.abs(ah)))
                    abs_hi = np.fmax(np.abs(al), np.abs(ah))
                    yl = np.fmax(_down2(np.power(abs_lo, float(q))), 0.0)
                    yh = _up2(np.power(abs_hi, float(q)))
                if p < 0:
                    crosses = (yl <= 0.0) & (yh >= 0.0)
                    ok &= ~crosses
                    rl = _down1(1.0 / yh)
                    rh = _up1(1.0 / yl)
                    yl = np.where(crosses, -np.inf, rl)
                    yh = np.where(crosses, np.inf, rh)
                lo[i] = yl
                hi[i] = yh
            elif op == OP_POW:
                a = aa[i]
                pl, ph = tape.aux_lo[i], tape.aux_hi[i]
                al, ah = lo[a], hi[a]
                bad = al < 0.0 if pl > 0 else al <= 0.0
                ok &= ~bad
                bl = np.fmax(al, 0.0)
                c1 = np.power(bl, pl)
                c2 = np.power(bl, ph)
                c3 = np.power(ah, pl)
                c4 = np.power(ah, ph)
                yl = _down2(np.fmin(np.fmin(c1, c2), np.fmin(c3, c4)))
                yh = _up2(np.fmax(np.fmax(c1, c2), np.fmax(c3, c4)))
                lo[i] = np.where(bad, -np.inf, np.fmax(yl, 0.0))
                hi[i] = np.where(bad, np.inf, yh)
            elif op == OP_LOG:
                a = aa[i]
                bad = lo[a] <= 0.0
                ok &= ~bad
                yl = _down2(np.log(np.where(bad, 1.0, lo[a])))
                yh = _up2(np.log(np.where(hi[a] > 0.0, hi[a], 1.0)))
                lo[i] = np.where(bad, -np.inf, yl)
                hi[i] = np.where(bad, np.inf, yh)
            else:  # OP_EXP
                a = aa[i]
                lo[i] = np.fmax(_down2(np.exp(lo[a])), 0.0)
                hi[i] = _up2(np.exp(hi[a]))
    out_lo = lo[m - 1].copy()
    out_hi = hi[m - 1].copy()
    nan = np.isnan(out_lo) | np.isnan(out_hi)
    ok &= ~nan
    out_lo[nan] = -np.inf
    out_hi[nan] = np.inf
    return out_lo, out_hi, ok
