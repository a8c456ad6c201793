"""Numba-jitted tape kernels (the default backend when numba imports).

Same contract as numpy_backend; the per-point/per-box loops are compiled.
"""

from __future__ import annotations

import math

import numpy as np
import numba
from numba import njit, prange

from ..tape import (
    OP_ADD, OP_CONST, OP_LOG, OP_MUL, OP_POW, OP_POW_INT, OP_VAR, Tape,
)

numba.config.THREADING_LAYER = "workqueue"  # portable; avoids the TBB probe

NAME = "numba"

_NEG = -math.inf
_POS = math.inf


@njit(cache=True, parallel=True)
def _points_kernel(ops, aa, ab, aux_pt, x, out, ok):
    m = ops.shape[0]
    n = x.shape[1]
    for j in prange(n):
        vals = np.empty(m, dtype=np.float64)
        good = True
        for i in range(m):
            op = ops[i]
            if op == OP_CONST:
                vals[i] = aux_pt[i]
            elif op == OP_VAR:
                vals[i] = x[aa[i], j]
            elif op == OP_ADD:
                vals[i] = vals[aa[i]] + vals[ab[i]]
            elif op == OP_MUL:
                vals[i] = vals[aa[i]] * vals[ab[i]]
            elif op == OP_POW_INT:
                base = vals[aa[i]]
                p = ab[i]
                if p < 0 and base == 0.0:
                    good = False
                    vals[i] = math.nan
                else:
                    vals[i] = base ** float(p)
            elif op == OP_POW:
                base = vals[aa[i]]
                p = aux_pt[i]
                if (base < 0.0) or (base == 0.0 and p < 0.0):
                    good = False
                    vals[i] = math.nan
                else:
                    vals[i] = base ** p
            elif op == OP_LOG:
                arg = vals[aa[i]]
                if arg <= 0.0:
                    good = False
                    vals[i] = math.nan
                else:
                    vals[i] = math.log(arg)
            else:
                vals[i] = math.exp(vals[aa[i]])
        v = vals[m - 1]
        out[j] = v
        ok[j] = good and not math.isnan(v)


@njit(cache=True, parallel=True)
def _boxes_kernel(ops, aa, ab, aux_lo, aux_hi, xl, xh, out_lo, out_hi, ok):
    m = ops.shape[0]
    n = xl.shape[1]
    for j in prange(n):
        lo = np.empty(m, dtype=np.float64)
        hi = np.empty(m, dtype=np.float64)
        good = True
        for i in range(m):
            op = ops[i]
            if op == OP_CONST:
                lo[i] = aux_lo[i]
                hi[i] = aux_hi[i]
            elif op == OP_VAR:
                lo[i] = xl[aa[i], j]
                hi[i] = xh[aa[i], j]
            elif op == OP_ADD:
                al, bl = lo[aa[i]], lo[ab[i]]
                s = math.nextafter(al + bl, _NEG)
                if al >= 0.0 and bl >= 0.0 and s < 0.0:
                    s = 0.0  # exact-zero floor survives rounding
                lo[i] = s
                hi[i] = math.nextafter(hi[aa[i]] + hi[ab[i]], _POS)
            elif op == OP_MUL:
                al, ah = lo[aa[i]], hi[aa[i]]
                bl, bh = lo[ab[i]], hi[ab[i]]
                p1 = al * bl
                p2 = al * bh
                p3 = ah * bl
                p4 = ah * bh
                mn = math.inf
                mx = -math.inf
                for p in (p1, p2, p3, p4):
                    if not math.isnan(p):
                        if p < mn:
                            mn = p
                        if p > mx:
                            mx = p
                if mn > mx:  # every candidate was nan
                    lo[i] = math.nan
                    hi[i] = math.nan
                else:
                    lor = math.nextafter(mn, _NEG)
                    if al >= 0.0 and bl >= 0.0 and lor < 0.0:
                        lor = 0.0
                    lo[i] = lor
                    hi[i] = math.nextafter(mx, _POS)
            elif op == OP_POW_INT:
                p = ab[i]
                q = abs(p)
                al, ah = lo[aa[i]], hi[aa[i]]
                if q % 2 == 1:
                    yl = math.nextafter(math.nextafter(al ** float(q), _NEG), _NEG)
                    if al >= 0.0 and yl < 0.0:
                        yl = 0.0
                    yh = math.nextafter(math.nextafter(ah ** float(q), _POS), _POS)
                else:
                    if al <= 0.0 <= ah:
                        abs_lo = 0.0
                    else:
                        abs_lo = min(abs(al), abs(ah))
                    abs_hi = max(abs(al), abs(ah))
                    yl = math.nextafter(math.nextafter(abs_lo ** float(q), _NEG), _NEG)
                    if yl < 0.0:
                        yl = 0.0
                    yh = math.nextafter(math.nextafter(abs_hi ** float(q), _POS), _POS)
                if p < 0:
                    if yl <= 0.0 <= yh:
                        good = False
                        yl, yh = -math.inf, math.inf
                    else:
                        rl = math.nextafter(1.0 / yh, _NEG)
                        rh = math.nextafter(1.0 / yl, _POS)
                        yl, yh = rl, rh
                lo[i] = yl
                hi[i] = yh
            elif op == OP_POW:
                pl, ph = aux_lo[i], aux_hi[i]
                al, ah = lo[aa[i]], hi[aa[i]]
                bad = al < 0.0 if pl > 0.0 else al <= 0.0
                if bad:
                    good = False
                    lo[i] = -math.inf
                    hi[i] = math.inf
                else:
                    bl = max(al, 0.0)
                    c1 = bl ** pl
                    c2 = bl ** ph
                    c3 = ah ** pl
                    c4 = ah ** ph
                    yl = min(min(c1, c2), min(c3, c4))
                    yh = max(max(c1, c2), max(c3, c4))
                    yl = math.nextafter(math.nextafter(yl, _NEG), _NEG)
                    yh = math.nextafter(math.nextafter(yh, _POS), _POS)
                    lo[i] = max(yl, 0.0)
                    hi[i] = yh
            elif op == OP_LOG:
                al, ah = lo[aa[i]], hi[aa[i]]
                if al <= 0.0:
                    good = False
                    lo[i] = -math.inf
                    hi[i] = math.inf
                else:
                    lo[i] = math.nextafter(math.nextafter(math.log(al), _NEG), _NEG)
                    hi[i] = math.nextafter(math.nextafter(math.log(ah), _POS), _POS)
            else:
                al, ah = lo[aa[i]], hi[aa[i]]
                yl = math.nextafter(math.nextafter(math.exp(al), _NEG), _NEG)
                lo[i] = max(yl, 0.0)
                hi[i] = math.nextafter(math.nextafter(math.exp(ah), _POS), _POS)
        ll = lo[m - 1]
        hh = hi[m - 1]
        if math.isnan(ll) or math.isnan(hh):
            good = False
            ll, hh = -math.inf, math.inf
        out_lo[j] = ll
        out_hi[j] = hh
        ok[j] = good


def eval_points(tape: Tape, x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    n = x.shape[1]
    out = np.empty(n, dtype=np.float64)
    ok = np.empty(n, dtype=np.bool_)
    _points_kernel(tape.ops, tape.arg_a, tape.arg_b, tape.aux_pt,
                   np.ascontiguousarray(x, dtype=np.float64), out, ok)
    return out, ok


def eval_boxes(tape: Tape, xl: np.ndarray, xh: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    n = xl.shape[1]
    out_lo = np.empty(n, dtype=np.float64)
    out_hi = np.empty(n, dtype=np.float64)
    ok = np.empty(n, dtype=np.bool_)
    _boxes_kernel(tape.ops, tape.arg_a, tape.arg_b, tape.aux_lo, tape.aux_hi,
                  np.ascontiguousarray(xl, dtype=np.float64),
                  np.ascontiguousarray(xh, dtype=np.float64),
                  out_lo, out_hi, ok)
    return out_lo, out_hi, ok
