"""Compile expressions to a flat instruction tape for the numeric kernels.

A tape is a straight-line SSA program over float64 registers. The same tape
drives both point evaluation (round-to-nearest) and interval evaluation
(outward-rounded), on either the numba or the pure-numpy backend.

Constants and non-dyadic exponents are stored as [lo, hi] float pairs so the
interval kernel never loses the true rational value to rounding.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .expr import Const, Var, Sum, Product, Power, Log, Exp, Expr, serialize

OP_CONST = 0
OP_VAR = 1
OP_ADD = 2
OP_MUL = 3
OP_POW_INT = 4
OP_POW = 5
OP_LOG = 6
OP_EXP = 7


@dataclass(frozen=True)
class Tape:
    ops: np.ndarray        # int8  (n,)
    arg_a: np.ndarray      # int32 (n,) register or var index
    arg_b: np.ndarray      # int32 (n,) register index (binary ops) or int exponent
    aux_lo: np.ndarray     # float64 (n,) const/exponent lower
    aux_hi: np.ndarray     # float64 (n,) const/exponent upper
    aux_pt: np.ndarray     # float64 (n,) round-to-nearest const/exponent
    n_vars: int
    var_names: tuple[str, ...]

    def __len__(self) -> int:
        return int(self.ops.shape[0])


def _float_pair(x: Fraction) -> tuple[float, float]:
    """Smallest float interval containing the rational x."""
    try:
        f = float(x)
    except OverflowError:
        f = math.inf if x > 0 else -math.inf
    if math.isinf(f):
        big = math.nextafter(math.inf, 0.0)
        return (big, math.inf) if f > 0 else (-math.inf, -big)
    if Fraction(f) == x:
        return f, f
    if Fraction(f) < x:
        return f, math.nextafter(f, math.inf)
    return math.nextafter(f, -math.inf), f


def compile_expr(e: Expr, var_order: "tuple[str, ...] | list[str]") -> Tape:
    var_index = {n: i for i, n in enumerate(var_order)}
    ops: list[int] = []
    arg_a: list[int] = []
    arg_b: list[int] = []
    aux_lo: list[float] = []
    aux_hi: list[float] = []
    aux_pt: list[float] = []
    memo: dict[str, int] = {}

    def emit(op, a=0, b=0, lo=0.0, hi=0.0, pt=0.0) -> int:
        ops.append(op)
        arg_a.append(a)
        arg_b.append(b)
        aux_lo.append(lo)
        aux_hi.append(hi)
        aux_pt.append(pt)
        return len(ops) - 1

    def rec(node: Expr) -> int:
        key = serialize(node)
        if key in memo:
            return memo[key]
        if isinstance(node, Const):
            lo, hi = _float_pair(node.value)
            try:
                pt = float(node.value)
            except OverflowError:
                pt = math.inf if node.value > 0 else -math.inf
            reg = emit(OP_CONST, lo=lo, hi=hi, pt=pt)
        elif isinstance(node, Var):
            if node.name not in var_index:
                raise KeyError(f"variable {node.name} not in tape ordering {var_order}")
            reg = emit(OP_VAR, a=var_index[node.name])
        elif isinstance(node, Sum):
            reg = rec(node.terms[0])
            for t in node.terms[1:]:
                reg = emit(OP_ADD, a=reg, b=rec(t))
        elif isinstance(node, Product):
            reg = rec(node.factors[0])
            for f in node.factors[1:]:
                reg = emit(OP_MUL, a=reg, b=rec(f))
        elif isinstance(node, Power):
            base = rec(node.base)
            p = node.exponent
            if p.denominator == 1:
                reg = emit(OP_POW_INT, a=base, b=int(p))
            else:
                lo, hi = _float_pair(p)
                reg = emit(OP_POW, a=base, lo=lo, hi=hi, pt=float(p))
        elif isinstance(node, Log):
            reg = emit(OP_LOG, a=rec(node.arg))
        elif isinstance(node, Exp):
            reg = emit(OP_EXP, a=rec(node.arg))
        else:
            raise TypeError(f"not an Expr: {node!r}")
        memo[key] = reg
        return reg

    rec(e)
    return Tape(
        ops=np.asarray(ops, dtype=np.int8),
        arg_a=np.asarray(arg_a, dtype=np.int32),
        arg_b=np.asarray(arg_b, dtype=np.int32),
        aux_lo=np.asarray(aux_lo, dtype=np.float64),
        aux_hi=np.asarray(aux_hi, dtype=np.float64),
        aux_pt=np.asarray(aux_pt, dtype=np.float64),
        n_vars=len(var_order),
        var_names=tuple(var_order),
    )
