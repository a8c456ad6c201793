"""decomp: prove asymptotic inequalities by domain decomposition.

Pipeline: parse a conjectured estimate (LaTeX subset), propose a finite cover
of the domain or a breakpoint ladder for a series, simplify regime by regime
via certified leading-term bounds, then verify each piece with the built-in
bounding prover (rewrite rules + outward-rounded interval subdivision) or an
external quantifier-elimination CAS, aggregating a global verdict with
per-piece certificates.
"""

__version__ = "0.1.0"

from .expr import (  # noqa: F401
    Const, Var, Sum, Product, Power, Log, Exp, Expr, DomainError,
    add, mul, sub, div, pow_, log, exp, const, var,
    normalize, evaluate, differentiate, substitute, serialize, free_vars,
)
from .domain import (  # noqa: F401
    Constraint, Region, VarRole, Monotonicity, region, structural_monotonicity,
)
