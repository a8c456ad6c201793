"""Problem statements: an inequality f << g on a region, or a parametric
series bounded by a target."""

from __future__ import annotations

from dataclasses import dataclass

from .domain import Region
from .expr import Expr, ZERO, free_vars, normalize, serialize


@dataclass(frozen=True)
class Inequality:
    lhs: Expr
    rhs: Expr
    region: Region

    def __post_init__(self):
        lhs = normalize(self.lhs)
        rhs = normalize(self.rhs)
        if rhs == ZERO:
            raise ValueError("right side must not be identically zero")
        undeclared = (free_vars(lhs) | free_vars(rhs)) - set(self.region.var_names())
        if undeclared:
            raise ValueError(f"undeclared variables {sorted(undeclared)}")
        object.__setattr__(self, "lhs", lhs)
        object.__setattr__(self, "rhs", rhs)

    def key(self) -> str:
        return f"ineq|{serialize(self.lhs)}|{serialize(self.rhs)}|{self.region.key()}"


@dataclass(frozen=True)
class Series:
    summand: Expr
    index: str
    start: int
    params_region: Region
    target: Expr

    def __post_init__(self):
        summand = normalize(self.summand)
        target = normalize(self.target)
        if target == ZERO:
            raise ValueError("target bound must not be identically zero")
        if self.index not in free_vars(summand):
            raise ValueError(f"index {self.index} does not appear in the summand")
        undeclared = free_vars(summand) - {self.index} - set(self.params_region.var_names())
        if undeclared:
            raise ValueError(f"undeclared parameters {sorted(undeclared)}")
        object.__setattr__(self, "summand", summand)
        object.__setattr__(self, "target", target)

    def key(self) -> str:
        return (f"series|{serialize(self.summand)}|{self.index}|{self.start}"
                f"|{serialize(self.target)}|{self.params_region.key()}")


ProblemStatement = Inequality | Series
