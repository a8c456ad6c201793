"""LaTeX-subset front end.

Parses conjectured estimates like

    x y \\ll x\\log x + e^y, x \\ge 1, y \\ge 0
    \\sum_{d=0}^{\\infty} ... \\ll 1 + \\log(m^2), h \\ge 1, m \\ge 1

into ProblemStatements, and renders statements back to a canonical string
with parse(render(p)) == p. Also accepts the template phrasings
"prove that E1 is O(E2) for ..." and "show E1 \\ll E2 ...". The grammar is
documented in docs/grammar.ebnf.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional

from .domain import Constraint, Region, VarRole
from .expr import (
    Const, Exp, Expr, Log, Power, Product, Sum, Var, add, const, exp, log,
    mul, normalize, pow_, serialize, sub,
)
from .statements import Inequality, ProblemStatement, Series


@dataclass(frozen=True)
class Diagnostic:
    position: int
    message: str
    severity: str = "error"

    def to_dict(self) -> dict:
        return {"position": self.position, "message": self.message,
                "severity": self.severity}


@dataclass
class ParseDiagnostics:
    items: list[Diagnostic] = field(default_factory=list)

    def add(self, position: int, message: str, severity: str = "error"):
        self.items.append(Diagnostic(position, message, severity))

    def __bool__(self) -> bool:
        return bool(self.items)

    def to_list(self) -> list[dict]:
        return [d.to_dict() for d in self.items]


class ParseError(ValueError):
    def __init__(self, diagnostics: ParseDiagnostics):
        self.diagnostics = diagnostics
        first = diagnostics.items[0] if diagnostics.items else None
        msg = f"{first.message} (at {first.position})" if first else "parse error"
        super().__init__(msg)


class UnsupportedConstruct(ParseError):
    pass


class AmbiguousDomain(ParseError):
    pass


# ---------------------------------------------------------------------------
# Tokenizer
# ---------------------------------------------------------------------------

_TOKEN_RE = re.compile(
    r"""(?P<ws>\s+|\\,|\\;|\\!|\\quad|\\qquad|\\left|\\right)
      | (?P<number>\d+(?:\.\d+)?)
      | (?P<command>\\[a-zA-Z]+)
      | (?P<name>[a-zA-Z])
      | (?P<op><=|>=|[+\-*/^(){}=<>,_])
      | (?P<cdot>\\cdot)
    """,
    re.VERBOSE,
)

_REL_COMMANDS = {
    r"\le": "<=", r"\leq": "<=", r"\ge": ">=", r"\geq": ">=",
    r"\lt": "<", r"\gt": ">",
}


@dataclass(frozen=True)
class Token:
    kind: str       # number | command | name | op | end
    text: str
    pos: int


def tokenize(text: str, diags: ParseDiagnostics) -> list[Token]:
    out: list[Token] = []
    i = 0
    while i < len(text):
        m = _TOKEN_RE.match(text, i)
        if m is None:
            diags.add(i, f"unrecognized character {text[i]!r}")
            raise UnsupportedConstruct(diags)
        i = m.end()
        if m.lastgroup == "ws":
            continue
        kind = m.lastgroup
        tok = m.group()
        if kind == "command" and tok in _REL_COMMANDS:
            out.append(Token("op", _REL_COMMANDS[tok], m.start()))
        elif kind == "cdot":
            out.append(Token("op", "*", m.start()))
        else:
            out.append(Token(kind, tok, m.start()))
    out.append(Token("end", "", len(text)))
    return out


# ---------------------------------------------------------------------------
# Pratt expression parser
# ---------------------------------------------------------------------------

_FUNCTIONS = {r"\log": "log", r"\ln": "log", r"\exp": "exp"}


class _Parser:
    def __init__(self, tokens: list[Token], diags: ParseDiagnostics):
        self.toks = tokens
        self.i = 0
        self.diags = diags

    def peek(self, ahead: int = 0) -> Token:
        return self.toks[min(self.i + ahead, len(self.toks) - 1)]

    def next(self) -> Token:
        t = self.toks[self.i]
        if self.i < len(self.toks) - 1:
            self.i += 1
        return t

    def fail(self, tok: Token, message: str, cls=UnsupportedConstruct):
        self.diags.add(tok.pos, message)
        raise cls(self.diags)

    def expect(self, text: str) -> Token:
        t = self.next()
        if t.text != text:
            self.fail(t, f"expected {text!r}, found {t.text!r}")
        return t

    # -- expressions --------------------------------------------------------

    def expression(self, min_bp: int = 0) -> Expr:
        t = self.peek()
        if t.text == "-":
            self.next()
            left: Expr = mul(const(-1), self.expression(25))
        else:
            left = self.atom_with_power()
        while True:
            t = self.peek()
            if t.text in ("+", "-") and min_bp < 10:
                self.next()
                right = self.expression(10)
                left = add(left, right) if t.text == "+" else sub(left, right)
                continue
            if t.text in ("*",) and min_bp < 20:
                self.next()
                left = mul(left, self.expression(20))
                continue
            if t.text == "/" and min_bp < 20:
                self.next()
                right = self.atom_with_power()
                left = mul(left, pow_(right, -1))
                continue
            if min_bp < 20 and self.starts_atom(t):
                left = mul(left, self.atom_with_power())
                continue
            return left

    def starts_atom(self, t: Token) -> bool:
        if t.kind in ("number", "name"):
            return True
        if t.text == "(":
            return True
        if t.kind == "command" and (t.text in _FUNCTIONS or t.text == r"\frac"
                                    or t.text == r"\sum"):
            return t.text != r"\sum"
        return False

    def atom_with_power(self) -> Expr:
        base_tok = self.peek()
        e = self.atom()
        while self.peek().text == "^":
            self.next()
            e = self.apply_power(e, base_tok)
        return e

    def apply_power(self, base: Expr, base_tok: Token) -> Expr:
        # exponents: integer, {rational expr}, or a variable (const base only)
        t = self.peek()
        if t.text == "{":
            self.next()
            inner = self.expression(0)
            self.expect("}")
        elif t.kind == "number":
            self.next()
            inner = const(_number(t.text))
        elif t.text == "-":
            self.next()
            nt = self.next()
            if nt.kind != "number":
                self.fail(nt, "expected a number after '-' in exponent")
            inner = const(-_number(nt.text))
        elif t.kind == "name":
            self.next()
            inner = Var(t.text)
        else:
            self.fail(t, f"unsupported exponent starting with {t.text!r}")
        rat = _as_rational(inner)
        if rat is not None:
            return pow_(base, rat)
        # variable exponent: only e^expr and (positive const)^expr
        if _is_euler(base):
            return exp(inner)
        nb = normalize(base)
        if isinstance(nb, Const) and nb.value > 0:
            return exp(mul(inner, log(nb)))
        self.fail(base_tok, "variable exponents need base e or a positive constant")

    def atom(self) -> Expr:
        t = self.next()
        if t.kind == "number":
            return const(_number(t.text))
        if t.kind == "name":
            name = self.read_var_name(t)
            if name == "e" and self.peek().text == "^":
                return _EULER  # e^... handled by apply_power via _is_euler
            return Var(name)
        if t.text == "(":
            e = self.expression(0)
            self.expect(")")
            return e
        if t.text == "{":
            e = self.expression(0)
            self.expect("}")
            return e
        if t.kind == "command":
            if t.text in _FUNCTIONS:
                arg = self.atom_with_power()
                return log(arg) if _FUNCTIONS[t.text] == "log" else exp(arg)
            if t.text == r"\frac":
                self.expect("{")
                num = self.expression(0)
                self.expect("}")
                self.expect("{")
                den = self.expression(0)
                self.expect("}")
                return mul(num, pow_(den, -1))
            if t.text == r"\infty":
                self.fail(t, "infinity is only allowed as a sum limit")
            self.fail(t, f"unsupported command {t.text}")
        self.fail(t, f"unexpected token {t.text!r}")

    def read_var_name(self, t: Token) -> str:
        name = t.text
        if self.peek().text == "_":
            self.next()
            nt = self.next()
            if nt.text == "{":
                sub_parts = []
                while self.peek().text != "}":
                    sub_parts.append(self.next().text)
                self.expect("}")
                name += "_" + "".join(sub_parts)
            else:
                name += "_" + nt.text
        return name


_EULER = exp(const(1))


def _is_euler(e: Expr) -> bool:
    return serialize(normalize(e)) == serialize(_EULER)


def _number(text: str) -> Fraction:
    return Fraction(text)


def _as_rational(e: Expr) -> Optional[Fraction]:
    n = normalize(e)
    return n.value if isinstance(n, Const) else None


# ---------------------------------------------------------------------------
# Statement parsing
# ---------------------------------------------------------------------------

_NL_TEMPLATES = (
    re.compile(r"^\s*prove\s+that\s+(?P<lhs>.+?)\s+is\s+O\((?P<rhs>.+?)\)"
               r"(?:\s+(?:for|where)\s+(?P<cons>.+))?\s*$", re.IGNORECASE | re.DOTALL),
    re.compile(r"^\s*show\s+(?P<body>.+)$", re.IGNORECASE | re.DOTALL),
)

_RELS = ("<=", ">=", "<", ">", "=")


def parse_problem(text: str, allow_unconstrained: bool = False) -> ProblemStatement:
    """Parse a LaTeX-subset or template statement. Raises ParseError (with
    positioned diagnostics) on unsupported constructs, and AmbiguousDomain
    when a variable has no constraint and allow_unconstrained is not set."""
    diags = ParseDiagnostics()
    for pat in _NL_TEMPLATES:
        m = pat.match(text)
        if m is None:
            continue
        if "body" in m.groupdict() and m.groupdict()["body"] is not None:
            return parse_problem(m.group("body"), allow_unconstrained)
        latex = m.group("lhs") + r" \ll " + m.group("rhs")
        if m.group("cons"):
            latex += ", " + m.group("cons")
        return parse_problem(latex, allow_unconstrained)

    # connective words introduce/separate side conditions
    text = re.sub(r"\b(where|for|and)\b", ",", text)
    toks = tokenize(text, diags)
    p = _Parser(toks, diags)

    if p.peek().text == r"\sum":
        return _parse_series(p, diags, allow_unconstrained)

    lhs = p.expression(5)  # stop below relations
    t = p.next()
    if t.text == r"\ll":
        rhs = p.expression(5)
    elif t.text == "=":
        ot = p.next()
        if not (ot.kind == "name" and ot.text == "O"):
            p.fail(ot, "expected O(...) after '='")
        p.expect("(")
        rhs = p.expression(0)
        p.expect(")")
    else:
        p.fail(t, f"expected \\ll or = O(...), found {t.text!r}")
    constraints, index_vars = _parse_side_conditions(p, diags)
    region = _build_region(lhs, rhs, constraints, (), diags, allow_unconstrained)
    try:
        return Inequality(lhs, rhs, region)
    except ValueError as exc:
        diags.add(0, str(exc))
        raise ParseError(diags) from exc


def _parse_series(p: _Parser, diags: ParseDiagnostics,
                  allow_unconstrained: bool) -> Series:
    p.expect(r"\sum")
    p.expect("_")
    p.expect("{")
    it = p.next()
    if it.kind != "name":
        p.fail(it, "expected the summation index variable")
    index = p.read_var_name(it)
    p.expect("=")
    st = p.next()
    if st.kind != "number" or "." in st.text:
        p.fail(st, "expected an integer lower limit")
    start = int(st.text)
    p.expect("}")
    p.expect("^")
    p.expect("{")
    inf = p.next()
    if inf.text != r"\infty":
        p.fail(inf, "series must run to \\infty")
    p.expect("}")
    summand = p.expression(5)
    t = p.next()
    if t.text == r"\ll":
        target = p.expression(5)
    elif t.text == "=":
        ot = p.next()
        if not (ot.kind == "name" and ot.text == "O"):
            p.fail(ot, "expected O(...) after '='")
        p.expect("(")
        target = p.expression(0)
        p.expect(")")
    else:
        p.fail(t, f"expected \\ll or = O(...) after the summand, found {t.text!r}")
    constraints, _ = _parse_side_conditions(p, diags)
    params = sorted((free_vars_of(summand) | free_vars_of(target)) - {index})
    region = _build_region_series(params, constraints, diags, allow_unconstrained)
    try:
        return Series(summand, index, start, region, target)
    except ValueError as exc:
        diags.add(0, str(exc))
        raise ParseError(diags) from exc


def free_vars_of(e: Expr) -> set[str]:
    from .expr import free_vars
    return set(free_vars(e))


def _parse_side_conditions(p: _Parser, diags: ParseDiagnostics):
    constraints: list[Constraint] = []
    index_vars: tuple[str, ...] = ()
    while p.peek().kind != "end":
        t = p.next()
        if t.text == ",":
            continue
        # a constraint: EXPR rel EXPR
        p.i -= 1
        lhs = p.expression(5)
        rt = p.next()
        if rt.text not in _RELS:
            p.fail(rt, f"expected a relation in side condition, found {rt.text!r}")
        rhs = p.expression(5)
        constraints.append(Constraint(lhs, rt.text, rhs))
    return constraints, index_vars


def _build_region(lhs: Expr, rhs: Expr, constraints: list[Constraint],
                  index_vars: tuple[str, ...], diags: ParseDiagnostics,
                  allow_unconstrained: bool) -> Region:
    from .expr import free_vars
    constrained = set()
    for c in constraints:
        constrained |= free_vars(c.lhs) | free_vars(c.rhs)
    names = sorted(free_vars(lhs) | free_vars(rhs) | constrained)
    missing = [n for n in names if n not in constrained]
    if missing and not allow_unconstrained:
        diags.add(0, f"no domain constraint for variable(s) {', '.join(missing)}; "
                     "pass an explicit flag to allow unconstrained reals")
        raise AmbiguousDomain(diags)
    vs = tuple((n, VarRole.INDEX if n in index_vars else VarRole.REAL) for n in names)
    return Region(vs, tuple(constraints))


def _build_region_series(params: list[str], constraints: list[Constraint],
                         diags: ParseDiagnostics,
                         allow_unconstrained: bool) -> Region:
    constrained = set()
    for c in constraints:
        constrained |= free_vars_of(c.lhs) | free_vars_of(c.rhs)
    missing = [n for n in params if n not in constrained]
    params = sorted(set(params) | constrained)
    if missing and not allow_unconstrained:
        diags.add(0, f"no domain constraint for parameter(s) {', '.join(missing)}; "
                     "pass an explicit flag to allow unconstrained reals")
        raise AmbiguousDomain(diags)
    vs = tuple((n, VarRole.REAL) for n in params)
    return Region(vs, tuple(constraints))


# ---------------------------------------------------------------------------
# Canonical rendering (parse . render == identity on normalized statements)
# ---------------------------------------------------------------------------

def render_expr(e: Expr) -> str:
    return _render(normalize(e), 0)


def _render(e: Expr, prec: int) -> str:
    if isinstance(e, Const):
        v = e.value
        if v < 0:
            inner = _render(Const(-v), 25)
            return f"(-{inner})" if prec >= 20 else f"-{inner}"
        if v.denominator == 1:
            return str(v.numerator)
        return rf"\frac{{{v.numerator}}}{{{v.denominator}}}"
    if isinstance(e, Var):
        return e.name
    if isinstance(e, Sum):
        parts = []
        for i, t in enumerate(e.terms):
            s = _render(t, 9)
            if i and not s.startswith("-"):
                parts.append("+ " + s)
            elif i:
                parts.append("- " + s[1:])
            else:
                parts.append(s)
        out = " ".join(parts)
        return f"({out})" if prec >= 10 else out
    if isinstance(e, Product):
        coeff = None
        sums = []
        others = []
        for f in e.factors:
            if isinstance(f, Const):
                coeff = f
            elif isinstance(f, Sum):
                sums.append(f)
            else:
                others.append(f)
        if coeff is not None and coeff.value == -1 and others and not sums:
            out = " ".join(_render(f, 20) for f in others)
            out = f"-{out}"
            return f"({out})" if prec >= 10 else out
        parts = [_render(f, 20) for f in others + sums]
        if coeff is not None:
            # a leading Const would re-distribute over a lone sum on re-parse
            if sums:
                parts.append(_render(coeff, 20))
            else:
                parts.insert(0, _render(coeff, 20))
        out = " ".join(parts)
        return f"({out})" if prec >= 25 else out
    if isinstance(e, Power):
        base = _render(e.base, 30)
        if isinstance(e.base, (Power, Log)):
            base = f"({base})"  # \log(x)^2 would re-parse as \log((x)^2)
        p = e.exponent
        if p.denominator == 1 and 0 <= p.numerator <= 9:
            return f"{base}^{p.numerator}"
        if p.denominator == 1:
            return f"{base}^{{{p.numerator}}}"
        return rf"{base}^{{\frac{{{p.numerator}}}{{{p.denominator}}}}}"
    if isinstance(e, Log):
        return rf"\log({_render(e.arg, 0)})"
    if isinstance(e, Exp):
        arg = e.arg
        return rf"e^{{{_render(arg, 0)}}}"
    raise TypeError(f"not an Expr: {e!r}")


_REL_RENDER = {"<=": r" \le ", "<": " < ", ">=": r" \ge ", ">": " > ", "=": " = "}


def render_constraint(c: Constraint) -> str:
    return _render(c.lhs, 5) + _REL_RENDER[c.rel] + _render(c.rhs, 5)


def render_canonical(p: ProblemStatement) -> str:
    """Canonical statement text; parse_problem(render_canonical(p)) == p."""
    if isinstance(p, Series):
        head = rf"\sum_{{{p.index}={p.start}}}^{{\infty}} {_render(p.summand, 20)}"
        body = head + r" \ll " + _render(p.target, 5)
        cons = [render_constraint(c) for c in p.params_region.constraints]
    else:
        body = _render(p.lhs, 5) + r" \ll " + _render(p.rhs, 5)
        cons = [render_constraint(c) for c in p.region.constraints]
    if cons:
        body += ", " + ", ".join(cons)
    return body
