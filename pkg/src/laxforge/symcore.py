"""Exact multivariate rational functions with formal x-differentiation.

``RationalExpr`` is a canonical fraction ``num/den`` of sparse polynomials
over the rationals (sympy's ``PolyElement`` backs the polynomials). The
canonical form is: numerator and denominator coprime, denominator monic in
lex order, zero stored as ``0/1``, and the polynomial ring restricted to
the symbols that actually occur. Equal functions therefore have identical
representations and ``==`` is structural.

``ReductionSystem`` bundles a derivation table (the x-derivative of each
symbol) with on-shell rewrite rules that eliminate highest derivatives.
Exponential-type quantities are never materialized: a symbol ``d`` with
``d_x = u*d`` stands for ``exp(int u dx)``.
"""
from __future__ import annotations

import ast
import random
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Iterable, Mapping, Union

from sympy import QQ
from sympy.polys.rings import PolyRing

from .errors import (
    DivisionByZeroPolynomial,
    EvaluationPole,
    IllFormedSystem,
    UnknownSymbol,
)

# Canonical ordering of the indeterminates used across the package. Any
# other identifier is accepted and sorts after these, alphabetically.
ALPHABET = (
    "x", "t", "lam", "mu", "nu", "alpha", "beta", "gamma",
    "u", "ux", "uxx", "uxxx", "v", "z", "w", "d", "c1", "c2",
    "psi", "psix", "psixx",
    "u1", "u1x", "u1xx", "u2", "u2x", "u2xx",
    "phi1", "phi2", "chi1", "chi2", "a1", "a2", "b1", "b2",
)
_RANK = {name: i for i, name in enumerate(ALPHABET)}

DEFAULT_CONSTANTS = frozenset(
    {"lam", "mu", "nu", "alpha", "beta", "gamma", "a1", "a2", "b1", "b2"}
)

Number = Union[int, Fraction]


def _sort_key(name: str):
    return (_RANK.get(name, len(_RANK)), name)


@lru_cache(maxsize=None)
def _ring(names: tuple[str, ...]) -> PolyRing:
    return PolyRing(names, QQ) if names else PolyRing((), QQ)


@lru_cache(maxsize=4096)
def _embedding(src: tuple[str, ...], dst: tuple[str, ...]) -> tuple[int, ...]:
    pos = {n: i for i, n in enumerate(dst)}
    return tuple(pos[n] for n in src)


def _names(ring) -> tuple[str, ...]:
    return tuple(str(s) for s in ring.symbols)


def _embed(p, src_names, dst_names, dst_ring):
    if src_names == dst_names:
        return p
    idx = _embedding(src_names, dst_names)
    n = len(dst_names)
    out = {}
    for mon, c in p.items():
        m = [0] * n
        for i, e in zip(idx, mon):
            m[i] = e
        out[tuple(m)] = c
    return dst_ring.from_dict(out) if out else dst_ring.zero


def _union(a: tuple[str, ...], b: tuple[str, ...]) -> tuple[str, ...]:
    if a == b:
        return a
    return tuple(sorted(set(a) | set(b), key=_sort_key))


def _to_qq(value) -> "QQ.dtype":
    if isinstance(value, Fraction):
        return QQ(value.numerator, value.denominator)
    if isinstance(value, int):
        return QQ(value)
    return QQ.convert(value)


def _to_fraction(c) -> Fraction:
    return Fraction(int(QQ.numer(c)), int(QQ.denom(c)))


class RationalExpr:
    """Canonical exact rational function. Immutable."""

    __slots__ = ("num", "den", "_names")

    def __init__(self, num, den, names):
        # Internal: callers use the constructors below.
        self.num = num
        self.den = den
        self._names = names

    # -- construction -------------------------------------------------
    @classmethod
    def _make(cls, num, den, names) -> "RationalExpr":
        if not den:
            raise DivisionByZeroPolynomial("denominator is the zero polynomial")
        if not num:
            return ZERO
        if den.is_ground:
            lc = den.LC
            if lc != 1:
                num = num.quo_ground(lc)
            den = den.ring.one
        else:
            num, den = num.cancel(den)
            lc = den.LC
            if lc != 1:
                num = num.quo_ground(lc)
                den = den.quo_ground(lc)
        return cls._shrink(num, den, names)

    @classmethod
    def _shrink(cls, num, den, names):
        used = set()
        for mon in num.keys():
            used.update(i for i, e in enumerate(mon) if e)
        for mon in den.keys():
            used.update(i for i, e in enumerate(mon) if e)
        if len(used) == len(names):
            return cls(num, den, names)
        keep = tuple(sorted(used))
        new_names = tuple(names[i] for i in keep)
        R = _ring(new_names)

        def cut(p):
            return R.from_dict({tuple(m[i] for i in keep): c for m, c in p.items()})

        return cls(cut(num), cut(den), new_names)

    @classmethod
    def const(cls, value: Number) -> "RationalExpr":
        R = _ring(())
        c = _to_qq(value)
        if not c:
            return ZERO
        return cls(R.ground_new(c), R.one, ())

    @classmethod
    def symbol(cls, name: str) -> "RationalExpr":
        R = _ring((name,))
        return cls(R.gens[0], R.one, (name,))

    @classmethod
    def coerce(cls, value) -> "RationalExpr":
        if isinstance(value, RationalExpr):
            return value
        if isinstance(value, (int, Fraction)):
            return cls.const(value)
        if isinstance(value, str):
            return parse(value)
        try:
            return cls.const(_to_fraction(QQ.convert(value)))
        except Exception:
            raise TypeError(f"cannot coerce {type(value).__name__} to RationalExpr")

    # -- structure ----------------------------------------------------
    @property
    def symbols(self) -> tuple[str, ...]:
        return self._names

    def is_zero(self) -> bool:
        return not self.num

    def is_constant(self) -> bool:
        return not self._names

    def as_fraction(self) -> Fraction:
        if self._names:
            raise ValueError(f"{self} is not a constant")
        if not self.num:
            return Fraction(0)
        return _to_fraction(self.num.LC)

    def numerator(self) -> "RationalExpr":
        return RationalExpr(self.num, self.num.ring.one, self._names)._reshrink()

    def denominator(self) -> "RationalExpr":
        return RationalExpr(self.den, self.den.ring.one, self._names)._reshrink()

    def _reshrink(self):
        return RationalExpr._shrink(self.num, self.den, self._names)

    def degree(self) -> int:
        """Total degree of numerator plus denominator."""
        def tdeg(p):
            return max((sum(m) for m in p.keys()), default=0)
        return tdeg(self.num) + tdeg(self.den)

    def _pair(self, other):
        names = _union(self._names, other._names)
        R = _ring(names)
        return (
            _embed(self.num, self._names, names, R),
            _embed(self.den, self._names, names, R),
            _embed(other.num, other._names, names, R),
            _embed(other.den, other._names, names, R),
            names,
        )

    # -- arithmetic ---------------------------------------------------
    def __add__(self, other):
        try:
            other = RationalExpr.coerce(other)
        except TypeError:
            return NotImplemented
        if not other.num:
            return self
        if not self.num:
            return other
        an, ad, bn, bd, names = self._pair(other)
        if ad == bd:
            return RationalExpr._make(an + bn, ad, names)
        return RationalExpr._make(an * bd + bn * ad, ad * bd, names)

    __radd__ = __add__

    def __neg__(self):
        return RationalExpr(-self.num, self.den, self._names) if self.num else self

    def __sub__(self, other):
        try:
            other = RationalExpr.coerce(other)
        except TypeError:
            return NotImplemented
        return self + (-other)

    def __rsub__(self, other):
        return RationalExpr.coerce(other) - self

    def __mul__(self, other):
        try:
            other = RationalExpr.coerce(other)
        except TypeError:
            return NotImplemented
        if not self.num or not other.num:
            return ZERO
        an, ad, bn, bd, names = self._pair(other)
        return RationalExpr._make(an * bn, ad * bd, names)

    __rmul__ = __mul__

    def __truediv__(self, other):
        try:
            other = RationalExpr.coerce(other)
        except TypeError:
            return NotImplemented
        if not other.num:
            raise DivisionByZeroPolynomial(f"division of {self} by zero")
        an, ad, bn, bd, names = self._pair(other)
        return RationalExpr._make(an * bd, ad * bn, names)

    def __rtruediv__(self, other):
        return RationalExpr.coerce(other) / self

    def __pow__(self, k: int):
        if not isinstance(k, int):
            return NotImplemented
        if k == 0:
            return ONE
        if k < 0:
            if not self.num:
                raise DivisionByZeroPolynomial("zero to a negative power")
            return RationalExpr._make(self.den ** (-k), self.num ** (-k), self._names)
        return RationalExpr(self.num ** k, self.den ** k, self._names)

    def __eq__(self, other):
        try:
            other = RationalExpr.coerce(other)
        except (TypeError, ValueError, SyntaxError):
            return NotImplemented
        return (
            self._names == other._names
            and self.num == other.num
            and self.den == other.den
        )

    def __hash__(self):
        return hash((self._names, frozenset(self.num.items()), frozenset(self.den.items())))

    def __bool__(self):
        return bool(self.num)

    # -- calculus and substitution -------------------------------------
    def diff(self, name: str) -> "RationalExpr":
        """Partial derivative with respect to one symbol."""
        if name not in self._names:
            return ZERO
        gen = _ring(self._names).gens[self._names.index(name)]
        n, d = self.num, self.den
        dn, dd = n.diff(gen), d.diff(gen)
        if not dd:
            return RationalExpr._make(dn, d, self._names)
        return RationalExpr._make(dn * d - n * dd, d * d, self._names)

    def subs(self, mapping: Mapping[str, object]) -> "RationalExpr":
        """Simultaneous substitution of symbols by expressions or numbers."""
        mapping = {k: RationalExpr.coerce(v) for k, v in mapping.items() if k in self._names}
        if not mapping:
            return self
        keep = tuple(n for n in self._names if n not in mapping)
        names = keep
        for val in mapping.values():
            names = _union(names, val._names)
        R = _ring(names)
        vals = []
        for n in self._names:
            if n in mapping:
                v = mapping[n]
                vals.append((
                    _embed(v.num, v._names, names, R),
                    _embed(v.den, v._names, names, R),
                ))
            else:
                g = R.gens[names.index(n)]
                vals.append((g, R.one))
        num_n, num_d = _eval_poly(self.num, vals, R)
        den_n, den_d = _eval_poly(self.den, vals, R)
        return RationalExpr._make(num_n * den_d, num_d * den_n, names)

    def evaluate(self, assignment: Mapping[str, Number]) -> Fraction:
        missing = [n for n in self._names if n not in assignment]
        if missing:
            raise KeyError(f"no value for {missing}")
        vals = [_to_qq(assignment[n]) for n in self._names]
        if self._names:
            dv = self.den(*vals) if len(vals) > 1 else self.den(vals[0])
            nv = self.num(*vals) if len(vals) > 1 else self.num(vals[0])
        else:
            nv = self.num.LC if self.num else QQ(0)
            dv = QQ(1)
        if not dv:
            raise EvaluationPole(f"denominator of {self} vanishes at {dict(assignment)}")
        return _to_fraction(nv / dv)

    def to_sympy(self):
        """Plain sympy expression (for display and lambdify)."""
        return self.num.as_expr() / self.den.as_expr()

    def to_callable(self, names: Iterable[str]):
        """Vectorized float/complex evaluator ``f(*arrays)`` over ``names``."""
        import sympy

        names = tuple(names)
        extra = set(self._names) - set(names)
        if extra:
            raise KeyError(f"callable misses symbols {sorted(extra)}")
        syms = sympy.symbols(names) if names else ()
        if len(names) == 1:
            syms = (syms,) if not isinstance(syms, tuple) else syms
        return sympy.lambdify(syms, self.to_sympy(), "numpy")

    # -- text ---------------------------------------------------------
    def __str__(self):
        if self.den.is_ground:
            return _poly_text(self.num, self._names)
        return f"({_poly_text(self.num, self._names)})/({_poly_text(self.den, self._names)})"

    def __repr__(self):
        return f"RationalExpr('{self}')"


def _eval_poly(p, vals, R):
    """Evaluate polynomial ``p`` at rational arguments given as (num, den) pairs.

    Returns (numerator, denominator) over a common denominator, with one
    gcd at the very end (done by the caller).
    """
    if not p:
        return R.zero, R.one
    ngens = len(vals)
    maxdeg = [0] * ngens
    for mon in p.keys():
        for i, e in enumerate(mon):
            if e > maxdeg[i]:
                maxdeg[i] = e
    npow = [[R.one] for _ in range(ngens)]
    dpow = [[R.one] for _ in range(ngens)]
    for i, (n, d) in enumerate(vals):
        for _ in range(maxdeg[i]):
            npow[i].append(npow[i][-1] * n)
            if d != R.one:
                dpow[i].append(dpow[i][-1] * d)
    total = R.zero
    for mon, c in p.items():
        term = R.ground_new(c)
        for i, e in enumerate(mon):
            if maxdeg[i] == 0:
                continue
            if e:
                term = term * npow[i][e]
            if vals[i][1] != R.one and maxdeg[i] - e:
                term = term * dpow[i][maxdeg[i] - e]
        total += term
    den = R.one
    for i, (n, d) in enumerate(vals):
        if maxdeg[i] and d != R.one:
            den = den * dpow[i][maxdeg[i]]
    return total, den


def _coeff_text(c) -> str:
    f = _to_fraction(c)
    return str(f.numerator) if f.denominator == 1 else f"{f.numerator}/{f.denominator}"


def _poly_text(p, names) -> str:
    if not p:
        return "0"
    parts = []
    for mon, c in p.terms():
        neg = c < 0
        mag = -c if neg else c
        factors = []
        for name, e in zip(names, mon):
            if e == 1:
                factors.append(name)
            elif e:
                factors.append(f"{name}^{e}")
        if not factors:
            body = _coeff_text(mag)
        elif mag == 1:
            body = "*".join(factors)
        else:
            body = "*".join([_coeff_text(mag)] + factors)
        if not parts:
            parts.append(f"-{body}" if neg else body)
        else:
            parts.append(f" - {body}" if neg else f" + {body}")
    return "".join(parts)


def parse(text: str) -> RationalExpr:
    """Parse infix text with ``+ - * / ^`` (or ``**``), integers and names."""
    tree = ast.parse(text.replace("^", "**").strip(), mode="eval")
    return _from_ast(tree.body)


def _from_ast(node) -> RationalExpr:
    if isinstance(node, ast.BinOp):
        if isinstance(node.op, ast.Pow):
            exp = node.right
            sign = 1
            if isinstance(exp, ast.UnaryOp) and isinstance(exp.op, ast.USub):
                sign, exp = -1, exp.operand
            if not (isinstance(exp, ast.Constant) and isinstance(exp.value, int)):
                raise ValueError("exponents must be integer literals")
            return _from_ast(node.left) ** (sign * exp.value)
        a, b = _from_ast(node.left), _from_ast(node.right)
        if isinstance(node.op, ast.Add):
            return a + b
        if isinstance(node.op, ast.Sub):
            return a - b
        if isinstance(node.op, ast.Mult):
            return a * b
        if isinstance(node.op, ast.Div):
            return a / b
    elif isinstance(node, ast.UnaryOp):
        if isinstance(node.op, ast.USub):
            return -_from_ast(node.operand)
        if isinstance(node.op, ast.UAdd):
            return _from_ast(node.operand)
    elif isinstance(node, ast.Constant) and isinstance(node.value, int) and not isinstance(node.value, bool):
        return RationalExpr.const(node.value)
    elif isinstance(node, ast.Name):
        return RationalExpr.symbol(node.id)
    raise ValueError(f"unsupported syntax: {ast.dump(node)}")


ZERO = RationalExpr.__new__(RationalExpr)
ZERO.num, ZERO.den, ZERO._names = _ring(()).zero, _ring(()).one, ()
ONE = RationalExpr.const(1)


def sym(names: str):
    """``sym("x u ux")`` -> tuple of symbol expressions (single name -> expr)."""
    out = tuple(RationalExpr.symbol(n) for n in names.replace(",", " ").split())
    return out[0] if len(out) == 1 else out


def normalize(e) -> RationalExpr:
    """Canonical form of an expression, text, or (numerator, denominator) pair."""
    if isinstance(e, tuple):
        n, d = (RationalExpr.coerce(p) for p in e)
        return n / d
    return RationalExpr.coerce(e)


# -- differential algebra ------------------------------------------------

@dataclass(frozen=True, eq=False)
class ReductionSystem:
    """Derivation table plus on-shell rewrite rules.

    ``derivatives[s]`` is the x-derivative of symbol ``s``; symbols in
    ``constants`` differentiate to zero. ``rules[s]`` replaces ``s``
    wherever it occurs; rules must not depend on each other cyclically.
    """

    derivatives: Mapping[str, RationalExpr]
    rules: Mapping[str, RationalExpr] = field(default_factory=dict)
    constants: frozenset = DEFAULT_CONSTANTS

    def __post_init__(self):
        object.__setattr__(
            self, "derivatives",
            {k: RationalExpr.coerce(v) for k, v in self.derivatives.items()},
        )
        object.__setattr__(
            self, "rules", {k: RationalExpr.coerce(v) for k, v in self.rules.items()}
        )
        object.__setattr__(self, "constants", frozenset(self.constants))
        self._check_acyclic()

    def _check_acyclic(self):
        deps = {k: set(v.symbols) & set(self.rules) for k, v in self.rules.items()}
        state: dict[str, int] = {}

        def visit(k, path):
            if state.get(k) == 2:
                return
            if state.get(k) == 1:
                raise IllFormedSystem(f"cyclic rewrite rules: {' -> '.join(path + [k])}")
            state[k] = 1
            for j in deps[k]:
                visit(j, path + [k])
            state[k] = 2

        for k in deps:
            visit(k, [])

    def extend(self, derivatives=None, rules=None, constants=None) -> "ReductionSystem":
        return ReductionSystem(
            {**self.derivatives, **(derivatives or {})},
            {**self.rules, **(rules or {})},
            self.constants | frozenset(constants or ()),
        )

    def without_rules(self) -> "ReductionSystem":
        return ReductionSystem(self.derivatives, {}, self.constants)

    def dx(self, e) -> RationalExpr:
        """Reduced x-derivative."""
        return reduce(derive_x(e, self), self)


def derive_x(e, system: ReductionSystem) -> RationalExpr:
    """Formal x-derivative via the chain rule over the derivation table."""
    e = RationalExpr.coerce(e)
    total = ZERO
    for s in e.symbols:
        if s in system.constants:
            continue
        try:
            ds = system.derivatives[s]
        except KeyError:
            raise UnknownSymbol(s) from None
        if ds.is_zero():
            continue
        total = total + e.diff(s) * ds
    return total


def reduce(e, system: ReductionSystem) -> RationalExpr:
    """Apply the rewrite rules to a fixed point."""
    e = RationalExpr.coerce(e)
    rules = system.rules
    for _ in range(len(rules) + 1):
        hits = {s: rules[s] for s in e.symbols if s in rules}
        if not hits:
            return e
        e = e.subs(hits)
    raise IllFormedSystem("rewriting did not reach a fixed point")


def probe(e, assignment: Mapping[str, Number]) -> Fraction:
    """Exact evaluation at a rational point."""
    return RationalExpr.coerce(e).evaluate(assignment)


def random_point(names: Iterable[str], rng: random.Random, bound: int = 10**6) -> dict:
    """Random rational assignment; nonzero numerator and denominator."""
    out = {}
    for n in names:
        p = rng.randint(-bound, bound) or 1
        q = rng.randint(1, bound)
        out[n] = Fraction(p, q)
    return out


def probably_zero(e, rng: random.Random | None = None, trials: int = 20) -> bool:
    """Randomized zero test by exact evaluation at random rational points.

    A nonzero expression of total degree D vanishes on at most a D/|S|
    fraction of a sample grid S, so with |S| ~ 2e6 a false "zero" needs
    every trial to hit that sliver.
    """
    e = RationalExpr.coerce(e)
    rng = rng or random.Random(0)
    for _ in range(trials):
        point = random_point(e.symbols, rng)
        try:
            if probe(e, point) != 0:
                return False
        except EvaluationPole:
            continue
    return True
