"""2x2 matrices of Laurent polynomials in the spectral parameter.

Entries map exponents of ``lam`` to ``RationalExpr`` coefficients that do
not themselves contain ``lam``. Exponents are ``Fraction`` so that a scalar
prefactor such as ``lam**(-1/2)`` can be carried through products; all
exponents inside one matrix must share the same fractional part.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Mapping, Optional, Sequence

from .errors import InsufficientOrders
from .symcore import ZERO, RationalExpr, ReductionSystem, derive_x, reduce

Laurent = dict  # Fraction -> RationalExpr


def _lp_add(a: Laurent, b: Laurent, sign: int = 1) -> Laurent:
    out = dict(a)
    for k, v in b.items():
        s = out.get(k, ZERO) + (v if sign > 0 else -v)
        if s.is_zero():
            out.pop(k, None)
        else:
            out[k] = s
    return out


def _lp_mul(a: Laurent, b: Laurent) -> Laurent:
    out: Laurent = {}
    for i, x in a.items():
        for j, y in b.items():
            k = i + j
            out[k] = out.get(k, ZERO) + x * y
    return {k: v for k, v in out.items() if not v.is_zero()}


class LaurentMat2:
    """Immutable 2x2 Laurent-polynomial matrix."""

    __slots__ = ("entries",)

    def __init__(self, entries: Sequence[Mapping]):
        ents = []
        fracs = set()
        for e in entries:
            clean = {}
            for k, v in e.items():
                v = RationalExpr.coerce(v)
                if "lam" in v.symbols:
                    raise ValueError("Laurent coefficients must not contain lam")
                if not v.is_zero():
                    k = Fraction(k)
                    clean[k] = v
                    fracs.add(k - (k.numerator // k.denominator))
            ents.append(clean)
        if len(ents) != 4:
            raise ValueError("need four entries (row-major)")
        if len(fracs) > 1:
            raise ValueError(f"mixed fractional lam-gradings {sorted(fracs)}")
        self.entries = tuple(ents)

    # -- constructors --------------------------------------------------
    @classmethod
    def from_coeffs(cls, coeffs: Mapping) -> "LaurentMat2":
        """``{power: [[a, b], [c, d]]}`` -> matrix."""
        ents = [{}, {}, {}, {}]
        for p, m in coeffs.items():
            flat = [m[0][0], m[0][1], m[1][0], m[1][1]]
            for i, c in enumerate(flat):
                c = RationalExpr.coerce(c)
                if not c.is_zero():
                    ents[i][Fraction(p)] = ents[i].get(Fraction(p), ZERO) + c
        return cls(ents)

    @classmethod
    def constant(cls, m) -> "LaurentMat2":
        return cls.from_coeffs({0: m})

    @classmethod
    def identity(cls) -> "LaurentMat2":
        return cls.constant([[1, 0], [0, 1]])

    @classmethod
    def zero(cls) -> "LaurentMat2":
        return cls([{}, {}, {}, {}])

    @classmethod
    def scalar(cls, value, power=0) -> "LaurentMat2":
        return cls.from_coeffs({power: [[value, 0], [0, value]]})

    # -- inspection ----------------------------------------------------
    @property
    def powers(self) -> list[Fraction]:
        return sorted(set().union(*(e.keys() for e in self.entries)))

    @property
    def min_power(self) -> Optional[Fraction]:
        p = self.powers
        return p[0] if p else None

    @property
    def max_power(self) -> Optional[Fraction]:
        p = self.powers
        return p[-1] if p else None

    def coeff(self, power) -> list[list[RationalExpr]]:
        p = Fraction(power)
        c = [e.get(p, ZERO) for e in self.entries]
        return [[c[0], c[1]], [c[2], c[3]]]

    def entry(self, i: int, j: int) -> Laurent:
        return dict(self.entries[2 * i + j])

    def is_zero(self) -> bool:
        return not any(self.entries)

    def is_diagonal(self) -> bool:
        return not self.entries[1] and not self.entries[2]

    def symbols(self) -> set[str]:
        out: set[str] = set()
        for e in self.entries:
            for v in e.values():
                out.update(v.symbols)
        return out

    def trace(self) -> Laurent:
        return _lp_add(self.entries[0], self.entries[3])

    def det(self) -> Laurent:
        a, b, c, d = self.entries
        return _lp_add(_lp_mul(a, d), _lp_mul(b, c), -1)

    def __eq__(self, other):
        if not isinstance(other, LaurentMat2):
            return NotImplemented
        return self.entries == other.entries

    def __hash__(self):
        return hash(tuple(frozenset(e.items()) for e in self.entries))

    # -- algebra -------------------------------------------------------
    def __add__(self, other):
        if not isinstance(other, LaurentMat2):
            return NotImplemented
        return LaurentMat2([_lp_add(a, b) for a, b in zip(self.entries, other.entries)])

    def __sub__(self, other):
        if not isinstance(other, LaurentMat2):
            return NotImplemented
        return LaurentMat2([_lp_add(a, b, -1) for a, b in zip(self.entries, other.entries)])

    def __neg__(self):
        return LaurentMat2([{k: -v for k, v in e.items()} for e in self.entries])

    def __matmul__(self, other):
        if not isinstance(other, LaurentMat2):
            return NotImplemented
        a, b, c, d = self.entries
        e, f, g, h = other.entries
        return LaurentMat2([
            _lp_add(_lp_mul(a, e), _lp_mul(b, g)),
            _lp_add(_lp_mul(a, f), _lp_mul(b, h)),
            _lp_add(_lp_mul(c, e), _lp_mul(d, g)),
            _lp_add(_lp_mul(c, f), _lp_mul(d, h)),
        ])

    def __mul__(self, scalar):
        """Entrywise product with a lam-free scalar."""
        s = RationalExpr.coerce(scalar)
        return self.map(lambda v: v * s)

    __rmul__ = __mul__

    def shift(self, power) -> "LaurentMat2":
        """Multiply by ``lam**power``."""
        p = Fraction(power)
        return LaurentMat2([{k + p: v for k, v in e.items()} for e in self.entries])

    def transpose(self) -> "LaurentMat2":
        a, b, c, d = self.entries
        return LaurentMat2([a, c, b, d])

    def commutator(self, other: "LaurentMat2") -> "LaurentMat2":
        return self @ other - other @ self

    def map(self, f) -> "LaurentMat2":
        return LaurentMat2([{k: f(v) for k, v in e.items()} for e in self.entries])

    def d_lambda(self) -> "LaurentMat2":
        return LaurentMat2([
            {k - 1: v * k for k, v in e.items() if k != 0} for e in self.entries
        ])

    def d_x(self, system: ReductionSystem) -> "LaurentMat2":
        return self.map(lambda v: derive_x(v, system))

    def reduce(self, system: ReductionSystem) -> "LaurentMat2":
        return self.map(lambda v: reduce(v, system))

    def subs(self, mapping) -> "LaurentMat2":
        return self.map(lambda v: v.subs(mapping))

    def as_matrix(self, lam: str = "lam") -> list[list[RationalExpr]]:
        """Entries as rational functions of an explicit ``lam`` symbol."""
        L = RationalExpr.symbol(lam)
        out = []
        for e in self.entries:
            acc = ZERO
            for k, v in e.items():
                if k.denominator != 1:
                    raise ValueError("half-integer powers have no rational form")
                acc = acc + v * L ** int(k)
            out.append(acc)
        return [[out[0], out[1]], [out[2], out[3]]]

    # -- serialization -------------------------------------------------
    def to_json_obj(self) -> dict:
        def power_out(k: Fraction):
            return k.numerator if k.denominator == 1 else f"{k.numerator}/{k.denominator}"

        ents = [
            [{"power": power_out(k), "coeff": str(e[k])} for k in sorted(e)]
            for e in self.entries
        ]
        mn, mx = self.min_power, self.max_power
        return {
            "entries": [ents[0:2], ents[2:4]],
            "minPower": None if mn is None else power_out(mn),
            "maxPower": None if mx is None else power_out(mx),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_json_obj(), sort_keys=True)

    @classmethod
    def from_json(cls, data) -> "LaurentMat2":
        if isinstance(data, str):
            data = json.loads(data)
        rows = data["entries"]
        ents = []
        for row in rows:
            for terms in row:
                ents.append({Fraction(t["power"]): RationalExpr.coerce(t["coeff"]) for t in terms})
        return cls(ents)

    def __repr__(self):
        parts = []
        for p in self.powers:
            parts.append(f"lam^{p}: {[[str(c) for c in row] for row in self.coeff(p)]}")
        return "LaurentMat2(" + "; ".join(parts) + ")"


# Pauli matrices and the real nilpotents sigma3 +/- i*sigma2.
E2 = LaurentMat2.identity()
SIGMA1 = LaurentMat2.constant([[0, 1], [1, 0]])
SIGMA3 = LaurentMat2.constant([[1, 0], [0, -1]])
I_SIGMA2 = LaurentMat2.constant([[0, 1], [-1, 0]])
N_PLUS = SIGMA3 + I_SIGMA2
N_MINUS = SIGMA3 - I_SIGMA2


def scalar_laurent_is_zero(p: Laurent) -> bool:
    return all(v.is_zero() for v in p.values())


def inverse_constant(M: LaurentMat2) -> LaurentMat2:
    """Inverse of a lam-free matrix."""
    if M.powers not in ([], [0]):
        raise ValueError("only lam-independent matrices are inverted here")
    (a, b), (c, d) = M.coeff(0)
    det = a * d - b * c
    return LaurentMat2.constant([[d / det, -b / det], [-c / det, a / det]])


# -- residuals -------------------------------------------------------------

def compat_residual(P: LaurentMat2, Q: LaurentMat2, system: ReductionSystem) -> LaurentMat2:
    """Reduced zero-curvature defect ``P_lam - Q_x + [P, Q]``."""
    raw = P.d_lambda() - Q.d_x(system) + P.commutator(Q)
    return raw.reduce(system)


def gauge_cov_residuals(G, P, Q, Pt, Qt, system: ReductionSystem):
    """Defects of ``Psi~ = G Psi`` solving the pair ``(Pt, Qt)``.

    Returns ``(G_x + G P - Pt G, G_lam + G Q - Qt G)``, both reduced.
    """
    rx = (G.d_x(system) + G @ P - Pt @ G).reduce(system)
    rl = (G.d_lambda() + G @ Q - Qt @ G).reduce(system)
    return rx, rl


def dual_gauge_cov_residuals(H, P, Q, Pt, Qt, system: ReductionSystem):
    """Defects of ``Xi~ = Xi H`` solving the dual pair ``Xi_x = -Xi P``.

    Returns ``(H_x - P H + H Pt, H_lam - Q H + H Qt)``, both reduced.
    """
    rx = (H.d_x(system) - P @ H + H @ Pt).reduce(system)
    rl = (H.d_lambda() - Q @ H + H @ Qt).reduce(system)
    return rx, rl


@dataclass(frozen=True)
class ExpansionData:
    """Coefficients of ``Psi = psi0 (E + lam rho + lam^2 rho2 + ...) Lambda``.

    ``lambda_logderiv`` is ``Lambda_lam Lambda^{-1}`` (diagonal); Lambda
    itself is never formed. ``rho2`` is optional and only needs the part
    that enters the lam-equation at order 0 for a double pole in Q.
    """

    psi0: LaurentMat2
    rho: LaurentMat2
    lambda_logderiv: LaurentMat2
    rho2: Optional[LaurentMat2] = None

    def __post_init__(self):
        if not self.lambda_logderiv.is_diagonal():
            raise ValueError("lambda_logderiv must be diagonal")
        for name in ("psi0", "rho"):
            m = getattr(self, name)
            if m.powers not in ([], [0]):
                raise ValueError(f"{name} must be lam-independent")

    def truncated(self, order: int) -> "ExpansionData":
        """Drop the series terms above ``lam**order`` (order 0 drops rho)."""
        if order >= 1:
            return self
        return ExpansionData(self.psi0, LaurentMat2.zero(), self.lambda_logderiv)

    def series(self) -> LaurentMat2:
        S = E2 + self.rho.shift(1)
        if self.rho2 is not None:
            S = S + self.rho2.shift(2)
        return S


@dataclass(frozen=True)
class OrderResidual:
    equation: str  # "x" or "lambda"
    order: int
    residual: LaurentMat2

    def is_zero(self) -> bool:
        return self.residual.is_zero()


def expansion_residuals(
    exp: ExpansionData,
    P: LaurentMat2,
    Q: LaurentMat2,
    orders: Iterable[int],
    system: ReductionSystem,
    equations: Sequence[str] = ("lambda", "x"),
) -> list[OrderResidual]:
    """Order-by-order defects of the truncated expansion in both Lax equations.

    With ``Psi^ = psi0 S`` (S the truncated series) the lam-equation defect
    is ``Psi^_lam + Psi^ L - Q Psi^`` (Lambda stripped on the right, L its
    log-derivative) and the x-equation defect is ``Psi^_x - P Psi^``
    (Lambda does not depend on x).
    """
    orders = sorted(set(int(o) for o in orders))
    L = exp.lambda_logderiv
    most_singular = min(Q.min_power, L.min_power)
    if not orders:
        raise InsufficientOrders("no orders requested")
    if "lambda" in equations and most_singular < orders[0]:
        raise InsufficientOrders(
            f"orders must reach the most singular power lam^{most_singular}"
        )
    first_missing = 3 if exp.rho2 is not None else 2
    lam_valid = min(first_missing - 1, first_missing + most_singular) - 1
    x_valid = 1
    psi = exp.psi0 @ exp.series()
    out = []
    if "lambda" in equations:
        if orders[-1] > lam_valid:
            raise InsufficientOrders(
                f"lam-equation beyond order {lam_valid} needs higher series terms"
            )
        raw = psi.d_lambda() + psi @ L - Q @ psi
        for k in orders:
            piece = LaurentMat2.from_coeffs({k: raw.coeff(k)})
            out.append(OrderResidual("lambda", k, piece.reduce(system)))
    if "x" in equations:
        raw = psi.d_x(system) - P @ psi
        for k in orders:
            if 0 <= k <= x_valid:
                piece = LaurentMat2.from_coeffs({k: raw.coeff(k)})
                out.append(OrderResidual("x", k, piece.reduce(system)))
    return out
