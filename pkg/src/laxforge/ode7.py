"""The second-order equation

    x^2 u u_xx = (x u_x)^2 - x u u_x + alpha^2 u^4 - 2 gamma u^3
                 - 2 (2 beta + 1) x u - 4 x^2

its first-order Lax system in (u, v, z, w), the four parameter-shifting
maps T1..T4, the elementary-DT maps of the Lax coefficients, and the
ladder of the linearized Riccati reduction.

Solutions with half-integer powers of x (the sqrt(x) family) are handled
by the substitution x = t^2: the solution is stored as a rational function
of ``t`` and differentiated with ``t_x = 1/(2t)``.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import Optional

from .errors import DegenerateDenominator, DegenerateState, PoleOnGrid, ZeroAlpha
from .laxalg import SIGMA3, ExpansionData, LaurentMat2, inverse_constant
from .symcore import RationalExpr, ReductionSystem, derive_x, reduce, sym

X, T, U, UX, UXX = sym("x t u ux uxx")
V, Z, W, C1, C2 = sym("v z w c1 c2")
ALPHA, BETA, GAMMA = sym("alpha beta gamma")
PSI, PSIX = sym("psi psix")
HALF = Fraction(1, 2)

SYMBOLIC_PARAMS = (ALPHA, BETA, GAMMA)


def _params(params):
    return tuple(RationalExpr.coerce(p) for p in params)


def solved_uxx(u=U, u_x=UX, params=SYMBOLIC_PARAMS, x=X) -> RationalExpr:
    """u_xx solved from the equation (needs u != 0)."""
    a, b, g = _params(params)
    return ((x * u_x) ** 2 - x * u * u_x + a**2 * u**4 - 2 * g * u**3
            - 2 * (2 * b + 1) * x * u - 4 * x**2) / (x**2 * u)


def ode7_residual(u, u_x, u_xx, params, x=X) -> RationalExpr:
    a, b, g = _params(params)
    u, u_x, u_xx, x = (RationalExpr.coerce(e) for e in (u, u_x, u_xx, x))
    return (x**2 * u * u_xx - (x * u_x) ** 2 + x * u * u_x - a**2 * u**4
            + 2 * g * u**3 + 2 * (2 * b + 1) * x * u + 4 * x**2)


def ode7_system(params=SYMBOLIC_PARAMS) -> ReductionSystem:
    """On-shell jets of a symbolic solution u."""
    return ReductionSystem({"x": 1, "u": UX, "ux": UXX}, {"uxx": solved_uxx(params=params)})


X_SYSTEM = ReductionSystem({"x": 1})
T_SYSTEM = ReductionSystem({"t": 1 / (2 * T)})


@dataclass(frozen=True)
class ODE7Solution:
    """A solution with its parameters (alpha, beta, gamma).

    ``u`` is an expression whose x-derivative is computed in ``jets``;
    ``x`` is the expression standing for the independent variable (``x``
    itself, or ``t^2`` for the sqrt substitution). A ``Trajectory`` is
    accepted as ``u`` for numeric work.
    """

    u: object
    params: tuple
    provenance: tuple = ()
    jets: ReductionSystem = field(default=X_SYSTEM, compare=False)
    x: RationalExpr = field(default=X)

    def __post_init__(self):
        object.__setattr__(self, "params", _params(self.params))
        if isinstance(self.u, (int, Fraction, str)):
            object.__setattr__(self, "u", RationalExpr.coerce(self.u))

    @property
    def is_exact(self) -> bool:
        return isinstance(self.u, RationalExpr)

    @property
    def variable(self) -> str:
        return "t" if self.x == T**2 else "x"

    def derivatives(self):
        ux = reduce(derive_x(self.u, self.jets), self.jets)
        uxx = reduce(derive_x(ux, self.jets), self.jets)
        return ux, uxx

    def residual(self) -> RationalExpr:
        ux, uxx = self.derivatives()
        return reduce(ode7_residual(self.u, ux, uxx, self.params, self.x), self.jets)

    def to_record(self) -> dict:
        a, b, g = (str(p) for p in self.params)
        return {
            "system": "ode7",
            "params": {"alpha": a, "beta": b, "gamma": g},
            "u": str(self.u),
            "variable": self.variable,
            "provenance": list(self.provenance),
        }

    @classmethod
    def from_record(cls, rec: dict) -> "ODE7Solution":
        p = rec["params"]
        params = (p["alpha"], p["beta"], p["gamma"])
        u = RationalExpr.coerce(rec["u"])
        if rec.get("variable", "x") == "t":
            return sqrt_solution(u, params, tuple(rec.get("provenance", ())))
        return cls(u, params, tuple(rec.get("provenance", ())))


def sqrt_solution(u_of_t, params, provenance=()) -> ODE7Solution:
    """Solution given as a rational function of t = sqrt(x)."""
    return ODE7Solution(RationalExpr.coerce(u_of_t), params, tuple(provenance), T_SYSTEM, T**2)


def symbolic_solution(params=SYMBOLIC_PARAMS) -> ODE7Solution:
    """Generic solution: u, u_x free, u_xx eliminated on shell."""
    return ODE7Solution(U, params, ("symbolic",), ode7_system(params), X)


def sqrt_family(beta=0) -> ODE7Solution:
    """u = sqrt(x) solves the equation for (alpha, beta, gamma) = (2, beta, -(2 beta + 1))."""
    b = RationalExpr.coerce(beta)
    return sqrt_solution(T, (2, b, -(2 * b + 1)), ("sqrt-x",))


# -- T1..T4 --------------------------------------------------------------------

def t_formula(i: int, u=U, u_x=UX, params=SYMBOLIC_PARAMS, x=X):
    """(numerator, denominator, new params) of T_i."""
    a, b, g = _params(params)
    if i == 1:
        inner = x * u_x + a * u**2 - 2 * x
        num = -2 * x * (inner - 2 * (b + 1) * u)
        den = u * (a * inner - 2 * g * u)
        new = (a, b + HALF, g - a / 2)
    elif i == 2:
        inner = x * u_x - a * u**2 - 2 * x
        num = 2 * x * (inner - 2 * (b + 1) * u)
        den = u * (a * inner + 2 * g * u)
        new = (a, b + HALF, g + a / 2)
    elif i == 3:
        inner = x * u_x + a * u**2 + 2 * x
        num = 2 * x * (inner + 2 * b * u)
        den = u * (a * inner - 2 * g * u)
        new = (a, b - HALF, g - a / 2)
    elif i == 4:
        inner = x * u_x - a * u**2 + 2 * x
        num = -2 * x * (inner + 2 * b * u)
        den = u * (a * inner + 2 * g * u)
        new = (a, b - HALF, g + a / 2)
    else:
        raise ValueError(f"transformation index must be 1..4, not {i}")
    return num, den, new


def transform(s: ODE7Solution, i: int, verify: bool = False) -> ODE7Solution:
    """Apply T_i; alpha is kept, beta shifts by +-1/2, gamma by -+alpha/2."""
    if not s.is_exact:
        return _transform_numeric(s, i)
    ux, _ = s.derivatives()
    num, den, new = t_formula(i, s.u, ux, s.params, s.x)
    den = reduce(den, s.jets)
    if den.is_zero():
        raise DegenerateDenominator(f"T{i} denominator vanishes for u = {s.u}")
    out = replace(s, u=reduce(num / den, s.jets), params=new,
                  provenance=s.provenance + (f"T{i}",))
    if verify and not out.residual().is_zero():
        raise AssertionError(f"T{i} produced a non-solution")
    return out


def _transform_numeric(s: ODE7Solution, i: int):
    from .numverify import map_trajectory

    traj = s.u
    system = ode7_system(s.params)
    num, den, new = t_formula(i, params=s.params)
    try:
        mapped = map_trajectory(traj, num / den, system, den=den)
    except PoleOnGrid as exc:
        raise PoleOnGrid(f"T{i}: {exc}", location=exc.location) from None
    return ODE7Solution(mapped, new, s.provenance + (f"T{i}",))


def alpha_negated(i: int):
    """T_i with alpha replaced by -alpha, as an (expression, params) pair."""
    num, den, new = t_formula(i)
    flip = {"alpha": -ALPHA}
    return (num / den).subs(flip), tuple(p.subs(flip) for p in new)


# -- Lax system -------------------------------------------------------------------

def four_system_derivatives(params=SYMBOLIC_PARAMS, x=X) -> dict:
    a, b, _ = _params(params)
    return {
        "u": -2 - 2 * b * U / x + (2 * Z - a) * U**2 / x,
        "v": 2 + 2 * b * V / x - (2 * Z - a) * V**2 / x,
        "z": (V - U) * Z * (Z - a) / x,
        "w": -W * (U * Z + V * (Z - a)) / x,
    }


def first_integral(u=U, v=V, z=Z, alpha=ALPHA, beta=BETA) -> RationalExpr:
    """gamma as a conserved quantity of the four-equation system."""
    return beta * (2 * z - alpha) + z * (alpha - z) * (u + v)


@dataclass(frozen=True)
class ODE7LaxState:
    """Lax data (u, v, z, w) with w carried through its log-derivative.

    ``base`` differentiates u, v, z (and x or t); ``w`` and the expansion
    symbols ``c1``, ``c2`` get their table entries from ``system()``.
    """

    u: RationalExpr
    v: RationalExpr
    z: RationalExpr
    w_logderiv: RationalExpr
    params: tuple
    base: ReductionSystem
    x: RationalExpr = X
    second_equation_residual: Optional[RationalExpr] = None
    gamma_residual: Optional[RationalExpr] = None

    @property
    def alpha(self):
        return self.params[0]

    @property
    def beta(self):
        return self.params[1]

    @property
    def gamma(self):
        return self.params[2]

    @property
    def v1(self):
        return self.u * self.z * W

    @property
    def v2(self):
        return self.v * (self.alpha - self.z) / W

    @property
    def w1(self):
        return self.z * W

    @property
    def w2(self):
        return (self.alpha - self.z) / W

    @property
    def q(self):
        return self.z - self.alpha / 2

    def system(self, eliminate_gamma: bool = False) -> ReductionSystem:
        a = self.alpha
        derivs = {
            "w": W * self.w_logderiv,
            "c1": C1 * (a - self.z) * self.u / self.x,
            "c2": -C2 * self.z * self.u / self.x,
        }
        rules = {}
        if eliminate_gamma and "gamma" in self.gamma.symbols:
            rules["gamma"] = first_integral(self.u, self.v, self.z, a, self.beta)
        return self.base.extend(derivatives=derivs, rules=rules)


def symbolic_state(params=SYMBOLIC_PARAMS) -> ODE7LaxState:
    """Generic state: u, v, z free symbols governed by the four-equation system."""
    derivs = four_system_derivatives(params)
    base = ReductionSystem({"x": 1, "u": derivs["u"], "v": derivs["v"], "z": derivs["z"]})
    return ODE7LaxState(U, V, Z, derivs["w"] / W, _params(params), base)


def four_system_residuals(state: ODE7LaxState) -> list[RationalExpr]:
    """Defects of the four first-order equations for the state."""
    S = state.system()
    a, b, _ = state.params
    x, u, v, z = state.x, state.u, state.v, state.z
    return [
        S.dx(u) - (-2 - 2 * b * u / x + (2 * z - a) * u**2 / x),
        S.dx(v) - (2 + 2 * b * v / x - (2 * z - a) * v**2 / x),
        S.dx(z) - (v - u) * z * (z - a) / x,
        reduce(state.w_logderiv + (u * z + v * (z - a)) / x, S),
    ]


def ode7_lax(state: ODE7LaxState):
    x, b = state.x, state.beta
    P = -SIGMA3.shift(1) + LaurentMat2.constant([[0, state.v1 / x], [state.v2 / x, 0]])
    Q = (-SIGMA3 * x
         + LaurentMat2.from_coeffs({-1: [[b, state.v1], [state.v2, -b]]})
         + LaurentMat2.from_coeffs({-2: [[state.q, state.w1], [state.w2, -state.q]]}))
    return P, Q


def lax_from_coefficients(beta, v1, v2, w1, w2, q, x=X):
    """Lax pair from the coefficient tuple (beta, v1, v2, w1, w2, q)."""
    P = -SIGMA3.shift(1) + LaurentMat2.constant([[0, v1 / x], [v2 / x, 0]])
    Q = (-SIGMA3 * x
         + LaurentMat2.from_coeffs({-1: [[beta, v1], [v2, -beta]]})
         + LaurentMat2.from_coeffs({-2: [[q, w1], [w2, -q]]}))
    return P, Q


def lift_solution(s: ODE7Solution) -> ODE7LaxState:
    """Rebuild (z, v, w) from a solution u by inverting the first-order system.

    z comes from the u-equation, v from the z-equation, w_x/w from the
    w-equation. The v-equation and the first integral are then left as
    checks on the returned state (both reduce to zero for a solution with
    consistent gamma).
    """
    if not s.is_exact:
        raise TypeError("lift needs an exact or symbolic solution")
    a, b, g = s.params
    u, x, J = s.u, s.x, s.jets
    if u.is_zero():
        raise DegenerateState("u = 0 cannot be lifted")
    ux = J.dx(u)
    z = reduce((x * ux + 2 * x + 2 * b * u + a * u**2) / (2 * u**2), J)
    zz = reduce(z * (z - a), J)
    if zz.is_zero():
        raise DegenerateState(f"z = {z} is a fixed point (Riccati locus)")
    v = reduce(u + x * J.dx(z) / zz, J)
    wl = reduce(-(u * z + v * (z - a)) / x, J)
    second = reduce(J.dx(v) - (2 + 2 * b * v / x - (2 * z - a) * v**2 / x), J)
    gres = reduce(first_integral(u, v, z, a, b) - g, J)
    return ODE7LaxState(u, v, z, wl, (a, b, g), J, x, second, gres)


# -- coefficient-level elementary DTs -------------------------------------------

@dataclass(frozen=True)
class Coefficients:
    beta: RationalExpr
    v1: RationalExpr
    v2: RationalExpr
    w1: RationalExpr
    w2: RationalExpr
    q: RationalExpr

    def lax(self, x=X):
        return lax_from_coefficients(self.beta, self.v1, self.v2, self.w1, self.w2, self.q, x)

    def u(self) -> RationalExpr:
        """u = v1 / w1 (since v1 = u z w and w1 = z w)."""
        return self.v1 / self.w1

    def z(self, alpha) -> RationalExpr:
        return self.q + RationalExpr.coerce(alpha) / 2


def epsilons(state: ODE7LaxState, sign: str):
    if sign not in ("plus", "minus"):
        raise ValueError("sign must be plus or minus")
    if state.w1.is_zero():
        raise DegenerateDenominator("w1 = 0")
    s = 1 if sign == "plus" else -1
    eps1 = -(2 * state.q + s * state.alpha) / (2 * state.w1)
    if eps1.is_zero():
        raise DegenerateDenominator(f"eps1{sign} vanishes, eps2 undefined")
    return eps1, 1 / eps1


def edt_coeff_transform(state: ODE7LaxState, which: str, sign: str):
    """Coefficient map of the first (``edt1``) or second (``edt2``) elementary DT.

    Returns ``(Coefficients, G)``: the transformed tuple and the gauge
    acting on Psi, including the ``lam**(-1/2)`` prefactor.
    """
    x, b = state.x, state.beta
    v1, v2, w1, w2, q = state.v1, state.v2, state.w1, state.w2, state.q
    e1, e2 = epsilons(state, sign)
    if which == "edt1":
        A1 = w1 + b * v1 / x + v1**2 * e1 / (2 * x)
        new = Coefficients(
            b + HALF,
            A1 + v1 / (2 * x),
            2 * x * e1,
            v1 / (2 * x) * (2 * q - v1 * v2 / (2 * x) + w1 * e1 + A1 * e1),
            v2 - 2 * b * e1 - v1 * e1**2,
            q - v1 * v2 / (2 * x) + A1 * e1,
        )
        u1 = v1 / x
        G = (LaurentMat2.from_coeffs({1: [[1, 0], [0, 0]],
                                      0: [[u1 * e1 / 2, -u1 / 2], [-e1, 1]]})).shift(-HALF)
    elif which == "edt2":
        A2 = w2 + b * v2 / x - v2**2 * e2 / (2 * x)
        new = Coefficients(
            b - HALF,
            -2 * x * e2,
            A2 - v2 / (2 * x),
            v1 + 2 * b * e2 - v2 * e2**2,
            -v2 / (2 * x) * (-2 * q + v1 * v2 / (2 * x) + w2 * e2 + A2 * e2),
            q - v1 * v2 / (2 * x) - A2 * e2,
        )
        u2 = v2 / x
        G = (LaurentMat2.from_coeffs({1: [[0, 0], [0, 1]],
                                      0: [[1, -e2], [u2 / 2, -u2 * e2 / 2]]})).shift(-HALF)
    else:
        raise ValueError("which must be edt1 or edt2")
    S = state.system()
    new = Coefficients(*(reduce(c, S) for c in (new.beta, new.v1, new.v2, new.w1, new.w2, new.q)))
    return new, G


def edt_dual_gauge(state: ODE7LaxState, which: str, sign: str) -> LaurentMat2:
    """Gauge ``H`` with ``Xi~ = Xi H`` (right action).

    The prefactor is lam^{-1/2}, not 1/sigma = lam^{1/2}: only then is
    ``Xi~ Psi~ = Xi Psi`` independent of lam, which the dual lam-equation
    with traceless Q~ requires.
    """
    e1, e2 = epsilons(state, sign)
    if which == "edt1":
        u1 = state.v1 / state.x
        H = LaurentMat2.from_coeffs({1: [[0, 0], [0, 1]], 0: [[1, u1 / 2], [e1, u1 * e1 / 2]]})
    elif which == "edt2":
        u2 = state.v2 / state.x
        H = LaurentMat2.from_coeffs({1: [[1, 0], [0, 0]], 0: [[-u2 * e2 / 2, e2], [-u2 / 2, 1]]})
    else:
        raise ValueError("which must be edt1 or edt2")
    return H.shift(-HALF)


# Correspondence between the coefficient-level maps and T1..T4, as
# established by tests/test_ode7.py::test_branch_correspondence.
BRANCH_TO_T = {
    ("edt1", "plus"): 1,
    ("edt1", "minus"): 2,
    ("edt2", "plus"): 3,
    ("edt2", "minus"): 4,
}


# -- linearized Riccati ladder ---------------------------------------------------

def riccati_system(alpha=ALPHA, beta=BETA) -> ReductionSystem:
    """psi_xx = (2 alpha / x + beta (beta + 1) / x^2) psi with x = t^2."""
    a, b = RationalExpr.coerce(alpha), RationalExpr.coerce(beta)
    return ReductionSystem(
        {"t": 1 / (2 * T), "psi": PSIX, "psix": sym("psixx")},
        {"psixx": (2 * a / T**2 + b * (b + 1) / T**4) * PSI},
    )


@dataclass(frozen=True)
class RiccatiState:
    """``psi`` as an expression in (t, psi, psix) of the source equation.

    ``beta`` is the current parameter; ``system`` stays the source
    equation so repeated ladder steps compose correctly.
    """

    psi: RationalExpr
    alpha: RationalExpr
    beta: RationalExpr
    system: ReductionSystem

    @classmethod
    def generic(cls, alpha=ALPHA, beta=BETA) -> "RiccatiState":
        a, b = RationalExpr.coerce(alpha), RationalExpr.coerce(beta)
        return cls(PSI, a, b, riccati_system(a, b))

    def residual(self) -> RationalExpr:
        """Defect of psi in the equation with the current beta."""
        S = self.system
        pxx = S.dx(S.dx(self.psi))
        b = self.beta
        return reduce(pxx - (2 * self.alpha / T**2 + b * (b + 1) / T**4) * self.psi, S)


def riccati_ladder(r: RiccatiState, direction: str) -> RiccatiState:
    """up: sqrt(x) (psi_x - (beta+1)/x psi), beta + 1/2; down: sqrt(x) (psi_x + beta/x psi), beta - 1/2."""
    px = r.system.dx(r.psi)
    if direction == "up":
        new = T * (px - (r.beta + 1) / T**2 * r.psi)
        return replace(r, psi=reduce(new, r.system), beta=r.beta + HALF)
    if direction == "down":
        new = T * (px + r.beta / T**2 * r.psi)
        return replace(r, psi=reduce(new, r.system), beta=r.beta - HALF)
    raise ValueError("direction must be up or down")


# -- lam = 0 expansion -------------------------------------------------------------

def ode7_expansion(state: ODE7LaxState) -> ExpansionData:
    """Psi0 and Lambda from the singular point lam = 0; rho solved order by order.

    Only Psi0 and Lambda are prescribed. rho (off-diagonal) follows from
    the lam^-1 equation, its diagonal and the off-diagonal of rho2 from the
    lam^0 equation; the x-equation at order lam^1 then checks rho.
    """
    a, g = state.alpha, state.gamma
    if a.is_zero():
        raise ZeroAlpha("alpha = 0: the exponent gamma/alpha is undefined")
    S = state.system(eliminate_gamma=True)
    z = state.z
    psi0 = LaurentMat2.constant([[C1, C2], [(a - z) * C1 / (W * z), -C2 / W]])
    logder = SIGMA3.shift(-2) * (a / 2) + SIGMA3.shift(-1) * (g / a)
    _, Q = ode7_lax(state)
    inv = inverse_constant(psi0)

    def conj(power):
        M = inv @ LaurentMat2.constant(Q.coeff(power)) @ psi0
        return [[reduce(c, S) for c in row] for row in M.coeff(0)]

    N = conj(-1)
    C = conj(0)
    ga = reduce(g / a, S)
    r12 = reduce(-N[0][1] / a, S)
    r21 = reduce(N[1][0] / a, S)
    r11 = reduce((C[0][0] + N[0][1] * r21) / (1 + ga - N[0][0]), S)
    r22 = reduce((C[1][1] + N[1][0] * r12) / (1 - ga - N[1][1]), S)
    rho = LaurentMat2.constant([[r11, r12], [r21, r22]])
    # B = C + N rho - rho - (gamma/alpha) rho sigma3 must equal (alpha/2)[rho2, sigma3]
    Nm = LaurentMat2.constant(N)
    Cm = LaurentMat2.constant(C)
    B = (Cm + Nm @ rho - rho - (rho @ SIGMA3) * ga).coeff(0)
    rho2 = LaurentMat2.constant([[0, reduce(-B[0][1] / a, S)], [reduce(B[1][0] / a, S), 0]])
    return ExpansionData(psi0, rho, logder, rho2)
