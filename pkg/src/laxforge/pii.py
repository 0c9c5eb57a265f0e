"""Painleve II: ``u_xx = 2 u^3 + x u - alpha``.

Solutions are either exact rational functions of ``x`` or numeric
trajectories. The two Baecklund maps are applied through their on-shell
closed forms, which are certified against the log-derivative formulas by
``certify_closed_forms``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

from .errors import DegenerateDenominator, HalfIntegerAlpha, PoleOnGrid
from .laxalg import (
    E2,
    I_SIGMA2,
    N_MINUS,
    N_PLUS,
    SIGMA1,
    SIGMA3,
    ExpansionData,
    LaurentMat2,
)
from .symcore import (
    RationalExpr,
    ReductionSystem,
    derive_x,
    reduce,
    sym,
)

X, U, UX, UXX, ALPHA, D = sym("x u ux uxx alpha d")

BRANCHES = ("plus", "minus")


def pii_system(alpha=ALPHA) -> ReductionSystem:
    """On-shell system for symbolic (u, u_x); ``d`` has ``d_x = u d``."""
    return ReductionSystem(
        {"x": 1, "u": UX, "ux": UXX, "d": U * D},
        {"uxx": 2 * U**3 + X * U - alpha},
    )


def free_system() -> ReductionSystem:
    """Same derivation table with no on-shell rule (u_xx stays free)."""
    return ReductionSystem({"x": 1, "u": UX, "ux": UXX, "uxx": sym("uxxx"), "d": U * D})


EXACT_SYSTEM = ReductionSystem({"x": 1})


@dataclass(frozen=True)
class PIISolution:
    u: object  # RationalExpr in x, or numverify.Trajectory
    alpha: RationalExpr
    provenance: tuple = field(default=())

    def __post_init__(self):
        object.__setattr__(self, "alpha", RationalExpr.coerce(self.alpha))
        if isinstance(self.u, (int, Fraction, str)):
            object.__setattr__(self, "u", RationalExpr.coerce(self.u))

    @property
    def is_exact(self) -> bool:
        return isinstance(self.u, RationalExpr)

    def residual(self) -> RationalExpr:
        if not self.is_exact:
            raise TypeError("symbolic residual needs an exact solution")
        ux = derive_x(self.u, EXACT_SYSTEM)
        uxx = derive_x(ux, EXACT_SYSTEM)
        return pii_residual(self.u, ux, uxx, self.alpha)

    def to_record(self) -> dict:
        if not self.is_exact:
            raise TypeError("only exact solutions serialize to records")
        return {
            "system": "pii",
            "alpha": str(self.alpha),
            "u": str(self.u),
            "provenance": list(self.provenance),
        }

    @classmethod
    def from_record(cls, rec: dict) -> "PIISolution":
        if rec.get("system") != "pii":
            raise ValueError("not a pii record")
        return cls(RationalExpr.coerce(rec["u"]), rec["alpha"], tuple(rec.get("provenance", ())))


def pii_residual(u, u_x, u_xx, alpha) -> RationalExpr:
    u, u_x, u_xx, alpha = (RationalExpr.coerce(v) for v in (u, u_x, u_xx, alpha))
    return u_xx - 2 * u**3 - X * u + alpha


def pii_lax(u=U, u_x=UX, alpha=ALPHA):
    """Lax coefficients: P = -lam s3 + u s1, and Q with a simple pole at lam = 0."""
    u, u_x, alpha = (RationalExpr.coerce(v) for v in (u, u_x, alpha))
    P = -SIGMA3.shift(1) + SIGMA1 * u
    # sigma3 (2 u_x sigma1 - (2u^2 + x) E) = 2 u_x (i sigma2) - (2u^2 + x) sigma3
    Q = (
        SIGMA3.shift(2) * 4
        - SIGMA1.shift(1) * (4 * u)
        + I_SIGMA2 * (2 * u_x)
        - SIGMA3 * (2 * u**2 + X)
        + SIGMA1.shift(-1) * alpha
    )
    return P, Q


# -- Baecklund maps ----------------------------------------------------------

def branch_denominator(branch: str, u=U, u_x=UX) -> RationalExpr:
    if branch == "plus":
        return 2 * u_x + 2 * u**2 + X
    if branch == "minus":
        return 2 * u_x - 2 * u**2 - X
    raise ValueError(f"branch must be plus or minus, not {branch!r}")


def bt_shift(branch: str, u=U, u_x=UX, alpha=ALPHA) -> RationalExpr:
    """The log-derivative term: ln_x Delta1 (plus) or -ln_x Delta2 (minus), on shell."""
    den = branch_denominator(branch, u, u_x)
    if branch == "plus":
        return (1 - 2 * alpha) / den
    return (2 * alpha + 1) / den


def bt_closed_form(branch: str):
    """(u~, alpha~) as expressions in x, u, u_x, alpha."""
    new_alpha = 1 - ALPHA if branch == "plus" else -1 - ALPHA
    return U + bt_shift(branch), new_alpha


def deltas(u=U, u_x=UX, alpha=ALPHA):
    """Delta1 and Delta2 of the lam = 0 expansion; ``d`` stays symbolic."""
    d1 = (2 * u_x + 2 * u**2 + X) / (D**2 * (2 * alpha - 1))
    d2 = (2 * u_x - 2 * u**2 - X) * D**2 / (2 * alpha + 1)
    return d1, d2


def certify_closed_forms() -> dict:
    """Reduced differences between the log-derivative and closed forms.

    Both values are zero exactly when the closed forms used by
    ``bt_apply`` are licensed.
    """
    system = pii_system()
    d1, d2 = deltas()
    ln1 = derive_x(d1, system) / d1
    ln2 = derive_x(d2, system) / d2
    return {
        "plus": reduce(ln1 - (1 - 2 * ALPHA) / branch_denominator("plus"), system),
        "minus": reduce(ln2 + (2 * ALPHA + 1) / branch_denominator("minus"), system),
    }


def _check_branch(branch):
    if branch not in BRANCHES:
        raise ValueError(f"branch must be plus or minus, not {branch!r}")


def bt_apply(s: PIISolution, branch: str, verify: bool = True) -> PIISolution:
    """Apply the plus (alpha -> 1 - alpha) or minus (alpha -> -1 - alpha) map."""
    _check_branch(branch)
    new_u_form, new_alpha_form = bt_closed_form(branch)
    new_alpha = new_alpha_form.subs({"alpha": s.alpha})
    tag = f"bt_{branch}"
    if not s.is_exact:
        return PIISolution(_bt_numeric(s, branch), new_alpha, s.provenance + (tag,))
    u_x = derive_x(s.u, EXACT_SYSTEM)
    den = branch_denominator(branch, s.u, u_x)
    if den.is_zero():
        raise DegenerateDenominator(
            f"{branch} denominator vanishes for u = {s.u} (alpha = "
            f"{'1/2' if branch == 'plus' else '-1/2'} Riccati family)"
        )
    new_u = new_u_form.subs({"u": s.u, "ux": u_x, "alpha": s.alpha})
    out = PIISolution(new_u, new_alpha, s.provenance + (tag,))
    if verify and not out.residual().is_zero():
        raise AssertionError(f"{tag} produced a non-solution: {new_u}")
    return out


def _bt_numeric(s: PIISolution, branch: str):
    from .numverify import map_trajectory

    system = pii_system(s.alpha)
    form = bt_closed_form(branch)[0].subs({"alpha": s.alpha})
    den = branch_denominator(branch)
    try:
        return map_trajectory(s.u, form, system, den=den, label=f"bt_{branch}")
    except PoleOnGrid as exc:
        raise PoleOnGrid(f"{branch}: {exc}", location=exc.location) from None


def negate(s: PIISolution) -> PIISolution:
    """The symmetry (u, alpha) -> (-u, -alpha)."""
    if s.is_exact:
        return PIISolution(-s.u, -s.alpha, s.provenance + ("negate",))
    t = s.u
    return PIISolution(t.with_values(-t.values), -s.alpha, s.provenance + ("negate",))


SEED = PIISolution(RationalExpr.const(0), 0, ("seed",))


def hierarchy(n: int, verify: bool = True) -> list[PIISolution]:
    """Rational solutions at alpha = 0..n from the seed (0, 0).

    The plus map alone is an involution, so each step negates first:
    (u, k) -> (-u, -k) -> plus -> alpha = k + 1.
    """
    if n < 0:
        raise ValueError("n must be nonnegative")
    out = [SEED]
    cur = SEED
    for _ in range(n):
        cur = bt_apply(negate(cur), "plus", verify=verify)
        out.append(cur)
    return out


# -- Lax gauges ----------------------------------------------------------------

def gauge_deltas(u=U, u_x=UX, alpha=ALPHA):
    """delta+ = ln_x Delta1, delta- = ln_x Delta2 in on-shell closed form."""
    u, u_x, alpha = (RationalExpr.coerce(v) for v in (u, u_x, alpha))
    dp = (1 - 2 * alpha) / branch_denominator("plus", u, u_x)
    dm = -(2 * alpha + 1) / branch_denominator("minus", u, u_x)
    return dp, dm


def _delta_checked(branch, u, u_x, alpha):
    den = branch_denominator(branch, u, u_x)
    if den.is_zero():
        raise DegenerateDenominator(f"{branch} gauge denominator vanishes")
    return gauge_deltas(u, u_x, alpha)[0 if branch == "plus" else 1]


def pii_gauges(s: PIISolution | None = None):
    """Direct-pair gauges ``G = E + delta N / (2 lam)`` for both branches.

    With ``s`` omitted the gauges are symbolic in (x, u, u_x, alpha).
    """
    u, u_x, alpha = _solution_jets(s)
    dp = _delta_checked("plus", u, u_x, alpha)
    dm = _delta_checked("minus", u, u_x, alpha)
    return E2 + N_PLUS.shift(-1) * (dp / 2), E2 + N_MINUS.shift(-1) * (dm / 2)


def pii_dual_gauges(s: PIISolution | None = None):
    """Dual gauges ``H`` with ``Xi~ = Xi H`` (right action); ``H = G^{-1}``."""
    u, u_x, alpha = _solution_jets(s)
    dp = _delta_checked("plus", u, u_x, alpha)
    dm = _delta_checked("minus", u, u_x, alpha)
    return E2 - N_PLUS.shift(-1) * (dp / 2), E2 - N_MINUS.shift(-1) * (dm / 2)


def _solution_jets(s):
    if s is None:
        return U, UX, ALPHA
    if not s.is_exact:
        raise TypeError("gauges need an exact or symbolic solution")
    return s.u, derive_x(s.u, EXACT_SYSTEM), s.alpha


def transformed_lax(branch: str, s: PIISolution | None = None):
    """Lax pair of the transformed solution together with its system."""
    _check_branch(branch)
    if s is None:
        system = pii_system()
        new_u, new_alpha = bt_closed_form(branch)
        return pii_lax(new_u, system.dx(new_u), new_alpha), system
    t = bt_apply(s, branch)
    return pii_lax(t.u, derive_x(t.u, EXACT_SYSTEM), t.alpha), EXACT_SYSTEM


# -- lam = 0 expansion ----------------------------------------------------------

@dataclass(frozen=True)
class PIIExpansion:
    delta1: RationalExpr
    delta2: RationalExpr
    data: ExpansionData
    d_logderiv: RationalExpr


def is_half_integer(alpha) -> bool:
    a = RationalExpr.coerce(alpha)
    if not a.is_constant():
        return False
    f = a.as_fraction()
    return f.denominator == 2


def pii_expansion(s: PIISolution | None = None) -> PIIExpansion:
    """Psi0, rho and Lambda_lam Lambda^{-1} = (alpha/lam) sigma3 at lam = 0."""
    u, u_x, alpha = _solution_jets(s)
    if is_half_integer(alpha):
        raise HalfIntegerAlpha(f"alpha = {alpha}: the expansion has logarithmic terms")
    d1, d2 = deltas(u, u_x, alpha)
    psi0 = LaurentMat2.constant([[D, 1 / D], [D, -1 / D]])
    rho = LaurentMat2.constant([[0, d1], [d2, 0]])
    logder = SIGMA3.shift(-1) * alpha
    return PIIExpansion(d1, d2, ExpansionData(psi0, rho, logder), u)


def expansion_system(s: PIISolution | None = None) -> ReductionSystem:
    """Reduction system matching ``pii_expansion(s)``."""
    if s is None:
        return pii_system()
    return ReductionSystem({"x": 1, "d": s.u * D})
