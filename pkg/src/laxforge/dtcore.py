"""Darboux transformations of the Zakharov-Shabat problem

    Psi_x = (lam P1 + P0) Psi,      Xi_x = -Xi (lam P1 + P0),

with P1 = -sigma3 and off-diagonal potential P0 = [[0, u1], [u2, 0]].

The formulas only use field operations, so the same code runs on
``RationalExpr`` entries (symbolic) and on floats or complex numbers
(numeric). Matrices are plain nested lists / numpy object arrays.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .errors import OrthogonalKernel, PoleAtLambda, ZeroComponent
from .laxalg import ExpansionData, LaurentMat2, inverse_constant
from .symcore import RationalExpr, ReductionSystem, derive_x, reduce, sym

P1_DEFAULT = ((-1, 0), (0, 1))


def _is_zero(v) -> bool:
    if isinstance(v, RationalExpr):
        return v.is_zero()
    return bool(np.all(np.asarray(v) == 0))


def mat(rows) -> np.ndarray:
    return np.array(rows, dtype=object)


def identity():
    return mat([[1, 0], [0, 1]])


@dataclass(frozen=True)
class ZSData:
    """Potential (u1, u2) with its x-derivatives and the lam-coefficient P1."""

    u1: object
    u2: object
    u1x: object = 0
    u2x: object = 0
    P1: tuple = P1_DEFAULT

    @property
    def mode(self) -> str:
        entries = (self.u1, self.u2, self.u1x, self.u2x)
        return "symbolic" if any(isinstance(e, RationalExpr) for e in entries) else "numeric"

    @property
    def P0(self) -> np.ndarray:
        return mat([[0, self.u1], [self.u2, 0]])

    def matrix(self, lam) -> np.ndarray:
        return mat(self.P1) * lam + self.P0


@dataclass(frozen=True)
class DTResult:
    """Gauges for Psi (left action) and Xi (right action), and the new potential."""

    psi_gauge: Callable
    xi_gauge: Callable
    P0: np.ndarray
    kind: str

    @property
    def u1(self):
        return self.P0[0, 1]

    @property
    def u2(self):
        return self.P0[1, 0]


def _sigma(sigma, lam):
    if sigma is None:
        return 1
    return sigma(lam) if callable(sigma) else sigma


def edt1(zs: ZSData, phi: Sequence, mu, sigma=None) -> DTResult:
    """First elementary DT built on a direct solution phi at lam = mu."""
    phi1, phi2 = phi
    if _is_zero(phi1):
        raise ZeroComponent("edt1 needs phi1 != 0")
    r = phi2 / phi1
    u1 = zs.u1

    def G(lam):
        s = _sigma(sigma, lam)
        return mat([[lam - mu + u1 * r / 2, -u1 / 2], [-r, 1]]) * s

    def H(lam):
        s = _sigma(sigma, lam)
        return mat([[1, u1 / 2], [r, lam - mu + u1 * r / 2]]) * (1 / s)

    P0 = mat([[0, -zs.u1x / 2 + u1**2 * r / 2 - mu * u1], [2 * r, 0]])
    return DTResult(G, H, P0, "edt1")


def edt2(zs: ZSData, phi: Sequence, mu, sigma=None) -> DTResult:
    """Second elementary DT; needs phi2 != 0."""
    phi1, phi2 = phi
    if _is_zero(phi2):
        raise ZeroComponent("edt2 needs phi2 != 0")
    r = phi1 / phi2
    u2 = zs.u2

    def G(lam):
        s = _sigma(sigma, lam)
        return mat([[1, -r], [u2 / 2, lam - mu - u2 * r / 2]]) * s

    def H(lam):
        s = _sigma(sigma, lam)
        return mat([[lam - mu - u2 * r / 2, r], [-u2 / 2, 1]]) * (1 / s)

    P0 = mat([[0, -2 * r], [zs.u2x / 2 - u2**2 * r / 2 - mu * u2, 0]])
    return DTResult(G, H, P0, "edt2")


def projector(phi: Sequence, chi: Sequence) -> np.ndarray:
    """Rank-one projector R_ij = phi_i chi_j / (chi, phi)."""
    s = chi[0] * phi[0] + chi[1] * phi[1]
    if _is_zero(s):
        raise OrthogonalKernel("(chi, phi) = 0")
    return mat([[phi[i] * chi[j] / s for j in range(2)] for i in range(2)])


@dataclass(frozen=True)
class KernelVectors:
    phi: tuple
    chi: tuple
    mu: object
    nu: object
    a: tuple = (1, 0)
    b: tuple = (0, 1)


def bdt(zs: ZSData, kv: KernelVectors, sigma=None) -> DTResult:
    """Binary DT from a direct solution at mu and a dual solution at nu."""
    mu, nu = kv.mu, kv.nu
    R = projector(kv.phi, kv.chi)
    c = mu - nu
    E = identity()

    def G(lam):
        if not isinstance(lam, RationalExpr) and lam == nu:
            raise PoleAtLambda("direct BDT gauge has a pole at lam = nu")
        return (E - R * (c / (lam - nu))) * _sigma(sigma, lam)

    def H(lam):
        if not isinstance(lam, RationalExpr) and lam == mu:
            raise PoleAtLambda("dual BDT gauge has a pole at lam = mu")
        return (E - R * (c / (mu - lam))) * (1 / _sigma(sigma, lam))

    P1 = mat(zs.P1)
    P0 = zs.P0 + (P1.dot(R) - R.dot(P1)) * c
    return DTResult(G, H, P0, "bdt")


# -- symbolic covariance -------------------------------------------------------

LAM, MU, NU = sym("lam mu nu")
PHI1, PHI2, CHI1, CHI2 = sym("phi1 phi2 chi1 chi2")
U1, U2, U1X, U2X = sym("u1 u2 u1x u2x")


def symbolic_zs(symmetric: bool = False) -> tuple[ZSData, ReductionSystem]:
    """Generic potential with jets, phi at mu and chi at nu as differential symbols.

    ``symmetric`` identifies u2 with u1 (the Painleve II reduction).
    """
    u2, u2x = (U1, U1X) if symmetric else (U2, U2X)
    zs = ZSData(U1, u2, U1X, u2x)
    derivs = {
        "x": 1,
        "u1": U1X, "u1x": sym("u1xx"),
        "u2": U2X, "u2x": sym("u2xx"),
        # phi_x = (mu P1 + P0) phi, chi_x = -chi (nu P1 + P0)
        "phi1": -MU * PHI1 + U1 * PHI2,
        "phi2": u2 * PHI1 + MU * PHI2,
        "chi1": NU * CHI1 - u2 * CHI2,
        "chi2": -U1 * CHI1 - NU * CHI2,
    }
    return zs, ReductionSystem(derivs)


def _dx(M, system):
    return np.vectorize(lambda e: derive_x(e, system), otypes=[object])(M)


def _reduce(M, system):
    return np.vectorize(lambda e: reduce(RationalExpr.coerce(e), system), otypes=[object])(M)


def covariance_residuals(zs: ZSData, result: DTResult, system: ReductionSystem, lam=LAM):
    """(direct, dual) defects of the transformed ZS problems, reduced.

    direct: G_x + G (lam P1 + P0) - (lam P1 + P0~) G
    dual:   H_x - (lam P1 + P0) H + H (lam P1 + P0~)
    """
    P = zs.matrix(lam)
    Pt = mat(zs.P1) * lam + result.P0
    G = result.psi_gauge(lam)
    H = result.xi_gauge(lam)
    rd = _dx(G, system) + G.dot(P) - Pt.dot(G)
    rh = _dx(H, system) - P.dot(H) + H.dot(Pt)
    return _reduce(rd, system), _reduce(rh, system)


def all_zero(M) -> bool:
    return all(RationalExpr.coerce(e).is_zero() for e in np.ravel(M))


# -- the lam -> 0 limit ------------------------------------------------------------

LMU, LNU = sym("Lmu Lnu")  # stand for the diagonal entries of Lambda at mu, nu


def kernel_vectors_from_expansion(exp: ExpansionData, a=(1, 0), b=(0, 1)) -> KernelVectors:
    """phi = Psi(mu) a and chi = b Xi(nu) from the series to first order.

    Psi = psi0 (E + lam rho) Lambda and Xi = Lambda^{-1} (E - lam rho) psi0^{-1}.
    Lambda(mu) = diag(Lmu, 1/Lmu) and Lambda(nu) = diag(Lnu, 1/Lnu) are
    kept as opaque symbols; they cancel from the projector whenever a and
    b each select a single column/row.
    """
    psi0 = exp.psi0.coeff(0)
    rho = exp.rho.coeff(0)
    inv = inverse_constant(exp.psi0).coeff(0)
    P0m, Rm, Im = mat(psi0), mat(rho), mat(inv)
    E = identity()
    lam_mu = mat([[LMU, 0], [0, 1 / LMU]])
    lam_nu_inv = mat([[1 / LNU, 0], [0, LNU]])
    a_vec = mat([[a[0]], [a[1]]])
    b_vec = mat([[b[0], b[1]]])
    phi = P0m.dot(E + Rm * MU).dot(lam_mu).dot(a_vec)
    chi = b_vec.dot(lam_nu_inv).dot(E - Rm * NU).dot(Im)
    phi = tuple(RationalExpr.coerce(e) for e in phi[:, 0])
    chi = tuple(RationalExpr.coerce(e) for e in chi[0, :])
    return KernelVectors(phi, chi, MU, NU, tuple(a), tuple(b))


def _limit_at_zero(e: RationalExpr) -> RationalExpr:
    if "Lmu" in e.symbols or "Lnu" in e.symbols:
        raise ValueError(
            "limit depends on the branch of Lambda; pick single-column constants"
        )
    den0 = e.denominator().subs({"mu": 0, "nu": 0})
    if den0.is_zero():
        raise ValueError("limit mu, nu -> 0 is direction dependent")
    return e.subs({"mu": 0, "nu": 0})


def bdt_lambda_zero_limit(zs: ZSData, kv: KernelVectors):
    """Limit mu, nu -> 0 of the BDT with sigma = 1.

    Returns ``(G, P0)``: G = E - K/lam as a Laurent matrix, with
    K = lim (mu - nu) R, and the limiting potential P0 + [P1, K].
    """
    R = projector(kv.phi, kv.chi)
    K = np.vectorize(lambda e: _limit_at_zero(RationalExpr.coerce(e) * (MU - NU)),
                     otypes=[object])(R)
    G = LaurentMat2.identity() - LaurentMat2.constant(K.tolist()).shift(-1)
    P1 = mat(zs.P1)
    P0 = zs.P0 + (P1.dot(K) - K.dot(P1))
    return G, P0


def edt_lambda_zero_ratio(exp: ExpansionData, a=(1, 0)) -> RationalExpr:
    """lim_{mu -> 0} phi2/phi1 for phi = Psi(mu) a with a single-column a."""
    kv = kernel_vectors_from_expansion(exp, a=a)
    return _limit_at_zero(kv.phi[1] / kv.phi[0])


def symmetric_kernel(phi: Sequence, mu) -> KernelVectors:
    """Kernel pair that keeps u1 = u2: nu = -mu and chi = (-phi1, phi2).

    If phi solves the symmetric direct problem at mu, then sigma1 phi
    solves it at -mu and (sigma1 phi)^T (i sigma2) = (-phi1, phi2) solves
    the dual problem there; with this pair R12 + R21 = 0, so the
    commutator term stays symmetric.
    """
    return KernelVectors(tuple(phi), (-phi[0], phi[1]), mu, -mu)
