"""Named verification checks shared by the CLI and the test-suite."""
from __future__ import annotations

import time
from dataclasses import dataclass, field

from . import dtcore, numverify, ode7, pii
from .laxalg import (
    compat_residual,
    dual_gauge_cov_residuals,
    expansion_residuals,
    gauge_cov_residuals,
    scalar_laurent_is_zero,
)

SUITES = ("compat", "gauge", "expansion", "dt-numeric")


@dataclass
class Check:
    name: str
    passed: bool
    detail: dict = field(default_factory=dict)
    seconds: float = 0.0

    def to_json_obj(self) -> dict:
        return {"name": self.name, "passed": bool(self.passed), "detail": self.detail}


def _timed(name, fn) -> Check:
    t0 = time.perf_counter()
    passed, detail = fn()
    return Check(name, bool(passed), detail, time.perf_counter() - t0)


# -- compatibility ------------------------------------------------------------------

def compat_pii():
    P, Q = pii.pii_lax()
    r = compat_residual(P, Q, pii.pii_system())
    return r.is_zero(), {"residual": "0" if r.is_zero() else repr(r)}


def compat_ode7():
    st = ode7.symbolic_state()
    P, Q = ode7.ode7_lax(st)
    r = compat_residual(P, Q, st.system())
    return r.is_zero(), {"residual": "0" if r.is_zero() else repr(r)}


# -- gauge covariance ---------------------------------------------------------------

def gauge_pii(branch: str):
    P, Q = pii.pii_lax()
    (Pt, Qt), system = pii.transformed_lax(branch)
    i = pii.BRANCHES.index(branch)
    G = pii.pii_gauges()[i]
    H = pii.pii_dual_gauges()[i]
    rx, rl = gauge_cov_residuals(G, P, Q, Pt, Qt, system)
    hx, hl = dual_gauge_cov_residuals(H, P, Q, Pt, Qt, system)
    trace = scalar_laurent_is_zero(Qt.trace())
    ok = rx.is_zero() and rl.is_zero() and hx.is_zero() and hl.is_zero() and trace
    return ok, {"direct": [rx.is_zero(), rl.is_zero()], "dual": [hx.is_zero(), hl.is_zero()],
                "trace_Q_zero": trace}


def gauge_ode7(which: str, sign: str):
    st = ode7.symbolic_state()
    P, Q = ode7.ode7_lax(st)
    system = st.system()
    new, G = ode7.edt_coeff_transform(st, which, sign)
    Pt, Qt = new.lax()
    H = ode7.edt_dual_gauge(st, which, sign)
    rx, rl = gauge_cov_residuals(G, P, Q, Pt, Qt, system)
    hx, hl = dual_gauge_cov_residuals(H, P, Q, Pt, Qt, system)
    trace = scalar_laurent_is_zero(Qt.trace())
    ok = rx.is_zero() and rl.is_zero() and hx.is_zero() and hl.is_zero() and trace
    return ok, {"direct": [rx.is_zero(), rl.is_zero()], "dual": [hx.is_zero(), hl.is_zero()],
                "trace_Q_zero": trace, "T": ode7.BRANCH_TO_T[(which, sign)]}


# -- lam = 0 expansion ---------------------------------------------------------------

def _order_table(rs):
    return {f"{r.equation}:{r.order}": r.is_zero() for r in rs}


def expansion_pii():
    e = pii.pii_expansion()
    P, Q = pii.pii_lax()
    S = pii.expansion_system()
    rs = expansion_residuals(e.data, P, Q, [-1, 0], S, equations=("lambda",))
    rs += expansion_residuals(e.data, P, Q, [0, 1], S, equations=("x",))
    table = _order_table(rs)
    return all(table.values()), {"orders": table}


def expansion_ode7():
    st = ode7.symbolic_state()
    e = ode7.ode7_expansion(st)
    P, Q = ode7.ode7_lax(st)
    S = st.system(eliminate_gamma=True)
    rs = expansion_residuals(e, P, Q, [-2, -1, 0], S, equations=("lambda",))
    rs += expansion_residuals(e, P, Q, [0, 1], S, equations=("x",))
    table = _order_table(rs)
    return all(table.values()), {"orders": table}


def expansion_numeric(lams=(1e-2, 1e-3, 1e-4)):
    member = pii.hierarchy(1)[1]
    rep = numverify.expansion_compare("pii", member, lams)
    slope = rep.extra["slope"]
    return abs(slope - 2.0) <= 0.2, {"slope": slope, "errors": rep.extra["errors"],
                                     "lams": list(lams)}


# -- numeric DT covariance ----------------------------------------------------------

DT_BOUND = 1e-7


def dt_numeric(tol: float = 1e-10):
    """Defects on [0, 1] for the PII seed and a non-trivial constant potential."""
    cases = {
        "edt1-seed": ({"u1": 0.0, "u2": 0.0}, "edt1", {"phi": (1.0, 1.0), "mu": 1.0}),
        "edt2-seed": ({"u1": 0.0, "u2": 0.0}, "edt2", {"phi": (1.0, 1.0), "mu": 1.0}),
        "edt1-const": ({"u1": 1.0, "u2": 0.5}, "edt1", {"phi": (1.0, 0.2), "mu": 0.7}),
        "bdt": ({"u1": 1.0, "u2": 0.5}, "bdt",
                {"phi": (1.0, 0.3), "mu": 0.5, "chi": (0.2, 1.0), "nu": -0.7}),
        "bdt-mu-eq-nu": ({"u1": 1.0, "u2": 0.5}, "bdt",
                         {"phi": (1.0, 0.3), "mu": 0.5, "chi": (0.2, 1.0), "nu": 0.5}),
    }
    detail = {}
    for name, (zs, dt, kernel) in cases.items():
        rep = numverify.numeric_dt_check(zs, dt, kernel, [2.0, 0.25], (0.0, 1.0), tol)
        detail[name] = rep.sup
    ok = all(v < DT_BOUND for v in detail.values())
    return ok, {"sup": detail, "bound": DT_BOUND, "tol": tol}


def pii_limit():
    """mu, nu -> 0 of the BDT built from the series reproduces both PII gauges."""
    e = pii.pii_expansion()
    zs = dtcore.ZSData(pii.U, pii.U, pii.UX, pii.UX)
    gp, gm = pii.pii_gauges()
    S = pii.expansion_system()
    out = {}
    for label, a, b, target, branch in (("a=(1,0)", (1, 0), (0, 1), gm, "minus"),
                                        ("a=(0,1)", (0, 1), (1, 0), gp, "plus")):
        kv = dtcore.kernel_vectors_from_expansion(e.data, a, b)
        G, P0 = dtcore.bdt_lambda_zero_limit(zs, kv)
        same_gauge = (G - target).reduce(S).is_zero()
        new_u = pii.bt_closed_form(branch)[0]
        same_u = (P0[0, 1] - new_u).is_zero() and (P0[1, 0] - new_u).is_zero()
        out[label] = {"branch": branch, "gauge": same_gauge, "potential": same_u}
    ok = all(v["gauge"] and v["potential"] for v in out.values())
    return ok, out


def run_suite(suite: str, system: str = "all", tol: float = 1e-10) -> list[Check]:
    if suite not in SUITES + ("all",):
        raise ValueError(f"unknown suite {suite!r}")
    systems = ("pii", "ode7") if system == "all" else (system,)
    checks = []
    if suite in ("compat", "all"):
        if "pii" in systems:
            checks.append(_timed("compat:pii", compat_pii))
        if "ode7" in systems:
            checks.append(_timed("compat:ode7", compat_ode7))
    if suite in ("gauge", "all"):
        if "pii" in systems:
            for b in pii.BRANCHES:
                checks.append(_timed(f"gauge:pii:{b}", lambda b=b: gauge_pii(b)))
        if "ode7" in systems:
            for which in ("edt1", "edt2"):
                for sign in ("plus", "minus"):
                    checks.append(_timed(f"gauge:ode7:{which}:{sign}",
                                         lambda w=which, s=sign: gauge_ode7(w, s)))
    if suite in ("expansion", "all"):
        if "pii" in systems:
            checks.append(_timed("expansion:pii", expansion_pii))
            checks.append(_timed("expansion:pii:numeric", expansion_numeric))
        if "ode7" in systems:
            checks.append(_timed("expansion:ode7", expansion_ode7))
    if suite in ("dt-numeric", "all"):
        checks.append(_timed("dt-numeric", lambda: dt_numeric(tol)))
        if "pii" in systems:
            checks.append(_timed("dt-limit:pii", pii_limit))
    return checks
