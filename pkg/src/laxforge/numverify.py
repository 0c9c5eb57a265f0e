"""Floating-point checks: adaptive integration, residual norms, numeric
images of the symbolic identities."""
from __future__ import annotations

import csv
import io
import json
from fractions import Fraction
from dataclasses import dataclass, field
from typing import Callable, Mapping, Optional, Sequence

import numpy as np
from scipy.integrate import quad, solve_ivp
from scipy.interpolate import CubicSpline

from . import dtcore
from .errors import (
    MissingDerivative,
    OrthogonalKernel,
    PoleOnGrid,
    StepUnderflow,
    ZeroComponent,
)
from .symcore import RationalExpr, ReductionSystem

TOL_BOUNDS = (1e-14, 1e-3)
BLOWUP = 1e10
SYSTEMS = ("pii", "ode7", "ode7-4system", "zs-direct", "zs-dual", "riccati-linear")


@dataclass(frozen=True)
class Trajectory:
    """Samples of a state vector on a strictly increasing grid."""

    grid: np.ndarray
    values: np.ndarray
    components: tuple
    tol: Optional[float] = None
    meta: dict = field(default_factory=dict)
    dense: Optional[Callable] = None
    interp_order: int = 3

    def __post_init__(self):
        grid = np.asarray(self.grid, dtype=float)
        values = np.asarray(self.values)
        if values.ndim == 1:
            values = values[:, None]
        if grid.ndim != 1 or values.shape != (grid.size, len(self.components)):
            raise ValueError("values must have shape (len(grid), len(components))")
        if np.any(np.diff(grid) <= 0):
            raise ValueError("grid must be strictly increasing")
        if not np.all(np.isfinite(values)):
            raise ValueError("trajectory values must be finite")
        object.__setattr__(self, "grid", grid)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "components", tuple(self.components))

    def column(self, name: str) -> np.ndarray:
        try:
            return self.values[:, self.components.index(name)]
        except ValueError:
            raise KeyError(f"no component {name!r}; have {self.components}") from None

    def has(self, name: str) -> bool:
        return name in self.components

    def with_values(self, values) -> "Trajectory":
        return Trajectory(self.grid, values, self.components, self.tol, dict(self.meta))

    def __call__(self, x) -> np.ndarray:
        """State at x (shape (len(components),) or (len(components), len(x)))."""
        if self.dense is not None:
            return self.dense(x)
        if self.grid.size < 2:
            raise ValueError("cannot interpolate a single-node trajectory")
        return CubicSpline(self.grid, self.values, axis=0)(x).T

    def to_csv(self, path=None) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        cplx = np.iscomplexobj(self.values)
        header = ["x"]
        for c in self.components:
            header += [f"{c}_re", f"{c}_im"] if cplx else [c]
        w.writerow(header)
        for x, row in zip(self.grid, self.values):
            out = [repr(float(x))]
            for v in row:
                out += [repr(float(v.real)), repr(float(v.imag))] if cplx else [repr(float(v))]
            w.writerow(out)
        text = buf.getvalue()
        if path is not None:
            with open(path, "w") as fh:
                fh.write(text)
        return text


@dataclass(frozen=True)
class ResidualReport:
    sup: float
    l2: float
    worst_x: Optional[float]
    n_points: int
    label: str = ""
    extra: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.sup < 0 or self.l2 < 0:
            raise ValueError("norms must be nonnegative")

    @classmethod
    def from_samples(cls, grid, residual, label="", **extra) -> "ResidualReport":
        grid = np.asarray(grid, dtype=float)
        r = np.abs(np.asarray(residual))
        if r.ndim > 1:
            r = r.reshape(r.shape[0], -1).max(axis=1)
        if r.size == 0:
            return cls(0.0, 0.0, None, 0, label, extra)
        i = int(np.argmax(r))
        l2 = float(np.sqrt(np.trapezoid(r**2, grid))) if grid.size > 1 else 0.0
        return cls(float(r[i]), l2, float(grid[i]), int(r.size), label, extra)

    def to_json_obj(self) -> dict:
        return {"label": self.label, "sup": self.sup, "l2": self.l2,
                "worst_x": self.worst_x, "n_points": self.n_points, **self.extra}

    def to_json(self) -> str:
        return json.dumps(self.to_json_obj(), sort_keys=True)


# -- right-hand sides ----------------------------------------------------------

def _fn(value):
    """Potentials may be numbers or callables of x."""
    return value if callable(value) else (lambda x, v=value: v)


def _potentials(params):
    if "u" in params:
        u1 = u2 = _fn(params["u"])
    else:
        u1, u2 = _fn(params.get("u1", 0.0)), _fn(params.get("u2", 0.0))
    return u1, u2


def _zs_matrix(lam, u1, u2, x):
    return np.array([[-lam, u1(x)], [u2(x), lam]])


def _num(v):
    if callable(v) or isinstance(v, complex):
        return v
    if isinstance(v, RationalExpr):
        return float(v.as_fraction())
    if isinstance(v, str):
        return float(Fraction(v))
    return float(v)


def _rhs(system: str, params: Mapping, dim: int):
    p = {k: _num(v) for k, v in params.items()}
    if system == "pii":
        a = p["alpha"]
        return lambda x, y: [y[1], 2 * y[0] ** 3 + x * y[0] - a]
    if system == "ode7":
        a, b, g = p["alpha"], p["beta"], p["gamma"]

        def f(x, y):
            u, ux = y
            uxx = ((x * ux) ** 2 - x * u * ux + a**2 * u**4 - 2 * g * u**3
                   - 2 * (2 * b + 1) * x * u - 4 * x**2) / (x**2 * u)
            return [ux, uxx]
        return f
    if system == "ode7-4system":
        a, b = p["alpha"], p["beta"]

        def f(x, y):
            u, v, z, w = y
            return [-2 - 2 * b * u / x + (2 * z - a) * u**2 / x,
                    2 + 2 * b * v / x - (2 * z - a) * v**2 / x,
                    (v - u) * z * (z - a) / x,
                    -w * (u * z + v * (z - a)) / x]
        return f
    if system in ("zs-direct", "zs-dual"):
        lam = p["lam"]
        u1, u2 = _potentials(params)
        cols = dim // 2

        if system == "zs-direct":
            def f(x, y):
                return (_zs_matrix(lam, u1, u2, x) @ y.reshape(2, cols)).ravel()
        else:
            rows = dim // 2

            def f(x, y):
                return -(y.reshape(rows, 2) @ _zs_matrix(lam, u1, u2, x)).ravel()
        return f
    if system == "riccati-linear":
        a, b = p["alpha"], p["beta"]
        return lambda x, y: [y[1], (2 * a / x + b * (b + 1) / x**2) * y[0]]
    raise ValueError(f"unknown system {system!r}; expected one of {SYSTEMS}")


def _components(system, dim):
    names = {
        "pii": ("u", "ux"), "ode7": ("u", "ux"),
        "ode7-4system": ("u", "v", "z", "w"), "riccati-linear": ("psi", "psix"),
    }
    if system in names:
        if dim != len(names[system]):
            raise ValueError(f"{system} needs {len(names[system])} initial values")
        return names[system]
    if dim == 2:
        return ("phi1", "phi2") if system == "zs-direct" else ("chi1", "chi2")
    if dim == 4:
        return ("psi11", "psi12", "psi21", "psi22")
    raise ValueError("ZS initial data must be a 2-vector or a 2x2 matrix")


def check_tol(tol: float) -> float:
    tol = float(tol)
    if not TOL_BOUNDS[0] < tol < TOL_BOUNDS[1]:
        raise ValueError(f"tol must lie in {TOL_BOUNDS}, got {tol}")
    return tol


def integrate(system: str, params: Mapping, init, interval, tol: float = 1e-10,
              grid=None, rtol: Optional[float] = None) -> Trajectory:
    """Integrate with DOP853 (order 8, dense output of order 7).

    ``rtol`` and ``atol`` both default to ``tol``. Blow-up or step-size
    collapse raises StepUnderflow with the last reached x as location.
    """
    tol = check_tol(tol)
    x0, x1 = (float(v) for v in interval)
    if x1 < x0:
        raise ValueError("interval must be increasing")
    y0 = np.asarray(init).ravel()
    if not np.iscomplexobj(y0):
        y0 = y0.astype(float)
    if system in ("zs-direct", "zs-dual") and isinstance(params.get("lam"), complex):
        y0 = y0.astype(complex)
    comps = _components(system, y0.size)
    meta = {"system": system,
            "params": {k: v for k, v in params.items() if not callable(v)}}
    if x1 == x0:
        return Trajectory(np.array([x0]), y0[None, :], comps, tol, meta)
    f = _rhs(system, params, y0.size)

    def blowup(x, y):
        return BLOWUP - np.max(np.abs(y))
    blowup.terminal = True

    sol = solve_ivp(f, (x0, x1), y0, method="DOP853", rtol=rtol or tol, atol=tol,
                    dense_output=True, t_eval=grid, events=blowup)
    if sol.status == -1 or sol.status == 1 or not np.all(np.isfinite(sol.y)):
        loc = float(sol.t[-1]) if sol.t.size else x0
        raise StepUnderflow(
            f"{system}: integration stopped near x = {loc:.8g} ({sol.message.strip()}); "
            "likely a pole of the solution", location=loc)
    dense = sol.sol
    return Trajectory(sol.t, sol.y.T, comps, tol, meta,
                      dense=lambda x: dense(x), interp_order=7)


# -- residuals -----------------------------------------------------------------

def _second_derivative(t: Trajectory, system: str, params: Mapping):
    if t.has("uxx"):
        return t.column("uxx")
    if t.meta.get("system") == system and system in ("pii", "ode7"):
        f = _rhs(system, t.meta["params"], 2)
        return np.array([f(x, y)[1] for x, y in zip(t.grid, t.values)], dtype=float)
    raise MissingDerivative(
        f"{system} residual needs u_xx: trajectory has {t.components} and no generating equation")


def residual_norm(t: Trajectory, residual, params: Optional[Mapping] = None) -> ResidualReport:
    """Pointwise residual of ``t`` and its norms.

    ``residual`` is ``"pii"``, ``"ode7"`` (equation residuals with the
    given parameters), ``"exact"`` (params["exact"] is u(x)) or a callable
    ``(x, columns_dict) -> array``. For the equation residuals the
    report's ``scale`` is the largest single term, for relative bounds.
    """
    params = dict(params or {})
    if t.grid.size == 1:
        return ResidualReport(0.0, 0.0, float(t.grid[0]), 1, str(residual))
    x = t.grid
    cols = {c: t.column(c) for c in t.components}
    terms = None
    if callable(residual):
        r = residual(x, cols)
        label = getattr(residual, "__name__", "custom")
    elif residual == "exact":
        r = cols["u"] - params["exact"](x)
        label = "exact"
    elif residual in ("pii", "ode7"):
        for name in ("u", "ux"):
            if name not in cols:
                raise MissingDerivative(f"trajectory lacks {name}")
        u, ux, uxx = cols["u"], cols["ux"], _second_derivative(t, residual, params)
        if residual == "pii":
            a = _num(params["alpha"])
            terms = [uxx, -2 * u**3, -x * u, a * np.ones_like(x)]
        else:
            a, b, g = (_num(params[k]) for k in ("alpha", "beta", "gamma"))
            terms = [x**2 * u * uxx, -(x * ux) ** 2, x * u * ux, -a**2 * u**4,
                     2 * g * u**3, 2 * (2 * b + 1) * x * u, 4 * x**2]
        r = sum(terms)
        label = residual
    else:
        raise ValueError(f"unknown residual {residual!r}")
    if terms is None:
        return ResidualReport.from_samples(x, r, label)
    scale = float(max(np.max(np.abs(tm)) for tm in terms))
    return ResidualReport.from_samples(x, r, label, scale=scale)


def _eval_on(expr: RationalExpr, t: Trajectory, names=("x", "u", "ux")) -> np.ndarray:
    cols = [t.grid] + [t.column(n) for n in names[1:]]
    return np.asarray(expr.to_callable(names)(*cols), dtype=float) * np.ones_like(t.grid)


def map_trajectory(t: Trajectory, form: RationalExpr, system: ReductionSystem,
                   den: Optional[RationalExpr] = None, label: str = "mapped") -> Trajectory:
    """Image of (u, u_x) under ``u -> form(x, u, u_x)`` with u_x, u_xx of the image.

    Derivatives of ``form`` come from ``system`` (on-shell), never from
    finite differences. A sign change of ``den`` on the grid raises
    PoleOnGrid.
    """
    if den is not None:
        dv = _eval_on(den, t)
        if np.any(dv == 0) or np.any(np.sign(dv[1:]) != np.sign(dv[:-1])):
            i = int(np.argmin(np.abs(dv)))
            raise PoleOnGrid(f"denominator crosses zero near x = {t.grid[i]:.6g}",
                             location=float(t.grid[i]))
    fx = system.dx(form)
    fxx = system.dx(fx)
    vals = [_eval_on(e, t) for e in (form, fx, fxx)]
    return Trajectory(t.grid, np.column_stack(vals), ("u", "ux", "uxx"), t.tol,
                      {**t.meta, "source": label})


def wronskian_drift(t: Trajectory) -> float:
    """max |det Psi(x) - det Psi(x0)| for a 2x2 zs-direct trajectory."""
    v = t.values
    det = v[:, 0] * v[:, 3] - v[:, 1] * v[:, 2]
    return float(np.max(np.abs(det - det[0])))


# -- Darboux transformations --------------------------------------------------------

def _sign_change(grid, vals):
    vals = np.real_if_close(vals)
    if np.iscomplexobj(vals):
        small = np.abs(vals) < 1e-12
        return int(np.argmax(small)) if small.any() else None
    s = np.sign(vals)
    bad = np.nonzero((s[1:] != s[:-1]) | (s[1:] == 0))[0]
    return int(bad[0]) if bad.size else None


def numeric_dt_check(zs: Mapping, dt: str, kernel: Mapping, lam_grid: Sequence,
                     interval=(0.0, 1.0), tol: float = 1e-10, n_check: int = 201,
                     sigma=None) -> ResidualReport:
    """Defect of a DT applied to numerically integrated ZS data.

    ``zs`` maps u1, u2, u1x, u2x to callables (or numbers). ``kernel`` holds
    ``phi``, ``mu`` and for bdt also ``chi``, ``nu``: initial values at the
    left end of ``interval``. For each lam, Psi (direct) and Xi = Psi^{-1}
    (dual) are integrated together with the kernel vectors and with the
    transformed problems, started from G Psi and Xi H. The transformed
    potential is evaluated from the kernel vectors carried in the same
    state. The report's sup is max |G Psi - Psi~| and |Xi H - Xi~|.
    """
    tol = check_tol(tol)
    if dt not in ("edt1", "edt2", "bdt"):
        raise ValueError("dt must be edt1, edt2 or bdt")
    u1, u2 = _fn(zs.get("u1", 0.0)), _fn(zs.get("u2", zs.get("u1", 0.0)))
    u1x, u2x = _fn(zs.get("u1x", 0.0)), _fn(zs.get("u2x", zs.get("u1x", 0.0)))
    x0, x1 = (float(v) for v in interval)
    mu = kernel["mu"]
    nu = kernel.get("nu", mu)
    phi0 = np.asarray(kernel["phi"], dtype=complex)
    chi0 = np.asarray(kernel.get("chi", (0, 0)), dtype=complex)
    pot = {"u1": u1, "u2": u2}
    check_grid = np.linspace(x0, x1, n_check)

    # kernel trajectories first, to locate gauge poles on the grid
    phi_t = integrate("zs-direct", {"lam": mu, **pot}, phi0, interval, tol, grid=check_grid)
    if dt == "edt1":
        i = _sign_change(check_grid, phi_t.column("phi1"))
        if i is not None:
            raise ZeroComponent(f"phi1 vanishes near x = {check_grid[i]:.6g}",
                                location=float(check_grid[i]))
    elif dt == "edt2":
        i = _sign_change(check_grid, phi_t.column("phi2"))
        if i is not None:
            raise ZeroComponent(f"phi2 vanishes near x = {check_grid[i]:.6g}",
                                location=float(check_grid[i]))
    else:
        chi_t = integrate("zs-dual", {"lam": nu, **pot}, chi0, interval, tol, grid=check_grid)
        s = np.sum(phi_t.values * chi_t.values, axis=1)
        i = _sign_change(check_grid, s)
        if i is not None:
            raise OrthogonalKernel(f"(chi, phi) vanishes near x = {check_grid[i]:.6g}",
                                   location=float(check_grid[i]))

    def transform(x, phi, chi):
        data = dtcore.ZSData(u1(x), u2(x), u1x(x), u2x(x))
        if dt == "edt1":
            return dtcore.edt1(data, phi, mu, sigma)
        if dt == "edt2":
            return dtcore.edt2(data, phi, mu, sigma)
        return dtcore.bdt(data, dtcore.KernelVectors(tuple(phi), tuple(chi), mu, nu), sigma)

    def as_c(M):
        return np.array(M.tolist(), dtype=complex)

    worst = 0.0
    worst_x = x0
    per_lam = []
    for lam in lam_grid:
        Pm = lambda x, l: np.array([[-l, u1(x)], [u2(x), l]], dtype=complex)

        def rhs(x, y):
            phi, chi = y[0:2], y[2:4]
            Psi, Xi = y[4:8].reshape(2, 2), y[8:12].reshape(2, 2)
            Psit, Xit = y[12:16].reshape(2, 2), y[16:20].reshape(2, 2)
            P = Pm(x, lam)
            Pt = np.array([[-lam, 0], [0, lam]], dtype=complex) + as_c(transform(x, phi, chi).P0)
            return np.concatenate([
                Pm(x, mu) @ phi, -(chi @ Pm(x, nu)),
                (P @ Psi).ravel(), (-(Xi @ P)).ravel(),
                (Pt @ Psit).ravel(), (-(Xit @ Pt)).ravel(),
            ])

        res0 = transform(x0, phi0, chi0)
        G0, H0 = as_c(res0.psi_gauge(lam)), as_c(res0.xi_gauge(lam))
        E = np.eye(2, dtype=complex)
        y0 = np.concatenate([phi0, chi0, E.ravel(), E.ravel(), G0.ravel(), H0.ravel()])
        sol = solve_ivp(rhs, (x0, x1), y0, method="DOP853", rtol=tol, atol=tol,
                        t_eval=check_grid)
        if sol.status != 0:
            raise StepUnderflow(f"dt check integration failed: {sol.message}",
                                location=float(sol.t[-1]))
        defects = []
        for x, y in zip(sol.t, sol.y.T):
            r = transform(x, y[0:2], y[2:4])
            G, H = as_c(r.psi_gauge(lam)), as_c(r.xi_gauge(lam))
            d1 = np.max(np.abs(G @ y[4:8].reshape(2, 2) - y[12:16].reshape(2, 2)))
            d2 = np.max(np.abs(y[8:12].reshape(2, 2) @ H - y[16:20].reshape(2, 2)))
            defects.append(max(d1, d2))
        defects = np.array(defects)
        i = int(np.argmax(defects))
        per_lam.append(float(defects[i]))
        if defects[i] >= worst:
            worst, worst_x = float(defects[i]), float(sol.t[i])
    l2 = float(np.sqrt(np.mean(np.square(per_lam)) * (x1 - x0)))
    return ResidualReport(worst, l2, worst_x, len(check_grid) * len(lam_grid),
                          f"{dt}-covariance", {"per_lambda": per_lam})


# -- lam -> 0 expansion ------------------------------------------------------------

def expansion_compare(system: str, solution, lam_samples: Sequence, order: int = 1,
                      interval=(1.0, 2.0), tol: float = 1e-13) -> ResidualReport:
    """Integrated Psi(lam) against psi0 (E + lam rho) Lambda at small lam.

    Only the x-equation is integrated: from the series value at the
    anchor interval[0] to interval[1]. Lambda does not depend on x, so it
    drops out and the error at the far end is O(lam^(order+1)). The
    report's ``slope`` is the least-squares slope of log(error) against
    log(lam). Supported system: ``pii`` with an exact solution.
    """
    from . import pii

    if system != "pii":
        raise ValueError("numeric expansion comparison is implemented for pii only")
    lams = []
    for lam in lam_samples:
        if isinstance(lam, complex) or np.iscomplexobj(lam):
            raise ValueError("lam samples must be real")
        if not lam > 0:
            raise ValueError("lam samples must lie in (0, lam_max]")
        lams.append(float(lam))
    if len(lams) < 2:
        raise ValueError("need at least two lam samples to fit a slope")
    if order not in (0, 1):
        raise ValueError("order must be 0 or 1")
    exp = pii.pii_expansion(solution)  # raises HalfIntegerAlpha
    names = ("x", "d")
    psi0 = [[e.to_callable(names) for e in row] for row in exp.data.psi0.coeff(0)]
    rho = [[e.to_callable(names) for e in row] for row in exp.data.rho.coeff(0)]
    u_f = solution.u.to_callable(("x",))
    x0, x1 = (float(v) for v in interval)
    # d = exp(int u), normalised to d(x0) = 1
    d1 = float(np.exp(quad(lambda s: float(u_f(s)), x0, x1, epsabs=1e-14, epsrel=1e-13, limit=200)[0]))

    def series(x, d, lam):
        S = np.array([[float(np.real(f(x, d))) for f in row] for row in psi0])
        R = np.array([[float(np.real(f(x, d))) for f in row] for row in rho])
        return S @ (np.eye(2) + (lam * R if order == 1 else 0))

    errs = []
    for lam in lams:
        init = series(x0, 1.0, lam)
        t = integrate("zs-direct", {"lam": lam, "u": lambda x: float(u_f(x))},
                      init, interval, max(tol, 2e-14))
        end = t.values[-1].reshape(2, 2)
        errs.append(float(np.max(np.abs(end - series(x1, d1, lam)))))
    slope = float(np.polyfit(np.log(lams), np.log(errs), 1)[0])
    return ResidualReport(max(errs), float(np.sqrt(np.mean(np.square(errs)))), None,
                          len(lams), f"expansion-{system}",
                          {"slope": slope, "lams": lams, "errors": errs, "order": order})


__all__ = [
    "Trajectory", "ResidualReport", "integrate", "residual_norm", "map_trajectory",
    "numeric_dt_check", "expansion_compare", "wronskian_drift", "check_tol",
]
