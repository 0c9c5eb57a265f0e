import csv
import io
import json
import math

import numpy as np
import pytest

from laxforge import numverify, pii
from laxforge.errors import MissingDerivative, OrthogonalKernel, StepUnderflow, ZeroComponent
from laxforge.numverify import Trajectory


def pii_one_over_x(tol=1e-12, interval=(1, 2), n=101):
    grid = np.linspace(*interval, n)
    return numverify.integrate("pii", {"alpha": 1}, [1.0 / interval[0], -1.0 / interval[0] ** 2],
                               interval, tol, grid=grid)


def test_pii_matches_one_over_x():
    exact = pii.hierarchy(1)[1].u.to_callable(("x",))
    t = pii_one_over_x()
    assert np.max(np.abs(t.column("u") - exact(t.grid))) < 1e-9


def test_ode7_matches_sqrt_x():
    grid = np.linspace(1, 4, 61)
    t = numverify.integrate("ode7", {"alpha": 2, "beta": 0, "gamma": -1}, [1.0, 0.5], (1, 4),
                            1e-12, grid=grid)
    assert np.max(np.abs(t.column("u") - np.sqrt(grid))) < 1e-9
    assert np.max(np.abs(t.column("ux") - 0.5 / np.sqrt(grid))) < 1e-9


def test_zs_direct_seed():
    grid = np.linspace(0, 1, 21)
    t = numverify.integrate("zs-direct", {"lam": 1.0, "u": 0.0}, np.eye(2), (0, 1), 1e-12, grid=grid)
    assert t.components == ("psi11", "psi12", "psi21", "psi22")
    assert np.allclose(t.column("psi11"), np.exp(-grid), atol=1e-9)
    assert np.allclose(t.column("psi22"), np.exp(grid), atol=1e-9)
    assert np.max(np.abs(t.column("psi12"))) == 0
    assert numverify.wronskian_drift(t) < 1e-8


def test_zs_dual_is_inverse():
    grid = np.linspace(0, 1, 11)
    params = {"lam": 0.7, "u1": lambda x: 1 + x, "u2": 0.3}
    psi = numverify.integrate("zs-direct", params, np.eye(2), (0, 1), 1e-12, grid=grid)
    xi = numverify.integrate("zs-dual", params, np.eye(2), (0, 1), 1e-12, grid=grid)
    for p, q in zip(psi.values, xi.values):
        assert np.allclose(q.reshape(2, 2) @ p.reshape(2, 2), np.eye(2), atol=1e-9)
    assert numverify.wronskian_drift(psi) < 1e-8


def test_riccati_linear_power_solution():
    # alpha = 0: psi = x^(beta + 1)
    b = 1.5
    grid = np.linspace(1, 2, 11)
    t = numverify.integrate("riccati-linear", {"alpha": 0, "beta": b}, [1.0, b + 1], (1, 2),
                            1e-12, grid=grid)
    assert np.allclose(t.column("psi"), grid ** (b + 1), atol=1e-9)


def test_four_system_integrates():
    t = numverify.integrate("ode7-4system", {"alpha": 2, "beta": 0}, [1.0, 1.0, 2.25, 1.0],
                            (1, 2), 1e-10, grid=np.linspace(1, 2, 5))
    assert t.components == ("u", "v", "z", "w")


def test_residual_of_exact_solution_is_small():
    t = pii_one_over_x(1e-10)
    rep = numverify.residual_norm(t, "pii", {"alpha": 1})
    assert rep.sup < 10 * 1e-10
    assert rep.l2 <= rep.sup


def test_residual_with_wrong_alpha():
    t = pii_one_over_x(1e-10)
    rep = numverify.residual_norm(t, "pii", {"alpha": 0})
    assert abs(rep.sup - 1) < 1e-6


def test_residual_zero_length_interval():
    t = numverify.integrate("pii", {"alpha": 1}, [1.0, -1.0], (1, 1))
    rep = numverify.residual_norm(t, "pii", {"alpha": 1})
    assert rep.sup == 0 and rep.l2 == 0


def test_residual_needs_second_derivative():
    grid = np.linspace(1, 2, 5)
    t = Trajectory(grid, np.column_stack([1 / grid, -1 / grid**2]), ("u", "ux"))
    with pytest.raises(MissingDerivative):
        numverify.residual_norm(t, "pii", {"alpha": 1})


def test_ode7_residual_and_exact():
    grid = np.linspace(1, 4, 31)
    t = numverify.integrate("ode7", {"alpha": 2, "beta": 0, "gamma": -1}, [1.0, 0.5], (1, 4),
                            1e-12, grid=grid)
    rep = numverify.residual_norm(t, "ode7", {"alpha": 2, "beta": 0, "gamma": -1})
    assert rep.sup < 100 * 1e-12 * rep.extra["scale"]
    assert numverify.residual_norm(t, "exact", {"exact": np.sqrt}).sup < 1e-9


def test_report_json():
    rep = numverify.ResidualReport.from_samples(np.linspace(0, 1, 3), np.array([0.0, -2.0, 1.0]))
    assert rep.sup == 2 and rep.worst_x == 0.5
    assert json.loads(rep.to_json())["sup"] == 2
    with pytest.raises(ValueError):
        numverify.ResidualReport(-1.0, 0.0, 0.0, 1)


def test_trajectory_validation():
    with pytest.raises(ValueError):
        Trajectory(np.array([0.0, 0.0]), np.zeros((2, 1)), ("u",))
    with pytest.raises(ValueError):
        Trajectory(np.array([0.0, 1.0]), np.array([[0.0], [np.nan]]), ("u",))


def test_dense_output_between_nodes():
    t = pii_one_over_x(1e-12, n=11)
    xm = np.array([1.05, 1.55])
    assert np.allclose(t(xm)[0], 1 / xm, atol=1e-9)


def test_csv_export():
    t = pii_one_over_x(1e-10, n=5)
    rows = list(csv.reader(io.StringIO(t.to_csv())))
    assert rows[0] == ["x", "u", "ux"]
    assert len(rows) == 6
    assert float(rows[1][0]) == 1.0


def test_step_underflow_near_pole():
    with pytest.raises(StepUnderflow) as exc:
        numverify.integrate("pii", {"alpha": 0}, [1.0, 1.0], (0, 3), 1e-10)
    assert 0.9 < exc.value.location < 1.1


def test_tolerance_bounds():
    for bad in (1e-15, 1e-2):
        with pytest.raises(ValueError):
            numverify.integrate("pii", {"alpha": 1}, [1.0, -1.0], (1, 2), bad)


def test_unknown_system():
    with pytest.raises(ValueError):
        numverify.integrate("kdv", {}, [1.0, 0.0], (0, 1))


@pytest.mark.parametrize("dt", ["edt1", "edt2"])
def test_numeric_dt_seed(dt):
    rep = numverify.numeric_dt_check({"u1": 0.0, "u2": 0.0}, dt, {"phi": (1.0, 1.0), "mu": 1.0},
                                     [2.0], (0.0, 1.0), 1e-10)
    assert rep.sup < 1e-7


def test_numeric_dt_bdt_and_identity():
    zs = {"u1": lambda x: 1 + x, "u2": lambda x: 0.5 * math.cos(x),
          "u1x": 1.0, "u2x": lambda x: -0.5 * math.sin(x)}
    kernel = {"phi": (1.0, 0.3), "mu": 0.5, "chi": (0.2, 1.0), "nu": -0.7}
    rep = numverify.numeric_dt_check(zs, "bdt", kernel, [2.0, 0.25], (0.0, 1.0), 1e-10)
    assert rep.sup < 1e-7
    same = dict(kernel, nu=0.5)
    rep = numverify.numeric_dt_check(zs, "bdt", same, [2.0], (0.0, 1.0), 1e-10)
    assert rep.sup < 1e-9


def test_numeric_dt_defect_shrinks_with_tol():
    args = ({"u1": 1.0, "u2": 0.5}, "edt1", {"phi": (1.0, 0.2), "mu": 0.7}, [2.0], (0.0, 1.0))
    coarse = numverify.numeric_dt_check(*args, 1e-6).sup
    fine = numverify.numeric_dt_check(*args, 1e-10).sup
    assert fine < coarse


def test_numeric_dt_zero_component():
    # with u = 1 and mu = 0 the first component of phi = (1, -2) crosses zero
    with pytest.raises(ZeroComponent) as exc:
        numverify.numeric_dt_check({"u1": 1.0, "u2": 1.0}, "edt1",
                                   {"phi": (1.0, -2.0), "mu": 0.0}, [2.0], (0.0, 1.0))
    assert 0.5 < exc.value.location < 0.6


def test_numeric_dt_orthogonal_kernel():
    with pytest.raises(OrthogonalKernel):
        numverify.numeric_dt_check({"u1": 0.0, "u2": 0.0}, "bdt",
                                   {"phi": (1.0, 0.0), "mu": 1.0, "chi": (0.0, 1.0), "nu": 1.0},
                                   [2.0], (0.0, 1.0))


def test_expansion_compare_slopes():
    member = pii.hierarchy(1)[1]
    lams = (1e-2, 1e-3, 1e-4)
    one = numverify.expansion_compare("pii", member, lams, order=1)
    assert abs(one.extra["slope"] - 2) <= 0.2
    zero = numverify.expansion_compare("pii", member, lams, order=0)
    assert abs(zero.extra["slope"] - 1) <= 0.2


def test_expansion_compare_rejects_bad_samples():
    member = pii.hierarchy(1)[1]
    with pytest.raises(ValueError):
        numverify.expansion_compare("pii", member, (1e-2, 0.0))
    with pytest.raises(ValueError):
        numverify.expansion_compare("pii", member, (1e-2, 1e-3j))
    with pytest.raises(ValueError):
        numverify.expansion_compare("pii", member, (1e-2,))
