"""Darboux transformations: numeric covariance and the lam -> 0 limit.

Run: python demos/darboux_limit.py
"""
from laxforge import dtcore, numverify, pii


def main():
    zs = {"u1": 1.0, "u2": 0.5}
    for dt, kernel in (("edt1", {"phi": (1.0, 0.2), "mu": 0.7}),
                       ("bdt", {"phi": (1.0, 0.3), "mu": 0.5, "chi": (0.2, 1.0), "nu": -0.7})):
        rep = numverify.numeric_dt_check(zs, dt, kernel, [2.0, 0.25], (0.0, 1.0), 1e-10)
        print(f"{dt}: sup defect on [0, 1] = {rep.sup:.2e}")

    # kernel vectors from the series at lam = 0, then mu, nu -> 0
    e = pii.pii_expansion()
    data = dtcore.ZSData(pii.U, pii.U, pii.UX, pii.UX)
    for a, b, branch in (((1, 0), (0, 1), "minus"), ((0, 1), (1, 0), "plus")):
        kv = dtcore.kernel_vectors_from_expansion(e.data, a, b)
        G, P0 = dtcore.bdt_lambda_zero_limit(data, kv)
        target = pii.pii_gauges()[pii.BRANCHES.index(branch)]
        same = (G - target).reduce(pii.expansion_system()).is_zero()
        print(f"a = {a}: limit gauge equals the {branch} gauge: {same}; u~ = {P0[0, 1]}")

    member = pii.hierarchy(1)[1]
    for order in (1, 0):
        rep = numverify.expansion_compare("pii", member, (1e-2, 1e-3, 1e-4), order=order)
        print(f"series truncated at order {order}: error slope {rep.extra['slope']:.3f}")


if __name__ == "__main__":
    main()
