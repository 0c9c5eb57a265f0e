"""The maps T1..T4 on u = sqrt(x), their algebra, and the Riccati ladder.

Run: python demos/ode7_transforms.py
"""
from laxforge import ode7
from laxforge.symcore import reduce


def main():
    s = ode7.sqrt_family(0)
    print("T1 orbit of sqrt(x) (u written in t = sqrt(x)):")
    for _ in range(4):
        print(f"  (alpha, beta, gamma) = {tuple(str(p) for p in s.params)}, u = {s.u}")
        s = ode7.transform(s, 1, verify=True)

    g = ode7.symbolic_solution()
    back = ode7.transform(ode7.transform(g, 1), 4)
    print(f"\nT4(T1(u)) = {back.u}")
    a = ode7.transform(ode7.transform(g, 1), 3)
    b = ode7.transform(ode7.transform(g, 3), 1)
    print(f"T1 and T3 commute: {reduce(a.u - b.u, g.jets).is_zero()}")

    print("\ncoefficient-level maps and the T they induce:")
    for (which, sign), i in ode7.BRANCH_TO_T.items():
        print(f"  {which} {sign:5} -> T{i}")

    r = ode7.RiccatiState.generic()
    both = ode7.riccati_ladder(ode7.riccati_ladder(r, "up"), "down")
    print(f"\nladder up then down multiplies psi by {both.psi / ode7.PSI}")


if __name__ == "__main__":
    main()
