"""Rational Painleve II solutions from the seed u = 0, and one numeric check.

Run: python demos/pii_hierarchy.py
"""
import numpy as np

from laxforge import numverify, pii


def main():
    print("alpha  u(x)")
    for s in pii.hierarchy(4):
        print(f"{str(s.alpha):>5}  {s.u}")

    # the plus map sends 1/x (alpha = 1) back to the seed, also on a grid
    grid = np.linspace(1, 2, 11)
    traj = numverify.integrate("pii", {"alpha": 1}, [1.0, -1.0], (1, 2), 1e-12, grid=grid)
    image = pii.bt_apply(pii.PIISolution(traj, 1), "plus")
    print(f"\nnumeric plus map of 1/x: alpha -> {image.alpha}, "
          f"max |u~| = {np.max(np.abs(image.u.column('u'))):.2e}")


if __name__ == "__main__":
    main()
