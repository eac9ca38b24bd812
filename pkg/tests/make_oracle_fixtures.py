"""Regenerate the extended-precision oracle fixtures in tests/fixtures/.

The oracle evaluates normalized spherical-harmonic profiles through the
Rodrigues route only: the degree-l Legendre polynomial is obtained by exact
symbolic differentiation of (x^2-1)^l, the order-m derivative is again taken
symbolically, and everything is evaluated with mpmath at 60 significant
digits.  No recurrence is used anywhere, so the fixture is independent of the
production evaluation path.

Run from the repository root:

    python tests/make_oracle_fixtures.py

The CSV is committed; rerunning must reproduce it byte for byte.
"""

import csv
import math
import pathlib

import mpmath
import sympy

L_MAX = 30
N_POINTS = 21
OUT = pathlib.Path(__file__).parent / "fixtures" / "profile_oracle.csv"

mpmath.mp.dps = 60


def chebyshev_points(n):
    """Chebyshev nodes on [-1, 1], returned as exact double values."""
    return [float(math.cos(math.pi * (2 * j + 1) / (2 * n))) for j in range(n)]


def legendre_rodrigues(l, x):
    """P_l as an exact polynomial in x via Rodrigues' formula."""
    expr = (x**2 - 1) ** l
    for _ in range(l):
        expr = sympy.diff(expr, x)
    return sympy.expand(expr / (2**l * sympy.factorial(l)))


def main():
    x = sympy.Symbol("x")
    points = chebyshev_points(N_POINTS)
    rows = []
    for l in range(L_MAX + 1):
        p = legendre_rodrigues(l, x)
        dm = p
        for m in range(l + 1):
            # dm = d^m/dx^m P_l at this point in the loop
            norm = mpmath.sqrt(
                mpmath.mpf(2 * l + 1)
                / (4 * mpmath.pi)
                * mpmath.factorial(l - m)
                / mpmath.factorial(l + m)
            )
            poly = sympy.Poly(dm, x)
            coeffs = [mpmath.mpf(c.p) / mpmath.mpf(c.q) for c in poly.all_coeffs()]
            for xv in points:
                xm = mpmath.mpf(xv)
                acc = mpmath.mpf(0)
                for c in coeffs:
                    acc = acc * xm + c
                val = (-1) ** m * (1 - xm**2) ** (mpmath.mpf(m) / 2) * acc
                rows.append((l, m, xv, float(norm * val)))
            dm = sympy.diff(dm, x)
    OUT.parent.mkdir(parents=True, exist_ok=True)
    with open(OUT, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["l", "m", "x", "value"])
        for l, m, xv, val in rows:
            w.writerow([l, m, format(xv, ".17g"), format(val, ".17g")])
    print(f"wrote {len(rows)} rows to {OUT}")


if __name__ == "__main__":
    main()
