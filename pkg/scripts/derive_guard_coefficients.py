"""Second-order Taylor coefficients of the scaled B profiles at their removable poles.

Prints each coefficient in closed form (in terms of J0(1), J1(1) and pi) next to
its float value and the value hard-coded in ``rzbattery.analytic._GUARDS``.

    python scripts/derive_guard_coefficients.py

Needs sympy (``pip install -e .[derive]``).
"""

import sympy as sp

from rzbattery.analytic import _GUARDS

x, d = sp.symbols("x d")
pi = sp.pi


def alpha(x):
    y = x / (4 * pi)
    return sp.besselj(0, y) / x - 8 * pi * sp.besselj(1, y) / ((4 * pi - x) * (4 * pi + x))


def beta(x):
    y = x / (2 * pi)
    return sp.besselj(0, y) / x - 4 * pi * sp.besselj(1, y) / ((2 * pi - x) * (2 * pi + x))


PROFILES = {
    "phi2": (4 * pi, 4 * alpha(x) * sp.sin(x / 4) ** 2),
    "phi3": (4 * pi, -2 * alpha(x) * sp.sin(x / 2)),
    "phi8": (2 * pi, 2 * beta(x) * sp.sin(x / 2) ** 2),
    "psi": (2 * pi, beta(x) * sp.sin(x)),
}


def taylor(expr, x_star, order=3):
    ser = sp.series(expr.subs(x, x_star + d), d, 0, order).removeO()
    return [sp.simplify(ser.coeff(d, k)) for k in range(order)]


def main():
    worst = 0.0
    for name, (x_star, expr) in PROFILES.items():
        coeffs = taylor(expr, x_star)
        coded = _GUARDS[name][1]
        print(f"{name}  (x* = {x_star})")
        for k, (c, c_code) in enumerate(zip(coeffs, coded)):
            val = float(sp.N(c, 30))
            worst = max(worst, abs(val - c_code))
            print(f"  c{k} = {c}\n       = {val:.17g}   (coded {c_code:.17g})")
    print(f"max |derived - coded| = {worst:.2e}")


if __name__ == "__main__":
    main()
