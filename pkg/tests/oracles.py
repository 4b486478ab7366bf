"""Independent reference computations used by several test modules."""

import math

import mpmath
import numpy as np
from scipy.integrate import quad
from scipy.linalg import expm
from scipy.special import j0 as sp_j0, j1 as sp_j1

from rzbattery.spin import SpinSpace


def bessel_form_constants_mp(v0, T, delta=1.0, lam=1.0, n_atoms=10, dps=50):
    """The six integration constants in extended precision, straight from the closed forms."""
    with mpmath.workdps(dps):
        v0, T, delta, lam = (mpmath.mpf(v) for v in (v0, T, delta, lam))
        pi = mpmath.pi
        x = v0 * T
        y4, y2 = -x / (4 * pi), -x / (2 * pi)
        a = mpmath.besselj(0, y4) / v0 + 8 * pi * T * mpmath.besselj(1, y4) / (16 * pi**2 - x**2)
        b = mpmath.besselj(0, y2) / v0 + 4 * pi * T * mpmath.besselj(1, y2) / (4 * pi**2 - x**2)
        q = lam * delta / n_atoms
        out = {
            "b2": 4 * delta * a * mpmath.sin(x / 4) ** 2,
            "b3": -2 * delta * a * mpmath.sin(x / 2),
            "b8": q * b * (1 - mpmath.cos(x)),
            "b11": q * (T - b * mpmath.sin(x)),
            "b12": q * (T + b * mpmath.sin(x)),
        }
        out["b9"] = out["b8"]
        return {k: float(v) for k, v in out.items()}


def _tsin(a, z, phi):
    return math.sin(a) * sp_j0(z) + math.cos(a) * 2 * sp_j1(z) * math.sin(phi)


def _tcos(a, z, phi):
    return math.cos(a) * sp_j0(z) - math.sin(a) * 2 * sp_j1(z) * math.sin(phi)


def quadrature_constants(v0, T, delta=1.0, lam=1.0, n_atoms=10):
    """Integrate the nu = pi coefficient functions over one period with the Bessel truncation
    cos(z sin phi) -> J0(z), sin(z sin phi) -> 2 J1(z) sin phi applied to the integrand."""
    z = v0 * T / (4 * math.pi)
    g = 2 * lam * delta / n_atoms

    def a(t):
        return math.pi - v0 * t / 2

    def ph(t):
        return 2 * math.pi * t / T

    def integ(fn):
        return quad(fn, 0, T, epsabs=1e-14, epsrel=1e-12, limit=400)[0]

    b8 = integ(lambda t: -g / 2 * _tsin(2 * a(t), 2 * z, ph(t)))
    return {
        "b2": integ(lambda t: delta * _tsin(a(t), z, ph(t))),
        "b3": integ(lambda t: delta * _tcos(a(t), z, ph(t))),
        "b8": b8,
        "b9": b8,
        "b11": integ(lambda t: g / 2 * (1 - _tcos(2 * a(t), 2 * z, ph(t)))),
        "b12": integ(lambda t: g / 2 * (1 + _tcos(2 * a(t), 2 * z, ph(t)))),
    }


SYM_NAMES = ("Jx", "Jy", "Jz", "{Jx,Jy}", "{Jx,Jz}", "{Jy,Jz}", "Jx2", "Jy2", "Jz2")


def symmetric_basis(n):
    s = SpinSpace(n)
    x, y, z = s.jx, s.jy, s.jz
    return [x, y, z, x @ y + y @ x, x @ z + z @ x, y @ z + z @ y, x @ x, y @ y, z @ z]


def extract(M, n):
    """Least-squares coordinates of ``M`` on the independent symmetric operator basis."""
    basis = symmetric_basis(n)
    A = np.column_stack([b.ravel() for b in basis])
    coef, res, rank, _ = np.linalg.lstsq(A, M.ravel(), rcond=None)
    assert rank == len(basis)
    resid = np.linalg.norm(A @ coef - M.ravel())
    return coef, resid


def ordered_to_symmetric(linear, products):
    """Map coefficients of (Jx, Jy, Jz) and the nine ordered products
    (JxJy, JyJx, JxJz, JzJx, JyJz, JzJy, Jx2, Jy2, Jz2) onto :data:`SYM_NAMES`,
    using JaJb = ({Ja,Jb} + [Ja,Jb]) / 2 and the su(2) commutators."""
    l = np.asarray(linear, dtype=complex)
    p = np.asarray(products, dtype=complex)
    out = np.zeros(9, dtype=complex)
    out[:3] = l
    # [Jx,Jy] = iJz, [Jz,Jx] = iJy, [Jy,Jz] = iJx
    out[2] += 1j * (p[0] - p[1]) / 2
    out[1] += 1j * (p[3] - p[2]) / 2
    out[0] += 1j * (p[4] - p[5]) / 2
    out[3] = (p[0] + p[1]) / 2
    out[4] = (p[2] + p[3]) / 2
    out[5] = (p[4] + p[5]) / 2
    out[6:] = p[6:]
    return out


def conjugate(M, n, mu, nu):
    s = SpinSpace(n)
    U = expm(1j * nu * s.jy) @ expm(1j * mu * s.jx)
    return U @ M @ U.conj().T


def gauge_generator(n, mu, nu, mu_rate):
    """``-i U dU^dag/dt`` for ``U = exp(i nu Jy) exp(i mu Jx)`` with constant ``nu``."""
    s = SpinSpace(n)
    U2, U1 = expm(1j * nu * s.jy), expm(1j * mu * s.jx)
    dUdag = (-1j * mu_rate * s.jx) @ U1.conj().T @ U2.conj().T
    return -1j * (U2 @ U1) @ dUdag


def coherent_state(n, theta):
    """``exp(-i theta Jx)|N/2, -N/2>``."""
    s = SpinSpace(n)
    return expm(-1j * theta * s.jx)[:, 0]
