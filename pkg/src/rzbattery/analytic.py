"""Closed-form charging dynamics from the gauge-transformation solution.

The state is rotated by ``U1 = exp(i mu Jx)`` and ``U2 = exp(i nu Jy)`` with
``nu = pi`` and ``mu(t) = pi - v0 t/2 + (v0 T / 4 pi) sin(2 pi t / T)``, which
removes the ``Jx`` term.  The remaining generator is integrated over one scan
period with the Bessel expansions ``cos(z sin phi) ~ J0(z)`` and
``sin(z sin phi) ~ 2 J1(z) sin phi`` (orders ``n >= 2`` dropped), giving the
constants ``B2, B3, B8 = B9, B11, B12``.

The level splitting ``delta`` is kept explicit and the interaction enters
through ``eta = lam * delta``, which reduces to ``lam`` for ``delta = 1``.

The closed forms are accurate for short scan periods; outside roughly
``omega_0 T <= 0.3 pi`` compare against :mod:`rzbattery.propagator` instead.
"""

from __future__ import annotations

import math
from dataclasses import astuple, dataclass

import numpy as np

from .bessel import j0, j1
from .model import ModelParams, drive_amplitude, windowed_drive

NU = math.pi
GUARD_RADIUS = 1e-4
_SMALL_Q = 1e-20

_J0_1 = j0(1.0)
_J1_1 = j1(1.0)
_PI = math.pi

# Second-order Taylor coefficients (c0, c1, c2) in d = x - x* of the scaled
# constants at their removable singularities, x = v0 T.  Derived with
# scripts/derive_guard_coefficients.py (sympy series of the closed forms).
_GUARDS = {
    "phi2": (4 * _PI, (0.0, _J1_1 / 4, (4 * _J0_1 - 3 * _J1_1) / (32 * _PI))),
    "phi3": (4 * _PI, (
        -_J1_1,
        (3 * _J1_1 / 8 - _J0_1 / 2) / _PI,
        (_J0_1 / 8 - _J1_1 / 64 + _PI**2 * _J1_1 / 24) / _PI**2,
    )),
    "phi8": (2 * _PI, (0.0, _J1_1 / 2, (4 * _J0_1 - 3 * _J1_1) / (8 * _PI))),
    "psi": (2 * _PI, (
        _J1_1,
        (_J0_1 - 3 * _J1_1 / 4) / _PI,
        (-(_PI**2) * _J1_1 / 6 - _J0_1 / 2 + _J1_1 / 16) / _PI**2,
    )),
}


# ---------------------------------------------------------------------------
# gauge angles


def mu_of_t(p: ModelParams, t):
    """Gauge angle ``mu(t)``; frozen at its end value once the drive is off."""
    t = np.clip(np.asarray(t, dtype=float), 0.0, min(p.t_period, p.charge_window[1]))
    T = p.t_period
    out = np.pi - p.v0 * t / 2 + p.v0 * T / (4 * np.pi) * np.sin(2 * np.pi * t / T)
    return out if out.ndim else float(out)


def mu_dot(p: ModelParams, t):
    """``d mu / dt = -Theta(t) f(t)``."""
    out = -windowed_drive(p, t)
    return out if np.ndim(out) else float(out)


@dataclass(frozen=True)
class GaugeAngles:
    params: ModelParams
    nu: float = NU

    def mu(self, t):
        return mu_of_t(self.params, t)

    def mu_dot(self, t):
        return mu_dot(self.params, t)


def gauge_angles(p: ModelParams) -> GaugeAngles:
    return GaugeAngles(p)


# ---------------------------------------------------------------------------
# Gauge-frame coefficient sets

A_OPERATORS = ("Jx", "Jy", "Jz", "JxJy", "JyJx", "JxJz", "JzJx", "JyJz", "JzJy",
               "Jx2", "Jy2", "Jz2")
C_OPERATORS = ("JxJy", "JyJx", "JxJz", "JzJx", "JyJz", "JzJy", "Jx2", "Jy2", "Jz2")


@dataclass(frozen=True)
class ACoeffs:
    """Coefficients of the twice-transformed Hamiltonian, in :data:`A_OPERATORS` order."""

    a1: float
    a2: float
    a3: float
    a4: float
    a5: float
    a6: float
    a7: float
    a8: float
    a9: float
    a10: float
    a11: float
    a12: float

    def as_array(self) -> np.ndarray:
        return np.array(astuple(self))


@dataclass(frozen=True)
class CCoeffs:
    """Coefficients of ``U2 U1 Jz^2 U1^dag U2^dag``, in :data:`C_OPERATORS` order."""

    c1: float
    c2: float
    c3: float
    c4: float
    c5: float
    c6: float
    c7: float
    c8: float
    c9: float

    def as_array(self) -> np.ndarray:
        return np.array(astuple(self))


def a_coeffs(p: ModelParams, t: float, *, mu=None, nu=NU, mu_rate=None, nu_rate=0.0) -> ACoeffs:
    """All twelve coefficients of the rotated generator; angles default to the gauge choice."""
    mu = mu_of_t(p, t) if mu is None else mu
    mu_rate = mu_dot(p, t) if mu_rate is None else mu_rate
    f = drive_amplitude(p, t)
    d, g = p.delta, 2 * p.eta / p.n_atoms
    sm, cm, sn, cn = math.sin(mu), math.cos(mu), math.sin(nu), math.cos(nu)
    a4 = -g * sm * cm * sn
    a6 = -g * sn * cn * cm**2
    a8 = g * sm * cm * cn
    return ACoeffs(
        a1=f * cn + mu_rate * cn - d * cm * sn,
        a2=nu_rate + d * sm,
        a3=-f * sn - mu_rate * sn + d * cm * cn,
        a4=a4, a5=a4, a6=a6, a7=a6, a8=a8, a9=a8,
        a10=g * cm**2 * sn**2,
        a11=g * sm**2,
        a12=g * cm**2 * cn**2,
    )


def c_coeffs(mu: float, nu: float = NU) -> CCoeffs:
    sm, cm, sn, cn = math.sin(mu), math.cos(mu), math.sin(nu), math.cos(nu)
    c1 = -sm * cm * sn
    c3 = -sn * cn * cm**2
    c5 = sm * cm * cn
    return CCoeffs(c1=c1, c2=c1, c3=c3, c4=c3, c5=c5, c6=c5,
                   c7=cm**2 * sn**2, c8=sm**2, c9=cm**2 * cn**2)


def c_coeffs_at(p: ModelParams, t: float) -> CCoeffs:
    return c_coeffs(mu_of_t(p, t), NU)


# ---------------------------------------------------------------------------
# Bessel-integrated constants


def _alpha(x: float) -> float:
    y = x / (4 * _PI)
    return j0(y) / x - 8 * _PI * j1(y) / ((4 * _PI - x) * (4 * _PI + x))


def _beta(x: float) -> float:
    y = x / (2 * _PI)
    return j0(y) / x - 4 * _PI * j1(y) / ((2 * _PI - x) * (2 * _PI + x))


def _direct(name: str, x: float) -> float:
    if name == "phi2":
        return 4 * _alpha(x) * math.sin(x / 4) ** 2
    if name == "phi3":
        return -2 * _alpha(x) * math.sin(x / 2)
    if name == "phi8":
        return _beta(x) * 2 * math.sin(x / 2) ** 2
    if name == "psi":
        return _beta(x) * math.sin(x)
    raise KeyError(name)


def scaled_constant(name: str, x: float, guard_radius: float = GUARD_RADIUS) -> float:
    """Dimensionless profile of a B constant at ``x = v0 T``, guarded near its pole.

    ``B2 = delta T phi2``, ``B3 = delta T phi3``, ``B8 = B9 = (eta T / N) phi8``,
    ``B11 = (eta T / N)(1 - psi)``, ``B12 = (eta T / N)(1 + psi)``.
    """
    x_star, (c0, c1, c2) = _GUARDS[name]
    d = x - x_star
    if abs(d) < guard_radius:
        return c0 + d * (c1 + d * c2)
    return _direct(name, x)


@dataclass(frozen=True)
class BesselCoeffs:
    b2: float
    b3: float
    b8: float
    b9: float
    b11: float
    b12: float

    b1 = b4 = b5 = b6 = b7 = b10 = 0.0

    @property
    def q(self) -> float:
        """``B2^2 + B3^2``."""
        return self.b2**2 + self.b3**2


def b_coeffs(p: ModelParams, guard_radius: float = GUARD_RADIUS) -> BesselCoeffs:
    """The nonzero integration constants for one parameter set."""
    if p.v0 <= 0 or p.t_period <= 0:
        raise ValueError(f"b_coeffs needs v0 > 0 and T > 0, got v0={p.v0}, T={p.t_period}")
    x = p.v0 * p.t_period
    lin = p.delta * p.t_period
    quad = p.eta * p.t_period / p.n_atoms
    b8 = quad * scaled_constant("phi8", x, guard_radius)
    psi = scaled_constant("psi", x, guard_radius)
    return BesselCoeffs(
        b2=lin * scaled_constant("phi2", x, guard_radius),
        b3=lin * scaled_constant("phi3", x, guard_radius),
        b8=b8,
        b9=b8,
        b11=quad * (1 - psi),
        b12=quad * (1 + psi),
    )


def _coeffs_or_limit(p: ModelParams) -> BesselCoeffs:
    if p.v0 > 0:
        return b_coeffs(p)
    # v0 -> 0 limit: phi2, phi8 -> 0, phi3 -> -1, psi -> 1
    quad = p.eta * p.t_period / p.n_atoms
    return BesselCoeffs(b2=0.0, b3=-p.delta * p.t_period, b8=0.0, b9=0.0, b11=0.0, b12=2 * quad)


def _versine_ratio(q: float) -> float:
    """``(cos sqrt(q) - 1) / q`` without cancellation."""
    if q < _SMALL_Q:
        return -0.5
    return -2.0 * math.sin(math.sqrt(q) / 2) ** 2 / q


# ---------------------------------------------------------------------------
# closed-form observables


def leading_energy(p: ModelParams, t):
    """Stored energy without the interaction correction: ``(N delta / 2)(1 + cos mu)``."""
    return p.n_atoms * p.delta / 2 * (1 + np.cos(mu_of_t(p, t)))


def analytic_energy(p: ModelParams, t):
    """Closed-form stored energy ``E(t)``, scalar or array."""
    b = _coeffs_or_limit(p)
    mu = np.asarray(mu_of_t(p, t))
    first = p.n_atoms * p.delta / 2 * (1 + np.cos(mu))
    q = b.q
    if q < _SMALL_Q:
        out = first
    else:
        amp = p.n_atoms**2 * (b.b8 + b.b9) / 4 * _versine_ratio(q)
        out = first + amp * (b.b2 * np.cos(mu) + b.b3 * np.sin(mu))
    return out if np.ndim(out) else float(out)


def analytic_avg_power(p: ModelParams, t):
    t_arr = np.asarray(t, dtype=float)
    E = np.asarray(analytic_energy(p, t_arr))
    out = np.where(t_arr > 0, E / np.where(t_arr > 0, t_arr, 1.0), 0.0)
    return out if out.ndim else float(out)


def analytic_inst_power(p: ModelParams, t):
    b = _coeffs_or_limit(p)
    mu = np.asarray(mu_of_t(p, t))
    f = np.asarray(windowed_drive(p, t))
    out = p.n_atoms * p.delta / 2 * f * np.sin(mu)
    q = b.q
    if q >= _SMALL_Q:
        amp = p.n_atoms**2 * (b.b8 + b.b9) / 4 * _versine_ratio(q)
        out = out - f * (b.b3 * np.cos(mu) - b.b2 * np.sin(mu)) * amp
    return out if np.ndim(out) else float(out)


def fluctuation_from_energy(p: ModelParams, energy):
    """``sqrt(N delta^2 / 4 - (E - N delta / 2)^2 / N)``, the coherent-rotation relation."""
    n, d = p.n_atoms, p.delta
    rad = np.asarray(n * d**2 / 4 - (np.asarray(energy) - n * d / 2) ** 2 / n, dtype=float)
    if np.any(rad < -1e-10):
        raise ValueError(f"negative fluctuation radicand {rad.min():.3e}: energy outside [0, N delta]")
    out = np.sqrt(np.maximum(rad, 0.0))
    return out if out.ndim else float(out)


def analytic_fluctuation(p: ModelParams, t):
    return fluctuation_from_energy(p, analytic_energy(p, t))


def entropy_scale(n_atoms: int) -> float:
    """``log2 sqrt((N - 1) e^{pi/2})``, the saturation value of the closed-form entropy."""
    if n_atoms < 2:
        raise ValueError("the closed-form entropy needs N >= 2; use the numeric backend for N = 1")
    return 0.5 * math.log2((n_atoms - 1) * math.exp(math.pi / 2))


def analytic_entropy(p: ModelParams, t):
    """Closed-form diagonal entropy in bits (``N >= 2``)."""
    scale = entropy_scale(p.n_atoms)
    b = _coeffs_or_limit(p)
    mu = np.asarray(mu_of_t(p, t))
    corr = 1 - b.b8 * b.b9 * (b.b2 * np.cos(mu) - b.b3 * np.sin(mu))
    if np.any(corr <= 0):
        raise ValueError("closed-form entropy logarithm argument is not positive")
    out = np.abs(np.sin(mu)) * (scale + np.log2(corr))
    return out if out.ndim else float(out)


# ---------------------------------------------------------------------------
# charging conditions


def critical_product() -> float:
    """Full charging needs ``v0 T >= 2 pi``."""
    return 2 * math.pi


def e_max(p: ModelParams) -> float:
    x = p.v0 * p.t_period
    full = p.n_atoms * p.delta
    if x >= 2 * math.pi:
        return full
    return full / 2 * (1 - math.cos(x / 2))


def t_max(p: ModelParams) -> float:
    """Time of the first energy maximum of the leading-order solution.

    For ``v0 T < 2 pi`` this is ``T``.  Otherwise it is the smallest root of
    ``v0 t/2 - (v0 T / 4 pi) sin(2 pi t / T) = pi``, found by bisection; the
    left side is nondecreasing because its derivative is ``f(t) >= 0``.
    """
    T = p.t_period
    if p.v0 <= 0:
        raise ValueError("t_max needs v0 > 0")
    if p.v0 * T < 2 * math.pi:
        return T

    def g(t):
        return p.v0 * t / 2 - p.v0 * T / (4 * math.pi) * math.sin(2 * math.pi * t / T) - math.pi

    if g(T) <= 0:
        return T
    lo, hi = 0.0, T
    while hi - lo > 1e-12 * T:
        mid = 0.5 * (lo + hi)
        if g(mid) < 0:
            lo = mid
        else:
            hi = mid
    return hi


def e_final(p: ModelParams) -> float:
    return p.n_atoms * p.delta / 2 * (1 - math.cos(p.v0 * p.t_period / 2))


def sigma_final(p: ModelParams) -> float:
    return p.delta * math.sqrt(p.n_atoms / 4) * abs(math.sin(p.v0 * p.t_period / 2))


def s_final(p: ModelParams) -> float:
    return entropy_scale(p.n_atoms) * abs(math.sin(p.v0 * p.t_period / 2))


def analytic_series(p: ModelParams, times):
    """Every closed-form metric on ``times`` as a :class:`~rzbattery.metrics.MetricSeries`."""
    from .metrics import MetricSeries

    times = np.asarray(times, dtype=float)
    S = np.asarray(analytic_entropy(p, times), dtype=float)
    return MetricSeries(
        times=times,
        E=np.asarray(analytic_energy(p, times), dtype=float),
        P=np.asarray(analytic_avg_power(p, times), dtype=float),
        P_I=np.asarray(analytic_inst_power(p, times), dtype=float),
        Sigma=np.asarray(analytic_fluctuation(p, times), dtype=float),
        S_diag=S,
        S_vN=np.zeros_like(S),
        C=S.copy(),
        backend="analytic",
        params=p,
    )
