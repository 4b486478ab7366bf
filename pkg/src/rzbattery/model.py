"""Model parameters, the Rosen-Zener drive envelope, and the battery Hamiltonian.

Units: hbar = omega_0 = 1, so the default gap ``delta`` is 1 and times are
given as ``omega_0 t``.

The two-body term is the collective operator ``(2 eta / N) Jz^2`` with
``eta = lam * delta``.  The strict pair sum ``(eta / 2N) sum_{i != j} sz_i sz_j``
equals this operator minus the constant ``eta / 2``; the constant drops out of
the dynamics and of every energy difference.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .spin import SpinSpace


@dataclass(frozen=True)
class ModelParams:
    """Physical parameters of the N-spin Rosen-Zener battery.

    Parameters
    ----------
    n_atoms : int
        Number of two-level systems N.
    t_period : float
        Scan period T of the drive (units of 1/omega_0).
    v0 : float
        Peak drive strength (same energy units as ``delta``).
    lam : float
        Scaled interaction ``eta / delta``; positive is repulsive.
    delta : float
        Level splitting, default 1.
    tau : float or None
        End of the charging window; ``None`` means ``tau = T``.
    """

    n_atoms: int
    t_period: float
    v0: float = 0.0
    lam: float = 0.0
    delta: float = 1.0
    tau: float | None = None

    def __post_init__(self):
        n = int(self.n_atoms)
        if n != self.n_atoms or n < 1:
            raise ValueError(f"n_atoms must be a positive integer, got {self.n_atoms!r}")
        object.__setattr__(self, "n_atoms", n)
        for name in ("t_period", "v0", "lam", "delta"):
            value = float(getattr(self, name))
            if not math.isfinite(value):
                raise ValueError(f"{name} must be finite, got {value!r}")
            object.__setattr__(self, name, value)
        if self.delta <= 0:
            raise ValueError(f"delta must be > 0, got {self.delta}")
        if self.t_period <= 0:
            raise ValueError(f"t_period must be > 0, got {self.t_period}")
        if self.v0 < 0:
            raise ValueError(f"v0 must be >= 0, got {self.v0}")
        if self.tau is not None:
            tau = float(self.tau)
            if not tau > 0:
                raise ValueError(f"tau must be > 0, got {self.tau}")
            object.__setattr__(self, "tau", tau)

    @property
    def charge_window(self) -> tuple[float, float]:
        return (0.0, self.t_period if self.tau is None else self.tau)

    @property
    def eta(self) -> float:
        return self.lam * self.delta

    @property
    def interaction(self) -> float:
        """Prefactor ``2 lam delta / N`` of ``Jz^2``."""
        return 2.0 * self.lam * self.delta / self.n_atoms

    def replace(self, **changes) -> "ModelParams":
        return replace(self, **changes)

    def as_dict(self) -> dict:
        return {
            "n_atoms": self.n_atoms,
            "t_period": self.t_period,
            "v0": self.v0,
            "lambda": self.lam,
            "delta": self.delta,
            "tau": self.charge_window[1],
        }


def in_window(p: ModelParams, t: float) -> bool:
    lo, hi = p.charge_window
    return lo <= t <= hi


def drive_amplitude(p: ModelParams, t):
    """``v0 sin^2(pi t / T)`` on ``[0, T]`` and zero elsewhere; accepts arrays."""
    t = np.asarray(t, dtype=float)
    inside = (t >= 0.0) & (t <= p.t_period)
    out = np.where(inside, p.v0 * np.sin(np.pi * t / p.t_period) ** 2, 0.0)
    return out if out.ndim else float(out)


def drive_derivative(p: ModelParams, t):
    """Analytic derivative ``v0 (pi/T) sin(2 pi t / T)`` of the envelope."""
    t = np.asarray(t, dtype=float)
    inside = (t >= 0.0) & (t <= p.t_period)
    w = np.pi / p.t_period
    out = np.where(inside, p.v0 * w * np.sin(2 * w * t), 0.0)
    return out if out.ndim else float(out)


def windowed_drive(p: ModelParams, t):
    """``Theta(t) f(t)``: the drive as actually switched on by the charging window."""
    t = np.asarray(t, dtype=float)
    lo, hi = p.charge_window
    out = np.where((t >= lo) & (t <= hi), drive_amplitude(p, t), 0.0)
    return out if out.ndim else float(out)


def coupling_at(p: ModelParams, t: float) -> tuple[float, float]:
    """Return ``(f(t), interaction)`` as switched on by the window step function."""
    if not in_window(p, t):
        return 0.0, 0.0
    return drive_amplitude(p, t), p.interaction


@dataclass(frozen=True)
class HamiltonianSnapshot:
    t: float
    H: np.ndarray
    H0: np.ndarray


def bare_hamiltonian(p: ModelParams, space: SpinSpace) -> np.ndarray:
    return p.delta * space.jz


def hamiltonian_at(p: ModelParams, space: SpinSpace, t: float) -> HamiltonianSnapshot:
    """``H(t) = delta Jz + Theta(t) [f(t) Jx + (2 lam delta / N) Jz^2]``."""
    if space.n_atoms != p.n_atoms:
        raise ValueError(f"space has N={space.n_atoms} but params have N={p.n_atoms}")
    h0 = bare_hamiltonian(p, space)
    f, g = coupling_at(p, t)
    H = h0 + f * space.jx + g * space.jz2
    H.setflags(write=False)
    return HamiltonianSnapshot(t=float(t), H=H, H0=h0)


def tridiagonal_parts(p: ModelParams, space: SpinSpace, t: float) -> tuple[np.ndarray, np.ndarray]:
    """Real diagonal and offdiagonal of ``H(t)`` (it is real symmetric tridiagonal)."""
    f, g = coupling_at(p, t)
    m = space.m
    return p.delta * m + g * m**2, 0.5 * f * space.ladder


def norm_bound(p: ModelParams, space: SpinSpace) -> float:
    """Upper bound on ``max_t ||H(t)||_2`` over the whole time axis."""
    m = space.m
    diag = np.abs(p.delta * m + p.interaction * m**2).max()
    return float(max(diag, np.abs(p.delta * m).max()) + p.v0 * space.spin)


def h0_expectation_floor(p: ModelParams) -> float:
    """``<psi(0)|H0|psi(0)> = -N delta / 2``, the stored-energy reference."""
    return -p.n_atoms * p.delta / 2
