"""Static spectrum of the collective-spin Hamiltonian versus the interaction strength.

``H_s = delta Jz + (2 lam delta / N) Jz^2 + g Jx`` with a transverse field ``g``
(default 0).  For ``g = 0`` the Hamiltonian is diagonal and its levels are
``delta m + (2 lam delta / N) m^2``; the ground level leaves ``m = -N/2`` once
``lam > N / (2 (N - 1))`` and the two lowest levels become nearly degenerate.

:data:`ALTERNATE_TRANSVERSE` (``g = 0.01 delta``) is the documented non-zero
choice: it turns the exact level crossings into narrow avoided crossings, so
the order parameter varies continuously, while keeping the kink at the same
``lam`` and the two lowest levels close for ``lam > 1``.  Larger fields
(``g >~ 0.02 delta`` at ``N = 100``) pull the kink below ``lam = 1/2``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import LinAlgError, eigh_tridiagonal, lu_factor, lu_solve

from .propagator import NumericalError
from .spin import SpinSpace

DEFAULT_TRANSVERSE = 0.0
ALTERNATE_TRANSVERSE = 0.01


@dataclass(frozen=True)
class SpectrumPoint:
    """Two lowest levels (in units of ``N/2``) and the ground-state ``<Jz>/(N/2)``."""

    lam: float
    e_ground: float
    e_excited: float
    order_parameter: float
    e_max_dynamic: float | None = None

    @property
    def gap(self) -> float:
        return self.e_excited - self.e_ground


def static_levels(n_atoms: int, delta: float, lam: float, transverse: float = DEFAULT_TRANSVERSE,
                  n_levels: int | None = None):
    """Ascending eigenvalues (unnormalized) and eigenvectors of ``H_s``."""
    space = SpinSpace(n_atoms)
    m = space.m
    diag = delta * m + 2 * lam * delta / n_atoms * m**2
    off = 0.5 * transverse * space.ladder
    select, rng = ("a", None) if n_levels is None else ("i", (0, min(n_levels, space.dim) - 1))
    try:
        return eigh_tridiagonal(diag, off, select=select, select_range=rng)
    except (LinAlgError, ValueError) as exc:
        raise NumericalError(f"static eigensolve failed at lam={lam}: {exc}") from exc


def static_spectrum(n_atoms: int, delta: float = 1.0, lam: float = 0.0,
                    transverse: float = DEFAULT_TRANSVERSE) -> SpectrumPoint:
    """Diagonalize ``H_s`` and report its two lowest levels.

    Parameters
    ----------
    n_atoms : int
        N >= 2.
    delta, lam, transverse : float
        Splitting, scaled interaction and transverse field ``g``.

    Examples
    --------
    >>> pt = static_spectrum(10, 1.0, 0.0)
    >>> pt.e_ground, pt.order_parameter
    (-1.0, -1.0)
    """
    if n_atoms < 2:
        raise ValueError(f"static_spectrum needs N >= 2, got {n_atoms}")
    w, V = static_levels(n_atoms, delta, lam, transverse, n_levels=2)
    half = n_atoms / 2
    ground = V[:, 0]
    order = float(np.abs(ground) ** 2 @ SpinSpace(n_atoms).m) / half
    return SpectrumPoint(lam=float(lam), e_ground=float(w[0]) / half, e_excited=float(w[1]) / half,
                         order_parameter=order)


def lambda_sweep(n_atoms: int, delta: float, grid, transverse: float = DEFAULT_TRANSVERSE,
                 dynamic=None) -> list[SpectrumPoint]:
    """One :class:`SpectrumPoint` per ``lam`` in ``grid``, in grid order.

    ``dynamic``, if given, is a callable ``lam -> E_max`` (for example the
    peak stored energy of a numeric charging run) joined onto each point.
    """
    grid = [float(x) for x in grid]
    if not grid:
        raise ValueError("lambda grid is empty")
    out = []
    for lam in grid:
        pt = static_spectrum(n_atoms, delta, lam, transverse)
        if dynamic is not None:
            pt = SpectrumPoint(pt.lam, pt.e_ground, pt.e_excited, pt.order_parameter,
                               float(dynamic(lam)))
        out.append(pt)
    return out


def ground_transition(n_atoms: int) -> float:
    """Interaction at which the ``g = 0`` ground level first leaves ``m = -N/2``."""
    return n_atoms / (2 * (n_atoms - 1))


def kink_location(x, y) -> float:
    """Interior sample where the slope of ``y(x)`` changes most (largest slope jump).

    ``x`` must be strictly increasing.  Returns ``nan`` for a straight line.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.size < 3:
        raise ValueError("kink_location needs at least 3 points")
    if np.any(np.diff(x) <= 0):
        raise ValueError("x must be strictly increasing")
    jump = np.abs(np.diff(np.diff(y) / np.diff(x)))
    if not np.any(jump > 1e-12):
        return float("nan")
    return float(x[1 + int(np.argmax(jump))])


def peak_location(x, y) -> float:
    """``x`` of the largest ``y`` (first one on ties)."""
    return float(np.asarray(x, dtype=float)[int(np.argmax(y))])


def inverse_iteration(H: np.ndarray, shift: float, iters: int = 50, seed_vector=None) -> float:
    """Eigenvalue nearest ``shift`` by shifted inverse iteration (an independent check)."""
    n = H.shape[0]
    v = np.ones(n) / np.sqrt(n) if seed_vector is None else np.asarray(seed_vector, dtype=float)
    M = H - shift * np.eye(n)
    fac = lu_factor(M)
    for _ in range(iters):
        v = lu_solve(fac, v)
        v /= np.linalg.norm(v)
    return float(v @ H @ v)
