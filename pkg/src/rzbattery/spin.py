"""Collective spin operators on the symmetric (Dicke) subspace of N two-level systems.

Basis convention, used by every other module and recorded in every output
file header: index ``k`` in ``0..N`` labels the Dicke state ``|N/2, m>`` with
``m = k - N/2``.  Index 0 is the uncharged level ``m = -N/2``; the ordering is
ascending in ``m``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

BASIS_ORDERING = "dicke |N/2,m>, ascending m, index k -> m = k - N/2"


def _ensure_positive_int(n) -> int:
    out = int(n)
    if out != n or out < 1:
        raise ValueError(f"n_atoms must be a positive integer, got {n!r}")
    return out


@dataclass(frozen=True)
class SpinSpace:
    """The (N+1)-dimensional spin-N/2 irrep spanned by the Dicke states.

    Operators are built lazily, cached, and returned read-only so a single
    instance can be shared between threads or sweep workers.
    """

    n_atoms: int
    dim: int = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "n_atoms", _ensure_positive_int(self.n_atoms))
        object.__setattr__(self, "dim", self.n_atoms + 1)

    @property
    def spin(self) -> float:
        return self.n_atoms / 2

    @cached_property
    def m(self) -> np.ndarray:
        """Magnetic quantum numbers in basis order."""
        return _readonly(np.arange(self.dim) - self.spin)

    @cached_property
    def ladder(self) -> np.ndarray:
        """Real offdiagonal of J+ : ``<m+1|J+|m> = sqrt(s(s+1) - m(m+1))``."""
        s, m = self.spin, self.m[:-1]
        return _readonly(np.sqrt(s * (s + 1) - m * (m + 1)))

    @cached_property
    def jz(self) -> np.ndarray:
        return build_jz(self)

    @cached_property
    def jx(self) -> np.ndarray:
        return build_jx(self)

    @cached_property
    def jy(self) -> np.ndarray:
        return build_jy(self)

    @cached_property
    def jz2(self) -> np.ndarray:
        return build_jz2(self)

    def basis_state(self, k: int) -> np.ndarray:
        psi = np.zeros(self.dim, dtype=complex)
        psi[k] = 1.0
        return psi


def _readonly(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


def _as_space(space) -> SpinSpace:
    return space if isinstance(space, SpinSpace) else SpinSpace(space)


def build_jplus(space) -> np.ndarray:
    space = _as_space(space)
    jp = np.zeros((space.dim, space.dim), dtype=complex)
    idx = np.arange(space.dim - 1)
    jp[idx + 1, idx] = space.ladder
    return jp


def build_jz(space) -> np.ndarray:
    """Diagonal ``Jz`` with entries ``m = k - N/2``.

    >>> build_jz(SpinSpace(2)).real.diagonal()
    array([-1.,  0.,  1.])
    """
    space = _as_space(space)
    return _readonly(np.diag(space.m).astype(complex))


def build_jx(space) -> np.ndarray:
    """``Jx = (J+ + J-)/2``; real symmetric tridiagonal."""
    jp = build_jplus(space)
    return _readonly((jp + jp.conj().T) / 2)


def build_jy(space) -> np.ndarray:
    """``Jy = (J+ - J-)/(2i)``; Hermitian with purely imaginary offdiagonals."""
    jp = build_jplus(space)
    return _readonly((jp - jp.conj().T) / 2j)


def build_jz2(space) -> np.ndarray:
    space = _as_space(space)
    return _readonly(np.diag(space.m**2).astype(complex))


def uncharged_state(space) -> np.ndarray:
    """The ground state ``|N/2, -N/2>`` of ``Delta Jz``: unit amplitude on index 0."""
    return _as_space(space).basis_state(0)
