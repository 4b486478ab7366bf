"""Battery figures of merit: stored energy, powers, energy fluctuation, entropies.

All entropies are in bits.  Because ``H0 = delta Jz`` is diagonal in the Dicke
basis, the energy eigenbasis populations are simply ``|psi_k|^2``.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field

import numpy as np

from .model import ModelParams, bare_hamiltonian, hamiltonian_at, windowed_drive
from .propagator import Trajectory, density_matrix
from .spin import BASIS_ORDERING, SpinSpace

VARIANCE_CLAMP = 1e-12
METRIC_COLUMNS = ("t", "E", "P", "P_I", "Sigma", "S_diag", "S_vN", "C")
METRICS_SCHEMA = "rzbattery.metrics/1"


def _populations(state) -> np.ndarray:
    return np.abs(np.asarray(state)) ** 2


def _m_values(n_atoms: int) -> np.ndarray:
    return np.arange(n_atoms + 1) - n_atoms / 2


def clamp_variance(var):
    """Zero out floating-point noise below ``-1e-12``; anything more negative is a bug."""
    var = np.asarray(var, dtype=float)
    if np.any(var < -VARIANCE_CLAMP):
        raise ValueError(f"negative variance {var.min():.3e} beyond clamp threshold")
    out = np.maximum(var, 0.0)
    return out if out.ndim else float(out)


def stored_energy(state, p: ModelParams) -> float:
    """``<H0> - <psi(0)|H0|psi(0)> = delta <Jz> + N delta / 2``."""
    pop = _populations(state)
    return float(p.delta * (pop @ _m_values(p.n_atoms)) + p.n_atoms * p.delta / 2)


def average_power(times, energies) -> np.ndarray:
    """``E(t)/t`` with ``P(0) := 0`` (E vanishes faster than t at the origin)."""
    times = np.asarray(times, dtype=float)
    energies = np.asarray(energies, dtype=float)
    safe = np.where(times > 0, times, 1.0)
    return np.where(times > 0, energies / safe, 0.0)


def instantaneous_power(state, p: ModelParams, t: float, space: SpinSpace | None = None) -> float:
    """``tr[H0 d rho/dt] = -i tr(H0 [H(t), rho])``; positive means charger to battery."""
    space = SpinSpace(p.n_atoms) if space is None else space
    snap = hamiltonian_at(p, space, t)
    rho = density_matrix(state)
    comm = snap.H @ rho - rho @ snap.H
    return float((-1j * np.trace(snap.H0 @ comm)).real)


def fluctuation(state, p: ModelParams) -> float:
    """Standard deviation of ``H0``."""
    pop = _populations(state)
    m = _m_values(p.n_atoms)
    mean = pop @ m
    return float(p.delta * np.sqrt(clamp_variance(pop @ (m - mean) ** 2)))


def shannon_bits(probs, axis=-1):
    probs = np.asarray(probs, dtype=float)
    safe = np.where(probs > 0, probs, 1.0)
    return -np.sum(np.where(probs > 0, probs * np.log2(safe), 0.0), axis=axis)


def diagonal_entropy(state) -> float:
    """Shannon entropy (bits) of the energy-basis populations, with ``0 log 0 = 0``."""
    return float(shannon_bits(_populations(state)))


def von_neumann_entropy(rho) -> float:
    """``-tr(rho log2 rho)`` for a density matrix (or a state vector)."""
    rho = np.asarray(rho)
    if rho.ndim == 1:
        rho = density_matrix(rho)
    w = np.linalg.eigvalsh(rho)
    return float(shannon_bits(np.clip(w, 0.0, None)))


def coherence(state) -> float:
    """Relative entropy of coherence ``S_diag - S_vN``."""
    return diagonal_entropy(state) - von_neumann_entropy(state)


@dataclass
class MetricSeries:
    """Time series of every figure of merit for one run and one backend."""

    times: np.ndarray
    E: np.ndarray
    P: np.ndarray
    P_I: np.ndarray
    Sigma: np.ndarray
    S_diag: np.ndarray
    S_vN: np.ndarray
    C: np.ndarray
    backend: str
    params: ModelParams
    meta: dict = field(default_factory=dict)

    def columns(self) -> dict[str, np.ndarray]:
        return {
            "t": self.times, "E": self.E, "P": self.P, "P_I": self.P_I, "Sigma": self.Sigma,
            "S_diag": self.S_diag, "S_vN": self.S_vN, "C": self.C,
        }

    def header(self) -> dict:
        return {
            "schema": METRICS_SCHEMA,
            "backend": self.backend,
            "params": self.params.as_dict(),
            "basis": BASIS_ORDERING,
            "entropy_log_base": 2,
            **self.meta,
        }

    def write_csv(self, path, extra_header: dict | None = None) -> None:
        header = self.header()
        if extra_header:
            header.update(extra_header)
        write_table(path, header, METRIC_COLUMNS, zip(*self.columns().values()))


def format_float(x) -> str:
    """Shortest round-trip decimal; platform independent."""
    x = float(x)
    if x == 0.0:
        return "0.0"
    return repr(x)


def write_table(path, header: dict, columns, rows) -> None:
    """Deterministic CSV: one ``# key: json`` line per header key, then the table."""
    with open(path, "w", newline="") as fh:
        for key in sorted(header):
            fh.write(f"# {key}: {json.dumps(header[key], sort_keys=True)}\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        for row in rows:
            w.writerow([_cell(v) for v in row])


def _cell(v) -> str:
    if isinstance(v, str):
        return v
    if isinstance(v, (bool, np.bool_, int, np.integer)):
        return str(int(v))
    return format_float(v)


def read_table(path) -> tuple[dict, dict[str, np.ndarray]]:
    header, body = {}, []
    with open(path, newline="") as fh:
        for line in fh:
            if line.startswith("# "):
                key, _, value = line[2:].partition(": ")
                header[key] = json.loads(value)
            else:
                body.append(line)
    rows = list(csv.reader(body))
    names = rows[0]
    data = np.array([[float(v) for v in r] for r in rows[1:]]).reshape(-1, len(names))
    return header, {name: data[:, i] for i, name in enumerate(names)}


def numeric_series(traj: Trajectory, with_von_neumann: bool = True) -> MetricSeries:
    """Evaluate every metric on the stored snapshots of a numeric trajectory."""
    p = traj.params
    space = SpinSpace(p.n_atoms)
    pop = traj.populations()
    m = space.m
    mean = pop @ m
    E = p.delta * mean + p.n_atoms * p.delta / 2
    # centered second moment: no cancellation between <m^2> and <m>^2
    sigma = p.delta * np.sqrt(clamp_variance(np.einsum("ti,ti->t", pop, (m - mean[:, None]) ** 2)))
    s_diag = shannon_bits(pop)
    # -i[H0, H(t)] = delta f(t) Jy, so P_I = delta f(t) <Jy>
    jy = np.einsum("ti,ij,tj->t", traj.states.conj(), space.jy, traj.states).real
    p_inst = p.delta * windowed_drive(p, traj.times) * jy
    if with_von_neumann:
        s_vn = np.array([von_neumann_entropy(psi) for psi in traj.states])
    else:
        s_vn = np.zeros_like(s_diag)
    return MetricSeries(
        times=np.asarray(traj.times), E=E, P=average_power(traj.times, E), P_I=p_inst,
        Sigma=sigma, S_diag=s_diag, S_vN=s_vn, C=s_diag - s_vn, backend="numeric", params=p,
        meta={"dt": traj.dt, "n_steps": traj.n_steps, "method": traj.config.method,
              "tol": traj.config.tol},
    )


def h0_moments(state, p: ModelParams) -> tuple[float, float]:
    """``(<H0>, <H0^2>)`` by direct matrix products, an independent path from populations."""
    space = SpinSpace(p.n_atoms)
    h0 = bare_hamiltonian(p, space)
    psi = np.asarray(state, dtype=complex)
    return float((psi.conj() @ h0 @ psi).real), float((psi.conj() @ h0 @ h0 @ psi).real)
