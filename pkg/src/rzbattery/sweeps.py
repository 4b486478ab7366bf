"""Grid drivers: per-cell scalars for (v0, T) maps, lambda sweeps and N-scaling.

Every cell is an independent pure computation; :func:`ordered_map` farms cells
out to worker processes and returns the results in input order, so the
written tables do not depend on the worker count.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import analytic
from .metrics import numeric_series
from .model import ModelParams
from .propagator import EvolutionConfig, evolve

SWEEP2D_COLUMNS = ("v0", "t_period", "E_max", "E_tau", "Sigma_tau", "S_tau", "t_max",
                   "near_critical", "near_odd_resonance", "n_steps")
SCALING_COLUMNS = ("n_atoms", "lambda", "E_max", "P_max", "Sigma_max", "S_max", "t_max", "n_steps")
SPECTRUM_COLUMNS = ("lambda", "e_ground", "e_excited", "gap", "order_parameter", "e_max_dynamic")


def ordered_map(fn, items, workers: int = 1) -> list:
    """``[fn(x) for x in items]``, optionally across processes, always in input order."""
    items = list(items)
    if workers <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items, chunksize=max(1, len(items) // (4 * workers))))


def axis_values(spec) -> np.ndarray:
    """Grid axis from ``{"min", "max", "steps"}`` (inclusive linspace) or an explicit list."""
    if isinstance(spec, dict):
        lo, hi, n = float(spec["min"]), float(spec["max"]), int(spec["steps"])
        if n < 1:
            raise ValueError("steps must be >= 1")
        return np.array([lo]) if n == 1 else np.linspace(lo, hi, n)
    vals = np.asarray(spec, dtype=float).ravel()
    if vals.size == 0:
        raise ValueError("grid axis is empty")
    return vals


def refined_peak(times, values) -> tuple[float, float]:
    """Location and height of the maximum, refined by a parabola through the top three samples.

    At an endpoint, or if the parabola would not lie inside the bracket, the
    raw sample is returned.
    """
    times = np.asarray(times, dtype=float)
    values = np.asarray(values, dtype=float)
    i = int(np.argmax(values))
    if i == 0 or i == len(values) - 1:
        return float(times[i]), float(values[i])
    (t0, t1, t2), (y0, y1, y2) = times[i - 1:i + 2], values[i - 1:i + 2]
    h0, h1 = t1 - t0, t2 - t1
    d0, d1 = (y1 - y0) / h0, (y2 - y1) / h1
    curv = (d1 - d0) / (h0 + h1)
    if curv >= 0:
        return float(t1), float(y1)
    # vertex of the Newton-form parabola through the three points
    slope1 = d0 + curv * h0
    shift = -slope1 / (2 * curv)
    if not -h0 <= shift <= h1:
        return float(t1), float(y1)
    return float(t1 + shift), float(y1 + slope1 * shift + curv * shift**2)


@dataclass(frozen=True)
class CellResult:
    E_max: float
    t_max: float
    E_tau: float
    Sigma_tau: float
    S_tau: float
    P_max: float
    Sigma_max: float
    S_max: float
    n_steps: int


def numeric_cell(p: ModelParams, cfg: EvolutionConfig) -> CellResult:
    """Run the propagator once and reduce the trajectory to its scalar figures of merit."""
    traj = evolve(p, cfg=cfg)
    s = numeric_series(traj, with_von_neumann=False)
    t_peak, e_peak = refined_peak(s.times, s.E)
    return CellResult(
        E_max=e_peak, t_max=t_peak, E_tau=float(s.E[-1]), Sigma_tau=float(s.Sigma[-1]),
        S_tau=float(s.S_diag[-1]), P_max=float(np.max(s.P)), Sigma_max=float(np.max(s.Sigma)),
        S_max=float(np.max(s.S_diag)), n_steps=traj.n_steps,
    )


def near_curve(v0: float, t_period: float, target: float, dv0: float, dT: float) -> bool:
    """Whether the cell centred at ``(v0, T)`` lies within one grid cell of ``v0 T = target``."""
    reach = v0 * dT + t_period * dv0
    return abs(v0 * t_period - target) <= max(reach, 1e-12 * target)


def near_odd_resonance(v0: float, t_period: float, dv0: float, dT: float) -> bool:
    """Proximity to the nearest curve ``v0 T = (4n + 2) pi``, n >= 0."""
    n = max(0, round((v0 * t_period / math.pi - 2) / 4))
    return any(near_curve(v0, t_period, (4 * k + 2) * math.pi, dv0, dT) for k in {max(0, n - 1), n, n + 1})


def _sweep2d_cell(job):
    p, backend, cfg, dv0, dT = job
    if backend == "analytic":
        row = (analytic.e_max(p), analytic.e_final(p), analytic.sigma_final(p),
               analytic.s_final(p), analytic.t_max(p), 0)
        e_max, e_tau, sig, s_tau, t_max, n_steps = row
    else:
        c = numeric_cell(p, cfg)
        e_max, e_tau, sig, s_tau, t_max, n_steps = (c.E_max, c.E_tau, c.Sigma_tau, c.S_tau,
                                                     c.t_max, c.n_steps)
    crit = near_curve(p.v0, p.t_period, 2 * math.pi, dv0, dT)
    odd = near_odd_resonance(p.v0, p.t_period, dv0, dT)
    return (p.v0, p.t_period, e_max, e_tau, sig, s_tau, t_max, int(crit), int(odd), n_steps)


def _spacing(axis: np.ndarray) -> float:
    return float(np.min(np.diff(axis))) / 2 if axis.size > 1 else 0.0


def sweep2d_rows(base: ModelParams, v0_axis, t_axis, backend: str, cfg: EvolutionConfig,
                 workers: int = 1) -> list[tuple]:
    """Rows of :data:`SWEEP2D_COLUMNS`, ``v0`` outer and ``T`` inner.

    The analytic backend needs ``v0 > 0`` and ``N >= 2``; proximity flags use
    half the grid spacing on each axis.
    """
    if backend not in ("analytic", "numeric"):
        raise ValueError(f"sweep2d backend must be analytic or numeric, got {backend!r}")
    v0_axis, t_axis = np.asarray(v0_axis, float), np.asarray(t_axis, float)
    dv0, dT = _spacing(v0_axis), _spacing(t_axis)
    jobs = [(base.replace(v0=float(v), t_period=float(T), tau=None), backend, cfg, dv0, dT)
            for v in v0_axis for T in t_axis]
    return ordered_map(_sweep2d_cell, jobs, workers)


def _scaling_cell(job):
    p, cfg = job
    c = numeric_cell(p, cfg)
    return (p.n_atoms, p.lam, c.E_max, c.P_max, c.Sigma_max, c.S_max, c.t_max, c.n_steps)


def scaling_rows(base: ModelParams, n_values, lambdas, cfg: EvolutionConfig,
                 workers: int = 1) -> list[tuple]:
    """Rows of :data:`SCALING_COLUMNS`, ``lambda`` outer and ``N`` inner."""
    jobs = [(base.replace(n_atoms=int(n), lam=float(lam)), cfg) for lam in lambdas for n in n_values]
    return ordered_map(_scaling_cell, jobs, workers)


@dataclass(frozen=True)
class ScalingFit:
    lam: float
    monotone_E_max: bool
    monotone_P_max: bool
    monotone_S_max: bool
    log_slope: float
    log_intercept: float
    log_r2: float


def _monotone(values, rtol: float = 1e-9) -> bool:
    values = np.asarray(values, dtype=float)
    return bool(np.all(np.diff(values) >= -rtol * np.maximum(np.abs(values[1:]), 1.0)))


def log_fit(n_values, y) -> tuple[float, float, float]:
    """Least-squares ``y = a log2(N) + b``; returns ``(a, b, R^2)``."""
    x = np.log2(np.asarray(n_values, dtype=float))
    y = np.asarray(y, dtype=float)
    A = np.column_stack([x, np.ones_like(x)])
    (a, b), *_ = np.linalg.lstsq(A, y, rcond=None)
    ss_res = float(np.sum((y - A @ np.array([a, b])) ** 2))
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else 0.0
    return float(a), float(b), r2


def scaling_fits(rows) -> list[ScalingFit]:
    """Per-lambda monotonicity flags and the logarithmic fit of ``S_max`` against ``N``."""
    lams = list(dict.fromkeys(r[1] for r in rows))
    out = []
    for lam in lams:
        sel = sorted((r for r in rows if r[1] == lam), key=lambda r: r[0])
        n = [r[0] for r in sel]
        a, b, r2 = log_fit(n, [r[5] for r in sel]) if len(sel) > 2 else (float("nan"),) * 3
        out.append(ScalingFit(
            lam=lam,
            monotone_E_max=_monotone([r[2] for r in sel]),
            monotone_P_max=_monotone([r[3] for r in sel]),
            monotone_S_max=_monotone([r[5] for r in sel]),
            log_slope=a, log_intercept=b, log_r2=r2,
        ))
    return out


def _dynamic_peak(job):
    p, cfg = job
    return numeric_cell(p, cfg).E_max


def dynamic_peaks(base: ModelParams, lambdas, cfg: EvolutionConfig, workers: int = 1) -> list[float]:
    """Peak stored energy of a charging run at each interaction strength."""
    return ordered_map(_dynamic_peak, [(base.replace(lam=float(x)), cfg) for x in lambdas], workers)
