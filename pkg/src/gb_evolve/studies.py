"""Parameter-sweep and twin-run experiments layered on the simulator.

Three repeatable studies:

* kappa_sweep drives the smoothing parameter down a user list and measures
  successive space-time L2 gaps of h, of h_x, and of the smoothed |h_x|
  (a Cauchy-sequence check of the vanishing-smoothing limit);
* b_sweep does the same along the disconnection-density axis, optionally
  appending the fully degenerate B = 0 member, and additionally records the
  corner indicator and the negative-order norm of the flux time derivative;
* twin_stability evolves two initial data with one pipeline and returns the
  L2 distance per snapshot (contraction/uniqueness shadow).

Adaptive stepping makes snapshot times differ between runs, so space-time
gaps are evaluated on the coarser of the two snapshot lattices with linear
interpolation in time.  Sweep members are independent simulations and run
concurrently; GB_EVOLVE_THREADS caps the worker count (unset uses the
processor count, 1 runs inline).  Everything is deterministic: identical
inputs give bit-identical trajectories.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from .core import Field, ModelParams, Trajectory
from .evolution import StepperConfig, run
from .monitors import build_report, flux_time_derivative_norm
from .regularization import abs_kappa

__all__ = [
    "SweepResult",
    "kappa_sweep",
    "b_sweep",
    "twin_stability",
    "l2q_gap",
    "fit_growth_envelope",
]


def _worker_cap() -> int:
    raw = os.environ.get("GB_EVOLVE_THREADS")
    if raw is None:
        return os.cpu_count() or 1
    cap = int(raw)
    if cap < 1:
        raise ValueError(f"GB_EVOLVE_THREADS must be >= 1, got {raw!r}")
    return cap


def _run_many(jobs) -> list:
    """Run independent simulations, preserving job order in the results."""
    jobs = list(jobs)
    cap = min(_worker_cap(), len(jobs)) if jobs else 1
    if cap <= 1:
        return [job() for job in jobs]
    with ThreadPoolExecutor(max_workers=cap) as pool:
        futures = [pool.submit(job) for job in jobs]
        return [f.result() for f in futures]


def _interp_values(traj: Trajectory, times: np.ndarray, transform=None) -> np.ndarray:
    """Snapshot matrix linearly interpolated in time onto the given times."""
    own = traj.times
    mat = traj.values_matrix()
    if transform is not None:
        mat = np.stack([transform(Field(traj.grid, row)) for row in mat])
    out = np.empty((times.size, mat.shape[1]))
    for j in range(mat.shape[1]):
        out[:, j] = np.interp(times, own, mat[:, j])
    return out


def l2q_gap(a: Trajectory, b: Trajectory, transform=None) -> float:
    """Space-time L2 distance of two runs on their coarsest common lattice.

    transform, when given, maps each snapshot Field to a value array first
    (e.g. a derivative); by default the heights themselves are compared.
    """
    if a.grid != b.grid:
        raise ValueError("trajectories must share a grid")
    t_end = min(a.final_time, b.final_time)
    lattice = a.times if len(a.times) <= len(b.times) else b.times
    lattice = lattice[lattice <= t_end + 1e-15]
    va = _interp_values(a, lattice, transform)
    vb = _interp_values(b, lattice, transform)
    sq = np.sum((va - vb) ** 2, axis=1) * a.grid.dx
    return float(np.sqrt(np.trapezoid(sq, lattice)))


@dataclass(frozen=True)
class SweepResult:
    """One parameter axis worth of runs and their comparison metrics.

    successive_l2q_gaps compares consecutive members' heights; the _hx and
    _abs_hx variants compare the gradient and the smoothed gradient
    magnitude (each member evaluated with its own smoothing parameter).
    flux_dt_norms is populated by b_sweep.
    """

    axis: str
    values: tuple
    trajectories: tuple
    successive_l2q_gaps: tuple
    successive_l2q_gaps_hx: tuple
    successive_l2q_gaps_abs_hx: tuple
    reports: tuple
    corner_metrics: tuple
    flux_dt_norms: tuple = ()
    diverged: tuple = ()

    def __post_init__(self):
        if len(self.values) != len(self.trajectories):
            raise ValueError("values and trajectories must align")
        if any(g < 0 for g in self.successive_l2q_gaps):
            raise ValueError("gaps must be nonnegative")


def _hx_transform(field: Field) -> np.ndarray:
    from .core import derivative_x

    return derivative_x(field).values


def _abs_hx_transform(kappa: float):
    def transform(field: Field) -> np.ndarray:
        return abs_kappa(_hx_transform(field), kappa)

    return transform


def _sweep(
    axis: str,
    values,
    h0: Field,
    make_params,
    cfg: StepperConfig,
    with_flux_dt: bool,
) -> SweepResult:
    params_list = [make_params(v) for v in values]
    trajs = _run_many([(lambda p=p: run(h0, p, cfg)) for p in params_list])

    gaps, gaps_hx, gaps_abs = [], [], []
    for left, right, p_left, p_right in zip(
        trajs, trajs[1:], params_list, params_list[1:]
    ):
        gaps.append(l2q_gap(left, right))
        gaps_hx.append(l2q_gap(left, right, transform=_hx_transform))
        # each member's smoothed gradient uses its own kappa
        lat = left if len(left.times) <= len(right.times) else right
        lattice = lat.times
        va = _interp_values(left, lattice, _abs_hx_transform(p_left.kappa))
        vb = _interp_values(right, lattice, _abs_hx_transform(p_right.kappa))
        sq = np.sum((va - vb) ** 2, axis=1) * left.grid.dx
        gaps_abs.append(float(np.sqrt(np.trapezoid(sq, lattice))))

    reports = tuple(build_report(t) for t in trajs)
    corners = tuple(r.corner_metric for r in reports)
    flux_dt = (
        tuple(flux_time_derivative_norm(t) for t in trajs) if with_flux_dt else ()
    )
    return SweepResult(
        axis=axis,
        values=tuple(values),
        trajectories=tuple(trajs),
        successive_l2q_gaps=tuple(gaps),
        successive_l2q_gaps_hx=tuple(gaps_hx),
        successive_l2q_gaps_abs_hx=tuple(gaps_abs),
        reports=reports,
        corner_metrics=corners,
        flux_dt_norms=flux_dt,
        diverged=tuple(t.diverged for t in trajs),
    )


def kappa_sweep(
    h0: Field, base: ModelParams, cfg: StepperConfig, kappas
) -> SweepResult:
    """Run each smoothing level of a strictly decreasing positive list.

    All members share the grid, initial data, and stepping policy; the
    successive gaps shadow strong convergence of the vanishing-smoothing
    limit.  A diverged member is recorded, not fatal.
    """
    kappas = list(kappas)
    if any(k <= 0 for k in kappas):
        raise ValueError("kappa values must be positive")
    if any(k2 >= k1 for k1, k2 in zip(kappas, kappas[1:])):
        raise ValueError("kappa values must be strictly decreasing")
    return _sweep(
        "kappa",
        kappas,
        h0,
        lambda k: replace(base, kappa=k),
        cfg,
        with_flux_dt=False,
    )


def b_sweep(
    h0: Field,
    base: ModelParams,
    cfg: StepperConfig,
    bs,
    include_zero: bool = False,
) -> SweepResult:
    """Run each disconnection density of a strictly decreasing positive list.

    include_zero appends the fully degenerate member, which forces the
    smoothing parameter to zero as well.  Corner metrics and the flux
    time-derivative norms are recorded per member.
    """
    bs = list(bs)
    if any(b <= 0 for b in bs):
        raise ValueError("B values must be positive")
    if any(b2 >= b1 for b1, b2 in zip(bs, bs[1:])):
        raise ValueError("B values must be strictly decreasing")

    def make(b: float) -> ModelParams:
        if b == 0.0:
            return replace(base, cap_b=0.0, kappa=0.0)
        return replace(base, cap_b=b)

    values = bs + [0.0] if include_zero else bs
    return _sweep("cap_b", values, h0, make, cfg, with_flux_dt=True)


def twin_stability(
    h0a: Field, h0b: Field, params: ModelParams, cfg: StepperConfig
) -> list[tuple[float, float]]:
    """L2 distance of two runs per snapshot time of the first run.

    Requires B > 0 (contraction is only expected away from the degenerate
    case).  Identical inputs give identically zero gaps because the whole
    pipeline is deterministic.
    """
    if h0a.grid != h0b.grid:
        raise ValueError("twin initial data must share a grid")
    if not params.cap_b > 0:
        raise ValueError("twin_stability requires cap_b > 0")
    ta, tb = _run_many([lambda: run(h0a, params, cfg), lambda: run(h0b, params, cfg)])
    times = ta.times
    vb = _interp_values(tb, times)
    va = ta.values_matrix()
    gaps = np.sqrt(np.sum((va - vb) ** 2, axis=1) * ta.grid.dx)
    return [(float(t), float(g)) for t, g in zip(times, gaps)]


def fit_growth_envelope(gaps: list[tuple[float, float]], t_split: float) -> float:
    """Nonnegative exponential rate fitted on gaps with t <= t_split.

    Least-squares slope of log(gap(t)/gap(0)) against t, clamped at zero.
    With the returned rate C, gap(0) * exp(C t) is the fitted envelope.
    """
    t0, g0 = gaps[0]
    if g0 <= 0:
        return 0.0
    ts = np.array([t for t, _ in gaps if t <= t_split])
    gs = np.array([g for t, g in gaps if t <= t_split])
    keep = gs > 0
    ts, gs = ts[keep], gs[keep]
    if ts.size < 2:
        return 0.0
    slope = float(np.polyfit(ts, np.log(gs / g0), 1)[0])
    return max(slope, 0.0)
