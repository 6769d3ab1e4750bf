"""Spatial right-hand side and time integration of the interface equation.

The evolved equation, in conservative form, is

    h_t = alpha1 * d/dx [ flux_kappa(h_x) + B h_x ]
          - (alpha2 * sigma(h_x) + alpha3) * (abs_kappa(h_x) + B)

discretized with forward/backward differences for the flux divergence (so
the spatial sum of the diffusion term telescopes to zero and mass is
conserved exactly when the forcing vanishes) and the centered difference
inside the zeroth-order forcing.

Two steppers are provided.  Explicit Euler is subject to the parabolic
stability limit returned by stable_dt.  The semi-implicit step freezes the
chord coefficient c(q) = flux_kappa(q)/q + B at the current face gradients
and solves the cyclic tridiagonal system (I - dt*alpha1*A) h_new = h + dt*G
with the forcing G explicit; freezing the chord (rather than the endpoint
slope) makes A h equal the conservative flux divergence at the current
state, so the scheme is consistent with the explicit right-hand side while
remaining unconditionally stable, mass-conservative, and monotone.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import solve_banded

from .core import Field, ModelParams, Trajectory, validate_initial_data
from .regularization import abs_kappa, abs_kappa_mean, flux_kappa
from .stress import SigmaMethod, sigma_total

__all__ = [
    "StepperConfig",
    "StepError",
    "rhs",
    "stable_dt",
    "step_explicit",
    "step_semi_implicit",
    "solve_cyclic_tridiagonal",
    "run",
]

# Keeps stable_dt finite when the diffusion coefficient degenerates to zero.
FLOOR_GUARD = 1e-12

# Step-doubling accuracy controller for the semi-implicit scheme.
CONTROLLER_RTOL = 1e-5
CONTROLLER_GROWTH_STREAK = 10


class StepError(RuntimeError):
    """A single step produced a non-finite state."""


@dataclass(frozen=True)
class StepperConfig:
    """Time-stepping policy: scheme, step bounds, horizon, snapshot cadence."""

    scheme: str = "semi_implicit"
    dt_init: float = 1e-3
    dt_min: float = 1e-9
    dt_max: float = 1e-2
    cfl_safety: float = 0.9
    t_end: float = 1.0
    snapshot_stride: int = 10
    sigma_method: SigmaMethod = SigmaMethod.spectral_oracle()

    def __post_init__(self):
        if self.scheme not in ("explicit_euler", "semi_implicit"):
            raise ValueError(f"unknown scheme {self.scheme!r}")
        if not (0 < self.dt_min <= self.dt_init <= self.dt_max):
            raise ValueError(
                f"need 0 < dt_min <= dt_init <= dt_max, got "
                f"{self.dt_min}, {self.dt_init}, {self.dt_max}"
            )
        if not 0 < self.cfl_safety <= 1:
            raise ValueError(f"cfl_safety must lie in (0, 1], got {self.cfl_safety}")
        if self.t_end < 0:
            raise ValueError(f"t_end must be nonnegative, got {self.t_end}")
        if self.snapshot_stride < 1:
            raise ValueError(f"snapshot_stride must be >= 1, got {self.snapshot_stride}")


def _forward_diff(v: np.ndarray, dx: float) -> np.ndarray:
    return (np.roll(v, -1) - v) / dx


def _backward_diff(v: np.ndarray, dx: float) -> np.ndarray:
    return (v - np.roll(v, 1)) / dx


def _centered_diff(v: np.ndarray, dx: float) -> np.ndarray:
    return (np.roll(v, -1) - np.roll(v, 1)) / (2.0 * dx)


def _forcing(h: Field, params: ModelParams, sigma_method: SigmaMethod) -> np.ndarray:
    """Explicit zeroth-order term -(alpha2 sigma + alpha3)(abs_kappa(h_x) + B)."""
    hx0 = _centered_diff(h.values, h.grid.dx)
    amplitude = abs_kappa(hx0, params.kappa) + params.cap_b
    if params.alpha2 == 0.0:
        drive = params.alpha3
    else:
        sigma = sigma_total(Field(h.grid, hx0), params, sigma_method)
        drive = params.alpha2 * sigma.values + params.alpha3
    return -drive * amplitude


def _rhs_values(h: Field, params: ModelParams, sigma_method: SigmaMethod) -> np.ndarray:
    """Right-hand side as a bare array; may be non-finite for exploding states.

    Overflow is deliberately tolerated here: a degenerate explicit run can
    legitimately blow up, and the run loop turns the resulting non-finite
    values into a diverged trajectory instead of a crash.
    """
    dx = h.grid.dx
    with np.errstate(over="ignore", invalid="ignore"):
        hxf = _forward_diff(h.values, dx)
        flux = flux_kappa(hxf, params.kappa) + params.cap_b * hxf
        diffusion = params.alpha1 * _backward_diff(flux, dx)
        return diffusion + _forcing(h, params, sigma_method)


def rhs(h: Field, params: ModelParams, sigma_method: SigmaMethod) -> Field:
    """Discrete right-hand side in conservative flux form.

    With alpha2 = alpha3 = 0 the spatial sum of the result telescopes to
    zero (up to roundoff), which is what makes the steppers conservative.
    """
    return Field(h.grid, _rhs_values(h, params, sigma_method))


def stable_dt(h: Field, params: ModelParams, cfl_safety: float = 1.0) -> float:
    """Explicit stability limit cfl * dx^2 / (2 alpha1 (max|h_x|_kappa + B)).

    A tiny floor guard keeps the result finite when kappa = B = 0 and the
    data is flat (the diffusion coefficient then vanishes).
    """
    dx = h.grid.dx
    hx0 = _centered_diff(h.values, dx)
    coeff = float(np.max(abs_kappa(hx0, params.kappa))) + params.cap_b
    return cfl_safety * dx**2 / (2.0 * params.alpha1 * coeff + FLOOR_GUARD)


def step_explicit(
    h: Field,
    dt: float,
    params: ModelParams,
    sigma_method: SigmaMethod,
    enforce_stability: bool = True,
) -> Field:
    """Forward Euler step h + dt * rhs(h).

    Rejects dt beyond the stability limit unless enforce_stability is off
    (then the caller accepts the blowup risk).
    """
    if dt < 0:
        raise ValueError(f"dt must be nonnegative, got {dt}")
    limit = stable_dt(h, params)
    if enforce_stability and dt > limit * (1.0 + 1e-12):
        raise ValueError(f"dt={dt} exceeds the stability limit {limit}")
    with np.errstate(over="ignore", invalid="ignore"):
        new = h.values + dt * _rhs_values(h, params, sigma_method)
    if not np.all(np.isfinite(new)):
        raise StepError("explicit step produced a non-finite state")
    return Field(h.grid, new)


def solve_cyclic_tridiagonal(
    lower: np.ndarray, diag: np.ndarray, upper: np.ndarray, b: np.ndarray
) -> np.ndarray:
    """Solve the periodic tridiagonal system A x = b.

    Row j reads lower[j]*x[j-1] + diag[j]*x[j] + upper[j]*x[j+1] = b[j] with
    indices wrapping, so lower[0] sits at A[0, n-1] and upper[n-1] at
    A[n-1, 0].  The corner entries are folded away with the rank-one
    Sherman-Morrison update and both resulting systems are handed to the
    banded LAPACK solver in one call.
    """
    n = diag.shape[0]
    corner_low = lower[0]
    corner_up = upper[-1]
    gamma = -diag[0]
    bmod = diag.copy()
    bmod[0] -= gamma
    bmod[-1] -= corner_low * corner_up / gamma

    ab = np.zeros((3, n))
    ab[0, 1:] = upper[:-1]
    ab[1, :] = bmod
    ab[2, :-1] = lower[1:]

    u = np.zeros(n)
    u[0] = gamma
    u[-1] = corner_up
    sol = solve_banded((1, 1), ab, np.column_stack([b, u]))
    y, z = sol[:, 0], sol[:, 1]
    factor = (y[0] + corner_low / gamma * y[-1]) / (1.0 + z[0] + corner_low / gamma * z[-1])
    return y - factor * z


def step_semi_implicit(
    h: Field, dt: float, params: ModelParams, sigma_method: SigmaMethod
) -> Field:
    """One linearized implicit step; unconditionally stable in the diffusion.

    The face coefficient is the chord abs_kappa_mean of the current face
    gradient plus B, frozen for the solve; the nonlocal forcing stays
    explicit (implicit coupling through sigma would make the system dense).
    """
    if dt < 0:
        raise ValueError(f"dt must be nonnegative, got {dt}")
    g = h.grid
    dx = g.dx
    with np.errstate(over="ignore", invalid="ignore"):
        hxf = _forward_diff(h.values, dx)
        c_face = abs_kappa_mean(hxf, params.kappa) + params.cap_b  # at face j+1/2
        c_prev = np.roll(c_face, 1)                                # at face j-1/2

        r = dt * params.alpha1 / dx**2
        lower = -r * c_prev
        upper = -r * c_face
        diag = 1.0 + r * (c_face + c_prev)
        b = h.values + dt * _forcing(h, params, sigma_method)
        if not np.all(np.isfinite(b)):
            raise StepError("semi-implicit forcing produced a non-finite state")
        new = solve_cyclic_tridiagonal(lower, diag, upper, b)
    if not np.all(np.isfinite(new)):
        raise StepError("semi-implicit solve produced a non-finite state")
    return Field(g, new)


def _l2(v: np.ndarray, dx: float) -> float:
    return float(np.sqrt(np.sum(v * v) * dx))


def run(
    h0: Field,
    params: ModelParams,
    cfg: StepperConfig,
    force: bool = False,
) -> Trajectory:
    """Advance h0 to cfg.t_end, recording every snapshot_stride-th state.

    Initial data must pass validate_initial_data unless force is set.  The
    explicit scheme walks at its stability limit (capped by dt_max); the
    semi-implicit scheme uses step-doubling error control, halving dt on
    failure and doubling after a streak of clean steps, clamped to
    [dt_min, dt_max].  If a state stops being finite the trajectory ends at
    the last finite snapshot with diverged = True and a diagnostic.
    """
    report = validate_initial_data(h0, params)
    if not report.passed and not force:
        raise ValueError(f"initial data rejected: {'; '.join(report.messages)}")

    snapshots = [(0.0, h0)]
    dt_history: list[float] = []
    if cfg.t_end == 0.0:
        return Trajectory(params, h0.grid, tuple(snapshots))

    t = 0.0
    h = h0
    steps = 0
    diverged = False
    diagnostic = None

    def wants_snapshot() -> bool:
        return steps % cfg.snapshot_stride == 0

    time_floor = 1e-14 * max(cfg.t_end, 1.0)
    max_steps = int(np.ceil(cfg.t_end / cfg.dt_min)) * 3 + 1000

    if cfg.scheme == "explicit_euler":
        while cfg.t_end - t > time_floor:
            dt = min(
                stable_dt(h, params, cfg.cfl_safety), cfg.dt_max, cfg.t_end - t
            )
            try:
                h = step_explicit(h, dt, params, cfg.sigma_method)
            except StepError as exc:
                diverged, diagnostic = True, f"aborted at t={t:.6g}: {exc}"
                break
            t += dt
            steps += 1
            dt_history.append(dt)
            if wants_snapshot():
                snapshots.append((t, h))
            if steps > max_steps:
                diverged, diagnostic = True, f"step budget exhausted at t={t:.6g}"
                break
    else:
        dt = min(max(cfg.dt_init, cfg.dt_min), cfg.dt_max)
        streak = 0
        while cfg.t_end - t > time_floor:
            dt_try = min(dt, cfg.t_end - t)
            try:
                coarse = step_semi_implicit(h, dt_try, params, cfg.sigma_method)
                half = step_semi_implicit(h, 0.5 * dt_try, params, cfg.sigma_method)
                fine = step_semi_implicit(half, 0.5 * dt_try, params, cfg.sigma_method)
                err = _l2(coarse.values - fine.values, h.grid.dx) / (
                    _l2(fine.values, h.grid.dx) + 1e-30
                )
            except StepError:
                err = np.inf

            if err <= CONTROLLER_RTOL or dt_try <= cfg.dt_min * (1.0 + 1e-12):
                if not np.isfinite(err):
                    diverged = True
                    diagnostic = f"aborted at t={t:.6g}: non-finite state at dt_min"
                    break
                h = fine
                t += dt_try
                steps += 1
                dt_history.append(dt_try)
                if wants_snapshot():
                    snapshots.append((t, h))
                streak += 1
                if streak >= CONTROLLER_GROWTH_STREAK:
                    dt = min(2.0 * dt, cfg.dt_max)
                    streak = 0
            else:
                dt = max(0.5 * dt, cfg.dt_min)
                streak = 0
            if steps > max_steps:
                diverged, diagnostic = True, f"step budget exhausted at t={t:.6g}"
                break

    if snapshots[-1][0] < t:
        snapshots.append((t, h))
    return Trajectory(
        params,
        h0.grid,
        tuple(snapshots),
        tuple(dt_history),
        diverged=diverged,
        diagnostic=diagnostic,
    )
