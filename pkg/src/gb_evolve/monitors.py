"""Norms, estimate ladder, and weak-form residuals for finished trajectories.

Everything here reads a Trajectory as an object in its own right: time
derivatives come from snapshot differencing (never from stepper internals),
spatial derivatives from the centered operators in core, time integrals from
the trapezoid rule over the snapshot times, and the L^{4/3} space-time norm
of h_t from piecewise-constant differencing on each snapshot interval.

The negative-order norm used for the flux time derivative is evaluated
spectrally with the multiplier (1 + xi^2)^{-1}, xi = 2 pi k / L, which is
bounded by one, so the norm never exceeds the plain L2 norm.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import Field, Trajectory, derivative_x, second_derivative_x
from .regularization import abs_kappa, flux_kappa
from .stress import SigmaMethod, sigma_total

__all__ = [
    "lp_norm",
    "h_minus2_norm",
    "EstimateReport",
    "build_report",
    "TestFunction",
    "builtin_test_functions",
    "weak_residual",
    "weak_residual_suite",
    "flux_time_derivative_norm",
]


def lp_norm(f: Field, p: float) -> float:
    """Discrete L^p norm (sum |f_j|^p dx)^(1/p); p must be >= 1."""
    if p < 1:
        raise ValueError(f"p must be >= 1, got {p}")
    return float(np.sum(np.abs(f.values) ** p) * f.grid.dx) ** (1.0 / p)


def h_minus2_norm(f: Field) -> float:
    """Spectral negative-order norm (sum_k |f_k|^2 / (1 + (2 pi k/L)^2)^2)^(1/2).

    Normalized so that a multiplier of one reproduces the discrete L2 norm;
    the actual multiplier is <= 1, hence h_minus2_norm(f) <= lp_norm(f, 2).
    """
    n = f.grid.n
    length = f.grid.length
    coeff = np.fft.rfft(f.values) / n
    k = np.arange(coeff.shape[0])
    weight = 1.0 / (1.0 + (2.0 * np.pi * k / length) ** 2)
    # rfft folds conjugate modes: double every bin except mean and Nyquist
    mult = np.full(coeff.shape, 2.0)
    mult[0] = 1.0
    mult[-1] = 1.0
    power = float(np.sum(mult * (weight * np.abs(coeff)) ** 2))
    return float(np.sqrt(length * power))


@dataclass(frozen=True)
class EstimateReport:
    """Values of every monitored inequality for one trajectory.

    sup_l2_h        sup_t ||h(t)||^2
    int_l3_hx       time integral of ||h_x||_{L3}^3
    sup_l2_hx       sup_t ||h_x(t)||^2
    weighted_h2     time integral of int (|h_x|_kappa + B) |h_xx|^2 dx
    l43_ht          ||h_t||_{L^{4/3}} over space-time
    l43_flux_grad   time integral of ||(|h_x| h_x)_x||_{L^{4/3}}^{4/3}
    l83_linf_hx     time integral of ||h_x||_{Linf}^{8/3}
    corner_metric   sup over snapshots of max_j |h_xx| (corner indicator)
    mixed_flux_form time integral of int (flux_kappa(h_x) + B h_x) h_x dx,
                    emitted for completeness next to its lower bound
                    int_l3_hx / 2
    """

    sup_l2_h: float
    int_l3_hx: float
    sup_l2_hx: float
    weighted_h2: float
    l43_ht: float
    l43_flux_grad: float
    l83_linf_hx: float
    corner_metric: float
    mixed_flux_form: float

    FIELD_NAMES = (
        "sup_l2_h",
        "int_l3_hx",
        "sup_l2_hx",
        "weighted_h2",
        "l43_ht",
        "l43_flux_grad",
        "l83_linf_hx",
        "corner_metric",
        "mixed_flux_form",
    )

    def as_dict(self) -> dict:
        return {name: getattr(self, name) for name in self.FIELD_NAMES}


def build_report(traj: Trajectory) -> EstimateReport:
    """Evaluate every monitored quantity on a trajectory.

    A single-snapshot trajectory yields zero time integrals and sup fields
    from the lone snapshot.
    """
    params = traj.params
    dx = traj.grid.dx
    times = traj.times
    fields = [f for _, f in traj.snapshots]
    hx = [derivative_x(f) for f in fields]
    hxx = [second_derivative_x(f) for f in fields]

    sup_l2_h = max(lp_norm(f, 2) ** 2 for f in fields)
    sup_l2_hx = max(lp_norm(g, 2) ** 2 for g in hx)
    corner = max(float(np.max(np.abs(g.values))) for g in hxx)

    l3_cubed = np.array([lp_norm(g, 3) ** 3 for g in hx])
    weighted = np.array(
        [
            float(
                np.sum(
                    (abs_kappa(g.values, params.kappa) + params.cap_b)
                    * w.values**2
                )
                * dx
            )
            for g, w in zip(hx, hxx)
        ]
    )
    flux_grad = np.array(
        [
            lp_norm(derivative_x(Field(traj.grid, np.abs(g.values) * g.values)), 4.0 / 3.0)
            ** (4.0 / 3.0)
            for g in hx
        ]
    )
    linf = np.array([float(np.max(np.abs(g.values))) ** (8.0 / 3.0) for g in hx])
    mixed = np.array(
        [
            float(
                np.sum(
                    (flux_kappa(g.values, params.kappa) + params.cap_b * g.values)
                    * g.values
                )
                * dx
            )
            for g in hx
        ]
    )

    if len(fields) >= 2:
        int_l3_hx = float(np.trapezoid(l3_cubed, times))
        weighted_h2 = float(np.trapezoid(weighted, times))
        l43_flux_grad = float(np.trapezoid(flux_grad, times))
        l83_linf_hx = float(np.trapezoid(linf, times))
        mixed_flux_form = float(np.trapezoid(mixed, times))
        ht_power = 0.0
        for m in range(len(fields) - 1):
            dt = times[m + 1] - times[m]
            rate = (fields[m + 1].values - fields[m].values) / dt
            ht_power += dt * float(np.sum(np.abs(rate) ** (4.0 / 3.0)) * dx)
        l43_ht = ht_power ** (3.0 / 4.0)
    else:
        int_l3_hx = weighted_h2 = l43_flux_grad = l83_linf_hx = 0.0
        mixed_flux_form = 0.0
        l43_ht = 0.0

    return EstimateReport(
        sup_l2_h=float(sup_l2_h),
        int_l3_hx=int_l3_hx,
        sup_l2_hx=float(sup_l2_hx),
        weighted_h2=weighted_h2,
        l43_ht=l43_ht,
        l43_flux_grad=l43_flux_grad,
        l83_linf_hx=l83_linf_hx,
        corner_metric=float(corner),
        mixed_flux_form=mixed_flux_form,
    )


@dataclass(frozen=True)
class TestFunction:
    """Separable test function trig(2 pi mode (x-a)/L) * ((t_end - t)/t_end)^tpower.

    Smooth, periodic in x, and vanishing at t = t_end as the weak form
    requires.
    """

    a: float
    length: float
    t_end: float
    mode: int
    use_sin: bool
    tpower: int

    def _trig(self, x: np.ndarray) -> np.ndarray:
        arg = 2.0 * np.pi * self.mode * (x - self.a) / self.length
        return np.sin(arg) if self.use_sin else np.cos(arg)

    def _trig_dx(self, x: np.ndarray) -> np.ndarray:
        wavenumber = 2.0 * np.pi * self.mode / self.length
        arg = wavenumber * (x - self.a)
        return wavenumber * (np.cos(arg) if self.use_sin else -np.sin(arg))

    def _cutoff(self, t: float) -> float:
        return ((self.t_end - t) / self.t_end) ** self.tpower

    def _cutoff_dt(self, t: float) -> float:
        return -self.tpower * ((self.t_end - t) / self.t_end) ** (self.tpower - 1) / self.t_end

    def value(self, t: float, x: np.ndarray) -> np.ndarray:
        return self._cutoff(t) * self._trig(x)

    def dt(self, t: float, x: np.ndarray) -> np.ndarray:
        return self._cutoff_dt(t) * self._trig(x)

    def dx(self, t: float, x: np.ndarray) -> np.ndarray:
        return self._cutoff(t) * self._trig_dx(x)


def builtin_test_functions(
    grid, t_end: float, modes=(1, 2, 3), tpowers=(1, 2)
) -> list[TestFunction]:
    """Well-conditioned family: low Fourier modes times polynomial cutoffs."""
    fams = []
    for mode in modes:
        for use_sin in (False, True):
            for tp in tpowers:
                fams.append(
                    TestFunction(grid.a, grid.length, t_end, mode, use_sin, tp)
                )
    return fams


def weak_residual(
    traj: Trajectory,
    phi: TestFunction,
    params,
    degenerate: bool = False,
    sigma_method: SigmaMethod | None = None,
) -> float:
    """Absolute value of the integrated-by-parts identity tested against phi.

    Evaluates (h, phi_t) - alpha1 (flux_kappa(h_x) + B h_x, phi_x)
    - ((alpha2 sigma + alpha3)(|h_x|_kappa + B), phi) + (h0, phi(0)) by
    space-time trapezoid quadrature over the snapshots, with kappa taken
    from params so the identity matches the equation the trajectory solves
    (a residual against a different kappa would plateau at the smoothing
    defect instead of vanishing under refinement).  At kappa = 0 the flux
    term is exactly (1/2)(|h_x| h_x + 2 B h_x, phi_x), the weak-solution
    pairing.  degenerate drops the B terms, the identity satisfied by
    fully degenerate runs.  phi must vanish at the trajectory's final time.
    """
    if sigma_method is None:
        sigma_method = SigmaMethod.spectral_oracle()
    grid = traj.grid
    x = grid.x
    dx = grid.dx
    times = traj.times
    t_final = float(times[-1])
    if np.max(np.abs(phi.value(t_final, x))) > 1e-12:
        raise ValueError("test function must vanish at the final time")

    cap_b = 0.0 if degenerate else params.cap_b
    integrand = np.empty(len(times))
    for m, (t, f) in enumerate(traj.snapshots):
        hx = derivative_x(f).values
        flux = flux_kappa(hx, params.kappa)
        if params.alpha2 == 0.0:
            drive = params.alpha3
        else:
            sigma = sigma_total(Field(grid, hx), params, sigma_method).values
            drive = params.alpha2 * sigma + params.alpha3
        term_t = np.sum(f.values * phi.dt(t, x)) * dx
        term_flux = (
            params.alpha1 * np.sum((flux + cap_b * hx) * phi.dx(t, x)) * dx
        )
        amplitude = abs_kappa(hx, params.kappa) + cap_b
        term_force = np.sum(drive * amplitude * phi.value(t, x)) * dx
        integrand[m] = term_t - term_flux - term_force
    total = float(np.trapezoid(integrand, times))
    total += float(np.sum(traj.snapshots[0][1].values * phi.value(0.0, x)) * dx)
    return abs(total)


def weak_residual_suite(
    traj: Trajectory, params, degenerate: bool = False
) -> float:
    """Worst residual over the built-in test-function family."""
    fams = builtin_test_functions(traj.grid, traj.final_time)
    return max(weak_residual(traj, phi, params, degenerate) for phi in fams)


def flux_time_derivative_norm(traj: Trajectory) -> float:
    """Time-integrated negative-order norm of d/dt (|h_x| h_x).

    Computed per snapshot interval as the h^{-2} norm of the increment of
    w = |h_x| h_x (the dt from the difference quotient cancels against the
    time integration), so the result is sum_m ||w_{m+1} - w_m||_{-2}.
    """
    fields = [f for _, f in traj.snapshots]
    if len(fields) < 2:
        return 0.0
    w = []
    for f in fields:
        hx = derivative_x(f).values
        w.append(np.abs(hx) * hx)
    total = 0.0
    for m in range(len(w) - 1):
        total += h_minus2_norm(Field(traj.grid, w[m + 1] - w[m]))
    return float(total)
