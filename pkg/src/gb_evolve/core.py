"""Model parameters, periodic grid, sampled fields, and initial-data validation.

The moving interface is described by a height profile h(t, x) over a periodic
interval (a, d).  Everything downstream (stress quadrature, time stepping,
monitors) works on uniform point samples of h and its finite-difference
derivatives, so this module fixes the conventions once:

* grids are uniform with n points x_j = a + j*dx, dx = (d - a)/n, and the
  point with index n is identified with index 0;
* fields are point samples (not cell averages);
* derivative_x is the centered difference, second_derivative_x the standard
  three-point second difference, both periodic.

All types are immutable after construction and all operations are pure, so
values can be shared freely across threads.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "ModelParams",
    "Grid",
    "Field",
    "Trajectory",
    "ValidationReport",
    "make_grid",
    "derivative_x",
    "second_derivative_x",
    "validate_initial_data",
]


@dataclass(frozen=True)
class ModelParams:
    """Dimensionless coefficients of the interface equation.

    alpha1      coefficient of the degenerate diffusion term (> 0)
    alpha2      coefficient multiplying the nonlocal stress (>= 0)
    alpha3      constant driving force
    cap_b       equilibrium disconnection density, in [0, 1]; 0 degenerates
                the equation wherever h_x = 0
    kappa       smoothing parameter of the regularized |.|, in [0, 1];
                0 selects the exact (degenerate) absolute value
    kbeta       strength of the singular interaction kernel (> 0)
    image_terms truncation count of the periodic-image series (>= 1)
    dominance_factor
                alpha1 must exceed dominance_factor * alpha2 for the
                energy estimates to be meaningful; violating it only warns
    """

    alpha1: float
    alpha2: float
    alpha3: float
    cap_b: float
    kappa: float
    kbeta: float
    image_terms: int
    dominance_factor: float = 10.0

    def __post_init__(self):
        if not self.alpha1 > 0:
            raise ValueError(f"alpha1 must be positive, got {self.alpha1}")
        if self.alpha2 < 0:
            raise ValueError(f"alpha2 must be nonnegative, got {self.alpha2}")
        if not 0.0 <= self.kappa <= 1.0:
            raise ValueError(f"kappa must lie in [0, 1], got {self.kappa}")
        if not 0.0 <= self.cap_b <= 1.0:
            raise ValueError(f"cap_b must lie in [0, 1], got {self.cap_b}")
        if not self.kbeta > 0:
            raise ValueError(f"kbeta must be positive, got {self.kbeta}")
        if int(self.image_terms) != self.image_terms or self.image_terms < 1:
            raise ValueError(f"image_terms must be a positive integer, got {self.image_terms}")
        if self.dominance_factor <= 0:
            raise ValueError("dominance_factor must be positive")
        if not self.in_dominance_regime:
            warnings.warn(
                f"alpha1={self.alpha1} does not dominate alpha2={self.alpha2} "
                f"by the factor {self.dominance_factor}; energy estimates may not close",
                stacklevel=2,
            )

    @property
    def in_dominance_regime(self) -> bool:
        return self.alpha1 >= self.dominance_factor * self.alpha2


@dataclass(frozen=True)
class Grid:
    """Uniform periodic discretization of the interval (a, d).

    n must be even (the spectral stress oracle needs a symmetric mode
    layout) and at least 8.
    """

    a: float
    d: float
    n: int

    def __post_init__(self):
        if not self.d > self.a:
            raise ValueError(f"domain is empty: d={self.d} <= a={self.a}")
        if self.n < 8:
            raise ValueError(f"n must be >= 8, got {self.n}")
        if self.n % 2 != 0:
            raise ValueError(f"n must be even, got {self.n}")

    @property
    def length(self) -> float:
        return self.d - self.a

    @property
    def dx(self) -> float:
        return (self.d - self.a) / self.n

    @property
    def x(self) -> np.ndarray:
        pts = self.a + self.dx * np.arange(self.n)
        pts.setflags(write=False)
        return pts


def make_grid(a: float, d: float, n: int) -> Grid:
    """Build a uniform periodic grid with points x_j = a + j*dx."""
    return Grid(float(a), float(d), int(n))


@dataclass(frozen=True)
class Field:
    """Point samples of a periodic function on a Grid.

    values has length grid.n and must be entirely finite; the array is
    copied on construction and frozen.
    """

    grid: Grid
    values: np.ndarray

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=float).copy()
        if vals.shape != (self.grid.n,):
            raise ValueError(
                f"values must have shape ({self.grid.n},), got {vals.shape}"
            )
        if not np.all(np.isfinite(vals)):
            raise ValueError("field values must all be finite")
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)

    def with_values(self, values: np.ndarray) -> "Field":
        return Field(self.grid, values)


@dataclass(frozen=True)
class Trajectory:
    """Time-ordered snapshots of one simulation, with the inputs that made it.

    snapshots is a tuple of (time, Field) pairs with strictly increasing
    times starting at 0, all on the same grid.  diverged marks a run that
    was cut short when the state stopped being finite; diagnostic then says
    where.
    """

    params: ModelParams
    grid: Grid
    snapshots: tuple
    dt_history: tuple = ()
    diverged: bool = False
    diagnostic: str | None = None

    def __post_init__(self):
        snaps = tuple(self.snapshots)
        if not snaps:
            raise ValueError("trajectory needs at least one snapshot")
        times = [t for t, _ in snaps]
        if times[0] != 0.0:
            raise ValueError(f"first snapshot time must be 0, got {times[0]}")
        if any(t2 <= t1 for t1, t2 in zip(times, times[1:])):
            raise ValueError("snapshot times must be strictly increasing")
        for _, f in snaps:
            if f.grid != self.grid:
                raise ValueError("all snapshots must share the trajectory grid")
        object.__setattr__(self, "snapshots", snaps)
        object.__setattr__(self, "dt_history", tuple(self.dt_history))

    @property
    def times(self) -> np.ndarray:
        return np.array([t for t, _ in self.snapshots])

    @property
    def final_time(self) -> float:
        return self.snapshots[-1][0]

    @property
    def final_field(self) -> Field:
        return self.snapshots[-1][1]

    def values_matrix(self) -> np.ndarray:
        """Snapshot values stacked as an (n_snapshots, n) array."""
        return np.stack([f.values for _, f in self.snapshots])


def derivative_x(f: Field) -> Field:
    """Centered periodic difference (f_{j+1} - f_{j-1}) / (2 dx).

    Second-order accurate for smooth periodic data; annihilates constants
    exactly and the sawtooth (Nyquist) mode identically.
    """
    v = f.values
    dx = f.grid.dx
    return Field(f.grid, (np.roll(v, -1) - np.roll(v, 1)) / (2.0 * dx))


def second_derivative_x(f: Field) -> Field:
    """Periodic three-point second difference (f_{j+1} - 2 f_j + f_{j-1}) / dx^2."""
    v = f.values
    dx = f.grid.dx
    return Field(f.grid, (np.roll(v, -1) - 2.0 * v + np.roll(v, 1)) / dx**2)


@dataclass(frozen=True)
class ValidationReport:
    """Outcome of the initial-data checks; failures are carried, not raised."""

    passed: bool
    seam_ok: bool
    h1_finite: bool
    h1_norm: float
    seam_mismatch: float
    seam_tolerance: float
    messages: tuple = field(default_factory=tuple)


def validate_initial_data(h0: Field, params: ModelParams) -> ValidationReport:
    """Check that h0 is admissible initial data on its periodic grid.

    Periodicity of the values is automatic (one period is stored).  What can
    go wrong is the seam: the one-sided derivative estimated at the left
    endpoint must agree with the one estimated at the right endpoint, where
    the right endpoint value is the wrapped sample h(d) = h(a).  A mismatch
    means the sampled function is not a periodic C^1 profile (e.g. a jump
    was encoded at index 0).  Interior kinks are fine: weak solutions only
    need a finite discrete H^1 norm, which is also reported.
    """
    v = h0.values
    n = h0.grid.n
    dx = h0.grid.dx

    # Second-order one-sided slopes at the two ends of the stored period.
    left_slope = (-3.0 * v[0] + 4.0 * v[1] - v[2]) / (2.0 * dx)
    right_slope = (3.0 * v[0] - 4.0 * v[n - 1] + v[n - 2]) / (2.0 * dx)
    mismatch = abs(left_slope - right_slope)

    # Scale from centered slopes whose stencils avoid the seam entirely.
    interior = (v[3:n - 1] - v[1:n - 3]) / (2.0 * dx)
    scale = 1.0 + (np.max(np.abs(interior)) if interior.size else 0.0)
    tol = 10.0 * dx * scale
    seam_ok = mismatch <= tol

    forward = (np.roll(v, -1) - v) / dx
    h1_sq = float(np.sum(v * v) * dx + np.sum(forward * forward) * dx)
    h1_norm = float(np.sqrt(h1_sq))
    h1_finite = bool(np.isfinite(h1_norm))

    messages = []
    if not seam_ok:
        messages.append(
            f"seam derivative mismatch {mismatch:.3e} exceeds tolerance {tol:.3e}"
        )
    if not h1_finite:
        messages.append("discrete H1 norm is not finite")

    return ValidationReport(
        passed=seam_ok and h1_finite,
        seam_ok=seam_ok,
        h1_finite=h1_finite,
        h1_norm=h1_norm,
        seam_mismatch=float(mismatch),
        seam_tolerance=float(tol),
        messages=tuple(messages),
    )
