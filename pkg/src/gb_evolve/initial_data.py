"""Named initial-datum presets and optional spectral smoothing."""

from __future__ import annotations

import numpy as np

from .core import Field, Grid

__all__ = ["PRESETS", "make_initial", "fourier_lowpass"]


def constant(grid: Grid, value: float = 1.0) -> Field:
    return Field(grid, np.full(grid.n, value))


def sine(grid: Grid, amplitude: float = 1.0, mode: int = 1) -> Field:
    phase = 2.0 * np.pi * mode * (grid.x - grid.a) / grid.length
    return Field(grid, amplitude * np.sin(phase))


def multi_mode(grid: Grid) -> Field:
    """Three incommensurate-amplitude modes; smooth but not sign-symmetric."""
    phase = 2.0 * np.pi * (grid.x - grid.a) / grid.length
    return Field(
        grid, np.sin(phase) + 0.5 * np.cos(2.0 * phase) + 0.25 * np.sin(3.0 * phase)
    )


def flat_bump(grid: Grid) -> Field:
    """C^1 bump with a genuinely flat half: max(0, sin)^2 of the unit phase.

    The flat region has h_x = 0 identically, which is where the equation
    degenerates when B = 0, so this is the corner-forming default.
    """
    phase = 2.0 * np.pi * (grid.x - grid.a) / grid.length
    return Field(grid, np.maximum(0.0, np.sin(phase)) ** 2)


PRESETS = {
    "constant": constant,
    "sine": sine,
    "multi_mode": multi_mode,
    "flat_bump": flat_bump,
}


def make_initial(name: str, grid: Grid) -> Field:
    try:
        return PRESETS[name](grid)
    except KeyError:
        raise ValueError(
            f"unknown initial-datum preset {name!r}; choices: {sorted(PRESETS)}"
        ) from None


def fourier_lowpass(f: Field, max_mode: int) -> Field:
    """Drop every Fourier mode above max_mode (optional initial smoothing)."""
    if max_mode < 0:
        raise ValueError(f"max_mode must be nonnegative, got {max_mode}")
    coeff = np.fft.rfft(f.values)
    coeff[max_mode + 1:] = 0.0
    return Field(f.grid, np.fft.irfft(coeff, n=f.grid.n))
