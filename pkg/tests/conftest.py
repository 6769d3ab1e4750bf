import numpy as np
import pytest

from gb_evolve import Field, ModelParams, make_grid


@pytest.fixture
def grid_2pi():
    return make_grid(0.0, 2.0 * np.pi, 256)


@pytest.fixture
def params_plain():
    """Forcing-free parameters with smooth coefficients."""
    return ModelParams(
        alpha1=1.0, alpha2=0.0, alpha3=0.0, cap_b=0.5,
        kappa=0.1, kbeta=1.0, image_terms=8,
    )


@pytest.fixture
def params_dominance():
    """Full model in the dominance regime used by the sweep studies."""
    return ModelParams(
        alpha1=1.0, alpha2=0.05, alpha3=0.1, cap_b=0.5,
        kappa=0.1, kbeta=1.0, image_terms=64,
    )


def sine_field(grid, amplitude=1.0, mode=1):
    phase = 2.0 * np.pi * mode * (grid.x - grid.a) / grid.length
    return Field(grid, amplitude * np.sin(phase))
