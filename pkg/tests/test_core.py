import numpy as np
import pytest

from gb_evolve import (
    Field,
    ModelParams,
    Trajectory,
    derivative_x,
    make_grid,
    second_derivative_x,
    validate_initial_data,
)


class TestMakeGrid:
    def test_spacing(self):
        g = make_grid(0.0, 2.0 * np.pi, 16)
        assert g.dx == pytest.approx(np.pi / 8, rel=1e-15)
        assert g.x[0] == 0.0
        assert len(g.x) == 16

    def test_rejects_odd_n(self):
        with pytest.raises(ValueError, match="even"):
            make_grid(0.0, 1.0, 9)

    def test_rejects_empty_domain(self):
        with pytest.raises(ValueError, match="empty"):
            make_grid(1.0, 1.0, 16)

    def test_rejects_tiny_n(self):
        with pytest.raises(ValueError, match=">= 8"):
            make_grid(0.0, 1.0, 6)


class TestField:
    def test_rejects_wrong_length(self):
        g = make_grid(0.0, 1.0, 16)
        with pytest.raises(ValueError, match="shape"):
            Field(g, np.zeros(8))

    def test_rejects_non_finite(self):
        g = make_grid(0.0, 1.0, 16)
        vals = np.zeros(16)
        vals[3] = np.inf
        with pytest.raises(ValueError, match="finite"):
            Field(g, vals)

    def test_values_are_frozen(self):
        g = make_grid(0.0, 1.0, 16)
        f = Field(g, np.zeros(16))
        with pytest.raises(ValueError):
            f.values[0] = 1.0

    def test_copies_input(self):
        g = make_grid(0.0, 1.0, 16)
        src = np.zeros(16)
        f = Field(g, src)
        src[0] = 5.0
        assert f.values[0] == 0.0


class TestModelParams:
    def test_rejects_bad_ranges(self):
        with pytest.raises(ValueError, match="alpha1"):
            ModelParams(-1.0, 0.0, 0.0, 0.5, 0.1, 1.0, 8)
        with pytest.raises(ValueError, match="kappa"):
            ModelParams(1.0, 0.0, 0.0, 0.5, 1.5, 1.0, 8)
        with pytest.raises(ValueError, match="cap_b"):
            ModelParams(1.0, 0.0, 0.0, 2.0, 0.1, 1.0, 8)
        with pytest.raises(ValueError, match="image_terms"):
            ModelParams(1.0, 0.0, 0.0, 0.5, 0.1, 1.0, 0)

    def test_dominance_warning(self):
        with pytest.warns(UserWarning, match="dominate"):
            p = ModelParams(1.0, 0.5, 0.0, 0.5, 0.1, 1.0, 8)
        assert not p.in_dominance_regime

    def test_dominance_ok_is_silent(self):
        import warnings

        with warnings.catch_warnings():
            warnings.simplefilter("error")
            p = ModelParams(1.0, 0.05, 0.0, 0.5, 0.1, 1.0, 8)
        assert p.in_dominance_regime


class TestDerivatives:
    def test_constant_gives_exact_zero(self):
        g = make_grid(0.0, 2.0 * np.pi, 64)
        d = derivative_x(Field(g, np.ones(64)))
        assert np.all(d.values == 0.0)

    def test_sin_derivative_accuracy(self):
        g = make_grid(0.0, 2.0 * np.pi, 256)
        d = derivative_x(Field(g, np.sin(g.x)))
        assert np.max(np.abs(d.values - np.cos(g.x))) < 1e-3

    def test_second_order_convergence(self):
        errs = []
        for n in (256, 512):
            g = make_grid(0.0, 2.0 * np.pi, n)
            d = derivative_x(Field(g, np.sin(g.x)))
            errs.append(np.max(np.abs(d.values - np.cos(g.x))))
        ratio = errs[0] / errs[1]
        assert 4.0 * 0.9 < ratio < 4.0 * 1.1

    def test_nyquist_mode_annihilated(self):
        g = make_grid(0.0, 2.0 * np.pi, 64)
        saw = Field(g, (-1.0) ** np.arange(64))
        assert np.all(derivative_x(saw).values == 0.0)

    def test_linearity(self):
        g = make_grid(0.0, 2.0 * np.pi, 64)
        rng = np.random.default_rng(7)
        f, h = rng.normal(size=64), rng.normal(size=64)
        lhs = derivative_x(Field(g, 2.0 * f - 3.0 * h)).values
        rhs = 2.0 * derivative_x(Field(g, f)).values - 3.0 * derivative_x(Field(g, h)).values
        np.testing.assert_allclose(lhs, rhs, atol=1e-13)

    def test_telescoping_sum(self):
        # periodic centered differences sum to zero up to roundoff
        g = make_grid(0.0, 2.0 * np.pi, 128)
        rng = np.random.default_rng(11)
        f = Field(g, rng.normal(size=128))
        total = np.sum(derivative_x(f).values) * g.dx
        assert abs(total) < 1e-13

    def test_second_derivative_constant(self):
        g = make_grid(0.0, 2.0 * np.pi, 64)
        d2 = second_derivative_x(Field(g, 5.0 * np.ones(64)))
        assert np.all(d2.values == 0.0)

    def test_second_derivative_sin(self):
        g = make_grid(0.0, 2.0 * np.pi, 256)
        d2 = second_derivative_x(Field(g, np.sin(g.x)))
        assert np.max(np.abs(d2.values + np.sin(g.x))) < 1e-3

    def test_second_derivative_refinement(self):
        errs = []
        for n in (256, 512):
            g = make_grid(0.0, 2.0 * np.pi, n)
            d2 = second_derivative_x(Field(g, np.sin(g.x)))
            errs.append(np.max(np.abs(d2.values + np.sin(g.x))))
        assert 3.5 < errs[0] / errs[1] < 4.5

    def test_hat_kink_values_finite(self):
        g = make_grid(0.0, 2.0 * np.pi, 64)
        hat = Field(g, np.maximum(0.0, 1.0 - np.abs(g.x - np.pi)))
        d2 = second_derivative_x(hat)
        assert np.all(np.isfinite(d2.values))
        # the kink shows up as a large second difference
        assert np.max(np.abs(d2.values)) > 1.0 / g.dx


class TestTrajectory:
    def test_requires_increasing_times(self, grid_2pi, params_plain):
        f = Field(grid_2pi, np.zeros(grid_2pi.n))
        with pytest.raises(ValueError, match="increasing"):
            Trajectory(params_plain, grid_2pi, ((0.0, f), (0.0, f)))

    def test_requires_zero_start(self, grid_2pi, params_plain):
        f = Field(grid_2pi, np.zeros(grid_2pi.n))
        with pytest.raises(ValueError, match="must be 0"):
            Trajectory(params_plain, grid_2pi, ((0.5, f),))

    def test_requires_shared_grid(self, grid_2pi, params_plain):
        other = make_grid(0.0, 1.0, 16)
        f0 = Field(grid_2pi, np.zeros(grid_2pi.n))
        f1 = Field(other, np.zeros(other.n))
        with pytest.raises(ValueError, match="grid"):
            Trajectory(params_plain, grid_2pi, ((0.0, f0), (1.0, f1)))


class TestValidateInitialData:
    def test_smooth_periodic_passes(self, grid_2pi, params_plain):
        report = validate_initial_data(Field(grid_2pi, np.sin(grid_2pi.x)), params_plain)
        assert report.passed
        assert report.seam_ok
        assert report.h1_finite

    def test_seam_jump_fails_with_flag(self, grid_2pi, params_plain):
        vals = np.zeros(grid_2pi.n)
        vals[0] = 10.0
        report = validate_initial_data(Field(grid_2pi, vals), params_plain)
        assert not report.passed
        assert not report.seam_ok
        assert any("seam" in m for m in report.messages)

    def test_interior_hat_passes(self, grid_2pi, params_plain):
        # kinks away from the seam are fine: H1 data is admissible
        hat = np.maximum(0.0, 1.0 - np.abs(grid_2pi.x - np.pi))
        report = validate_initial_data(Field(grid_2pi, hat), params_plain)
        assert report.passed
        assert np.isfinite(report.h1_norm)
