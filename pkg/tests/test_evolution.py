import numpy as np
import pytest
from dataclasses import replace

from gb_evolve import (
    Field,
    ModelParams,
    SigmaMethod,
    StepperConfig,
    make_grid,
    rhs,
    run,
    stable_dt,
    step_explicit,
    step_semi_implicit,
)
from gb_evolve.evolution import solve_cyclic_tridiagonal

SPECTRAL = SigmaMethod.spectral_oracle()


def drift_params(kappa=0.0):
    return ModelParams(
        alpha1=1.0, alpha2=0.0, alpha3=1.0, cap_b=0.5,
        kappa=kappa, kbeta=1.0, image_terms=8,
    )


def diffusion_params(cap_b=0.5, kappa=0.1):
    return ModelParams(
        alpha1=1.0, alpha2=0.0, alpha3=0.0, cap_b=cap_b,
        kappa=kappa, kbeta=1.0, image_terms=8,
    )


class TestStepperConfig:
    def test_rejects_unknown_scheme(self):
        with pytest.raises(ValueError, match="scheme"):
            StepperConfig(scheme="rk4")

    def test_rejects_bad_dt_ordering(self):
        with pytest.raises(ValueError, match="dt_min"):
            StepperConfig(dt_init=1e-3, dt_min=1e-2, dt_max=1e-1)

    def test_rejects_bad_cfl(self):
        with pytest.raises(ValueError, match="cfl"):
            StepperConfig(cfl_safety=1.5)


class TestRhs:
    def test_constant_degenerate(self):
        g = make_grid(0.0, 2.0 * np.pi, 64)
        h = Field(g, np.full(64, 3.0))
        out = rhs(h, drift_params(kappa=0.0), SPECTRAL)
        np.testing.assert_allclose(out.values, -0.5, atol=1e-15)

    def test_constant_smoothed(self):
        g = make_grid(0.0, 2.0 * np.pi, 64)
        h = Field(g, np.full(64, 3.0))
        out = rhs(h, drift_params(kappa=0.2), SPECTRAL)
        np.testing.assert_allclose(out.values, -(0.2 + 0.5), atol=1e-15)

    def test_sin_conservation_and_sign(self):
        g = make_grid(0.0, 2.0 * np.pi, 128)
        h = Field(g, np.sin(g.x))
        p = ModelParams(
            alpha1=1.0, alpha2=0.0, alpha3=0.0, cap_b=0.0,
            kappa=0.0, kbeta=1.0, image_terms=8,
        )
        out = rhs(h, p, SPECTRAL)
        assert abs(np.sum(out.values) * g.dx) < 1e-13
        at_crest = np.argmin(np.abs(g.x - np.pi / 2))
        assert out.values[at_crest] < 0.0

    def test_matches_pointwise_reference_formula(self):
        # independent scalar-loop evaluation of the same discrete formula
        from gb_evolve.regularization import abs_kappa, flux_kappa

        g = make_grid(0.0, 2.0 * np.pi, 32)
        rng = np.random.default_rng(12)
        vals = rng.normal(size=32)
        h = Field(g, vals)
        p = ModelParams(
            alpha1=1.4, alpha2=0.0, alpha3=0.7, cap_b=0.3,
            kappa=0.2, kbeta=1.0, image_terms=8,
        )
        out = rhs(h, p, SPECTRAL).values

        n, dx = g.n, g.dx
        expected = np.empty(n)
        for j in range(n):
            qp = (vals[(j + 1) % n] - vals[j]) / dx
            qm = (vals[j] - vals[(j - 1) % n]) / dx
            flux_p = flux_kappa(qp, 0.2) + 0.3 * qp
            flux_m = flux_kappa(qm, 0.2) + 0.3 * qm
            q0 = (vals[(j + 1) % n] - vals[(j - 1) % n]) / (2 * dx)
            expected[j] = 1.4 * (flux_p - flux_m) / dx - 0.7 * (abs_kappa(q0, 0.2) + 0.3)
        np.testing.assert_allclose(out, expected, atol=1e-12)


class TestStableDt:
    def test_flat_field_formula(self):
        g = make_grid(0.0, 1.6, 16)  # dx = 0.1
        h = Field(g, np.zeros(16))
        p = diffusion_params(cap_b=0.5, kappa=0.0)
        assert stable_dt(h, p, cfl_safety=1.0) == pytest.approx(0.01, rel=1e-11)

    def test_steeper_halves_dt(self):
        g = make_grid(0.0, 2.0 * np.pi, 256)
        p = diffusion_params(cap_b=0.0, kappa=0.0)
        dt1 = stable_dt(Field(g, np.sin(g.x)), p)
        dt2 = stable_dt(Field(g, 2.0 * np.sin(g.x)), p)
        assert dt1 / dt2 == pytest.approx(2.0, rel=1e-3)

    def test_fully_degenerate_stays_finite(self):
        g = make_grid(0.0, 2.0 * np.pi, 64)
        h = Field(g, np.full(64, 2.0))
        p = diffusion_params(cap_b=0.0, kappa=0.0)
        dt = stable_dt(h, p)
        assert np.isfinite(dt) and dt > 0


class TestStepExplicit:
    def test_exact_constant_drift(self):
        # coarse grid so dt = 0.1 sits inside the parabolic stability limit
        g = make_grid(0.0, 2.0 * np.pi, 16)
        h = Field(g, np.ones(16))
        out = step_explicit(h, 0.1, drift_params(), SPECTRAL)
        np.testing.assert_allclose(out.values, 0.95, atol=1e-15)

    def test_mass_conserved(self):
        g = make_grid(0.0, 2.0 * np.pi, 128)
        h = Field(g, np.sin(g.x))
        p = diffusion_params()
        dt = stable_dt(h, p, 0.5)
        out = step_explicit(h, dt, p, SPECTRAL)
        assert abs(np.sum(out.values) - np.sum(h.values)) * g.dx < 1e-13

    def test_zero_dt_identity(self):
        g = make_grid(0.0, 2.0 * np.pi, 64)
        h = Field(g, np.sin(g.x))
        out = step_explicit(h, 0.0, diffusion_params(), SPECTRAL)
        np.testing.assert_array_equal(out.values, h.values)

    def test_rejects_unstable_dt(self):
        g = make_grid(0.0, 2.0 * np.pi, 128)
        h = Field(g, np.sin(g.x))
        p = diffusion_params()
        with pytest.raises(ValueError, match="stability"):
            step_explicit(h, 10.0 * stable_dt(h, p), p, SPECTRAL)

    def test_stability_check_can_be_disabled(self):
        g = make_grid(0.0, 2.0 * np.pi, 128)
        h = Field(g, np.sin(g.x))
        p = diffusion_params()
        out = step_explicit(
            h, 1.5 * stable_dt(h, p), p, SPECTRAL, enforce_stability=False
        )
        assert np.all(np.isfinite(out.values))


class TestSolveCyclicTridiagonal:
    def test_against_dense_solver(self):
        rng = np.random.default_rng(14)
        for n in (8, 37, 128):
            lower = rng.uniform(-1.0, 0.0, size=n)
            upper = rng.uniform(-1.0, 0.0, size=n)
            diag = 2.0 + np.abs(lower) + np.abs(upper) + rng.uniform(0, 1, n)
            b = rng.normal(size=n)
            dense = np.zeros((n, n))
            for j in range(n):
                dense[j, j] = diag[j]
                dense[j, (j - 1) % n] = lower[j]
                dense[j, (j + 1) % n] = upper[j]
            expected = np.linalg.solve(dense, b)
            got = solve_cyclic_tridiagonal(lower, diag, upper, b)
            np.testing.assert_allclose(got, expected, atol=1e-11)


class TestStepSemiImplicit:
    def test_exact_constant_drift(self):
        g = make_grid(0.0, 2.0 * np.pi, 64)
        h = Field(g, np.ones(64))
        out = step_semi_implicit(h, 0.1, drift_params(), SPECTRAL)
        np.testing.assert_allclose(out.values, 0.95, atol=1e-13)

    def test_mass_conserved(self):
        g = make_grid(0.0, 2.0 * np.pi, 128)
        h = Field(g, np.sin(g.x))
        out = step_semi_implicit(h, 1e-2, diffusion_params(), SPECTRAL)
        assert abs(np.sum(out.values) - np.sum(h.values)) * g.dx < 1e-12

    def test_step_doubling_is_second_order(self):
        g = make_grid(0.0, 2.0 * np.pi, 64)
        h = Field(g, np.sin(g.x))
        p = diffusion_params(cap_b=1.0, kappa=0.5)

        def doubling_defect(dt):
            one = step_semi_implicit(h, dt, p, SPECTRAL).values
            half = step_semi_implicit(h, 0.5 * dt, p, SPECTRAL)
            two = step_semi_implicit(half, 0.5 * dt, p, SPECTRAL).values
            return np.max(np.abs(one - two))

        d1 = doubling_defect(4e-3)
        d2 = doubling_defect(2e-3)
        assert 4.0 * 0.5 < d1 / d2 < 4.0 * 1.5


class TestRun:
    def test_exact_drift_both_schemes(self):
        g = make_grid(0.0, 2.0 * np.pi, 64)
        h0 = Field(g, np.ones(64))
        for scheme in ("explicit_euler", "semi_implicit"):
            cfg = StepperConfig(scheme=scheme, t_end=1.0)
            traj = run(h0, drift_params(), cfg)
            assert np.max(np.abs(traj.final_field.values - 0.5)) < 1e-10
            assert not traj.diverged

    def test_zero_horizon(self):
        g = make_grid(0.0, 2.0 * np.pi, 64)
        h0 = Field(g, np.sin(g.x))
        traj = run(h0, diffusion_params(), StepperConfig(t_end=0.0))
        assert len(traj.snapshots) == 1
        assert traj.snapshots[0][0] == 0.0

    def test_dissipation_and_max_principle(self):
        g = make_grid(0.0, 2.0 * np.pi, 128)
        h0 = Field(g, np.sin(g.x))
        cfg = StepperConfig(t_end=0.5, snapshot_stride=1)
        traj = run(h0, diffusion_params(cap_b=1.0, kappa=0.1), cfg)
        norms = [
            float(np.sqrt(np.sum(f.values**2) * g.dx)) for _, f in traj.snapshots
        ]
        assert all(b <= a + 1e-10 for a, b in zip(norms, norms[1:]))
        for _, f in traj.snapshots:
            assert np.max(f.values) <= 1.0 + 1e-8
            assert np.min(f.values) >= -1.0 - 1e-8

    def test_rejects_invalid_initial_data(self):
        g = make_grid(0.0, 2.0 * np.pi, 64)
        vals = np.zeros(64)
        vals[0] = 10.0
        with pytest.raises(ValueError, match="initial data rejected"):
            run(Field(g, vals), diffusion_params(), StepperConfig(t_end=0.1))

    def test_force_overrides_validation_and_divergence_is_graceful(self):
        g = make_grid(0.0, 2.0 * np.pi, 128)
        saw = Field(g, 0.5 * (-1.0) ** np.arange(128))
        p = diffusion_params(cap_b=0.0, kappa=0.0)
        cfg = StepperConfig(
            scheme="explicit_euler", t_end=1.0, snapshot_stride=1, dt_max=1e-2
        )
        traj = run(saw, p, cfg, force=True)
        assert traj.diverged
        assert "non-finite" in traj.diagnostic
        assert len(traj.snapshots) >= 1
        for _, f in traj.snapshots:
            assert np.all(np.isfinite(f.values))

    def test_temporal_first_order(self):
        g = make_grid(0.0, 2.0 * np.pi, 64)
        h0 = Field(g, np.sin(g.x))
        p = diffusion_params(cap_b=0.5, kappa=0.1)

        def final(dt):
            cfg = StepperConfig(
                dt_init=dt, dt_min=dt, dt_max=dt, t_end=0.25, snapshot_stride=10**9
            )
            return run(h0, p, cfg).final_field.values

        ref = final(1.25e-4)
        errs = [np.max(np.abs(final(dt) - ref)) for dt in (4e-3, 2e-3)]
        order = np.log2(errs[0] / errs[1])
        assert order > 0.9

    def test_spatial_second_order(self):
        p = ModelParams(
            alpha1=1.0, alpha2=0.0, alpha3=0.0, cap_b=1.0,
            kappa=0.5, kbeta=1.0, image_terms=8,
        )

        def final(n):
            g = make_grid(0.0, 2.0 * np.pi, n)
            h0 = Field(g, np.sin(g.x))
            cfg = StepperConfig(
                dt_init=2e-4, dt_min=2e-4, dt_max=2e-4,
                t_end=0.25, snapshot_stride=10**9,
            )
            return run(h0, p, cfg).final_field.values

        fine = final(128)
        e32 = np.max(np.abs(final(32) - fine[::4]))
        e64 = np.max(np.abs(final(64) - fine[::2]))
        assert 4.0 * 0.7 <= e32 / e64 <= 4.0 * 1.3

    def test_explicit_mass_constant_along_run(self):
        g = make_grid(0.0, 2.0 * np.pi, 128)
        h0 = Field(g, np.sin(g.x))
        cfg = StepperConfig(scheme="explicit_euler", t_end=0.2, snapshot_stride=20)
        traj = run(h0, diffusion_params(), cfg)
        masses = [float(np.sum(f.values) * g.dx) for _, f in traj.snapshots]
        assert max(abs(m - masses[0]) for m in masses) < 1e-12

    def test_dt_history_recorded(self):
        g = make_grid(0.0, 2.0 * np.pi, 64)
        h0 = Field(g, np.sin(g.x))
        traj = run(h0, diffusion_params(), StepperConfig(t_end=0.05))
        assert len(traj.dt_history) > 0
        assert sum(traj.dt_history) == pytest.approx(0.05, rel=1e-12)

    def test_deterministic(self):
        g = make_grid(0.0, 2.0 * np.pi, 64)
        h0 = Field(g, np.sin(g.x))
        p = replace(diffusion_params(), alpha2=0.05, alpha3=0.1)
        cfg = StepperConfig(t_end=0.2, sigma_method=SigmaMethod.direct_pv())
        t1 = run(h0, p, cfg)
        t2 = run(h0, p, cfg)
        assert np.array_equal(t1.values_matrix(), t2.values_matrix())
        assert t1.times.tolist() == t2.times.tolist()
