"""Configuration parsing, trajectory/report persistence, and the command line.

Config files are flat JSON documents; unknown keys are hard errors so a
misspelled parameter can never silently fall back to a default.  Field data
goes to CSV ("t,x,h", 17 significant digits, time-major rows) and reports to
JSON with full provenance.  Both carry a schema version; every output is
reproducible byte for byte from its config apart from the one timestamp
field in reports.

Subcommands: simulate, sweep-kappa, sweep-b, verify-estimates,
twin-stability, hilbert-test.  Exit code 0 means every check passed, 1 a
failed check or diverged run, 2 a configuration problem.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import sys
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import __version__
from .core import Field, Grid, ModelParams, Trajectory, make_grid
from .evolution import StepperConfig, run
from .initial_data import PRESETS, fourier_lowpass, make_initial
from .monitors import (
    EstimateReport,
    build_report,
    flux_time_derivative_norm,
    h_minus2_norm,
    lp_norm,
)
from .stress import (
    SigmaMethod,
    lp_boundedness_probe,
    sigma_spectral_oracle,
    sigma_total,
)
from .studies import b_sweep, fit_growth_envelope, kappa_sweep, twin_stability

TRAJECTORY_SCHEMA = "gb-evolve/trajectory/1"
REPORT_SCHEMA = "gb-evolve/report/1"

_DEFAULTS = {
    # model
    "alpha1": 1.0,
    "alpha2": 0.0,
    "alpha3": 0.0,
    "cap_b": 0.5,
    "kappa": 0.1,
    "kbeta": 1.0,
    "image_terms": 64,
    "dominance_factor": 10.0,
    # grid
    "a": 0.0,
    "d": 2.0 * np.pi,
    "n": 256,
    # stepper
    "scheme": "semi_implicit",
    "dt_init": 1e-3,
    "dt_min": 1e-9,
    "dt_max": 1e-2,
    "cfl_safety": 0.9,
    "t_end": 1.0,
    "snapshot_stride": 10,
    "sigma_method": "spectral_oracle",
    "sigma_eps": None,
    # run
    "initial": "sine",
    "initial_lowpass_modes": None,
    "output_dir": "out",
    # sweep axes (used by the sweep subcommands)
    "sweep_kappas": None,
    "sweep_bs": None,
    "include_zero_b": False,
}


class ConfigError(ValueError):
    """Configuration document failed to parse or validate."""


@dataclass(frozen=True)
class RunConfig:
    """Fully resolved configuration: model, grid, stepping, datum, output."""

    params: ModelParams
    grid: Grid
    stepper: StepperConfig
    initial: str
    initial_lowpass_modes: int | None
    output_dir: str
    run_id: str
    resolved: dict

    def initial_field(self) -> Field:
        if self.initial in PRESETS:
            h0 = make_initial(self.initial, self.grid)
        else:
            path = Path(self.initial)
            if not path.exists():
                raise ConfigError(
                    f"initial: {self.initial!r} is neither a preset "
                    f"({sorted(PRESETS)}) nor an existing file"
                )
            values = np.loadtxt(path, comments="#")
            try:
                h0 = Field(self.grid, values)
            except ValueError as exc:
                raise ConfigError(f"initial file {path}: {exc}") from exc
        if self.initial_lowpass_modes is not None:
            h0 = fourier_lowpass(h0, self.initial_lowpass_modes)
        return h0


def _require(condition: bool, message: str):
    if not condition:
        raise ConfigError(message)


def parse_config(text: str) -> RunConfig:
    """Parse and validate a JSON configuration document."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(
            f"config is not valid JSON (line {exc.lineno}, column {exc.colno}): {exc.msg}"
        ) from exc
    _require(isinstance(doc, dict), "config must be a JSON object")

    unknown = sorted(set(doc) - set(_DEFAULTS))
    if unknown:
        raise ConfigError(f"unknown config keys: {', '.join(unknown)}")

    merged = dict(_DEFAULTS)
    merged.update(doc)

    def numeric(key, positive=False, nonnegative=False):
        v = merged[key]
        _require(
            isinstance(v, (int, float)) and not isinstance(v, bool),
            f"{key} must be a number, got {v!r}",
        )
        if positive:
            _require(v > 0, f"{key} must be positive, got {v}")
        if nonnegative:
            _require(v >= 0, f"{key} must be nonnegative, got {v}")
        return float(v)

    def integer(key, minimum=None):
        v = merged[key]
        _require(
            isinstance(v, int) and not isinstance(v, bool),
            f"{key} must be an integer, got {v!r}",
        )
        if minimum is not None:
            _require(v >= minimum, f"{key} must be >= {minimum}, got {v}")
        return v

    try:
        params = ModelParams(
            alpha1=numeric("alpha1", positive=True),
            alpha2=numeric("alpha2", nonnegative=True),
            alpha3=numeric("alpha3"),
            cap_b=numeric("cap_b", nonnegative=True),
            kappa=numeric("kappa", nonnegative=True),
            kbeta=numeric("kbeta", positive=True),
            image_terms=integer("image_terms", minimum=1),
            dominance_factor=numeric("dominance_factor", positive=True),
        )
        grid = make_grid(numeric("a"), numeric("d"), integer("n"))
        sigma_name = merged["sigma_method"]
        _require(
            sigma_name in ("direct_pv", "kappa_truncated", "spectral_oracle"),
            f"sigma_method must be one of direct_pv, kappa_truncated, "
            f"spectral_oracle; got {sigma_name!r}",
        )
        eps = merged["sigma_eps"]
        if eps is not None:
            eps = numeric("sigma_eps", positive=True)
            _require(
                sigma_name == "kappa_truncated",
                "sigma_eps only applies to sigma_method = kappa_truncated",
            )
        sigma_method = SigmaMethod(sigma_name, eps)
        stepper = StepperConfig(
            scheme=merged["scheme"],
            dt_init=numeric("dt_init", positive=True),
            dt_min=numeric("dt_min", positive=True),
            dt_max=numeric("dt_max", positive=True),
            cfl_safety=numeric("cfl_safety", positive=True),
            t_end=numeric("t_end", nonnegative=True),
            snapshot_stride=integer("snapshot_stride", minimum=1),
            sigma_method=sigma_method,
        )
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc

    initial = merged["initial"]
    _require(isinstance(initial, str), f"initial must be a string, got {initial!r}")
    lowpass = merged["initial_lowpass_modes"]
    if lowpass is not None:
        lowpass = integer("initial_lowpass_modes", minimum=0)
    output_dir = merged["output_dir"]
    _require(isinstance(output_dir, str), "output_dir must be a string")

    for axis in ("sweep_kappas", "sweep_bs"):
        vals = merged[axis]
        if vals is not None:
            _require(
                isinstance(vals, list) and all(
                    isinstance(v, (int, float)) and not isinstance(v, bool) for v in vals
                ),
                f"{axis} must be a list of numbers",
            )
            merged[axis] = [float(v) for v in vals]
    _require(isinstance(merged["include_zero_b"], bool), "include_zero_b must be a boolean")

    resolved = dict(merged)
    hash_source = {k: v for k, v in resolved.items() if k != "output_dir"}
    run_id = hashlib.sha256(
        json.dumps(hash_source, sort_keys=True).encode()
    ).hexdigest()[:12]

    return RunConfig(
        params=params,
        grid=grid,
        stepper=stepper,
        initial=initial,
        initial_lowpass_modes=lowpass,
        output_dir=output_dir,
        run_id=run_id,
        resolved=resolved,
    )


def load_config(path: str) -> RunConfig:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return parse_config(text)


# ---------------------------------------------------------------------------
# persistence


def write_trajectory_csv(traj: Trajectory, path) -> None:
    """Time-major rows "t,x,h" with 17 significant digits (exact round trip)."""
    path = Path(path)
    try:
        with path.open("w") as fh:
            fh.write(f"# schema: {TRAJECTORY_SCHEMA}\n")
            fh.write("t,x,h\n")
            for t, field in traj.snapshots:
                for x, h in zip(field.grid.x, field.values):
                    fh.write(f"{t:.17g},{x:.17g},{h:.17g}\n")
    except OSError as exc:
        raise OSError(f"cannot write trajectory to {path}: {exc}") from exc


def read_trajectory_csv(path):
    """Inverse of write_trajectory_csv: (times, x, values) arrays.

    values has one row per snapshot; reading back reproduces the written
    floats bit-exactly.
    """
    path = Path(path)
    times, xs, hs = [], [], []
    with path.open() as fh:
        for line in fh:
            line = line.strip()
            if not line or line.startswith("#") or line == "t,x,h":
                continue
            t, x, h = line.split(",")
            times.append(float(t))
            xs.append(float(x))
            hs.append(float(h))
    if not times:
        return np.array([]), np.array([]), np.zeros((0, 0))
    times = np.array(times)
    snap_times, first_index = np.unique(times, return_index=True)
    order = np.argsort(first_index)
    snap_times = snap_times[order]
    n = int(np.sum(times == times[0]))
    x = np.array(xs[:n])
    values = np.array(hs).reshape(-1, n)
    return snap_times, x, values


def write_report_json(report: EstimateReport, meta: RunConfig, path) -> None:
    """One JSON object: schema, timestamp, provenance, and all report fields."""
    doc = {
        "schema": REPORT_SCHEMA,
        "timestamp": datetime.now(timezone.utc).isoformat(),
        "code_version": __version__,
        "run_id": meta.run_id,
        "config": {k: v for k, v in meta.resolved.items()},
        "report": report.as_dict(),
    }
    path = Path(path)
    try:
        path.write_text(json.dumps(doc, sort_keys=True, indent=2) + "\n")
    except OSError as exc:
        raise OSError(f"cannot write report to {path}: {exc}") from exc


# ---------------------------------------------------------------------------
# subcommands


def _prepare_outdir(cfg: RunConfig, subdir: str | None = None) -> Path:
    out = Path(cfg.output_dir)
    if subdir:
        out = out / subdir
    out.mkdir(parents=True, exist_ok=True)
    return out


def _cmd_simulate(cfg: RunConfig) -> int:
    traj = run(cfg.initial_field(), cfg.params, cfg.stepper)
    out = _prepare_outdir(cfg)
    write_trajectory_csv(traj, out / f"trajectory-{cfg.run_id}.csv")
    write_report_json(build_report(traj), cfg, out / f"report-{cfg.run_id}.json")
    print(f"run {cfg.run_id}: {len(traj.snapshots)} snapshots to t={traj.final_time:g}")
    if traj.diverged:
        print(f"DIVERGED: {traj.diagnostic}", file=sys.stderr)
        return 1
    return 0


def _sweep_common(cfg: RunConfig, result, label: str) -> int:
    out = _prepare_outdir(cfg, f"{label}-{cfg.run_id}")
    failed = False
    for value, traj, report in zip(result.values, result.trajectories, result.reports):
        tag = f"{label}-{value:g}"
        write_trajectory_csv(traj, out / f"trajectory-{tag}.csv")
        write_report_json(report, cfg, out / f"report-{tag}.json")
        if traj.diverged:
            failed = True
            print(f"{tag} DIVERGED: {traj.diagnostic}", file=sys.stderr)
    print(f"{label} values: {list(result.values)}")
    print(f"successive L2(Q) gaps: {[f'{g:.6g}' for g in result.successive_l2q_gaps]}")
    if result.flux_dt_norms:
        print(f"flux d/dt norms: {[f'{v:.6g}' for v in result.flux_dt_norms]}")
    print(f"corner metrics: {[f'{c:.6g}' for c in result.corner_metrics]}")
    return 1 if failed else 0


def _cmd_sweep_kappa(cfg: RunConfig) -> int:
    kappas = cfg.resolved.get("sweep_kappas")
    if not kappas:
        raise ConfigError("sweep-kappa needs a sweep_kappas list in the config")
    result = kappa_sweep(cfg.initial_field(), cfg.params, cfg.stepper, kappas)
    return _sweep_common(cfg, result, "kappa")


def _cmd_sweep_b(cfg: RunConfig) -> int:
    bs = cfg.resolved.get("sweep_bs")
    if not bs:
        raise ConfigError("sweep-b needs a sweep_bs list in the config")
    result = b_sweep(
        cfg.initial_field(),
        cfg.params,
        cfg.stepper,
        bs,
        include_zero=cfg.resolved["include_zero_b"],
    )
    return _sweep_common(cfg, result, "b")


def _check(label: str, ok: bool, detail: str = "") -> bool:
    print(f"{'PASS' if ok else 'FAIL'}  {label}" + (f"  ({detail})" if detail else ""))
    return ok


def _cmd_verify_estimates(cfg: RunConfig) -> int:
    traj = run(cfg.initial_field(), cfg.params, cfg.stepper)
    report = build_report(traj)
    out = _prepare_outdir(cfg)
    write_report_json(report, cfg, out / f"report-{cfg.run_id}.json")

    all_ok = True
    values = report.as_dict()
    all_ok &= _check(
        "all report fields finite and nonnegative-where-required",
        all(np.isfinite(v) for v in values.values())
        and all(values[k] >= 0 for k in EstimateReport.FIELD_NAMES if k != "mixed_flux_form"),
    )
    all_ok &= _check(
        "coercivity: mixed flux form >= half the cubic gradient integral",
        report.mixed_flux_form >= 0.5 * report.int_l3_hx - 1e-12,
        f"{report.mixed_flux_form:.6g} vs {0.5 * report.int_l3_hx:.6g}",
    )
    mid = traj.snapshots[len(traj.snapshots) // 2][1]
    all_ok &= _check(
        "negative-order norm below L2 norm",
        h_minus2_norm(mid) <= lp_norm(mid, 2) + 1e-12,
    )
    all_ok &= _check("run completed without divergence", not traj.diverged)
    return 0 if all_ok else 1


def _cmd_twin_stability(cfg: RunConfig, delta: float) -> int:
    h0a = cfg.initial_field()
    grid = cfg.grid
    shape = np.cos(2.0 * 2.0 * np.pi * (grid.x - grid.a) / grid.length)
    shape /= np.sqrt(np.sum(shape**2) * grid.dx)
    h0b = Field(grid, h0a.values + delta * shape)

    same = twin_stability(h0a, h0a, cfg.params, cfg.stepper)
    gaps = twin_stability(h0a, h0b, cfg.params, cfg.stepper)
    rate = fit_growth_envelope(gaps, 0.5 * cfg.stepper.t_end)
    t_final, g_final = gaps[-1]
    bound = delta * float(np.exp(rate * t_final))

    ok = True
    ok &= _check(
        "identical twins stay identical",
        max(g for _, g in same) <= 1e-13,
        f"max gap {max(g for _, g in same):.3g}",
    )
    ok &= _check(
        "perturbed twin inside fitted exponential envelope",
        g_final <= bound * (1.0 + 1e-9),
        f"gap {g_final:.6g} vs bound {bound:.6g} (rate {rate:.4g})",
    )
    return 0 if ok else 1


def _cmd_hilbert_test(cfg: RunConfig) -> int:
    grid = make_grid(0.0, 2.0 * np.pi, 512)
    x = grid.x
    hx = Field(grid, np.cos(x))
    params = ModelParams(
        alpha1=1.0, alpha2=0.0, alpha3=0.0, cap_b=0.5,
        kappa=0.1, kbeta=1.0, image_terms=256,
    )
    target = np.pi * np.sin(x)

    direct = sigma_total(hx, params, SigmaMethod.direct_pv())
    spectral = sigma_spectral_oracle(hx, 1.0)
    err_direct = float(np.max(np.abs(direct.values - target)))
    err_spectral = float(np.max(np.abs(spectral.values - target)))

    ok = True
    print("transform of cos -> pi sin cross-check (n=512, 256 image terms)")
    ok &= _check("quadrature route within 1e-2", err_direct <= 1e-2, f"max err {err_direct:.3e}")
    ok &= _check("spectral route within 1e-12", err_spectral <= 1e-12, f"max err {err_spectral:.3e}")

    probe_grid = make_grid(0.0, 2.0 * np.pi, 256)
    square = Field(probe_grid, np.sign(np.sin(probe_grid.x)))
    eps_list = [probe_grid.length / 4 / 2**i for i in range(8)]
    print("uniform-boundedness probe on the zero-mean square wave")
    for p in (4.0 / 3.0, 2.0, 3.0):
        result = lp_boundedness_probe(square, p, eps_list)
        ratios = result.ratios
        spread = float(ratios.max() / ratios.min())
        for eps, ratio in result:
            print(f"  p={p:.3f}  eps={eps:.5f}  ratio={ratio:.4f}")
        ok &= _check(f"p={p:.3f} ratio spread <= 4", spread <= 4.0, f"spread {spread:.3f}")
    return 0 if ok else 1


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="gb-evolve",
        description="Simulate disconnection-driven interface motion and "
        "verify its energy-estimate and singular-limit properties.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, needs_config in (
        ("simulate", True),
        ("sweep-kappa", True),
        ("sweep-b", True),
        ("verify-estimates", True),
        ("twin-stability", True),
        ("hilbert-test", False),
    ):
        p = sub.add_parser(name)
        p.add_argument("--config", required=needs_config, help="path to JSON config")
        if name == "twin-stability":
            p.add_argument("--delta", type=float, default=1e-3,
                           help="perturbation amplitude (L2-normalized shape)")

    args = parser.parse_args(argv)
    try:
        cfg = load_config(args.config) if args.config else parse_config("{}")
        if args.command == "simulate":
            return _cmd_simulate(cfg)
        if args.command == "sweep-kappa":
            return _cmd_sweep_kappa(cfg)
        if args.command == "sweep-b":
            return _cmd_sweep_b(cfg)
        if args.command == "verify-estimates":
            return _cmd_verify_estimates(cfg)
        if args.command == "twin-stability":
            return _cmd_twin_stability(cfg, args.delta)
        if args.command == "hilbert-test":
            return _cmd_hilbert_test(cfg)
        raise AssertionError(f"unhandled command {args.command}")
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return 1


def console_main() -> None:
    sys.exit(main())
