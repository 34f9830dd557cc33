"""Batch experiment runner: loads a config, executes one named experiment,
writes CSV outputs plus a JSON manifest for the plotting component.

Exit codes: 0 success, 1 total failure, 2 partial (failures listed in the
manifest).  Re-running an identical config byte-reproduces every CSV.
"""
from __future__ import annotations

import argparse
import csv
import importlib.metadata
import json
import sys
import time
from pathlib import Path

import numpy as np
import yaml

from . import analytics, dynamics, eit, fitting, model
from .analytics import (
    DetuningConvention,
    DriveConfig,
    DriveVariant,
    Interaction,
    SidebandModel,
)
from .errors import ConfigError, SbsimError
from .model import CircuitParams, ObservedParams

SWEEP_HEADER = ["omega_d_hz", "flat_len_s", "p_initial", "p_target", "contrast"]
SPECTRUM_HEADER = ["omega_p_hz", "s21_re", "s21_im", "s21_abs"]
CATALOG_HEADER = ["operator", "order", "prefactor_hz", "matching_hz", "matching_condition"]
PREDICTION_HEADER = ["interaction", "variant", "amp_d_hz", "omega_d_hz", "delta_hz",
                     "sigma_hz", "d_omega_t_hz", "d_omega_r_hz", "omega_sb_hz",
                     "omega_mat_prime_hz"]
RATES_HEADER = ["amp_d_hz", "delta_omega_t_hz", "omega_sb_hz"]

KINDS = ("analytics-table", "matching", "timedomain", "rate-vs-shift",
         "spectrum", "fit", "calibrate")

# paper-quoted device values used by the canned figure configs
PAPER_OBSERVED = {"omega_t_hz": 6.8112e9, "omega_r_hz": 4.0755e9,
                  "a_t_hz": 150e6, "a_r_hz": 1646.7, "a_tr_hz": 497e3}
PAPER_CIRCUIT = {"omega_t0_hz": 6.8131e9, "omega_r0_hz": 4.0823e9,
                 "g_hz": 120.7e6, "chi_t_hz": 137.4e6}
STRONG_DRIVE_CIRCUIT = {"omega_t0_hz": 6.5e9, "omega_r0_hz": 4.0e9,
                        "g_hz": 200e6, "chi_t_hz": 200e6}
PAPER_KAPPA_HZ = 10.2e6
PAPER_GAMMA_HZ = 129e3


# ---------------------------------------------------------------------------
# config plumbing
# ---------------------------------------------------------------------------


def load_config(path) -> dict:
    with open(path, "r", encoding="utf-8") as fh:
        cfg = yaml.safe_load(fh)
    if not isinstance(cfg, dict):
        raise ConfigError("config must be a mapping")
    return cfg


def _require(cfg: dict, path: str):
    node = cfg
    for part in path.split("."):
        if not isinstance(node, dict) or part not in node:
            raise ConfigError(f"missing required config field: {path}", field=path)
        node = node[part]
    return node


def _grid(spec) -> np.ndarray:
    if isinstance(spec, dict):
        return np.linspace(float(spec["start"]), float(spec["stop"]), int(spec["num"]))
    return np.asarray(spec, dtype=float)


def _fmt(value) -> str:
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    return str(value)


def write_csv(path: Path, header, rows):
    with open(path, "w", newline="\n", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt(v) for v in row])


def _sideband_model(cfg: dict) -> SidebandModel:
    dev = _require(cfg, "device")
    conv = DetuningConvention(cfg.get("detuning_convention", "ladder"))
    if "observed" in dev:
        return SidebandModel.from_observed(
            ObservedParams.from_dict(dev["observed"]), convention=conv)
    if "normal" in dev:
        return SidebandModel.from_normal_modes(
            model.NormalModeParams.from_dict(dev["normal"]))
    if "circuit" in dev:
        nm = model.normal_mode_transform(CircuitParams.from_dict(dev["circuit"]))
        return SidebandModel.from_normal_modes(nm)
    raise ConfigError("device needs one of: observed, normal, circuit",
                      field="device")


def _system(cfg: dict) -> dynamics.System:
    dev = _require(cfg, "device")
    if "circuit" not in dev:
        raise ConfigError("time-domain runs need device.circuit parameters",
                          field="device.circuit")
    dims = tuple(cfg.get("dims", (5, 5)))
    return dynamics.System.from_circuit(CircuitParams.from_dict(dev["circuit"]), dims)


def _interaction(cfg) -> Interaction:
    return Interaction(_require(cfg, "interaction"))


def _variant(cfg) -> DriveVariant:
    return DriveVariant(cfg.get("variant", "full"))


# ---------------------------------------------------------------------------
# experiment kinds
# ---------------------------------------------------------------------------


def _run_analytics_table(cfg, out: Path, threads):
    m = _sideband_model(cfg)
    drive = DriveConfig(float(_require(cfg, "drive.omega_d_hz")),
                        float(_require(cfg, "drive.amp_d_hz")))
    rows = [[e.operator, e.order, e.prefactor_hz,
             e.matching_hz if e.matching_hz is not None else "",
             e.matching_condition]
            for e in analytics.term_catalog(m, drive)]
    write_csv(out / "term_catalog.csv", CATALOG_HEADER, rows)
    return ["term_catalog.csv"], []


def _run_matching(cfg, out: Path, threads):
    m = _sideband_model(cfg)
    amps = _grid(_require(cfg, "amps_hz"))
    interactions = [Interaction(i) for i in
                    cfg.get("interactions", [cfg.get("interaction", "bs"), "tms"])]
    variant = _variant(cfg)
    rows, failures = [], []
    for interaction in dict.fromkeys(interactions):
        for amp in amps:
            try:
                pred = analytics.self_consistent_matching(m, float(amp), interaction, variant)
                rec = pred.record()
                rows.append([rec[k] for k in PREDICTION_HEADER])
            except SbsimError as exc:
                failures.append({"interaction": interaction.value, "amp_d_hz": float(amp),
                                 "error": str(exc)})
    write_csv(out / "matching.csv", PREDICTION_HEADER, rows)
    return ["matching.csv"], failures


def _sweep_rows(series_list, contrasts):
    rows = []
    for series, contrast in zip(series_list, contrasts):
        for ln, pi, pt in zip(series.flat_len_s, series.p_initial, series.p_target):
            rows.append([series.omega_d_hz, ln, pi, pt, contrast])
    return rows


def _run_timedomain(cfg, out: Path, threads):
    system = _system(cfg)
    interaction = _interaction(cfg)
    variant = _variant(cfg)
    amp = float(_require(cfg, "drive.amp_d_hz"))
    omega_d = cfg.get("drive", {}).get("omega_d_hz", "matched")
    failures = []
    if omega_d == "matched":
        point = dynamics.matched_drive_frequency(system, amp, interaction, variant,
                                                 threads=threads)
        omega_d = point.omega_d_opt_hz
    lengths = _grid(_require(cfg, "lengths_s"))
    series = dynamics.pulse_length_sweep(system, DriveConfig(float(omega_d), amp),
                                         interaction, lengths, variant)
    try:
        est = dynamics.extract_rabi(series.flat_len_s, series.difference)
        contrast = est.contrast
    except SbsimError as exc:
        contrast = float("nan")
        failures.append({"error": str(exc)})
    write_csv(out / "sweep.csv", SWEEP_HEADER, _sweep_rows([series], [contrast]))
    return ["sweep.csv"], failures


def _run_rate_vs_shift(cfg, out: Path, threads):
    system = _system(cfg)
    interaction = _interaction(cfg)
    amps = _grid(_require(cfg, "amps_hz"))
    variants = [DriveVariant(v) for v in cfg.get("variants", [cfg.get("variant", "full")])]
    outputs, failures = [], []
    obs = system.observed()
    slope = analytics.analytic_rate_shift_slope(obs.a_t_hz,
                                                obs.a_tr_hz**2 / obs.a_t_hz)
    for variant in variants:
        table = dynamics.rate_vs_shift_run(system, interaction, variant, amps,
                                           threads=threads)
        name = f"rates_{variant.value}.csv"
        write_csv(out / name, RATES_HEADER,
                  [[r.amp_d_hz, r.delta_omega_t_hz, r.omega_sb_hz] for r in table.rows])
        outputs.append(name)
        failures.extend({"variant": variant.value, "amp_d_hz": a, "error": e}
                        for a, e in table.failures)
        # analytic overlay on a dense amplitude grid
        dense = np.linspace(0.0, float(np.max(amps)), 25)
        arows = []
        for a in dense:
            pred = system.predict(float(a), interaction, variant)
            arows.append([a, pred.delta_omega_t_hz, pred.omega_sb_hz])
        aname = f"analytic_{variant.value}.csv"
        write_csv(out / aname, RATES_HEADER, arows)
        outputs.append(aname)
    (out / "line.json").write_text(json.dumps({"slope_analytic": slope}, indent=2))
    outputs.append("line.json")
    return outputs, failures


def _eit_params(cfg) -> eit.EitParams:
    block = dict(_require(cfg, "eit"))
    for key in ("kappa_hz", "gamma_hz", "omega_r_hz", "omega_sb_hz", "amp_p_hz"):
        _require(cfg, f"eit.{key}")
    return eit.EitParams.from_dict(block)


def _run_spectrum(cfg, out: Path, threads):
    params = _eit_params(cfg)
    grid = _grid(_require(cfg, "probe_grid_hz"))
    values = cfg.get("omega_sb_values_hz", [params.omega_sb_hz])
    outputs, failures = [], []
    for i, osb in enumerate(values):
        from dataclasses import replace

        p = replace(params, omega_sb_hz=float(osb))
        spec = eit.spectrum(p, grid, threads=threads)
        name = f"spectrum_{i:02d}.csv" if len(values) > 1 else "spectrum.csv"
        write_csv(out / name, SPECTRUM_HEADER,
                  [[w, s.real, s.imag, abs(s)] for w, s in zip(spec.omega_p_hz, spec.s21)])
        outputs.append(name)
        failures.extend({"omega_p_hz": w, "error": e} for w, e in spec.failures)
    return outputs, failures


def read_spectrum_csv(path) -> eit.Spectrum:
    with open(path, "r", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        missing = [c for c in SPECTRUM_HEADER if c not in (reader.fieldnames or [])]
        if missing:
            raise ConfigError(f"spectrum CSV missing columns: {missing}",
                              field=missing[0])
        rows = [(float(r["omega_p_hz"]), float(r["s21_re"]), float(r["s21_im"]))
                for r in reader]
    omega = np.array([r[0] for r in rows])
    s21 = np.array([complex(r[1], r[2]) for r in rows])
    return eit.Spectrum(omega_p_hz=omega, s21=s21)


def _fit_parameters(spec_list) -> tuple:
    pars = []
    for d in spec_list:
        pars.append(fitting.FitParameter(
            name=_require(d, "name"), guess=float(_require(d, "guess")),
            lower=float(d.get("lower", -np.inf)), upper=float(d.get("upper", np.inf)),
            scale=d.get("scale"),
        ))
    return tuple(pars)


def _run_fit(cfg, out: Path, threads):
    data = read_spectrum_csv(_require(cfg, "data_csv"))
    template = _eit_params(cfg)
    problem = fitting.FitProblem.from_spectrum(
        data, template, _fit_parameters(_require(cfg, "free")),
        fixed=cfg.get("fixed", {}),
        use_magnitude=bool(cfg.get("use_magnitude", True)),
    )
    result = fitting.fit_spectrum(problem)
    payload = {"parameters": result.record(),
               "residual_norm": result.residual_norm,
               "converged": result.converged,
               "iterations": result.iterations}
    (out / "fit_result.json").write_text(json.dumps(payload, indent=2, sort_keys=True))
    return ["fit_result.json"], [] if result.converged else [{"error": "fit not converged"}]


def _run_calibrate(cfg, out: Path, threads):
    linear = read_spectrum_csv(_require(cfg, "linear_data_csv"))
    nonlinear = read_spectrum_csv(_require(cfg, "nonlinear_data_csv"))
    template = _eit_params(cfg)
    stage1, stage2 = fitting.calibrate_cross_anharmonicity(
        linear, nonlinear, template,
        linear_probe_hz=float(cfg.get("linear_probe_hz", 10e3)),
        stage2_guesses=cfg.get("stage2_guesses"),
    )
    payload = {
        "stage1": {"parameters": stage1.record(), "converged": stage1.converged,
                   "residual_norm": stage1.residual_norm},
        "stage2": {"parameters": stage2.record(), "converged": stage2.converged,
                   "residual_norm": stage2.residual_norm},
    }
    (out / "calibration.json").write_text(json.dumps(payload, indent=2, sort_keys=True))
    fails = [] if stage1.converged and stage2.converged else [{"error": "calibration stage not converged"}]
    return ["calibration.json"], fails


_RUNNERS = {
    "analytics-table": _run_analytics_table,
    "matching": _run_matching,
    "timedomain": _run_timedomain,
    "rate-vs-shift": _run_rate_vs_shift,
    "spectrum": _run_spectrum,
    "fit": _run_fit,
    "calibrate": _run_calibrate,
}


def run(cfg: dict, out_dir, threads: int = 1, overrides: dict | None = None) -> int:
    """Execute one experiment config; returns the process exit code."""
    cfg = dict(cfg)
    cfg.update(overrides or {})
    kind = cfg.get("kind")
    if kind not in KINDS:
        raise ConfigError(f"unknown experiment kind {kind!r} (expected one of {KINDS})",
                          field="kind")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    t0 = time.time()
    outputs, failures = _RUNNERS[kind](cfg, out, threads)
    manifest = {
        "kind": kind,
        "config": cfg,
        "outputs": outputs,
        "failures": failures,
        "package_version": importlib.metadata.version("sbsim"),
        "dims": cfg.get("dims"),
        "dt_default_s": dynamics.DT_PERIOD_DEFAULT,
        "threads": threads,
        "wall_time_s": round(time.time() - t0, 3),
    }
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True,
                                                  default=str))
    return 2 if failures else 0


# ---------------------------------------------------------------------------
# canned figure bundles
# ---------------------------------------------------------------------------


def _probe_span(span=25e6, num=161):
    center = PAPER_OBSERVED["omega_r_hz"]
    return {"start": center - span, "stop": center + span, "num": num}


def _eit_block(interaction, omega_sb, amp_p, a_tr=PAPER_OBSERVED["a_tr_hz"], d_mat=0.0):
    return {
        "omega_r_hz": PAPER_OBSERVED["omega_r_hz"],
        "a_t_hz": PAPER_OBSERVED["a_t_hz"],
        "a_r_hz": PAPER_OBSERVED["a_r_hz"],
        "a_tr_hz": a_tr,
        "omega_sb_hz": omega_sb,
        "delta_omega_mat_hz": d_mat,
        "kappa_hz": PAPER_KAPPA_HZ,
        "gamma_hz": PAPER_GAMMA_HZ,
        "amp_p_hz": amp_p,
        "interaction": interaction,
    }


REPRODUCE_CONFIGS = {
    "fig1f": {
        "kind": "spectrum",
        "eit": _eit_block("bs", 2e6, 10e3),
        "omega_sb_values_hz": [2e6, 4e6, 6e6],
        "probe_grid_hz": _probe_span(),
    },
    "fig1g": {
        "kind": "spectrum",
        "eit": _eit_block("tms", 2e6, 10e3),
        "omega_sb_values_hz": [2e6, 4e6, 6e6],
        "probe_grid_hz": _probe_span(),
    },
    "fig3c": {
        "kind": "rate-vs-shift",
        "device": {"circuit": PAPER_CIRCUIT},
        "dims": [5, 5],
        "interaction": "tms",
        "variants": ["full"],
        "amps_hz": [150e6, 225e6, 300e6],
    },
    "fig4": {
        "kind": "rate-vs-shift",
        "device": {"circuit": STRONG_DRIVE_CIRCUIT},
        "dims": [5, 5],
        "interaction": "bs",
        "variants": ["full", "rwa", "cr"],
        "amps_hz": [200e6, 400e6, 600e6],
    },
    "figS1": {
        "kind": "timedomain",
        "device": {"circuit": PAPER_CIRCUIT},
        "dims": [5, 5],
        "interaction": "tms",
        "variant": "full",
        "drive": {"amp_d_hz": 300e6, "omega_d_hz": "matched"},
        "lengths_s": {"start": 0.0, "stop": 8e-6, "num": 161},
    },
    "figS2": {
        "kind": "timedomain",  # expanded below into a frequency sweep
        "device": {"circuit": PAPER_CIRCUIT},
        "dims": [5, 5],
        "interaction": "tms",
        "variant": "full",
        "drive": {"amp_d_hz": 300e6},
    },
    "figS3": {
        "kind": "rate-vs-shift",
        "device": {"circuit": STRONG_DRIVE_CIRCUIT},
        "dims": [5, 5],
        "interaction": "tms",
        "variants": ["full", "rwa", "cr"],
        "amps_hz": [200e6, 400e6, 600e6],
    },
    "figS5": {
        "kind": "spectrum",  # expanded below into the four-panel comparison
        "eit": _eit_block("bs", 1.2e6, 10e3, d_mat=-300e3),
        "probe_grid_hz": _probe_span(span=20e6, num=161),
    },
}


def _reproduce_figs2(out: Path, threads: int) -> tuple:
    system = dynamics.System.from_circuit(CircuitParams.from_dict(PAPER_CIRCUIT), (5, 5))
    amp = 300e6
    pred = system.predict(amp, Interaction.TMS)
    grid = np.linspace(pred.omega_mat_prime_hz - 6 * pred.omega_sb_hz,
                       pred.omega_mat_prime_hz + 6 * pred.omega_sb_hz, 13)
    sweep = dynamics.drive_frequency_sweep(system, amp, Interaction.TMS, grid,
                                           threads=threads)
    write_csv(out / "sweep.csv", SWEEP_HEADER, _sweep_rows(sweep.series, sweep.contrast))
    return ["sweep.csv"], []


def _reproduce_figs5(out: Path, threads: int) -> tuple:
    from dataclasses import replace

    base = eit.EitParams.from_dict(_eit_block("bs", 1.2e6, 10e3, d_mat=-300e3))
    grid = _grid(_probe_span(span=20e6, num=161))
    outputs = []
    for name, amp_p, a_tr in (
        ("spectrum_weak_atr0.csv", 10e3, 0.0),
        ("spectrum_weak_atr497k.csv", 10e3, 497e3),
        ("spectrum_strong_atr0.csv", 3e6, 0.0),
        ("spectrum_strong_atr497k.csv", 3e6, 497e3),
    ):
        p = replace(base, amp_p_hz=amp_p, a_tr_hz=a_tr)
        spec = eit.spectrum(p, grid, threads=threads)
        write_csv(out / name, SPECTRUM_HEADER,
                  [[w, s.real, s.imag, abs(s)] for w, s in zip(spec.omega_p_hz, spec.s21)])
        outputs.append(name)
    return outputs, []


def reproduce(figure_id: str, out_dir, threads: int = 1) -> int:
    """Run the canned config for one paper figure and emit its CSV bundle."""
    if figure_id not in REPRODUCE_CONFIGS:
        raise ConfigError(f"unknown figure id {figure_id!r} "
                          f"(known: {sorted(REPRODUCE_CONFIGS)})", field="figure")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    cfg = dict(REPRODUCE_CONFIGS[figure_id])
    cfg["figure"] = figure_id
    if figure_id in ("figS2", "figS5"):
        t0 = time.time()
        runner = _reproduce_figs2 if figure_id == "figS2" else _reproduce_figs5
        outputs, failures = runner(out, threads)
        manifest = {
            "kind": cfg["kind"], "figure": figure_id, "config": cfg,
            "outputs": outputs, "failures": failures,
            "package_version": importlib.metadata.version("sbsim"),
            "dims": cfg.get("dims"), "dt_default_s": dynamics.DT_PERIOD_DEFAULT,
            "threads": threads, "wall_time_s": round(time.time() - t0, 3),
        }
        (out / "manifest.json").write_text(
            json.dumps(manifest, indent=2, sort_keys=True, default=str))
        return 2 if failures else 0
    return run(cfg, out, threads)


# ---------------------------------------------------------------------------
# entry point
# ---------------------------------------------------------------------------


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="sbsim",
                                     description="driven two-mode circuit experiments")
    sub = parser.add_subparsers(dest="command", required=True)
    p_run = sub.add_parser("run", help="execute a config file")
    p_run.add_argument("--config", required=True)
    p_run.add_argument("--out", required=True)
    p_run.add_argument("--variant", choices=["full", "rwa", "cr"])
    p_run.add_argument("--interaction", choices=["bs", "tms"])
    p_run.add_argument("--threads", type=int, default=0)
    p_rep = sub.add_parser("reproduce", help="emit a canned figure bundle")
    p_rep.add_argument("--figure", required=True)
    p_rep.add_argument("--out", required=True)
    p_rep.add_argument("--threads", type=int, default=0)
    args = parser.parse_args(argv)
    threads = args.threads
    if threads == 0:
        import os

        threads = min(os.cpu_count() or 1, 8)
    try:
        if args.command == "run":
            overrides = {}
            if args.variant:
                overrides["variant"] = args.variant
            if args.interaction:
                overrides["interaction"] = args.interaction
            return run(load_config(args.config), args.out, threads, overrides)
        return reproduce(args.figure, args.out, threads)
    except SbsimError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
