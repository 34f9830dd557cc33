"""Render sbsim CSV bundles into paper-style figures.

Consumes only the documented bundle schemas (CSV files plus manifest.json);
no physics is recomputed here.  Analytic overlay curves are drawn when the
bundle provides them.
"""
from __future__ import annotations

import argparse
import csv
import json
import sys
from dataclasses import dataclass
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

SPECTRUM_COLUMNS = ["omega_p_hz", "s21_re", "s21_im", "s21_abs"]
SWEEP_COLUMNS = ["omega_d_hz", "flat_len_s", "p_initial", "p_target", "contrast"]
RATES_COLUMNS = ["amp_d_hz", "delta_omega_t_hz", "omega_sb_hz"]

KNOWN_FIGURES = ("fig1f", "fig1g", "fig3c", "fig4", "figS1", "figS2", "figS3",
                 "figS5")


class SchemaError(Exception):
    """Bundle contents do not match the documented schema."""

    def __init__(self, message, column=None, path=None):
        super().__init__(message)
        self.column = column
        self.path = path


@dataclass(frozen=True)
class PlotSpec:
    bundle: Path
    figure: str
    out: Path
    logy: bool = False
    annotate: bool = True

    def __post_init__(self):
        object.__setattr__(self, "bundle", Path(self.bundle))
        object.__setattr__(self, "out", Path(self.out))


def read_csv_columns(path: Path, required) -> dict:
    if not path.exists():
        raise SchemaError(f"missing bundle file {path.name}", path=str(path))
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        fields = reader.fieldnames or []
        for column in required:
            if column not in fields:
                raise SchemaError(
                    f"{path.name} is missing required column {column!r}",
                    column=column, path=str(path))
        rows = list(reader)
    return {c: np.array([float(r[c]) for r in rows]) for c in required}


def load_manifest(bundle: Path) -> dict:
    path = bundle / "manifest.json"
    if not path.exists():
        raise SchemaError("bundle has no manifest.json", path=str(path))
    return json.loads(path.read_text())


# ---------------------------------------------------------------------------
# per-figure renderers
# ---------------------------------------------------------------------------


def _spectra_ladder(bundle: Path, manifest: dict, title: str):
    values = manifest.get("config", {}).get("omega_sb_values_hz")
    if not values:
        raise SchemaError("manifest lacks config.omega_sb_values_hz")
    fig, ax = plt.subplots(figsize=(5.0, 1.6 * len(values) + 1.2))
    offset_step = 1.1
    # smallest rate on top, matching the source layout
    for i, omega_sb in enumerate(values):
        data = read_csv_columns(bundle / f"spectrum_{i:02d}.csv", SPECTRUM_COLUMNS)
        detuning = (data["omega_p_hz"] - np.median(data["omega_p_hz"])) / 1e6
        offset = (len(values) - 1 - i) * offset_step
        ax.plot(detuning, data["s21_abs"] + offset,
                label=f"{omega_sb/1e6:g} MHz")
        ax.axhline(offset, color="0.85", lw=0.5, zorder=0)
    ax.set_xlabel("probe detuning (MHz)")
    ax.set_ylabel("|S21| (offset)")
    ax.set_title(title)
    ax.legend(title="sideband rate", loc="upper right", fontsize=8)
    return fig


def render_fig1f(bundle: Path, spec: PlotSpec):
    return _spectra_ladder(bundle, load_manifest(bundle),
                           "resonator transmission, beam-splitter coupling")


def render_fig1g(bundle: Path, spec: PlotSpec):
    return _spectra_ladder(bundle, load_manifest(bundle),
                           "resonator transmission, two-mode-squeezing coupling")


def _available_variants(bundle: Path):
    variants = [p.stem.split("_", 1)[1] for p in sorted(bundle.glob("rates_*.csv"))]
    if not variants:
        raise SchemaError("bundle has no rates_*.csv tables")
    return variants


_VARIANT_STYLE = {"full": ("o", "C0"), "rwa": ("^", "C1"), "cr": ("s", "C2")}


def render_rate_tables(bundle: Path, spec: PlotSpec):
    """Rate and shift ladders with analytic overlays (fig4 / figS3 style)."""
    variants = _available_variants(bundle)
    fig, axes = plt.subplots(1, 3, figsize=(11, 3.4))
    for variant in variants:
        marker, color = _VARIANT_STYLE.get(variant, ("x", "C3"))
        sim = read_csv_columns(bundle / f"rates_{variant}.csv", RATES_COLUMNS)
        amp = sim["amp_d_hz"] / 1e6
        axes[0].plot(amp, sim["omega_sb_hz"] / 1e3, marker, color=color,
                     label=variant, ls="none")
        axes[1].plot(amp, np.abs(sim["delta_omega_t_hz"]) / 1e6, marker,
                     color=color, label=variant, ls="none")
        axes[2].plot(np.abs(sim["delta_omega_t_hz"]) / 1e6,
                     sim["omega_sb_hz"] / 1e3, marker, color=color,
                     label=variant, ls="none")
        analytic = bundle / f"analytic_{variant}.csv"
        if analytic.exists():
            ana = read_csv_columns(analytic, RATES_COLUMNS)
            axes[0].plot(ana["amp_d_hz"] / 1e6, ana["omega_sb_hz"] / 1e3,
                         "-", color=color, lw=1, alpha=0.7)
            axes[1].plot(ana["amp_d_hz"] / 1e6,
                         np.abs(ana["delta_omega_t_hz"]) / 1e6,
                         "-", color=color, lw=1, alpha=0.7)
    line_path = bundle / "line.json"
    if line_path.exists():
        slope = json.loads(line_path.read_text())["slope_analytic"]
        xs = np.array(axes[2].get_xlim())
        axes[2].plot(xs, slope * xs * 1e3, "k-", lw=1, alpha=0.6,
                     label=f"slope {slope:.3f}")
    axes[0].set_xlabel("drive amplitude (MHz)")
    axes[0].set_ylabel("sideband rate (kHz)")
    axes[1].set_xlabel("drive amplitude (MHz)")
    axes[1].set_ylabel("|frequency shift| (MHz)")
    axes[2].set_xlabel("|frequency shift| (MHz)")
    axes[2].set_ylabel("sideband rate (kHz)")
    if spec.logy:
        for ax in axes[:2]:
            ax.set_yscale("log")
    for ax in axes:
        ax.legend(fontsize=8)
    fig.tight_layout()
    return fig


def render_fig3c(bundle: Path, spec: PlotSpec):
    """Rate-versus-shift scatter with the no-free-parameter origin line."""
    variants = _available_variants(bundle)
    fig, ax = plt.subplots(figsize=(4.6, 3.6))
    xmax = 0.0
    for variant in variants:
        marker, color = _VARIANT_STYLE.get(variant, ("x", "C3"))
        sim = read_csv_columns(bundle / f"rates_{variant}.csv", RATES_COLUMNS)
        shift = np.abs(sim["delta_omega_t_hz"]) / 1e6
        ax.plot(shift, sim["omega_sb_hz"] / 1e3, marker, color=color,
                ls="none", label=variant)
        xmax = max(xmax, shift.max(initial=0.0))
    slope = json.loads((bundle / "line.json").read_text())["slope_analytic"] \
        if (bundle / "line.json").exists() else None
    if slope is None:
        raise SchemaError("bundle has no line.json with the analytic slope")
    xs = np.linspace(0.0, 1.1 * max(xmax, 1e-6), 50)
    ax.plot(xs, slope * xs * 1e3, "k-", lw=1.2,
            label=f"theory, slope {slope:.4f}")
    ax.set_xlabel("|transmon frequency shift| (MHz)")
    ax.set_ylabel("sideband rate (kHz)")
    ax.legend(fontsize=8)
    fig.tight_layout()
    return fig


def render_figs1(bundle: Path, spec: PlotSpec):
    data = read_csv_columns(bundle / "sweep.csv", SWEEP_COLUMNS)
    fig, ax = plt.subplots(figsize=(5.4, 3.2))
    diff = data["p_initial"] - data["p_target"]
    ax.plot(data["flat_len_s"] * 1e6, diff, "-", color="C0", lw=1)
    ax.set_xlabel("flat-top length (us)")
    ax.set_ylabel("population difference")
    if spec.annotate:
        best = diff.argmin()
        ax.annotate(f"best transfer {data['p_target'][best]:.4f}",
                    xy=(data["flat_len_s"][best] * 1e6, diff[best]),
                    xytext=(0.35, 0.2), textcoords="axes fraction",
                    arrowprops={"arrowstyle": "->"}, fontsize=8)
    fig.tight_layout()
    return fig


def render_figs2(bundle: Path, spec: PlotSpec):
    data = read_csv_columns(bundle / "sweep.csv", SWEEP_COLUMNS)
    omegas = np.unique(data["omega_d_hz"])
    fig, axes = plt.subplots(1, 2, figsize=(9, 3.2))
    center = np.median(omegas)
    for w in omegas:
        sel = data["omega_d_hz"] == w
        axes[0].plot(data["flat_len_s"][sel] * 1e6,
                     data["p_initial"][sel] - data["p_target"][sel],
                     lw=0.8, alpha=0.8)
    axes[0].set_xlabel("flat-top length (us)")
    axes[0].set_ylabel("population difference")
    contrast = [data["contrast"][data["omega_d_hz"] == w][0] for w in omegas]
    axes[1].plot((omegas - center) / 1e3, contrast, "o-", color="C0")
    axes[1].set_xlabel("drive detuning from sweep center (kHz)")
    axes[1].set_ylabel("oscillation contrast")
    fig.tight_layout()
    return fig


def render_figs5(bundle: Path, spec: PlotSpec):
    names = [("weak", "spectrum_weak_atr0.csv", "spectrum_weak_atr497k.csv"),
             ("strong", "spectrum_strong_atr0.csv", "spectrum_strong_atr497k.csv")]
    fig, axes = plt.subplots(1, 2, figsize=(9, 3.2), sharey=False)
    for ax, (label, f0, f1) in zip(axes, names):
        d0 = read_csv_columns(bundle / f0, SPECTRUM_COLUMNS)
        d1 = read_csv_columns(bundle / f1, SPECTRUM_COLUMNS)
        det = (d0["omega_p_hz"] - np.median(d0["omega_p_hz"])) / 1e6
        ax.plot(det, d0["s21_abs"], "-", label="A_tr = 0")
        ax.plot(det, d1["s21_abs"], "--", label="A_tr = 497 kHz")
        ax.set_xlabel("probe detuning (MHz)")
        ax.set_ylabel("|S21|")
        ax.set_title(f"{label} probe")
        ax.legend(fontsize=8)
    fig.tight_layout()
    return fig


_RENDERERS = {
    "fig1f": render_fig1f,
    "fig1g": render_fig1g,
    "fig3c": render_fig3c,
    "fig4": render_rate_tables,
    "figS1": render_figs1,
    "figS2": render_figs2,
    "figS3": render_rate_tables,
    "figS5": render_figs5,
}


def render_figure(spec: PlotSpec):
    """Build the matplotlib figure for a bundle (no file output)."""
    if spec.figure not in _RENDERERS:
        raise SchemaError(f"unknown figure id {spec.figure!r} "
                          f"(known: {sorted(_RENDERERS)})")
    if not spec.bundle.is_dir():
        raise SchemaError(f"bundle directory {spec.bundle} does not exist",
                          path=str(spec.bundle))
    return _RENDERERS[spec.figure](spec.bundle, spec)


def render(spec: PlotSpec) -> Path:
    """Render a bundle to an image file (format from the suffix: png/svg)."""
    if spec.out.suffix.lower() not in (".png", ".svg"):
        raise SchemaError(f"unsupported output format {spec.out.suffix!r} "
                          "(png and svg are supported)")
    fig = render_figure(spec)
    spec.out.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(spec.out, dpi=150)
    plt.close(fig)
    return spec.out


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="render", description="render an sbsim CSV bundle to a figure")
    parser.add_argument("--bundle", required=True)
    parser.add_argument("--figure", required=True, choices=KNOWN_FIGURES)
    parser.add_argument("--out", required=True)
    parser.add_argument("--logy", action="store_true")
    args = parser.parse_args(argv)
    try:
        out = render(PlotSpec(bundle=Path(args.bundle), figure=args.figure,
                              out=Path(args.out), logy=args.logy))
    except SchemaError as exc:
        print(f"schema error: {exc}", file=sys.stderr)
        return 1
    print(out)
    return 0


if __name__ == "__main__":
    sys.exit(main())
