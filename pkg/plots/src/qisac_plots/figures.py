"""Render the simulator CLI's CSV outputs into figure files.

Eight figure layouts are supported (fig4 .. fig11), one per study the CLI
can emit.  Rendering never changes numeric values: the data min/max of
the plotted columns pass straight into the returned axis ranges and into
a small annotation embedded in each figure, which is what the tests
verify.  Heatmap color scales are fixed per figure so images from
different runs stay comparable.

Invoke as a script:

    qisac-plots --figure fig5 --in capacity.csv --out fig5.png
"""

from __future__ import annotations

import argparse
import csv
import sys
from dataclasses import dataclass, field
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

FIGURES = ("fig4", "fig5", "fig6", "fig7", "fig8", "fig9", "fig10", "fig11")

# Fixed heatmap scale for the pass-count scan (mean absolute error, rad).
FIG11_HEATMAP_VMAX = 0.15


class SchemaError(ValueError):
    """An input CSV does not carry the columns a figure needs."""


@dataclass
class FigureSpec:
    """What to render: a figure id, its input CSVs and the output image."""

    figure: str
    inputs: list[Path]
    output: Path
    xlabel: str | None = None
    ylabel: str | None = None
    title: str | None = None
    extras: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.figure not in FIGURES:
            raise ValueError(f"unknown figure {self.figure!r}, expected one of {FIGURES}")
        self.inputs = [Path(p) for p in self.inputs]
        self.output = Path(self.output)


def read_csv(path: Path) -> dict[str, list]:
    """Read a CSV file into named columns; numeric cells become floats."""
    if not Path(path).exists():
        raise SchemaError(f"input file {path} does not exist")
    with open(path, "r", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise SchemaError(f"{path}: empty file, no header row") from None
        columns: dict[str, list] = {name: [] for name in header}
        for row in reader:
            for name, cell in zip(header, row):
                if cell == "":
                    columns[name].append(None)
                    continue
                try:
                    columns[name].append(float(cell))
                except ValueError:
                    columns[name].append(cell)
    return columns


def require_columns(figure: str, path: Path, columns: dict, needed: tuple[str, ...]) -> None:
    missing = [c for c in needed if c not in columns]
    if missing:
        raise SchemaError(
            f"{figure}: {path} is missing column(s) {', '.join(repr(c) for c in missing)}"
            f" (found: {', '.join(repr(c) for c in columns)})")


def _column(columns: dict, name: str) -> np.ndarray:
    return np.array([v for v in columns[name] if v is not None], dtype=float)


def _ranges(x: np.ndarray, ys: list[np.ndarray]):
    stacked = np.concatenate(ys)
    return (float(x.min()), float(x.max())), (float(stacked.min()), float(stacked.max()))


def _zero_crossings(x: np.ndarray, y: np.ndarray) -> list[float]:
    """Linearly interpolated sign-change abscissae, for display markers only."""
    out = []
    for i in range(len(y) - 1):
        if y[i] == 0.0:
            out.append(float(x[i]))
        elif y[i] * y[i + 1] < 0.0:
            frac = y[i] / (y[i] - y[i + 1])
            out.append(float(x[i] + frac * (x[i + 1] - x[i])))
    return out


def _line_figure(spec, columns, xcol, series, xlabel, ylabel, markers=None):
    x = _column(columns, xcol)
    ys = {name: _column(columns, name) for name, _label in series}
    fig, ax = plt.subplots(figsize=(6.4, 4.2))
    for name, label in series:
        ax.plot(x, ys[name], label=label)
    if markers:
        for pos, text in markers:
            ax.axvline(pos, color="gray", linestyle=":", linewidth=1)
            ax.annotate(text, (pos, ax.get_ylim()[0]), fontsize=7,
                        textcoords="offset points", xytext=(2, 4))
    ax.set_xlabel(spec.xlabel or xlabel)
    ax.set_ylabel(spec.ylabel or ylabel)
    ax.legend(fontsize=8)
    x_range, y_range = _ranges(x, list(ys.values()))
    ax.set_xlim(*x_range)
    return fig, x_range, y_range


def _render_fig4(spec):
    columns = read_csv(spec.inputs[0])
    require_columns("fig4", spec.inputs[0], columns,
                    ("theta", "l_single", "l_multi", "l_total"))
    return _line_figure(spec, columns, "theta",
                        [("l_single", "single pass"), ("l_multi", "multi pass"),
                         ("l_total", "combined")],
                        "phase (rad)", "normalized likelihood")


def _render_fig5(spec):
    columns = read_csv(spec.inputs[0])
    require_columns("fig5", spec.inputs[0], columns, ("e", "cs_qisac", "cs_twostep"))
    e = _column(columns, "e")
    markers = []
    for name, label in (("cs_qisac", "integrated"), ("cs_twostep", "two-step")):
        for pos in _zero_crossings(e, _column(columns, name)):
            markers.append((pos, f"{label} {100 * pos:.1f}%"))
    fig, x_range, y_range = _line_figure(
        spec, columns, "e",
        [("cs_qisac", "integrated protocol"), ("cs_twostep", "two-step baseline")],
        "check QBER", "secrecy capacity (bits/pair)", markers)
    fig.axes[0].axhline(0.0, color="black", linewidth=0.8)
    return fig, x_range, y_range


def _render_fig6(spec):
    columns = read_csv(spec.inputs[0])
    require_columns("fig6", spec.inputs[0], columns, ("e", "f_bob_bound", "f_eve"))
    e = _column(columns, "e")
    diff = _column(columns, "f_bob_bound") - _column(columns, "f_eve")
    markers = [(pos, f"crossing {100 * pos:.1f}%") for pos in _zero_crossings(e, diff)]
    return _line_figure(spec, columns, "e",
                        [("f_bob_bound", "receiver bound"), ("f_eve", "eavesdropper QFI")],
                        "check QBER", "Fisher information", markers)


def _render_fig7(spec):
    columns = read_csv(spec.inputs[0])
    require_columns("fig7", spec.inputs[0], columns,
                    ("theta", "l_obs1", "l_obs2", "l_total"))
    return _line_figure(spec, columns, "theta",
                        [("l_obs1", "first observable"), ("l_obs2", "second observable"),
                         ("l_total", "both observables")],
                        "phase (rad)", "normalized likelihood")


def _render_fig8(spec):
    columns = read_csv(spec.inputs[0])
    require_columns("fig8", spec.inputs[0], columns, ("theta", "f_o1", "f_o2"))
    return _line_figure(spec, columns, "theta",
                        [("f_o1", "first observable"), ("f_o2", "second observable")],
                        "phase (rad)", "classical Fisher information")


def _render_fig9(spec):
    columns = read_csv(spec.inputs[0])
    require_columns("fig9", spec.inputs[0], columns, ("theta", "n", "value", "stderr"))
    theta = np.array(columns["theta"], dtype=float)
    n = np.array(columns["n"], dtype=float)
    value = np.array(columns["value"], dtype=float)
    stderr = np.array([np.nan if v is None else v for v in columns["stderr"]], dtype=float)
    fig, ax = plt.subplots(figsize=(6.4, 4.2))
    for nu in np.unique(n):
        sel = n == nu
        ax.plot(theta[sel], value[sel], label=f"{int(nu)} pairs")
        if not np.isnan(stderr[sel]).all():
            ax.fill_between(theta[sel], value[sel] - stderr[sel],
                            value[sel] + stderr[sel], alpha=0.2)
    ax.set_xlabel(spec.xlabel or "phase (rad)")
    ax.set_ylabel(spec.ylabel or "mean bias (rad)")
    ax.legend(fontsize=8)
    x_range, y_range = _ranges(theta, [value])
    ax.set_xlim(*x_range)
    return fig, x_range, y_range


def _render_fig10(spec):
    columns = read_csv(spec.inputs[0])
    require_columns("fig10", spec.inputs[0], columns,
                    ("p_e", "variance", "p_det1", "p_det2"))
    p_e = _column(columns, "p_e")
    fig, ax = plt.subplots(figsize=(6.4, 4.2))
    ax.plot(p_e, _column(columns, "p_det1"), "-", label="double-CNOT detection")
    ax.plot(p_e, _column(columns, "p_det2"), "--", label="intercept detection")
    ax.set_xlabel(spec.xlabel or "encoded fraction")
    ax.set_ylabel(spec.ylabel or "detection probability")
    twin = ax.twinx()
    twin.plot(p_e, _column(columns, "variance"), "-.", color="tab:blue",
              label="phase variance")
    twin.set_yscale("log")
    twin.set_ylabel("phase variance (rad^2)")
    handles, labels = ax.get_legend_handles_labels()
    handles2, labels2 = twin.get_legend_handles_labels()
    ax.legend(handles + handles2, labels + labels2, fontsize=8)
    x_range, y_range = _ranges(p_e, [_column(columns, "p_det1"),
                                     _column(columns, "p_det2")])
    ax.set_xlim(*x_range)
    return fig, x_range, y_range


def _classify_fig11_inputs(spec):
    heatmaps, scatters = [], []
    for path in spec.inputs:
        columns = read_csv(path)
        if "bias" in columns and "theta" in columns:
            require_columns("fig11", path, columns, ("n_passes", "theta", "bias"))
            heatmaps.append((path, columns))
        elif "mean_bias" in columns:
            require_columns("fig11", path, columns, ("n_passes", "mean_bias"))
            scatters.append((path, columns))
        else:
            raise SchemaError(
                f"fig11: {path} is neither a heatmap (n_passes, theta, bias) nor a "
                f"scatter (n_passes, mean_bias) file (found: {', '.join(columns)})")
    if not heatmaps:
        raise SchemaError("fig11 needs at least one heatmap CSV")
    return heatmaps, scatters


def _render_fig11(spec):
    heatmaps, scatters = _classify_fig11_inputs(spec)
    ncols = len(heatmaps)
    nrows = 3 if scatters else 2
    fig, axes = plt.subplots(nrows, ncols, figsize=(4.6 * ncols, 3.2 * nrows),
                             squeeze=False)
    all_theta, all_bias = [], []
    for col, (path, columns) in enumerate(heatmaps):
        n = _column(columns, "n_passes")
        theta = _column(columns, "theta")
        bias = _column(columns, "bias")
        all_theta.append(theta)
        all_bias.append(bias)
        n_vals = np.unique(n)
        t_vals = np.unique(theta)
        grid = np.full((len(n_vals), len(t_vals)), np.nan)
        for ni, ti, bi in zip(n, theta, bias):
            grid[np.searchsorted(n_vals, ni), np.searchsorted(t_vals, ti)] = bi
        ax = axes[0][col]
        im = ax.imshow(grid.T, origin="lower", aspect="auto",
                       vmin=0.0, vmax=FIG11_HEATMAP_VMAX, cmap="viridis",
                       extent=(0, len(n_vals), t_vals.min(), t_vals.max()))
        ax.set_xticks(np.arange(len(n_vals)) + 0.5)
        ax.set_xticklabels([str(int(v)) for v in n_vals], fontsize=7)
        ax.set_xlabel("sensing passes")
        ax.set_ylabel("phase (rad)")
        ax.set_title(Path(path).stem, fontsize=8)
        fig.colorbar(im, ax=ax, shrink=0.85)

        # bias-vs-phase curves for the best and the largest pass count
        per_n = grid.mean(axis=1)
        best_row = int(np.nanargmin(per_n))
        last_row = len(n_vals) - 1
        ax_curve = axes[-1][col]
        for row, style in ((best_row, "-"), (last_row, "--")):
            ax_curve.plot(t_vals, grid[row], style, label=f"N={int(n_vals[row])}")
        ax_curve.set_xlabel("phase (rad)")
        ax_curve.set_ylabel("bias (rad)")
        ax_curve.legend(fontsize=7)

    for col in range(ncols):
        if not scatters:
            break
        path, columns = scatters[min(col, len(scatters) - 1)]
        ax = axes[1][col]
        n = _column(columns, "n_passes")
        mean_bias = _column(columns, "mean_bias")
        ax.plot(np.arange(len(n)), mean_bias, "o", markersize=3)
        ax.set_xticks(np.arange(len(n)))
        ax.set_xticklabels([str(int(v)) for v in n], fontsize=7)
        ax.set_xlabel("sensing passes")
        ax.set_ylabel("mean bias (rad)")
        ax.set_title(Path(path).stem, fontsize=8)

    theta_all = np.concatenate(all_theta)
    x_range, y_range = _ranges(theta_all, all_bias)
    return fig, x_range, y_range


_RENDERERS = {
    "fig4": _render_fig4,
    "fig5": _render_fig5,
    "fig6": _render_fig6,
    "fig7": _render_fig7,
    "fig8": _render_fig8,
    "fig9": _render_fig9,
    "fig10": _render_fig10,
    "fig11": _render_fig11,
}


def render(spec: FigureSpec) -> dict:
    """Render one figure spec to its output path.

    Returns the figure id, output path, and the exact data ranges
    (x_range, y_range) taken from the CSV columns; the same values are
    embedded in the image as a corner annotation.
    """
    fig, x_range, y_range = _RENDERERS[spec.figure](spec)
    if spec.title:
        fig.suptitle(spec.title)
    annotation = (f"x:[{x_range[0]:.12g},{x_range[1]:.12g}] "
                  f"y:[{y_range[0]:.12g},{y_range[1]:.12g}]")
    fig.text(0.005, 0.005, annotation, fontsize=5, color="gray")
    fig.tight_layout()
    spec.output.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(spec.output, dpi=120)
    plt.close(fig)
    return {
        "figure": spec.figure,
        "output": str(spec.output),
        "x_range": x_range,
        "y_range": y_range,
        "annotation": annotation,
    }


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="qisac-plots",
        description="Render simulator CSV outputs into figure files.")
    parser.add_argument("--figure", required=True, choices=FIGURES)
    parser.add_argument("--in", dest="inputs", action="append", required=True,
                        help="input CSV path (repeat for multi-input figures)")
    parser.add_argument("--out", required=True, help="output image path")
    parser.add_argument("--title", default=None)
    args = parser.parse_args(argv)
    try:
        result = render(FigureSpec(figure=args.figure, inputs=args.inputs,
                                   output=args.out, title=args.title))
    except SchemaError as exc:
        print(f"schema error: {exc}", file=sys.stderr)
        return 2
    print(result["output"])
    return 0


if __name__ == "__main__":
    sys.exit(main())
