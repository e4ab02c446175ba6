"""Figure generation from the CSV artifacts of a run.

The figures are produced by a standalone script written next to the CSVs
(``plot.py``), so they can be regenerated without this package.  The
script needs matplotlib; nothing here imports it until a figure is drawn.
"""

from __future__ import annotations

import runpy
from pathlib import Path

__all__ = ["PLOT_SPECS", "emit_plot_script", "render_figures"]

# (figure file, source CSV, kind, title)
PLOT_SPECS = (
    ("samples_hist.png", "samples.csv", "histogram", "diffusivity samples"),
    ("uncontrolled_surface.png", "uncontrolled.csv", "surface", "averaged state without control, modulus"),
    ("control_surface.png", "control.csv", "surface", "control, modulus"),
    ("controlled_surface.png", "controlled.csv", "surface", "averaged controlled state, modulus"),
    ("terminal_slice.png", "controlled.csv", "slice", "averaged controlled state at t = T"),
)

_SCRIPT = '''\
"""Regenerate the figures of one run from its CSV files.

Usage: python plot.py [artifact_dir]   (default: the directory of this file)
"""
import csv
import os
import sys

PLOT_SPECS = {specs!r}


def _read(path):
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    return {{k: [float(r[k]) for r in rows] for k in rows[0]}} if rows else {{}}


def _grid(data, column):
    import numpy as np

    t = np.unique(data["time"])
    x = np.unique(data["x"])
    z = np.asarray(data[column]).reshape(t.size, x.size)
    return t, x, z


def plot_all(directory):
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt
    import numpy as np

    written = []
    for fname, source, kind, title in PLOT_SPECS:
        path = os.path.join(directory, source)
        if not os.path.exists(path):
            print(f"skipping {{fname}}: {{source}} not found", file=sys.stderr)
            continue
        data = _read(path)
        if not data:
            print(f"skipping {{fname}}: {{source}} is empty", file=sys.stderr)
            continue
        if kind == "histogram":
            fig, ax = plt.subplots(figsize=(5, 3.5))
            a = np.asarray(data["alpha"])
            lo, hi = np.percentile(a, [1, 99]) if a.size > 20 else (a.min(), a.max())
            ax.hist(a[(a >= lo) & (a <= hi)], bins=min(40, max(5, a.size // 3)), color="0.6", edgecolor="k")
            ax.set_xlabel("alpha")
            ax.set_ylabel("count")
        elif kind == "surface":
            t, x, z = _grid(data, "modulus")
            fig = plt.figure(figsize=(6, 4.5))
            ax = fig.add_subplot(projection="3d")
            X, Tm = np.meshgrid(x, t)
            ax.plot_surface(X, Tm, z, cmap="viridis", linewidth=0)
            ax.set_xlabel("x")
            ax.set_ylabel("t")
        else:
            t, x, mod = _grid(data, "modulus")
            _, _, re = _grid(data, "re")
            fig, ax = plt.subplots(figsize=(5, 3.5))
            ax.plot(x, mod[-1], label="modulus")
            ax.plot(x, re[-1], "--", label="real part")
            ax.set_xlabel("x")
            ax.legend()
        ax.set_title(title)
        fig.tight_layout()
        out = os.path.join(directory, fname)
        fig.savefig(out, dpi=110)
        plt.close(fig)
        written.append(out)
    return written


if __name__ == "__main__":
    plot_all(sys.argv[1] if len(sys.argv) > 1 else os.path.dirname(os.path.abspath(__file__)))
'''


def emit_plot_script(directory) -> Path:
    """Write ``plot.py`` into ``directory``; it reads only the CSVs found there."""
    path = Path(directory) / "plot.py"
    path.write_text(_SCRIPT.format(specs=PLOT_SPECS))
    return path


def render_figures(directory) -> list[str]:
    """Emit the script if needed and run it in-process; returns the PNG paths."""
    script = Path(directory) / "plot.py"
    if not script.exists():
        emit_plot_script(directory)
    return runpy.run_path(str(script))["plot_all"](str(directory))
