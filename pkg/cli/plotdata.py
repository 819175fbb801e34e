"""
Gnuplot-ready data files and a matplotlib script stub from a scenario bundle
"""

import csv
import logging
from pathlib import Path
from typing import List, Tuple

import numpy as np

from core.settings import RunManifest
from utils.output import atomic_write_text, format_float

log = logging.getLogger(__name__)

PLOT_SCRIPT = '''"""Overlay of the spectra around the left peak. Run from the bundle directory."""

import matplotlib.pyplot as plt
import numpy as np

with open("plot_left.dat", encoding="utf-8") as f:
    labels = f.readline().lstrip("#").split()[1:]
data = np.loadtxt("plot_left.dat")
fig, ax = plt.subplots(figsize=(6, 4))
for k, label in enumerate(labels, start=1):
    ax.plot(data[:, 0], data[:, k], label=label)
ax.set_xlabel("omega / 2 pi (MHz)")
ax.set_ylabel("S_V (unit peak)")
ax.set_title("{title}")
ax.legend()
fig.tight_layout()
fig.savefig("spectra_left.png", dpi=150)
'''


def read_curves(path: Path) -> Tuple[List[str], np.ndarray]:
    """Column labels (without unit suffixes) and the numeric table of curves.csv."""
    with open(path, "r", encoding="utf-8", newline="") as f:
        reader = csv.reader(f)
        header = next(reader)
        rows = [[float(v) for v in row] for row in reader if row]
    labels = [name.replace("_rel", "") for name in header]
    return labels, np.array(rows, dtype=float)


def split_windows(grid: np.ndarray) -> List[slice]:
    """Break the grid at its largest gap when that gap dwarfs the typical step."""
    if grid.size < 3:
        return [slice(0, grid.size)]
    steps = np.diff(grid)
    k = int(np.argmax(steps))
    if steps[k] <= 10.0 * float(np.median(steps)):
        return [slice(0, grid.size)]
    return [slice(0, k + 1), slice(k + 1, grid.size)]


def plot_title(bundle: Path) -> str:
    """Scenario name and cases from the bundle manifest, or the directory name."""
    manifest = RunManifest.load(bundle / "manifest.json")
    if not manifest:
        return bundle.name
    parameters = manifest.get("parameters", {})
    name = parameters.get("name") or bundle.name
    cases = parameters.get("cases")
    return f"{name}: cases {', '.join(cases)}" if cases else name


def _render(labels: List[str], blocks: List[np.ndarray]) -> str:
    lines = ["# " + " ".join(labels)]
    for n, block in enumerate(blocks):
        if n:
            lines.append("")
        for row in block:
            lines.append(" ".join(format_float(v) for v in row))
    return "\n".join(lines) + "\n"


def emit_plotdata(bundle: Path) -> List[Path]:
    """
    Write plot.dat (both windows, blank-line separated), plot_left.dat and
    plot_spectra.py into the bundle directory.

    Raises:
        FileNotFoundError: the bundle has no curves.csv
    """
    bundle = Path(bundle)
    curves = bundle / "curves.csv"
    if not curves.exists():
        raise FileNotFoundError(f"{curves} not found; run the scenario first")
    labels, table = read_curves(curves)
    windows = split_windows(table[:, 0])

    written = [
        atomic_write_text(bundle / "plot.dat", _render(labels, [table[w] for w in windows])),
        atomic_write_text(bundle / "plot_left.dat", _render(labels, [table[windows[0]]])),
        atomic_write_text(bundle / "plot_spectra.py",
                          PLOT_SCRIPT.replace("{title}", plot_title(bundle))),
    ]
    log.info("Wrote plot data for %d curve(s) into %s", len(labels) - 1, bundle)
    return written
