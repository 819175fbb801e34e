"""
Parameter sweeps over a base scenario, one long-form CSV row per (value, case)
"""

import logging
import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from cli.config import SweepSpec
from cli.scenario import CaseMeasurement, measure_cases
from core.errors import PhysicsWarning
from core.settings import RunManifest
from utils.output import write_csv

log = logging.getLogger(__name__)

SWEEP_HEADER = [
    "parameter", "value", "case", "n_c", "left_MHz", "right_MHz", "splitting_MHz",
    "left_shift_MHz", "centroid_shift_MHz", "splitting_increment_MHz", "status",
]

# Columns whose log-log slope is meaningful per case
SLOPE_COLUMNS = {
    "C": ("splitting_increment_MHz",),
    "Q": ("centroid_shift_MHz", "splitting_increment_MHz"),
}


@dataclass(frozen=True)
class SweepRow:
    parameter: str
    value: float
    case: str
    n_c: int
    measurement: CaseMeasurement

    @property
    def flagged(self) -> bool:
        return not self.measurement.ok

    def cells(self) -> list:
        m = self.measurement
        if m.report is None or m.shifts is None:
            data = [None] * 6
        else:
            data = [m.report.centers[0], m.report.centers[-1], m.report.splitting,
                    m.shifts.left_delta, m.shifts.centroid_delta, m.shifts.splitting_delta]
        return [self.parameter, self.value, self.case, self.n_c] + data + [m.failure or "ok"]

    def column(self, name: str) -> Optional[float]:
        return dict(zip(SWEEP_HEADER, self.cells())).get(name)


@dataclass
class SweepResult:
    spec: SweepSpec
    rows: List[SweepRow]
    slopes: Dict[Tuple[str, str], Optional[float]] = field(default_factory=dict)
    outputs: List[Path] = field(default_factory=list)
    warnings: List[str] = field(default_factory=list)

    @property
    def exit_status(self) -> int:
        return 1 if any(r.flagged for r in self.rows) else 0


def loglog_slope(xs: Sequence[float], ys: Sequence[Optional[float]]) -> Optional[float]:
    """Least-squares slope of log|y| against log x over usable points; None below two."""
    pairs = [(x, abs(y)) for x, y in zip(xs, ys)
             if y is not None and x > 0 and math.isfinite(y) and abs(y) > 0]
    if len(pairs) < 2:
        return None
    x, y = np.log(np.array(pairs)).T
    return float(np.polyfit(x, y, 1)[0])


def slope_abscissa(parameter: str, value: float) -> float:
    """n_c enters the quantum increment as (n_c + 1/2)."""
    return value + 0.5 if parameter == "n_c" else value


def compute_slopes(spec: SweepSpec, rows: Sequence[SweepRow]) -> Dict[Tuple[str, str], Optional[float]]:
    slopes = {}
    for case in spec.case_labels:
        for column in SLOPE_COLUMNS.get(case, ()):
            picked = [r for r in rows if r.case == case]
            xs = [slope_abscissa(spec.parameter, r.value) for r in picked]
            slopes[(case, column)] = loglog_slope(xs, [r.column(column) for r in picked])
    return slopes


def _sweep_point(spec: SweepSpec, value: float) -> List[SweepRow]:
    scenario = spec.scenario_for(value)
    baseline, measurements = measure_cases(scenario)
    rows = []
    for label in scenario.case_labels:
        m = measurements[label]
        if m.ok and not baseline.ok:
            m = replace(m, failure=f"baseline {baseline.failure}")
        rows.append(SweepRow(spec.parameter, value, label, scenario.n_c, m))
    return rows


def run_sweep(spec: SweepSpec, out: Optional[Path] = None, workers: int = 1,
              strict: bool = False) -> SweepResult:
    """
    Evaluate every sweep value concurrently and write sweep.csv plus the manifest.

    Flagged rows (regime guards, failed fits) stay in the table with empty
    numeric cells and a status message.
    """
    if out is not None:
        directory = Path(out)
    else:
        directory = spec.output_dir or Path("out") / spec.name
    directory.mkdir(parents=True, exist_ok=True)
    log.info("Sweeping %s over %d values with %d worker(s)", spec.parameter, len(spec.values), workers)

    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("error" if strict else "always", PhysicsWarning)
        with ThreadPoolExecutor(max_workers=max(1, workers)) as executor:
            point_rows = list(executor.map(lambda v: _sweep_point(spec, v), spec.values))

    rows = [row for point in point_rows for row in point]
    result = SweepResult(spec, rows, compute_slopes(spec, rows))
    result.warnings = [str(w.message) for w in caught if issubclass(w.category, PhysicsWarning)]
    result.outputs.append(write_csv(directory / "sweep.csv", SWEEP_HEADER, [r.cells() for r in rows]))

    manifest = RunManifest(
        command="sweep",
        parameters={
            "name": spec.name,
            "parameter": spec.parameter,
            "values": list(spec.values),
            "cases": list(spec.case_labels),
            "base": spec.base.parameters(),
        },
        outputs=[p.name for p in result.outputs],
        checks={
            "flagged": [f"{r.value} {r.case}: {r.measurement.failure}" for r in rows if r.flagged],
            "slopes": {f"{case}:{column}": slope for (case, column), slope in result.slopes.items()},
        },
        warnings=result.warnings,
        exit_status=result.exit_status,
    )
    manifest.save(directory / "manifest.json")
    return result


def format_summary(result: SweepResult) -> str:
    lines = [f"Sweep {result.spec.name}: {result.spec.parameter}"]
    for r in result.rows:
        m = r.measurement
        if m.shifts is None or m.shifts.splitting_delta is None:
            lines.append(f"  {r.value:>12.6g} {r.case}  {m.failure or 'no case-N baseline'}")
        else:
            lines.append(f"  {r.value:>12.6g} {r.case}  centroid shift {m.shifts.centroid_delta:.6e} MHz"
                         f"  increment {m.shifts.splitting_delta:.6e} MHz")
    for (case, column), slope in result.slopes.items():
        shown = "n/a" if slope is None else f"{slope:.4f}"
        lines.append(f"  log-log slope {case} {column}: {shown}")
    return "\n".join(lines)
