"""
Peak extraction: detection, Lorentzian refinement and report comparison
"""

import logging
from dataclasses import dataclass, field, replace
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from lmfit.models import ConstantModel, LorentzianModel
from scipy import signal

from core.analytic import SpectrumCurve
from core.errors import ComparisonError, EmptySpectrum, FitError
from utils.output import write_csv

log = logging.getLogger(__name__)

DEFAULT_PROMINENCE = 0.05
DEFAULT_MAX_NFEV = 4000


@dataclass(frozen=True)
class Peak:
    center: float
    fwhm: float
    height: float
    center_stderr: Optional[float] = None


@dataclass(frozen=True)
class PeakReport:
    """Peaks sorted by center, with the fit quality when a fit produced them."""
    peaks: Tuple[Peak, ...]
    fit_residual: float = 0.0

    def __post_init__(self):
        ordered = tuple(sorted(self.peaks, key=lambda p: p.center))
        for p in ordered:
            if not p.fwhm > 0:
                raise ValueError(f"peak at {p.center} MHz has non-positive width {p.fwhm}")
        object.__setattr__(self, "peaks", ordered)

    def __len__(self) -> int:
        return len(self.peaks)

    @property
    def splitting(self) -> Optional[float]:
        if len(self.peaks) < 2:
            return None
        return self.peaks[-1].center - self.peaks[0].center

    @property
    def centers(self) -> Tuple[float, ...]:
        return tuple(p.center for p in self.peaks)

    def merged(self, other: "PeakReport") -> "PeakReport":
        """Union of two reports, e.g. separately fitted windows around each peak."""
        residual = max(self.fit_residual, other.fit_residual)
        return PeakReport(self.peaks + other.peaks, residual)


@dataclass(frozen=True)
class ShiftSummary:
    """Signed movements of test peaks against reference peaks; positive is rightward."""
    center_deltas: Tuple[float, ...]
    splitting_delta: Optional[float]

    @property
    def left_delta(self) -> float:
        return self.center_deltas[0]

    @property
    def right_delta(self) -> Optional[float]:
        return self.center_deltas[-1] if len(self.center_deltas) > 1 else None

    @property
    def centroid_delta(self) -> float:
        return float(np.mean(self.center_deltas))


def _refine_quadratic(x: np.ndarray, y: np.ndarray, i: int) -> Tuple[float, float]:
    """Vertex of the parabola through samples i-1, i, i+1."""
    if i == 0 or i == len(y) - 1:
        return float(x[i]), float(y[i])
    x0, x1, x2 = x[i - 1], x[i], x[i + 1]
    y0, y1, y2 = y[i - 1], y[i], y[i + 1]
    denom = (x0 - x1) * (x0 - x2) * (x1 - x2)
    a = (x2 * (y1 - y0) + x1 * (y0 - y2) + x0 * (y2 - y1)) / denom
    b = (x2 ** 2 * (y0 - y1) + x1 ** 2 * (y2 - y0) + x0 ** 2 * (y1 - y2)) / denom
    if a >= 0:
        return float(x1), float(y1)
    vertex = -b / (2.0 * a)
    if not x0 <= vertex <= x2:
        return float(x1), float(y1)
    c = y1 - a * x1 ** 2 - b * x1
    return float(vertex), float(a * vertex ** 2 + b * vertex + c)


def find_peaks(curve: SpectrumCurve, prominence: float = DEFAULT_PROMINENCE,
               max_peaks: int = 2) -> PeakReport:
    """
    Locate the dominant maxima of a curve.

    Args:
        curve: Sampled spectrum
        prominence: Threshold as a fraction of the global maximum
        max_peaks: Keep at most this many, tallest first

    Returns:
        PeakReport with centers refined by three-point quadratic interpolation
        and FWHM from linearly interpolated half-height crossings

    Raises:
        EmptySpectrum: nothing rises above the threshold
    """
    x = curve.omega_grid
    y = curve.values
    if y.size < 3:
        raise EmptySpectrum("curve has fewer than three samples")
    top = float(y.max())
    if not top > 0:
        raise EmptySpectrum("curve is identically zero")

    indices, props = signal.find_peaks(y, prominence=prominence * top)
    if indices.size == 0:
        raise EmptySpectrum(f"no peak above {prominence:.0%} prominence")

    order = np.argsort(y[indices])[::-1][:max_peaks]
    indices = np.sort(indices[order])

    heights = y[indices]
    widths = signal.peak_widths(
        y, indices, rel_height=0.5,
        prominence_data=(heights, np.zeros_like(indices), np.full_like(indices, y.size - 1)),
    )
    sample_axis = np.arange(y.size)
    left = np.interp(widths[2], sample_axis, x)
    right = np.interp(widths[3], sample_axis, x)

    peaks = []
    for k, i in enumerate(indices):
        center, height = _refine_quadratic(x, y, int(i))
        fwhm = float(right[k] - left[k])
        if not fwhm > 0:
            fwhm = float(np.min(np.diff(x)))
        peaks.append(Peak(center=center, fwhm=fwhm, height=height))
    return PeakReport(tuple(peaks))


def _lorentzian_model(count: int):
    model = ConstantModel(prefix="bg_")
    for k in range(count):
        model = model + LorentzianModel(prefix=f"p{k}_")
    return model


def fit_lorentzian_pair(curve: SpectrumCurve, initial: PeakReport,
                        max_nfev: int = DEFAULT_MAX_NFEV) -> PeakReport:
    """
    Least-squares fit of one or two Lorentzians plus a constant baseline.

    The fit runs in coordinates centered on the initial peaks and scaled by
    their mean width, with values scaled to unit maximum.

    Args:
        curve: Samples to fit
        initial: Starting peaks; the first two are used
        max_nfev: Bound on function evaluations

    Returns:
        PeakReport with fitted centers, widths, heights, center standard
        errors and the normalized RMS residual

    Raises:
        FitError: the optimizer did not converge within max_nfev
    """
    if len(initial) < 1:
        raise ValueError("initial report must contain at least one peak")
    seeds = initial.peaks[:2]

    x_ref = float(np.mean([p.center for p in seeds]))
    scale = float(np.mean([p.fwhm for p in seeds]))
    y_scale = float(curve.values.max())
    if not (scale > 0 and y_scale > 0):
        raise FitError("degenerate initial widths or an all-zero curve")
    u = (curve.omega_grid - x_ref) / scale
    v = curve.values / y_scale

    model = _lorentzian_model(len(seeds))
    params = model.make_params()
    params["bg_c"].set(value=0.0)
    for k, p in enumerate(seeds):
        sigma = p.fwhm / scale / 2.0
        height = p.height / y_scale
        params[f"p{k}_center"].set(value=(p.center - x_ref) / scale, min=u[0], max=u[-1])
        params[f"p{k}_sigma"].set(value=sigma, min=1e-9)
        params[f"p{k}_amplitude"].set(value=height * np.pi * sigma, min=0.0)

    try:
        result = model.fit(v, params, x=u, max_nfev=max_nfev)
    except (ValueError, TypeError) as e:
        raise FitError(f"Lorentzian fit failed: {e}",
                       {name: par.value for name, par in params.items()}) from e

    last = {name: float(par.value) for name, par in result.params.items()}
    if not result.success or (result.nfev is not None and result.nfev >= max_nfev):
        raise FitError(f"Lorentzian fit did not converge: {result.message}", last)

    peaks = []
    for k in range(len(seeds)):
        c = result.params[f"p{k}_center"]
        sigma = result.params[f"p{k}_sigma"].value
        amplitude = result.params[f"p{k}_amplitude"].value
        stderr = None if c.stderr is None else float(c.stderr) * scale
        peaks.append(Peak(
            center=x_ref + float(c.value) * scale,
            fwhm=2.0 * sigma * scale,
            height=amplitude / (np.pi * sigma) * y_scale,
            center_stderr=stderr,
        ))
    residual = float(np.sqrt(np.mean(result.residual ** 2)))
    log.debug("Fitted %d Lorentzian(s) in %d evaluations, residual %.3g", len(peaks), result.nfev, residual)
    return PeakReport(tuple(peaks), fit_residual=residual)


def fit_peaks_in_windows(curve_factory, centers: Sequence[float], half_width: float,
                         points: int = 20_000) -> PeakReport:
    """
    Fit each peak separately on its own narrow window.

    ``curve_factory(grid)`` must return a SpectrumCurve on ``grid``. Used where
    shifts lie far below any affordable grid resolution over the full doublet.
    """
    report: Optional[PeakReport] = None
    for center in centers:
        grid = np.linspace(center - half_width, center + half_width, points)
        window = curve_factory(grid)
        seed = find_peaks(window, max_peaks=1)
        fitted = fit_lorentzian_pair(window, seed)
        report = fitted if report is None else report.merged(fitted)
    if report is None:
        raise ValueError("no window centers given")
    return report


def compare_reports(test: PeakReport, reference: PeakReport) -> ShiftSummary:
    """
    Per-peak center deltas (test minus reference) with peaks matched by nearest center.

    Raises:
        ComparisonError: peak counts differ or nearest-center matching is not one-to-one
    """
    if len(test) != len(reference):
        raise ComparisonError(
            f"cannot compare {len(test)} peak(s) against {len(reference)} reference peak(s)"
        )
    if len(reference) == 0:
        raise ComparisonError("reports contain no peaks")
    test_centers = np.array(test.centers)
    matches = [int(np.argmin(np.abs(test_centers - c))) for c in reference.centers]
    if len(set(matches)) != len(matches):
        raise ComparisonError("nearest-center matching is ambiguous")

    deltas = tuple(float(test_centers[j] - c) for j, c in zip(matches, reference.centers))
    splitting_delta = None
    if test.splitting is not None and reference.splitting is not None:
        splitting_delta = test.splitting - reference.splitting
    return ShiftSummary(center_deltas=deltas, splitting_delta=splitting_delta)


def export_report_csv(reports: Dict[str, PeakReport], path) -> None:
    """One row per (label, peak)."""
    rows = []
    for label, report in reports.items():
        for k, p in enumerate(report.peaks):
            rows.append([label, k, p.center, p.fwhm, p.height, p.center_stderr, report.fit_residual])
    write_csv(path, ["case", "peak_index", "center_MHz", "fwhm_MHz", "height_au",
                     "center_stderr_MHz", "fit_residual"], rows)


def summarize(report: PeakReport) -> str:
    """Structured one-block text summary for console output."""
    lines = [f"  peak {k}: center {p.center:.6f} MHz  fwhm {p.fwhm:.6f} MHz"
             for k, p in enumerate(report.peaks)]
    if report.splitting is not None:
        lines.append(f"  splitting {report.splitting:.6f} MHz")
    return "\n".join(lines)
