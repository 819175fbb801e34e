import numpy as np
import pytest

from core.analytic import SpectrumCurve
from core.errors import ComparisonError, EmptySpectrum, FitError
from core.peaks import (
    Peak,
    PeakReport,
    compare_reports,
    export_report_csv,
    find_peaks,
    fit_lorentzian_pair,
    fit_peaks_in_windows,
    summarize,
)


def lorentzian(x, center, fwhm, height=1.0):
    half = fwhm / 2.0
    return height * half ** 2 / ((x - center) ** 2 + half ** 2)


def doublet(grid, centers=(10.0, 14.0), fwhm=0.5, heights=(1.0, 0.7), baseline=0.0):
    values = baseline + sum(lorentzian(grid, c, fwhm, h) for c, h in zip(centers, heights))
    return SpectrumCurve(grid, values)


def test_find_peaks_locates_doublet():
    grid = np.linspace(5.0, 20.0, 6001)
    report = find_peaks(doublet(grid))
    assert report.centers == pytest.approx((10.0, 14.0), abs=1e-3)
    for p in report.peaks:
        assert p.fwhm == pytest.approx(0.5, rel=0.02)
    assert report.splitting == pytest.approx(4.0, abs=2e-3)


def test_find_peaks_keeps_tallest():
    grid = np.linspace(5.0, 20.0, 6001)
    report = find_peaks(doublet(grid, heights=(1.0, 0.3)), max_peaks=1)
    assert len(report) == 1
    assert report.peaks[0].center == pytest.approx(10.0, abs=1e-3)


def test_find_peaks_empty():
    grid = np.linspace(0.0, 1.0, 11)
    with pytest.raises(EmptySpectrum):
        find_peaks(SpectrumCurve(grid, np.zeros_like(grid)))
    with pytest.raises(EmptySpectrum):
        find_peaks(SpectrumCurve(grid, np.ones_like(grid)))


def test_fit_recovers_exact_lorentzians():
    grid = np.linspace(5.0, 20.0, 3001)
    curve = doublet(grid, centers=(10.01234, 14.0), baseline=0.05)
    report = fit_lorentzian_pair(curve, find_peaks(curve))
    assert report.centers == pytest.approx((10.01234, 14.0), abs=1e-7)
    assert report.peaks[0].fwhm == pytest.approx(0.5, rel=1e-6)
    assert report.peaks[0].height == pytest.approx(1.0, rel=1e-5)
    assert report.fit_residual < 1e-6


def test_fit_follows_grid_translation():
    grid = np.linspace(5.0, 20.0, 3001)
    curve = doublet(grid, centers=(10.01234, 14.0), baseline=0.05)
    moved = SpectrumCurve(grid + 123.456, curve.values)
    report = fit_lorentzian_pair(curve, find_peaks(curve))
    shifted = fit_lorentzian_pair(moved, find_peaks(moved))
    for a, b in zip(report.centers, shifted.centers):
        assert b - a == pytest.approx(123.456, abs=0.5e-6)


def test_fit_ignores_overall_scale():
    grid = np.linspace(5.0, 20.0, 3001)
    curve = doublet(grid, centers=(10.01234, 14.0))
    louder = SpectrumCurve(grid, 250.0 * curve.values)
    seeds, loud_seeds = find_peaks(curve), find_peaks(louder)
    assert loud_seeds.centers == pytest.approx(seeds.centers, abs=1e-12)
    assert [p.fwhm for p in loud_seeds.peaks] == pytest.approx([p.fwhm for p in seeds.peaks], rel=1e-12)
    report, loud = fit_lorentzian_pair(curve, seeds), fit_lorentzian_pair(louder, loud_seeds)
    assert loud.centers == pytest.approx(report.centers, abs=1e-9)
    assert loud.splitting == pytest.approx(report.splitting, abs=1e-9)
    assert [p.fwhm for p in loud.peaks] == pytest.approx([p.fwhm for p in report.peaks], rel=1e-9)


def test_fit_beats_grid_spacing():
    # spacing = FWHM / 5, centers off the grid
    grid = np.linspace(5.0, 20.0, 151)
    spacing = grid[1] - grid[0]
    truth = (10.0437, 14.0712)
    curve = doublet(grid, centers=truth)
    report = fit_lorentzian_pair(curve, find_peaks(curve))
    errors = np.abs(np.array(report.centers) - truth)
    assert np.all(errors < spacing / 10.0)


def test_refit_is_a_fixed_point():
    grid = np.linspace(5.0, 20.0, 3001)
    curve = doublet(grid, centers=(10.01234, 14.0), baseline=0.05)
    report = fit_lorentzian_pair(curve, find_peaks(curve))
    again = fit_lorentzian_pair(curve, report)
    assert again.centers == pytest.approx(report.centers, abs=0.5e-6)


def test_fit_reports_last_iterate():
    grid = np.linspace(5.0, 20.0, 3001)
    curve = doublet(grid)
    seed = PeakReport((Peak(9.0, 2.0, 0.5), Peak(15.0, 2.0, 0.5)))
    with pytest.raises(FitError) as info:
        fit_lorentzian_pair(curve, seed, max_nfev=2)
    assert "p0_center" in info.value.last_iterate


def test_windowed_fit_resolves_sub_grid_shift():
    def factory(shift):
        return lambda g: SpectrumCurve(g, lorentzian(g, 100.0 + shift, 0.48) + lorentzian(g, 1100.0, 0.48))

    reference = fit_peaks_in_windows(factory(0.0), [100.0, 1100.0], half_width=1.0, points=4001)
    moved = fit_peaks_in_windows(factory(8e-5), [100.0, 1100.0], half_width=1.0, points=4001)
    shifts = compare_reports(moved, reference)
    assert shifts.left_delta == pytest.approx(8e-5, rel=0.01)
    assert shifts.right_delta == pytest.approx(0.0, abs=1e-8)
    assert shifts.splitting_delta == pytest.approx(-8e-5, rel=0.01)


def test_compare_mismatched_counts():
    one = PeakReport((Peak(1.0, 0.1, 1.0),))
    two = PeakReport((Peak(1.0, 0.1, 1.0), Peak(2.0, 0.1, 1.0)))
    with pytest.raises(ComparisonError):
        compare_reports(one, two)


def test_compare_ambiguous_matching():
    test = PeakReport((Peak(1.0, 0.1, 1.0), Peak(5.0, 0.1, 1.0)))
    reference = PeakReport((Peak(0.9, 0.1, 1.0), Peak(1.2, 0.1, 1.0)))
    with pytest.raises(ComparisonError, match="ambiguous"):
        compare_reports(test, reference)


def test_report_invariants():
    report = PeakReport((Peak(3.0, 0.1, 1.0), Peak(1.0, 0.2, 1.0)))
    assert report.centers == (1.0, 3.0)
    assert report.splitting == 2.0
    with pytest.raises(ValueError, match="width"):
        PeakReport((Peak(1.0, 0.0, 1.0),))
    assert PeakReport((Peak(1.0, 0.1, 1.0),)).splitting is None


def test_report_csv_and_summary(tmp_path):
    report = PeakReport((Peak(1.0, 0.1, 1.0, 1e-6), Peak(3.0, 0.1, 0.5)), fit_residual=1e-3)
    path = tmp_path / "peaks.csv"
    export_report_csv({"N": report}, path)
    lines = path.read_text(encoding="utf-8").split("\n")
    assert lines[0] == "case,peak_index,center_MHz,fwhm_MHz,height_au,center_stderr_MHz,fit_residual"
    assert lines[1].startswith("N,0,1.0000000000000000e+00,")
    assert lines[2].split(",")[5] == ""
    assert "splitting 2.000000 MHz" in summarize(report)
