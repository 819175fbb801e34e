import warnings
from dataclasses import replace

import numpy as np
import pytest
from scipy.integrate import trapezoid

from core.analytic import (
    MotionCase,
    Normalization,
    default_grid,
    predicted_peaks,
    spectrum,
    uniform_grid,
    window_grid,
)
from core.errors import PhysicsWarning, RegimeError
from core.oracle import (
    AmplitudeTrajectory,
    BathDiscretization,
    Dressing,
    _transform,
    build_state_space,
    default_baths,
    evolve_discretized,
    evolve_markov,
    export_trajectory_csv,
    integrate_amplitudes,
    markov_spectrum,
    spectrum_from_bath,
    spectrum_from_c1,
)
from core.params import DampingParams, DerivedCouplings
from core.peaks import find_peaks

OMEGA_R = 1000.0


def quantum_offset(dc):
    """Undamped left-peak offset of the exact ladder against the effective model."""
    case = MotionCase.quantum(OMEGA_R, 1)
    effective = np.linalg.eigvalsh(build_state_space(case, dc, dressing=Dressing.EFFECTIVE).hamiltonian())
    exact = np.linalg.eigvalsh(build_state_space(case, dc, dressing=Dressing.EXACT).hamiltonian())
    left = effective.min()
    return exact[np.argmin(np.abs(exact - left))] - left


def test_effective_space_energies(fig3_couplings):
    space = build_state_space(MotionCase.quantum(OMEGA_R, 1), fig3_couplings, dressing=Dressing.EFFECTIVE)
    assert space.labels == ["e,0,1", "g,1,1"]
    e, g = (s.energy for s in space.core_states)
    assert e == pytest.approx(3000.0 + 20.0)
    assert g == pytest.approx(3000.0 - 10.0)
    assert space.carrier == pytest.approx(3005.0)


def test_exact_quantum_space(fig3_couplings):
    space = build_state_space(MotionCase.quantum(OMEGA_R, 1), fig3_couplings, phonon_truncation=2)
    assert space.labels[:2] == ["e,0,1", "g,1,1"]
    assert sorted(space.labels[2:]) == ["e,1,0", "g,0,2"]
    assert space.excluded == ("g,2,0",)
    h = space.hamiltonian()
    np.testing.assert_allclose(h, h.conj().T)
    assert h[0, 1] == pytest.approx(500.0)


def test_exact_classical_space_has_drive(fig3_couplings):
    space = build_state_space(MotionCase.classical(OMEGA_R), fig3_couplings)
    assert space.dimension == 4
    assert space.is_time_dependent
    assert space.drive_frequency == OMEGA_R
    drive = space.drive_matrix(0.25e-3)
    np.testing.assert_allclose(drive, drive.conj().T)
    assert drive[0, 1] == 0.0


def test_invalid_truncation(fig3_couplings):
    with pytest.raises(ValueError):
        build_state_space(MotionCase.none(), fig3_couplings, phonon_truncation=0)


def test_exact_dressing_offset_scales_with_lambda(make_couplings):
    low = quantum_offset(make_couplings(10.0, lam=100.0))
    high = quantum_offset(make_couplings(10.0, lam=200.0))
    assert 0.25 <= low <= 0.33
    assert 1.9 <= high / low <= 2.25


def test_markov_matches_analytic_no_motion(small_lambda_couplings, paper_damping):
    dc, dp = small_lambda_couplings, paper_damping
    grid = default_grid(MotionCase.none(), dc, dp, points=4001)
    numeric = markov_spectrum(MotionCase.none(), dc, dp, grid)
    analytic = spectrum(MotionCase.none(), grid, dc, dp)
    assert np.max(np.abs(numeric.values - analytic.values)) < 0.05


def test_markov_matches_analytic_fig3_quantum(fig3_couplings, paper_damping):
    case = MotionCase.quantum(OMEGA_R, 1)
    grid = default_grid(case, fig3_couplings, paper_damping, points=4001)
    numeric = markov_spectrum(case, fig3_couplings, paper_damping, grid)
    analytic = spectrum(case, grid, fig3_couplings, paper_damping)
    assert np.max(np.abs(numeric.values - analytic.values)) < 0.05


def test_static_propagator_matches_direct_integration(small_lambda_couplings, paper_damping):
    space = build_state_space(MotionCase.classical(OMEGA_R), small_lambda_couplings,
                              dressing=Dressing.EFFECTIVE)
    traj = evolve_markov(space, paper_damping)
    times = traj.times[::50]
    direct = integrate_amplitudes(space, paper_damping, times)
    np.testing.assert_allclose(traj.c1[::50], direct[space.c1_index], atol=1e-7)


@pytest.mark.filterwarnings("ignore::core.errors.PhysicsWarning")
def test_floquet_matches_direct_integration():
    dc = DerivedCouplings.from_frequencies(60.0, 60.0, 10.0, 5.0, 3.0)
    dp = DampingParams(0.6, 0.36)
    space = build_state_space(MotionCase.classical(10.0), dc)
    traj = evolve_markov(space, dp, t_max=2.0)
    direct = integrate_amplitudes(space, dp, traj.times)
    np.testing.assert_allclose(traj.c1, direct[space.c1_index], atol=1e-6)
    np.testing.assert_allclose(traj.core_norm, np.sum(np.abs(direct) ** 2, axis=0), atol=1e-6)


def test_markov_matches_analytic_fig2b_classical(fig2b_couplings, paper_damping):
    case = MotionCase.classical(OMEGA_R)
    grid = default_grid(case, fig2b_couplings, paper_damping, points=4001)
    numeric = markov_spectrum(case, fig2b_couplings, paper_damping, grid)
    analytic = spectrum(case, grid, fig2b_couplings, paper_damping)
    assert np.max(np.abs(numeric.values - analytic.values)) < 0.05


def test_lossless_resonant_exchange(make_couplings):
    space = build_state_space(MotionCase.none(), make_couplings(0.2, lam=5.0))
    traj = evolve_markov(space, DampingParams(0.0, 0.0), t_max=0.2, dt_control=1e-3)
    population = np.abs(traj.c1) ** 2
    np.testing.assert_allclose(population, np.sin(2 * np.pi * 5.0 * traj.times) ** 2, atol=1e-10)
    assert population.max() == pytest.approx(1.0, abs=1e-10)
    np.testing.assert_allclose(traj.core_norm, 1.0, atol=1e-10)


def test_single_decaying_state(make_couplings, paper_damping):
    space = build_state_space(MotionCase.none(), make_couplings(0.0, lam=0.0))
    traj = evolve_markov(space, paper_damping, dt_control=1e-2)
    assert np.max(np.abs(traj.c1)) < 1e-12
    np.testing.assert_allclose(np.abs(traj.c2) ** 2,
                               np.exp(-2 * np.pi * paper_damping.gamma_d * traj.times), rtol=1e-9)

    # transform of the lone |e, 0> amplitude
    grid = window_grid(3000.0, 3.0, 6001)
    line = find_peaks(spectrum_from_c1(replace(traj, c1=traj.c2), grid), max_peaks=1).peaks[0]
    assert line.center == pytest.approx(3000.0, abs=1e-3)
    assert line.fwhm == pytest.approx(paper_damping.gamma_d, rel=0.02)


@pytest.mark.parametrize("n_c", [1, 2])
def test_phonon_truncation_converged(fig2b_couplings, paper_damping, n_c):
    dc, dp = fig2b_couplings, paper_damping
    case = MotionCase.quantum(OMEGA_R, n_c)
    grid = default_grid(case, dc, dp, points=4001)
    with warnings.catch_warnings():
        warnings.simplefilter("error", PhysicsWarning)
        shallow, deep = (markov_spectrum(case, dc, dp, grid, Dressing.EXACT, phonon_truncation=depth)
                         for depth in (1, 2))
    moved = np.abs(np.array(find_peaks(deep).centers) - find_peaks(shallow).centers)
    assert np.all(moved < dc.zeta * dc.eta ** 2)


def synthetic_trajectory(radiating_tail):
    times = np.linspace(0.0, 1.0, 5)
    return AmplitudeTrajectory(
        times=times,
        c1=np.exp(-3.0 * times).astype(complex),
        c2=np.zeros(5, dtype=complex),
        core_extra=np.zeros((1, 5), dtype=complex),
        extra_labels=("g,0",),
        carrier=0.0,
        core_norm=np.array([1.0, 0.5, 0.1, 0.01, 2e-3]),
        radiating_norm=np.array([1.0, 0.5, 0.1, 0.01, radiating_tail]),
    )


def test_undamped_residual_does_not_warn():
    grid = np.linspace(-1.0, 1.0, 11)
    with warnings.catch_warnings():
        warnings.simplefilter("error", PhysicsWarning)
        spectrum_from_c1(synthetic_trajectory(1e-8), grid)
    with pytest.warns(PhysicsWarning, match="damped core norm"):
        spectrum_from_c1(synthetic_trajectory(1e-3), grid)


def test_short_run_warns(small_lambda_couplings, paper_damping):
    space = build_state_space(MotionCase.none(), small_lambda_couplings)
    with pytest.warns(Warning, match="t_max"):
        evolve_markov(space, paper_damping, t_max=1.0)


def test_czt_and_direct_sum_agree():
    times = np.linspace(0.0, 5.0, 2001)
    samples = np.exp(-2j * np.pi * 0.7 * times - 0.3 * times)
    wide = np.linspace(-3.0, 3.0, 61)
    narrow = wide[20:30]
    np.testing.assert_allclose(_transform(times, samples, wide)[20:30],
                               _transform(times, samples, narrow), rtol=1e-8)


def test_bath_discretization():
    bath = BathDiscretization.flat(6000.0, 100.0, 2000, 0.6)
    assert bath.spacing == pytest.approx(0.1)
    assert bath.rate == pytest.approx(0.6)
    assert bath.recurrence_time == pytest.approx(10.0)
    assert bath.frequencies[0] == pytest.approx(5900.05)
    with pytest.raises(ValueError):
        BathDiscretization(10, 0.0, 1.0, 0.3, 0.1)


def test_bath_recurrence_guard(small_lambda_couplings, paper_damping):
    space = build_state_space(MotionCase.none(), small_lambda_couplings)
    baths = default_baths(space, paper_damping, 100.0, 200)
    with pytest.raises(RegimeError, match="recurrence"):
        evolve_discretized(space, baths, t_max=1.0)


def test_bath_needs_two_state_model(fig3_couplings, paper_damping):
    space = build_state_space(MotionCase.quantum(OMEGA_R, 1), fig3_couplings)
    baths = (BathDiscretization.flat(6000.0, 100.0, 10, 0.6),) * 2
    with pytest.raises(ValueError, match="two-state"):
        evolve_discretized(space, baths, t_max=1.0)


def test_bath_spectrum_needs_bath(small_lambda_couplings, paper_damping):
    traj = evolve_markov(build_state_space(MotionCase.none(), small_lambda_couplings), paper_damping)
    with pytest.raises(ValueError, match="bath"):
        spectrum_from_bath(traj)


@pytest.mark.filterwarnings("ignore::core.errors.PhysicsWarning")
def test_uncoupled_bath_stays_empty(make_couplings, paper_damping):
    space = build_state_space(MotionCase.none(), make_couplings(0.2, lam=0.0))
    baths = default_baths(space, paper_damping, 100.0, 200)
    traj = evolve_discretized(space, baths, t_max=0.5)
    assert not spectrum_from_bath(traj).values.any()
    assert not spectrum_from_bath(traj, normalization=Normalization.RAW).values.any()


@pytest.mark.slow
@pytest.mark.parametrize("label", ["N", "Q"])
def test_discretized_bath(small_lambda_couplings, paper_damping, label):
    dc, dp = small_lambda_couplings, paper_damping
    case = MotionCase.from_label(label, OMEGA_R, 1)
    space = build_state_space(case, dc, dressing=Dressing.EFFECTIVE)
    baths = default_baths(space, dp, half_bandwidth=100.0, mode_count=2000)
    step = 1.0 / (50.0 * 100.0)
    traj = evolve_discretized(space, baths, t_max=4.0, dt=step)

    assert np.max(np.abs(traj.total_norm - 1.0)) < 1e-6
    assert traj.final_core_norm < 1e-4
    occupation = np.sum(np.abs(traj.bath_c) ** 2) + np.sum(np.abs(traj.bath_d) ** 2)
    assert occupation == pytest.approx(1.0, abs=1e-4)

    bath = spectrum_from_bath(traj)
    c1 = spectrum_from_c1(traj, bath.omega_grid)
    assert np.max(np.abs(bath.values - c1.values)) < 0.05

    markov = evolve_markov(space, dp, t_max=4.0, dt_control=step)
    assert markov.times.size == traj.times.size
    scale = np.abs(markov.c1).max()
    assert np.max(np.abs(np.abs(traj.c1) - np.abs(markov.c1))) / scale < 0.02

    # photon decay feeds the c-bath at 2 pi gamma_c |c1|^2
    emitted = 2 * np.pi * dp.gamma_c * trapezoid(np.abs(traj.c1) ** 2, traj.times)
    raw = spectrum_from_bath(traj, normalization=Normalization.RAW)
    assert raw.values.sum() == pytest.approx(emitted, rel=0.02)

    tallest = bath.omega_grid[np.argmax(bath.values)]
    assert min(abs(tallest - c) for c in predicted_peaks(case, dc, dp).centers) < 0.5


def test_trajectory_csv(tmp_path, fig3_couplings, paper_damping):
    space = build_state_space(MotionCase.quantum(OMEGA_R, 1), fig3_couplings)
    traj = evolve_markov(space, paper_damping, t_max=0.01, dt_control=1e-3)
    path = tmp_path / "traj.csv"
    export_trajectory_csv(traj, path)
    header = path.read_text(encoding="utf-8").splitlines()[0].split(",")
    assert header[:5] == ["time_us", "re_c1", "im_c1", "re_c2", "im_c2"]
    assert header[-1] == "core_norm"
    assert len(header) == 5 + 2 * len(traj.extra_labels) + 1


def test_uniform_grid_guard():
    with pytest.raises(ValueError):
        uniform_grid(1.0, 1.0, 10)
