import numpy as np
import pytest

from core.analytic import MotionCase, splitting_params
from core.dispersive import (
    dispersive_error_scaling,
    effective_shifts,
    exact_jc_levels,
    exact_shifts,
    export_error_table_csv,
    shift_error,
)
from core.errors import RegimeError

OMEGA_R = 1000.0


def test_effective_shifts(weak_couplings):
    x = weak_couplings.zeta ** 2 / weak_couplings.delta
    classical = effective_shifts(MotionCase.classical(OMEGA_R), weak_couplings)
    assert classical.shift_e == pytest.approx(x)
    assert classical.asymmetry == pytest.approx(0.0)
    quantum = effective_shifts(MotionCase.quantum(OMEGA_R, 2), weak_couplings)
    assert quantum.shift_e == pytest.approx(3 * x)
    assert quantum.shift_g == pytest.approx(-2 * x)
    assert quantum.transition_shift == pytest.approx(5 * x)
    assert effective_shifts(MotionCase.none(), weak_couplings).transition_shift == 0.0


def test_transition_shift_matches_rho(weak_couplings, paper_damping):
    case = MotionCase.quantum(OMEGA_R, 1)
    rho = splitting_params(case, weak_couplings, paper_damping).rho
    assert effective_shifts(case, weak_couplings).transition_shift == pytest.approx(rho)


def test_effective_shifts_outside_regime(weak_couplings):
    with pytest.raises(RegimeError):
        effective_shifts(MotionCase.quantum(OMEGA_R, 1), weak_couplings.with_zeta(600.0))


def test_resonant_ladder_closed_form(weak_couplings):
    levels = exact_jc_levels(weak_couplings, 5, resonant=True)
    expected = 2.0 * weak_couplings.zeta * np.sqrt(levels.excitations)
    np.testing.assert_allclose(levels.block_splitting, expected, rtol=1e-12)


def test_exact_shift_at_paper_point(weak_couplings):
    assert weak_couplings.eta == pytest.approx(6e-3)
    exact = exact_shifts(weak_couplings, n_c=1)
    rho_q = 3 * weak_couplings.zeta ** 2 / weak_couplings.delta
    assert abs(exact.transition_shift - rho_q) < 1e-3
    assert shift_error(weak_couplings, 1) == pytest.approx(
        weak_couplings.zeta ** 4 * 5 / weak_couplings.delta ** 3, rel=0.2)


def test_exact_ground_state_unshifted_without_phonons(weak_couplings):
    exact = exact_shifts(weak_couplings, n_c=0)
    assert exact.shift_g == 0.0
    assert exact.shift_e > 0


def test_error_scaling_exponent(weak_couplings):
    scaling = dispersive_error_scaling(weak_couplings)
    assert scaling.zetas.tolist() == [30.0, 60.0, 120.0, 240.0]
    assert np.all(np.diff(scaling.errors) > 0)
    assert 3.5 <= scaling.exponent <= 4.5


def test_error_scaling_respects_threshold(weak_couplings):
    with pytest.raises(RegimeError):
        dispersive_error_scaling(weak_couplings, zeta_ladder=(30.0, 600.0))


def test_error_table_csv(weak_couplings, tmp_path):
    path = tmp_path / "errors.csv"
    export_error_table_csv(dispersive_error_scaling(weak_couplings, zeta_ladder=(30.0, 60.0)), path)
    lines = path.read_text(encoding="utf-8").splitlines()
    assert lines[0] == "zeta_MHz,eta,abs_error_MHz"
    assert len(lines) == 3
