"""
Stark shifts of the qubit levels: effective Hamiltonians versus exact
diagonalization of the qubit-NAMR Jaynes-Cummings ladder
"""

import logging
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np

from core.analytic import MotionCase, MotionKind
from core.errors import RegimeError
from core.params import DerivedCouplings, check_dispersive
from core.settings import DEFAULT_OPTIONS, ModelOptions
from utils.output import write_csv

log = logging.getLogger(__name__)

DEFAULT_ZETA_LADDER = (30.0, 60.0, 120.0, 240.0)


@dataclass(frozen=True)
class LevelShifts:
    """Displacements of |e> and |g> in MHz."""
    shift_e: float
    shift_g: float

    @property
    def transition_shift(self) -> float:
        return self.shift_e - self.shift_g

    @property
    def asymmetry(self) -> float:
        """Zero iff the shifts are symmetric."""
        return self.shift_e + self.shift_g


@dataclass(frozen=True)
class JCLevels:
    """Dressed levels of the qubit-phonon ladder.

    Block m couples |e, m> and |g, m+1>. ``upper``/``lower`` are the block
    eigenvalues; for delta > 0 the upper one connects to |e, m>.
    """
    omega0: float
    omega_R: float
    zeta: float
    ground: float
    phonons: np.ndarray
    lower: np.ndarray
    upper: np.ndarray

    @property
    def excitations(self) -> np.ndarray:
        """Excitation number m + 1 of each block."""
        return self.phonons + 1

    @property
    def block_splitting(self) -> np.ndarray:
        return self.upper - self.lower

    def dressed_excited(self, m: int) -> float:
        """Level adiabatically connected to |e, m>."""
        return float(self.upper[m])

    def dressed_ground(self, m: int) -> float:
        """Level adiabatically connected to |g, m>."""
        if m == 0:
            return self.ground
        return float(self.lower[m - 1])


@dataclass(frozen=True)
class ErrorScaling:
    """Discrepancy between effective and exact shifts along a zeta ladder."""
    zetas: np.ndarray
    etas: np.ndarray
    errors: np.ndarray
    exponent: Optional[float]

    def rows(self) -> List[Tuple[float, float, float]]:
        return list(zip(self.zetas.tolist(), self.etas.tolist(), self.errors.tolist()))


def effective_shifts(case: MotionCase, dc: DerivedCouplings,
                     options: ModelOptions = DEFAULT_OPTIONS) -> LevelShifts:
    """
    Level shifts read off the effective Hamiltonians.

    Classical: +/- zeta^2/delta. Quantum: +zeta^2 (n_c+1)/delta on |e>,
    -zeta^2 n_c/delta on |g>. No motion: zero.

    Raises:
        RegimeError: eta at or above the dispersive threshold, or delta <= 0
    """
    if case.kind is MotionKind.NONE:
        return LevelShifts(0.0, 0.0)
    check_dispersive(dc, options)
    x = dc.zeta ** 2 / dc.delta
    if case.kind is MotionKind.CLASSICAL:
        return LevelShifts(x, -x)
    return LevelShifts(x * (case.n_c + 1), -x * case.n_c)


def exact_jc_levels(dc: DerivedCouplings, n_max: int, resonant: bool = False) -> JCLevels:
    """
    Diagonalize each 2x2 excitation block of the qubit-phonon ladder.

    Args:
        dc: Couplings; omega0, omega_R and zeta are used
        n_max: Highest phonon number kept in the excited member of a block
        resonant: Force omega_R = omega0 (test path for the resonant closed form)

    Returns:
        JCLevels for blocks m = 0 .. n_max
    """
    if n_max < 0:
        raise ValueError("n_max must be non-negative")
    omega0 = dc.omega0
    omega_R = omega0 if resonant else dc.omega_R
    phonons = np.arange(n_max + 1)
    lower = np.empty(n_max + 1)
    upper = np.empty(n_max + 1)
    for m in phonons:
        e_level = omega0 / 2.0 + m * omega_R
        g_level = -omega0 / 2.0 + (m + 1) * omega_R
        mean = 0.5 * (e_level + g_level)
        coupling = dc.zeta * np.sqrt(m + 1.0)
        block = np.array([[e_level - mean, coupling], [coupling, g_level - mean]])
        eigenvalues = np.linalg.eigh(block)[0]
        lower[m] = mean + eigenvalues[0]
        upper[m] = mean + eigenvalues[1]
    return JCLevels(omega0=omega0, omega_R=omega_R, zeta=dc.zeta, ground=-omega0 / 2.0,
                    phonons=phonons, lower=lower, upper=upper)


def exact_shifts(dc: DerivedCouplings, n_c: int, levels: Optional[JCLevels] = None) -> LevelShifts:
    """Stark shifts of |e, n_c> and |g, n_c> from the exact ladder."""
    if dc.delta <= 0:
        raise RegimeError("exact Stark shifts need omega0 > omega_R")
    if levels is None:
        levels = exact_jc_levels(dc, n_c + 2)
    elif levels.phonons[-1] < n_c:
        raise ValueError(f"levels stop below n_c = {n_c}")
    bare_e = dc.omega0 / 2.0 + n_c * dc.omega_R
    bare_g = -dc.omega0 / 2.0 + n_c * dc.omega_R
    return LevelShifts(levels.dressed_excited(n_c) - bare_e, levels.dressed_ground(n_c) - bare_g)


def shift_error(dc: DerivedCouplings, n_c: int = 1,
                options: ModelOptions = DEFAULT_OPTIONS) -> float:
    """Largest absolute discrepancy among shift_e, shift_g and transition_shift."""
    effective = effective_shifts(MotionCase.quantum(dc.omega_R, n_c), dc, options)
    exact = exact_shifts(dc, n_c)
    return max(
        abs(effective.shift_e - exact.shift_e),
        abs(effective.shift_g - exact.shift_g),
        abs(effective.transition_shift - exact.transition_shift),
    )


def dispersive_error_scaling(dc: DerivedCouplings,
                             zeta_ladder: Sequence[float] = DEFAULT_ZETA_LADDER,
                             n_c: int = 1,
                             options: ModelOptions = DEFAULT_OPTIONS) -> ErrorScaling:
    """
    Effective-versus-exact shift error along a ladder of couplings.

    The exponent is the log-log slope of error against zeta (equivalently
    against eta, since delta is fixed), fitted over the non-zero errors.
    """
    zetas = np.asarray(list(zeta_ladder), dtype=float)
    for zeta in zetas:
        check_dispersive(dc.with_zeta(zeta), options)
    errors = np.array([shift_error(dc.with_zeta(z), n_c, options) for z in zetas])
    etas = zetas / dc.delta

    usable = (zetas > 0) & (errors > 0)
    exponent = None
    if usable.sum() >= 2:
        exponent = float(np.polyfit(np.log(zetas[usable]), np.log(errors[usable]), 1)[0])
    log.info("Dispersive error exponent over %d ladder points: %s", usable.sum(), exponent)
    return ErrorScaling(zetas=zetas, etas=etas, errors=errors, exponent=exponent)


def export_error_table_csv(scaling: ErrorScaling, path) -> None:
    write_csv(path, ["zeta_MHz", "eta", "abs_error_MHz"], scaling.rows())
