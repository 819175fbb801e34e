"""
Closed-form voltage-fluctuation spectra of the TLR for the three motion cases

All three spectra share one two-pole form

    S(w) ~ (lambda / Delta)^2 |P_+^{-1} - P_-^{-1}|^2 = lambda^2 / |P_+ P_-|^2,
    P_(+/-) = -(gc + gd)/4 (+/-) xi/2 + i [w - (center (-/+) chi)/2],

with center = nu (cases N and C) or nu + zeta^2/delta (case Q).
Case N is the special case xi = 0, chi = Delta_N, which is also what C and Q
reduce to at zeta = 0.
"""

import logging
import math
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from numbers import Integral, Real
from typing import Optional, Sequence, Tuple, Union

import numpy as np

from core.errors import RegimeError
from core.params import DampingParams, DerivedCouplings
from core.settings import DEFAULT_OPTIONS, ModelOptions

log = logging.getLogger(__name__)

DEFAULT_WINDOW_POINTS = 10_000
DEFAULT_WINDOW_FACTOR = 40.0


class MotionKind(Enum):
    NONE = "N"
    CLASSICAL = "C"
    QUANTUM = "Q"


@dataclass(frozen=True)
class MotionCase:
    """Which form of the system Hamiltonian applies."""
    kind: MotionKind
    omega_R: Optional[float] = None
    n_c: Union[int, Fraction, float] = 0

    def __post_init__(self):
        if self.kind is MotionKind.NONE:
            return
        if self.omega_R is None or not self.omega_R > 0:
            raise ValueError(f"{self.kind.name} motion needs a positive omega_R")
        if self.kind is MotionKind.QUANTUM:
            if self.n_c < 0:
                raise ValueError(f"n_c must be non-negative, got {self.n_c}")

    @classmethod
    def none(cls) -> "MotionCase":
        return cls(MotionKind.NONE)

    @classmethod
    def classical(cls, omega_R: float) -> "MotionCase":
        return cls(MotionKind.CLASSICAL, omega_R=omega_R)

    @classmethod
    def quantum(cls, omega_R: float, n_c: int) -> "MotionCase":
        if not isinstance(n_c, Integral) or isinstance(n_c, bool):
            raise ValueError(f"n_c must be an integer occupation number, got {n_c!r}")
        return cls(MotionKind.QUANTUM, omega_R=omega_R, n_c=int(n_c))

    @classmethod
    def formal_quantum(cls, omega_R: float, n_c: Union[Fraction, float]) -> "MotionCase":
        """Quantum case with a non-integer occupation; only meaningful for identity checks."""
        return cls(MotionKind.QUANTUM, omega_R=omega_R, n_c=n_c)

    @classmethod
    def from_label(cls, label: str, omega_R: float, n_c: int = 1) -> "MotionCase":
        label = label.strip().upper()
        if label == "N":
            return cls.none()
        if label == "C":
            return cls.classical(omega_R)
        if label == "Q":
            return cls.quantum(omega_R, n_c)
        raise ValueError(f"unknown motion case {label!r}; expected N, C or Q")

    @property
    def label(self) -> str:
        return self.kind.value

    def __str__(self) -> str:
        if self.kind is MotionKind.QUANTUM:
            return f"Q(n_c={self.n_c})"
        return self.label


class Normalization(Enum):
    RAW = "raw"
    UNIT_PEAK = "unit_peak"


@dataclass(frozen=True)
class SpectrumCurve:
    """Spectral density samples on a strictly increasing frequency grid (MHz)."""
    omega_grid: np.ndarray
    values: np.ndarray
    normalization: Normalization = Normalization.RAW
    label: str = ""

    def __post_init__(self):
        grid = np.asarray(self.omega_grid, dtype=float)
        values = np.asarray(self.values, dtype=float)
        if grid.ndim != 1 or grid.size == 0:
            raise ValueError("grid must be a non-empty 1-D array")
        if values.shape != grid.shape:
            raise ValueError("grid and values must have equal length")
        if grid.size > 1 and not np.all(np.diff(grid) > 0):
            raise ValueError("grid must be strictly increasing")
        if np.any(values < 0):
            raise ValueError("spectral density must be non-negative")
        object.__setattr__(self, "omega_grid", grid)
        object.__setattr__(self, "values", values)

    def __len__(self) -> int:
        return self.omega_grid.size

    def normalized(self) -> "SpectrumCurve":
        """Copy scaled to unit maximum. An all-zero curve is returned unchanged."""
        peak = float(self.values.max())
        if peak <= 0:
            return SpectrumCurve(self.omega_grid, self.values, Normalization.UNIT_PEAK, self.label)
        return SpectrumCurve(self.omega_grid, self.values / peak, Normalization.UNIT_PEAK, self.label)


@dataclass(frozen=True)
class SplittingParams:
    """Auxiliary quantities of the two-pole spectra, in MHz (theta in rad)."""
    rho: float
    Delta: float
    theta: float
    xi: float
    chi: float
    delta_omega: float
    Delta_N: float

    @property
    def splitting_increment(self) -> float:
        """Delta_l - Delta_N, exact. Not to be confused with chi."""
        return self.Delta - self.Delta_N


@dataclass(frozen=True)
class PredictedPeaks:
    """Closed-form approximations of peak positions in the strong-coupling limit."""
    case: MotionCase
    centers: Tuple[float, float]
    splitting: float
    splitting_increment: float
    peak_shift: float

    @property
    def left_shift(self) -> float:
        """Movement of the left peak relative to case N."""
        return self.peak_shift - self.splitting_increment / 2.0

    @property
    def right_shift(self) -> float:
        return self.peak_shift + self.splitting_increment / 2.0


# Grids

def uniform_grid(start: float, stop: float, points: int) -> np.ndarray:
    if points < 2 or not stop > start:
        raise ValueError("uniform grid needs stop > start and at least two points")
    return np.linspace(start, stop, points)


def window_grid(center: float, half_width: float, points: int = DEFAULT_WINDOW_POINTS) -> np.ndarray:
    return uniform_grid(center - half_width, center + half_width, points)


def dual_window_grid(
    centers: Sequence[float],
    half_width: float,
    points: int = DEFAULT_WINDOW_POINTS,
) -> np.ndarray:
    """
    Concatenated uniform windows around each center.

    Overlapping windows are merged into one sorted grid.
    """
    centers = sorted(centers)
    if not centers:
        raise ValueError("at least one window center is required")
    pieces = [window_grid(c, half_width, points) for c in centers]
    for left, right in zip(centers, centers[1:]):
        if right - left <= 2.0 * half_width:
            return np.unique(np.concatenate(pieces))
    return np.concatenate(pieces)


def default_half_width(dp: DampingParams, factor: float = DEFAULT_WINDOW_FACTOR) -> float:
    """Half of a window of width factor * (gamma_c + gamma_d)."""
    width = factor * dp.total
    if width <= 0:
        raise ValueError("default windows need a positive total damping")
    return width / 2.0


def default_grid(
    case: MotionCase,
    dc: DerivedCouplings,
    dp: DampingParams,
    points: int = DEFAULT_WINDOW_POINTS,
) -> np.ndarray:
    """Dual windows of width 40 (gamma_c + gamma_d) on the predicted peaks of ``case``."""
    return dual_window_grid(predicted_peaks(case, dc, dp).centers, default_half_width(dp), points)


# Closed forms

def _check_grid(grid) -> np.ndarray:
    grid = np.asarray(grid, dtype=float)
    if grid.ndim != 1 or grid.size == 0:
        raise ValueError("grid must be a non-empty 1-D array")
    return grid


def _check_case(case: MotionCase, dc: DerivedCouplings) -> None:
    if case.kind is MotionKind.NONE:
        return
    if not math.isclose(case.omega_R, dc.omega_R, rel_tol=1e-9, abs_tol=1e-9):
        raise ValueError(
            f"motion case omega_R = {case.omega_R} MHz disagrees with the couplings' {dc.omega_R} MHz"
        )
    if dc.delta <= 0:
        raise RegimeError(f"cases C and Q need omega0 > omega_R, got delta = {dc.delta} MHz")


def vacuum_rabi_splitting(dc: DerivedCouplings, dp: DampingParams) -> float:
    """Delta_N = sqrt(4 lambda^2 + gc gd - (gc + gd)^2 / 4)."""
    radicand = _base_radicand(dc, dp)
    if radicand < 0:
        raise RegimeError(
            f"Delta_N radicand {radicand:.6g} MHz^2 is negative: damping overwhelms lambda = {dc.lam} MHz"
        )
    return math.sqrt(radicand)


def _base_radicand(dc: DerivedCouplings, dp: DampingParams) -> float:
    gc, gd = dp.gamma_c, dp.gamma_d
    return 4.0 * dc.lam ** 2 + gc * gd - (gc + gd) ** 2 / 4.0


def stark_rho(case: MotionCase, dc: DerivedCouplings) -> float:
    """rho_C = 2 zeta^2/delta, rho_Q = (2 n_c + 1) zeta^2/delta, zero for case N."""
    if case.kind is MotionKind.NONE:
        return 0.0
    x = dc.zeta ** 2 / dc.delta
    if case.kind is MotionKind.CLASSICAL:
        return 2.0 * x
    return (2 * case.n_c + 1) * x


def splitting_params(case: MotionCase, dc: DerivedCouplings, dp: DampingParams) -> SplittingParams:
    """
    Auxiliary quantities Delta_l, theta_l, xi_l, chi_l, rho_l and the rigid shift.

    Raises:
        RegimeError: the Delta_N radicand is negative, or delta <= 0 for cases C/Q
    """
    _check_case(case, dc)
    Delta_N = vacuum_rabi_splitting(dc, dp)
    rho = float(stark_rho(case, dc))
    delta_omega = dc.zeta ** 2 / (2.0 * dc.delta) if case.kind is MotionKind.QUANTUM else 0.0

    if rho == 0.0:
        return SplittingParams(rho=0.0, Delta=Delta_N, theta=0.0, xi=0.0, chi=Delta_N,
                               delta_omega=delta_omega, Delta_N=Delta_N)

    gc, gd = dp.gamma_c, dp.gamma_d
    real_part = _base_radicand(dc, dp) + rho ** 2
    imag_part = rho * (gc - gd)
    Delta = (real_part ** 2 + imag_part ** 2) ** 0.25
    theta = math.atan2(imag_part, real_part)
    return SplittingParams(
        rho=rho,
        Delta=Delta,
        theta=theta,
        xi=Delta * math.sin(theta / 2.0),
        chi=Delta * math.cos(theta / 2.0),
        delta_omega=delta_omega,
        Delta_N=Delta_N,
    )


def _two_pole(grid: np.ndarray, lam: float, xi: float, chi: float,
              center: float, half_damping: float) -> np.ndarray:
    # |p- - p+| = Delta, so (lam/Delta)^2 |1/p+ - 1/p-|^2 equals lam^2 / |p+ p-|^2
    p_plus = -half_damping + xi / 2.0 + 1j * (grid - (center - chi) / 2.0)
    p_minus = -half_damping - xi / 2.0 + 1j * (grid - (center + chi) / 2.0)
    return lam ** 2 / np.abs(p_plus * p_minus) ** 2


def _finish(grid, values, normalization: Normalization, label: str) -> SpectrumCurve:
    curve = SpectrumCurve(grid, values, Normalization.RAW, label)
    return curve.normalized() if normalization is Normalization.UNIT_PEAK else curve


def _uncoupled(grid: np.ndarray, normalization: Normalization, label: str) -> SpectrumCurve:
    """With lambda = 0 the resonator is never populated: an all-zero curve."""
    return _finish(grid, np.zeros_like(grid), normalization, label)


def bare_spectrum(grid, nu: float, Q_nu: float,
                  normalization: Normalization = Normalization.UNIT_PEAK) -> SpectrumCurve:
    """Lorentzian 1 / [(w - nu)^2 + (gamma/2)^2] with gamma = nu / Q_nu."""
    if not Q_nu > 0:
        raise ValueError("Q_nu must be positive")
    grid = _check_grid(grid)
    gamma = nu / Q_nu
    values = 1.0 / ((grid - nu) ** 2 + (gamma / 2.0) ** 2)
    return _finish(grid, values, normalization, "S_0")


def spectrum_N(grid, dc: DerivedCouplings, dp: DampingParams,
               normalization: Normalization = Normalization.UNIT_PEAK) -> SpectrumCurve:
    """Vacuum Rabi doublet without NAMR motion, peaks near (nu -/+ Delta_N)/2."""
    grid = _check_grid(grid)
    if dc.lam == 0:
        return _uncoupled(grid, normalization, "S_N")
    Delta_N = vacuum_rabi_splitting(dc, dp)
    values = _two_pole(grid, dc.lam, 0.0, Delta_N, dc.nu, dp.total / 4.0)
    return _finish(grid, values, normalization, "S_N")


def spectrum_C(grid, dc: DerivedCouplings, dp: DampingParams,
               normalization: Normalization = Normalization.UNIT_PEAK) -> SpectrumCurve:
    """Doublet with a classically oscillating NAMR, peaks near (nu -/+ chi_C)/2."""
    grid = _check_grid(grid)
    if dc.lam == 0:
        _check_case(MotionCase.classical(dc.omega_R), dc)
        return _uncoupled(grid, normalization, "S_C")
    sp = splitting_params(MotionCase.classical(dc.omega_R), dc, dp)
    values = _two_pole(grid, dc.lam, sp.xi, sp.chi, dc.nu, dp.total / 4.0)
    return _finish(grid, values, normalization, "S_C")


def spectrum_Q(grid, dc: DerivedCouplings, dp: DampingParams, n_c: Union[int, Real] = 1,
               normalization: Normalization = Normalization.UNIT_PEAK,
               formal: bool = False) -> SpectrumCurve:
    """
    Doublet with a quantum NAMR in Fock state n_c, peaks near (nu + zeta^2/delta -/+ chi_Q)/2.

    ``formal=True`` admits non-integer n_c for identity checks.
    """
    grid = _check_grid(grid)
    if formal:
        case = MotionCase.formal_quantum(dc.omega_R, n_c)
    else:
        case = MotionCase.quantum(dc.omega_R, n_c)
    if dc.lam == 0:
        _check_case(case, dc)
        return _uncoupled(grid, normalization, f"S_Q(n_c={n_c})")
    sp = splitting_params(case, dc, dp)
    center = dc.nu + dc.zeta ** 2 / dc.delta
    values = _two_pole(grid, dc.lam, sp.xi, sp.chi, center, dp.total / 4.0)
    return _finish(grid, values, normalization, f"S_Q(n_c={n_c})")


def spectrum(case: MotionCase, grid, dc: DerivedCouplings, dp: DampingParams,
             normalization: Normalization = Normalization.UNIT_PEAK) -> SpectrumCurve:
    """Dispatch to spectrum_N / spectrum_C / spectrum_Q."""
    _check_case(case, dc)
    if case.kind is MotionKind.NONE:
        return spectrum_N(grid, dc, dp, normalization)
    if case.kind is MotionKind.CLASSICAL:
        return spectrum_C(grid, dc, dp, normalization)
    formal = not isinstance(case.n_c, Integral)
    return spectrum_Q(grid, dc, dp, case.n_c, normalization, formal=formal)


def predicted_peaks(case: MotionCase, dc: DerivedCouplings, dp: DampingParams) -> PredictedPeaks:
    """
    Approximate peak positions for 2 lambda >> gamma and theta ~ 0.

    Classical increment zeta^4 / (lambda delta^2); quantum increment
    (n_c + 1/2)^2 zeta^4 / (lambda delta^2); quantum rigid shift zeta^2 / (2 delta).
    """
    _check_case(case, dc)
    if dc.lam == 0:
        raise RegimeError("no doublet to predict: lambda = 0 leaves the resonator empty")
    Delta_N = vacuum_rabi_splitting(dc, dp)
    lam = abs(dc.lam)
    if case.kind is MotionKind.NONE or dc.zeta == 0:
        increment = 0.0
    elif case.kind is MotionKind.CLASSICAL:
        increment = dc.zeta ** 4 / (lam * dc.delta ** 2)
    else:
        increment = (case.n_c + 0.5) ** 2 * dc.zeta ** 4 / (lam * dc.delta ** 2)
    shift = dc.zeta ** 2 / (2.0 * dc.delta) if case.kind is MotionKind.QUANTUM else 0.0
    splitting = Delta_N + increment
    mid = dc.nu / 2.0 + shift
    return PredictedPeaks(
        case=case,
        centers=(mid - splitting / 2.0, mid + splitting / 2.0),
        splitting=splitting,
        splitting_increment=increment,
        peak_shift=shift,
    )
