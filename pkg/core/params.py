"""
Operating point of the qubit and its couplings, derived from circuit quantities

Internal convention: every frequency, rate and energy is a linear frequency in
MHz (omega / 2 pi). SI units appear only in CircuitParams, derive_couplings and
vacuum_voltage.
"""

import logging
import math
import warnings
from dataclasses import asdict, dataclass, replace
from typing import Any, Dict, Optional

from scipy import constants

from core.errors import PhysicsWarning, RegimeError
from core.settings import DEFAULT_OPTIONS, ModelOptions

log = logging.getLogger(__name__)

# CODATA values via scipy.constants
E_CHARGE = constants.e
H_PLANCK = constants.h
HBAR = constants.hbar
FLUX_QUANTUM = constants.h / (2 * constants.e)

HZ_PER_MHZ = 1e6
CAPACITANCE_MATCH_TOLERANCE = 0.01


def _joules_to_mhz(energy: float) -> float:
    return energy / H_PLANCK / HZ_PER_MHZ


@dataclass(frozen=True)
class CircuitParams:
    """Raw device quantities in SI units (eps_J in MHz, omega_R in rad/s)."""
    c_J: float
    C0: float
    Cd: float
    Cg: float
    C_t: float
    L_tlr: float
    V_g: float
    V_x: float
    flux_ratio: float
    eps_J: float
    m: float
    d: float
    omega_R: float

    def __post_init__(self):
        for name in ("c_J", "C0", "Cd", "Cg", "C_t"):
            if not getattr(self, name) > 0:
                raise ValueError(f"capacitance {name} must be positive, got {getattr(self, name)}")
        for name in ("m", "d", "omega_R", "L_tlr"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive, got {getattr(self, name)}")
        if not math.isfinite(self.flux_ratio):
            raise ValueError("flux_ratio must be finite")

    @property
    def C_J(self) -> float:
        """Total junction capacitance of the split junction."""
        return 2.0 * self.c_J

    @property
    def zero_point_motion(self) -> float:
        """sqrt(hbar / (2 m omega_R)) in metres."""
        return math.sqrt(HBAR / (2.0 * self.m * self.omega_R))

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


@dataclass(frozen=True)
class DerivedCouplings:
    """Qubit and coupling frequencies at the operating point, all in MHz."""
    E_C: float
    E_J: float
    omega0: float
    alpha: float
    lam: float
    zeta: float
    nu: float
    delta: float
    eta: float

    @property
    def omega_R(self) -> float:
        """NAMR frequency in MHz."""
        return self.omega0 - self.delta

    @property
    def zeta2_over_delta(self) -> float:
        return self.zeta ** 2 / self.delta

    @classmethod
    def from_frequencies(
        cls,
        nu: float,
        omega0: float,
        omega_R: float,
        lam: float,
        zeta: float,
        E_C: float = 0.0,
        options: ModelOptions = DEFAULT_OPTIONS,
    ) -> "DerivedCouplings":
        """
        Build couplings from frequencies pinned directly, bypassing circuit quantities.

        E_J is fixed by omega0 and E_C so the invariant omega0 = sqrt(E_C^2 + E_J^2) holds.
        """
        if omega0 < abs(E_C):
            raise ValueError("omega0 must be at least |E_C|")
        E_J = math.sqrt(omega0 ** 2 - E_C ** 2)
        delta = omega0 - omega_R
        if delta == 0:
            raise ValueError("omega0 equals omega_R: zero detuning leaves eta undefined")
        return cls(
            E_C=E_C,
            E_J=E_J,
            omega0=omega0,
            alpha=mixing_angle(E_C, E_J, omega0, options),
            lam=lam,
            zeta=zeta,
            nu=nu,
            delta=delta,
            eta=zeta / delta,
        )

    def with_zeta(self, zeta: float) -> "DerivedCouplings":
        return replace(self, zeta=zeta, eta=zeta / self.delta)

    def with_lambda(self, lam: float) -> "DerivedCouplings":
        return replace(self, lam=lam)

    def to_dict(self) -> Dict[str, Any]:
        data = asdict(self)
        data["omega_R"] = self.omega_R
        return data


@dataclass(frozen=True)
class DampingParams:
    """Bath decay rates in MHz; Q_R is carried as metadata only."""
    gamma_c: float
    gamma_d: float
    Q_nu: Optional[float] = None
    Q_R: Optional[float] = None

    def __post_init__(self):
        if self.gamma_c < 0 or self.gamma_d < 0:
            raise ValueError("damping rates must be non-negative")
        if self.Q_nu is not None and not self.Q_nu > 0:
            raise ValueError("Q_nu must be positive")
        if self.Q_R is not None and not self.Q_R > 0:
            raise ValueError("Q_R must be positive")

    @classmethod
    def from_quality(
        cls,
        nu: float,
        Q_nu: float,
        gamma_d_ratio: float = 0.6,
        Q_R: Optional[float] = None,
    ) -> "DampingParams":
        """gamma_c = nu / Q_nu and gamma_d = gamma_d_ratio * gamma_c."""
        if not Q_nu > 0:
            raise ValueError("Q_nu must be positive")
        gamma_c = nu / Q_nu
        return cls(gamma_c=gamma_c, gamma_d=gamma_d_ratio * gamma_c, Q_nu=Q_nu, Q_R=Q_R)

    @property
    def total(self) -> float:
        return self.gamma_c + self.gamma_d

    def gamma_R(self, nu: float) -> Optional[float]:
        """NAMR damping nu / Q_R. Never used in the dynamics."""
        if self.Q_R is None:
            return None
        return nu / self.Q_R

    def photon_and_excited_rates(self, options: ModelOptions = DEFAULT_OPTIONS):
        """(rate on photon states, rate on qubit-excited states)."""
        if options.swap_damping:
            return self.gamma_d, self.gamma_c
        return self.gamma_c, self.gamma_d

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


def mixing_angle(E_C: float, E_J: float, omega0: float, options: ModelOptions = DEFAULT_OPTIONS) -> float:
    """Mixing angle alpha under the configured convention."""
    if options.alpha_convention == "paper":
        if omega0 == 0:
            return 0.0
        return math.atan(E_J / omega0)
    return math.atan2(E_J, E_C)


def vacuum_voltage(nu: float, C_t: float) -> float:
    """
    Zero-point voltage of a TLR mode, sqrt(hbar * 2 pi nu / C_t).

    Args:
        nu: Mode frequency in MHz
        C_t: Total TLR capacitance in farads

    Returns:
        RMS vacuum voltage in volts
    """
    if not nu > 0:
        raise ValueError(f"nu must be positive, got {nu}")
    if not C_t > 0:
        raise ValueError(f"C_t must be positive, got {C_t}")
    return math.sqrt(HBAR * 2.0 * math.pi * nu * HZ_PER_MHZ / C_t)


def derive_couplings(
    p: CircuitParams,
    nu: float,
    options: ModelOptions = DEFAULT_OPTIONS,
) -> DerivedCouplings:
    """
    Evaluate the operating point of the charge qubit.

    Args:
        p: Circuit quantities
        nu: Selected TLR mode frequency in MHz
        options: alpha convention and dispersive threshold

    Returns:
        DerivedCouplings with lambda's sign kept as computed

    Raises:
        ValueError: C0 and Cd differ by more than 1%, or omega0 equals omega_R
    """
    if abs(p.C0 - p.Cd) > CAPACITANCE_MATCH_TOLERANCE * max(p.C0, p.Cd):
        raise ValueError(f"C0={p.C0} and Cd={p.Cd} must agree within 1%")
    C = p.C0
    charge_ratio = E_CHARGE * C / (2.0 * p.C_J + C)

    E_C = _joules_to_mhz(charge_ratio * (p.V_g + p.V_x))
    E_J = 2.0 * p.eps_J * math.cos(math.pi * p.flux_ratio)
    omega0 = math.hypot(E_C, E_J)
    alpha = mixing_angle(E_C, E_J, omega0, options)

    lam = -_joules_to_mhz(vacuum_voltage(nu, p.C_t) * charge_ratio * math.sin(alpha))
    zeta = _joules_to_mhz(p.zero_point_motion * charge_ratio * p.V_x * math.sin(alpha) / (2.0 * p.d))

    omega_R = p.omega_R / (2.0 * math.pi) / HZ_PER_MHZ
    delta = omega0 - omega_R
    if delta == 0:
        raise ValueError("omega0 equals omega_R: zero detuning leaves eta undefined")
    eta = zeta / delta

    if abs(eta) >= options.dispersive_threshold:
        warnings.warn(
            f"eta = {eta:.3g} is not below the dispersive threshold {options.dispersive_threshold}",
            PhysicsWarning,
            stacklevel=2,
        )
    log.debug("Derived couplings: omega0=%.6g MHz lambda=%.6g MHz zeta=%.6g MHz eta=%.3g",
              omega0, lam, zeta, eta)

    return DerivedCouplings(
        E_C=E_C, E_J=E_J, omega0=omega0, alpha=alpha, lam=lam,
        zeta=zeta, nu=nu, delta=delta, eta=eta,
    )


def check_dispersive(dc: DerivedCouplings, options: ModelOptions = DEFAULT_OPTIONS) -> None:
    """Raise RegimeError unless 0 <= eta < threshold with positive detuning."""
    if dc.delta <= 0:
        raise RegimeError(f"dispersive treatment needs omega0 > omega_R, got delta = {dc.delta} MHz")
    if abs(dc.eta) >= options.dispersive_threshold:
        raise RegimeError(
            f"eta = {dc.eta:.4g} violates the dispersive bound {options.dispersive_threshold}"
        )
