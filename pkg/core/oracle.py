"""
Time-domain oracle for the TLR spectra

Integrates the single-excitation amplitude equations dc/dt = -i 2 pi H c
(H in MHz, t in us) and extracts S(w) ~ |int dt e^{i 2 pi w t} c1(t)|^2,
without using the closed-form spectra. Baths enter either as Markovian decay
rates on the diagonal or as explicit sets of discrete modes.

Trajectories store amplitudes in a frame rotating at a scalar carrier
frequency (the mean energy of the two core states); the transforms undo it.
"""

import logging
import math
import warnings
from dataclasses import dataclass
from enum import Enum
from typing import List, Optional, Sequence, Tuple

import numpy as np
import scipy.linalg
from scipy import signal, sparse
from scipy.integrate import solve_ivp
from scipy.sparse.linalg import expm_multiply

from core.analytic import MotionCase, MotionKind, Normalization, SpectrumCurve
from core.dispersive import effective_shifts
from core.errors import IntegrationError, PhysicsWarning, RegimeError
from core.params import DampingParams, DerivedCouplings
from core.settings import DEFAULT_OPTIONS, ModelOptions
from utils.output import write_csv

log = logging.getLogger(__name__)

POINTS_PER_PERIOD = 20
DRIVE_HARMONICS = 2
SPECTRAL_DECAY_TIMES = 10.0
CONVERGED_CORE_NORM = 1e-4
BATH_STEPS_PER_BANDWIDTH = 50.0
BATH_CHUNK = 500
IVP_RTOL = 1e-9
IVP_ATOL = 1e-12
MIN_CZT_RUN = 16
DIRECT_SUM_BUDGET = 4_000_000


class Dressing(Enum):
    """EXACT keeps the NAMR explicitly; EFFECTIVE uses the Stark-shifted two-level model."""
    EXACT = "exact"
    EFFECTIVE = "effective"


@dataclass(frozen=True)
class BasisState:
    qubit: str
    photons: int
    phonons: Optional[int]
    energy: float

    @property
    def label(self) -> str:
        if self.phonons is None:
            return f"{self.qubit},{self.photons}"
        return f"{self.qubit},{self.photons},{self.phonons}"

    @property
    def excited(self) -> bool:
        return self.qubit == "e"

    @property
    def excitation(self) -> int:
        return int(self.excited) + self.photons + (self.phonons or 0)


@dataclass(frozen=True)
class StateSpace:
    """Core basis of one single-excitation problem.

    ``couplings`` lists every off-diagonal element in both directions.
    ``drive`` lists (excited, ground, strength) pairs coupled by
    strength * exp(-i 2 pi drive_frequency t) on sigma_+.
    """
    case: MotionCase
    core_states: Tuple[BasisState, ...]
    couplings: Tuple[Tuple[int, int, float], ...]
    phonon_truncation: int
    dressing: Dressing = Dressing.EXACT
    drive: Tuple[Tuple[int, int, float], ...] = ()
    drive_frequency: float = 0.0
    excluded: Tuple[str, ...] = ()
    photon_frequency: float = 0.0

    def __post_init__(self):
        labels = [s.label for s in self.core_states]
        if len(set(labels)) != len(labels):
            raise ValueError(f"duplicate state labels in {labels}")
        pairs = {(i, j): s for i, j, s in self.couplings}
        for (i, j), s in pairs.items():
            if pairs.get((j, i)) != s:
                raise ValueError(f"coupling {labels[i]} -> {labels[j]} has no symmetric partner")
            if self.core_states[i].excitation != self.core_states[j].excitation:
                raise ValueError(f"coupling {labels[i]} <-> {labels[j]} breaks excitation number")

    @property
    def dimension(self) -> int:
        return len(self.core_states)

    @property
    def labels(self) -> List[str]:
        return [s.label for s in self.core_states]

    @property
    def is_time_dependent(self) -> bool:
        return bool(self.drive)

    @property
    def c2_index(self) -> int:
        """Initially excited state |e, 0 (, n_c)>."""
        return 0

    @property
    def c1_index(self) -> int:
        """Single-photon state |g, 1 (, n_c)> whose amplitude sets the spectrum."""
        return 1

    @property
    def carrier(self) -> float:
        return 0.5 * (self.core_states[0].energy + self.core_states[1].energy)

    def hamiltonian(self) -> np.ndarray:
        """Static Hermitian part in MHz, drive excluded."""
        h = np.diag([s.energy for s in self.core_states]).astype(complex)
        for i, j, s in self.couplings:
            h[i, j] = s
        return h

    def damping(self, dp: DampingParams, options: ModelOptions = DEFAULT_OPTIONS) -> np.ndarray:
        """Markovian rates per state: photons decay into the c-bath, |e> into the d-bath."""
        photon_rate, excited_rate = dp.photon_and_excited_rates(options)
        return np.array([photon_rate * s.photons + excited_rate * s.excited
                         for s in self.core_states], dtype=float)

    def drive_matrix(self, t: float) -> np.ndarray:
        h = np.zeros((self.dimension, self.dimension), dtype=complex)
        phase = np.exp(-2j * np.pi * self.drive_frequency * t)
        for e, g, s in self.drive:
            h[e, g] = s * phase
            h[g, e] = s * np.conj(phase)
        return h


@dataclass(frozen=True)
class BathDiscretization:
    """Flat band of equally spaced modes coupled with equal strength."""
    mode_count: int
    center: float
    half_bandwidth: float
    spacing: float
    coupling_per_mode: float

    def __post_init__(self):
        if self.mode_count < 1:
            raise ValueError("mode_count must be positive")
        if not self.half_bandwidth > 0:
            raise ValueError("half_bandwidth must be positive")
        if not math.isclose(self.mode_count * self.spacing, 2.0 * self.half_bandwidth, rel_tol=1e-9):
            raise ValueError("mode_count * spacing must equal the full bandwidth")

    @classmethod
    def flat(cls, center: float, half_bandwidth: float, mode_count: int, gamma: float) -> "BathDiscretization":
        """Coupling sqrt(gamma * spacing / (2 pi)) reproduces the golden-rule rate gamma."""
        if gamma < 0:
            raise ValueError("gamma must be non-negative")
        spacing = 2.0 * half_bandwidth / mode_count
        return cls(mode_count=mode_count, center=center, half_bandwidth=half_bandwidth,
                   spacing=spacing, coupling_per_mode=math.sqrt(gamma * spacing / (2.0 * math.pi)))

    @property
    def frequencies(self) -> np.ndarray:
        return self.center - self.half_bandwidth + (np.arange(self.mode_count) + 0.5) * self.spacing

    @property
    def rate(self) -> float:
        return 2.0 * math.pi * self.coupling_per_mode ** 2 / self.spacing

    @property
    def recurrence_time(self) -> float:
        return 1.0 / self.spacing


@dataclass(frozen=True)
class AmplitudeTrajectory:
    """Sampled amplitudes in the carrier frame; bath amplitudes at the final time only."""
    times: np.ndarray
    c1: np.ndarray
    c2: np.ndarray
    core_extra: np.ndarray
    extra_labels: Tuple[str, ...]
    carrier: float
    core_norm: np.ndarray
    bath_c: Optional[np.ndarray] = None
    bath_d: Optional[np.ndarray] = None
    bath_c_energies: Optional[np.ndarray] = None
    bath_d_energies: Optional[np.ndarray] = None
    total_norm: Optional[np.ndarray] = None
    radiating_norm: Optional[np.ndarray] = None

    @property
    def is_discretized(self) -> bool:
        return self.bath_c is not None

    @property
    def final_core_norm(self) -> float:
        return float(self.core_norm[-1])

    @property
    def final_radiating_norm(self) -> float:
        """Population left in damped core states; undamped ones such as |g, 0> never decay."""
        norm = self.core_norm if self.radiating_norm is None else self.radiating_norm
        return float(norm[-1])

    def lab_frame(self, amplitudes: np.ndarray) -> np.ndarray:
        return amplitudes * np.exp(-2j * np.pi * self.carrier * self.times)


# State spaces

def build_state_space(case: MotionCase, dc: DerivedCouplings, phonon_truncation: int = 1,
                      dressing: Dressing = Dressing.EXACT,
                      options: ModelOptions = DEFAULT_OPTIONS) -> StateSpace:
    """
    Basis, energies and couplings for one motion case.

    Energies are absolute: qubit +/- omega0/2, photon nu, phonons counted
    relative to n_c. With EFFECTIVE dressing the NAMR is replaced by the
    Stark shifts of the effective Hamiltonians.

    Raises:
        ValueError: phonon_truncation < 1
    """
    if phonon_truncation < 1:
        raise ValueError(f"phonon_truncation must be at least 1, got {phonon_truncation}")

    if case.kind is MotionKind.NONE or dressing is Dressing.EFFECTIVE:
        shifts = effective_shifts(case, dc, options)
        phonons = case.n_c if case.kind is MotionKind.QUANTUM else None
        states = (
            BasisState("e", 0, phonons, dc.omega0 / 2.0 + shifts.shift_e),
            BasisState("g", 1, phonons, -dc.omega0 / 2.0 + dc.nu + shifts.shift_g),
        )
        return StateSpace(case, states, ((0, 1, dc.lam), (1, 0, dc.lam)),
                          phonon_truncation, dressing, photon_frequency=dc.nu)

    if case.kind is MotionKind.CLASSICAL:
        return _classical_space(case, dc, phonon_truncation)
    return _quantum_space(case, dc, phonon_truncation)


def _classical_space(case: MotionCase, dc: DerivedCouplings, truncation: int) -> StateSpace:
    # The drive has no matrix element inside {|e,0>, |g,1>}; it reaches them
    # through |g,0> and |e,1>.
    states = (
        BasisState("e", 0, None, dc.omega0 / 2.0),
        BasisState("g", 1, None, -dc.omega0 / 2.0 + dc.nu),
        BasisState("g", 0, None, -dc.omega0 / 2.0),
        BasisState("e", 1, None, dc.omega0 / 2.0 + dc.nu),
    )
    return StateSpace(
        case, states, ((0, 1, dc.lam), (1, 0, dc.lam)), truncation, Dressing.EXACT,
        drive=((0, 2, dc.zeta), (3, 1, dc.zeta)),
        drive_frequency=case.omega_R,
        photon_frequency=dc.nu,
    )


def _quantum_space(case: MotionCase, dc: DerivedCouplings, truncation: int) -> StateSpace:
    n_c = int(case.n_c)
    total = n_c + 1
    kept: List[BasisState] = []
    excluded: List[str] = []
    for qubit in ("e", "g"):
        for photons in range(total + 1):
            phonons = total - (qubit == "e") - photons
            if phonons < 0 or abs(phonons - n_c) > truncation:
                continue
            energy = ((1 if qubit == "e" else -1) * dc.omega0 / 2.0
                      + photons * dc.nu + (phonons - n_c) * case.omega_R)
            state = BasisState(qubit, photons, phonons, energy)
            if photons > 1:
                excluded.append(state.label)
                continue
            kept.append(state)

    head = {("e", 0, n_c): 0, ("g", 1, n_c): 1}
    kept.sort(key=lambda s: (head.get((s.qubit, s.photons, s.phonons), 2), s.label))

    couplings = []
    for i, a in enumerate(kept):
        for j, b in enumerate(kept):
            strength = _rwa_element(a, b, dc)
            if strength:
                couplings.append((i, j, strength))

    for label in excluded:
        log.debug("Excluded two-photon state (%s) from the case-Q ladder", label)
    return StateSpace(case, tuple(kept), tuple(couplings), truncation, Dressing.EXACT,
                      excluded=tuple(excluded), photon_frequency=dc.nu)


def _rwa_element(a: BasisState, b: BasisState, dc: DerivedCouplings) -> float:
    """<a| lambda (sigma+ a + sigma- a^dag) + zeta (sigma+ b + sigma- b^dag) |b>."""
    if a.excited == b.excited:
        return 0.0
    e, g = (a, b) if a.excited else (b, a)
    if e.phonons == g.phonons and g.photons == e.photons + 1:
        return dc.lam * math.sqrt(g.photons)
    if e.photons == g.photons and g.phonons == e.phonons + 1:
        return dc.zeta * math.sqrt(g.phonons)
    return 0.0


# Markovian evolution

def _sample_times(t_max: float, dt: float) -> np.ndarray:
    count = int(math.ceil(t_max / dt)) + 1
    return np.linspace(0.0, t_max, max(count, 2))


def _default_t_max(dp: DampingParams) -> float:
    if not dp.total > 0:
        raise ValueError("t_max is required when both damping rates vanish")
    return SPECTRAL_DECAY_TIMES / dp.total


def _check_duration(t_max: float, dp: DampingParams) -> None:
    if not t_max > 0:
        raise ValueError("t_max must be positive")
    if dp.total > 0 and t_max < SPECTRAL_DECAY_TIMES / dp.total:
        warnings.warn(
            f"t_max = {t_max:.4g} us is shorter than 10/(gamma_c+gamma_d) = "
            f"{SPECTRAL_DECAY_TIMES / dp.total:.4g} us; spectra will show truncation ringing",
            PhysicsWarning, stacklevel=3,
        )


def _frame_generator(space: StateSpace, dp: DampingParams, options: ModelOptions) -> np.ndarray:
    h = space.hamiltonian() - 0.5j * np.diag(space.damping(dp, options))
    return h - space.carrier * np.eye(space.dimension)


def _initial_state(space: StateSpace) -> np.ndarray:
    c0 = np.zeros(space.dimension, dtype=complex)
    c0[space.c2_index] = 1.0
    return c0


def _trajectory(space: StateSpace, times: np.ndarray, amplitudes: np.ndarray,
                generator: np.ndarray) -> AmplitudeTrajectory:
    extra = [k for k in range(space.dimension) if k not in (space.c1_index, space.c2_index)]
    radiating = np.diagonal(generator).imag < 0
    return AmplitudeTrajectory(
        times=times,
        c1=amplitudes[space.c1_index],
        c2=amplitudes[space.c2_index],
        core_extra=amplitudes[extra] if extra else np.zeros((0, times.size), dtype=complex),
        extra_labels=tuple(space.labels[k] for k in extra),
        carrier=space.carrier,
        core_norm=np.sum(np.abs(amplitudes) ** 2, axis=0),
        radiating_norm=np.sum(np.abs(amplitudes[radiating]) ** 2, axis=0),
    )


def evolve_markov(space: StateSpace, dp: DampingParams, t_max: Optional[float] = None,
                  dt_control: Optional[float] = None,
                  options: ModelOptions = DEFAULT_OPTIONS) -> AmplitudeTrajectory:
    """
    Non-Hermitian single-excitation evolution from |e, 0 (, n_c)>.

    Args:
        space: State space from build_state_space
        dp: Decay rates, entering as -i gamma / 2 on the diagonal
        t_max: Duration in us; defaults to 10 / (gamma_c + gamma_d)
        dt_control: Upper bound on the sample step in us
        options: Damping assignment

    Returns:
        Trajectory sampled with at least 20 points per period of its fastest
        frequency in the carrier frame

    Raises:
        IntegrationError: the driven-case integrator failed
    """
    t_max = _default_t_max(dp) if t_max is None else t_max
    _check_duration(t_max, dp)
    generator = _frame_generator(space, dp, options)
    if space.is_time_dependent:
        return _evolve_floquet(space, generator, t_max, dt_control)
    return _evolve_static(space, generator, t_max, dt_control)


def _evolve_static(space: StateSpace, generator: np.ndarray, t_max: float,
                   dt_control: Optional[float]) -> AmplitudeTrajectory:
    eigenvalues, vectors = scipy.linalg.eig(generator)
    fmax = max(float(np.max(np.abs(eigenvalues.real))), 1e-6)
    dt = 1.0 / (POINTS_PER_PERIOD * fmax)
    if dt_control is not None:
        dt = min(dt, dt_control)
    times = _sample_times(t_max, dt)
    c0 = _initial_state(space)

    if np.linalg.cond(vectors) > 1e8:
        # Near an exceptional point the eigenbasis is unreliable; step the exact propagator.
        log.debug("Ill-conditioned eigenbasis; stepping the propagator instead")
        step = scipy.linalg.expm(-2j * np.pi * generator * (times[1] - times[0]))
        amplitudes = np.empty((space.dimension, times.size), dtype=complex)
        amplitudes[:, 0] = c0
        for n in range(1, times.size):
            amplitudes[:, n] = step @ amplitudes[:, n - 1]
        return _trajectory(space, times, amplitudes, generator)

    weights = np.linalg.solve(vectors, c0)
    phases = np.exp(-2j * np.pi * np.outer(eigenvalues, times))
    amplitudes = vectors @ (weights[:, None] * phases)
    log.debug("Static evolution: %d states, %d samples, dt=%.3g us", space.dimension, times.size, dt)
    return _trajectory(space, times, amplitudes, generator)


def _period_propagators(space: StateSpace, generator: np.ndarray, period: float,
                        offsets: np.ndarray, rtol: float = IVP_RTOL,
                        atol: float = IVP_ATOL) -> np.ndarray:
    n = space.dimension

    def rhs(t, y):
        u = y.reshape(n, n)
        return (-2j * np.pi * (generator + space.drive_matrix(t)) @ u).ravel()

    sol = solve_ivp(rhs, (0.0, period), np.eye(n, dtype=complex).ravel(), method="DOP853",
                    t_eval=offsets, rtol=rtol, atol=atol)
    if not sol.success:
        raise IntegrationError(f"drive-period integration failed: {sol.message}")
    return sol.y.T.reshape(offsets.size, n, n)


def _evolve_floquet(space: StateSpace, generator: np.ndarray, t_max: float,
                    dt_control: Optional[float]) -> AmplitudeTrajectory:
    period = 1.0 / space.drive_frequency
    core = generator[:2, :2]
    fmax = float(np.max(np.abs(np.linalg.eigvals(core).real))) + DRIVE_HARMONICS * space.drive_frequency
    per_period = int(math.ceil(POINTS_PER_PERIOD * fmax * period))
    if dt_control is not None:
        per_period = max(per_period, int(math.ceil(period / dt_control)))
    per_period = max(per_period, 8)
    dt = period / per_period

    offsets = np.arange(per_period + 1) * dt
    offsets[-1] = period
    propagators = _period_propagators(space, generator, period, offsets)
    monodromy = propagators[-1]

    count = int(math.floor(t_max / dt + 1e-9)) + 1
    periods = int(math.ceil(count / per_period))
    stroboscopic = np.empty((periods, space.dimension), dtype=complex)
    stroboscopic[0] = _initial_state(space)
    for p in range(1, periods):
        stroboscopic[p] = monodromy @ stroboscopic[p - 1]

    amplitudes = np.einsum("kij,pj->ipk", propagators[:-1], stroboscopic)
    amplitudes = amplitudes.reshape(space.dimension, periods * per_period)[:, :count]
    times = np.arange(count) * dt
    log.debug("Floquet evolution: %d periods x %d samples", periods, per_period)
    return _trajectory(space, times, amplitudes, generator)


def integrate_amplitudes(space: StateSpace, dp: DampingParams, times: np.ndarray,
                         options: ModelOptions = DEFAULT_OPTIONS,
                         rtol: float = 1e-10, atol: float = 1e-12) -> np.ndarray:
    """
    Direct adaptive integration of the amplitude vector, sampled at ``times``.

    Independent of the propagator shortcuts used by evolve_markov; returns
    amplitudes in the same carrier frame with shape (states, samples).
    """
    generator = _frame_generator(space, dp, options)

    def rhs(t, y):
        return -2j * np.pi * (generator + space.drive_matrix(t)) @ y

    sol = solve_ivp(rhs, (float(times[0]), float(times[-1])), _initial_state(space),
                    method="DOP853", t_eval=times, rtol=rtol, atol=atol)
    if not sol.success:
        raise IntegrationError(f"direct integration failed: {sol.message}")
    return sol.y


# Discretized baths

def default_baths(space: StateSpace, dp: DampingParams, half_bandwidth: float, mode_count: int,
                  options: ModelOptions = DEFAULT_OPTIONS) -> Tuple[BathDiscretization, BathDiscretization]:
    """c-bath centered on the photon frequency, d-bath on the dressed qubit transition."""
    photon_rate, excited_rate = dp.photon_and_excited_rates(options)
    ground = _ground_energy(space)
    nu = space.core_states[1].energy - ground
    transition = space.core_states[0].energy - ground
    return (BathDiscretization.flat(nu, half_bandwidth, mode_count, photon_rate),
            BathDiscretization.flat(transition, half_bandwidth, mode_count, excited_rate))


def _ground_energy(space: StateSpace) -> float:
    # |g,1> sits one photon above the (dressed) ground level
    return space.core_states[1].energy - space.photon_frequency


def evolve_discretized(space: StateSpace,
                       baths: Tuple[BathDiscretization, BathDiscretization],
                       t_max: float,
                       dt: Optional[float] = None) -> AmplitudeTrajectory:
    """
    Unitary evolution of the core states together with two explicit baths.

    Args:
        space: Two-state space (case N, or EFFECTIVE dressing)
        baths: (c-bath on the photon state, d-bath on the excited state)
        t_max: Duration in us; must stay below every bath recurrence time
        dt: Sample step; capped at 1 / (50 * half_bandwidth)

    Returns:
        Trajectory with final bath amplitudes and the total norm per sample

    Raises:
        RegimeError: t_max reaches a bath recurrence time
        ValueError: the space is not a static two-state model
    """
    if space.dimension != 2 or space.is_time_dependent:
        raise ValueError("discretized baths attach to static two-state models "
                         "(case N or EFFECTIVE dressing)")
    c_bath, d_bath = baths
    for name, bath in (("c", c_bath), ("d", d_bath)):
        if t_max >= bath.recurrence_time:
            raise RegimeError(f"t_max = {t_max} us reaches the {name}-bath recurrence time "
                              f"{bath.recurrence_time:.4g} us")

    ground = _ground_energy(space)
    c_energies = ground + c_bath.frequencies
    d_energies = ground + d_bath.frequencies
    _check_bandwidth(space, c_bath, d_bath)

    n_c, n_d = c_bath.mode_count, d_bath.mode_count
    dim = 2 + n_c + n_d
    carrier = space.carrier
    diagonal = np.concatenate([[s.energy for s in space.core_states], c_energies, d_energies]) - carrier

    c_slice = slice(2, 2 + n_c)
    d_slice = slice(2 + n_c, dim)
    rows = [0, 1]
    cols = [1, 0]
    vals = [space.hamiltonian()[0, 1], space.hamiltonian()[1, 0]]
    c_idx = np.arange(c_slice.start, c_slice.stop)
    d_idx = np.arange(d_slice.start, d_slice.stop)
    for core, idx, g in ((space.c1_index, c_idx, c_bath.coupling_per_mode),
                         (space.c2_index, d_idx, d_bath.coupling_per_mode)):
        rows.extend([core] * idx.size + idx.tolist())
        cols.extend(idx.tolist() + [core] * idx.size)
        vals.extend([g] * (2 * idx.size))
    offdiag = sparse.coo_matrix((vals, (rows, cols)), shape=(dim, dim), dtype=complex)
    generator = (-2j * np.pi * (sparse.diags(diagonal.astype(complex)) + offdiag)).tocsr()

    step = 1.0 / (BATH_STEPS_PER_BANDWIDTH * max(c_bath.half_bandwidth, d_bath.half_bandwidth))
    if dt is not None:
        step = min(step, dt)
    times = _sample_times(t_max, step)

    state = np.zeros(dim, dtype=complex)
    state[space.c2_index] = 1.0
    core = np.empty((2, times.size), dtype=complex)
    total_norm = np.empty(times.size)
    core[:, 0] = state[:2]
    total_norm[0] = 1.0
    start = 0
    while start < times.size - 1:
        stop = min(start + BATH_CHUNK, times.size - 1)
        span = times[stop] - times[start]
        block = expm_multiply(generator, state, start=0.0, stop=span,
                              num=stop - start + 1, endpoint=True)
        core[:, start + 1:stop + 1] = block[1:, :2].T
        total_norm[start + 1:stop + 1] = np.sum(np.abs(block[1:]) ** 2, axis=1)
        state = block[-1]
        start = stop
    log.debug("Discretized evolution: dim=%d samples=%d drift=%.2e",
              dim, times.size, float(np.max(np.abs(total_norm - 1.0))))

    return AmplitudeTrajectory(
        times=times,
        c1=core[space.c1_index],
        c2=core[space.c2_index],
        core_extra=np.zeros((0, times.size), dtype=complex),
        extra_labels=(),
        carrier=carrier,
        core_norm=np.sum(np.abs(core) ** 2, axis=0),
        bath_c=state[c_slice].copy(),
        bath_d=state[d_slice].copy(),
        bath_c_energies=c_energies,
        bath_d_energies=d_energies,
        total_norm=total_norm,
    )


def _check_bandwidth(space: StateSpace, c_bath: BathDiscretization, d_bath: BathDiscretization) -> None:
    largest_rate = max(c_bath.rate, d_bath.rate)
    ground = _ground_energy(space)
    eigen = np.linalg.eigvalsh(space.hamiltonian()) - ground
    for name, bath in (("c", c_bath), ("d", d_bath)):
        if bath.half_bandwidth < 50.0 * largest_rate:
            warnings.warn(f"{name}-bath half bandwidth {bath.half_bandwidth} MHz is below "
                          f"50x the largest rate", PhysicsWarning, stacklevel=3)
        reach = float(np.max(np.abs(eigen - bath.center)))
        if reach > bath.half_bandwidth - 10.0 * largest_rate:
            warnings.warn(f"{name}-bath band does not cover the dressed core frequencies "
                          f"(reach {reach:.4g} MHz)", PhysicsWarning, stacklevel=3)


# Spectrum extraction

def _trapezoid_weights(times: np.ndarray) -> np.ndarray:
    w = np.empty_like(times)
    w[1:-1] = 0.5 * (times[2:] - times[:-2])
    w[0] = 0.5 * (times[1] - times[0])
    w[-1] = 0.5 * (times[-1] - times[-2])
    return w


def _uniform_runs(grid: np.ndarray) -> List[Tuple[int, int]]:
    """Half-open index ranges over which the grid spacing is constant."""
    runs = []
    steps = np.diff(grid)
    start = 0
    while start < grid.size:
        stop = start + 1
        if stop < grid.size:
            h = steps[start]
            stop += 1
            while stop < grid.size and math.isclose(steps[stop - 1], h, rel_tol=1e-6):
                stop += 1
        runs.append((start, stop))
        start = stop
    return runs


def _is_uniform(times: np.ndarray) -> bool:
    steps = np.diff(times)
    return bool(np.allclose(steps, steps[0], rtol=1e-6, atol=0.0))


def _transform(times: np.ndarray, samples: np.ndarray, frequencies: np.ndarray) -> np.ndarray:
    """|sum_n w_n x_n exp(i 2 pi f t_n)|^2 with trapezoid weights w_n."""
    x = _trapezoid_weights(times) * samples
    out = np.empty(frequencies.size)
    uniform_time = _is_uniform(times)
    dt = times[1] - times[0]
    for start, stop in _uniform_runs(frequencies):
        f = frequencies[start:stop]
        if uniform_time and f.size >= MIN_CZT_RUN:
            df = f[1] - f[0]
            a = np.exp(-2j * np.pi * f[0] * dt)
            w = np.exp(2j * np.pi * df * dt)
            out[start:stop] = np.abs(signal.czt(x, m=f.size, w=w, a=a)) ** 2
            continue
        chunk = max(1, DIRECT_SUM_BUDGET // times.size)
        for k in range(0, f.size, chunk):
            end = min(k + chunk, f.size)
            phase = np.exp(2j * np.pi * np.outer(f[k:end], times))
            out[start + k:start + end] = np.abs(phase @ x) ** 2
    return out


def _warn_if_undecayed(traj: AmplitudeTrajectory) -> None:
    if traj.final_radiating_norm > CONVERGED_CORE_NORM:
        warnings.warn(
            f"damped core norm {traj.final_radiating_norm:.3g} has not decayed below {CONVERGED_CORE_NORM}; "
            "the spectrum carries truncation ringing", PhysicsWarning, stacklevel=3,
        )


def spectrum_from_c1(traj: AmplitudeTrajectory, grid,
                     normalization: Normalization = Normalization.UNIT_PEAK) -> SpectrumCurve:
    """S(w) ~ |int dt e^{i 2 pi w t} c1(t)|^2 by direct trapezoid quadrature on ``grid`` (MHz)."""
    grid = np.asarray(grid, dtype=float)
    _warn_if_undecayed(traj)
    values = _transform(traj.times, traj.c1, grid - traj.carrier)
    curve = SpectrumCurve(grid, values, Normalization.RAW, "oracle c1")
    return curve.normalized() if normalization is Normalization.UNIT_PEAK else curve


def spectrum_from_bath(traj: AmplitudeTrajectory, bath_c_frequencies: Optional[Sequence[float]] = None,
                       normalization: Normalization = Normalization.UNIT_PEAK) -> SpectrumCurve:
    """
    Asymptotic c-bath occupation |C_j|^2 against mode energy.

    Mode energies default to the replica energies (ground level plus mode
    frequency), the registration spectrum_from_c1 uses.

    Raises:
        ValueError: the trajectory has no bath amplitudes
    """
    if not traj.is_discretized:
        raise ValueError("Markovian trajectories carry no bath amplitudes")
    _warn_if_undecayed(traj)
    freqs = traj.bath_c_energies if bath_c_frequencies is None else np.asarray(bath_c_frequencies, float)
    if freqs.size != traj.bath_c.size:
        raise ValueError("one frequency per c-bath mode is required")
    order = np.argsort(freqs)
    curve = SpectrumCurve(freqs[order], np.abs(traj.bath_c[order]) ** 2, Normalization.RAW, "oracle bath")
    return curve.normalized() if normalization is Normalization.UNIT_PEAK else curve


def markov_spectrum(case: MotionCase, dc: DerivedCouplings, dp: DampingParams, grid,
                    dressing: Dressing = Dressing.EFFECTIVE, phonon_truncation: int = 1,
                    t_max: Optional[float] = None,
                    options: ModelOptions = DEFAULT_OPTIONS) -> SpectrumCurve:
    """Build, evolve and transform in one call."""
    space = build_state_space(case, dc, phonon_truncation, dressing, options)
    traj = evolve_markov(space, dp, t_max, options=options)
    return spectrum_from_c1(traj, grid)


def export_trajectory_csv(traj: AmplitudeTrajectory, path) -> None:
    """Lab-frame amplitudes: time, Re/Im of c1, c2 and every extra core state, core norm."""
    header = ["time_us", "re_c1", "im_c1", "re_c2", "im_c2"]
    columns = [traj.times]
    for amp in (traj.lab_frame(traj.c1), traj.lab_frame(traj.c2)):
        columns.extend([amp.real, amp.imag])
    for label, amp in zip(traj.extra_labels, traj.core_extra):
        tag = label.replace(",", "")
        header.extend([f"re_{tag}", f"im_{tag}"])
        lab = traj.lab_frame(amp)
        columns.extend([lab.real, lab.imag])
    header.append("core_norm")
    columns.append(traj.core_norm)
    write_csv(path, header, zip(*columns))
