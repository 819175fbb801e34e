"""
Shared fixtures: the figure operating points used throughout the tests
"""

import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).resolve().parent))

from core.params import DampingParams, DerivedCouplings  # noqa: E402

NU = 6000.0
OMEGA0 = 6000.0
OMEGA_R = 1000.0
DELTA = OMEGA0 - OMEGA_R
LAMBDA = 500.0


def couplings(zeta2_over_delta: float = 0.2, lam: float = LAMBDA, **overrides) -> DerivedCouplings:
    """Reference operating point with zeta fixed through zeta^2 / delta."""
    params = dict(nu=NU, omega0=OMEGA0, omega_R=OMEGA_R, lam=lam,
                  zeta=(zeta2_over_delta * DELTA) ** 0.5)
    params.update(overrides)
    return DerivedCouplings.from_frequencies(**params)


@pytest.fixture
def paper_damping() -> DampingParams:
    return DampingParams.from_quality(NU, 1e4, gamma_d_ratio=0.6)


@pytest.fixture
def fig2b_couplings() -> DerivedCouplings:
    return couplings(0.2)


@pytest.fixture
def fig3_couplings() -> DerivedCouplings:
    return couplings(10.0)


@pytest.fixture
def weak_couplings() -> DerivedCouplings:
    return DerivedCouplings.from_frequencies(NU, OMEGA0, OMEGA_R, LAMBDA, 30.0)


@pytest.fixture
def small_lambda_couplings() -> DerivedCouplings:
    """lambda = 5 MHz keeps time-domain runs short."""
    return couplings(0.2, lam=5.0)


@pytest.fixture
def make_couplings():
    return couplings
