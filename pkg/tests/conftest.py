import numpy as np
import pytest

from sbsim.model import CircuitParams, ObservedParams

# device values quoted for the measured circuit
PAPER_CIRCUIT = dict(omega_t0_hz=6.8131e9, omega_r0_hz=4.0823e9,
                     g_hz=120.7e6, chi_t_hz=137.4e6)
PAPER_OBSERVED = dict(omega_t_hz=6.8112e9, omega_r_hz=4.0755e9,
                      a_t_hz=150e6, a_r_hz=1646.7, a_tr_hz=497e3)
STRONG_CIRCUIT = dict(omega_t0_hz=6.5e9, omega_r0_hz=4.0e9,
                      g_hz=200e6, chi_t_hz=200e6)
PAPER_KAPPA_HZ = 10.2e6
PAPER_GAMMA_HZ = 129e3


@pytest.fixture(scope="session")
def paper_circuit():
    return CircuitParams(**PAPER_CIRCUIT)


@pytest.fixture(scope="session")
def paper_observed():
    return ObservedParams(**PAPER_OBSERVED)


@pytest.fixture(scope="session")
def strong_circuit():
    return CircuitParams(**STRONG_CIRCUIT)


@pytest.fixture(scope="session")
def paper_system(paper_circuit):
    from sbsim.dynamics import System

    return System.from_circuit(paper_circuit, (5, 5))


@pytest.fixture(scope="session")
def rng():
    return np.random.default_rng(20240801)
