import numpy as np
import pytest

from magicmps import MpsState, brickwork, haar_unitary
from magicmps.random_circuits import SeedTree, derive_stream

I2 = np.eye(2, dtype=complex)
H1 = np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2)
S1 = np.diag([1, 1j]).astype(complex)
X1 = np.array([[0, 1], [1, 0]], dtype=complex)
Y1 = np.array([[0, -1j], [1j, 0]], dtype=complex)
Z1 = np.diag([1, -1]).astype(complex)

# two-qubit embeddings (big-endian: first factor acts on the left site)
H_LEFT = np.kron(H1, I2)
S_LEFT = np.kron(S1, I2)
CNOT = np.array(
    [[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]],
    dtype=complex,
)

ZERO = np.array([1.0, 0.0])
ONE = np.array([0.0, 1.0])
T_LOCAL = np.array([1.0, np.exp(1j * np.pi / 4)]) / np.sqrt(2)


def bell_state(chi_max=None):
    state = MpsState.all_zeros(2, chi_max=chi_max)
    state.apply_two_qubit_gate(H_LEFT, 0)
    state.apply_two_qubit_gate(CNOT, 0)
    return state


def ghz_state(n_sites):
    state = MpsState.all_zeros(n_sites)
    state.apply_two_qubit_gate(H_LEFT, 0)
    for site in range(n_sites - 1):
        state.apply_two_qubit_gate(CNOT, site)
    return state


def random_circuit_mps(n_sites, depth, chi_max=None, seed=0, trajectory=0):
    """Brick-wall trajectory with the package's own seeding contract."""
    state = MpsState.all_zeros(n_sites, chi_max=chi_max)
    schedule = brickwork(n_sites, depth)
    gates = []
    for counter, _layer, site in schedule.slots():
        gate = haar_unitary(4, derive_stream(SeedTree(seed, trajectory, counter)))
        gates.append((gate, site))
        state.apply_two_qubit_gate(gate, site)
    return state, schedule, gates


@pytest.fixture
def rng():
    return np.random.default_rng(20240811)
