import numpy as np
import pytest
from conftest import CNOT, H_LEFT, T_LOCAL, ZERO, bell_state, random_circuit_mps

from magicmps import MpsState, brickwork, exact_sre_small, haar_m2
from magicmps.exact import (
    apply_two_qubit_gate,
    entanglement_entropy,
    evolve,
    pauli_expectation,
    sre_from_statevector,
    xi_distribution,
    zero_state,
)
from magicmps.random_circuits import BrickworkSchedule


def test_empty_schedule_keeps_initial_state():
    schedule = BrickworkSchedule(n_sites=3, depth=0, layers=())
    sv = evolve(3, schedule, [])
    assert np.array_equal(sv, zero_state(3))


def test_bell_amplitudes():
    sv = zero_state(2)
    sv = apply_two_qubit_gate(sv, H_LEFT, 0, 2)
    sv = apply_two_qubit_gate(sv, CNOT, 0, 2)
    assert np.allclose(sv, np.array([1, 0, 0, 1]) / np.sqrt(2), atol=1e-14)


def test_mps_matches_oracle_on_identical_gates():
    state, schedule, gates = random_circuit_mps(6, 8, chi_max=None, seed=31)
    reference = evolve(6, schedule, [g for g, _ in gates])
    fidelity = abs(np.vdot(reference, state.to_statevector())) ** 2
    assert fidelity >= 1 - 1e-8


def test_evolve_guards():
    schedule = brickwork(4, 1)
    with pytest.raises(ValueError, match="refusing"):
        evolve(15, BrickworkSchedule(15, 0, ()), [])
    with pytest.raises(ValueError, match="expected"):
        evolve(4, schedule, [])


def test_xi_of_zero_state():
    xi = xi_distribution(zero_state(1))
    assert xi["I"] == pytest.approx(0.5, abs=1e-14)
    assert xi["Z"] == pytest.approx(0.5, abs=1e-14)
    assert xi["X"] == pytest.approx(0.0, abs=1e-14)
    assert xi["Y"] == pytest.approx(0.0, abs=1e-14)


def test_xi_of_t_state():
    # <X> = <Y> = 1/sqrt(2), <Z> = 0
    xi = xi_distribution(T_LOCAL.astype(complex))
    assert xi["I"] == pytest.approx(0.5, abs=1e-12)
    assert xi["X"] == pytest.approx(0.25, abs=1e-12)
    assert xi["Y"] == pytest.approx(0.25, abs=1e-12)
    assert xi["Z"] == pytest.approx(0.0, abs=1e-12)


def test_xi_of_bell_state():
    xi = xi_distribution(bell_state().to_statevector())
    for stabilizer in ("II", "XX", "YY", "ZZ"):
        assert xi[stabilizer] == pytest.approx(0.25, abs=1e-12)
    others = {k: v for k, v in xi.items() if k not in ("II", "XX", "YY", "ZZ")}
    assert max(others.values()) < 1e-12


@pytest.mark.parametrize("builder", [lambda: zero_state(3), lambda: bell_state().to_statevector()])
def test_xi_normalization(builder):
    assert sum(xi_distribution(builder()).values()) == pytest.approx(1.0, abs=1e-9)


def test_xi_normalization_random_state():
    state, _, _ = random_circuit_mps(5, 6, seed=4)
    assert sum(xi_distribution(state.to_statevector()).values()) == pytest.approx(1.0, abs=1e-9)


def test_haar_m2_values():
    assert haar_m2(1) == pytest.approx(np.log(5 / 4), abs=1e-12)
    assert haar_m2(2) == pytest.approx(np.log(7 / 4), abs=1e-12)
    assert haar_m2(10) == pytest.approx(np.log(1027 / 4), abs=1e-12)
    assert haar_m2(10) == pytest.approx(5.5481, abs=5e-4)


def test_haar_m2_volume_law_tail():
    assert abs(haar_m2(20) - 20 * np.log(2) + np.log(4)) <= 1e-5


def test_exact_entropy():
    assert entanglement_entropy(bell_state().to_statevector(), 1) == pytest.approx(1.0, abs=1e-12)
    product = zero_state(4)
    for cut in range(1, 4):
        assert entanglement_entropy(product, cut) == 0.0


def test_exact_entropy_matches_mps_profile():
    state, schedule, gates = random_circuit_mps(6, 8, seed=13)
    reference = evolve(6, schedule, [g for g, _ in gates])
    profile = state.entanglement_profile()
    for cut in range(5):
        assert profile.per_cut[cut] == pytest.approx(entanglement_entropy(reference, cut + 1), abs=1e-8)


def test_sre_routes_agree():
    # route A: the Xi map; route B: enumeration through the MPS statevector
    state, _, _ = random_circuit_mps(4, 6, seed=9)
    xi = xi_distribution(state.to_statevector())
    n = 4
    m2_from_map = -np.log(2**n * sum(v * v for v in xi.values()))
    m1_from_map = -sum(v * np.log(2**n * v) for v in xi.values() if v > 1e-300)
    assert exact_sre_small(state, 2) == pytest.approx(m2_from_map, abs=1e-10)
    assert exact_sre_small(state, 1) == pytest.approx(m1_from_map, abs=1e-10)


def test_pauli_enumeration_matches_direct_expectations():
    state, _, _ = random_circuit_mps(3, 4, seed=21)
    sv = state.to_statevector()
    xi = xi_distribution(sv)
    rng = np.random.default_rng(0)
    for _ in range(25):
        letters = "".join(rng.choice(list("IXYZ")) for _ in range(3))
        assert xi[letters] == pytest.approx(pauli_expectation(sv, letters) ** 2 / 8, abs=1e-12)


def test_caps():
    with pytest.raises(ValueError, match="Xi map"):
        xi_distribution(zero_state(7))
    with pytest.raises(ValueError, match="enumeration"):
        sre_from_statevector(zero_state(9), 2)
    with pytest.raises(ValueError, match="rank"):
        sre_from_statevector(zero_state(2), 3)
    with pytest.raises(ValueError, match="exact SRE"):
        exact_sre_small(MpsState.all_zeros(9), 2)


def test_stabilizer_zero_is_exact():
    assert sre_from_statevector(zero_state(4), 1) == 0.0
    assert sre_from_statevector(zero_state(4), 2) == 0.0
