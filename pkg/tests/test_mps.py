import numpy as np
import pytest
from conftest import CNOT, H_LEFT, ONE, T_LOCAL, ZERO, bell_state, ghz_state, random_circuit_mps

from magicmps import MpsState, haar_unitary
from magicmps.sampling import pauli_expectation_mps


def test_product_state_all_zeros():
    state = MpsState.from_product_state([ZERO] * 4)
    assert state.n_sites == 4
    assert state.bond_dims() == [1, 1, 1]
    assert abs(state.norm() - 1.0) < 1e-12
    profile = state.entanglement_profile()
    assert np.all(profile.per_cut == 0.0)
    assert profile.max_value == 0.0
    state.validate()


def test_single_site_t_state():
    state = MpsState.from_product_state([T_LOCAL])
    assert abs(state.norm() - 1.0) < 1e-12
    assert state.max_bond() == 1
    assert state.entanglement_profile().max_cut is None


def test_non_normalized_local_state_rejected():
    with pytest.raises(ValueError, match="not normalized"):
        MpsState.from_product_state([np.array([1.0, 1.0])])


def test_zz_expectation_on_01():
    state = MpsState.from_product_state([ZERO, ONE])
    # oracle: direct statevector contraction
    sv = state.to_statevector()
    zz = np.diag([1, -1, -1, 1]).astype(complex)
    expected = np.vdot(sv, zz @ sv).real
    assert expected == pytest.approx(-1.0, abs=1e-14)
    assert pauli_expectation_mps(state, "ZZ") == pytest.approx(-1.0, abs=1e-12)


def test_identity_gate_leaves_bell_unchanged():
    state = bell_state()
    before_profile = state.entanglement_profile().per_cut.copy()
    before_bonds = state.bond_dims()
    before = {s: pauli_expectation_mps(state, s) for s in ("XX", "YY", "ZZ", "ZI", "IX")}
    report = state.apply_two_qubit_gate(np.eye(4), 0)
    assert report.discarded_weight == 0.0
    assert state.bond_dims() == before_bonds
    assert np.allclose(state.entanglement_profile().per_cut, before_profile, atol=1e-10)
    for string, value in before.items():
        assert pauli_expectation_mps(state, string) == pytest.approx(value, abs=1e-10)


def test_bell_construction():
    state = bell_state()
    assert state.bond_dims() == [2]
    assert state.entanglement_profile().max_value == pytest.approx(1.0, abs=1e-12)
    sv = state.to_statevector()
    target = np.array([1, 0, 0, 1]) / np.sqrt(2)
    phase = sv[0] / abs(sv[0])
    assert np.allclose(sv / phase, target, atol=1e-12)


def test_chi1_cap_gives_dominant_product_approximation(rng):
    gate = haar_unitary(4, rng)
    state = MpsState.all_zeros(2, chi_max=1)
    report = state.apply_two_qubit_gate(gate, 0)
    assert report.capped
    assert report.new_bond == 1
    assert abs(state.norm() - 1.0) < 1e-12
    # oracle: rank-1 SVD of the exact two-qubit state
    exact = gate @ np.array([1, 0, 0, 0], dtype=complex)
    u, s, vh = np.linalg.svd(exact.reshape(2, 2))
    rank1 = s[0] * np.outer(u[:, 0], vh[0])
    rank1 = rank1.reshape(-1) / np.linalg.norm(rank1)
    overlap = abs(np.vdot(rank1, state.to_statevector()))
    assert overlap == pytest.approx(1.0, abs=1e-10)
    assert report.discarded_weight == pytest.approx(1.0 - s[0] ** 2, abs=1e-10)


def test_gate_validation():
    state = MpsState.all_zeros(3)
    with pytest.raises(ValueError, match="unitary"):
        state.apply_two_qubit_gate(np.ones((4, 4)), 0)
    with pytest.raises(ValueError, match="out of range"):
        state.apply_two_qubit_gate(np.eye(4), 2)
    with pytest.raises(ValueError, match="4x4"):
        state.apply_two_qubit_gate(np.eye(2), 0)


def test_ghz_entropy_flat():
    state = ghz_state(4)
    profile = state.entanglement_profile()
    # oracle: Schmidt values 1/2, 1/2 at every cut
    assert np.allclose(profile.per_cut, 1.0, atol=1e-10)
    assert profile.max_value == pytest.approx(1.0, abs=1e-10)


def test_max_required_bond():
    assert MpsState.all_zeros(5).max_bond() == 1
    assert bell_state().max_bond() == 2
    state, _, _ = random_circuit_mps(11, 20, chi_max=None, seed=5)
    assert state.max_bond() <= 2**5


def test_statevector_of_01_is_basis_index_1():
    state = MpsState.from_product_state([ZERO, ONE])
    sv = state.to_statevector()
    assert sv[1] == pytest.approx(1.0)
    assert np.allclose(np.delete(sv, 1), 0.0)


def test_statevector_guard():
    state = MpsState.all_zeros(15)
    with pytest.raises(ValueError, match="statevector"):
        state.to_statevector()


def test_norm_and_canonical_form_after_random_circuit():
    state, _, _ = random_circuit_mps(8, 10, chi_max=6, seed=3)
    assert abs(state.norm() - 1.0) <= 1e-10
    state.validate(tol=1e-10)
    state.canonize(0)
    state.validate(tol=1e-10)
    state.canonize(7)
    state.validate(tol=1e-10)


def test_truncation_monotonicity_below_cap():
    # exact bonds stay below the cap at shallow depth: nothing may be discarded
    state = MpsState.all_zeros(6, chi_max=4)
    schedule_reports = []
    state2, schedule, gates = random_circuit_mps(6, 2, chi_max=4, seed=11)
    for gate, site in gates:
        schedule_reports.append(state.apply_two_qubit_gate(gate, site))
    assert all(r.discarded_weight == 0.0 for r in schedule_reports)
    assert all(not r.capped for r in schedule_reports)


def test_entropy_cap_in_finite_mode():
    state, _, _ = random_circuit_mps(9, 12, chi_max=5, seed=2)
    profile = state.entanglement_profile()
    for cut, entropy in enumerate(profile.per_cut):
        assert entropy <= np.log2(state.bond_dims()[cut]) + 1e-9


def test_snapshot_roundtrip(tmp_path):
    state, _, _ = random_circuit_mps(6, 6, chi_max=8, seed=17)
    path = tmp_path / "state.mps"
    state.save(path)
    loaded = MpsState.load(path)
    assert loaded.n_sites == state.n_sites
    assert loaded.chi_max == state.chi_max
    assert loaded.svd_tol == state.svd_tol
    assert loaded.ortho_center is None
    for a, b in zip(loaded.tensors, state.tensors):
        assert np.array_equal(a, b)
    assert np.allclose(loaded.to_statevector(), state.to_statevector())
    loaded.canonize(0)
    loaded.validate()


def test_snapshot_rejects_garbage(tmp_path):
    path = tmp_path / "bad.mps"
    path.write_bytes(b"not a snapshot at all")
    with pytest.raises(ValueError, match="snapshot"):
        MpsState.load(path)


def test_gate_stream_of_canonize_is_gauge_only():
    state, _, _ = random_circuit_mps(7, 8, chi_max=8, seed=23)
    sv = state.to_statevector()
    state.canonize(3)
    assert abs(abs(np.vdot(sv, state.to_statevector())) - 1.0) < 1e-12
