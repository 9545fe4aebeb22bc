"""Dense statevector oracle for small systems: exact evolution, entropies,
and full Pauli enumeration.

Statevector indices are big-endian over sites (site 0 = most significant bit).
A Pauli string is encoded by bit masks (x, z): the Hermitian operator is
i^{|x & z|} X^x Z^z, whose site letters are (0,0) -> I, (1,0) -> X,
(1,1) -> Y, (0,1) -> Z.  This reproduces Y = [[0, -i], [i, 0]].
"""

from __future__ import annotations

import numpy as np

__all__ = [
    "STATEVECTOR_MAX_SITES",
    "XI_MAX_SITES",
    "SRE_MAX_SITES",
    "zero_state",
    "apply_two_qubit_gate",
    "evolve",
    "entanglement_entropy",
    "pauli_expectation",
    "pauli_c_squared",
    "xi_distribution",
    "sre_from_statevector",
    "haar_m2",
]

STATEVECTOR_MAX_SITES = 14
XI_MAX_SITES = 6
SRE_MAX_SITES = 8

_LETTERS = "IXYZ"
_PAULI_1Q = {
    "I": np.eye(2, dtype=np.complex128),
    "X": np.array([[0, 1], [1, 0]], dtype=np.complex128),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=np.complex128),
    "Z": np.array([[1, 0], [0, -1]], dtype=np.complex128),
}
_I_POWERS = np.array([1.0 + 0.0j, 1.0j, -1.0 + 0.0j, -1.0j])


def _n_sites_of(statevector: np.ndarray) -> int:
    n = int(round(np.log2(statevector.size)))
    if 2**n != statevector.size:
        raise ValueError(f"statevector length {statevector.size} is not a power of 2")
    return n


def zero_state(n_sites: int) -> np.ndarray:
    """|0...0> on ``n_sites`` qubits."""
    vec = np.zeros(2**n_sites, dtype=np.complex128)
    vec[0] = 1.0
    return vec


def apply_two_qubit_gate(statevector: np.ndarray, gate: np.ndarray, site: int, n_sites: int) -> np.ndarray:
    """Apply a 4x4 gate to (site, site+1); two-qubit index = 2*s_site + s_site1."""
    if not 0 <= site < n_sites - 1:
        raise ValueError(f"gate site {site} out of range for {n_sites} sites")
    shaped = statevector.reshape(2**site, 4, 2 ** (n_sites - site - 2))
    out = np.einsum("ab,ibj->iaj", np.asarray(gate, dtype=np.complex128), shaped)
    return np.ascontiguousarray(out).reshape(-1)


def evolve(n_sites: int, schedule, gates: list[np.ndarray]) -> np.ndarray:
    """Exact evolution of |0...0> through the schedule, one unitary per slot."""
    if n_sites > STATEVECTOR_MAX_SITES:
        raise ValueError(f"refusing exact evolution for N = {n_sites} > {STATEVECTOR_MAX_SITES}")
    if len(gates) != schedule.gate_count:
        raise ValueError(f"expected {schedule.gate_count} gates, got {len(gates)}")
    vec = zero_state(n_sites)
    for counter, _layer, site in schedule.slots():
        vec = apply_two_qubit_gate(vec, gates[counter], site, n_sites)
    return vec


def entanglement_entropy(statevector: np.ndarray, cut: int) -> float:
    """Von Neumann entropy (bits) across the bipartition with ``cut`` sites on the left."""
    n = _n_sites_of(statevector)
    if not 1 <= cut <= n - 1:
        raise ValueError(f"cut must be in 1..{n - 1}, got {cut}")
    s = np.linalg.svd(statevector.reshape(2**cut, 2 ** (n - cut)), compute_uv=False)
    p = s * s
    p = p[p > 1e-300]
    p = p / p.sum()
    return float(-(p * np.log2(p)).sum() + 0.0)


def pauli_expectation(statevector: np.ndarray, letters: str) -> float:
    """<psi| sigma |psi> for one Pauli string given as letters over IXYZ."""
    n = _n_sites_of(statevector)
    if len(letters) != n:
        raise ValueError(f"string length {len(letters)} != {n} sites")
    vec = statevector.reshape((2,) * n)
    for site, letter in enumerate(letters):
        if letter == "I":
            continue
        op = _PAULI_1Q[letter]
        vec = np.moveaxis(np.tensordot(op, vec, axes=(1, site)), 0, site)
    value = complex(np.vdot(statevector, vec.reshape(-1)))
    if abs(value.imag) > 1e-10:
        raise ValueError(f"Pauli expectation has imaginary residue {value.imag:.2e}")
    return float(value.real)


def _walsh_hadamard(values: np.ndarray) -> np.ndarray:
    """t[z] = sum_i (-1)^{popcount(z & i)} values[i] (natural ordering)."""
    out = values.copy()
    size = out.size
    h = 1
    while h < size:
        out = out.reshape(-1, 2, h)
        top = out[:, 0, :] + out[:, 1, :]
        bottom = out[:, 0, :] - out[:, 1, :]
        out = np.stack((top, bottom), axis=1).reshape(size)
        h *= 2
    return out


def pauli_c_squared(statevector: np.ndarray) -> np.ndarray:
    """Squared expectations c^2 of all 4^N Hermitian Pauli strings.

    Returns an array of shape (2^N, 2^N) indexed [x, z] by the bit masks.
    """
    n = _n_sites_of(statevector)
    if n > SRE_MAX_SITES:
        raise ValueError(f"refusing Pauli enumeration for N = {n} > {SRE_MAX_SITES}")
    dim = statevector.size
    indices = np.arange(dim)
    popcount = np.array([bin(i).count("1") for i in range(dim)])
    out = np.empty((dim, dim))
    for x in range(dim):
        overlap = np.conj(statevector[indices ^ x]) * statevector
        transformed = _walsh_hadamard(overlap)
        c = _I_POWERS[popcount[x & indices] & 3] * transformed
        if np.max(np.abs(c.imag)) > 1e-9:
            raise ValueError("Pauli expectations acquired an imaginary part; state not normalized?")
        out[x] = c.real**2
    return out


def _letters_from_masks(x: int, z: int, n_sites: int) -> str:
    # (x_bit, z_bit): (0,0) I, (1,0) X, (1,1) Y, (0,1) Z
    chars = []
    for site in range(n_sites):
        shift = n_sites - 1 - site
        xb = (x >> shift) & 1
        zb = (z >> shift) & 1
        chars.append("IXZY"[xb + 2 * zb])
    return "".join(chars)


def xi_distribution(statevector: np.ndarray) -> dict[str, float]:
    """Full probability map Xi(sigma) = c^2 / 2^N over all Pauli strings."""
    n = _n_sites_of(statevector)
    if n > XI_MAX_SITES:
        raise ValueError(f"refusing the Xi map for N = {n} > {XI_MAX_SITES}")
    c2 = pauli_c_squared(statevector)
    scale = 1.0 / 2**n
    return {
        _letters_from_masks(x, z, n): float(c2[x, z] * scale)
        for x in range(2**n)
        for z in range(2**n)
    }


def sre_from_statevector(statevector: np.ndarray, rank: int) -> float:
    """Exact stabilizer Renyi entropy M_n (nats) by full enumeration, n in {1, 2}."""
    if rank not in (1, 2):
        raise ValueError(f"rank must be 1 or 2, got {rank}")
    n = _n_sites_of(statevector)
    c2 = pauli_c_squared(statevector)
    scale = 1.0 / 2**n
    if rank == 2:
        return float(-np.log(np.sum(c2 * c2) * scale) + 0.0)
    positive = c2[c2 > 1e-300]
    return float(-np.sum(positive * np.log(positive)) * scale + 0.0)


def haar_m2(n_sites: int) -> float:
    """Saturation value of M_2 for N-qubit Haar-random states: ln((2^N + 3) / 4)."""
    if n_sites < 1:
        raise ValueError(f"n_sites must be positive, got {n_sites}")
    return float(np.log((2.0**n_sites + 3.0) / 4.0))
