"""Perfect Pauli-string sampling from an MPS and Monte Carlo SRE estimation.

Sampling sweeps the chain left to right, keeping one left environment L per
sample (a bond x bond matrix, bra index first).  With all sites right of the
current one right-canonical, the cumulative marginal of a letter prefix is
pi_k = ||L_k||_F^2 / 2^k, so the conditional probability of letter p at site k
is ||L_k(p)||_F^2 / (2 ||L_{k-1}||_F^2).  Environments are renormalized to unit
Frobenius norm each step and the weight is accumulated in log2, which keeps
long chains from underflowing and makes c^2 == 1 bitwise exact on
computational-basis product states.  Cost per sample is O(N d^2 chi^3); the
batched driver turns the per-site work into BLAS matrix products.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .exact import sre_from_statevector
from .mps import MpsState

__all__ = [
    "NumericalConsistencyError",
    "SampleRecord",
    "SreEstimate",
    "pauli_sample",
    "draw_samples",
    "estimate_sre",
    "exact_sre_small",
    "pauli_expectation_mps",
]

LETTERS = "IXYZ"
_LN2 = float(np.log(2.0))
_C2_REJECT = 1e-24
_LOG2_C2_REJECT = float(np.log2(_C2_REJECT))
_CONSISTENCY_TOL = 1e-8

_PAULIS = np.array(
    [
        [[1, 0], [0, 1]],
        [[0, 1], [1, 0]],
        [[0, -1j], [1j, 0]],
        [[1, 0], [0, -1]],
    ],
    dtype=np.complex128,
)
# rows index the letter, columns flatten (s, t) as s*2 + t
_PV = _PAULIS.reshape(4, 4)
# K[p, q, q'] = PV[p, q] * conj(PV[p, q']) turns the Gram matrix of the four
# candidate environments into the four Frobenius weights in one contraction
_KP = _PV[:, :, None] * _PV.conj()[:, None, :]


class NumericalConsistencyError(RuntimeError):
    """Conditional letter probabilities stopped summing to the parent marginal."""


@dataclass(frozen=True)
class SampleRecord:
    """One sampled Pauli string with its expectation c and probability xi."""

    string: str
    c: float
    xi: float


@dataclass(frozen=True)
class SreEstimate:
    """Monte Carlo estimates of M_1 and M_2 with standard errors."""

    m1: float
    m2: float
    se1: float
    se2: float
    n_samples: int
    n_redrawn: int = 0


def _right_canonical_tensors(state: MpsState) -> list[np.ndarray]:
    if state.ortho_center == 0:
        return state.tensors
    return state.canonized(0).tensors


def _draw_batch(tensors: list[np.ndarray], n_samples: int, rng: np.random.Generator):
    """Draw ``n_samples`` strings at once.

    Returns (letters, c, log2_c2): letters is (n_samples, N) uint8 in 0..3
    (IXYZ order), c the real expectation values, log2_c2 = log2(c^2).
    """
    n_sites = len(tensors)
    m = n_samples
    env = np.ones((m, 1, 1), dtype=np.complex128)
    log2_c2 = np.full(m, float(n_sites))
    letters = np.empty((m, n_sites), dtype=np.uint8)

    for k, t in enumerate(tensors):
        a, d, b = t.shape
        # X[m, bra, t, ket_new] = sum_ket env[m, bra, ket] T[ket, t, ket_new]
        x = (env.reshape(m * a, a) @ t.reshape(a, d * b)).reshape(m, a, d * b)
        # G[m, (s, bra_new), (t, ket_new)] = sum_bra conj(T)[bra, s, bra_new] X[m, bra, ...]
        bra = t.conj().transpose(1, 2, 0).reshape(d * b, a)
        g = np.matmul(bra[None, :, :], x)
        # reorder to G[m, q = s*2 + t, bra_new, ket_new]
        g = g.reshape(m, d, b, d, b).transpose(0, 1, 3, 2, 4).reshape(m, 4, b * b)

        gram = g @ g.conj().transpose(0, 2, 1)
        cond = 0.5 * np.clip(np.einsum("pqr,mqr->mp", _KP, gram).real, 0.0, None)
        drift = np.max(np.abs(cond.sum(axis=1) - 1.0))
        if drift > _CONSISTENCY_TOL:
            raise NumericalConsistencyError(
                f"site {k}: conditional probabilities sum to 1 +/- {drift:.2e} (> {_CONSISTENCY_TOL})"
            )

        cum = np.cumsum(cond, axis=1)
        choice = np.minimum((cum < rng.random(m)[:, None]).sum(axis=1), 3)
        letters[:, k] = choice

        env = np.einsum("mq,mqz->mz", _PV[choice], g)
        weight = np.einsum("mz,mz->m", env, env.conj()).real
        log2_c2 += np.log2(0.5 * weight)
        env = (env / np.sqrt(weight)[:, None]).reshape(m, b, b)

    phase = env[:, 0, 0]
    residue = np.max(np.abs(phase.imag))
    if residue > 1e-10:
        raise NumericalConsistencyError(f"sampled expectation has imaginary residue {residue:.2e}")
    c = phase.real * np.exp2(0.5 * log2_c2)
    return letters, c, log2_c2


def _draw_with_redraws(tensors, n_samples, rng):
    """Batch draw, redrawing samples whose c^2 fell below the rejection floor."""
    letters, c, log2_c2 = _draw_batch(tensors, n_samples, rng)
    n_redrawn = 0
    while True:
        bad = np.flatnonzero(log2_c2 < _LOG2_C2_REJECT)
        if bad.size == 0:
            return letters, c, log2_c2, n_redrawn
        n_redrawn += bad.size
        letters[bad], c[bad], log2_c2[bad] = _draw_batch(tensors, bad.size, rng)


def _record(letters_row: np.ndarray, c: float, n_sites: int) -> SampleRecord:
    string = "".join(LETTERS[i] for i in letters_row)
    return SampleRecord(string=string, c=float(c), xi=float(c) ** 2 / 2**n_sites)


def pauli_sample(state: MpsState, rng: np.random.Generator) -> SampleRecord:
    """Draw one Pauli string distributed exactly as Xi(sigma) = c^2 / 2^N.

    The state must be right-canonical (orthogonality center at site 0).
    """
    if state.ortho_center != 0:
        raise ValueError("pauli_sample requires a right-canonical state (ortho_center = 0)")
    letters, c, _log2_c2, _ = _draw_with_redraws(state.tensors, 1, rng)
    return _record(letters[0], c[0], state.n_sites)


def draw_samples(state: MpsState, n_samples: int, rng: np.random.Generator) -> list[SampleRecord]:
    """Draw ``n_samples`` records; re-gauges a copy of the state if needed."""
    tensors = _right_canonical_tensors(state)
    letters, c, _, _ = _draw_with_redraws(tensors, n_samples, rng)
    return [_record(row, ci, state.n_sites) for row, ci in zip(letters, c)]


def estimate_sre(state: MpsState, n_samples: int, rng: np.random.Generator) -> SreEstimate:
    """Monte Carlo M_1 and M_2 from perfect Pauli samples.

    M_1 is the sample mean of -ln c^2; M_2 = -ln(mean of c^2) since the
    Xi-expectation of c^2 equals sum_sigma 2^-N c^4.  Samples with
    c^2 < 1e-24 are redrawn (true zero-weight strings are never drawn; such
    values are numerical noise) and counted in ``n_redrawn``.
    """
    if n_samples < 2:
        raise ValueError(f"need at least 2 samples, got {n_samples}")
    tensors = _right_canonical_tensors(state)
    _, _, log2_c2, n_redrawn = _draw_with_redraws(tensors, n_samples, rng)

    ln_c2 = log2_c2 * _LN2
    m1 = float(np.mean(-ln_c2))
    se1 = float(np.std(ln_c2, ddof=1) / np.sqrt(n_samples))

    c2 = np.exp2(log2_c2)
    mean_c2 = float(np.mean(c2))
    m2 = float(-np.log(mean_c2))
    se2 = float(np.std(c2, ddof=1) / (mean_c2 * np.sqrt(n_samples)))

    for name, value in (("m1", m1), ("m2", m2)):
        if value < -1e-9:
            raise NumericalConsistencyError(f"{name} = {value:.2e} below the -1e-9 clamp window")
    return SreEstimate(
        m1=max(m1, 0.0),
        m2=max(m2, 0.0),
        se1=se1,
        se2=se2,
        n_samples=n_samples,
        n_redrawn=n_redrawn,
    )


def exact_sre_small(state: MpsState, rank: int) -> float:
    """Exact M_n by full 4^N Pauli enumeration (via the statevector), N <= 8."""
    if state.n_sites > 8:
        raise ValueError(f"exact SRE enumeration limited to 8 sites, got {state.n_sites}")
    return sre_from_statevector(state.to_statevector(), rank)


def pauli_expectation_mps(state: MpsState, letters: str) -> float:
    """<psi| sigma |psi> for one string by direct environment contraction."""
    if len(letters) != state.n_sites:
        raise ValueError(f"string length {len(letters)} != {state.n_sites} sites")
    env = np.ones((1, 1), dtype=np.complex128)
    for t, letter in zip(state.tensors, letters):
        op = _PAULIS[LETTERS.index(letter)]
        env = np.einsum("ab,asc,st,btd->cd", env, t.conj(), op, t, optimize=True)
    value = complex(env[0, 0])
    if abs(value.imag) > 1e-10:
        raise NumericalConsistencyError(f"expectation has imaginary residue {value.imag:.2e}")
    return float(value.real)
