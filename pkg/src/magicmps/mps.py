"""Open-boundary matrix product states: canonical forms, two-qubit gates, truncation.

Conventions used throughout the package:

* site tensors have shape ``(left_bond, 2, right_bond)`` with boundary bonds of
  size 1; sites are 0-based and site 0 maps to the most significant bit of the
  statevector index (big-endian),
* ``ortho_center = k`` means every site left of k is left-canonical and every
  site right of k is right-canonical; ``None`` means the gauge is unknown,
* cut ``k`` (0-based, k = 0..N-2) separates sites ``0..k`` from ``k+1..N-1``,
  i.e. the left block of 1-based size ``k + 1``.

Tensors are treated as immutable: every operation replaces them with freshly
allocated arrays, so shallow copies of a state may share storage safely.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np

__all__ = ["MpsState", "EntropyProfile", "TruncationReport"]

_STATEVECTOR_MAX_SITES = 14
_DEGENERACY_TOL = 1e-12
# relative tails below this are float noise of an exactly lower-rank matrix
_WEIGHT_NOISE = 1e-28
_SNAPSHOT_MAGIC = b"MPSSNAP"
_SNAPSHOT_VERSION = 1


@dataclass(frozen=True)
class TruncationReport:
    """Outcome of one gate application: what the SVD cut away."""

    discarded_weight: float
    new_bond: int
    capped: bool


@dataclass(frozen=True)
class EntropyProfile:
    """Von Neumann entropy in bits at every cut, plus the maximum."""

    per_cut: np.ndarray
    max_value: float
    max_cut: int | None


def _svd(mat: np.ndarray):
    """Dense SVD, singular values descending; gesvd fallback for the rare
    gesdd convergence failure."""
    try:
        return np.linalg.svd(mat, full_matrices=False)
    except np.linalg.LinAlgError:
        from scipy.linalg import svd as _scipy_svd

        return _scipy_svd(mat, full_matrices=False, lapack_driver="gesvd")


def _choose_rank(s: np.ndarray, svd_tol: float, chi_max: int | None) -> tuple[int, bool]:
    """Number of singular values kept by the discarded-weight rule.

    Keeps the smallest leading set whose discarded relative weight stays at or
    below ``svd_tol``, then applies the hard cap.  Degenerate values tied
    (within 1e-12) with the last kept one are retained when capacity allows.
    """
    weights = s * s
    total = float(weights.sum())
    if total <= 0.0:
        return 1, False
    tail = np.cumsum(weights[::-1])
    dropped = int(np.searchsorted(tail, svd_tol * total, side="right"))
    keep = max(s.size - dropped, 1)
    if chi_max is not None and keep > chi_max:
        return chi_max, True
    while keep < s.size and s[keep - 1] - s[keep] <= _DEGENERACY_TOL:
        if chi_max is not None and keep >= chi_max:
            break
        keep += 1
    return keep, False


def _qr_shift_right(tensors: list[np.ndarray], site: int) -> None:
    """Move a known orthogonality center one site to the right via QR."""
    left, phys, right = tensors[site].shape
    q, r = np.linalg.qr(tensors[site].reshape(left * phys, right))
    tensors[site] = q.reshape(left, phys, -1)
    tensors[site + 1] = np.tensordot(r, tensors[site + 1], axes=(1, 0))


def _lq_shift_left(tensors: list[np.ndarray], site: int) -> None:
    """Move a known orthogonality center one site to the left (LQ via QR)."""
    left, phys, right = tensors[site].shape
    q, r = np.linalg.qr(tensors[site].reshape(left, phys * right).conj().T)
    tensors[site] = q.conj().T.reshape(-1, phys, right)
    tensors[site - 1] = np.tensordot(tensors[site - 1], r.conj().T, axes=(2, 0))


class MpsState:
    """Normalized open-boundary MPS with orthogonality-center bookkeeping.

    ``chi_max=None`` is the infinite mode (no cap); a positive integer is the
    finite mode.  ``svd_tol`` is the discarded-weight tolerance applied at
    every gate SVD before the cap.
    """

    def __init__(
        self,
        tensors: list[np.ndarray],
        chi_max: int | None = None,
        svd_tol: float = 1e-8,
        ortho_center: int | None = None,
    ):
        if not tensors:
            raise ValueError("an MPS needs at least one site")
        if chi_max is not None and chi_max < 1:
            raise ValueError(f"chi_max must be positive or None, got {chi_max}")
        if svd_tol < 0:
            raise ValueError(f"svd_tol must be nonnegative, got {svd_tol}")
        self.tensors = [np.asarray(t, dtype=np.complex128) for t in tensors]
        self.chi_max = chi_max
        self.svd_tol = float(svd_tol)
        self.ortho_center = ortho_center

    # ------------------------------------------------------------------ #
    # construction

    @classmethod
    def from_product_state(
        cls,
        local_states: list[np.ndarray],
        chi_max: int | None = None,
        svd_tol: float = 1e-8,
    ) -> "MpsState":
        """Product state from per-site unit vectors (each of dimension 2)."""
        tensors = []
        for k, vec in enumerate(local_states):
            vec = np.asarray(vec, dtype=np.complex128).reshape(-1)
            if vec.shape != (2,):
                raise ValueError(f"site {k}: local state must have dimension 2")
            norm = np.linalg.norm(vec)
            if abs(norm - 1.0) > 1e-12:
                raise ValueError(f"site {k}: local state not normalized (|norm-1| = {abs(norm - 1.0):.2e})")
            tensors.append((vec / norm).reshape(1, 2, 1))
        return cls(tensors, chi_max=chi_max, svd_tol=svd_tol, ortho_center=0)

    @classmethod
    def all_zeros(cls, n_sites: int, chi_max: int | None = None, svd_tol: float = 1e-8) -> "MpsState":
        """|0...0> on ``n_sites`` qubits."""
        return cls.from_product_state([np.array([1.0, 0.0])] * n_sites, chi_max=chi_max, svd_tol=svd_tol)

    # ------------------------------------------------------------------ #
    # basic queries

    @property
    def n_sites(self) -> int:
        return len(self.tensors)

    def bond_dims(self) -> list[int]:
        """Interior bond sizes, one per cut (empty for a single site)."""
        return [t.shape[2] for t in self.tensors[:-1]]

    def max_bond(self) -> int:
        """Largest bond size across all cuts (1 for a single site)."""
        bonds = self.bond_dims()
        return max(bonds) if bonds else 1

    def norm(self) -> float:
        if self.ortho_center is not None:
            return float(np.linalg.norm(self.tensors[self.ortho_center]))
        env = np.ones((1, 1), dtype=np.complex128)
        for t in self.tensors:
            env = np.einsum("ab,aic,bid->cd", env, t.conj(), t, optimize=True)
        return float(np.sqrt(abs(env[0, 0])))

    def copy(self) -> "MpsState":
        return MpsState(list(self.tensors), chi_max=self.chi_max, svd_tol=self.svd_tol, ortho_center=self.ortho_center)

    # ------------------------------------------------------------------ #
    # gauge handling

    def canonize(self, center: int) -> None:
        """Bring the orthogonality center to ``center`` in place."""
        if not 0 <= center < self.n_sites:
            raise ValueError(f"center {center} out of range for {self.n_sites} sites")
        tensors = list(self.tensors)
        if self.ortho_center is None:
            for k in range(self.n_sites - 1, center, -1):
                _lq_shift_left(tensors, k)
            for k in range(0, center):
                _qr_shift_right(tensors, k)
        elif self.ortho_center < center:
            for k in range(self.ortho_center, center):
                _qr_shift_right(tensors, k)
        else:
            for k in range(self.ortho_center, center, -1):
                _lq_shift_left(tensors, k)
        self.tensors = tensors
        self.ortho_center = center

    def canonized(self, center: int) -> "MpsState":
        """Copy of this state with the orthogonality center at ``center``."""
        out = self.copy()
        if out.ortho_center != center:
            out.canonize(center)
        return out

    # ------------------------------------------------------------------ #
    # evolution

    def apply_two_qubit_gate(self, gate: np.ndarray, site: int) -> TruncationReport:
        """Apply a 4x4 unitary to sites (site, site+1); truncate and renormalize.

        The gate's two-qubit basis is big-endian: index = 2*s + t with s on
        ``site`` and t on ``site + 1``.
        """
        gate = np.asarray(gate, dtype=np.complex128)
        if gate.shape != (4, 4):
            raise ValueError(f"gate must be 4x4, got {gate.shape}")
        unitarity = np.max(np.abs(gate.conj().T @ gate - np.eye(4)))
        if unitarity > 1e-10:
            raise ValueError(f"gate is not unitary (max |U+U - I| = {unitarity:.2e})")
        if not 0 <= site < self.n_sites - 1:
            raise ValueError(f"gate site {site} out of range for {self.n_sites} sites")

        self.canonize(site)
        t1, t2 = self.tensors[site], self.tensors[site + 1]
        left, right = t1.shape[0], t2.shape[2]
        theta = np.tensordot(t1, t2, axes=(2, 0))  # (l, s, t, r)
        theta = np.tensordot(gate.reshape(2, 2, 2, 2), theta, axes=([2, 3], [1, 2]))
        theta = theta.transpose(2, 0, 1, 3).reshape(left * 2, 2 * right)

        u, s, vh = _svd(theta)
        keep, capped = _choose_rank(s, self.svd_tol, self.chi_max)
        total = float(s @ s)
        kept = s[:keep]
        discarded = 1.0 - float(kept @ kept) / total
        if discarded < _WEIGHT_NOISE:
            discarded = 0.0
        kept = kept / np.linalg.norm(kept)

        self.tensors[site] = u[:, :keep].reshape(left, 2, keep)
        self.tensors[site + 1] = (kept[:, None] * vh[:keep]).reshape(keep, 2, right)
        self.ortho_center = site + 1
        return TruncationReport(discarded_weight=max(discarded, 0.0), new_bond=keep, capped=capped)

    # ------------------------------------------------------------------ #
    # measurement

    def entanglement_profile(self) -> EntropyProfile:
        """Von Neumann entropy (bits) at every cut from the Schmidt spectra.

        Non-mutating: works on a gauge copy of the tensors.
        """
        n = self.n_sites
        if n == 1:
            return EntropyProfile(per_cut=np.zeros(0), max_value=0.0, max_cut=None)
        tensors = list(self.tensors)
        start = self.ortho_center
        if start is None:
            for k in range(n - 1, 0, -1):
                _lq_shift_left(tensors, k)
        else:
            for k in range(start, 0, -1):
                _lq_shift_left(tensors, k)
        per_cut = np.zeros(n - 1)
        for k in range(n - 1):
            left, phys, right = tensors[k].shape
            u, s, vh = _svd(tensors[k].reshape(left * phys, right))
            p = s * s
            p = p[p > 1e-300]
            p = p / p.sum()
            per_cut[k] = -(p * np.log2(p)).sum() + 0.0
            tensors[k] = u.reshape(left, phys, -1)
            tensors[k + 1] = np.tensordot(s[:, None] * vh, tensors[k + 1], axes=(1, 0))
        max_cut = int(np.argmax(per_cut))
        return EntropyProfile(per_cut=per_cut, max_value=float(per_cut[max_cut]), max_cut=max_cut)

    def to_statevector(self) -> np.ndarray:
        """Full contraction to a 2^N vector (site 0 most significant)."""
        if self.n_sites > _STATEVECTOR_MAX_SITES:
            raise ValueError(f"refusing statevector for N = {self.n_sites} > {_STATEVECTOR_MAX_SITES}")
        vec = self.tensors[0].reshape(2, -1)
        for t in self.tensors[1:]:
            vec = np.tensordot(vec, t, axes=(1, 0)).reshape(-1, t.shape[2])
        return vec[:, 0]

    # ------------------------------------------------------------------ #
    # validation and persistence

    def validate(self, tol: float = 1e-10) -> None:
        """Check bond consistency, cap, norm and canonical isometries."""
        bond = 1
        for k, t in enumerate(self.tensors):
            if t.ndim != 3 or t.shape[1] != 2:
                raise ValueError(f"site {k}: tensor shape {t.shape} is not (left, 2, right)")
            if t.shape[0] != bond:
                raise ValueError(f"site {k}: left bond {t.shape[0]} != previous right bond {bond}")
            bond = t.shape[2]
            if self.chi_max is not None and k < self.n_sites - 1 and bond > self.chi_max:
                raise ValueError(f"bond {bond} at cut {k} exceeds chi_max = {self.chi_max}")
        if bond != 1:
            raise ValueError(f"rightmost bond is {bond}, expected 1")
        if abs(self.norm() - 1.0) > tol:
            raise ValueError(f"state norm deviates from 1 by {abs(self.norm() - 1.0):.2e}")
        if self.ortho_center is not None:
            c = self.ortho_center
            for k in range(c):
                t = self.tensors[k]
                g = np.tensordot(t.conj(), t, axes=([0, 1], [0, 1]))
                if np.max(np.abs(g - np.eye(t.shape[2]))) > tol:
                    raise ValueError(f"site {k} is not left-canonical")
            for k in range(c + 1, self.n_sites):
                t = self.tensors[k]
                g = np.tensordot(t, t.conj(), axes=([1, 2], [1, 2]))
                if np.max(np.abs(g - np.eye(t.shape[0]))) > tol:
                    raise ValueError(f"site {k} is not right-canonical")

    def save(self, path) -> None:
        """Versioned binary snapshot (complex entries as float64 pairs)."""
        with open(path, "wb") as fh:
            chi = -1 if self.chi_max is None else self.chi_max
            fh.write(_SNAPSHOT_MAGIC)
            fh.write(struct.pack("<IIIqd", _SNAPSHOT_VERSION, self.n_sites, 2, chi, self.svd_tol))
            for t in self.tensors:
                fh.write(struct.pack("<II", t.shape[0], t.shape[2]))
            for t in self.tensors:
                fh.write(np.ascontiguousarray(t, dtype=np.complex128).tobytes())

    @classmethod
    def load(cls, path) -> "MpsState":
        with open(path, "rb") as fh:
            magic = fh.read(len(_SNAPSHOT_MAGIC))
            if magic != _SNAPSHOT_MAGIC:
                raise ValueError("not an MPS snapshot")
            version, n_sites, phys, chi, svd_tol = struct.unpack("<IIIqd", fh.read(28))
            if version != _SNAPSHOT_VERSION:
                raise ValueError(f"unsupported snapshot version {version}")
            if phys != 2:
                raise ValueError(f"unsupported physical dimension {phys}")
            shapes = [struct.unpack("<II", fh.read(8)) for _ in range(n_sites)]
            tensors = []
            for left, right in shapes:
                raw = fh.read(left * 2 * right * 16)
                tensors.append(np.frombuffer(raw, dtype=np.complex128).reshape(left, 2, right).copy())
        return cls(tensors, chi_max=None if chi < 0 else chi, svd_tol=svd_tol, ortho_center=None)
