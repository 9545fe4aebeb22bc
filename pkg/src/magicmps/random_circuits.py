"""Haar-random gates, brick-wall schedules and reproducible seed streams."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "GENERATOR_ID",
    "SeedTree",
    "derive_stream",
    "haar_unitary",
    "BrickworkSchedule",
    "brickwork",
]

# recorded in run metadata: the bit generator and the seed-derivation scheme
GENERATOR_ID = "numpy.PCG64+SeedSequence(master, spawn_key=(trajectory, counter))"

_MASK64 = (1 << 64) - 1


@dataclass(frozen=True)
class SeedTree:
    """Address of one random stream: master seed, trajectory, gate counter.

    Streams for distinct addresses are statistically independent, and the
    stream for a given address never depends on execution order.
    """

    master_seed: int
    trajectory_index: int = 0
    gate_index: int = 0

    def __post_init__(self):
        if not 0 <= self.master_seed <= _MASK64:
            raise ValueError("master_seed must be a 64-bit unsigned integer")
        if self.trajectory_index < 0 or self.gate_index < 0:
            raise ValueError("trajectory_index and gate_index must be nonnegative")


def derive_stream(tree: SeedTree) -> np.random.Generator:
    """Counter-based stream derivation; any address can be opened in any order."""
    seq = np.random.SeedSequence(entropy=tree.master_seed, spawn_key=(tree.trajectory_index, tree.gate_index))
    return np.random.Generator(np.random.PCG64(seq))


def haar_unitary(dim: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-distributed unitary: complex Ginibre, QR, R-diagonal phase fix."""
    if dim not in (2, 4):
        raise ValueError(f"dim must be 2 or 4, got {dim}")
    z = (rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))) / np.sqrt(2.0)
    q, r = np.linalg.qr(z)
    diag = np.diagonal(r)
    phases = diag / np.abs(diag)
    return q * phases


@dataclass(frozen=True)
class BrickworkSchedule:
    """Alternating-layer schedule; each layer is one time step.

    ``layers[k]`` lists the left sites of that layer's gates: even k covers
    bonds (0,1), (2,3), ...; odd k covers (1,2), (3,4), ...
    """

    n_sites: int
    depth: int
    layers: tuple[tuple[int, ...], ...]

    @property
    def gate_count(self) -> int:
        return sum(len(layer) for layer in self.layers)

    def slots(self):
        """Yield (gate_counter, layer_index, left_site) in application order."""
        counter = 0
        for k, layer in enumerate(self.layers):
            for site in layer:
                yield counter, k, site
                counter += 1


def brickwork(n_sites: int, depth: int) -> BrickworkSchedule:
    """Brick-wall schedule of two-qubit gates, odd bonds first."""
    if n_sites < 2:
        raise ValueError(f"brickwork needs at least 2 sites, got {n_sites}")
    if depth < 1:
        raise ValueError(f"depth must be at least 1, got {depth}")
    layers = tuple(tuple(range(k % 2, n_sites - 1, 2)) for k in range(depth))
    return BrickworkSchedule(n_sites=n_sites, depth=depth, layers=layers)
