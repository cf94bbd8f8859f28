"""Chain parameters and closed-form reference quantities.

The fixed-end chain of N identical particles coupled by unit springs has
normal-mode frequencies w_j = 2 sin(j*pi/(2(N+1))), j = 1..N, and every
spectral quantity below follows from summing quanta over those modes.
These functions are the primary oracle that the numerical solvers are
checked against.

All energies are dimensionless (the spring energy scale), all frequencies
lie in (0, 2).
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "ChainSpec",
    "ModeSpectrum",
    "dispersion",
    "mode_spectrum",
    "ground_energy_closed",
    "first_gap",
    "spectrum",
]


@dataclass(frozen=True)
class ChainSpec:
    """Model parameters: particle count, dimensionless hbar, Fock cutoff.

    The lattice constant, particle mass and spring constant are scaled out
    and have no runtime representation; ``hbar_tilde`` is the only coupling
    left. ``bare_dim`` is the number of oscillator number states kept per
    site in any Fock-space computation.
    """

    n_sites: int
    hbar_tilde: float = 1.0
    bare_dim: int = 14

    def __post_init__(self):
        if self.n_sites < 1:
            raise ValueError(f"n_sites must be >= 1, got {self.n_sites}")
        if not self.hbar_tilde > 0:
            raise ValueError(f"hbar_tilde must be > 0, got {self.hbar_tilde}")
        if self.bare_dim < 2:
            raise ValueError(f"bare_dim must be >= 2, got {self.bare_dim}")


@dataclass(frozen=True)
class ModeSpectrum:
    """Normal-mode frequencies, strictly ascending, with mode numbers 1..N."""

    frequencies: np.ndarray
    mode_numbers: np.ndarray


def dispersion(spec: ChainSpec, j: int) -> float:
    """Frequency of mode j (1-based): w_j = 2 sin(j pi / (2(N+1)))."""
    n = spec.n_sites
    if not 1 <= j <= n:
        raise ValueError(f"mode index {j} outside 1..{n}")
    return 2.0 * math.sin(j * math.pi / (2.0 * (n + 1)))


def mode_spectrum(spec: ChainSpec) -> ModeSpectrum:
    """All N mode frequencies at once."""
    j = np.arange(1, spec.n_sites + 1)
    freqs = 2.0 * np.sin(j * np.pi / (2.0 * (spec.n_sites + 1)))
    return ModeSpectrum(frequencies=freqs, mode_numbers=j)


def ground_energy_closed(spec: ChainSpec) -> float:
    """Ground energy (1/2) sum_j hbar w_j, evaluated in closed form.

    Equals (sqrt(2)/2) * hbar * sin(N x) / sin(x) with x = pi/(4(N+1)),
    which telescopes the half-sum of the dispersion frequencies.
    """
    n = spec.n_sites
    x = math.pi / (4.0 * (n + 1))
    return (math.sqrt(2.0) / 2.0) * spec.hbar_tilde * math.sin(n * x) / math.sin(x)


def first_gap(spec: ChainSpec) -> float:
    """Energy of one quantum of the softest mode: hbar * w_1."""
    return spec.hbar_tilde * dispersion(spec, 1)


def spectrum(spec: ChainSpec, count: int) -> np.ndarray:
    """Lowest ``count`` excitation energies above the ground state, ascending.

    Enumerates occupation vectors best-first on the total energy
    sum_j n_j * hbar * w_j (ties broken lexicographically on the occupation
    vector, so the output is deterministic) and collapses levels that
    coincide within 1e-12.
    """
    if count < 1:
        raise ValueError(f"count must be >= 1, got {count}")
    freqs = spec.hbar_tilde * mode_spectrum(spec).frequencies
    n_modes = len(freqs)

    # Heap entries: (energy, occupation, lowest mode index allowed to grow).
    # Restricting increments to indices >= the last one incremented makes
    # every occupation vector reachable exactly once.
    heap = []
    zero = (0,) * n_modes
    for j in range(n_modes):
        occ = list(zero)
        occ[j] = 1
        heapq.heappush(heap, (freqs[j], tuple(occ), j))

    levels: list[float] = []
    while heap and len(levels) < count:
        energy, occ, last = heapq.heappop(heap)
        if not levels or energy - levels[-1] > 1e-12 * max(1.0, energy):
            levels.append(energy)
        for j in range(last, n_modes):
            nxt = list(occ)
            nxt[j] += 1
            heapq.heappush(heap, (energy + freqs[j], tuple(nxt), j))
    return np.array(levels)
