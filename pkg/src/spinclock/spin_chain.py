"""Nearest-neighbour spin chain built from the (XX - YY) pair coupling."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .qla import (
    DOWN,
    SIGMA_X,
    SIGMA_Y,
    UP,
    HermitianOperator,
    StateVector,
    embed_operator,
    spectral_projectors,
)


@dataclass(frozen=True)
class ChainSpec:
    n_spins: int = 3
    energy_scale: float = 1.0

    def __post_init__(self):
        if self.n_spins < 2:
            raise ValueError("a chain needs at least two spins")
        if not self.energy_scale > 0:
            raise ValueError("energy_scale must be positive")


@dataclass(frozen=True)
class EigenSystem:
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray  # columns
    named: dict[str, StateVector]

    def multiplicities(self, tol: float = 1e-9) -> dict[float, int]:
        out: dict[float, int] = {}
        for lam in self.eigenvalues:
            key = next((k for k in out if abs(k - lam) <= tol), None)
            if key is None:
                out[float(np.round(lam, 12))] = 1
            else:
                out[key] += 1
        return out


def pair_coupling() -> HermitianOperator:
    """(1/(2 sqrt 2)) (sx sx - sy sy) on two spins."""
    m = (np.kron(SIGMA_X, SIGMA_X) - np.kron(SIGMA_Y, SIGMA_Y)) / (2 * np.sqrt(2))
    return HermitianOperator((2, 2), m)


def chain_hamiltonian(spec: ChainSpec = ChainSpec()) -> HermitianOperator:
    dims = (2,) * spec.n_spins
    pair = pair_coupling().matrix
    m = sum(embed_operator(pair, dims, [j, j + 1]) for j in range(spec.n_spins - 1))
    return HermitianOperator(dims, spec.energy_scale * m)


def flip_all(n_spins: int) -> np.ndarray:
    """sigma_x on every spin."""
    out = np.ones((1, 1), dtype=complex)
    for _ in range(n_spins):
        out = np.kron(out, SIGMA_X)
    return out


def _basis(label: str) -> np.ndarray:
    # "udd" -> |up down down>
    v = np.ones(1, dtype=complex)
    for ch in label:
        v = np.kron(v, UP if ch == "u" else DOWN)
    return v


_NAMED = {
    "phi_m1": (1 / np.sqrt(2), "uuu", -0.5, "udd", -0.5, "ddu"),
    "phi_0_1": (1.0, "udu"),
    "phi_0_2": (1 / np.sqrt(2), "udd", -1 / np.sqrt(2), "ddu"),
    "phi_p1": (1 / np.sqrt(2), "uuu", 0.5, "udd", 0.5, "ddu"),
}

NAMED_ENERGIES = {"phi_m1": -1.0, "phi_0_1": 0.0, "phi_0_2": 0.0, "phi_p1": 1.0}

LABELS = tuple(_NAMED) + tuple(f"{k}_flip" for k in _NAMED)


def named_eigenstate(label: str) -> StateVector:
    """Literal three-spin eigenstates; a ``_flip`` suffix flips all spins.

    Energies (for energy_scale 1) are -1, 0, 0, +1 for phi_m1, phi_0_1,
    phi_0_2, phi_p1; flipped partners share the energy of their original.
    """
    base, flipped = (label[:-5], True) if label.endswith("_flip") else (label, False)
    if base not in _NAMED:
        raise KeyError(f"unknown eigenstate label {label!r}; choose from {LABELS}")
    spec = _NAMED[base]
    v = sum(c * _basis(b) for c, b in zip(spec[::2], spec[1::2]))
    if flipped:
        v = flip_all(3) @ v
    return StateVector((2, 2, 2), v)


def eigensystem(spec: ChainSpec = ChainSpec()) -> EigenSystem:
    h = chain_hamiltonian(spec)
    w, v = np.linalg.eigh(h.matrix)
    named = {lab: named_eigenstate(lab) for lab in LABELS} if spec.n_spins == 3 else {}
    return EigenSystem(w, v, named)


def eigenspace_projectors(spec: ChainSpec = ChainSpec()) -> list[tuple[float, np.ndarray]]:
    return spectral_projectors(chain_hamiltonian(spec).matrix)
