"""Dense linear algebra over tensor-product Hilbert spaces.

Every object carries ``dims``, the ordered list of subsystem dimensions.
The global ordering used by the rest of the package is
``[chain spins left->right, A-pointer, B-pointer, A-clock, B-clock]``.
Spin basis index 0 is "up", index 1 is "down".
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import reduce
from typing import Sequence

import numpy as np

HERMITIAN_RTOL = 1e-12

SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=complex)
IDENTITY_2 = np.eye(2, dtype=complex)
UP = np.array([1, 0], dtype=complex)
DOWN = np.array([0, 1], dtype=complex)


def _check_dims(dims: Sequence[int]) -> tuple[int, ...]:
    dims = tuple(int(d) for d in dims)
    if not dims or any(d < 1 for d in dims):
        raise ValueError(f"subsystem dimensions must be positive, got {dims}")
    return dims


@dataclass(frozen=True)
class StateVector:
    dims: tuple[int, ...]
    amplitudes: np.ndarray

    def __post_init__(self):
        dims = _check_dims(self.dims)
        amps = np.asarray(self.amplitudes, dtype=complex).reshape(-1)
        if amps.size != int(np.prod(dims)):
            raise ValueError(f"{amps.size} amplitudes do not match dims {dims}")
        object.__setattr__(self, "dims", dims)
        object.__setattr__(self, "amplitudes", amps)

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def normalized(self) -> "StateVector":
        n = self.norm
        if n == 0:
            raise ValueError("cannot normalize the zero vector")
        return StateVector(self.dims, self.amplitudes / n)

    def tensor_view(self) -> np.ndarray:
        return self.amplitudes.reshape(self.dims)

    def inner(self, other: "StateVector") -> complex:
        """<self|other>."""
        return complex(np.vdot(self.amplitudes, other.amplitudes))

    def __add__(self, other: "StateVector") -> "StateVector":
        if self.dims != other.dims:
            raise ValueError("dimension mismatch")
        return StateVector(self.dims, self.amplitudes + other.amplitudes)

    def __sub__(self, other: "StateVector") -> "StateVector":
        return self + (-1) * other

    def __mul__(self, scalar) -> "StateVector":
        return StateVector(self.dims, scalar * self.amplitudes)

    __rmul__ = __mul__


@dataclass(frozen=True)
class HermitianOperator:
    dims: tuple[int, ...]
    matrix: np.ndarray

    def __post_init__(self):
        dims = _check_dims(self.dims)
        m = np.asarray(self.matrix, dtype=complex)
        n = int(np.prod(dims))
        if m.shape != (n, n):
            raise ValueError(f"matrix shape {m.shape} does not match dims {dims}")
        scale = max(float(np.abs(m).max()), 1.0) if m.size else 1.0
        if np.abs(m - m.conj().T).max(initial=0.0) > HERMITIAN_RTOL * scale:
            raise ValueError("operator is not Hermitian")
        object.__setattr__(self, "dims", dims)
        object.__setattr__(self, "matrix", m)

    def __add__(self, other: "HermitianOperator") -> "HermitianOperator":
        if self.dims != other.dims:
            raise ValueError("dimension mismatch")
        return HermitianOperator(self.dims, self.matrix + other.matrix)

    def __mul__(self, scalar: float) -> "HermitianOperator":
        return HermitianOperator(self.dims, float(scalar) * self.matrix)

    __rmul__ = __mul__

    def expectation(self, state: StateVector) -> float:
        """<psi|H|psi> / <psi|psi>."""
        v = state.amplitudes
        return float(np.real(np.vdot(v, self.matrix @ v)) / np.real(np.vdot(v, v)))


@dataclass(frozen=True)
class DensityOperator:
    dims: tuple[int, ...]
    matrix: np.ndarray

    def __post_init__(self):
        dims = _check_dims(self.dims)
        m = np.asarray(self.matrix, dtype=complex)
        n = int(np.prod(dims))
        if m.shape != (n, n):
            raise ValueError(f"matrix shape {m.shape} does not match dims {dims}")
        object.__setattr__(self, "dims", dims)
        object.__setattr__(self, "matrix", m)

    @property
    def trace(self) -> float:
        return float(np.real(np.trace(self.matrix)))

    def normalized(self) -> "DensityOperator":
        return DensityOperator(self.dims, self.matrix / self.trace)

    @property
    def purity(self) -> float:
        """Tr(rho^2) / Tr(rho)^2, so sub-normalized states are handled."""
        return float(np.real(np.vdot(self.matrix, self.matrix))) / self.trace**2

    @classmethod
    def from_state(cls, state: StateVector) -> "DensityOperator":
        v = state.amplitudes
        return cls(state.dims, np.outer(v, v.conj()))


def ket(dims: Sequence[int], indices: Sequence[int]) -> StateVector:
    """Computational basis state with one index per subsystem."""
    dims = _check_dims(dims)
    amps = np.zeros(dims, dtype=complex)
    amps[tuple(indices)] = 1.0
    return StateVector(dims, amps)


def bell_state(sign: int = +1) -> StateVector:
    """(|up up> + sign |down down>)/sqrt(2)."""
    amps = np.zeros(4, dtype=complex)
    amps[0] = 1 / np.sqrt(2)
    amps[3] = sign / np.sqrt(2)
    return StateVector((2, 2), amps)


def projector(state: StateVector) -> HermitianOperator:
    v = state.normalized().amplitudes
    return HermitianOperator(state.dims, np.outer(v, v.conj()))


def tensor(*factors):
    """Kronecker product of states or of operators (one kind per call)."""
    if not factors:
        raise ValueError("tensor() needs at least one factor")
    kinds = {type(f) for f in factors}
    if len(kinds) != 1:
        raise TypeError(f"cannot mix {sorted(k.__name__ for k in kinds)} in one tensor product")
    kind = kinds.pop()
    dims = tuple(d for f in factors for d in f.dims)
    if kind is StateVector:
        return StateVector(dims, reduce(np.kron, [f.amplitudes for f in factors]))
    if kind in (HermitianOperator, DensityOperator):
        return kind(dims, reduce(np.kron, [f.matrix for f in factors]))
    raise TypeError(f"unsupported factor type {kind.__name__}")


def embed_operator(op: np.ndarray, dims: Sequence[int], targets: Sequence[int]) -> np.ndarray:
    """Dense matrix of ``op`` acting on ``targets`` with identity elsewhere."""
    dims = _check_dims(dims)
    n = int(np.prod(dims))
    cols = np.eye(n, dtype=complex).reshape(dims + (n,))
    out = _apply_tensor(np.asarray(op, dtype=complex), cols, dims, targets)
    return out.reshape(n, n)


def _apply_tensor(op: np.ndarray, psi: np.ndarray, dims: tuple[int, ...], targets: Sequence[int]) -> np.ndarray:
    # psi has shape dims + (extra...)
    targets = list(targets)
    tdims = [dims[t] for t in targets]
    k = len(targets)
    op_t = op.reshape(tdims + tdims)
    moved = np.tensordot(op_t, psi, axes=(list(range(k, 2 * k)), targets))
    # tensordot puts the op output axes first; restore the original positions
    rest = [i for i in range(psi.ndim) if i not in targets]
    order = targets + rest
    return np.moveaxis(moved, list(range(psi.ndim)), order)


def apply_local(op, state: StateVector, targets: Sequence[int]) -> StateVector:
    """Apply ``op`` on the subsystems ``targets``, identity on the rest."""
    targets = [int(t) for t in targets]
    if len(set(targets)) != len(targets):
        raise ValueError(f"repeated target in {targets}")
    if any(t < 0 or t >= len(state.dims) for t in targets):
        raise ValueError(f"targets {targets} out of range for dims {state.dims}")
    matrix = op.matrix if isinstance(op, (HermitianOperator, DensityOperator)) else np.asarray(op, dtype=complex)
    need = int(np.prod([state.dims[t] for t in targets]))
    if matrix.shape != (need, need):
        raise ValueError(f"operator of shape {matrix.shape} cannot act on dims {[state.dims[t] for t in targets]}")
    out = _apply_tensor(matrix, state.tensor_view(), state.dims, targets)
    return StateVector(state.dims, out)


def permute(state: StateVector, order: Sequence[int]) -> StateVector:
    """Reorder subsystems: new subsystem i is old subsystem order[i]."""
    order = list(order)
    if sorted(order) != list(range(len(state.dims))):
        raise ValueError(f"{order} is not a permutation")
    amps = np.transpose(state.tensor_view(), order)
    return StateVector(tuple(state.dims[i] for i in order), amps)


def partial_trace(x, keep: Sequence[int]) -> DensityOperator:
    """Reduced density operator on the subsystems listed in ``keep``."""
    keep = [int(k) for k in keep]
    if not keep:
        raise ValueError("keep must name at least one subsystem")
    if len(set(keep)) != len(keep) or any(k < 0 or k >= len(x.dims) for k in keep):
        raise ValueError(f"invalid keep set {keep} for dims {x.dims}")
    dims = x.dims
    kdims = tuple(dims[k] for k in keep)
    nk = int(np.prod(kdims))
    rest = [i for i in range(len(dims)) if i not in keep]
    if isinstance(x, StateVector):
        psi = np.transpose(x.tensor_view(), keep + rest).reshape(nk, -1)
        return DensityOperator(kdims, psi @ psi.conj().T)
    if isinstance(x, DensityOperator):
        n = len(dims)
        rho = x.matrix.reshape(dims + dims)
        rho = np.transpose(rho, keep + rest + [n + i for i in keep] + [n + i for i in rest])
        nr = int(np.prod([dims[i] for i in rest])) if rest else 1
        rho = rho.reshape(nk, nr, nk, nr)
        return DensityOperator(kdims, np.einsum("arbr->ab", rho))
    raise TypeError(f"cannot partial-trace {type(x).__name__}")


def eig_hermitian(op: HermitianOperator) -> tuple[np.ndarray, list[StateVector]]:
    """Ascending eigenvalues and orthonormal eigenvectors."""
    w, v = np.linalg.eigh(op.matrix)
    return w, [StateVector(op.dims, v[:, i]) for i in range(len(w))]


def spectral_projectors(matrix: np.ndarray, tol: float = 1e-9) -> list[tuple[float, np.ndarray]]:
    """Group eigenvectors of a Hermitian matrix into (eigenvalue, projector) pairs."""
    w, v = np.linalg.eigh(matrix)
    groups: list[list[int]] = []
    for i, lam in enumerate(w):
        if groups and abs(lam - w[groups[-1][0]]) <= tol * max(1.0, abs(lam)):
            groups[-1].append(i)
        else:
            groups.append([i])
    out = []
    for g in groups:
        vecs = v[:, g]
        out.append((float(np.mean(w[g])), vecs @ vecs.conj().T))
    return out


def _as_matrix(x) -> tuple[tuple[int, ...], np.ndarray]:
    if isinstance(x, StateVector):
        return x.dims, np.outer(x.amplitudes, x.amplitudes.conj())
    return x.dims, x.matrix


def trace_distance(a, b) -> float:
    """(1/2) ||a - b||_1 for density operators (or pure states)."""
    da, ma = _as_matrix(a)
    db, mb = _as_matrix(b)
    if da != db:
        raise ValueError(f"shape mismatch {da} vs {db}")
    ta, tb = np.real(np.trace(ma)), np.real(np.trace(mb))
    if abs(ta - tb) > 1e-9:
        raise ValueError(f"traces differ: {ta} vs {tb}")
    diff = ma - mb
    ev = np.linalg.eigvalsh((diff + diff.conj().T) / 2)
    return float(min(1.0, 0.5 * np.abs(ev).sum()))


def fidelity(a, b) -> float:
    """Uhlmann fidelity (tr sqrt(sqrt(a) b sqrt(a)))^2."""
    if isinstance(a, StateVector) and isinstance(b, StateVector):
        return abs(a.inner(b)) ** 2
    _, ma = _as_matrix(a)
    _, mb = _as_matrix(b)
    sv = np.linalg.svd(_psd_sqrt(ma) @ _psd_sqrt(mb), compute_uv=False)
    return float(min(1.0, np.sum(sv) ** 2))


def _psd_sqrt(m: np.ndarray) -> np.ndarray:
    w, v = np.linalg.eigh((m + m.conj().T) / 2)
    return (v * np.sqrt(np.clip(w, 0, None))) @ v.conj().T
