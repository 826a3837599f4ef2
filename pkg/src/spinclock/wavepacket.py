"""Closed-form branch expansions for clock-triggered qubit-pointer measurements.

A clock is a Gaussian packet moving at unit speed under ``H = p``; a pointer
coupled at position 0 is flipped (on the measured projector) when the clock
passes.  For a completed interaction the joint state is a finite sum of
terms ``vector ⊗ exp(-i (a x + b y)) Φ_t(x, y)`` where ``Φ_t`` is the freely
translated clock state, ``x``/``y`` are the final A/B clock positions (equal
to the time elapsed since each clock crossed the coupling) and a term may
be restricted to ``x > y`` (A interacted first) or ``x < y``.  The phase
gradient ``-a`` is the momentum kick on clock A, so ``a`` is the energy the
system drew from that clock.

Clock conventions: ``width`` is the standard deviation of the position
density; a packet of width ``Δ`` has momentum spread ``1/(2Δ)``.  For two
clocks the joint Gaussian is parametrized by standard deviations along the
normalized axes ``(x ± y)/√2``; equal widths give independent clocks.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np
from scipy import integrate
from scipy.special import erfcx

from .qla import SIGMA_X, spectral_projectors

REGIONS = ("all", "a_first", "b_first")
_SUPPORT_SIGMAS = 8.0


@dataclass(frozen=True)
class WavePacket:
    x0: float
    p0: float
    width: float
    prefactor: complex = 1.0

    def __post_init__(self):
        if not self.width > 0:
            raise ValueError("packet width must be positive")

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        norm = (2 * np.pi * self.width**2) ** -0.25
        return self.prefactor * norm * np.exp(-((x - self.x0) ** 2) / (4 * self.width**2) + 1j * self.p0 * x)

    @property
    def norm(self) -> float:
        return abs(self.prefactor)

    def kicked(self, kappa: float) -> "WavePacket":
        """Multiply the wavefunction by exp(i kappa x)."""
        return replace(self, p0=self.p0 + kappa)

    def propagated(self, t: float) -> "WavePacket":
        """Free evolution under H = p: rigid translation by t."""
        return replace(self, x0=self.x0 + t, prefactor=self.prefactor * np.exp(-1j * self.p0 * t))


def momentum_kick(packet: WavePacket, kappa: float) -> WavePacket:
    return packet.kicked(kappa)


def overlap(a: WavePacket, b: WavePacket) -> complex:
    """<a|b> in closed form."""
    qa, qb = 1 / (4 * a.width**2), 1 / (4 * b.width**2)
    big_a = qa + qb
    big_b = 2 * qa * a.x0 + 2 * qb * b.x0 + 1j * (b.p0 - a.p0)
    big_c = -qa * a.x0**2 - qb * b.x0**2
    norm = (2 * np.pi * a.width**2) ** -0.25 * (2 * np.pi * b.width**2) ** -0.25
    val = norm * np.sqrt(np.pi / big_a) * np.exp(big_b**2 / (4 * big_a) + big_c)
    return complex(np.conj(a.prefactor) * b.prefactor * val)


@dataclass(frozen=True)
class JointGaussian:
    """Two-clock Gaussian, independent when delta_plus == delta_minus."""

    center: tuple[float, float]
    delta_plus: float
    delta_minus: float
    momenta: tuple[float, float] = (0.0, 0.0)
    prefactor: complex = 1.0

    def __post_init__(self):
        if not (self.delta_plus > 0 and self.delta_minus > 0):
            raise ValueError("JointGaussian widths must be positive")

    @classmethod
    def independent(cls, xa: float, xb: float, width: float, momenta=(0.0, 0.0)) -> "JointGaussian":
        return cls((xa, xb), width, width, tuple(momenta))

    @property
    def is_product(self) -> bool:
        return abs(self.delta_plus - self.delta_minus) <= 1e-14 * self.delta_plus

    def __call__(self, x, y):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        u = (x + y - self.center[0] - self.center[1]) / np.sqrt(2)
        v = (x - y - self.center[0] + self.center[1]) / np.sqrt(2)
        norm = (2 * np.pi * self.delta_plus**2) ** -0.25 * (2 * np.pi * self.delta_minus**2) ** -0.25
        phase = self.momenta[0] * x + self.momenta[1] * y
        return self.prefactor * norm * np.exp(-(u**2) / (4 * self.delta_plus**2) - v**2 / (4 * self.delta_minus**2) + 1j * phase)

    def propagated(self, t: float) -> "JointGaussian":
        c = (self.center[0] + t, self.center[1] + t)
        return replace(self, center=c, prefactor=self.prefactor * np.exp(-1j * (self.momenta[0] + self.momenta[1]) * t))

    def packets(self) -> tuple[WavePacket, WavePacket]:
        if not self.is_product:
            raise ValueError("clocks are entangled; no per-clock packets")
        w = self.delta_plus
        return (
            WavePacket(self.center[0], self.momenta[0], w, self.prefactor),
            WavePacket(self.center[1], self.momenta[1], w),
        )

    # statistics of S = x + y and D = x - y under |Φ|^2
    @property
    def sum_stats(self) -> tuple[float, float]:
        return self.center[0] + self.center[1], np.sqrt(2) * self.delta_plus

    @property
    def diff_stats(self) -> tuple[float, float]:
        return self.center[0] - self.center[1], np.sqrt(2) * self.delta_minus

    def marginal_widths(self) -> tuple[float, float]:
        w = np.sqrt((self.delta_plus**2 + self.delta_minus**2) / 2)
        return w, w


def _gauss_char(k: float, mu: float, sigma: float) -> complex:
    """E[exp(i k X)] for X ~ N(mu, sigma^2)."""
    return complex(np.exp(1j * k * mu - 0.5 * (k * sigma) ** 2))


def half_line_char(k: float, mu: float, sigma: float) -> complex:
    """E[1{X>0} exp(i k X)] for X ~ N(mu, sigma^2), stable for any arguments."""
    z = -(mu + 1j * k * sigma**2) / (sigma * np.sqrt(2))
    pre = np.exp(-(mu**2) / (2 * sigma**2))
    if z.real >= 0:
        return complex(0.5 * pre * erfcx(z))
    return complex(np.exp(1j * k * mu - 0.5 * (k * sigma) ** 2) - 0.5 * pre * erfcx(-z))


def region_char(k: float, mu: float, sigma: float, region: str) -> complex:
    if region == "all":
        return _gauss_char(k, mu, sigma)
    if region == "a_first":
        return half_line_char(k, mu, sigma)
    if region == "b_first":
        return half_line_char(-k, -mu, sigma)
    raise ValueError(f"unknown region {region!r}")


def _intersect(r1: str, r2: str) -> str | None:
    if r1 == "all":
        return r2
    if r2 == "all" or r1 == r2:
        return r1
    return None


@dataclass(frozen=True)
class Term:
    """``vector ⊗ exp(-i(a x + b y)) Φ_t`` restricted to ``region``."""

    vector: np.ndarray
    a: float = 0.0
    b: float = 0.0
    region: str = "all"

    @property
    def kicks(self) -> tuple[float, float]:
        return -self.a, -self.b


@dataclass(frozen=True)
class BranchExpansion:
    dims: tuple[int, ...]  # discrete factor: system dims then pointer dims
    clocks: WavePacket | JointGaussian
    terms: tuple[Term, ...]
    time: float
    meta: dict = field(default_factory=dict)

    @property
    def n_clocks(self) -> int:
        return 1 if isinstance(self.clocks, WavePacket) else 2

    def clock_gram(self) -> np.ndarray:
        """G[i, j] = <f_i|f_j> for the clock factors of the terms."""
        n = len(self.terms)
        g = np.zeros((n, n), dtype=complex)
        weight = abs(self.clocks.prefactor) ** 2
        for i, ti in enumerate(self.terms):
            for j, tj in enumerate(self.terms):
                da, db = ti.a - tj.a, ti.b - tj.b
                if self.n_clocks == 1:
                    g[i, j] = weight * _gauss_char(da, self.clocks.x0, self.clocks.width)
                    continue
                region = _intersect(ti.region, tj.region)
                if region is None:
                    continue
                mu_s, sig_s = self.clocks.sum_stats
                mu_d, sig_d = self.clocks.diff_stats
                g[i, j] = weight * _gauss_char((da + db) / 2, mu_s, sig_s) * region_char((da - db) / 2, mu_d, sig_d, region)
        return g

    def discrete_density(self) -> np.ndarray:
        """Density matrix of system ⊗ pointers with the clocks traced out."""
        v = np.array([t.vector for t in self.terms])  # (n, D)
        g = self.clock_gram()
        return v.T @ g.T @ v.conj()

    @property
    def norm2(self) -> float:
        return float(np.real(np.trace(self.discrete_density())))

    def pointer_probabilities(self) -> dict[tuple[int, ...], float]:
        rho = self.discrete_density()
        n_ptr = self.meta.get("n_pointers", 0)
        sys_dim = int(np.prod(self.dims[: len(self.dims) - n_ptr]))
        diag = np.real(np.diag(rho)).reshape(sys_dim, 2**n_ptr).sum(axis=0)
        return {tuple(int(c) for c in np.binary_repr(k, n_ptr)): float(diag[k]) for k in range(2**n_ptr)}

    def conditional_system_state(self, outcome: Sequence[int]) -> np.ndarray:
        """Sub-normalized system density matrix for a pointer outcome (clocks traced)."""
        n_ptr = self.meta.get("n_pointers", 0)
        rho = self.discrete_density()
        sys_dim = rho.shape[0] // 2**n_ptr
        k = int("".join(map(str, outcome)), 2)
        r = rho.reshape(sys_dim, 2**n_ptr, sys_dim, 2**n_ptr)
        return r[:, k, :, k]

    def sample(self, grids: Sequence[np.ndarray]) -> np.ndarray:
        """Wavefunction on clock grids, shape (D, Nx) or (D, Nx, Ny)."""
        if self.n_clocks == 1:
            (x,) = grids
            base = self.clocks(x)
            out = np.zeros((len(self.terms[0].vector), len(x)), dtype=complex)
            for t in self.terms:
                out += np.outer(t.vector, base * np.exp(-1j * t.a * x))
            return out
        x, y = grids
        xx, yy = np.meshgrid(x, y, indexing="ij")
        base = self.clocks(xx, yy)
        d = len(self.terms[0].vector)
        out = np.zeros((d,) + xx.shape, dtype=complex)
        for t in self.terms:
            f = base * np.exp(-1j * (t.a * xx + t.b * yy))
            if t.region == "a_first":
                f = np.where(xx >= yy, f, 0)
            elif t.region == "b_first":
                f = np.where(xx < yy, f, 0)
            out += t.vector[:, None, None] * f[None]
        return out

    def definite_terms(self, tol: float = 1e-12) -> list[tuple[Term, float]]:
        """Terms whose region carries probability, with that region weight."""
        if self.n_clocks == 1:
            return [(t, 1.0) for t in self.terms]
        mu, sig = self.clocks.diff_stats
        out = []
        for t in self.terms:
            w = abs(region_char(0.0, mu, sig, t.region))
            if w > tol:
                out.append((t, w))
        return out

    def to_packets(self, tol: float = 1e-9) -> list[tuple[np.ndarray, list[WavePacket]]]:
        """Per-clock packets when the interaction order is definite."""
        if self.n_clocks == 1:
            return [(t.vector, [self.clocks.kicked(-t.a)]) for t in self.terms]
        pa, pb = self.clocks.packets()
        out = []
        for t, w in self.definite_terms(tol):
            if 1 - w > tol:
                raise ValueError("interaction order is not definite; use the phase-field form")
            out.append((t.vector, [pa.kicked(-t.a), pb.kicked(-t.b)]))
        return out

    def phase_fields(self, tol: float = 1e-10) -> list[dict]:
        """Merge region pairs into max/min phase fields where the vectors agree."""
        fields = []
        used = set()
        for i, ti in enumerate(self.terms):
            if i in used:
                continue
            if ti.region == "a_first":
                for j, tj in enumerate(self.terms):
                    if j in used or tj.region != "b_first":
                        continue
                    if np.isclose(ti.a, tj.b) and np.isclose(ti.b, tj.a) and np.allclose(ti.vector, tj.vector, atol=tol):
                        used.update((i, j))
                        fields.append(dict(vector=ti.vector, energy_first=ti.a, energy_second=ti.b, form="max/min"))
                        break
            if i not in used:
                used.add(i)
                fields.append(dict(vector=ti.vector, a=ti.a, b=ti.b, region=ti.region, form="linear"))
        return fields

    def to_json(self, labeler=None) -> str:
        return json.dumps(expansion_record(self, labeler), indent=2, sort_keys=True)


def _cplx(z) -> list[float]:
    z = complex(z)
    return [float(f"{z.real:.12g}"), float(f"{z.imag:.12g}")]


def expansion_record(b: BranchExpansion, labeler=None) -> dict:
    terms = []
    for t in b.terms:
        rec = dict(
            vector=[_cplx(z) for z in t.vector],
            coefficient=_cplx(1.0),
            phase_field=dict(a=float(f"{t.a:.12g}"), b=float(f"{t.b:.12g}"), region=t.region),
            kicks=[float(f"{k:.12g}") for k in t.kicks[: b.n_clocks]],
        )
        if labeler is not None:
            rec["label"] = labeler(t.vector)
        terms.append(rec)
    if b.n_clocks == 1:
        c = b.clocks
        clocks = [dict(x0=c.x0, p0=c.p0, width=c.width)]
    else:
        c = b.clocks
        clocks = dict(center=list(c.center), delta_plus=c.delta_plus, delta_minus=c.delta_minus, momenta=list(c.momenta))
    return dict(dims=list(b.dims), time=b.time, clocks=clocks, terms=terms, meta={k: v for k, v in b.meta.items() if isinstance(v, (int, float, str))})


# ---------------------------------------------------------------------------
# generic construction


def pointer_kick(projector: np.ndarray, convention: str = "physical") -> np.ndarray:
    """Spin ⊗ pointer unitary of a completed pulse of area pi/2.

    ``physical`` is exp(-i (pi/2) P ⊗ σx), which puts -i on the flipped
    pointer; ``paper`` drops that phase (P ⊗ σx + (1-P) ⊗ 1).
    """
    n = projector.shape[0]
    rest = np.eye(n) - projector
    flip = -1j * SIGMA_X if convention == "physical" else SIGMA_X
    if convention not in ("physical", "paper"):
        raise ValueError(f"unknown pointer convention {convention!r}")
    return np.kron(rest, np.eye(2)) + np.kron(projector, flip)


def _embed_pointer(op_sp: np.ndarray, sys_dim: int, n_ptr: int, which: int) -> np.ndarray:
    # op_sp acts on system ⊗ pointer[which]; lift to system ⊗ all pointers
    d = sys_dim * 2**n_ptr
    op = op_sp.reshape(sys_dim, 2, sys_dim, 2)
    full = np.zeros((sys_dim,) + (2,) * n_ptr + (sys_dim,) + (2,) * n_ptr, dtype=complex)
    eye_rest = np.eye(2 ** (n_ptr - 1)).reshape((2,) * (n_ptr - 1) * 2) if n_ptr > 1 else np.ones(())
    # einsum over explicit axes
    letters = "abcdefgh"
    ptr_out = list(letters[:n_ptr])
    ptr_in = list(letters[n_ptr : 2 * n_ptr])
    other_out = [p for k, p in enumerate(ptr_out) if k != which]
    other_in = [p for k, p in enumerate(ptr_in) if k != which]
    spec_op = f"s{ptr_out[which]}t{ptr_in[which]}"
    spec_eye = "".join(other_out + other_in)
    spec_full = "s" + "".join(ptr_out) + "t" + "".join(ptr_in)
    full = np.einsum(f"{spec_op},{spec_eye}->{spec_full}", op, eye_rest) if n_ptr > 1 else op
    return full.reshape(d, d)


def measurement_expansion(
    h_sys: np.ndarray,
    psi0: np.ndarray,
    projectors: Sequence[np.ndarray],
    clocks: WavePacket | JointGaussian,
    t: float,
    sys_dims: Sequence[int] | None = None,
    convention: str = "physical",
    active: Sequence[bool] | None = None,
    check_completed: bool = True,
) -> BranchExpansion:
    """Branch expansion after every active clock has passed its coupling.

    ``projectors[k]`` is the measured system projector of pointer ``k``,
    triggered by clock ``k``.  Pointers start in |0>.  ``active`` switches
    individual couplings off (the pointer then stays idle).
    """
    h_sys = np.asarray(h_sys, dtype=complex)
    sys_dim = h_sys.shape[0]
    sys_dims = tuple(sys_dims) if sys_dims is not None else (sys_dim,)
    n_ptr = len(projectors)
    n_clocks = 1 if isinstance(clocks, WavePacket) else 2
    if n_ptr != n_clocks:
        raise ValueError("one projector per clock is required")
    active = tuple(active) if active is not None else (True,) * n_ptr
    clocks_t = clocks.propagated(t)
    if check_completed:
        _check_completed(clocks_t, active)
    d = sys_dim * 2**n_ptr
    ptr0 = np.zeros(2**n_ptr)
    ptr0[0] = 1.0
    state0 = np.kron(np.asarray(psi0, dtype=complex), ptr0)
    spectrum = [(e, np.kron(p, np.eye(2**n_ptr))) for e, p in spectral_projectors(h_sys)]
    kicks = [
        _embed_pointer(pointer_kick(p, convention), sys_dim, n_ptr, k) if on else np.eye(d)
        for k, (p, on) in enumerate(zip(projectors, active))
    ]
    terms: dict[tuple, np.ndarray] = {}

    def add(key, vec):
        if key in terms:
            terms[key] = terms[key] + vec
        else:
            terms[key] = vec

    for e0, p0 in spectrum:
        v0 = np.exp(-1j * e0 * t) * (p0 @ state0)
        if np.linalg.norm(v0) < 1e-15:
            continue
        for e1, p1 in spectrum:
            if n_clocks == 1:
                v1 = p1 @ kicks[0] @ v0
                add((_r(e1 - e0), 0.0, "all"), v1)
                continue
            for first, second, region in ((0, 1, "a_first"), (1, 0, "b_first")):
                v1 = p1 @ kicks[first] @ v0
                if np.linalg.norm(v1) < 1e-15:
                    continue
                for e2, p2 in spectrum:
                    v2 = p2 @ kicks[second] @ v1
                    gain_first, gain_second = _r(e1 - e0), _r(e2 - e1)
                    # phase exp(-i(gain_first * t_first + gain_second * t_second))
                    if region == "a_first":
                        key = (gain_first, gain_second, region)
                    else:
                        key = (gain_second, gain_first, region)
                    add(key, v2)
    out = tuple(Term(v, a, b, reg) for (a, b, reg), v in sorted(terms.items(), key=lambda kv: (REGIONS.index(kv[0][2]), kv[0][0], kv[0][1])) if np.linalg.norm(v) > 1e-14)
    return BranchExpansion(sys_dims + (2,) * n_ptr, clocks_t, out, t, dict(n_pointers=n_ptr, convention=convention))


def _r(x: float) -> float:
    return float(np.round(x, 12)) + 0.0


def _check_completed(clocks_t, active=(True, True)):
    if isinstance(clocks_t, WavePacket):
        low = clocks_t.x0 - _SUPPORT_SIGMAS * clocks_t.width
        if low < 0:
            raise ValueError("interaction not completed: clock packet still overlaps the coupling")
        return
    wa, wb = clocks_t.marginal_widths()
    lows = [c - _SUPPORT_SIGMAS * w for c, w, on in zip(clocks_t.center, (wa, wb), active) if on]
    if lows and min(lows) < 0:
        raise ValueError("interaction not completed: a clock packet still overlaps the coupling")


# ---------------------------------------------------------------------------
# named scenarios


def theta_projector(theta: float) -> np.ndarray:
    v = np.array([np.cos(theta), np.sin(theta)])
    return np.outer(v, v).astype(complex)


def free_propagate(b: BranchExpansion, t: float) -> BranchExpansion:
    """Advance a completed expansion by ``t`` of free evolution.

    Clock positions shift by ``t``; each term picks up the dynamical phase of
    its system energy and the relative phase exp(-i(a+b) t) of its kicks is
    already carried by the position-dependent phase field.
    """
    h = b.meta.get("h_sys")
    if h is None:
        raise ValueError("expansion does not carry its system Hamiltonian")
    n_ptr = b.meta["n_pointers"]
    u = np.kron(_expm_h(h, t), np.eye(2**n_ptr))
    terms = tuple(replace(term, vector=u @ term.vector) for term in b.terms)
    return replace(b, clocks=b.clocks.propagated(t), terms=terms, time=b.time + t)


def _expm_h(h: np.ndarray, t: float) -> np.ndarray:
    w, v = np.linalg.eigh(h)
    return (v * np.exp(-1j * w * t)) @ v.conj().T


def single_spin_theta_final(theta: float, omega: float, packet: WavePacket, t: float, psi0=None, convention: str = "physical") -> BranchExpansion:
    """One spin with H = ω σz, one pointer measuring |θ><θ|, one clock."""
    h = omega * np.diag([1.0, -1.0]).astype(complex)
    psi0 = np.array([0, 1], dtype=complex) if psi0 is None else np.asarray(psi0, dtype=complex)
    b = measurement_expansion(h, psi0, [theta_projector(theta)], packet, t, (2,), convention)
    b.meta.update(h_sys=h, theta=theta, omega=omega)
    return b


def double_pointer_final(theta: float, omega: float, clocks: JointGaussian, t: float, psi0=None, convention: str = "physical", active=(True, True)) -> BranchExpansion:
    """One spin measured along θ by an A-pointer and a B-pointer, each on its own clock."""
    h = omega * np.diag([1.0, -1.0]).astype(complex)
    psi0 = np.array([0, 1], dtype=complex) if psi0 is None else np.asarray(psi0, dtype=complex)
    p = theta_projector(theta)
    b = measurement_expansion(h, psi0, [p, p], clocks, t, (2,), convention, active)
    b.meta.update(h_sys=h, theta=theta, omega=omega)
    return b


def chain3_final(energy_scale: float, clocks: JointGaussian, t: float, convention: str = "physical", active=(True, True), psi0=None) -> BranchExpansion:
    """Three-spin chain in phi_m1, Alice's pointer on spin 1, Bob's on spin 3."""
    from .spin_chain import ChainSpec, chain_hamiltonian, named_eigenstate

    h = chain_hamiltonian(ChainSpec(3, energy_scale)).matrix
    psi0 = named_eigenstate("phi_m1").amplitudes if psi0 is None else np.asarray(psi0, dtype=complex)
    up = np.diag([1.0, 0.0]).astype(complex)
    pa = np.kron(up, np.eye(4))
    pb = np.kron(np.eye(4), up)
    b = measurement_expansion(h, psi0, [pa, pb], clocks, t, (2, 2, 2), convention, active)
    b.meta.update(h_sys=h, energy_scale=energy_scale)
    return b


def sequential_chain3_final(energy_scale: float, clocks: JointGaussian, t: float, convention: str = "physical") -> BranchExpansion:
    """Alice's clock passes first; raises if the interaction windows overlap."""
    mu, sig = clocks.propagated(t).diff_stats
    if mu < _SUPPORT_SIGMAS * sig:
        raise ValueError("interaction windows overlap: Alice's clock must lead by many widths")
    return chain3_final(energy_scale, clocks, t, convention)


def alice_only_intermediate(energy_scale: float, clocks: JointGaussian, t: float, convention: str = "physical") -> BranchExpansion:
    """State once Alice's clock has passed but before Bob's coupling acts."""
    return chain3_final(energy_scale, clocks, t, convention, active=(True, False))


# ---------------------------------------------------------------------------
# interference parameter and pointer statistics


def F_parameter(clocks: JointGaussian, omega: float) -> float:
    """∫∫ (exp(2iω|x-y|) + c.c.) |Φ|² for a two-clock Gaussian, in closed form."""
    if not isinstance(clocks, JointGaussian):
        raise TypeError("F_parameter needs a two-clock Gaussian state")
    mu, sig = clocks.diff_stats
    # cos is even, so |x - y| may be replaced by x - y
    return float(2 * np.cos(2 * omega * mu) * np.exp(-2 * (omega * sig) ** 2))


def F_quadrature(clocks: JointGaussian, omega: float) -> float:
    """The same integral by 2-D adaptive quadrature over (x+y, x-y)."""
    mu_s, sig_s = clocks.sum_stats
    mu_d, sig_d = clocks.diff_stats

    def density(d, s):
        return np.exp(-((s - mu_s) ** 2) / (2 * sig_s**2) - (d - mu_d) ** 2 / (2 * sig_d**2)) / (2 * np.pi * sig_s * sig_d)

    def f(d, s):
        return 2 * np.cos(2 * omega * abs(d)) * density(d, s)

    total = 0.0
    lo_s, hi_s = mu_s - 12 * sig_s, mu_s + 12 * sig_s
    edges = sorted({mu_d - 12 * sig_d, min(max(0.0, mu_d - 12 * sig_d), mu_d + 12 * sig_d), mu_d + 12 * sig_d})
    for lo_d, hi_d in zip(edges[:-1], edges[1:]):
        if hi_d > lo_d:
            val, _ = integrate.dblquad(f, lo_s, hi_s, lo_d, hi_d, epsabs=1e-13, epsrel=1e-12)
            total += val
    return float(total)


def pointer_outcome_probs(theta: float, F: float) -> dict[tuple[int, int], float]:
    """Closed-form pointer statistics for a spin initially down (first index: A)."""
    if not -2 - 1e-12 <= F <= 2 + 1e-12:
        raise ValueError("F must lie in [-2, 2]")
    c2, s2 = np.cos(theta) ** 2, np.sin(theta) ** 2
    k = 1 - 2 * s2 * c2
    return {
        (0, 0): float(c2 * k + s2 * c2**2 * F),
        (1, 1): float(s2 * k + s2**2 * c2 * F),
        (0, 1): float(2 * s2 * c2**2 - s2 * c2**2 * F),
        (1, 0): float(2 * s2**2 * c2 - s2**2 * c2 * F),
    }
