"""Autonomous clock-pointer-system simulation on clock lattices.

Each clock obeys ``H = p``, so every clock sample travels along a straight
characteristic at unit speed.  With ``dt = dx`` a sample moves exactly one
site per step, and along its path the discrete factor (system ⊗ pointers)
solves ``i d/ds ψ = (H_sys + Σ_k g(x_k(s)) P_k ⊗ σx_k) ψ``.  The engine stores
the state in the co-moving, interaction-picture frame: sites far from every
coupling are left untouched and only the few sites crossing a coupling get
a small matrix per step.  The per-site matrix is either the exact
time-ordered propagator over the crossed cell (``method="exact"``) or the
symmetric splitting ``exp(-i h V(x+h)/2) exp(-i h V(x)/2)`` composed over
``substeps`` sub-intervals (``method="strang"``, with the free system phase
folded in exactly through the interaction picture).

Lattice amplitudes are ``ψ(x_j) sqrt(dx)`` per clock axis, so the stored
arrays have unit 2-norm.  Site ``j`` sits at ``x_j = (j - j0 + 1/2) dx``;
point couplings at a site boundary are crossed half-way through a step.
"""
from __future__ import annotations

import csv
import io
import json
from dataclasses import asdict, dataclass, field, replace
from typing import Sequence

import numpy as np

from .qla import SIGMA_X, SIGMA_Z, DensityOperator, HermitianOperator
from .wavepacket import JointGaussian, WavePacket, theta_projector

SYSTEMS = ("single-spin-energy-basis", "single-spin-theta", "single-spin-two-pointers", "chain3")
PROFILES = ("point", "gaussian", "tophat")
METHODS = ("exact", "strang")
_PULSE_AREA = np.pi / 2
_TAIL_SIGMAS = 8.0


@dataclass(frozen=True)
class ClockLattice:
    n: int
    dx: float
    j0: int = 0

    def __post_init__(self):
        if self.n < 16:
            raise ValueError("a clock lattice needs at least 16 sites")
        if not self.dx > 0:
            raise ValueError("dx must be positive")

    @property
    def positions(self) -> np.ndarray:
        return (np.arange(self.n) - self.j0 + 0.5) * self.dx

    @property
    def length(self) -> float:
        return self.n * self.dx

    @property
    def momenta(self) -> np.ndarray:
        """Lattice momenta in FFT order, signed first zone."""
        return 2 * np.pi * np.fft.fftfreq(self.n, d=self.dx)

    @property
    def dp(self) -> float:
        return 2 * np.pi / self.length

    def check_packet(self, center: float, width: float):
        if 4 * width > self.length:
            raise ValueError("packet wider than the lattice allows")
        x = self.positions
        if center - _TAIL_SIGMAS * width < x[0] or center + _TAIL_SIGMAS * width > x[-1]:
            raise ValueError("packet does not fit on the lattice")


@dataclass(frozen=True)
class CouplingProfile:
    """Coupling profile g with ∫g = π/2; ``point`` is the δ-function limit."""

    shape: str = "point"
    half_width: float = 0.0

    def __post_init__(self):
        if self.shape not in PROFILES:
            raise ValueError(f"profile shape must be one of {PROFILES}")
        if self.shape != "point" and not self.half_width > 0:
            raise ValueError("smooth profiles need a positive half-width")

    @property
    def is_point(self) -> bool:
        return self.shape == "point"

    @property
    def radius(self) -> float:
        """Distance beyond which g is treated as zero."""
        if self.shape == "gaussian":
            return 4 * self.half_width  # 8 standard deviations
        return self.half_width

    def __call__(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if self.shape == "gaussian":
            s = self.half_width / 2
            g = np.exp(-(x**2) / (2 * s**2)) / (np.sqrt(2 * np.pi) * s)
            return _PULSE_AREA * np.where(np.abs(x) <= self.radius, g, 0.0)
        if self.shape == "tophat":
            return _PULSE_AREA * np.where(np.abs(x) < self.half_width, 1 / (2 * self.half_width), 0.0)
        raise ValueError("the point profile has no pointwise values")

    def lattice_area(self, lattice: ClockLattice) -> float:
        """Σ g(x_j) dx over the lattice (should be π/2)."""
        if self.is_point:
            return _PULSE_AREA
        return float(np.sum(self(lattice.positions)) * lattice.dx)

    @classmethod
    def default(cls, dx: float) -> "CouplingProfile":
        return cls("gaussian", 4 * dx)


@dataclass(frozen=True)
class DiscreteModel:
    """System ⊗ pointers: Hamiltonian, initial vector and per-pointer generators."""

    sys_dims: tuple[int, ...]
    n_pointers: int
    h_sys: np.ndarray
    projectors: tuple[np.ndarray, ...]
    psi0_sys: np.ndarray

    @property
    def sys_dim(self) -> int:
        return int(np.prod(self.sys_dims))

    @property
    def dim(self) -> int:
        return self.sys_dim * 2**self.n_pointers

    @property
    def dims(self) -> tuple[int, ...]:
        return self.sys_dims + (2,) * self.n_pointers

    @property
    def h(self) -> np.ndarray:
        return np.kron(self.h_sys, np.eye(2**self.n_pointers))

    def generator(self, k: int) -> np.ndarray:
        """P_k ⊗ σx on pointer k (identity elsewhere)."""
        left = np.eye(2**k)
        right = np.eye(2 ** (self.n_pointers - k - 1))
        return np.kron(self.projectors[k], np.kron(left, np.kron(SIGMA_X, right)))

    @property
    def psi0(self) -> np.ndarray:
        ptr = np.zeros(2**self.n_pointers)
        ptr[0] = 1
        return np.kron(self.psi0_sys, ptr)


@dataclass(frozen=True)
class Coupling:
    axis: int
    generator: np.ndarray
    profile: CouplingProfile
    position: float = 0.0


@dataclass(frozen=True)
class AutonomousScenario:
    system: str = "single-spin-theta"
    omega: float = 1.0
    energy_scale: float = 2.0
    theta: float = np.pi / 4
    spin_state: tuple | None = None
    clocks: tuple = (WavePacket(-16.0, 0.0, 2.0),)
    n: int = 512
    profile: CouplingProfile = CouplingProfile()
    method: str = "exact"
    substeps: int = 1
    t_final: float | None = None
    active: tuple[bool, ...] | None = None
    n_checkpoints: int = 2

    def __post_init__(self):
        if self.system not in SYSTEMS:
            raise ValueError(f"system must be one of {SYSTEMS}")
        if self.method not in METHODS:
            raise ValueError(f"method must be one of {METHODS}")
        if self.method == "strang" and self.profile.is_point:
            raise ValueError("the splitting method needs a smooth coupling profile")
        if self.substeps < 1:
            raise ValueError("substeps must be >= 1")
        need = 1 if self.system in ("single-spin-energy-basis", "single-spin-theta") else 2
        if isinstance(self.clocks, JointGaussian):
            if need != 2:
                raise ValueError("a joint clock state needs a two-clock system")
        elif len(self.clocks) != need:
            raise ValueError(f"system {self.system} needs {need} clock packet(s)")

    @property
    def n_clocks(self) -> int:
        return 1 if self.system in ("single-spin-energy-basis", "single-spin-theta") else 2

    @property
    def dt(self) -> float:
        return self.lattices()[0].dx / self.substeps

    def model(self) -> DiscreteModel:
        return discrete_model(self)

    def clock_stats(self) -> list[tuple[float, float]]:
        """(initial center, marginal width) per clock."""
        if isinstance(self.clocks, JointGaussian):
            w = self.clocks.marginal_widths()
            return [(self.clocks.center[0], w[0]), (self.clocks.center[1], w[1])]
        return [(c.x0, c.width) for c in self.clocks]

    def travel_time(self) -> float:
        r = 0.0 if self.profile.is_point else self.profile.radius
        return max(-c + (_TAIL_SIGMAS + 1) * w for c, w in self.clock_stats()) + r

    def lattices(self) -> tuple[ClockLattice, ...]:
        return auto_lattices(self.clock_stats(), self.travel_time(), self.n, self.profile)

    def to_dict(self) -> dict:
        d = dict(
            system=self.system, omega=self.omega, energy_scale=self.energy_scale, theta=self.theta,
            spin_state=None if self.spin_state is None else [[complex(z).real, complex(z).imag] for z in self.spin_state],
            n=self.n, profile=asdict(self.profile), method=self.method, substeps=self.substeps,
            t_final=self.t_final, active=None if self.active is None else list(self.active),
            n_checkpoints=self.n_checkpoints,
        )
        if isinstance(self.clocks, JointGaussian):
            c = self.clocks
            d["clocks"] = dict(center=list(c.center), delta_plus=c.delta_plus, delta_minus=c.delta_minus, momenta=list(c.momenta))
        else:
            d["clocks"] = [dict(x0=c.x0, p0=c.p0, width=c.width) for c in self.clocks]
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    @classmethod
    def from_dict(cls, d: dict) -> "AutonomousScenario":
        d = dict(d)
        clocks = d.pop("clocks", None)
        if isinstance(clocks, dict):
            d["clocks"] = JointGaussian(tuple(clocks["center"]), clocks["delta_plus"], clocks["delta_minus"], tuple(clocks.get("momenta", (0.0, 0.0))))
        elif clocks is not None:
            d["clocks"] = tuple(WavePacket(c["x0"], c.get("p0", 0.0), c["width"]) for c in clocks)
        if d.get("profile") is not None:
            d["profile"] = CouplingProfile(**d["profile"])
        if d.get("spin_state") is not None:
            d["spin_state"] = tuple(complex(*z) if isinstance(z, (list, tuple)) else complex(z) for z in d["spin_state"])
        if d.get("active") is not None:
            d["active"] = tuple(bool(a) for a in d["active"])
        return cls(**d)

    @classmethod
    def from_json(cls, text: str) -> "AutonomousScenario":
        return cls.from_dict(json.loads(text))


def auto_lattices(stats, travel: float, n: int, profile: CouplingProfile) -> tuple[ClockLattice, ...]:
    """Equal-spacing lattices, one per clock, covering the whole run."""
    r = 0.0 if profile.is_point else profile.radius
    bounds = []
    for c, w in stats:
        lo = min(c - _TAIL_SIGMAS * w, -r) - w
        hi = max(c + travel + _TAIL_SIGMAS * w, r) + w
        bounds.append((lo, hi))
    dx = max(hi - lo for lo, hi in bounds) / (n - 4)
    return tuple(ClockLattice(n, dx, int(np.ceil(-lo / dx)) + 1) for lo, _ in bounds)


def discrete_model(s: AutonomousScenario) -> DiscreteModel:
    down = np.array([0, 1], dtype=complex)
    if s.system == "chain3":
        from .spin_chain import ChainSpec, chain_hamiltonian, named_eigenstate

        h = chain_hamiltonian(ChainSpec(3, s.energy_scale)).matrix
        up = np.diag([1.0, 0.0]).astype(complex)
        projs = (np.kron(up, np.eye(4)), np.kron(np.eye(4), up))
        psi = named_eigenstate("phi_m1").amplitudes if s.spin_state is None else np.asarray(s.spin_state, dtype=complex)
        return DiscreteModel((2, 2, 2), 2, h, projs, psi)
    h = s.omega * SIGMA_Z.astype(complex)
    if s.system == "single-spin-energy-basis":
        projs = (theta_projector(0.0),)
        default = np.array([1, 1], dtype=complex) / np.sqrt(2)
    elif s.system == "single-spin-theta":
        projs = (theta_projector(s.theta),)
        default = down
    else:
        projs = (theta_projector(s.theta), theta_projector(s.theta))
        default = down
    psi = default if s.spin_state is None else np.asarray(s.spin_state, dtype=complex)
    return DiscreteModel((2,), len(projs), h, projs, psi)


def build_couplings(s: AutonomousScenario, model: DiscreteModel | None = None) -> list[Coupling]:
    model = model or s.model()
    active = s.active or (True,) * model.n_pointers
    return [Coupling(k, model.generator(k), s.profile) for k in range(model.n_pointers) if active[k]]


@dataclass(frozen=True)
class StructuredHamiltonian:
    """H = Σ_k p_k + H_free ⊗ 1 + Σ_k g(q_k) G_k, never formed densely."""

    lattices: tuple[ClockLattice, ...]
    h_free: HermitianOperator
    couplings: tuple[Coupling, ...]

    def translation_spectrum(self, axis: int) -> np.ndarray:
        return self.lattices[axis].momenta

    def interaction_diagonal(self, axis: int) -> np.ndarray:
        """g at the lattice sites of one clock axis."""
        prof = [c.profile for c in self.couplings if c.axis == axis]
        if not prof:
            return np.zeros(self.lattices[axis].n)
        if prof[0].is_point:
            raise ValueError("point couplings have no site values")
        return prof[0](self.lattices[axis].positions)

    def commutes(self, a: np.ndarray, b: np.ndarray, tol: float = 1e-12) -> bool:
        return bool(np.max(np.abs(a @ b - b @ a)) <= tol)


def build_hamiltonian(s: AutonomousScenario) -> StructuredHamiltonian:
    model = s.model()
    lat = s.lattices()
    for (c, w), l in zip(s.clock_stats(), lat):
        l.check_packet(c, w)
    return StructuredHamiltonian(lat, HermitianOperator(model.dims, model.h), tuple(build_couplings(s, model)))


# ---------------------------------------------------------------------------
# per-site propagators


def _expm_herm_batch(h: np.ndarray, t: float) -> np.ndarray:
    """exp(-i h t) for a batch of Hermitian matrices (..., D, D)."""
    w, v = np.linalg.eigh(h)
    return (v * np.exp(-1j * w * t)[..., None, :]) @ np.swapaxes(v.conj(), -1, -2)


def _cell_starts(lattice: ClockLattice, cells: np.ndarray) -> np.ndarray:
    return lattice.positions[cells]


def _special_cells(lattice: ClockLattice, couplings: Sequence[Coupling]) -> np.ndarray:
    x = lattice.positions
    mask = np.zeros(lattice.n, dtype=bool)
    for c in couplings:
        if c.profile.is_point:
            mask |= (x <= c.position) & (c.position < x + lattice.dx)
        else:
            r = c.profile.radius
            mask |= (x + lattice.dx > c.position - r) & (x < c.position + r)
    return np.flatnonzero(mask)


def cell_propagators(
    h: np.ndarray,
    couplings: Sequence[Coupling],
    starts: np.ndarray,
    dx: float,
    method: str = "exact",
    substeps: int = 1,
    exact_substeps: int = 16,
) -> np.ndarray:
    """Propagators over one cell for a batch of sample start points.

    ``starts`` has shape (B, n_axes): the positions of the sample on each
    clock axis at the beginning of the step.  Returns (B, D, D).
    """
    starts = np.atleast_2d(starts)
    nb, d = starts.shape[0], h.shape[0]
    out = np.broadcast_to(np.eye(d, dtype=complex), (nb, d, d)).copy()
    points = [c for c in couplings if c.profile.is_point]
    smooth = [c for c in couplings if not c.profile.is_point]
    kicks = [_expm_herm_batch(c.generator, _PULSE_AREA) for c in points]

    def v_at(s):
        # (B, D, D) interaction at fractional time s of the step
        v = np.zeros((nb, d, d), dtype=complex)
        for c in smooth:
            g = c.profile(starts[:, c.axis] + s * dx - c.position)
            v += g[:, None, None] * c.generator
        return v

    if points and method == "strang":
        raise ValueError("the splitting method needs smooth profiles")
    # event fractions for point couplings, per batch element
    fr = np.full((nb, len(points)), np.inf)
    for k, c in enumerate(points):
        f = (c.position - starts[:, c.axis]) / dx
        fr[:, k] = np.where((f >= 0) & (f < 1), f, np.inf)
    if not smooth:
        # free evolution between kicks; group batch elements by event pattern
        keys = {}
        for b in range(nb):
            keys.setdefault(tuple(np.round(fr[b], 14)), []).append(b)
        for key, idx in keys.items():
            u = np.eye(d, dtype=complex)
            last = 0.0
            order = sorted((f, k) for k, f in enumerate(key) if np.isfinite(f))
            for f, k in order:
                u = kicks[k] @ _expm_herm_batch(h, (f - last) * dx) @ u
                last = f
            u = _expm_herm_batch(h, (1 - last) * dx) @ u
            out[idx] = u
        return out
    if points:
        raise NotImplementedError("mixing point and smooth couplings is not supported")
    if method == "strang":
        step = 1.0 / substeps
        for r in range(substeps):
            a = _expm_herm_batch(h + v_at(r * step), step * dx / 2)
            b_ = _expm_herm_batch(h + v_at((r + 1) * step), step * dx / 2)
            out = b_ @ a @ out
        return out
    # fourth-order Magnus with two Gauss points per substep
    m = exact_substeps
    step = 1.0 / m
    gl = np.array([0.5 - np.sqrt(3) / 6, 0.5 + np.sqrt(3) / 6])
    hh = step * dx
    for r in range(m):
        a1 = h + v_at((r + gl[0]) * step)
        a2 = h + v_at((r + gl[1]) * step)
        # Ω = -i hh (a1+a2)/2 - (√3/12) hh² [a2, a1] ; exponentiate as exp(-i K)
        k = hh * (a1 + a2) / 2 - 1j * (np.sqrt(3) / 12) * hh**2 * (a2 @ a1 - a1 @ a2)
        out = _expm_herm_batch(k, 1.0) @ out
    return out


# ---------------------------------------------------------------------------
# evolution


@dataclass(frozen=True)
class Checkpoint:
    t: float
    state: np.ndarray  # lab frame, shape (D, N) or (D, N, N)


@dataclass(frozen=True)
class SimulationResult:
    scenario: AutonomousScenario
    model: DiscreteModel
    lattices: tuple[ClockLattice, ...]
    couplings: tuple[Coupling, ...]
    checkpoints: tuple[Checkpoint, ...]
    meta: dict = field(default_factory=dict)

    @property
    def final(self) -> Checkpoint:
        return self.checkpoints[-1]

    @property
    def state(self) -> np.ndarray:
        return self.final.state

    @property
    def t(self) -> float:
        return self.final.t


def initial_state(s: AutonomousScenario, model: DiscreteModel, lattices) -> np.ndarray:
    if isinstance(s.clocks, JointGaussian):
        x, y = (l.positions for l in lattices)
        xx, yy = np.meshgrid(x, y, indexing="ij")
        clock = s.clocks(xx, yy) * np.sqrt(lattices[0].dx * lattices[1].dx)
    elif len(s.clocks) == 1:
        clock = s.clocks[0](lattices[0].positions) * np.sqrt(lattices[0].dx)
    else:
        a = s.clocks[0](lattices[0].positions) * np.sqrt(lattices[0].dx)
        b = s.clocks[1](lattices[1].positions) * np.sqrt(lattices[1].dx)
        clock = np.multiply.outer(a, b)
    clock = clock / np.linalg.norm(clock)
    return np.multiply.outer(model.psi0, clock)


def evolve(s: AutonomousScenario, state0: np.ndarray | None = None, checkpoint_times: Sequence[float] | None = None) -> SimulationResult:
    """Run the scenario; checkpoints are lab-frame snapshots."""
    model = s.model()
    ham = build_hamiltonian(s)
    lat = ham.lattices
    couplings = ham.couplings
    psi = initial_state(s, model, lat) if state0 is None else np.array(state0, dtype=complex)
    norm0 = np.linalg.norm(psi)
    if abs(norm0 - 1) > 1e-8:
        raise ValueError("initial state must be normalized")
    dx = lat[0].dx
    t_final = s.t_final if s.t_final is not None else s.travel_time()
    n_steps = int(np.ceil(t_final / dx - 1e-9))
    if checkpoint_times is None:
        k = max(s.n_checkpoints, 2)
        marks = sorted(set(int(round(v)) for v in np.linspace(0, n_steps, k)))
    else:
        marks = sorted(set(int(round(t / dx)) for t in checkpoint_times))
    engine = _Engine(model.h, lat, couplings, s.method, s.substeps)
    cps = []
    step = 0
    for m in marks:
        while step < m:
            engine.step(psi, step)
            step += 1
        cps.append(Checkpoint(step * dx, engine.to_lab(psi, step)))
    return SimulationResult(s, model, lat, tuple(couplings), tuple(cps), dict(n_steps=n_steps, dx=dx, dt=dx / s.substeps))


class _Engine:
    """Co-moving interaction-frame stepper (mutates the stored array in place)."""

    def __init__(self, h, lattices, couplings, method, substeps):
        self.h = h
        self.lat = lattices
        self.dx = lattices[0].dx
        self.n = lattices[0].n
        self.w, self.v = np.linalg.eigh(h)
        self.n_axes = len(lattices)
        self.axis_cells = []
        self.axis_props = []
        for a, l in enumerate(lattices):
            cs = [c for c in couplings if c.axis == a]
            cells = _special_cells(l, cs) if cs else np.array([], dtype=int)
            starts = np.zeros((len(cells), self.n_axes))
            starts[:, a] = l.positions[cells]
            for b in range(self.n_axes):
                if b != a:
                    starts[:, b] = np.nan
            props = cell_propagators(h, cs, np.nan_to_num(starts, nan=0.0), self.dx, method, substeps) if len(cells) else np.zeros((0,) + h.shape)
            self.axis_cells.append(cells)
            self.axis_props.append(props)
        self.joint = None
        if self.n_axes == 2 and len(self.axis_cells[0]) and len(self.axis_cells[1]):
            ca, cb = self.axis_cells
            ja, jb = np.meshgrid(ca, cb, indexing="ij")
            starts = np.stack([lattices[0].positions[ja.ravel()], lattices[1].positions[jb.ravel()]], axis=1)
            props = cell_propagators(h, couplings, starts, self.dx, method, substeps)
            self.joint = props.reshape(len(ca), len(cb), *h.shape)

    def _u(self, t):
        return (self.v * np.exp(-1j * self.w * t)) @ self.v.conj().T

    def _frame(self, props, step):
        # interaction-picture matrix for a step starting at t = step*dx
        e0 = self._u(step * self.dx)
        e1 = self._u(-(step + 1) * self.dx)
        return e1 @ props @ e0

    def step(self, psi, step):
        n = self.n
        if self.n_axes == 1:
            cells = self.axis_cells[0]
            if len(cells):
                s = (cells - step) % n
                m = self._frame(self.axis_props[0], step)
                psi[:, s] = np.einsum("jab,bj->aj", m, psi[:, s])
            return
        ca, cb = self.axis_cells
        sa, sb = (ca - step) % n, (cb - step) % n
        block = psi[:, sa][:, :, sb].copy() if self.joint is not None else None
        if len(ca):
            m = self._frame(self.axis_props[0], step)
            psi[:, sa, :] = np.einsum("jab,bjk->ajk", m, psi[:, sa, :])
        if len(cb):
            m = self._frame(self.axis_props[1], step)
            psi[:, :, sb] = np.einsum("kab,bjk->ajk", m, psi[:, :, sb])
        if self.joint is not None:
            m = self._frame(self.joint, step)
            new = np.einsum("jkab,bjk->ajk", m, block)
            psi[np.ix_(np.arange(psi.shape[0]), sa, sb)] = new

    def to_lab(self, psi, step):
        out = psi
        for ax in range(self.n_axes):
            out = np.roll(out, step, axis=1 + ax)
        u = self._u(step * self.dx)
        return np.tensordot(u, out, axes=(1, 0))


# ---------------------------------------------------------------------------
# reference model and observables


def vonneumann_reference(psi0: np.ndarray, projector: np.ndarray, pulse=None, t_span: tuple[float, float] = (-1.0, 1.0)) -> np.ndarray:
    """Impulsive measurement: exp(-i A P ⊗ σx) ψ0 ⊗ |0>, A = ∫ g(t) dt.

    The free Hamiltonian is switched off during the pulse, so only the
    pulse area matters.  ``pulse`` (a callable) is integrated numerically
    over ``t_span``; the default is an ideal area-π/2 pulse.
    """
    from scipy import integrate

    area = _PULSE_AREA if pulse is None else integrate.quad(pulse, *t_span, limit=200)[0]
    gen = np.kron(projector, SIGMA_X)
    u = _expm_herm_batch(gen, area)
    return u @ np.kron(np.asarray(psi0, dtype=complex), np.array([1, 0], dtype=complex))


def discrete_density(state: np.ndarray) -> np.ndarray:
    a = state.reshape(state.shape[0], -1)
    return a @ a.conj().T


@dataclass(frozen=True)
class PointerOutcome:
    outcome: tuple[int, ...]
    probability: float
    state: np.ndarray | None  # sub-normalized system ⊗ clocks array, None when empty

    @property
    def empty(self) -> bool:
        return self.state is None


def measure_pointers(state: np.ndarray, model: DiscreteModel, empty_tol: float = 1e-15) -> list[PointerOutcome]:
    """Born statistics of all pointers in the computational basis."""
    npt = model.n_pointers
    a = state.reshape((model.sys_dim, 2**npt) + state.shape[1:])
    out = []
    for k in range(2**npt):
        block = a[:, k]
        p = float(np.vdot(block, block).real)
        outcome = tuple(int(c) for c in np.binary_repr(k, npt))
        out.append(PointerOutcome(outcome, p, block.copy() if p > empty_tol else None))
    return out


def pointer_probabilities(state: np.ndarray, model: DiscreteModel) -> dict[tuple[int, ...], float]:
    return {o.outcome: o.probability for o in measure_pointers(state, model)}


def conditional_system_density(outcome: PointerOutcome) -> DensityOperator:
    """System state for a pointer outcome with the clocks traced out (sub-normalized)."""
    if outcome.empty:
        raise ValueError("empty branch")
    a = outcome.state.reshape(outcome.state.shape[0], -1)
    return DensityOperator((a.shape[0],), a @ a.conj().T)


def momentum_distribution(state: np.ndarray, lattice: ClockLattice, axis: int = 0) -> tuple[np.ndarray, np.ndarray]:
    """(sorted momenta, probabilities) for one clock, marginal over all else."""
    phi = np.fft.fft(state, axis=1 + axis, norm="ortho")
    prob = np.abs(phi) ** 2
    other = tuple(i for i in range(prob.ndim) if i != 1 + axis)
    p = prob.sum(axis=other)
    order = np.argsort(lattice.momenta)
    return lattice.momenta[order], p[order]


def momentum_mass(state: np.ndarray, lattice: ClockLattice, center: float, half_width: float, axis: int = 0) -> float:
    p, w = momentum_distribution(state, lattice, axis)
    return float(w[np.abs(p - center) <= half_width].sum())


def mean_momentum(state: np.ndarray, lattice: ClockLattice, axis: int = 0) -> float:
    """<p> of one clock; kicks must stay well inside ±π/dx or they alias."""
    p, w = momentum_distribution(state, lattice, axis)
    return float(np.dot(p, w))


@dataclass(frozen=True)
class EnergyRecord:
    t: float
    h_total: float
    h_system: float
    p_clocks: tuple[float, ...]
    interaction: float
    pointer_energy: float
    norm: float


def energy_record(cp: Checkpoint, res: SimulationResult) -> EnergyRecord:
    st = cp.state
    h = res.model.h
    a = st.reshape(st.shape[0], -1)
    hs = float(np.real(np.vdot(a, h @ a)))
    ps = tuple(mean_momentum(st, l, k) for k, l in enumerate(res.lattices))
    inter = 0.0
    for c in res.couplings:
        if c.profile.is_point:
            continue  # samples never sit on the δ at checkpoint times
        g = c.profile(res.lattices[c.axis].positions - c.position)
        gv = np.tensordot(c.generator, st, axes=(1, 0))
        shape = [1] * st.ndim
        shape[1 + c.axis] = -1
        inter += float(np.real(np.vdot(st, gv * g.reshape(shape))))
    norm = float(np.linalg.norm(st))
    # the pointers carry no Hamiltonian of their own
    return EnergyRecord(cp.t, hs + sum(ps) + inter, hs, ps, inter, 0.0, norm)


def energy_bookkeeping(res: SimulationResult) -> list[EnergyRecord]:
    return [energy_record(cp, res) for cp in res.checkpoints]


def trajectory_csv(records: Sequence[EnergyRecord]) -> str:
    from .io import fmt

    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["t", "H_total", "H_chain", "p_A", "p_B", "norm"])
    for r in records:
        pb = r.p_clocks[1] if len(r.p_clocks) > 1 else 0.0
        w.writerow([fmt(r.t), fmt(r.h_total), fmt(r.h_system), fmt(r.p_clocks[0]), fmt(pb), fmt(r.norm)])
    return buf.getvalue()


# ---------------------------------------------------------------------------
# analytic comparison


def oracle_expansion(s: AutonomousScenario, t: float, convention: str = "physical"):
    """Closed-form branch expansion for the δ-coupling limit of ``s``."""
    from .wavepacket import measurement_expansion

    model = s.model()
    clocks = s.clocks if isinstance(s.clocks, JointGaussian) else (s.clocks[0] if len(s.clocks) == 1 else JointGaussian.independent(s.clocks[0].x0, s.clocks[1].x0, s.clocks[0].width, (s.clocks[0].p0, s.clocks[1].p0)))
    if not isinstance(s.clocks, JointGaussian) and len(s.clocks) == 2 and s.clocks[0].width != s.clocks[1].width:
        raise ValueError("oracle needs equal clock widths")
    b = measurement_expansion(model.h_sys, model.psi0_sys, model.projectors, clocks, t, model.sys_dims, convention, s.active)
    b.meta.update(h_sys=model.h_sys)
    return b


def oracle_state(s: AutonomousScenario, res: SimulationResult) -> np.ndarray:
    b = oracle_expansion(s, res.t)
    grids = [l.positions for l in res.lattices]
    amp = b.sample(grids)
    for l in res.lattices:
        amp = amp * np.sqrt(l.dx)
    return amp


def fidelity_to_oracle(res: SimulationResult) -> float:
    o = oracle_state(res.scenario, res)
    st = res.state
    return float(abs(np.vdot(o, st)) ** 2 / (np.vdot(o, o).real * np.vdot(st, st).real))


# ---------------------------------------------------------------------------
# strongly position-correlated clock pairs


@dataclass(frozen=True)
class SliceResult:
    density: np.ndarray  # discrete (system ⊗ pointers) density, clocks traced
    nodes: np.ndarray
    weights: np.ndarray
    model: DiscreteModel

    def pointer_probabilities(self) -> dict[tuple[int, ...], float]:
        npt = self.model.n_pointers
        diag = np.real(np.diag(self.density)).reshape(self.model.sys_dim, 2**npt).sum(axis=0)
        return {tuple(int(c) for c in np.binary_repr(k, npt)): float(diag[k]) for k in range(2**npt)}


def evolve_relative_slices(s: AutonomousScenario, n_nodes: int = 48, n: int | None = None) -> SliceResult:
    """Two clocks with a joint Gaussian, solved slice by slice in d = x - y.

    Both clocks translate together, so d is conserved and every slice is a
    single-clock problem along x with A's coupling at x = 0 and B's at
    x = d.  The clock-traced density is the Gauss-Hermite weighted sum of
    slice densities (different d slices are orthogonal).  Needed when the
    relative width is far below what a dense two-clock grid resolves.
    """
    if not isinstance(s.clocks, JointGaussian):
        raise TypeError("slice evolution needs a JointGaussian clock state")
    if not s.profile.is_point:
        raise ValueError("slice evolution supports point couplings only")
    c = s.clocks
    model = s.model()
    mu_d, sig_d = c.diff_stats
    z, w = np.polynomial.hermite_e.hermegauss(n_nodes)
    nodes = mu_d + sig_d * z
    weights = w / w.sum()
    rho = np.zeros((model.dim, model.dim), dtype=complex)
    sig_x = c.delta_plus / np.sqrt(2)
    active = s.active or (True,) * model.n_pointers
    n = n or s.n
    for d, wt in zip(nodes, weights):
        center = (c.center[0] + c.center[1] + d) / 2
        packet = WavePacket(center, c.momenta[0] + c.momenta[1], sig_x)
        cps = [Coupling(0, model.generator(0), s.profile, 0.0), Coupling(0, model.generator(1), s.profile, float(d))]
        cps = [cp for cp, on in zip(cps, active) if on]
        travel = max(-center, -center + d) + (_TAIL_SIGMAS + 1) * sig_x
        lo = min(center - _TAIL_SIGMAS * sig_x, min(0.0, d)) - sig_x
        hi = max(center + travel + _TAIL_SIGMAS * sig_x, max(0.0, d)) + sig_x
        dx = (hi - lo) / (n - 4)
        lat = ClockLattice(n, dx, int(np.ceil(-lo / dx)) + 1)
        psi = np.multiply.outer(model.psi0, packet(lat.positions) * np.sqrt(dx))
        psi /= np.linalg.norm(psi)
        eng = _Engine(model.h, (lat,), cps, "exact", 1)
        steps = int(np.ceil(travel / dx))
        for k in range(steps):
            eng.step(psi, k)
        final = eng.to_lab(psi, steps)
        rho += wt * discrete_density(final)
    return SliceResult(rho, nodes, weights, model)
