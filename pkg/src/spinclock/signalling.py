"""Distinguishability of Bob's apparatus (pointer ⊗ clock) under Alice's choice."""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from .clock_sim import AutonomousScenario, evolve, measure_pointers
from .qla import DensityOperator, fidelity, trace_distance
from .wavepacket import WavePacket


@dataclass(frozen=True)
class SignallingPoint:
    omega: float
    delta: float
    trace_distance: float
    fidelity: float
    meta: dict = field(default_factory=dict)

    @property
    def omega_delta(self) -> float:
        return self.omega * self.delta

    def __post_init__(self):
        if not -1e-9 <= self.trace_distance <= 1 + 1e-9:
            raise ValueError("trace distance outside [0, 1]")


def chain3_scenario(omega_delta: float, omega: float = 1.0, offset: float = 0.0, n: int = 256, lead: float = 9.0) -> AutonomousScenario:
    """Chain with E0 = 2ω; Bob's clock trails Alice's by ``offset``."""
    delta = omega_delta / omega
    x0 = -lead * delta
    clocks = (WavePacket(x0, 0.0, delta), WavePacket(x0 - offset, 0.0, delta))
    return AutonomousScenario("chain3", energy_scale=2 * omega, clocks=clocks, n=n)


def _bob_density(state: np.ndarray, n_pointers: int) -> np.ndarray:
    # state: (sys ⊗ ptrA ⊗ ptrB, NA, NB) -> rho over (ptrB, clock B)
    d, na, nb = state.shape
    a = state.reshape(d // 4, 2, 2, na, nb)
    m = np.transpose(a, (2, 4, 0, 1, 3)).reshape(2 * nb, -1)
    return m @ m.conj().T


def bob_marginal(s: AutonomousScenario, alice_measures: bool, bob_measures: bool = True) -> DensityOperator:
    """Bob's pointer ⊗ clock state after the run, everything else traced out."""
    if s.system != "chain3":
        raise ValueError("bob_marginal needs the chain3 scenario")
    res = evolve(replace(s, active=(alice_measures, bob_measures)))
    nb = res.lattices[1].n
    return DensityOperator((2, nb), _bob_density(res.state, 2))


def signalling_point(s: AutonomousScenario, alice_off: bool = False) -> SignallingPoint:
    with_a = bob_marginal(s, alice_measures=not alice_off)
    without = bob_marginal(s, alice_measures=False)
    omega = s.energy_scale / 2
    delta = s.clocks[0].width
    return SignallingPoint(omega, delta, trace_distance(with_a, without), fidelity(with_a, without), dict(n=s.n))


def sweep(omega_deltas: Sequence[float], omega: float = 1.0, offset: float = 0.0, n: int = 256, alice_off: bool = False) -> list[SignallingPoint]:
    if len(omega_deltas) == 0:
        raise ValueError("empty grid")
    return [signalling_point(chain3_scenario(wd, omega, offset, n), alice_off) for wd in omega_deltas]


def is_non_decreasing(points: Sequence[SignallingPoint], tol: float = 0.0) -> bool:
    d = [p.trace_distance for p in points]
    return all(b >= a - tol for a, b in zip(d, d[1:]))


def sweep_csv(points: Sequence[SignallingPoint]) -> str:
    from .io import fmt

    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["omega", "delta", "omega_delta", "trace_distance", "fidelity"])
    for p in points:
        w.writerow([fmt(p.omega), fmt(p.delta), fmt(p.omega_delta), fmt(p.trace_distance), fmt(p.fidelity)])
    return buf.getvalue()


@dataclass(frozen=True)
class ConditionalPurity:
    outcome: tuple[int, ...]
    probability: float
    purity: float | None  # None for empty branches
    spin_state: np.ndarray | None  # normalized clock-traced system state


def post_pointer_clock_entanglement(s: AutonomousScenario) -> list[ConditionalPurity]:
    """Purity of the system conditioned on each pointer outcome.

    Given an outcome the system ⊗ clocks state is pure, so the purity of the
    clock-traced system equals that of the clock marginal: 1 means the
    clocks factor out, below 1 means they stay entangled with the system.
    """
    if s.n_clocks != 2:
        raise ValueError("two-clock scenario required")
    res = evolve(s)
    out = []
    for o in measure_pointers(res.state, res.model):
        if o.empty:
            out.append(ConditionalPurity(o.outcome, o.probability, None, None))
            continue
        a = o.state.reshape(o.state.shape[0], -1)
        rho = a @ a.conj().T / o.probability
        out.append(ConditionalPurity(o.outcome, o.probability, float(np.real(np.trace(rho @ rho))), rho))
    return out
