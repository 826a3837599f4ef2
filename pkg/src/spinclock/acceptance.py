"""Acceptance suite: twelve numbered criteria, each a list of named checks.

A check may carry ``known_limit``: a reason why the bound is not met by the
faithful implementation.  Such checks are evaluated and reported like any
other; they are never loosened.
"""
from __future__ import annotations

import time
from dataclasses import dataclass, field, replace
from typing import Callable

import numpy as np

from .clock_sim import (
    AutonomousScenario,
    CouplingProfile,
    conditional_system_density,
    discrete_density,
    energy_bookkeeping,
    evolve,
    evolve_relative_slices,
    fidelity_to_oracle,
    mean_momentum,
    measure_pointers,
    momentum_distribution,
    momentum_mass,
    oracle_expansion,
    pointer_probabilities,
)
from .mediator import MediatorProblem, dimension_scan, local_z_solution, optimize, residual, target
from .projective import attribution_feasibility, paper_tables
from .qla import DensityOperator, trace_distance
from .signalling import chain3_scenario, is_non_decreasing, signalling_point, sweep
from .spin_chain import ChainSpec, chain_hamiltonian, eigenspace_projectors, named_eigenstate
from .wavepacket import F_parameter, F_quadrature, JointGaussian, WavePacket, pointer_outcome_probs

THETA = np.pi / 4


@dataclass(frozen=True)
class Check:
    name: str
    value: float
    bound: str
    passed: bool
    known_limit: str | None = None


@dataclass
class CriterionResult:
    number: int
    title: str
    checks: list[Check]
    seconds: float = 0.0
    report: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def failed(self) -> list[Check]:
        return [c for c in self.checks if not c.passed]

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        n_ok = sum(c.passed for c in self.checks)
        s = f"criterion {self.number:2d}: {status}  {self.title} ({n_ok}/{len(self.checks)} checks, {self.seconds:.1f} s)"
        for c in self.failed():
            note = f"; known limit: {c.known_limit}" if c.known_limit else ""
            s += f"\n    failed: {c.name} = {c.value:.6g} (need {c.bound}{note})"
        return s


def _le(name, value, bound, limit=None) -> Check:
    return Check(name, float(value), f"<= {bound:g}", bool(value <= bound), limit)


def _ge(name, value, bound, limit=None) -> Check:
    return Check(name, float(value), f">= {bound:g}", bool(value >= bound), limit)


def _flag(name, ok: bool) -> Check:
    return Check(name, float(ok), "true", bool(ok))


# ---------------------------------------------------------------------------
# exact finite-dimensional criteria


def criterion_1() -> CriterionResult:
    h = chain_hamiltonian(ChainSpec(3, 1.0))
    ev = np.sort(np.linalg.eigvalsh(h.matrix))
    want = np.array([-1, -1, 0, 0, 0, 0, 1, 1], dtype=float)
    e_m1 = h.expectation(named_eigenstate("phi_m1"))
    return CriterionResult(1, "chain spectrum", [
        _le("max |eigenvalue - {-1,-1,0,0,0,0,1,1}|", np.max(np.abs(ev - want)), 1e-12),
        _le("|<phi_m1|H|phi_m1> + 1|", abs(e_m1 + 1), 1e-12),
    ])


def criterion_2() -> CriterionResult:
    one, _ = paper_tables(1.0, "B")
    r = one.row((0,))
    dist = r.energy_changes
    err = max(abs(dist.get(k, 0.0) - v) for k, v in {0.0: 3 / 4, 1.0: 1 / 6, 2.0: 1 / 12}.items())
    return CriterionResult(2, "one-party table", [
        _le("|P(b=0) - 3/4|", abs(r.probability - 0.75), 1e-12),
        _le("max |P(dE|b=0) - {3/4, 1/6, 1/12}|", err, 1e-12),
        _le("|<dE|b=0> - 1/3|", abs(r.mean_change - 1 / 3), 1e-12),
        _le("|overall mean - 1/2|", abs(one.overall_mean - 0.5), 1e-12),
    ])


def criterion_3() -> CriterionResult:
    _, two = paper_tables(1.0)
    checks = []
    want = {(0, 0): (0.5, {0.0: 0.5, 2.0: 0.5}), (0, 1): (0.25, {0.0: 0.25, 1.0: 0.5, 2.0: 0.25}), (1, 0): (0.25, {0.0: 0.25, 1.0: 0.5, 2.0: 0.25})}
    for o, (p, dist) in want.items():
        r = two.row(o)
        checks.append(_le(f"|P{o} - {p}|", abs(r.probability - p), 1e-12))
        err = max(abs(r.energy_changes.get(k, 0.0) - v) for k, v in dist.items())
        checks.append(_le(f"max |P(dE|{o}) - table|", err, 1e-12))
    checks.append(_le("P(1,1)", two.probability((1, 1)), 1e-12))
    checks.append(_le("|overall mean - 1|", abs(two.overall_mean - 1), 1e-12))
    return CriterionResult(3, "two-party table", checks)


def criterion_4() -> CriterionResult:
    one, two = paper_tables(1.0)
    rep = attribution_feasibility(one, two)
    v = next(v for v in rep.violations if v["party"] == "B" and v["outcome"] == 0 and v["share"] == 1.0)
    forced = v["forced"]
    chain_ok = (
        len(forced) == 1
        and abs(forced[0][0] - 2 / 3) < 1e-12
        and abs(forced[0][1] - 1 / 2) < 1e-12
        and any(abs(c - 1 / 3) < 1e-12 and abs(w - 1 / 2) < 1e-12 for c, w, *_ in v["free"])
    )
    a10, b10 = rep.mean_shares[(1, 0)]
    return CriterionResult(4, "attribution certificate", [
        _flag("verdict INFEASIBLE", rep.verdict == "INFEASIBLE"),
        _le("|required P(dE_b=1|b=0) - 1/6|", abs(v["required"] - 1 / 6), 1e-12),
        _le("|forced lower bound - 1/3|", abs(v["lower_bound"] - 1 / 3), 1e-12),
        _flag("binding chain 2/3*1/2 + 1/3*delta/2", chain_ok),
        _le("|mean dE_b (a=1, b=0)|", abs(b10), 1e-12),
        _le("|mean dE_a (a=1, b=0) - 1|", abs(a10 - 1), 1e-12),
    ], report=dict(summary=rep.summary()))


# ---------------------------------------------------------------------------
# clock simulations


def _single(system: str, theta: float = THETA, n: int = 512) -> AutonomousScenario:
    return AutonomousScenario(system, omega=1.0, theta=theta, clocks=(WavePacket(-18.0, 0.0, 2.0),), n=n)


def criterion_5() -> CriterionResult:
    res = evolve(_single("single-spin-energy-basis"))
    rho = discrete_density(res.state)  # (spin, pointer)
    corr = float(np.real(rho[1, 1] + rho[2, 2]))  # (up, flipped) + (down, idle)
    lat = res.lattices[0]
    _, p0 = momentum_distribution(res.checkpoints[0].state, lat)
    _, p1 = momentum_distribution(res.state, lat)
    return CriterionResult(5, "energy-basis clock measurement", [
        _ge("P(pointer flipped <-> spin up)", corr, 1 - 1e-6),
        _le("total variation of clock momentum distribution", 0.5 * np.abs(p1 - p0).sum(), 1e-9),
        _le("|<p> final - initial|", abs(mean_momentum(res.state, lat) - mean_momentum(res.checkpoints[0].state, lat)), 1e-9),
    ])


def criterion_6() -> CriterionResult:
    s = _single("single-spin-theta")
    res = evolve(s)
    c2, s2 = np.cos(THETA) ** 2, np.sin(THETA) ** 2
    sim = np.real(np.diag(discrete_density(res.state)))
    orc = np.real(np.diag(oracle_expansion(s, res.t).discrete_density()))
    # index = 2*spin + pointer, spin 0 = up, pointer 1 = flipped
    formula = np.array([s2 * c2, s2 * c2, c2**2, s2**2])
    mass = momentum_mass(res.state, res.lattices[0], -2 * s.omega, s.omega)
    return CriterionResult(6, "theta-basis single spin", [
        _le("max |branch weight - oracle|", np.max(np.abs(sim - orc)), 1e-3),
        _le("max |oracle weight - {s2c2, s2c2, c4, s4}|", np.max(np.abs(orc - formula)), 1e-12),
        _le("|momentum mass at p - 2w - 2 s2 c2|", abs(mass - 2 * s2 * c2), 1e-3),
        _ge("state fidelity to oracle", fidelity_to_oracle(res), 1 - 1e-3),
    ], report=dict(weights=sim.tolist(), mass=mass))


KNOWN_7 = "F = 2 exp(-0.01) gives P01+P10 = s2c2(2-F) = 4.98e-3 at theta = pi/4"
KNOWN_8 = "F = 2 exp(-0.01) gives disagreement s2c2(2-F) = 4.98e-3 at theta = pi/4"
KNOWN_11 = "D scales as 0.83 (w Delta)^2, so D(0.05) = 2.1e-3"


def _two_pointer(omega_delta: float, offset: float, n: int = 256) -> AutonomousScenario:
    delta = omega_delta
    x_i = 9 * delta
    clocks = (WavePacket(-x_i, 0.0, delta), WavePacket(-x_i - offset, 0.0, delta))
    return AutonomousScenario("single-spin-two-pointers", omega=1.0, theta=THETA, clocks=clocks, n=n)


def criterion_7() -> CriterionResult:
    checks, report = [], {}
    for wd in (0.05, 0.5, 1.0, 3.0):
        for offset in (0.0, np.pi / 4):
            s = _two_pointer(wd, offset)
            res = evolve(s)
            jg = JointGaussian.independent(s.clocks[0].x0, s.clocks[1].x0, wd)
            f = F_parameter(jg, 1.0)
            f_lit = 2 * np.cos(2 * offset) * np.exp(-4 * wd**2)
            closed = pointer_outcome_probs(THETA, f)
            sim = pointer_probabilities(res.state, res.model)
            err = max(abs(sim[k] - closed[k]) for k in closed)
            tag = f"wD={wd:g}, y_i-x_i={offset:.4g}"
            checks.append(_le(f"|F - 2cos(2w(y_i-x_i))exp(-4w2D2)| [{tag}]", abs(f - f_lit), 1e-12))
            checks.append(_le(f"max |P_sim - P_closed| [{tag}]", err, 1e-3))
            report[tag] = sim
            if wd == 0.05 and offset == 0.0:
                checks.append(_le("P01 + P10 at wD=0.05", sim[(0, 1)] + sim[(1, 0)], 1e-3, KNOWN_7))
            if wd == 3.0 and offset == 0.0:
                out = next(o for o in measure_pointers(res.state, res.model) if o.outcome == (1, 1))
                rho = conditional_system_density(out).normalized()
                s2, c2 = np.sin(THETA) ** 2, np.cos(THETA) ** 2
                rho11 = DensityOperator((2,), np.diag([c2, s2]).astype(complex))
                checks.append(_le("trace distance to rho_11 at wD=3", trace_distance(rho, rho11), 1e-2))
    return CriterionResult(7, "double pointer with independent clocks", checks, report=report)


def criterion_8() -> CriterionResult:
    omega, dm, dp = 1.0, 0.05, 5.0
    jg = JointGaussian((-60.0, -60.0), dp, dm)
    s = AutonomousScenario("single-spin-two-pointers", omega=omega, theta=THETA, clocks=jg, n=512)
    sl = evolve_relative_slices(s)
    p = sl.pointer_probabilities()
    f = F_parameter(jg, omega)
    closed = pointer_outcome_probs(THETA, f)
    agree = p[(0, 0)] + p[(1, 1)]
    return CriterionResult(8, "entangled clocks", [
        _le("|F - 2exp(-4w2Dm2)|", abs(f - 2 * np.exp(-4 * omega**2 * dm**2)), 1e-12),
        _le("|F quadrature - closed form|", abs(F_quadrature(jg, omega) - f), 1e-9),
        _le("max |P_sim - P_closed(F)|", max(abs(p[k] - closed[k]) for k in closed), 1e-3),
        _ge("pointer agreement P00 + P11", agree, 1 - 1e-3, KNOWN_8),
    ], report=dict(probabilities=p, agreement=agree))


def smooth_variant(s: AutonomousScenario, method: str, substeps: int = 1) -> AutonomousScenario:
    """Same scenario with the default Gaussian coupling of width 4 dx."""
    prof = CouplingProfile.default(s.lattices()[0].dx)
    return replace(s, profile=prof, method=method, substeps=substeps)


def _max_drift(res) -> float:
    e = np.array([r.h_total for r in energy_bookkeeping(res)])
    return float(np.max(np.abs(e - e[0])))


def _chain_eigen(e0: float):
    return eigenspace_projectors(ChainSpec(3, e0))


def criterion_9() -> CriterionResult:
    checks, report = [], {}
    base = chain3_scenario(1.0, n=256)
    e0 = base.energy_scale

    # energy drift of the splitting method against substep count
    drifts = {}
    for m in (1, 2, 4, 32):
        drifts[m] = _max_drift(evolve(replace(smooth_variant(base, "strang", m), n_checkpoints=41)))
    order = np.log2(np.array([drifts[1] / drifts[2], drifts[2] / drifts[4]]))
    checks.append(_le("max |<H>(t) - <H>(0)| at reference dt = dx/32", drifts[32], 1e-6))
    checks.append(_le("|measured drift order - 2|", np.max(np.abs(order - 2)), 0.1))
    report["drift"] = drifts

    # per-branch bookkeeping in the oracle
    res = evolve(base)
    b = oracle_expansion(base, res.t)
    h = np.kron(chain_hamiltonian(ChainSpec(3, e0)).matrix, np.eye(4))
    e_init = -e0
    worst = 0.0
    for t in b.terms:
        v = t.vector
        e = np.real(np.vdot(v, h @ v)) / np.real(np.vdot(v, v))
        ka, kb = t.kicks
        worst = max(worst, abs(ka + kb + (e - e_init)))
    checks.append(_le("oracle max |kick_A + kick_B + dE_chain|", worst, 1e-12))

    # the same bookkeeping in the simulator, per final chain eigenspace
    lat = res.lattices
    dpmax = max(l.dp for l in lat)
    worst = 0.0
    for e, proj in _chain_eigen(e0):
        p = np.kron(proj, np.eye(4))
        st = np.tensordot(p, res.state, axes=(1, 0))
        w = np.real(np.vdot(st, st))
        if w < 1e-6:
            continue
        ptot = (mean_momentum(st, lat[0], 0) + mean_momentum(st, lat[1], 1)) / w
        worst = max(worst, abs(ptot + (e - e_init)))
    checks.append(_le("simulator max |<p_A+p_B>|E + dE_chain| / dp", worst / dpmax, 1.0))

    # weak-coupling limit: the projective two-party table
    res01 = evolve(chain3_scenario(0.01, n=256))
    _, two = paper_tables(e0)
    sim = pointer_probabilities(res01.state, res01.model)
    err = 0.0
    for (pa, pb), prob in sim.items():
        err = max(err, abs(prob - two.probability((1 - pa, 1 - pb))))
    checks.append(_le("wD=0.01 max |P(pointers) - two-party table|", err, 1e-3))
    report["table2_sim"] = sim

    # Alice first, Bob much later
    seq = chain3_scenario(2.0, offset=40.0, n=256)
    rs = evolve(seq)
    bs = oracle_expansion(seq, rs.t)
    g = np.real(np.diag(bs.clock_gram()))
    amp2 = np.array([np.real(np.vdot(t.vector, t.vector)) for t in bs.terms]) * g
    alice_err, masses = 0.0, {}
    for k in (0, 1, 2):
        kick = -k * e0
        want = sum(a for a, t in zip(amp2, bs.terms) if abs(-t.a - kick) < 1e-9)
        got = momentum_mass(rs.state, rs.lattices[0], kick, e0 / 2, axis=0)
        masses[kick] = got
        alice_err = max(alice_err, abs(got - want))
    checks.append(_le("sequential: max |Alice momentum mass - oracle| at p_A, p_A-E0, p_A-2E0", alice_err, 1e-3))
    checks.append(_ge("sequential: Alice mass in the three windows", sum(masses.values()), 1 - 1e-3))
    want_x = sum(a for a, t in zip(amp2, bs.terms) if abs(t.a - 2 * e0) < 1e-9 and abs(t.b + 2 * e0) < 1e-9)
    got_x = _joint_mass(rs, (-2 * e0, 2 * e0), e0 / 2)
    checks.append(_ge("sequential: (-2E0, +2E0) cross-branch weight", got_x, 1e-3))
    checks.append(_le("sequential: |cross-branch weight - oracle|", abs(got_x - want_x), 1e-3))
    report["sequential"] = dict(alice=masses, cross=got_x, cross_oracle=want_x)
    return CriterionResult(9, "chain with autonomous clocks", checks, report=report)


def _joint_mass(res, center, half_width) -> float:
    st = res.state
    phi = np.fft.fft2(st, axes=(1, 2), norm="ortho")
    prob = (np.abs(phi) ** 2).sum(axis=0)
    pa, pb = res.lattices[0].momenta, res.lattices[1].momenta
    ma = np.abs(pa - center[0]) <= half_width
    mb = np.abs(pb - center[1]) <= half_width
    return float(prob[np.ix_(ma, mb)].sum())


def _energy_change(res):
    recs = energy_bookkeeping(res)
    r0, r1 = recs[0], recs[-1]
    return r1.h_system - r0.h_system, sum(r1.p_clocks) - sum(r0.p_clocks), r1


def criterion_10() -> CriterionResult:
    base = chain3_scenario(0.01, n=256)
    e0 = base.energy_scale
    checks = []
    report = {}
    for label, active, want in (("only Bob", (False, True), e0 / 2), ("both", (True, True), e0)):
        res = evolve(replace(base, active=active))
        dh, dp, last = _energy_change(res)
        report[label] = dict(dH_chain=dh, dp=dp)
        checks.append(_le(f"{label}: |d<H_chain> - {want:g}| / E0", abs(dh - want) / e0, 1e-3))
        checks.append(_le(f"{label}: |d<p_A+p_B> + d<H_chain>| / E0", abs(dp + dh) / e0, 1e-3))
        checks.append(_le(f"{label}: |interaction energy at end| / E0", abs(last.interaction) / e0, 1e-3))
    m = base.model()
    pointer_free = np.allclose(m.h, np.kron(m.h_sys, np.eye(2**m.n_pointers)), atol=0) and all(
        r.pointer_energy == 0.0 for r in energy_bookkeeping(evolve(base))
    )
    checks.append(_flag("pointer Hamiltonian identically 0", pointer_free))
    return CriterionResult(10, "unconditional energy budget", checks, report=report)


SIGNAL_GRID = (0.05, 0.2, 1.0, 3.0)


def criterion_11() -> CriterionResult:
    pts = sweep(SIGNAL_GRID, n=256)
    pts2 = sweep(SIGNAL_GRID, n=512)
    d = {p.omega_delta: p.trace_distance for p in pts}
    d2 = {p.omega_delta: p.trace_distance for p in pts2}
    rel = max(abs(d2[k] - d[k]) / d2[k] for k in d)
    off = signalling_point(chain3_scenario(1.0, n=256), alice_off=True).trace_distance
    return CriterionResult(11, "signalling", [
        _le("D(wD=0.05)", d[0.05], 1e-3, KNOWN_11),
        _ge("D(wD=3) / D(wD=0.05)", d[3.0] / d[0.05], 10.0),
        _flag("D non-decreasing in wD", is_non_decreasing(pts)),
        _le("max relative change of D under N -> 2N", rel, 0.05),
        _le("D with Alice idle", off, 1e-12),
    ], report=dict(D=d, D_2N=d2))


MEDIATOR_DIMS = (2, 3, 4, 5, 6)


def criterion_12() -> CriterionResult:
    prob = MediatorProblem(target("local-z"), 1.0, 2)
    u1, u2 = local_z_solution(1.0, 1.0, 2)
    opt = optimize(prob, restarts=2, max_iters=2000, seed=0)
    rows, _ = dimension_scan(target("pair"), MEDIATOR_DIMS, restarts=3, max_iters=600, seed=0)
    res = [r.residual for r in rows]
    mono = all(b <= a + 1e-10 for a, b in zip(res, res[1:]))
    return CriterionResult(12, "mediator", [
        _le("local-z: constructed residual", residual(prob, u1, u2), 1e-8),
        _le("local-z: optimized residual at d=2", opt.residual, 1e-8),
        _flag("pair scan residuals non-increasing in d", mono),
    ], report=dict(pair_scan={r.d: r.residual for r in rows}, pair_d2=res[0]))


CRITERIA: dict[int, Callable[[], CriterionResult]] = {
    k: globals()[f"criterion_{k}"] for k in range(1, 13)
}

KNOWN_LIMITS = (
    (7, "P01 + P10 at wD=0.05"),
    (8, "pointer agreement P00 + P11"),
    (11, "D(wD=0.05)"),
)


RESULTS: dict[int, CriterionResult] = {}


def run_criterion(number: int) -> CriterionResult:
    """Evaluate once per process; later calls return the stored result."""
    if number not in CRITERIA:
        raise KeyError(f"no criterion {number}")
    if number not in RESULTS:
        t0 = time.perf_counter()
        r = CRITERIA[number]()
        r.seconds = time.perf_counter() - t0
        RESULTS[number] = r
    return RESULTS[number]


def run_all(numbers=None, echo: Callable[[str], None] | None = None) -> list[CriterionResult]:
    out = []
    for k in numbers or sorted(CRITERIA):
        r = run_criterion(k)
        if echo is not None:
            echo(r.line())
        out.append(r)
    return out
