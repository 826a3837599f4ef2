"""Projection-postulate energy bookkeeping for sigma_z measurements on chain ends.

Outcome encoding: 0 is spin up (+1), 1 is spin down (-1).
"""
from __future__ import annotations

import csv
import io
import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np
from scipy.optimize import linprog

from .qla import HermitianOperator, StateVector, embed_operator, spectral_projectors

PROB_TOL = 1e-12
_UP_DOWN = (np.diag([1.0, 0.0]).astype(complex), np.diag([0.0, 1.0]).astype(complex))


@dataclass(frozen=True)
class MeasurementScenario:
    parties: tuple[str, ...] = ("B",)
    n_spins: int = 3

    def __post_init__(self):
        parties = tuple(self.parties)
        if not parties or any(p not in ("A", "B") for p in parties) or len(set(parties)) != len(parties):
            raise ValueError(f"parties must be a nonempty subset of ('A', 'B'), got {parties}")
        object.__setattr__(self, "parties", tuple(sorted(parties)))

    def site(self, party: str) -> int:
        return 0 if party == "A" else self.n_spins - 1


@dataclass(frozen=True)
class Branch:
    outcome: tuple[int, ...]
    probability: float
    post_state: StateVector | None  # None for a zero-probability outcome


def outcome_projector(scenario: MeasurementScenario, outcome: Sequence[int]) -> np.ndarray:
    dims = (2,) * scenario.n_spins
    p = np.eye(2**scenario.n_spins, dtype=complex)
    for party, o in zip(scenario.parties, outcome):
        p = p @ embed_operator(_UP_DOWN[o], dims, [scenario.site(party)])
    return p


def measure_sites(state: StateVector, scenario: MeasurementScenario, include_zero: bool = False) -> list[Branch]:
    """Born probabilities and renormalized post-measurement states."""
    if abs(state.norm - 1) > 1e-10:
        raise ValueError("measure_sites expects a normalized state")
    out = []
    for outcome in itertools.product((0, 1), repeat=len(scenario.parties)):
        v = outcome_projector(scenario, outcome) @ state.amplitudes
        prob = float(np.real(np.vdot(v, v)))
        if prob > PROB_TOL:
            out.append(Branch(outcome, prob, StateVector(state.dims, v / np.sqrt(prob))))
        elif include_zero:
            out.append(Branch(outcome, 0.0, None))
    return out


def renormalized(branch: Branch) -> StateVector:
    if branch.post_state is None:
        raise ValueError(f"outcome {branch.outcome} has zero probability; no post-measurement state")
    return branch.post_state


@dataclass(frozen=True)
class OutcomeRow:
    outcome: tuple[int, ...]
    probability: float
    energy_changes: dict[float, float]  # sharp dE -> conditional probability
    mean_change: float


@dataclass(frozen=True)
class EnergyTable:
    parties: tuple[str, ...]
    rows: tuple[OutcomeRow, ...]
    initial_energy: float

    @property
    def overall_mean(self) -> float:
        return float(sum(r.probability * r.mean_change for r in self.rows))

    def row(self, outcome: Sequence[int]) -> OutcomeRow:
        outcome = tuple(outcome)
        for r in self.rows:
            if r.outcome == outcome:
                return r
        raise KeyError(f"no row for outcome {outcome}")

    def probability(self, outcome: Sequence[int]) -> float:
        try:
            return self.row(outcome).probability
        except KeyError:
            return 0.0

    def marginal(self, party: str) -> dict[int, float]:
        i = self.parties.index(party)
        out: dict[int, float] = {}
        for r in self.rows:
            out[r.outcome[i]] = out.get(r.outcome[i], 0.0) + r.probability
        return out

    def to_csv(self, digits: int = 12) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["outcome", "prob", "dE", "prob_dE", "cond_mean", "overall_mean"])
        fmt = f"{{:.{digits}g}}"
        for r in self.rows:
            for de, p in sorted(r.energy_changes.items()):
                w.writerow([
                    "".join(map(str, r.outcome)),
                    fmt.format(r.probability),
                    fmt.format(de),
                    fmt.format(p),
                    fmt.format(r.mean_change),
                    fmt.format(self.overall_mean),
                ])
        return buf.getvalue()


def _round_key(x: float) -> float:
    return float(np.round(x, 10)) + 0.0


def conditional_energy_stats(state: StateVector, scenario: MeasurementScenario, hamiltonian: HermitianOperator) -> EnergyTable:
    if hamiltonian.dims != state.dims:
        raise ValueError("state and Hamiltonian have different shapes")
    e_in = hamiltonian.expectation(state)
    spectrum = spectral_projectors(hamiltonian.matrix)
    rows = []
    for br in measure_sites(state, scenario):
        v = br.post_state.amplitudes
        dist: dict[float, float] = {}
        for energy, proj in spectrum:
            p = float(np.real(np.vdot(v, proj @ v)))
            if p > PROB_TOL:
                key = _round_key(energy - e_in)
                dist[key] = dist.get(key, 0.0) + p
        mean = hamiltonian.expectation(br.post_state) - e_in
        rows.append(OutcomeRow(br.outcome, br.probability, dist, mean))
    return EnergyTable(scenario.parties, tuple(rows), e_in)


# ---------------------------------------------------------------------------
# Attribution of the two-party energy change to the two apparatuses


@dataclass(frozen=True)
class _Branch2:
    a: int
    b: int
    de: float
    weight: float  # P(dE | a, b)


@dataclass
class AttributionProblem:
    """Unknown shares of each two-party energy change carried by Bob's apparatus.

    Alice carries the remainder. Each party's share, conditioned on its own
    outcome and averaged over the distant outcome, must reproduce the table
    obtained when that party measures alone.
    """

    one_party_a: EnergyTable
    one_party_b: EnergyTable
    two_party: EnergyTable
    symmetric: str = "exact"
    branches: list[_Branch2] = field(init=False)
    shares: dict[int, list[float]] = field(init=False)

    def __post_init__(self):
        if self.symmetric not in ("exact", "distribution", "none"):
            raise ValueError("symmetric must be 'exact', 'distribution' or 'none'")
        if self.two_party.parties != ("A", "B"):
            raise ValueError("two-party table must involve A and B")
        if self.one_party_a.parties != ("A",) or self.one_party_b.parties != ("B",):
            raise ValueError("one-party tables must be for A alone and for B alone")
        for party, table in (("A", self.one_party_a), ("B", self.one_party_b)):
            m2 = self.two_party.marginal(party)
            m1 = table.marginal(party)
            for o in set(m1) | set(m2):
                if abs(m1.get(o, 0) - m2.get(o, 0)) > 1e-9:
                    raise ValueError(f"outcome statistics of {party} differ between the tables")
        self.branches = [
            _Branch2(r.outcome[0], r.outcome[1], de, p)
            for r in self.two_party.rows
            for de, p in sorted(r.energy_changes.items())
        ]
        support_a = sorted({de for r in self.one_party_a.rows for de in r.energy_changes})
        support_b = sorted({de for r in self.one_party_b.rows for de in r.energy_changes})
        self.shares = {}
        for i, br in enumerate(self.branches):
            opts = [k for k in support_b if any(abs(br.de - k - j) < 1e-9 for j in support_a)]
            if self.symmetric == "exact" and br.a == br.b:
                opts = [k for k in opts if abs(2 * k - br.de) < 1e-9]
            self.shares[i] = opts

    def cond_prob(self, party: str, own: int, other: int) -> float:
        """P(other | own) in the two-party table."""
        pa = self.two_party.marginal(party)[own]
        outcome = (own, other) if party == "A" else (other, own)
        return self.two_party.probability(outcome) / pa

    def _targets(self):
        # (party, own outcome, share value, required probability)
        for party, table in (("A", self.one_party_a), ("B", self.one_party_b)):
            for r in table.rows:
                for k, p in r.energy_changes.items():
                    yield party, r.outcome[0], k, p

    def _coefficient(self, party: str, own: int, k: float, i: int, bob_share: float) -> float:
        br = self.branches[i]
        if (br.a if party == "A" else br.b) != own:
            return 0.0
        share = br.de - bob_share if party == "A" else bob_share
        if abs(share - k) > 1e-9:
            return 0.0
        other = br.b if party == "A" else br.a
        return self.cond_prob(party, own, other) * br.weight

    def linear_system(self):
        variables = [(i, k) for i in self.shares for k in self.shares[i]]
        rows, rhs, names = [], [], []
        for party, own, k, p in self._targets():
            rows.append([self._coefficient(party, own, k, i, s) for i, s in variables])
            rhs.append(p)
            names.append(f"P(share_{party}={_frac(k)} | {party.lower()}={own}) = {_frac(p)}")
        for i in self.shares:
            rows.append([1.0 if j == i else 0.0 for j, _ in variables])
            rhs.append(1.0)
            names.append(f"normalization of branch {i}")
        if self.symmetric == "distribution":
            for i, br in enumerate(self.branches):
                if br.a != br.b:
                    continue
                for k in self.shares[i]:
                    mirror = br.de - k
                    if k < mirror and any(abs(mirror - s) < 1e-9 for s in self.shares[i]):
                        rows.append([(1.0 if (j, s) == (i, k) else 0.0) - (1.0 if j == i and abs(s - mirror) < 1e-9 else 0.0) for j, s in variables])
                        rhs.append(0.0)
                        names.append(f"symmetric split of branch {i}")
        return variables, np.array(rows, dtype=float), np.array(rhs, dtype=float), names


@dataclass(frozen=True)
class FeasibilityReport:
    feasible: bool
    deterministic_feasible: bool
    deterministic_solutions: int
    randomized_feasible: bool
    binding_chain: tuple[str, ...]
    violations: tuple[dict, ...]
    mean_shares: dict[tuple[int, int], tuple[float, float]]
    assumptions: str

    @property
    def verdict(self) -> str:
        return "FEASIBLE" if self.feasible else "INFEASIBLE"

    def summary(self) -> str:
        lines = [f"verdict: {self.verdict} (assumption on equal outcomes: {self.assumptions})"]
        lines.append(f"deterministic attributions consistent: {self.deterministic_solutions}")
        lines.append(f"randomized attribution feasible: {self.randomized_feasible}")
        for (a, b), (ma, mb) in sorted(self.mean_shares.items()):
            lines.append(f"mean shares for a={a}, b={b}: Alice {_frac(ma)}, Bob {_frac(mb)}")
        lines.extend(self.binding_chain)
        return "\n".join(lines)


def _frac(x: float) -> str:
    return str(Fraction(x).limit_denominator(1000))


def _mean_shares(problem: AttributionProblem) -> dict[tuple[int, int], tuple[float, float]]:
    """Solve the mean-level consistency equations (equal split on a == b)."""
    tp = problem.two_party
    unknown = [r.outcome for r in tp.rows if r.outcome[0] != r.outcome[1]]
    fixed = {r.outcome: r.mean_change / 2 for r in tp.rows if r.outcome[0] == r.outcome[1]}
    # one unknown per off-diagonal outcome: Bob's mean share
    rows, rhs = [], []
    for party, table in (("B", problem.one_party_b), ("A", problem.one_party_a)):
        for r in table.rows:
            own = r.outcome[0]
            coeffs = np.zeros(len(unknown))
            const = 0.0
            for other in (0, 1):
                outcome = (other, own) if party == "B" else (own, other)
                w = tp.probability(outcome) / tp.marginal(party)[own]
                if w == 0:
                    continue
                if outcome in fixed:
                    const += w * fixed[outcome]
                else:
                    j = unknown.index(outcome)
                    mean = tp.row(outcome).mean_change
                    if party == "B":
                        coeffs[j] += w
                    else:
                        coeffs[j] -= w
                        const += w * mean
            rows.append(coeffs)
            rhs.append(r.mean_change - const)
    sol, *_ = np.linalg.lstsq(np.array(rows), np.array(rhs), rcond=None)
    out = {o: (m, m) for o, m in fixed.items()}
    for o, bob in zip(unknown, sol):
        total = tp.row(o).mean_change
        out[o] = (float(total - bob), float(bob))
    return out


def _forced_lower_bounds(problem: AttributionProblem) -> list[dict]:
    """For each party and share value, the probability forced by pinned branches."""
    out = []
    for party, own, k, required in problem._targets():
        forced = []
        free = []
        for i, br in enumerate(problem.branches):
            opts = problem.shares[i]
            coeffs = [problem._coefficient(party, own, k, i, s) for s in opts]
            if not any(coeffs):
                continue
            other = br.b if party == "A" else br.a
            term = (problem.cond_prob(party, own, other), br.weight, (br.a, br.b), br.de)
            if len(opts) == 1:
                forced.append(term)
            else:
                free.append(term)
        bound = sum(c * w for c, w, *_ in forced)
        out.append(dict(party=party, outcome=own, share=k, required=required, lower_bound=bound, forced=forced, free=free))
    return out


def _chain_text(v: dict) -> str:
    p, own, k = v["party"], v["outcome"], v["share"]
    terms = [f"{_frac(c)}*{_frac(w)}" for c, w, *_ in v["forced"]]
    terms += [f"{_frac(c)}*{_frac(w)}*delta" for c, w, *_ in v["free"]]
    return (
        f"prob(dE_{p.lower()}={_frac(k)}|{p.lower()}={own}) = {_frac(v['required'])} "
        f"= {' + '.join(terms)} >= {_frac(v['lower_bound'])}"
    )


def attribution_feasibility(
    one_party_b: EnergyTable,
    two_party: EnergyTable,
    one_party_a: EnergyTable | None = None,
    symmetric: str = "exact",
) -> FeasibilityReport:
    """Can the two-party energy changes be split between the apparatuses
    so that each apparatus behaves as if the other party were idle?

    With ``symmetric='exact'`` outcomes a == b split their energy change in
    equal halves. The report carries the deterministic enumeration, the
    randomized (linear-program) check, and the violated lower bounds.
    """
    if one_party_a is None:
        one_party_a = _mirror(one_party_b)
    problem = AttributionProblem(one_party_a, one_party_b, two_party, symmetric)
    variables, a_eq, b_eq, names = problem.linear_system()

    n_det = 0
    idx = {v: j for j, v in enumerate(variables)}
    choices = [problem.shares[i] for i in sorted(problem.shares)]
    for combo in itertools.product(*choices):
        x = np.zeros(len(variables))
        for i, s in zip(sorted(problem.shares), combo):
            x[idx[(i, s)]] = 1.0
        if np.allclose(a_eq @ x, b_eq, atol=1e-9):
            n_det += 1

    if any(len(c) == 0 for c in choices):
        randomized = False
    else:
        res = linprog(np.zeros(len(variables)), A_eq=a_eq, b_eq=b_eq, bounds=[(0, 1)] * len(variables), method="highs")
        randomized = res.status == 0

    bounds = _forced_lower_bounds(problem)
    violations = tuple(v for v in bounds if v["lower_bound"] > v["required"] + 1e-9)
    chain = tuple(_chain_text(v) for v in violations)
    return FeasibilityReport(
        feasible=randomized,
        deterministic_feasible=n_det > 0,
        deterministic_solutions=n_det,
        randomized_feasible=randomized,
        binding_chain=chain,
        violations=violations,
        mean_shares=_mean_shares(problem),
        assumptions=symmetric,
    )


def _mirror(table: EnergyTable) -> EnergyTable:
    other = "A" if table.parties == ("B",) else "B"
    return EnergyTable((other,), table.rows, table.initial_energy)


def paper_tables(energy_scale: float = 1.0, who: str = "B") -> tuple[EnergyTable, EnergyTable]:
    """One-party table (``who`` measures alone) and the two-party table for phi_m1."""
    from .spin_chain import ChainSpec, chain_hamiltonian, named_eigenstate

    h = chain_hamiltonian(ChainSpec(3, energy_scale))
    psi = named_eigenstate("phi_m1")
    one = conditional_energy_stats(psi, MeasurementScenario((who,)), h)
    two = conditional_energy_stats(psi, MeasurementScenario(("A", "B")), h)
    return one, two


def iter_table_rows(table: EnergyTable) -> Iterable[tuple]:
    for r in table.rows:
        for de, p in sorted(r.energy_changes.items()):
            yield r.outcome, r.probability, de, p, r.mean_change
