import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from spinclock.mediator import (
    MediatorProblem,
    dimension_scan,
    embed_params,
    hermitian_from_params,
    local_z_solution,
    optimize,
    params_from_hermitian,
    repeated_round_trip_error,
    residual,
    round_trip,
    scan_csv,
    target,
    unitaries,
)


def test_problem_validation():
    with pytest.raises(ValueError):
        MediatorProblem(np.eye(3))
    with pytest.raises(ValueError):
        MediatorProblem(target("pair"), d=1)
    with pytest.raises(ValueError):
        MediatorProblem(target("pair"), tau=0)
    with pytest.raises(ValueError):
        target("xyz")


@given(st.integers(0, 2**32 - 1), st.integers(1, 5))
def test_hermitian_parameterization_roundtrip(seed, n):
    x = np.random.default_rng(seed).normal(size=n * n)
    k = hermitian_from_params(x, n)
    assert np.allclose(k, k.conj().T)
    assert np.allclose(params_from_hermitian(k), x)


@given(st.floats(-3, 3), st.floats(0.1, 3), st.integers(2, 4))
def test_local_z_exact(omega, tau, d):
    prob = MediatorProblem(target("local-z", omega), tau, d)
    u1, u2 = local_z_solution(omega, tau, d)
    assert residual(prob, u1, u2) < 1e-20
    assert repeated_round_trip_error(prob, u1, u2, 5) < 1e-12


def test_zero_target_trivial():
    prob = MediatorProblem(target("zero"), 1.0, 2)
    assert residual(prob, np.eye(4), np.eye(4)) == pytest.approx(0.0)


@settings(max_examples=10)
@given(st.integers(0, 2**32 - 1), st.floats(0, 2 * np.pi))
def test_residual_gauge_invariance(seed, phi):
    # an aux relabelling V between the two visits leaves the round trip intact
    rng = np.random.default_rng(seed)
    d = 3
    prob = MediatorProblem(target("pair"), 1.0, d)
    x = rng.normal(size=2 * (2 * d) ** 2)
    u1, u2 = unitaries(x, d)
    v = np.diag(np.exp(1j * phi * np.array([0.0, 1.0, 2.0])))
    v[0, 0] = 1.0
    u1g = u1 @ np.kron(np.eye(2), v.conj().T)
    u2g = np.kron(v, np.eye(2)) @ u2
    assert residual(prob, u1g, u2g) == pytest.approx(residual(prob, u1, u2), abs=1e-10)


def test_non_unitary_rejected():
    prob = MediatorProblem(target("pair"), 1.0, 2)
    with pytest.raises(ValueError):
        residual(prob, 2 * np.eye(4), np.eye(4))


@given(st.integers(0, 2**32 - 1), st.integers(2, 4))
def test_embedding_preserves_residual(seed, d):
    x = np.random.default_rng(seed).normal(size=2 * (2 * d) ** 2)
    big = embed_params(x, d)
    r1 = residual(MediatorProblem(target("pair"), 1.0, d), *unitaries(x, d))
    r2 = residual(MediatorProblem(target("pair"), 1.0, d + 1), *unitaries(big, d + 1))
    assert abs(r1 - r2) < 1e-10


def test_round_trip_order():
    u1 = np.kron(np.diag([1, -1]), np.eye(2)).astype(complex)
    u2 = np.eye(4, dtype=complex)
    r = round_trip(u1, u2, 2)
    assert np.allclose(r, np.kron(np.kron(np.diag([1, -1]), np.eye(2)), np.eye(2)))


def test_optimizer_finds_local_solution():
    sol = optimize(MediatorProblem(target("local-z"), 1.0, 2), restarts=2, seed=0)
    assert sol.residual < 1e-8 and sol.realizable


def test_optimizer_deterministic():
    prob = MediatorProblem(target("pair"), 1.0, 2)
    a = optimize(prob, restarts=1, max_iters=50, seed=3)
    b = optimize(prob, restarts=1, max_iters=50, seed=3)
    assert a.residual == b.residual


def test_scan_is_monotone_and_reported():
    rows, sols = dimension_scan(target("pair"), [2, 3], restarts=1, max_iters=150, seed=1)
    assert [r.d for r in rows] == [2, 3]
    assert rows[1].residual <= rows[0].residual + 1e-10
    assert scan_csv(rows).splitlines()[0] == "d,residual,restarts,iterations,seed"
    with pytest.raises(ValueError):
        dimension_scan(target("pair"), [])
