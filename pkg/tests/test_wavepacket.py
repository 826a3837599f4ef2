import numpy as np
import pytest
from hypothesis import given, strategies as st

from spinclock.spin_chain import named_eigenstate
from spinclock.wavepacket import (
    F_parameter,
    F_quadrature,
    JointGaussian,
    WavePacket,
    alice_only_intermediate,
    chain3_final,
    double_pointer_final,
    free_propagate,
    half_line_char,
    overlap,
    pointer_kick,
    pointer_outcome_probs,
    sequential_chain3_final,
    single_spin_theta_final,
    theta_projector,
)

angles = st.floats(0.0, np.pi, allow_nan=False)
UP, DN = np.array([1.0, 0.0]), np.array([0.0, 1.0])


def _terms(b, region, swap=False):
    out = {}
    for t in b.terms:
        if t.region == region:
            key = (t.b, t.a) if swap else (t.a, t.b)
            out[key] = out.get(key, 0) + t.vector
    return out


def _same_up_to_phase(lit: dict, got: dict, tol=1e-12):
    """Every literal term equals the computed one after one common complex factor."""
    g = None
    for k, v in lit.items():
        o = got.get(k, np.zeros_like(v))
        r = np.vdot(v, o) / np.vdot(v, v)
        g = r if g is None else g
        if np.linalg.norm(o - g * v) > tol:
            return False
    return abs(abs(g) - 1) < tol


# ---------------------------------------------------------------------------
# packets


@given(st.floats(-5, 5), st.floats(-3, 3), st.floats(0.3, 3), st.floats(-5, 5), st.floats(-3, 3), st.floats(0.3, 3))
def test_overlap_matches_quadrature(x1, p1, w1, x2, p2, w2):
    a, b = WavePacket(x1, p1, w1), WavePacket(x2, p2, w2)
    x = np.linspace(-40, 40, 40001)
    num = np.trapezoid(np.conj(a(x)) * b(x), x)
    assert abs(overlap(a, b) - num) < 1e-8


def test_packet_normalized_and_translates():
    p = WavePacket(1.0, 0.5, 0.7)
    assert overlap(p, p) == pytest.approx(1.0)
    q = p.propagated(3.0)
    assert q.x0 == pytest.approx(4.0) and abs(q.norm - 1) < 1e-15


def test_kick_shifts_mean_momentum():
    p = WavePacket(0.0, 0.0, 2.0).kicked(-2.0)
    x = np.linspace(-30, 30, 4096, endpoint=False)
    phi = np.fft.fft(p(x))
    k = 2 * np.pi * np.fft.fftfreq(len(x), x[1] - x[0])
    w = np.abs(phi) ** 2
    assert np.dot(k, w) / w.sum() == pytest.approx(-2.0, abs=1e-9)


def test_invalid_width():
    with pytest.raises(ValueError):
        WavePacket(0.0, 0.0, 0.0)


@given(st.floats(-3, 3), st.floats(-4, 4), st.floats(0.05, 2))
def test_half_line_char_by_quadrature(k, mu, sig):
    d = np.linspace(0, mu + 14 * sig if mu > 0 else 14 * sig, 200001)
    dens = np.exp(-((d - mu) ** 2) / (2 * sig**2)) / np.sqrt(2 * np.pi * sig**2)
    num = np.trapezoid(np.exp(1j * k * d) * dens, d)
    assert abs(half_line_char(k, mu, sig) - num) < 1e-6


# ---------------------------------------------------------------------------
# single spin


def test_pointer_kick_conventions():
    p = theta_projector(0.3)
    for conv in ("physical", "paper"):
        u = pointer_kick(p, conv)
        assert np.allclose(u.conj().T @ u, np.eye(4))
    with pytest.raises(ValueError):
        pointer_kick(p, "other")


@given(angles)
def test_single_spin_literal_delta_clock(theta):
    # sc e^{-2iwx}|up,1> + s^2|dn,1> - sc e^{-2iwx}|up,0> + c^2|dn,0>, pointer order (spin, pointer)
    c, s = np.cos(theta), np.sin(theta)
    b = single_spin_theta_final(theta, 1.0, WavePacket(-10.0, 0.0, 1.0), 30.0, convention="paper")
    lit = {
        (2.0, 0.0): s * c * np.kron(UP, [0, 1]) - s * c * np.kron(UP, [1, 0]),
        (0.0, 0.0): s * s * np.kron(DN, [0, 1]) + c * c * np.kron(DN, [1, 0]),
    }
    got = {(t.a, 0.0): t.vector for t in b.terms}
    lit = {k: v for k, v in lit.items() if np.linalg.norm(v) > 1e-9}
    assert _same_up_to_phase(lit, got, 1e-10)


@given(angles, st.floats(0.2, 3.0))
def test_single_spin_weights_and_energy(theta, delta):
    c2, s2 = np.cos(theta) ** 2, np.sin(theta) ** 2
    b = single_spin_theta_final(theta, 1.0, WavePacket(-10 * delta, 0.0, delta), 30 * delta)
    rho = b.discrete_density()
    assert np.real(np.trace(rho)) == pytest.approx(1.0, abs=1e-12)
    # the flipped spin always carries the kick -2w
    flipped = sum(np.linalg.norm(t.vector[:2]) ** 2 for t in b.terms if t.a == 2.0)
    assert flipped == pytest.approx(2 * s2 * c2, abs=1e-12)
    assert np.real(rho[3, 3]) == pytest.approx(s2**2, abs=1e-12)
    assert np.real(rho[2, 2]) == pytest.approx(c2**2, abs=1e-12)


def test_incomplete_interaction_rejected():
    with pytest.raises(ValueError):
        single_spin_theta_final(0.3, 1.0, WavePacket(-10.0, 0.0, 1.0), 5.0)


# ---------------------------------------------------------------------------
# two pointers on one spin


@given(angles)
def test_two_pointer_literal_in_a_first_region(theta):
    c, s = np.cos(theta), np.sin(theta)
    k0, k1 = np.array([1.0, 0.0]), np.array([0.0, 1.0])
    m, cs, sc = k1 - k0, c * c * k1 + s * s * k0, s * s * k1 + c * c * k0
    lit = {
        (2.0, 0.0): s * c * np.kron(UP, np.kron(m, cs)),
        (0.0, 2.0): s * c * np.kron(UP, np.kron(sc, m)),
        (2.0, -2.0): s * s * c * c * np.kron(DN, np.kron(m, m)),
        (0.0, 0.0): np.kron(DN, np.kron(sc, sc)),
    }
    lit = {k: v for k, v in lit.items() if np.linalg.norm(v) > 1e-9}
    b = double_pointer_final(theta, 1.0, JointGaussian.independent(-5, -5, 1.0), 20, convention="paper")
    assert _same_up_to_phase(lit, _terms(b, "a_first"), 1e-10)


def test_two_pointer_b_first_needs_pointer_exchange():
    # with B first, the max/min form holds only after exchanging the two pointers
    theta = 0.6
    c, s = np.cos(theta), np.sin(theta)
    k0, k1 = np.array([1.0, 0.0]), np.array([0.0, 1.0])
    m, cs, sc = k1 - k0, c * c * k1 + s * s * k0, s * s * k1 + c * c * k0
    b = double_pointer_final(theta, 1.0, JointGaussian.independent(-5, -5, 1.0), 20, convention="paper")
    got = _terms(b, "b_first", swap=True)
    literal = {(2.0, 0.0): s * c * np.kron(UP, np.kron(m, cs)), (0.0, 2.0): s * c * np.kron(UP, np.kron(sc, m))}
    exchanged = {(2.0, 0.0): s * c * np.kron(UP, np.kron(cs, m)), (0.0, 2.0): s * c * np.kron(UP, np.kron(m, sc))}
    assert not _same_up_to_phase(literal, got, 1e-6)
    assert _same_up_to_phase(exchanged, got, 1e-10)


@given(angles, st.floats(0.02, 0.3), st.floats(-2, 2))
def test_closed_form_probabilities_a_first(theta, delta, shift):
    # A leads by at least 14 relative widths, so only the A-first region counts
    lead = 20 * delta + abs(shift)
    jg = JointGaussian.independent(-10.0, -10.0 - lead, delta)
    b = double_pointer_final(theta, 1.0, jg, 40.0)
    f = F_parameter(jg, 1.0)
    want = pointer_outcome_probs(theta, f)
    got = b.pointer_probabilities()
    for k in want:
        assert got[k] == pytest.approx(want[k], abs=1e-10)


@given(st.floats(0.05, 3.0), st.floats(-1.5, 1.5))
def test_closed_form_probabilities_any_order_at_quarter_pi(wd, offset):
    jg = JointGaussian.independent(-10 * wd - 2, -10 * wd - 2 - offset, wd)
    b = double_pointer_final(np.pi / 4, 1.0, jg, 20 * wd + 10)
    want = pointer_outcome_probs(np.pi / 4, F_parameter(jg, 1.0))
    got = b.pointer_probabilities()
    for k in want:
        assert got[k] == pytest.approx(want[k], abs=1e-10)


@given(st.floats(0.05, 2.0), st.floats(0.05, 2.0), st.floats(-2, 2), st.floats(0.3, 2))
def test_F_closed_form_vs_quadrature(dp, dm, offset, omega):
    jg = JointGaussian((0.0, -offset), dp, dm)
    assert F_quadrature(jg, omega) == pytest.approx(F_parameter(jg, omega), abs=1e-8)


def test_F_independent_literal():
    jg = JointGaussian.independent(-3.0, -3.7, 0.4)
    assert F_parameter(jg, 1.3) == pytest.approx(2 * np.cos(2 * 1.3 * 0.7) * np.exp(-4 * 1.3**2 * 0.4**2), abs=1e-14)


def test_F_entangled_literal():
    jg = JointGaussian((-10.0, -10.0), 5.0, 0.05)
    assert F_parameter(jg, 1.0) == pytest.approx(2 * np.exp(-4 * 0.05**2), abs=1e-14)


@given(angles, st.floats(-2, 2))
def test_closed_form_probabilities_normalized(theta, f):
    p = pointer_outcome_probs(theta, f)
    assert sum(p.values()) == pytest.approx(1.0, abs=1e-12)
    assert min(p.values()) >= -1e-12


def test_F_out_of_range():
    with pytest.raises(ValueError):
        pointer_outcome_probs(0.3, 2.5)


# ---------------------------------------------------------------------------
# chain


def _chain_literal():
    # pointer labels exchanged relative to P_up ⊗ σx; "0+-1" read as (0-1)
    k0, k1 = np.array([0.0, 1.0]), np.array([1.0, 0.0])
    a3, am = (3 * k0 + k1) / 4, (k0 - k1) / 4
    bm, bp = (k0 - k1) / np.sqrt(8), (k0 + k1) / np.sqrt(8)
    m1 = named_eigenstate("phi_m1").amplitudes
    p1 = named_eigenstate("phi_p1").amplitudes
    f0 = named_eigenstate("phi_0_2").amplitudes
    rows = {
        (0, 0): (1, m1, a3, a3), (0, 4): (1, p1, a3, am), (0, 2): (1, f0, a3, bm),
        (4, 0): (1, p1, am, a3), (4, -4): (1, m1, am, am), (4, -2): (-1, f0, am, bm),
        (2, 2): (1, p1, bm, bm), (2, -2): (-1, m1, bm, bm), (2, 0): (-1, f0, bm, bp),
    }
    return {k: s * np.kron(v, np.kron(a, b)) for k, (s, v, a, b) in rows.items()}


def test_chain_literal_in_a_first_region():
    lit = _chain_literal()
    lit[(2, 0)] = lit[(2, 0)] * np.sqrt(2)  # last line is short by sqrt 2
    b = chain3_final(2.0, JointGaussian.independent(-5, -5, 1.0), 20, convention="paper")
    assert _same_up_to_phase(lit, _terms(b, "a_first"), 1e-12)


def test_chain_literal_weights_are_not_normalized():
    lit = _chain_literal()
    total = sum(np.linalg.norm(v) ** 2 for v in lit.values())
    assert total == pytest.approx(240 / 256)


@given(st.floats(0.05, 3.0), st.floats(-3, 3))
def test_chain_branch_energy_bookkeeping(delta, offset):
    jg = JointGaussian.independent(-10 * delta - 3, -10 * delta - 3 - offset, delta)
    b = chain3_final(2.0, jg, 20 * delta + 10)
    h = np.kron(b.meta["h_sys"], np.eye(4))
    assert b.norm2 == pytest.approx(1.0, abs=1e-12)
    for t in b.terms:
        v = t.vector
        e = np.real(np.vdot(v, h @ v) / np.vdot(v, v))
        ka, kb = t.kicks
        assert ka + kb == pytest.approx(-(e + 2.0), abs=1e-12)


def test_sequential_requires_separation():
    with pytest.raises(ValueError):
        sequential_chain3_final(2.0, JointGaussian.independent(-5, -5, 1.0), 20)
    b = sequential_chain3_final(2.0, JointGaussian.independent(-5, -35, 1.0), 50)
    assert b.norm2 == pytest.approx(1.0)


def test_alice_intermediate_weights():
    # after Alice alone: weights 10/16, 4/16, 2/16 on chain energies -E0, 0, +E0 with kicks 0, -E0, -2E0
    b = alice_only_intermediate(2.0, JointGaussian.independent(-5, -40, 1.0), 20)
    w = {}
    for t, g in zip(b.terms, np.real(np.diag(b.clock_gram()))):
        w[t.a] = w.get(t.a, 0) + g * np.linalg.norm(t.vector) ** 2
    assert w[0.0] == pytest.approx(0.625) and w[2.0] == pytest.approx(0.25) and w[4.0] == pytest.approx(0.125)


def test_free_propagation_keeps_probabilities():
    b = chain3_final(2.0, JointGaussian.independent(-5, -5, 1.0), 20)
    b2 = free_propagate(b, 7.5)
    assert b2.time == pytest.approx(27.5)
    p1, p2 = b.pointer_probabilities(), b2.pointer_probabilities()
    for k in p1:
        assert p1[k] == pytest.approx(p2[k], abs=1e-12)


def test_phase_fields_merge_mirrored_terms():
    b = double_pointer_final(0.4, 1.0, JointGaussian.independent(-5, -5, 1.0), 20, convention="paper")
    fields = b.phase_fields()
    assert any(f["form"] == "max/min" for f in fields)
    assert len(fields) < len(b.terms)


def test_to_packets_definite_order_only():
    b = double_pointer_final(0.4, 1.0, JointGaussian.independent(-5, -5, 1.0), 20)
    with pytest.raises(ValueError):
        b.to_packets()
    b = double_pointer_final(0.4, 1.0, JointGaussian.independent(-5, -30, 1.0), 50)
    packets = b.to_packets()
    assert sum(np.linalg.norm(v) ** 2 for v, _ in packets) == pytest.approx(1.0)


def test_json_record_roundtrip():
    import json

    b = chain3_final(2.0, JointGaussian.independent(-5, -5, 1.0), 20)
    rec = json.loads(b.to_json())
    assert len(rec["terms"]) == len(b.terms)
    assert rec["dims"] == [2, 2, 2, 2, 2]
