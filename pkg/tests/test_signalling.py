import numpy as np
import pytest

from spinclock.signalling import (
    SignallingPoint,
    bob_marginal,
    chain3_scenario,
    is_non_decreasing,
    post_pointer_clock_entanglement,
    signalling_point,
    sweep,
    sweep_csv,
)
from spinclock.clock_sim import AutonomousScenario
from spinclock.wavepacket import WavePacket


def test_bob_marginal_is_a_state():
    rho = bob_marginal(chain3_scenario(1.0, n=64), alice_measures=True)
    assert rho.trace == pytest.approx(1.0, abs=1e-12)
    assert np.allclose(rho.matrix, rho.matrix.conj().T)
    assert np.linalg.eigvalsh(rho.matrix).min() > -1e-12


def test_alice_idle_gives_no_signal():
    p = signalling_point(chain3_scenario(1.0, n=64), alice_off=True)
    assert p.trace_distance <= 1e-12
    assert p.fidelity == pytest.approx(1.0, abs=1e-9)


def test_signal_grows_with_clock_sharpness():
    pts = sweep([0.05, 0.5, 3.0], n=96)
    assert is_non_decreasing(pts)
    assert pts[-1].trace_distance > 10 * pts[0].trace_distance
    assert [p.omega_delta for p in pts] == pytest.approx([0.05, 0.5, 3.0])


def test_bob_first_gives_no_signal():
    # Bob's clock leads by 20 widths: his record is complete before Alice acts
    p = signalling_point(chain3_scenario(1.0, offset=-20.0, n=128))
    assert p.trace_distance < 1e-9


def test_single_point_grid_and_csv():
    pts = sweep([1.0], n=64)
    lines = sweep_csv(pts).splitlines()
    assert lines[0] == "omega,delta,omega_delta,trace_distance,fidelity"
    assert len(lines) == 2


def test_sweep_rejects_empty_grid():
    with pytest.raises(ValueError):
        sweep([])


def test_point_validation():
    with pytest.raises(ValueError):
        SignallingPoint(1.0, 1.0, 1.5, 0.0)


def test_non_decreasing_helper():
    mk = lambda d: SignallingPoint(1.0, 1.0, d, 1.0)
    assert is_non_decreasing([mk(0.1), mk(0.2), mk(0.2)])
    assert not is_non_decreasing([mk(0.2), mk(0.1)])


def test_clocks_stay_entangled_after_sharp_measurement():
    clocks = (WavePacket(-27.0, 0.0, 3.0), WavePacket(-27.0, 0.0, 3.0))
    s = AutonomousScenario("single-spin-two-pointers", clocks=clocks, n=96)
    out = {o.outcome: o for o in post_pointer_clock_entanglement(s)}
    # ωΔ = 3: the spin conditioned on both pointers flipped is mixed
    assert out[(1, 1)].purity < 0.99
    sharp = AutonomousScenario("single-spin-two-pointers", clocks=(WavePacket(-0.45, 0.0, 0.05), WavePacket(-0.45, 0.0, 0.05)), n=96)
    out = {o.outcome: o for o in post_pointer_clock_entanglement(sharp)}
    assert out[(1, 1)].purity > 0.99


def test_bob_marginal_needs_chain():
    s = AutonomousScenario("single-spin-two-pointers", clocks=(WavePacket(-9.0, 0.0, 1.0), WavePacket(-9.0, 0.0, 1.0)), n=64)
    with pytest.raises(ValueError):
        bob_marginal(s, True)
