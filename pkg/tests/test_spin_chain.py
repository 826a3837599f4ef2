import numpy as np
import pytest
from hypothesis import given, strategies as st

from spinclock.spin_chain import (
    LABELS,
    NAMED_ENERGIES,
    ChainSpec,
    chain_hamiltonian,
    eigenspace_projectors,
    eigensystem,
    flip_all,
    named_eigenstate,
    pair_coupling,
)


def test_pair_coupling_spectrum():
    ev = np.sort(np.linalg.eigvalsh(pair_coupling().matrix))
    assert np.allclose(ev, [-1 / np.sqrt(2), 0, 0, 1 / np.sqrt(2)])


@pytest.mark.parametrize("label", LABELS)
def test_named_states_are_eigenstates(label):
    h = chain_hamiltonian(ChainSpec(3, 1.0)).matrix
    v = named_eigenstate(label).amplitudes
    e = NAMED_ENERGIES[label.removesuffix("_flip")]
    assert np.linalg.norm(v) == pytest.approx(1.0)
    assert np.allclose(h @ v, e * v, atol=1e-12)


def test_named_states_orthonormal_basis():
    m = np.array([named_eigenstate(l).amplitudes for l in LABELS])
    assert np.allclose(m @ m.conj().T, np.eye(8), atol=1e-12)


def test_unknown_label():
    with pytest.raises(KeyError):
        named_eigenstate("phi_x")


@given(st.floats(0.1, 10))
def test_spectrum_scales_with_energy_scale(e0):
    ev = np.sort(np.linalg.eigvalsh(chain_hamiltonian(ChainSpec(3, e0)).matrix))
    assert np.allclose(ev, e0 * np.array([-1, -1, 0, 0, 0, 0, 1, 1]), atol=1e-12)


@pytest.mark.parametrize("n", [2, 3, 4, 5])
def test_general_chain_commutes_with_global_flip(n):
    h = chain_hamiltonian(ChainSpec(n)).matrix
    f = flip_all(n)
    assert np.allclose(f @ h, h @ f)
    assert np.allclose(h, h.conj().T)


def test_multiplicities_and_projectors():
    es = eigensystem()
    assert es.multiplicities() == {-1.0: 2, 0.0: 4, 1.0: 2}
    ps = eigenspace_projectors()
    assert np.allclose(sum(p for _, p in ps), np.eye(8))


@pytest.mark.parametrize("bad", [dict(n_spins=1), dict(energy_scale=0.0)])
def test_spec_validation(bad):
    with pytest.raises(ValueError):
        ChainSpec(**bad)
