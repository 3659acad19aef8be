import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.stats import unitary_group

from qbsim.energetics import (
    collective_energy,
    collective_hamiltonian,
    ergotropy,
    passive_energy,
    qubit_hamiltonian,
    site_hamiltonian,
    stored_energy,
    trajectory_extrema,
)
from qbsim.errors import ValidationError
from qbsim.lindblad import Trajectory, evolve
from qbsim.qops import PROJ_E, PROJ_G, SIGMA_X, build_collective_ops
from qbsim.waveguide import ModelSpec, build_collective, build_single_atom, collective_spec

from conftest import random_density

H1 = qubit_hamiltonian()


def test_stored_energy_examples():
    assert stored_energy(PROJ_G, H1) == 0
    assert stored_energy(np.eye(2) / 2, H1) == pytest.approx(0.5)
    J = build_collective_ops(10)
    top = J.basis_state(5)
    assert stored_energy(top, collective_hamiltonian(10)) / 10 == pytest.approx(1.0)
    assert collective_energy(top, 10) == pytest.approx(1.0)


def test_dimension_mismatch():
    with pytest.raises(ValidationError):
        stored_energy(np.eye(3) / 3, H1)


def test_ergotropy_examples():
    assert ergotropy(PROJ_E, H1).ergotropy == pytest.approx(1.0)
    assert ergotropy(np.eye(2) / 2, H1).ergotropy == 0
    rep = ergotropy((np.eye(2) + 0.6 * SIGMA_X) / 2, H1)
    assert (rep.energy, rep.passive_energy, rep.ergotropy) == pytest.approx((0.5, 0.2, 0.3), abs=1e-14)


def test_ergotropy_rejects_non_hermitian():
    with pytest.raises(ValidationError):
        ergotropy(np.array([[0.5, 1], [0, 0.5]]), H1)
    with pytest.raises(ValidationError):
        ergotropy(PROJ_G, np.array([[0, 1], [0, 1]]))


def test_site_hamiltonian_counts_excitations():
    # basis |e e>, |e g>, |g e>, |g g>
    np.testing.assert_array_equal(np.diag(site_hamiltonian(2)).real, [2, 1, 1, 0])


@pytest.mark.parametrize("dim", [2, 5, 11])
def test_ergotropy_bounded_by_energy(dim, rng):
    H = np.diag(np.sort(rng.uniform(0, 3, dim)))
    H[0, 0] = 0
    for _ in range(100):
        rep = ergotropy(random_density(dim, rng, rank=int(rng.integers(1, dim + 1))), H)
        assert 0 <= rep.ergotropy <= rep.energy + 1e-12
        assert rep.energy == pytest.approx(rep.ergotropy + rep.passive_energy, abs=1e-12)


@given(st.integers(2, 8), st.integers(0, 2**32 - 1))
@settings(max_examples=40, deadline=None)
def test_passive_states_have_zero_ergotropy(dim, seed):
    rng = np.random.default_rng(seed)
    eps = np.sort(rng.uniform(0, 2, dim))
    pops = np.sort(rng.dirichlet(np.ones(dim)))[::-1]
    assert ergotropy(np.diag(pops), np.diag(eps)).ergotropy == pytest.approx(0, abs=1e-12)


def test_passive_energy_is_unitarily_invariant(rng):
    dim = 5
    H = np.diag(np.arange(dim, dtype=float))
    for _ in range(10):
        rho = random_density(dim, rng)
        U = unitary_group.rvs(dim, random_state=rng)
        rotated = U @ rho @ U.conj().T
        assert passive_energy(rotated, H) == pytest.approx(passive_energy(rho, H), abs=1e-10)
        a, b = ergotropy(rho, H), ergotropy(rotated, H)
        assert b.ergotropy - a.ergotropy == pytest.approx(b.energy - a.energy, abs=1e-10)


def test_constant_trajectory_extrema():
    traj = Trajectory(np.array([0.5, 1.0]), np.array([PROJ_G, PROJ_G]))
    assert trajectory_extrema(traj, H1) == (0.0, 0.0, (0.5, 0.5))


def test_empty_trajectory_rejected():
    with pytest.raises(ValidationError):
        trajectory_extrema(Trajectory(np.array([]), np.empty((0, 2, 2))), H1)


def test_feedback_boosts_single_atom_charging():
    t = np.linspace(0, 20, 201)

    def e_max(g):
        G = build_single_atom(ModelSpec("II", 1, 0.5, 0.5, g=g, Omega=0.5))
        return trajectory_extrema(evolve(G, PROJ_G, t), H1)[0]

    assert e_max(-2.0) > e_max(0.0)


def test_collective_phase_c_near_full_charge():
    N = 50
    G = build_collective(collective_spec(N, 0.01, -2.0, "II"))
    J = build_collective_ops(N)
    traj = evolve(G, J.ground_state(), np.linspace(0, 20, 81))
    E_max, W_max, _ = trajectory_extrema(traj, collective_hamiltonian(N), scale=N)
    assert 0.9 <= E_max <= 1.0
    assert W_max <= E_max
