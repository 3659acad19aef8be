import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qbsim.errors import SingularError, ValidationError
from qbsim.meanfield import (
    BTC_A,
    STATIONARY_B,
    STATIONARY_C,
    MeanFieldState,
    classify_phase,
    classify_trajectory,
    conserved_M,
    critical_drive,
    energy_extrema,
    fixed_points,
    jacobian,
    kappa_drift_scan,
    mf_derivatives,
    mf_evolve,
    stability,
    stationary_energy,
)

E_B = 0.5 - np.sqrt(5) / 6
TILTED = MeanFieldState(0.3, 0.1, -np.sqrt(0.25 - 0.09 - 0.01))


def random_state(rng, radius=0.5):
    v = rng.normal(size=3)
    return MeanFieldState(*(radius * v / np.linalg.norm(v)))


def central_jacobian(s, Omega, g, n, h=1e-6):
    v = s.vector
    cols = []
    for k in range(3):
        dv = np.zeros(3)
        dv[k] = h
        cols.append((mf_derivatives(v + dv, Omega, g, n) - mf_derivatives(v - dv, Omega, g, n)) / (2 * h))
    return np.array(cols).T


def test_derivative_examples():
    np.testing.assert_allclose(mf_derivatives(MeanFieldState.ground(), 0.7, 1.3, 2), [0, 0.7, 0])
    np.testing.assert_allclose(mf_derivatives((0, 0, 0.5), 0.0, 0.4, 1), [0, 0, 0])


@given(st.integers(0, 2**32 - 1), st.floats(-3, 3), st.floats(0, 3), st.sampled_from([1, 2]))
@settings(max_examples=50, deadline=None)
def test_radial_derivative_vanishes(seed, g, Omega, n):
    s = random_state(np.random.default_rng(seed))
    assert abs(s.vector @ mf_derivatives(s, Omega, g, n)) < 1e-14


def test_state_shape_validation():
    with pytest.raises(ValidationError):
        mf_derivatives([0, 0], 1, 1, 2)


def test_analytic_jacobian_matches_central_differences(rng):
    for _ in range(5):
        s = random_state(rng, 0.4)
        np.testing.assert_allclose(jacobian(s, 0.8, 0.6, 2), central_jacobian(s, 0.8, 0.6, 2), atol=1e-8)


def test_length_conservation(rng):
    t = np.linspace(0, 100, 11)
    for _ in range(20):
        s0 = random_state(rng, rng.uniform(0.1, 0.5))
        g, Omega, n = rng.uniform(-3, 2), rng.uniform(0, 3), int(rng.integers(1, 3))
        traj = mf_evolve(s0, Omega, g, n, t, dense=False)
        assert np.abs(traj.length_sq - s0.length_sq).max() <= 1e-9


def test_evolve_rejects_overlong_vector():
    with pytest.raises(ValidationError):
        mf_evolve((0.4, 0.4, 0.0), 1, 1, 2, [0, 1])


def test_phase_b_relaxes_to_closed_form():
    traj = mf_evolve(MeanFieldState.ground(), 1.0, 1.0, 2, [0, 200])
    assert traj.energy[-1] == pytest.approx(E_B, abs=1e-4)


def test_phase_c_nearly_full():
    traj = mf_evolve(MeanFieldState.ground(), 0.01, -2.0, 2, [0, 200])
    assert traj.energy[-1] == pytest.approx(stationary_energy(0.01, -2.0, 2), abs=1e-4)
    assert traj.energy[-1] > 0.9999


def test_btc_oscillation_persists():
    traj = mf_evolve(MeanFieldState.ground(), 2.0, 1.0, 2, [0, 200])
    times, energies = energy_extrema(traj, 150, 200)
    peaks = energies[1:-1][(energies[1:-1] > energies[:-2]) & (energies[1:-1] > energies[2:])]
    assert peaks.size >= 5
    assert np.abs(np.diff(peaks)).max() < 1e-6


def test_pure_site_state_has_ergotropy_equal_to_energy():
    # |m| = 1/2 keeps each site pure, and a pure state's passive energy is zero
    traj = mf_evolve(MeanFieldState.ground(), 0.5, 0.2, 1, np.linspace(0, 5, 6))
    np.testing.assert_allclose(traj.ergotropy, traj.energy, atol=1e-10)


def test_mixed_site_state_ergotropy():
    s = MeanFieldState(0.3, 0.0, 0.0)
    # populations 0.8 / 0.2 against levels 0 / 1: passive energy 0.2
    assert s.ergotropy == pytest.approx(0.3)
    assert s.energy == pytest.approx(0.5)


def test_phase_examples():
    a = classify_phase(2.0, 1.0, 2)
    assert a.phase == BTC_A and a.Omega_cri == 1.5 and a.E_ss is None
    b = classify_phase(1.0, 1.0, 2)
    assert b.phase == STATIONARY_B and b.E_ss == pytest.approx(E_B, abs=1e-12)
    c = classify_phase(0.01, -2.0, 2)
    assert c.phase == STATIONARY_C and c.E_ss > 0.5 and c.E_ss == pytest.approx(0.99998889, abs=1e-8)


def test_degenerate_line():
    p = classify_phase(0.3, -0.5, 2)
    assert p.degenerate and p.Omega_cri == 0 and p.phase == BTC_A


def test_invalid_gamma():
    with pytest.raises(ValidationError):
        classify_phase(1.0, 1.0, 2, Gamma=0)


@given(st.floats(0, 5), st.floats(-4, 4), st.sampled_from([1, 2]))
def test_phase_invariants(Omega, g, n):
    p = classify_phase(Omega, g, n)
    assert p.Omega_cri == n * abs(2 * g + 1) / 4
    if Omega > p.Omega_cri:
        assert p.phase == BTC_A
    else:
        assert p.phase == (STATIONARY_B if 2 * g + 1 >= 0 else STATIONARY_C)
        assert 0 <= p.E_ss <= 1


def test_selected_branch_is_stable_and_mirror_is_not():
    sel, mirror = fixed_points(1.0, 1.0, 2)
    assert sel.energy == pytest.approx(E_B)
    ev_sel = stability(sel, 1.0, 1.0, 2)
    ev_mir = stability(mirror, 1.0, 1.0, 2)
    oracle_sel = np.linalg.eigvals(central_jacobian(sel, 1.0, 1.0, 2))
    np.testing.assert_allclose(np.sort_complex(ev_sel), np.sort_complex(oracle_sel), atol=1e-7)
    assert ev_sel.real.max() <= 1e-12
    assert ev_mir.real.max() > 0


def test_south_pole_stability_without_drive():
    ev = stability(MeanFieldState.ground(), 0.0, 0.0, 1)
    assert ev.real.max() <= 0
    assert np.sort(ev.real) == pytest.approx([-0.5, -0.5, 0.0])


def test_stability_rejects_non_fixed_point():
    with pytest.raises(ValidationError):
        stability(MeanFieldState(0.1, 0.1, -0.3), 1.0, 1.0, 2)


def test_no_fixed_points_in_btc_phase():
    assert fixed_points(2.0, 1.0, 2) == []


def test_conserved_m_examples():
    traj = mf_evolve(MeanFieldState.ground(), 0.7, 1.0, 2, np.linspace(0, 10, 21))
    assert all(conserved_M(s, 0.7, 1.0, 2, 3.0) == 0 for s in traj.states())
    assert conserved_M(MeanFieldState(0.0, 0.2, -0.1), 0.5, 1.0, 2, 1.5) == 0
    with pytest.raises(SingularError):
        conserved_M(MeanFieldState(0.1, 0.5, 0.0), 1.5, 1.0, 2, 3.0)


def test_kappa_identification_experiment():
    drift = kappa_drift_scan(TILTED, 0.5, 1.0, 2, [1.0, 2.0, 3.0, 4.0])
    assert drift[3.0] < 1e-6
    assert min(drift[1.0], drift[2.0], drift[4.0]) > 1e-3


def test_classify_trajectory_examples():
    assert classify_trajectory(2.0, 1.0, 2)[0] == "BTC"
    assert classify_trajectory(1.0, 1.0, 2)[0] == "stationary"
    assert critical_drive(1.0, 2) == 1.5


def test_steady_value_agreement_on_coarse_grid():
    for Omega in (0.2, 0.8, 1.3):
        for g in (-3.0, -2.0, 0.5, 1.5):
            p = classify_phase(Omega, g, 2)
            if p.phase == BTC_A or abs(Omega - p.Omega_cri) <= 0.05:
                continue
            traj = mf_evolve(MeanFieldState.ground(), Omega, g, 2, [0, 200], dense=False)
            assert abs(traj.energy[-1] - p.E_ss) <= 1e-4, (Omega, g)
