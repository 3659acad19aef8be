"""Thermodynamic-limit magnetization dynamics of the collective battery.

All rates are in units of the rescaled collective rate ``Gamma = N * gamma``;
``n`` is 1 for setup I and 2 for setup II, ``xi = 2 g + 1``.
"""
from dataclasses import dataclass

import numpy as np
from scipy.integrate import solve_ivp
from scipy.optimize import brentq

from .errors import IntegrationError, SingularError, ValidationError

BTC_A = "BTC_A"
STATIONARY_B = "stationary_B"
STATIONARY_C = "stationary_C"
FIXED_POINT_TOL = 1e-10


@dataclass(frozen=True)
class MeanFieldState:
    m_x: float
    m_y: float
    m_z: float
    t: float = 0.0

    @classmethod
    def ground(cls):
        return cls(0.0, 0.0, -0.5)

    @property
    def vector(self):
        return np.array([self.m_x, self.m_y, self.m_z])

    @property
    def length_sq(self):
        return float(self.vector @ self.vector)

    @property
    def energy(self):
        return self.m_z + 0.5

    @property
    def ergotropy(self):
        # single-site state (1 + 2 m.sigma)/2 against H_B = |e><e|
        return self.m_z + float(np.sqrt(self.length_sq))


@dataclass(frozen=True)
class PhasePoint:
    Omega: float
    g: float
    n: int
    xi: float
    phase: str
    E_ss: float | None
    Omega_cri: float
    degenerate: bool = False


def _as_vector(s):
    if isinstance(s, MeanFieldState):
        return s.vector
    v = np.asarray(s, dtype=float)
    if v.shape != (3,):
        raise ValidationError(f"mean-field state needs three components, got shape {v.shape}")
    return v


def mf_derivatives(s, Omega, g, n, Gamma=1.0):
    return _rhs(_as_vector(s), Omega, g, n, Gamma)


def _rhs(v, Omega, g, n, Gamma):
    # v may be (3,) or (3, k)
    mx, my, mz = v
    xi = 2 * g + 1
    nG = n * Gamma
    return np.array(
        [
            nG * mz * mx,
            -2 * Omega * mz + nG * xi * my * mz,
            2 * Omega * my - nG * mx**2 - nG * xi * my**2,
        ]
    )


def jacobian(s, Omega, g, n, Gamma=1.0):
    mx, my, mz = _as_vector(s)
    xi = 2 * g + 1
    nG = n * Gamma
    return np.array(
        [
            [nG * mz, 0.0, nG * mx],
            [0.0, nG * xi * mz, -2 * Omega + nG * xi * my],
            [-2 * nG * mx, 2 * Omega - 2 * nG * xi * my, 0.0],
        ]
    )


@dataclass
class MeanFieldTrajectory:
    t: np.ndarray
    m: np.ndarray
    params: dict
    dense: object = None

    @property
    def energy(self):
        return self.m[:, 2] + 0.5

    @property
    def ergotropy(self):
        return self.m[:, 2] + np.linalg.norm(self.m, axis=1)

    @property
    def length_sq(self):
        return np.einsum("ij,ij->i", self.m, self.m)

    def states(self):
        return [MeanFieldState(*row, t=float(t)) for t, row in zip(self.t, self.m)]

    def __len__(self):
        return len(self.t)


def mf_evolve(s0, Omega, g, n, t_grid, Gamma=1.0, rtol=1e-12, atol=1e-14, dense=True):
    """Integrate the magnetization equations on ``t_grid`` with DOP853.

    With ``dense=True`` the continuous solution is kept for extremum searches.
    """
    v0 = _as_vector(s0)
    if np.linalg.norm(v0) > 0.5 + 1e-12:
        raise ValidationError(f"|m| = {np.linalg.norm(v0):.6g} exceeds 1/2")
    t_grid = np.asarray(t_grid, dtype=float)
    if t_grid.ndim != 1 or t_grid.size == 0 or np.any(np.diff(t_grid) <= 0):
        raise ValidationError("t_grid must be a non-empty, strictly increasing 1-D sequence")
    params = dict(Omega=Omega, g=g, n=n, Gamma=Gamma)
    if t_grid.size == 1:
        return MeanFieldTrajectory(t_grid, v0[None, :].copy(), params)
    sol = solve_ivp(
        lambda t, y: _rhs(y, Omega, g, n, Gamma),
        (t_grid[0], t_grid[-1]),
        v0,
        method="DOP853",
        t_eval=t_grid,
        rtol=rtol,
        atol=atol,
        dense_output=dense,
    )
    if sol.status != 0:
        t_reached = float(sol.t[-1]) if sol.t.size else float(t_grid[0])
        raise IntegrationError(f"mean-field integration failed near t={t_reached:.6g}: {sol.message}", t_reached)
    return MeanFieldTrajectory(sol.t, sol.y.T.copy(), params, sol.sol)


def energy_extrema(traj, t_start, t_end, points_per_unit=40):
    """Times and energies of local extrema of ``E(t)`` inside ``[t_start, t_end]``.

    Extrema are roots of ``dm_z/dt`` on the dense solution, refined with Brent's method.
    """
    if traj.dense is None:
        raise ValidationError("trajectory has no dense output")
    p = traj.params

    def slope(t):
        return _rhs(traj.dense(t), p["Omega"], p["g"], p["n"], p["Gamma"])[2]

    ts = np.linspace(t_start, t_end, max(3, int((t_end - t_start) * points_per_unit) + 1))
    d = slope(ts)
    brackets = np.nonzero(d[:-1] * d[1:] < 0)[0]
    exact = np.nonzero(d == 0)[0]
    times = [ts[i] for i in exact]
    times += [brentq(slope, ts[i], ts[i + 1], xtol=1e-13) for i in brackets]
    times = np.sort(np.array(times, dtype=float))
    energies = traj.dense(times)[2] + 0.5 if times.size else np.array([])
    return times, energies


def oscillation_amplitude(traj, t_start, t_end):
    """Peak-to-peak energy swing over a window, using refined extrema plus the window edges."""
    _, e_ext = energy_extrema(traj, t_start, t_end)
    edges = np.array([traj.dense(t_start)[2], traj.dense(t_end)[2]]) + 0.5
    vals = np.concatenate([e_ext, edges])
    return float(vals.max() - vals.min())


def critical_drive(g, n, Gamma=1.0):
    return n * Gamma * abs(2 * g + 1) / 4


def stationary_energy(Omega, g, n, Gamma=1.0):
    """Closed-form stable stationary energy per atom; None above the critical drive."""
    xi = 2 * g + 1
    if xi == 0:
        return None
    arg = 0.25 - 4 * Omega**2 / (n**2 * Gamma**2 * xi**2)
    if arg < 0:
        return None
    return float(-np.sign(xi) * np.sqrt(arg) + 0.5)


def classify_phase(Omega, g, n, Gamma=1.0):
    if Gamma <= 0:
        raise ValidationError("Gamma must be positive")
    xi = 2 * g + 1
    omega_cri = critical_drive(g, n, Gamma)
    degenerate = xi == 0
    if Omega > omega_cri:
        phase, e_ss = BTC_A, None
    else:
        phase = STATIONARY_B if xi >= 0 else STATIONARY_C
        e_ss = stationary_energy(Omega, g, n, Gamma)
    return PhasePoint(Omega, g, n, xi, phase, e_ss, omega_cri, degenerate)


def fixed_points(Omega, g, n, Gamma=1.0):
    """The two ``m_x = 0`` stationary points ``(selected, mirrored)``; empty in the BTC phase."""
    xi = 2 * g + 1
    if xi == 0 or Omega > critical_drive(g, n, Gamma):
        return []
    my = 2 * Omega / (n * Gamma * xi)
    mz = np.sqrt(max(0.25 - my**2, 0.0))
    sel = -np.sign(xi) * mz
    return [MeanFieldState(0.0, my, sel), MeanFieldState(0.0, my, -sel)]


def stability(fixed_point, Omega, g, n, Gamma=1.0):
    """Jacobian eigenvalues at a fixed point (stable iff all real parts <= 0)."""
    rhs = mf_derivatives(fixed_point, Omega, g, n, Gamma)
    if np.max(np.abs(rhs)) > FIXED_POINT_TOL:
        raise ValidationError(f"not a fixed point: |dm/dt| = {np.max(np.abs(rhs)):.3e}")
    return np.linalg.eigvals(jacobian(fixed_point, Omega, g, n, Gamma))


def conserved_M(s, Omega, g, n, kappa, Gamma=1.0):
    """``Gamma * m_x**kappa / (Gamma * kappa * m_y - Omega)``.

    For negative ``m_x`` the power is taken of ``|m_x|`` and the sign kept;
    ``m_x`` never changes sign along a trajectory, so conservation is unaffected.
    """
    mx, my, _ = _as_vector(s)
    den = Gamma * kappa * my - Omega
    if abs(den) <= 1e-12:
        raise SingularError(f"denominator {den:.3e} vanishes")
    num = 0.0 if mx == 0 else np.sign(mx) * abs(mx) ** kappa
    return float(Gamma * num / den)


def kappa_drift_scan(s0, Omega, g, n, kappas, t_max=2.0, samples=401, Gamma=1.0):
    """Relative drift of ``conserved_M`` along one trajectory for each candidate exponent.

    Keep ``t_max`` short: on the stationary side the denominator decays to zero
    and the ratio loses all precision.
    """
    traj = mf_evolve(s0, Omega, g, n, np.linspace(0, t_max, samples), Gamma)
    out = {}
    for kappa in kappas:
        try:
            M = np.array([conserved_M(row, Omega, g, n, kappa, Gamma) for row in traj.m])
        except SingularError:
            out[kappa] = np.inf
            continue
        out[kappa] = float(np.max(np.abs(M - M[0])) / max(abs(M[0]), 1e-300))
    return out


def classify_trajectory(Omega, g, n, t_final=200.0, threshold=1e-4, Gamma=1.0, s0=None):
    """Label the ground-start dynamics BTC or stationary from its last-quarter oscillation."""
    s0 = MeanFieldState.ground() if s0 is None else s0
    t_window = 0.75 * t_final
    head = mf_evolve(s0, Omega, g, n, [0.0, t_window], Gamma, rtol=1e-8, atol=1e-10, dense=False)
    v = head.m[-1]
    # integrator drift can push |m| a hair past 1/2; project back to the initial length
    v = v * (np.linalg.norm(_as_vector(s0)) / np.linalg.norm(v))
    tail = mf_evolve(v, Omega, g, n, [t_window, t_final], Gamma, rtol=1e-8, atol=1e-10)
    amp = oscillation_amplitude(tail, t_window, t_final)
    return ("BTC" if amp > threshold else "stationary"), amp
