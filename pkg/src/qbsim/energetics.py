"""Stored energy, passive states and ergotropy of battery states."""
from dataclasses import dataclass

import numpy as np

from .errors import ValidationError
from .qops import PROJ_E, build_collective_ops, build_site_operators, dag

ERGOTROPY_CLAMP = 1e-12


@dataclass(frozen=True)
class EnergyReport:
    energy: float
    ergotropy: float
    passive_energy: float
    basis: str = "site"


def qubit_hamiltonian(omega0=1.0):
    return omega0 * PROJ_E


def site_hamiltonian(N, omega0=1.0):
    """``omega0 * sum_j |e_j><e_j|`` on 2^N sites (ground energy 0)."""
    build_site_operators(N)
    idx = np.arange(2**N)
    # bit (N-1-j) of the basis index is 0 when site j is excited
    n_exc = sum(((idx >> (N - 1 - j)) & 1 == 0).astype(float) for j in range(N))
    return omega0 * np.diag(n_exc).astype(complex)


def collective_hamiltonian(N, omega0=1.0):
    """``omega0 * (J_z + N/2)`` in the Dicke basis."""
    J = build_collective_ops(N)
    return omega0 * (J.Jz + N / 2 * np.eye(N + 1))


def _check_pair(rho, H_B):
    rho = np.asarray(rho, dtype=complex)
    H_B = np.asarray(H_B, dtype=complex)
    if rho.shape != H_B.shape or rho.ndim != 2 or rho.shape[0] != rho.shape[1]:
        raise ValidationError(f"state {rho.shape} and Hamiltonian {H_B.shape} must be equal square shapes")
    return rho, H_B


def stored_energy(rho, H_B):
    rho, H_B = _check_pair(rho, H_B)
    return float(np.trace(H_B @ rho).real)


def collective_energy(rho, N):
    """Per-atom energy ``<J_z>/N + 1/2`` (units of omega0)."""
    m = build_collective_ops(N).m_values
    return float(np.real(np.diag(rho)) @ m) / N + 0.5


def passive_energy(rho, H_B):
    rho, H_B = _check_pair(rho, H_B)
    r = np.sort(np.linalg.eigvalsh(rho))[::-1]
    eps = np.sort(np.linalg.eigvalsh(H_B))
    return float(r @ eps)


def ergotropy(rho, H_B, basis="site", tol=1e-10):
    """Energy, passive energy and ergotropy of ``rho`` for battery Hamiltonian ``H_B``.

    Eigenvalue ties in ``rho`` do not matter: equal populations multiply the
    same partial sum of energy levels.
    """
    rho, H_B = _check_pair(rho, H_B)
    scale = max(1.0, float(np.max(np.abs(rho))), float(np.max(np.abs(H_B))))
    if not np.allclose(rho, dag(rho), atol=tol * scale, rtol=0):
        raise ValidationError("state must be Hermitian")
    if not np.allclose(H_B, dag(H_B), atol=tol * scale, rtol=0):
        raise ValidationError("battery Hamiltonian must be Hermitian")
    energy = stored_energy(rho, H_B)
    passive = passive_energy(rho, H_B)
    work = energy - passive
    if -ERGOTROPY_CLAMP <= work < 0:
        work = 0.0
    return EnergyReport(energy, work, passive, basis)


def trajectory_extrema(traj, H_B, scale=1.0):
    """``(E_max, W_max, (t_E, t_W))`` over a sampled trajectory.

    ``scale`` divides energies (use N for per-atom values).
    """
    if traj.states is None or len(traj.times) == 0:
        raise ValidationError("trajectory has no stored states")
    E = np.empty(len(traj.times))
    W = np.empty(len(traj.times))
    for i, rho in enumerate(traj.states):
        rep = ergotropy(0.5 * (rho + dag(rho)), H_B)
        E[i], W[i] = rep.energy / scale, rep.ergotropy / scale
    iE, iW = int(np.argmax(E)), int(np.argmax(W))
    return float(E[iE]), float(W[iW]), (float(traj.times[iE]), float(traj.times[iW]))
