"""Pauli, ladder and collective spin operators.

Basis conventions used everywhere in the package:

* single qubit: ``(|e>, |g>)`` so ``|e> = [1, 0]``;
* N qubits: lexicographic tensor product, site 0 is the leftmost factor;
* Dicke block: ``|N/2, m>`` ordered by descending ``m``.
"""
from dataclasses import dataclass
from math import comb

import numpy as np

from .errors import SizeError, ValidationError

N_MAX = 12

SIGMA_MINUS = np.array([[0, 0], [1, 0]], dtype=complex)
SIGMA_PLUS = SIGMA_MINUS.conj().T
SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=complex)
PROJ_E = np.array([[1, 0], [0, 0]], dtype=complex)
PROJ_G = np.array([[0, 0], [0, 1]], dtype=complex)
EYE2 = np.eye(2, dtype=complex)


def dag(a):
    return a.conj().T


def commutator(a, b):
    return a @ b - b @ a


def anticommutator(a, b):
    return a @ b + b @ a


def is_hermitian(a, tol=1e-12):
    a = np.asarray(a)
    return a.ndim == 2 and a.shape[0] == a.shape[1] and np.allclose(a, dag(a), atol=tol, rtol=0)


def embed(local_ops, N):
    """Tensor product with ``local_ops[j]`` on site j and identity elsewhere.

    ``local_ops`` maps site index (0-based) to a 2x2 array.
    """
    out = np.ones((1, 1), dtype=complex)
    for j in range(N):
        out = np.kron(out, local_ops.get(j, EYE2))
    return out


class _SiteSequence:
    # Lazily embedded single-site operator; avoids holding N dense 2^N matrices.
    def __init__(self, local, N):
        self._local = local
        self._N = N

    def __len__(self):
        return self._N

    def __getitem__(self, j):
        if not -self._N <= j < self._N:
            raise IndexError(j)
        return embed({j % self._N: self._local}, self._N)

    def __iter__(self):
        return (self[j] for j in range(self._N))


@dataclass(frozen=True)
class SiteOperatorSet:
    """Site-resolved ladder and x operators for N qubits (0-based site index)."""

    N: int

    @property
    def dim(self):
        return 2**self.N

    @property
    def sigma_minus(self):
        return _SiteSequence(SIGMA_MINUS, self.N)

    @property
    def sigma_plus(self):
        return _SiteSequence(SIGMA_PLUS, self.N)

    @property
    def sigma_x(self):
        return _SiteSequence(SIGMA_X, self.N)

    @property
    def excited(self):
        return _SiteSequence(PROJ_E, self.N)

    def pair(self, op_j, j, op_l, l):
        """Product ``op_j`` on site j times ``op_l`` on site l, built by kron."""
        if j == l:
            return embed({j: op_j @ op_l}, self.N)
        return embed({j: op_j, l: op_l}, self.N)

    def total(self, local, weights=None):
        """``sum_j weights[j] * local_j``."""
        if weights is None:
            weights = np.ones(self.N)
        out = np.zeros((self.dim, self.dim), dtype=complex)
        for j in range(self.N):
            out += weights[j] * embed({j: local}, self.N)
        return out

    def ground_state(self):
        rho = np.zeros((self.dim, self.dim), dtype=complex)
        rho[-1, -1] = 1.0
        return rho


def build_site_operators(N):
    if not isinstance(N, (int, np.integer)) or N < 1:
        raise ValidationError(f"atom count must be a positive integer, got {N!r}")
    if N > N_MAX:
        raise SizeError(f"full-model builders are limited to N <= {N_MAX} (2^N memory), got N={N}")
    return SiteOperatorSet(int(N))


@dataclass(frozen=True)
class CollectiveOps:
    """Collective spin-N/2 operators in the Dicke basis (descending m)."""

    N: int
    Jx: np.ndarray
    Jy: np.ndarray
    Jz: np.ndarray
    Jplus: np.ndarray
    Jminus: np.ndarray

    @property
    def dim(self):
        return self.N + 1

    @property
    def j(self):
        return self.N / 2

    @property
    def m_values(self):
        return self.j - np.arange(self.N + 1)

    def ground_state(self):
        rho = np.zeros((self.dim, self.dim), dtype=complex)
        rho[-1, -1] = 1.0
        return rho

    def basis_state(self, m):
        """Projector onto ``|N/2, m>``."""
        k = int(round(self.j - m))
        if not 0 <= k <= self.N or abs(self.j - k - m) > 1e-12:
            raise ValidationError(f"m={m} not in spin-{self.j} multiplet")
        rho = np.zeros((self.dim, self.dim), dtype=complex)
        rho[k, k] = 1.0
        return rho


def build_collective_ops(N):
    if not isinstance(N, (int, np.integer)) or N < 1:
        raise ValidationError(f"atom count must be a positive integer, got {N!r}")
    j = N / 2
    m = j - np.arange(N + 1)
    # <j, m+1| J+ |j, m> sits one row above the diagonal in descending-m order
    ladder = np.sqrt(j * (j + 1) - m[1:] * (m[1:] + 1))
    Jplus = np.diag(ladder, k=1).astype(complex)
    Jminus = dag(Jplus)
    Jx = (Jplus + Jminus) / 2
    Jy = (Jplus - Jminus) / 2j
    Jz = np.diag(m).astype(complex)
    return CollectiveOps(int(N), Jx, Jy, Jz, Jplus, Jminus)


def dicke_isometry(N):
    """Columns are the symmetric Dicke states ``|N/2, m>`` in the 2^N site basis."""
    build_site_operators(N)
    dim = 2**N
    # number of ground-state qubits in each basis index (bit 1 == |g>)
    n_ground = np.array([bin(i).count("1") for i in range(dim)])
    V = np.zeros((dim, N + 1), dtype=complex)
    for k in range(N + 1):
        mask = n_ground == k
        V[mask, k] = 1.0 / np.sqrt(comb(N, k))
    return V


def project_to_dicke(rho_full, N, tol=1e-8):
    """Block of ``rho_full`` on the maximal-j symmetric subspace.

    Returns ``(block, population)``. The block is not renormalized; its trace
    is the symmetric-subspace population, so ``population < 1`` flags leakage.
    """
    rho_full = np.asarray(rho_full, dtype=complex)
    if rho_full.shape != (2**N, 2**N):
        raise ValidationError(f"expected a {2**N}x{2**N} density matrix, got {rho_full.shape}")
    tr = np.trace(rho_full)
    if abs(tr - 1) > tol:
        raise ValidationError(f"density matrix trace is {tr:.6g}, expected 1")
    V = dicke_isometry(N)
    block = dag(V) @ rho_full @ V
    return block, float(np.trace(block).real)
