"""Dense Lindblad generators, Liouvillians, time evolution and steady states.

A generator is stored in Kossakowski form

    L(rho) = -i[H, rho] + sum_kl C[k, l] (J_k rho J_l^+ - {J_l^+ J_k, rho}/2)

with a Hermitian rate matrix ``C``. Vectorization is column stacking, so
``vec(A rho B) = (B^T kron A) vec(rho)``.
"""
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import DOP853

from .errors import IntegrationError, PositivityError, SizeError, ValidationError
from .qops import dag

SPECTRUM_MAX_LIOUVILLE_DIM = 4096
CP_TOL = 1e-12
HERMITIAN_TOL = 1e-12


def vec(rho):
    return np.asarray(rho).reshape(-1, order="F")


def unvec(v, dim=None):
    if dim is None:
        dim = int(round(np.sqrt(v.size)))
    return np.asarray(v).reshape(dim, dim, order="F")


@dataclass(frozen=True)
class RateMatrix:
    """Hermitian matrix of dissipation rates over jump-operator indices."""

    entries: np.ndarray

    def __post_init__(self):
        C = np.atleast_2d(np.asarray(self.entries, dtype=complex))
        object.__setattr__(self, "entries", C)
        if C.shape[0] != C.shape[1]:
            raise ValidationError(f"rate matrix must be square, got {C.shape}")
        scale = max(1.0, float(np.max(np.abs(C))) if C.size else 1.0)
        if not np.allclose(C, dag(C), atol=HERMITIAN_TOL * scale, rtol=0):
            raise ValidationError("rate matrix must be Hermitian")
        if np.any(np.diag(C).real < -HERMITIAN_TOL * scale):
            raise ValidationError("rate matrix diagonal must be non-negative")

    @classmethod
    def from_pm(cls, minus_plus, plus_minus, plus_plus, minus_minus=None):
        """Rates for the jump pair ``(sigma^-, sigma^+)`` from ``Gamma_{mu nu}`` labels.

        ``Gamma_{mu nu}`` multiplies ``s^mu rho s^nu``; with ``s^nu = (s^{-nu})^+``
        this becomes entry ``[mu, -nu]`` of the Kossakowski matrix.
        """
        if minus_minus is None:
            minus_minus = np.conj(plus_plus)
        return cls(np.array([[minus_plus, minus_minus], [plus_plus, plus_minus]], dtype=complex))

    def __getitem__(self, idx):
        return self.entries[idx]

    @property
    def eigenvalues(self):
        return np.linalg.eigvalsh(self.entries)

    @property
    def cp_flag(self):
        ev = self.eigenvalues
        return bool(ev.size == 0 or ev.min() >= -CP_TOL)


@dataclass(frozen=True)
class Generator:
    H: np.ndarray
    jumps: tuple
    rates: RateMatrix
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        H = np.asarray(self.H, dtype=complex)
        object.__setattr__(self, "H", H)
        jumps = tuple(np.asarray(J, dtype=complex) for J in self.jumps)
        object.__setattr__(self, "jumps", jumps)
        rates = self.rates if isinstance(self.rates, RateMatrix) else RateMatrix(self.rates)
        object.__setattr__(self, "rates", rates)
        if H.ndim != 2 or H.shape[0] != H.shape[1]:
            raise ValidationError(f"Hamiltonian must be square, got {H.shape}")
        h_scale = max(1.0, float(np.max(np.abs(H))) if H.size else 1.0)
        if not np.allclose(H, dag(H), atol=HERMITIAN_TOL * h_scale, rtol=0):
            raise ValidationError("Hamiltonian must be Hermitian")
        if any(J.shape != H.shape for J in jumps):
            raise ValidationError("all jump operators must match the Hamiltonian dimension")
        if rates.entries.shape != (len(jumps), len(jumps)):
            raise ValidationError(
                f"rate matrix shape {rates.entries.shape} does not match {len(jumps)} jumps"
            )
        if not rates.cp_flag:
            warnings.warn(
                "rate matrix is not positive semidefinite; evolution may leave the state space",
                RuntimeWarning,
                stacklevel=3,
            )

    @property
    def dim(self):
        return self.H.shape[0]

    def canonical(self):
        """Diagonalize the rate matrix: returns ``(weights, operators)``.

        ``sum_kl C_kl J_k . J_l^+ = sum_a w_a A_a . A_a^+`` with ``A_a = sum_k U_ka J_k``.
        Weights may be negative for non-CP generators.
        """
        w, U = np.linalg.eigh(self.rates.entries)
        ops = [sum(U[k, a] * J for k, J in enumerate(self.jumps)) for a in range(len(w))]
        keep = [a for a in range(len(w)) if abs(w[a]) > 0]
        return w[keep], [ops[a] for a in keep]


def _check_state_dim(G, rho):
    rho = np.asarray(rho, dtype=complex)
    if rho.shape != G.H.shape:
        raise ValidationError(f"state shape {rho.shape} does not match generator dimension {G.dim}")
    return rho


def apply_generator(G, rho):
    """Direct action ``L(rho)`` of the generator on a matrix."""
    rho = _check_state_dim(G, rho)
    out = -1j * (G.H @ rho - rho @ G.H)
    C = G.rates.entries
    for k, Jk in enumerate(G.jumps):
        for l, Jl in enumerate(G.jumps):
            c = C[k, l]
            if c == 0:
                continue
            Jl_d = dag(Jl)
            out += c * (Jk @ rho @ Jl_d - 0.5 * (Jl_d @ Jk @ rho + rho @ Jl_d @ Jk))
    return out


class _FastRHS:
    # M + M^+ with M = -i H_eff rho + sum_a w_a A_a rho A_a^+ / 2. On Hermitian rho
    # this is exactly L(rho), and the result is Hermitian bit for bit, so the
    # integrator cannot accumulate an anti-Hermitian part from round-off.
    def __init__(self, G):
        self.dim = G.dim
        w, ops = G.canonical()
        K = sum((wa * dag(A) @ A for wa, A in zip(w, ops)), np.zeros_like(G.H))
        self.Heff = G.H - 0.5j * K
        self.terms = [(0.5 * wa, A, dag(A)) for wa, A in zip(w, ops)]

    def matrix(self, rho):
        out = -1j * (self.Heff @ rho)
        for wa, A, Ad in self.terms:
            out += wa * (A @ rho @ Ad)
        return out + dag(out)

    def __call__(self, t, y):
        return vec(self.matrix(unvec(y, self.dim)))


@dataclass(frozen=True)
class Superoperator:
    matrix: np.ndarray

    @property
    def dim(self):
        return self.matrix.shape[0]

    @property
    def hilbert_dim(self):
        return int(round(np.sqrt(self.dim)))

    def apply(self, rho):
        return unvec(self.matrix @ vec(rho), self.hilbert_dim)


def build_superoperator(G):
    D = G.dim
    eye = np.eye(D, dtype=complex)

    def lr(A, B):
        # vec(A rho B)
        return np.kron(B.T, A)

    L = -1j * (lr(G.H, eye) - lr(eye, G.H))
    C = G.rates.entries
    for k, Jk in enumerate(G.jumps):
        for l, Jl in enumerate(G.jumps):
            c = C[k, l]
            if c == 0:
                continue
            Jl_d = dag(Jl)
            JdJ = Jl_d @ Jk
            L += c * (lr(Jk, Jl_d) - 0.5 * lr(JdJ, eye) - 0.5 * lr(eye, JdJ))
    return Superoperator(L)


@dataclass
class Trajectory:
    """Sampled evolution. ``states`` is None when only records were kept."""

    times: np.ndarray
    states: np.ndarray | None
    records: list | None = None
    meta: dict = field(default_factory=dict)

    def __len__(self):
        return len(self.times)


def state_diagnostics(rho):
    """``(trace_defect, min_eig, hermiticity_defect)`` of a density matrix."""
    herm = float(np.max(np.abs(rho - dag(rho)))) if rho.size else 0.0
    tr = abs(np.trace(rho) - 1.0)
    min_eig = float(np.linalg.eigvalsh(0.5 * (rho + dag(rho))).min())
    return float(tr), min_eig, herm


def evolve(
    G,
    rho0,
    t_grid,
    rtol=1e-9,
    atol=None,
    record=None,
    keep_states=True,
    positivity_abort=-1e-6,
):
    """Integrate ``d rho/dt = L(rho)`` with an adaptive 8(5,3) Runge-Kutta scheme.

    ``rho0`` is the state at ``t_grid[0]``.
    ``record(t, rho)`` is called at every grid time when given and its return
    values are collected in ``Trajectory.records``. Set ``keep_states=False``
    for large Hilbert spaces.
    """
    rho0 = _check_state_dim(G, rho0)
    tr, min_eig, herm = state_diagnostics(rho0)
    if tr > 1e-8 or min_eig < -1e-8 or herm > 1e-10:
        raise ValidationError("initial state must be a Hermitian, unit-trace, PSD matrix")
    t_grid = np.asarray(t_grid, dtype=float)
    if t_grid.ndim != 1 or t_grid.size == 0 or np.any(np.diff(t_grid) <= 0):
        raise ValidationError("t_grid must be a non-empty, strictly increasing 1-D sequence")
    if atol is None:
        atol = rtol * 1e-2

    D = G.dim
    rhs = _FastRHS(G)
    states = np.empty((t_grid.size, D, D), dtype=complex) if keep_states else None
    records = [] if record is not None else None

    def emit(i, rho):
        if positivity_abort is not None:
            ev_min = float(np.linalg.eigvalsh(0.5 * (rho + dag(rho))).min())
            if ev_min < positivity_abort:
                raise PositivityError(
                    f"minimum eigenvalue {ev_min:.3e} at t={t_grid[i]:.6g} below {positivity_abort:g}",
                    t_reached=float(t_grid[i]),
                )
        if keep_states:
            states[i] = rho
        if records is not None:
            records.append(record(float(t_grid[i]), rho))

    i = 0
    # exact Hermitian start (a change below the validation tolerance)
    y = vec(0.5 * (rho0 + dag(rho0)))
    while i < t_grid.size and t_grid[i] <= t_grid[0]:
        emit(i, rho0)
        i += 1
    if i < t_grid.size:
        solver = DOP853(rhs, t_grid[0], y, t_grid[-1], rtol=rtol, atol=atol)
        while i < t_grid.size:
            msg = solver.step()
            if solver.status == "failed":
                raise IntegrationError(
                    f"integrator failed at t={solver.t:.6g}: {msg}", t_reached=float(solver.t)
                )
            interp = None
            while i < t_grid.size and t_grid[i] <= solver.t:
                if t_grid[i] == solver.t:
                    yi = solver.y
                else:
                    if interp is None:
                        interp = solver.dense_output()
                    yi = interp(t_grid[i])
                emit(i, unvec(yi, D))
                i += 1
    return Trajectory(t_grid, states, records, dict(G.meta))


def null_space(S, rel_tol=1e-10):
    """Right singular vectors of ``S`` whose singular values are below ``rel_tol * s_max``."""
    _, s, Vh = np.linalg.svd(S)
    cutoff = rel_tol * (s[0] if s.size and s[0] > 0 else 1.0)
    k = int(np.sum(s <= cutoff))
    return dag(Vh[Vh.shape[0] - k :]), s


def steady_state(G, rel_tol=1e-10, superop=None):
    """Null-space steady state of ``G``.

    Returns ``(rho_ss, degeneracy)``. With degeneracy > 1 the representative is
    the null-space element closest to the trace functional and a warning is issued.
    """
    D = G.dim
    L = (superop or build_superoperator(G)).matrix
    tr_row = vec(np.eye(D)).conj()
    basis, s = null_space(L, rel_tol)
    degeneracy = basis.shape[1]
    if degeneracy == 0:
        # numerically no exact null vector; fall back to the least singular direction
        _, _, Vh = np.linalg.svd(np.vstack([L, tr_row[None, :]]))
        x = dag(Vh[-1:])[:, 0]
        degeneracy = 1
    else:
        coeffs = dag(basis) @ tr_row.conj()
        x = basis @ coeffs
    if degeneracy > 1:
        warnings.warn(
            f"steady state is {degeneracy}-fold degenerate; returning one representative",
            RuntimeWarning,
            stacklevel=2,
        )
    rho = unvec(x, D)
    rho = rho / np.trace(rho)
    rho = 0.5 * (rho + dag(rho))
    return rho, degeneracy


def spectrum(G, superop=None):
    """Liouvillian eigenvalues sorted by descending real part (ties: ascending imaginary)."""
    if G.dim**2 > SPECTRUM_MAX_LIOUVILLE_DIM:
        raise SizeError(
            f"Liouville dimension {G.dim**2} exceeds the dense eigensolver budget "
            f"{SPECTRUM_MAX_LIOUVILLE_DIM}"
        )
    L = (superop or build_superoperator(G)).matrix
    ev = np.linalg.eigvals(L)
    order = np.lexsort((ev.imag, -ev.real))
    return ev[order]


def trace_distance(a, b):
    return 0.5 * float(np.abs(np.linalg.eigvalsh(0.5 * ((a - b) + dag(a - b)))).sum())
