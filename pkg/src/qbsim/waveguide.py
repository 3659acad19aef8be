"""Generators for the waveguide-QED battery setups.

Setup I couples the atoms to an open waveguide; setup II terminates the
waveguide with a mirror so left-emitted light returns (coherent feedback with
mirror phase ``phi[0]``). Both include homodyne measurement feedback of
strength ``g`` on the right-going output, fed back into the drive.

Phases are per-gap: ``phi[0]`` is the mirror phase, ``phi[s]`` (s >= 1) the
propagation phase between atoms s-1 and s.
"""
from dataclasses import dataclass, replace

import numpy as np

from .errors import ValidationError
from .lindblad import Generator, RateMatrix
from .qops import (
    PROJ_E,
    SIGMA_MINUS,
    SIGMA_PLUS,
    SIGMA_X,
    anticommutator,
    build_collective_ops,
    build_site_operators,
    dag,
)

TWO_PI = 2 * np.pi
_SETUP_N = {"I": 1, "II": 2}


@dataclass(frozen=True)
class ModelSpec:
    setup: str = "I"
    N: int = 1
    gamma_R: float = 0.5
    gamma_L: float = 0.5
    g: float = 0.0
    Omega: float = 0.0
    phi: tuple | None = None
    omega0: float = 1.0

    def __post_init__(self):
        setup = {1: "I", 2: "II"}.get(self.setup, self.setup)
        if setup not in _SETUP_N:
            raise ValidationError(f"setup must be 'I' or 'II', got {self.setup!r}")
        object.__setattr__(self, "setup", setup)
        if int(self.N) != self.N or self.N < 1:
            raise ValidationError(f"N must be a positive integer, got {self.N!r}")
        object.__setattr__(self, "N", int(self.N))
        if self.gamma_R < 0 or self.gamma_L < 0 or self.gamma_R + self.gamma_L <= 0:
            raise ValidationError("decay rates need gamma_R, gamma_L >= 0 and gamma_R + gamma_L > 0")
        phi = (TWO_PI,) * self.N if self.phi is None else tuple(float(p) for p in self.phi)
        if len(phi) != self.N:
            raise ValidationError(f"phi needs one entry per atom ({self.N}), got {len(phi)}")
        if not all(np.isfinite(phi)):
            raise ValidationError("phases must be finite reals")
        object.__setattr__(self, "phi", phi)

    @property
    def gamma(self):
        return self.gamma_R + self.gamma_L

    @property
    def n(self):
        return _SETUP_N[self.setup]

    @property
    def achiral(self):
        return abs(self.gamma_R - self.gamma_L) <= 1e-12 * self.gamma

    def with_(self, **changes):
        return replace(self, **changes)


def collective_spec(N, Omega, g, setup="II", Gamma=1.0, omega0=1.0):
    """Achiral spec with per-atom rate ``gamma = Gamma / N`` (``Omega`` in the same units as ``Gamma``)."""
    gamma = Gamma / N
    return ModelSpec(setup=setup, N=N, gamma_R=gamma / 2, gamma_L=gamma / 2, g=g, Omega=Omega, omega0=omega0)


def _phases_are_trivial(phi, tol=1e-9):
    r = np.mod(np.asarray(phi), TWO_PI)
    return bool(np.all(np.minimum(r, TWO_PI - r) <= tol))


def single_atom_rates(spec):
    """``{'-+', '+-', '++', '--'}`` rates of the single-atom reduction."""
    gR, gL, g = spec.gamma_R, spec.gamma_L, spec.g
    if spec.setup == "I":
        pp = gR * g * (g + 1)
        return {"-+": gR * (g + 1) ** 2 + gL, "+-": gR * g**2, "++": pp + 0j, "--": pp + 0j}
    phi1 = spec.phi[0]
    root = np.sqrt(gR * gL)
    pp = gR * g * (g + 1) + root * g * np.exp(-1j * phi1)
    return {
        "-+": spec.gamma + gR * g * (g + 2) + 2 * root * (g + 1) * np.cos(phi1),
        "+-": gR * g**2,
        "++": pp,
        "--": np.conj(pp),
    }


def frequency_shift(spec):
    """Coherent-feedback Lamb shift of the single atom in setup II (zero in setup I)."""
    if spec.setup == "I":
        return 0.0
    return np.sqrt(spec.gamma_R * spec.gamma_L) * np.sin(spec.phi[0]) * (spec.g + 1)


def build_single_atom(spec):
    if spec.N != 1:
        raise ValidationError(f"single-atom builder needs N = 1, got N = {spec.N}")
    r = single_atom_rates(spec)
    H = spec.Omega * SIGMA_X + frequency_shift(spec) * PROJ_E
    rates = RateMatrix.from_pm(r["-+"], r["+-"], r["++"], r["--"])
    return Generator(H, (SIGMA_MINUS, SIGMA_PLUS), rates, meta={"model": "single", "spec": spec})


def _cumulative_phases(phi):
    phi = np.asarray(phi)
    N = phi.size
    right = np.array([phi[j + 1 :].sum() for j in range(N)])
    left = np.array([phi[1 : j + 1].sum() for j in range(N)])
    return right, left, phi[1:].sum()


def _pair_phase(phi, l, j):
    lo, hi = min(l, j), max(l, j)
    return np.asarray(phi)[lo + 1 : hi + 1].sum()


def _common_parts(spec):
    ops = build_site_operators(spec.N)
    right, left, total = _cumulative_phases(spec.phi)
    L_R = np.sqrt(spec.gamma_R) * ops.total(SIGMA_MINUS, np.exp(1j * right))
    L_L = np.sqrt(spec.gamma_L) * ops.total(SIGMA_MINUS, np.exp(1j * left))
    F = 1j * np.sqrt(spec.gamma_R) * spec.g * ops.total(SIGMA_X)
    H_d = spec.Omega * ops.total(SIGMA_X)

    H_RL = np.zeros((ops.dim, ops.dim), dtype=complex)
    for j in range(spec.N):
        for l in range(spec.N):
            if j == l:
                continue
            rate = spec.gamma_R if j > l else spec.gamma_L
            if rate == 0:
                continue
            H_RL += rate / 2j * np.exp(1j * _pair_phase(spec.phi, l, j)) * ops.pair(SIGMA_PLUS, j, SIGMA_MINUS, l)
    H_RL = H_RL + dag(H_RL)
    return ops, L_R, L_L, F, H_d, H_RL, np.exp(1j * total)


def build_full_setup1(spec):
    if spec.setup != "I":
        raise ValidationError("build_full_setup1 needs setup 'I'")
    ops, L_R, L_L, F, H_d, H_RL, _ = _common_parts(spec)
    H_f = dag(F) @ L_R / 2
    H = H_RL + H_f + dag(H_f) + H_d
    return Generator(H, (L_R - 1j * F, L_L), np.eye(2), meta={"model": "full", "spec": spec})


def build_full_setup2(spec):
    if spec.setup != "II":
        raise ValidationError("build_full_setup2 needs setup 'II'")
    ops, L_R, L_L, F, H_d, H_RL, S_R = _common_parts(spec)
    mirror = np.exp(1j * spec.phi[0]) * S_R
    out = mirror * L_L + L_R
    H_f = dag(F) @ out / 2
    H_phi = mirror * dag(L_R) @ L_L / 2j
    H = H_RL + H_f + dag(H_f) + H_phi + dag(H_phi) + H_d
    return Generator(H, (out - 1j * F,), np.eye(1), meta={"model": "full", "spec": spec})


def build_full(spec):
    return build_full_setup1(spec) if spec.setup == "I" else build_full_setup2(spec)


def collective_rates(spec):
    gamma, g, n = spec.gamma, spec.g, spec.n
    pp = gamma * g * (g + n) / 2
    return {"-+": gamma * (g**2 + 2 * n * (g + 1)) / 2, "+-": gamma * g**2 / 2, "++": pp, "--": pp}


def build_collective(spec):
    """Dicke-basis generator valid when every propagation phase is a multiple of 2 pi."""
    if not _phases_are_trivial(spec.phi):
        raise ValidationError(
            "collective model needs all phases = 0 mod 2pi; use build_full_setup1/2 for general phases"
        )
    if not spec.achiral:
        raise ValidationError("collective model assumes achiral coupling (gamma_R == gamma_L)")
    J = build_collective_ops(spec.N)
    H = 2 * spec.Omega * J.Jx - (spec.n * spec.gamma * spec.g / 2) * anticommutator(J.Jx, J.Jy)
    r = collective_rates(spec)
    rates = RateMatrix.from_pm(r["-+"], r["+-"], r["++"], r["--"])
    return Generator(H, (J.Jminus, J.Jplus), rates, meta={"model": "collective", "spec": spec})


def build(model, spec):
    builders = {"single": build_single_atom, "full": build_full, "collective": build_collective}
    try:
        return builders[model](spec)
    except KeyError:
        raise ValidationError(f"unknown model {model!r}; expected one of {sorted(builders)}") from None
