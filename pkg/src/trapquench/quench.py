"""Sudden quench of the A-B coupling: initial state, overlaps, echo and propagation."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .basis import EVEN, ManyBodyBasis
from .hamiltonian import pair_hamiltonian
from .hobasis import DeltaIntegralTable
from .solver import EigenSystem, fix_signs

NYQUIST_PHASE = math.pi / 4


@dataclass(frozen=True)
class QuenchSpec:
    g_A: float = 25.0
    g_AB_final: float = 0.0
    T: float = 6 * math.pi
    dt: float = 0.01

    @property
    def times(self) -> np.ndarray:
        return time_grid(self.T, self.dt)

    def check_nyquist(self, bandwidth: float) -> None:
        """``bandwidth`` is E_max - E_0 of the retained spectrum."""
        if bandwidth * self.dt > NYQUIST_PHASE * (1 + 1e-12):
            raise ValueError(f"dt={self.dt} violates (E_max - E_0)*dt <= pi/4 "
                             f"with E_max - E_0 = {bandwidth:.6g}; need dt <= {max_dt(bandwidth):.6g}")


def max_dt(bandwidth: float) -> float:
    return NYQUIST_PHASE / bandwidth if bandwidth > 0 else math.inf


def time_grid(T: float, dt: float) -> np.ndarray:
    """Uniform grid 0, dt, ..., covering [0, T] (last point >= T)."""
    n = int(math.ceil(T / dt - 1e-9))
    return dt * np.arange(n + 1)


@dataclass
class InitialState:
    vector: np.ndarray
    energy: float
    indices: np.ndarray = field(repr=False)
    parity: str = EVEN


def prepare_initial(basis: ManyBodyBasis, g_A: float, table: DeltaIntegralTable) -> InitialState:
    """Ground state of H(g_A, g_AB=0) in the even block.

    At g_AB = 0 the Hamiltonian is block diagonal in the impurity index m,
    and the m = 0 sector (largest pair cutoff, lowest impurity energy) holds
    the ground state, so only that sector is diagonalized.
    """
    idx = basis.block(EVEN)
    states = basis.table[idx]
    sel = np.flatnonzero(states[:, 2] == 0)
    pairs = states[sel]
    h = pair_hamiltonian(basis.n_max, basis.n_tot, g_A, table, EVEN)
    # pair_hamiltonian orders pairs by (n1, n2); map onto block positions
    order = {(int(a), int(b)): k for k, (a, b) in enumerate(
        sorted((int(a), int(b)) for a, b, _ in pairs))}
    perm = np.array([order[(int(a), int(b))] for a, b, _ in pairs])
    h = h[np.ix_(perm, perm)]
    h[np.diag_indices(len(h))] += 0.5  # impurity zero-point energy
    e, v = np.linalg.eigh(h)
    g = fix_signs(v[:, :1].copy())[:, 0]
    psi = np.zeros(len(idx))
    psi[sel] = g
    energy = float(g @ h @ g)
    return InitialState(psi, energy, idx)


@dataclass
class QuenchResult:
    E_0: float
    overlaps: np.ndarray
    energies: np.ndarray
    vectors: np.ndarray | None = field(default=None, repr=False)
    indices: np.ndarray | None = field(default=None, repr=False)

    @property
    def weights(self) -> np.ndarray:
        return self.overlaps ** 2

    @property
    def weight_sum(self) -> float:
        return float(math.fsum(self.weights))

    @property
    def inverse_participation(self) -> float:
        return float(np.sum(self.weights ** 2))

    @property
    def bandwidth(self) -> float:
        return float(self.energies[-1] - self.E_0) if len(self.energies) else 0.0


def project(initial: InitialState, eig: EigenSystem, h_initial: np.ndarray | None = None) -> QuenchResult:
    """Overlaps c_k = <E_k|Psi_0> in the post-quench eigenbasis.

    E_0 is a Rayleigh quotient against ``h_initial`` when given, otherwise
    the energy stored on ``initial``.
    """
    psi = initial.vector
    if eig.vectors.shape[0] != len(psi):
        raise ValueError(f"dimension mismatch: state {len(psi)} vs eigenbasis {eig.vectors.shape[0]}")
    c = eig.vectors.T @ psi
    e0 = float(psi @ h_initial @ psi) if h_initial is not None else initial.energy
    return QuenchResult(e0, c, eig.energies, eig.vectors, initial.indices)


def loschmidt_amplitude(result: QuenchResult, t, chunk: int = 256):
    """nu(t) = sum_k |c_k|^2 exp(i (E_0 - E_k) t); scalar or array ``t``."""
    t_arr = np.atleast_1d(np.asarray(t, dtype=float))
    w = result.weights
    shift = result.E_0 - result.energies
    out = np.empty(t_arr.shape, dtype=complex)
    for s in range(0, len(t_arr), chunk):
        tt = t_arr[s:s + chunk]
        out[s:s + chunk] = np.exp(1j * np.outer(tt, shift)) @ w
    return out[0] if np.ndim(t) == 0 else out


def loschmidt_echo(result: QuenchResult, t):
    return np.abs(loschmidt_amplitude(result, t)) ** 2


def evolve_state(result: QuenchResult, t):
    """Psi(t) = sum_k c_k exp(-i E_k t) v_k over the block basis.

    Array ``t`` returns a matrix with one column per time.
    """
    if result.vectors is None:
        raise ValueError("QuenchResult carries no eigenvectors")
    t_arr = np.atleast_1d(np.asarray(t, dtype=float))
    coeff = result.overlaps[:, None] * np.exp(-1j * np.outer(result.energies, t_arr))
    # real eigenvectors: two real products avoid a complex copy of the basis
    psi = result.vectors @ coeff.real + 1j * (result.vectors @ coeff.imag)
    return psi[:, 0] if np.ndim(t) == 0 else psi


def min_echo(result: QuenchResult, T: float = 6 * math.pi, dt: float | None = None,
             candidates: int = 8) -> tuple[float, float]:
    """Minimum of L(t) on [0, T] and its location.

    The lowest few local minima of a sampled grid are each refined by a
    bounded scalar search, so narrow dips between samples are not lost.
    """
    from scipy.optimize import minimize_scalar

    if dt is None:
        dt = min(0.01, max_dt(result.bandwidth))
    t = time_grid(T, dt)
    t = t[t <= T + 1e-12]
    le = loschmidt_echo(result, t)
    interior = np.flatnonzero((le[1:-1] <= le[:-2]) & (le[1:-1] <= le[2:])) + 1
    ends = [0, len(t) - 1]
    cand = np.concatenate([interior, ends])
    cand = cand[np.argsort(le[cand], kind="stable")][:candidates]
    best, t_best = float(le[cand[0]]), float(t[cand[0]])
    for k in cand:
        lo, hi = t[max(k - 1, 0)], t[min(k + 1, len(t) - 1)]
        opt = minimize_scalar(lambda s: float(loschmidt_echo(result, s)), bounds=(lo, hi), method="bounded",
                              options={"xatol": 1e-10})
        if opt.fun < best:
            best, t_best = float(opt.fun), float(opt.x)
    return best, t_best


def write_echo(path, t, nu, header: str = "") -> None:
    from .textio import write_columns

    write_columns(path, ["t", "re_nu", "im_nu", "L"], [t, nu.real, nu.imag, np.abs(nu) ** 2], header)
