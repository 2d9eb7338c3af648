"""Reduced density matrices, densities, entropies, echoes of the species and spectra.

State vectors are coefficient vectors over one parity block of a
ManyBodyBasis; ``indices`` maps block positions to basis positions.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .basis import ManyBodyBasis
from .hobasis import hermite_functions
from .quench import QuenchResult, loschmidt_amplitude

PSD_TOL = 1e-10
ZERO_EIG = 1e-12
PAPER_ENTROPY_WINDOW = (1.25 * math.pi, 1.75 * math.pi)


@dataclass
class Rspdm:
    species: str
    matrix: np.ndarray

    @property
    def trace(self) -> float:
        return float(np.trace(self.matrix).real)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def check(self, herm_tol=1e-12, trace_tol=1e-10, psd_tol=PSD_TOL) -> list[str]:
        """Violations of hermiticity, unit trace and positivity."""
        m = self.matrix
        out = []
        herm = float(np.abs(m - m.conj().T).max()) if m.size else 0.0
        if herm > herm_tol:
            out.append(f"{self.species}: not hermitian ({herm:.2e})")
        if abs(self.trace - 1.0) > trace_tol:
            out.append(f"{self.species}: trace {self.trace:.12f}")
        lo = float(np.linalg.eigvalsh(_herm(m)).min()) if m.size else 0.0
        if lo < -psd_tol:
            out.append(f"{self.species}: negative eigenvalue {lo:.2e}")
        return out


@dataclass
class DensityProfile:
    species: str
    x: np.ndarray
    values: np.ndarray
    particles: int

    def norm(self) -> float:
        return float(np.trapezoid(self.values, self.x))


@dataclass
class Spectrum:
    omega: np.ndarray
    values: np.ndarray
    eta: float
    method: str = "eigensum"
    window: tuple = field(default=())

    def sum_rule(self) -> float:
        """(1/2pi) * integral of A over the grid."""
        return float(np.trapezoid(self.values, self.omega) / (2 * np.pi))

    def peak(self) -> float:
        return float(self.omega[np.argmax(self.values)])

    def local_maxima(self, rel_height: float = 1e-3) -> np.ndarray:
        a = self.values
        i = np.flatnonzero((a[1:-1] > a[:-2]) & (a[1:-1] >= a[2:])) + 1
        return self.omega[i[a[i] > rel_height * a.max()]]


def _herm(m):
    return 0.5 * (m + m.conj().T)


def _coefficients(psi, basis: ManyBodyBasis, indices):
    """Dense array psi[p, q, m] over ordered A products.

    A symmetrized pair (a, b), a != b, puts c/sqrt(2) on both orderings.
    """
    states = basis.table[indices] if indices is not None else basis.table
    n = min(basis.n_max, basis.n_tot) + 1
    out = np.zeros((n, n, n), dtype=complex)
    a, b, m = states.T
    same = a == b
    out[a[same], b[same], m[same]] = psi[same]
    d = ~same
    out[a[d], b[d], m[d]] = psi[d] / np.sqrt(2.0)
    out[b[d], a[d], m[d]] = psi[d] / np.sqrt(2.0)
    return out


def _pair_impurity_matrix(psi, basis: ManyBodyBasis, indices):
    """C[pair, m] with rows over the symmetrized pairs present in the block."""
    states = basis.table[indices] if indices is not None else basis.table
    n = min(basis.n_max, basis.n_tot) + 1
    pair_id = states[:, 0] * n + states[:, 1]
    uniq, row = np.unique(pair_id, return_inverse=True)
    c = np.zeros((len(uniq), n), dtype=complex)
    c[row, states[:, 2]] = psi
    return c


def rspdm_B(psi, basis: ManyBodyBasis, indices=None) -> Rspdm:
    c = _pair_impurity_matrix(np.asarray(psi), basis, indices)
    return Rspdm("B", _herm(c.T @ c.conj()))


def rspdm_A(psi, basis: ManyBodyBasis, indices=None) -> Rspdm:
    coef = _coefficients(np.asarray(psi), basis, indices)
    n = coef.shape[0]
    flat = coef.reshape(n, -1)
    rho = flat @ flat.conj().T
    tr = np.trace(rho).real
    return Rspdm("A", _herm(rho / tr))


def pair_reduced_state(psi, basis: ManyBodyBasis, indices=None) -> np.ndarray:
    """Two-particle reduced state of the A pair (impurity traced out)."""
    c = _pair_impurity_matrix(np.asarray(psi), basis, indices)
    return _herm(c @ c.conj().T)


def density(rspdm: Rspdm, x, species: str | None = None) -> DensityProfile:
    species = species or rspdm.species
    particles = {"A": 2, "B": 1}[species]
    x = np.asarray(x, dtype=float)
    phi = hermite_functions(rspdm.dim - 1, x)
    vals = np.einsum("ix,ij,jx->x", phi, rspdm.matrix, phi).real
    return DensityProfile(species, x, particles * np.clip(vals, 0.0, None), particles)


def occupations(rho: np.ndarray) -> np.ndarray:
    lam = np.linalg.eigvalsh(_herm(np.asarray(rho)))
    return lam[::-1]


def natural_orbitals(rspdm: Rspdm) -> tuple[np.ndarray, np.ndarray]:
    """Occupations in descending order and orbitals as columns (HO coefficients)."""
    lam, vec = np.linalg.eigh(_herm(rspdm.matrix))
    return lam[::-1], vec[:, ::-1]


def entropy_from_occupations(lam) -> float:
    lam = np.asarray(lam, dtype=float)
    lam = lam[lam > ZERO_EIG]
    return float(max(0.0, -np.sum(lam * np.log2(lam))))


def vne(rspdm: Rspdm | np.ndarray) -> float:
    """Von Neumann entropy in bits."""
    m = rspdm.matrix if isinstance(rspdm, Rspdm) else rspdm
    return entropy_from_occupations(occupations(m))


def time_averaged_entropy(t, series, window=PAPER_ENTROPY_WINDOW) -> float:
    """Time average of ``series`` over ``window = (t_lo, t_hi)``."""
    t = np.asarray(t, dtype=float)
    s = np.asarray(series, dtype=float)
    lo, hi = window
    if not hi > lo:
        raise ValueError(f"empty window {window}")
    if lo < t[0] - 1e-12 or hi > t[-1] + 1e-12:
        raise ValueError(f"window {window} outside series range [{t[0]}, {t[-1]}]")
    inside = (t >= lo) & (t <= hi)
    grid = np.concatenate([[lo], t[inside], [hi]])
    vals = np.interp(grid, t, s)
    return float(np.trapezoid(vals, grid) / (hi - lo))


def _psd_eigh(rho, name):
    lam, vec = np.linalg.eigh(_herm(np.asarray(rho)))
    if lam.min() < -PSD_TOL:
        raise ValueError(f"{name} is not positive semidefinite (eigenvalue {lam.min():.3e})")
    return lam, vec


def subsystem_le_literal(rho_i, rho_f, t) -> np.ndarray:
    """Species echo built from two reduced states used as generators.

    L(t) = sum_m w_m [ (sum_n cos(w'_n t) O_mn)^2 + (sum_n sin(w'_n t) O_mn)^2 ]
    with O_mn = |<psi_m|phi'_n>|^2, (w_m, psi_m) from ``rho_i`` and
    (w'_n, phi'_n) from ``rho_f``.
    """
    w, psi = _psd_eigh(rho_i, "initial reduced state")
    wf, phi = _psd_eigh(rho_f, "final reduced state")
    overlap = np.abs(psi.conj().T @ phi) ** 2
    t = np.atleast_1d(np.asarray(t, dtype=float))
    cos = np.cos(np.outer(wf, t))
    sin = np.sin(np.outer(wf, t))
    return w @ ((overlap @ cos) ** 2 + (overlap @ sin) ** 2)


def _psd_sqrt(rho):
    lam, vec = np.linalg.eigh(_herm(rho))
    return (vec * np.sqrt(np.clip(lam, 0.0, None))) @ vec.conj().T


def uhlmann_fidelity(rho, sigma) -> float:
    """F = (Tr sqrt(sqrt(rho) sigma sqrt(rho)))^2."""
    _psd_eigh(rho, "rho")
    _psd_eigh(sigma, "sigma")
    s = _psd_sqrt(np.asarray(rho))
    lam = np.linalg.eigvalsh(_herm(s @ np.asarray(sigma) @ s))
    return float(np.sum(np.sqrt(np.clip(lam, 0.0, None))) ** 2)


def subsystem_le_fidelity(rho_0, rho_series) -> np.ndarray:
    """Fidelity between the initial reduced state and each evolved one."""
    return np.array([uhlmann_fidelity(rho_0, r) for r in rho_series])


def spectral_eigensum(result: QuenchResult, eta: float, omega) -> Spectrum:
    """A(w) = sum_k |c_k|^2 2 eta / ((w - (E_0 - E_k))^2 + eta^2)."""
    if not eta > 0:
        raise ValueError(f"broadening eta must be > 0, got {eta}")
    omega = np.asarray(omega, dtype=float)
    keep = result.weights > 0
    w = result.weights[keep]
    centers = result.E_0 - result.energies[keep]
    out = np.zeros_like(omega)
    chunk = max(1, 2_000_000 // max(len(w), 1))
    for s in range(0, len(omega), chunk):
        d = omega[s:s + chunk, None] - centers[None, :]
        out[s:s + chunk] = (2 * eta / (d * d + eta * eta)) @ w
    return Spectrum(omega, out, eta, "eigensum")


def spectral_transform(t, nu, eta: float, omega) -> Spectrum:
    """A(w) = 2 Re int_0^T exp(-i w t) nu(t) exp(-eta t) dt by the trapezoid rule.

    Equivalent to integrating over [-T, T] with nu(-t) = conj(nu(t)) and
    damping exp(-eta |t|). The grid ``t`` must be uniform and start at 0.
    """
    if not eta > 0:
        raise ValueError(f"broadening eta must be > 0, got {eta}")
    t = np.asarray(t, dtype=float)
    if abs(t[0]) > 1e-15:
        raise ValueError("time grid must start at t = 0")
    dt = t[1] - t[0]
    f = np.asarray(nu) * np.exp(-eta * t)
    wts = np.full(len(t), dt)
    wts[0] = wts[-1] = dt / 2
    f = f * wts
    omega = np.asarray(omega, dtype=float)
    out = np.empty_like(omega)
    chunk = max(1, 4_000_000 // len(t))
    for s in range(0, len(omega), chunk):
        out[s:s + chunk] = 2 * (np.exp(-1j * np.outer(omega[s:s + chunk], t)) @ f).real
    return Spectrum(omega, out, eta, "transform", (float(t[0]), float(t[-1])))


def spectral_function(result: QuenchResult, eta: float, omega) -> Spectrum:
    return spectral_eigensum(result, eta, omega)


def spectral_cross_check(result: QuenchResult, eta: float, omega, T: float | None = None,
                         dt: float | None = None) -> tuple[Spectrum, Spectrum, float]:
    """Both spectral routes and their relative L2 difference."""
    from .quench import max_dt, time_grid

    if T is None:
        T = 12.0 / eta
    if dt is None:
        dt = min(0.05, max_dt(max(result.bandwidth, 1e-12)))
    t = time_grid(T, dt)
    nu = loschmidt_amplitude(result, t)
    a = spectral_eigensum(result, eta, omega)
    b = spectral_transform(t, nu, eta, omega)
    err = float(np.linalg.norm(a.values - b.values) / np.linalg.norm(a.values))
    return a, b, err


def wide_omega_grid(result: QuenchResult, eta: float, margin: float = 100.0) -> np.ndarray:
    """Grid covering every weighted peak with wide margins, for sum-rule checks."""
    lo = result.E_0 - result.energies.max() - margin
    hi = result.E_0 - result.energies.min() + margin
    n = int(math.ceil((hi - lo) / (eta / 5))) + 1
    return np.linspace(lo, hi, n)
