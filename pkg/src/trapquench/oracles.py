"""Slow independent reference solutions, for tests only.

Nothing in the production path imports this module.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla
from scipy.linalg import eigh_tridiagonal
from scipy.optimize import brentq
from scipy.special import gamma

MAX_GRID_POINTS = 40


@dataclass(frozen=True)
class GridOracleConfig:
    L: float = 6.0
    P: int = 31

    def __post_init__(self):
        if self.L < 6:
            raise ValueError(f"box half-width L={self.L} must be >= 6")
        if self.P % 2 == 0:
            raise ValueError(f"P={self.P} must be odd so x=0 is a grid point")

    @property
    def x(self) -> np.ndarray:
        return np.linspace(-self.L, self.L, self.P)

    @property
    def h(self) -> float:
        return 2 * self.L / (self.P - 1)


def _relative_grid_energy(g: float, P: int, L: float) -> float:
    """Lowest eigenvalue of -1/2 d2/dr2 + r^2/2 + (g/sqrt2) delta(r) on a grid.

    r = (x1 - x2)/sqrt(2), so delta(x1 - x2) = delta(r)/sqrt(2).
    """
    r = np.linspace(-L, L, P)
    h = r[1] - r[0]
    diag = 1.0 / h ** 2 + 0.5 * r ** 2
    diag[P // 2] += g / math.sqrt(2.0) / h
    off = np.full(P - 1, -0.5 / h ** 2)
    return float(eigh_tridiagonal(diag, off, select="i", select_range=(0, 0))[0][0])


def richardson(values, hs) -> tuple[float, float]:
    """Extrapolate a refinement triplet h1 > h2 > h3 assuming E(h) = E* + C h^p.

    Returns (E*, measured p). The spacings need not be geometric.
    """
    e1, e2, e3 = values
    h1, h2, h3 = hs
    if e2 == e3:
        return e3, float("inf")
    ratio = (e1 - e2) / (e2 - e3)
    f = lambda p: (h1 ** p - h2 ** p) / (h2 ** p - h3 ** p) - ratio
    try:
        order = brentq(f, 0.05, 12.0)
    except ValueError as exc:
        raise ArithmeticError(f"refinement not converging (difference ratio {ratio:.4g})") from exc
    c = (e2 - e3) / (h2 ** order - h3 ** order)
    return e3 - c * h3 ** order, order


def two_boson_relative_energy(g: float, L: float = 10.0, P0: int = 2001, levels: int = 3,
                              return_order: bool = False):
    """Ground relative-motion energy of two bosons with contact coupling g."""
    if g < 0:
        raise ValueError("g must be >= 0")
    if g == 0:
        return (0.5, 2.0) if return_order else 0.5
    Ps = [(P0 - 1) * 2 ** k + 1 for k in range(levels)]
    hs = [2 * L / (P - 1) for P in Ps]
    es = [_relative_grid_energy(g, P, L) for P in Ps]
    val, order = richardson(es[-3:], hs[-3:])
    return (val, order) if return_order else val


def two_boson_energy(g: float) -> float:
    """Total two-boson energy: relative part plus center-of-mass 1/2."""
    return two_boson_relative_energy(g) + 0.5


def busch_relative_energy(g: float) -> float:
    """Root of g = -2^{3/2} Gamma(3/4 - E/2) / Gamma(1/4 - E/2) in (1/2, 3/2)."""
    if g == 0:
        return 0.5
    f = lambda e: -2 ** 1.5 * gamma(0.75 - e / 2) / gamma(0.25 - e / 2) - g
    return brentq(f, 0.5 + 1e-14, 1.5 - 1e-14, xtol=1e-15)


def _laplacian_1d(P, h):
    main = np.full(P, 1.0 / h ** 2)
    off = np.full(P - 1, -0.5 / h ** 2)
    return sp.diags([off, main, off], [-1, 0, 1], format="csr")


def three_body_grid_hamiltonian(config: GridOracleConfig, g_A: float, g_AB: float):
    """Sparse Hamiltonian on the bosonic (x1 <-> x2 symmetric) subspace of a P^3 grid."""
    P = config.P
    if P > MAX_GRID_POINTS:
        raise MemoryError(f"P={P} exceeds the grid oracle limit {MAX_GRID_POINTS}")
    x, h = config.x, config.h
    one = _laplacian_1d(P, h) + sp.diags(0.5 * x ** 2)
    eye = sp.identity(P, format="csr")
    H = (sp.kron(sp.kron(one, eye), eye) + sp.kron(sp.kron(eye, one), eye)
         + sp.kron(sp.kron(eye, eye), one))
    i1, i2, i3 = np.meshgrid(np.arange(P), np.arange(P), np.arange(P), indexing="ij")
    i1, i2, i3 = i1.ravel(), i2.ravel(), i3.ravel()
    pot = (g_A / h) * (i1 == i2) + (g_AB / h) * ((i1 == i3).astype(float) + (i2 == i3))
    H = H + sp.diags(pot)
    # symmetric combinations of (i1, i2) with i1 <= i2
    keep = np.flatnonzero(i1 <= i2)
    col = np.arange(len(keep))
    a, b, c = i1[keep], i2[keep], i3[keep]
    direct = (a * P + b) * P + c
    swapped = (b * P + a) * P + c
    diag = a == b
    rows = np.concatenate([direct[diag], direct[~diag], swapped[~diag]])
    cols = np.concatenate([col[diag], col[~diag], col[~diag]])
    vals = np.concatenate([np.ones(diag.sum()), np.full(2 * (~diag).sum(), 1 / math.sqrt(2.0))])
    Q = sp.csr_matrix((vals, (rows, cols)), shape=(P ** 3, len(keep)))
    return (Q.T @ H @ Q).tocsc()


def three_body_grid_spectrum(config: GridOracleConfig, g_A: float, g_AB: float, k: int = 1) -> np.ndarray:
    H = three_body_grid_hamiltonian(config, g_A, g_AB)
    vals = spla.eigsh(H, k=k, sigma=0.0, which="LM", return_eigenvectors=False)
    return np.sort(vals)


def three_body_grid_extrapolated(g_A: float, g_AB: float, L: float = 6.0, Ps=(13, 25, 37)) -> tuple[float, float]:
    """Ground energy Richardson-extrapolated over a halving triplet of grids."""
    hs = [2 * L / (P - 1) for P in Ps]
    es = [three_body_grid_spectrum(GridOracleConfig(L, P), g_A, g_AB, 1)[0] for P in Ps]
    return richardson(es, hs)
