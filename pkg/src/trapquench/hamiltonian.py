"""Hamiltonian matrices of the two-boson + impurity system in the composite basis.

H(g_A, g_AB) = H0 + g_A * W_AA + g_AB * W_AB, with H0 diagonal (quanta + 3/2),
W_AA the delta(x1 - x2) matrix and W_AB = sum_j delta(x_j - y).
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .basis import EVEN, ODD, ManyBodyBasis, pair_sector
from .hobasis import DeltaIntegralTable


@dataclass(frozen=True)
class CouplingParams:
    g_A: float
    g_AB: float

    def __post_init__(self):
        for name in ("g_A", "g_AB"):
            v = getattr(self, name)
            if not math.isfinite(v):
                raise ValueError(f"{name} must be finite, got {v}")
            if v < 0:
                raise ValueError(f"{name} must be >= 0, got {v}")
        if self.g_AB > self.g_A:
            warnings.warn(f"g_AB={self.g_AB} > g_A={self.g_A}: outside the studied range", stacklevel=2)


@dataclass
class HamiltonianBlock:
    parity: str
    matrix: np.ndarray = field(repr=False)
    params: CouplingParams
    indices: np.ndarray = field(repr=False)
    n_tot: int
    n_max: int

    @property
    def dim(self) -> int:
        return len(self.indices)

    def provenance(self) -> str:
        return (f"parity={self.parity} dim={self.dim} n_tot={self.n_tot} n_max={self.n_max} "
                f"g_A={self.params.g_A} g_AB={self.params.g_AB}")


def _check_table(basis: ManyBodyBasis, table: DeltaIntegralTable):
    if table.n_max < basis.n_max:
        raise ValueError(f"integral table n_max={table.n_max} does not cover basis n_max={basis.n_max}")


def _pair_norm(a, b):
    return 1.0 / np.sqrt(2.0 * (1.0 + (a == b)))


def _add_aa(out, states, I, scale):
    """Accumulate scale * <S(ab),m|delta(x1-x2)|S(cd),m'> (diagonal in m)."""
    a, b, m = states.T
    norm = _pair_norm(a, b)
    for mv in np.unique(m):
        r = np.flatnonzero(m == mv)
        ar, br = a[r], b[r]
        blk = I[ar[:, None], br[:, None], ar[None, :], br[None, :]]
        out[np.ix_(r, r)] += (4.0 * scale) * np.outer(norm[r], norm[r]) * blk


def _ab_occurrences(states):
    """Expand symmetrized pairs into (row, spectator, partner, weight) terms.

    A pair with a != b contributes two ordered terms with weight N_ab; a == b
    contributes one term with the two identical orderings merged (weight 1).
    """
    a, b, m = states.T
    rows = np.arange(len(states))
    norm = _pair_norm(a, b)
    same = a == b
    w_same = np.where(same, 2.0 * norm, norm)
    diff = ~same
    row = np.concatenate([rows, rows[diff]])
    spec = np.concatenate([b, a[diff]])
    partner = np.concatenate([a, b[diff]])
    weight = np.concatenate([w_same, norm[diff]])
    mm = np.concatenate([m, m[diff]])
    return row, spec, partner, mm, weight


def _add_ab(out, states, I, scale):
    """Accumulate scale * sum_j <S(ab),m|delta(x_j - y)|S(cd),m'>.

    Both A coordinates give equal contributions on symmetric states, hence
    the factor 2 on the x1 term; the x1 term needs matching spectators.
    """
    row, spec, partner, mm, weight = _ab_occurrences(states)
    for q in np.unique(spec):
        s = np.flatnonzero(spec == q)
        r, p, mv, w = row[s], partner[s], mm[s], weight[s]
        blk = I[p[:, None], mv[:, None], p[None, :], mv[None, :]]
        out[np.ix_(r, r)] += (2.0 * scale) * np.outer(w, w) * blk


def block_states(basis: ManyBodyBasis, parity: str) -> tuple[np.ndarray, np.ndarray]:
    idx = basis.block(parity)
    return idx, basis.table[idx]


def assemble_block(basis: ManyBodyBasis, params: CouplingParams, table: DeltaIntegralTable,
                   parity: str = EVEN) -> HamiltonianBlock:
    """Dense Hamiltonian of one parity block, accumulated in a single matrix."""
    _check_table(basis, table)
    idx, states = block_states(basis, parity)
    n = len(idx)
    h = np.zeros((n, n))
    I = table.full
    if params.g_A != 0.0:
        _add_aa(h, states, I, params.g_A)
    if params.g_AB != 0.0:
        _add_ab(h, states, I, params.g_AB)
    h[np.diag_indices(n)] += states.sum(axis=1) + 1.5
    return HamiltonianBlock(parity, h, params, idx, basis.n_tot, basis.n_max)


def assemble(basis: ManyBodyBasis, params: CouplingParams,
             table: DeltaIntegralTable) -> dict[str, HamiltonianBlock]:
    return {p: assemble_block(basis, params, table, p) for p in (EVEN, ODD)}


def assemble_full(basis: ManyBodyBasis, params: CouplingParams, table: DeltaIntegralTable) -> np.ndarray:
    """Matrix over the whole basis, with no parity split; used for checks."""
    _check_table(basis, table)
    states = basis.table
    h = np.zeros((len(states), len(states)))
    _add_aa(h, states, table.full, params.g_A)
    _add_ab(h, states, table.full, params.g_AB)
    h[np.diag_indices(len(states))] += states.sum(axis=1) + 1.5
    return h


@dataclass
class CouplingMatrices:
    """Coupling-independent pieces of one parity block, reusable across a sweep."""

    parity: str
    h0: np.ndarray
    w_aa: np.ndarray = field(repr=False)
    w_ab: np.ndarray = field(repr=False)
    indices: np.ndarray = field(repr=False)
    n_tot: int
    n_max: int

    @classmethod
    def build(cls, basis: ManyBodyBasis, table: DeltaIntegralTable, parity: str = EVEN) -> "CouplingMatrices":
        _check_table(basis, table)
        idx, states = block_states(basis, parity)
        n = len(idx)
        w_aa = np.zeros((n, n))
        w_ab = np.zeros((n, n))
        _add_aa(w_aa, states, table.full, 1.0)
        _add_ab(w_ab, states, table.full, 1.0)
        return cls(parity, states.sum(axis=1) + 1.5, w_aa, w_ab, idx, basis.n_tot, basis.n_max)

    def hamiltonian(self, params: CouplingParams) -> HamiltonianBlock:
        h = params.g_A * self.w_aa + params.g_AB * self.w_ab
        h[np.diag_indices(len(self.h0))] += self.h0
        return HamiltonianBlock(self.parity, h, params, self.indices, self.n_tot, self.n_max)


def pair_hamiltonian(n_max: int, n_tot: int, g_A: float, table: DeltaIntegralTable,
                     parity: str | None = None) -> np.ndarray:
    """Two-boson Hamiltonian (no impurity) over pairs with n1 + n2 <= n_tot.

    Energies include the two zero-point terms but not the B atom.
    """
    pairs = pair_sector(n_max, n_tot)
    if parity is not None:
        want = 0 if parity == EVEN else 1
        pairs = [p for p in pairs if (p.n1 + p.n2) % 2 == want]
    states = np.array([(p.n1, p.n2, 0) for p in pairs], dtype=np.int64).reshape(-1, 3)
    h = np.zeros((len(states), len(states)))
    _add_aa(h, states, table.full, g_A)
    h[np.diag_indices(len(states))] += states[:, 0] + states[:, 1] + 1.0
    return h


@dataclass
class ValidationReport:
    violations: list[str]
    max_asymmetry: float

    @property
    def ok(self) -> bool:
        return not self.violations


def validate(block: HamiltonianBlock, basis: ManyBodyBasis | None = None,
             table: DeltaIntegralTable | None = None, tol: float = 1e-14) -> ValidationReport:
    """Check symmetry, zero-point floor, parity purity and (at g_AB = 0) sector factorization."""
    h = block.matrix
    scale = max(np.abs(h).max(), 1.0)
    asym = float(np.abs(h - h.T).max() / scale)
    out = []
    if asym > tol:
        out.append(f"asymmetry {asym:.3e} exceeds {tol:.1e}")
    if h.shape[0] and np.diag(h).min() < 1.5 - 1e-12:
        out.append(f"diagonal entry {np.diag(h).min():.6f} below 1.5")
    if basis is not None:
        q = basis.quanta[block.indices]
        if np.unique(q % 2).size > 1:
            out.append("block mixes parities")
        if block.params.g_AB == 0.0 and table is not None:
            out.extend(_factorization_violations(block, basis, table))
    return ValidationReport(out, asym)


def _factorization_violations(block, basis, table, tol=1e-9):
    """At g_AB = 0 the spectrum is {pair eigenvalue + m + 1/2}, per m sector."""
    want = 0 if block.parity == EVEN else 1
    expected = []
    for m in range(min(basis.n_max, basis.n_tot) + 1):
        pair_parity = EVEN if (want - m) % 2 == 0 else ODD
        hp = pair_hamiltonian(basis.n_max, basis.n_tot - m, block.params.g_A, table, pair_parity)
        if hp.size:
            expected.append(np.linalg.eigvalsh(hp) + m + 0.5)
    expected = np.sort(np.concatenate(expected)) if expected else np.empty(0)
    got = np.linalg.eigvalsh(block.matrix)
    if expected.shape != got.shape:
        return [f"sector count {expected.size} != block dim {got.size}"]
    err = float(np.abs(expected - got).max()) if got.size else 0.0
    if err > tol * max(1.0, float(np.abs(got).max())):
        return [f"g_AB=0 spectrum deviates from sector sums by {err:.3e}"]
    return []
