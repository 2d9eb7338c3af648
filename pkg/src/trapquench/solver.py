"""Dense symmetric eigendecomposition with residual certification."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .hamiltonian import HamiltonianBlock


class SolverError(RuntimeError):
    pass


@dataclass
class EigenSystem:
    energies: np.ndarray
    vectors: np.ndarray = field(repr=False)
    residual_norm: float
    orthonormality_error: float
    provenance: str = ""

    @property
    def dim(self) -> int:
        return len(self.energies)


def fix_signs(vectors: np.ndarray) -> np.ndarray:
    """Flip columns in place so the largest-magnitude entry of each is positive."""
    if vectors.size == 0:
        return vectors
    rows = np.argmax(np.abs(vectors), axis=0)
    signs = np.sign(vectors[rows, np.arange(vectors.shape[1])])
    signs[signs == 0] = 1.0
    vectors *= signs
    return vectors


FULL_CERTIFY_DIM = 3000
SAMPLED_COLUMNS = 64


def _certify_columns(n):
    """All columns for small blocks; else ends plus a fixed pseudo-random sample."""
    if n <= FULL_CERTIFY_DIM:
        return np.arange(n)
    rng = np.random.default_rng(n)
    pick = rng.choice(n, SAMPLED_COLUMNS, replace=False)
    return np.unique(np.concatenate([[0, 1, n - 2, n - 1], pick]))


def _residual(h, energies, vectors, cols, chunk=512):
    worst = 0.0
    for s in range(0, len(cols), chunk):
        c = cols[s:s + chunk]
        v = vectors[:, c]
        r = h @ v - v * energies[c]
        worst = max(worst, float(np.sqrt((r * r).sum(axis=0)).max()))
    return worst


def diagonalize(block: HamiltonianBlock | np.ndarray, certify: bool = True,
                overwrite: bool = False) -> EigenSystem:
    """Full spectrum and eigenbasis of a symmetric block.

    Residuals and orthonormality are certified on every column for blocks
    up to FULL_CERTIFY_DIM, and on a fixed column sample above that.

    ``overwrite=True`` lets LAPACK destroy the input matrix; residuals are
    then not computed.
    """
    if isinstance(block, HamiltonianBlock):
        h, prov = block.matrix, block.provenance()
    else:
        h, prov = np.asarray(block), f"dim={len(block)}"
    if h.shape[0] == 0:
        return EigenSystem(np.empty(0), np.empty((0, 0)), 0.0, 0.0, prov)
    try:
        energies, vectors = scipy.linalg.eigh(h, driver="evr", overwrite_a=overwrite, check_finite=False)
    except (np.linalg.LinAlgError, ValueError) as exc:
        raise SolverError(f"eigensolver failed for block {prov}: {exc}") from exc
    fix_signs(vectors)
    res = orth = float("nan")
    if certify and not overwrite:
        norm = float(np.abs(energies).max())
        cols = _certify_columns(len(energies))
        res = _residual(h, energies, vectors, cols)
        gram = vectors.T @ vectors[:, cols]
        gram[cols, np.arange(len(cols))] -= 1.0
        orth = float(np.abs(gram).max())
        if not res <= 1e-8 * max(norm, 1.0):
            raise SolverError(f"residual {res:.3e} too large for block {prov}")
        if not orth <= 1e-10:
            raise SolverError(f"eigenvectors not orthonormal ({orth:.3e}) for block {prov}")
    return EigenSystem(energies, vectors, res, orth, prov)
