import math
import warnings

import numpy as np
import pytest

from trapquench.basis import EVEN, ODD, enumerate_basis
from trapquench.hamiltonian import (CouplingMatrices, CouplingParams, assemble, assemble_block, assemble_full,
                                    pair_hamiltonian, validate)
from trapquench.hobasis import DeltaIntegralTable, HoParams

from .conftest import ho_explicit


def test_coupling_params_validation():
    with pytest.raises(ValueError):
        CouplingParams(-1.0, 0.0)
    with pytest.raises(ValueError):
        CouplingParams(1.0, float("nan"))
    with pytest.warns(UserWarning):
        CouplingParams(1.0, 2.0)


def test_noninteracting_is_diagonal(basis16, table16):
    for blk in assemble(basis16, CouplingParams(0, 0), table16).values():
        h = blk.matrix
        assert np.array_equal(h, np.diag(np.diag(h)))
        np.testing.assert_array_equal(np.diag(h), basis16.quanta[blk.indices] + 1.5)


def test_ground_element_hand_value(basis16, table16):
    blk = assemble_block(basis16, CouplingParams(25, 0), table16, EVEN)
    assert blk.indices[0] == 0
    assert blk.matrix[0, 0] == pytest.approx(1.5 + 25 / math.sqrt(2 * math.pi), abs=1e-13)
    assert blk.matrix[0, 0] == pytest.approx(11.4736, abs=1e-4)


def test_parity_blocks_decouple(table16):
    basis = enumerate_basis(10, 10)
    h = assemble_full(basis, CouplingParams(25, 12.5), table16)
    even, odd = basis.block(EVEN), basis.block(ODD)
    assert np.all(h[np.ix_(even, odd)] == 0.0)
    blocks = assemble(basis, CouplingParams(25, 12.5), table16)
    np.testing.assert_allclose(blocks[EVEN].matrix, h[np.ix_(even, even)], atol=1e-14)


def test_symmetry_and_random_subblock(basis16, table16):
    blk = assemble_block(basis16, CouplingParams(25, 17), table16)
    rng = np.random.default_rng(3)
    idx = rng.choice(blk.dim, 5, replace=False)
    sub = blk.matrix[np.ix_(idx, idx)]
    assert np.abs(sub - sub.T).max() <= 1e-14 * np.abs(blk.matrix).max()
    rep = validate(blk, basis16, table16)
    assert rep.ok, rep.violations


def test_validate_flags_asymmetry(basis16, table16):
    blk = assemble_block(basis16, CouplingParams(1, 1), table16)
    blk.matrix[0, 1] += 1e-6
    assert not validate(blk).ok


def test_noninteracting_spectrum_degeneracies(table16):
    basis = enumerate_basis(8, 8)
    blk = assemble_block(basis, CouplingParams(0, 0), table16, EVEN)
    rep = validate(blk, basis, table16)
    assert rep.ok
    e = np.linalg.eigvalsh(blk.matrix)
    shells, counts = np.unique(np.round(e - 1.5).astype(int), return_counts=True)
    q = basis.quanta[basis.block(EVEN)]
    want_shells, want_counts = np.unique(q, return_counts=True)
    assert np.array_equal(shells, want_shells) and np.array_equal(counts, want_counts)


@pytest.mark.parametrize("parity", [EVEN, ODD])
def test_factorization_at_zero_impurity_coupling(basis16, table16, parity):
    blk = assemble_block(basis16, CouplingParams(25, 0), table16, parity)
    assert validate(blk, basis16, table16).ok


def test_factorization_detects_wrong_spectrum(basis16, table16):
    blk = assemble_block(basis16, CouplingParams(25, 0), table16)
    blk.matrix[0, 0] += 1e-3
    assert validate(blk, basis16, table16).violations


def test_linearity_in_couplings(table16):
    basis = enumerate_basis(12, 12)
    w = CouplingMatrices.build(basis, table16)
    for g_A, g_AB in [(0, 0), (25, 0), (25, 25), (3.3, 1.1)]:
        direct = assemble_block(basis, CouplingParams(g_A, g_AB), table16).matrix
        np.testing.assert_allclose(w.hamiltonian(CouplingParams(g_A, g_AB)).matrix, direct, atol=1e-13)
    # interpolating two assemblies reproduces a third
    h1 = assemble_block(basis, CouplingParams(25, 5), table16).matrix
    h2 = assemble_block(basis, CouplingParams(25, 15), table16).matrix
    h3 = assemble_block(basis, CouplingParams(25, 10), table16).matrix
    np.testing.assert_allclose(0.5 * (h1 + h2), h3, atol=1e-13)


def test_variational_monotonicity(table16):
    e0 = []
    for n in (4, 8, 12, 16):
        blk = assemble_block(enumerate_basis(n, n), CouplingParams(25, 25), table16)
        e0.append(np.linalg.eigvalsh(blk.matrix)[0])
    assert all(b <= a + 1e-12 for a, b in zip(e0, e0[1:]))


def test_table_must_cover_basis():
    small = DeltaIntegralTable.build(HoParams(4))
    with pytest.raises(ValueError):
        assemble_block(enumerate_basis(6, 6), CouplingParams(1, 0), small)


def test_pair_hamiltonian_noninteracting(table16):
    e = np.linalg.eigvalsh(pair_hamiltonian(6, 6, 0.0, table16))
    assert e[0] == pytest.approx(1.0)


# --- brute-force real-space oracle -----------------------------------------

def _real_space_matrix(basis, g_A, g_AB, P=64, L=9.0):
    """Matrix elements by direct quadrature on a uniform 3D grid.

    Kinetic energy via FFT derivatives, trap potential pointwise and the
    contact terms as integrals over the coincidence planes.
    """
    x = np.linspace(-L, L, P, endpoint=False)
    h = x[1] - x[0]
    k = 2 * np.pi * np.fft.fftfreq(P, d=h)
    n = max(max(s.pair.n2, s.m) for s in basis) + 1
    phi = np.array([ho_explicit(i, x) for i in range(n)])
    # d2/dx2 of each orbital, spectrally
    d2 = np.real(np.fft.ifft(-(k ** 2) * np.fft.fft(phi, axis=1), axis=1))

    def wave(s, f1=phi, f2=phi, f3=phi):
        out = 0.0
        for c, a, b in s.pair.expand():
            out = out + c * np.einsum("i,j,k->ijk", f1[a], f2[b], f3[s.m])
        return out

    X1, X2, Y = np.meshgrid(x, x, x, indexing="ij")
    pot = 0.5 * (X1 ** 2 + X2 ** 2 + Y ** 2)
    psi = [wave(s) for s in basis]
    hpsi = []
    for s, p in zip(basis, psi):
        lap = wave(s, f1=d2) + wave(s, f2=d2) + wave(s, f3=d2)
        hpsi.append(-0.5 * lap + pot * p)
    dv = h ** 3
    N = len(basis)
    H = np.empty((N, N))
    diag = [np.einsum("iij->ij", p) for p in psi]  # x1 = x2 plane
    x1y = [np.einsum("iji->ij", p) for p in psi]   # x1 = y plane
    x2y = [np.einsum("jii->ij", p) for p in psi]   # x2 = y plane
    for i in range(N):
        for j in range(N):
            kin = np.sum(psi[i] * hpsi[j]) * dv
            aa = np.sum(diag[i] * diag[j]) * h * h
            ab = (np.sum(x1y[i] * x1y[j]) + np.sum(x2y[i] * x2y[j])) * h * h
            H[i, j] = kin + g_A * aa + g_AB * ab
    return H


@pytest.mark.parametrize("n_tot", [3, 6])
def test_elements_match_real_space_quadrature(table16, n_tot):
    basis = enumerate_basis(n_tot, n_tot)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        params = CouplingParams(3.7, 1.3)
    ref = _real_space_matrix(basis, params.g_A, params.g_AB)
    got = assemble_full(basis, params, table16)
    assert np.abs(got - ref).max() <= 1e-8
