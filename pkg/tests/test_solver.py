import numpy as np
import pytest

from trapquench.basis import EVEN, enumerate_basis
from trapquench.hamiltonian import CouplingParams, assemble_block
from trapquench.quench import loschmidt_echo, prepare_initial, project
from trapquench.solver import EigenSystem, SolverError, diagonalize, fix_signs


@pytest.fixture(scope="module")
def block10(table16):
    return assemble_block(enumerate_basis(10, 10), CouplingParams(25, 13.7), table16)


def test_reconstruction(block10):
    eig = diagonalize(block10)
    rec = eig.vectors @ np.diag(eig.energies) @ eig.vectors.T
    assert np.abs(rec - block10.matrix).max() <= 1e-8
    assert np.all(np.diff(eig.energies) >= 0)
    assert eig.dim == block10.dim
    assert eig.residual_norm <= 1e-8 * np.abs(eig.energies).max()
    assert eig.orthonormality_error <= 1e-10


def test_trace_identity(block10):
    eig = diagonalize(block10)
    tr = np.trace(block10.matrix)
    assert abs(eig.energies.sum() - tr) <= 1e-8 * abs(tr)


def test_sign_convention(block10):
    v = diagonalize(block10).vectors
    rows = np.argmax(np.abs(v), axis=0)
    assert np.all(v[rows, np.arange(v.shape[1])] > 0)
    w = -v.copy()
    assert np.array_equal(fix_signs(w), v)


def test_noninteracting_shells(table16):
    basis = enumerate_basis(16, 16)
    eig = diagonalize(assemble_block(basis, CouplingParams(0, 0), table16, EVEN))
    assert abs(eig.energies[0] - 1.5) <= 1e-10
    q = np.sort(basis.quanta[basis.block(EVEN)]) + 1.5
    assert np.abs(eig.energies - q).max() <= 1e-10
    # even block: shell 2.5 is absent, shell 3.5 holds (0,0;2),(0,1;1),(0,2;0),(1,1;0)
    assert np.sum(np.isclose(eig.energies, 3.5)) == 4


def test_deterministic(block10):
    a, b = diagonalize(block10), diagonalize(block10)
    assert np.array_equal(a.vectors, b.vectors) and np.array_equal(a.energies, b.energies)


def test_plain_matrix_and_empty():
    eig = diagonalize(np.diag([3.0, 1.0]))
    assert list(eig.energies) == [1.0, 3.0]
    assert diagonalize(np.zeros((0, 0))).dim == 0


def test_nonfinite_input_is_hard_error():
    with pytest.raises(SolverError, match="dim=2"):
        diagonalize(np.array([[1.0, np.nan], [np.nan, 1.0]]))


def test_degenerate_rotation_leaves_echo_invariant(table16):
    basis = enumerate_basis(10, 10)
    init = prepare_initial(basis, 25.0, table16)
    eig = diagonalize(assemble_block(basis, CouplingParams(0, 0), table16))
    e = eig.energies
    i = int(np.flatnonzero(np.isclose(e[1:], e[:-1]))[0])
    theta = 0.7317
    rot = np.array([[np.cos(theta), -np.sin(theta)], [np.sin(theta), np.cos(theta)]])
    v = eig.vectors.copy()
    v[:, i:i + 2] = v[:, i:i + 2] @ rot
    mixed = EigenSystem(e, v, eig.residual_norm, eig.orthonormality_error)
    t = np.linspace(0, 6 * np.pi, 400)
    a = loschmidt_echo(project(init, eig), t)
    b = loschmidt_echo(project(init, mixed), t)
    assert np.abs(a - b).max() <= 1e-10
    assert a.min() < 0.99  # the quench is non-trivial
