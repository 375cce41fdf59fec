import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as hst

from entdisc import matcore as mc
from entdisc.errors import DimensionMismatch, MalformedInput, NonSquare, NotHermitian

from conftest import random_complex, random_hermitian


def test_eig_identity():
    w, v = mc.hermitian_eig(mc.identity(3))
    assert np.allclose(w, [1, 1, 1])
    assert mc.allclose(v.conj().T @ v, mc.identity(3))


def test_eig_diagonal():
    w, v = mc.hermitian_eig(np.diag([2.0, -1.0]))
    assert np.allclose(w, [2, -1])
    assert mc.allclose(v, mc.identity(2))


def test_eig_pauli_x():
    # characteristic polynomial lambda^2 - 1
    w, v = mc.hermitian_eig(np.array([[0, 1], [1, 0]]))
    assert np.allclose(w, [1, -1], atol=1e-12)
    assert mc.allclose(v[:, 0], np.array([1, 1]) / np.sqrt(2))


def test_eig_rejects_bad_input():
    with pytest.raises(NotHermitian):
        mc.hermitian_eig(np.array([[0, 1], [0, 0]]))
    with pytest.raises(NonSquare):
        mc.hermitian_eig(np.zeros((2, 3)))


def test_eig_deterministic():
    h = random_hermitian(7, 3)
    a, b = mc.hermitian_eig(h), mc.hermitian_eig(h.copy())
    assert np.array_equal(a.eigenvalues, b.eigenvalues)
    assert np.array_equal(a.eigenvectors, b.eigenvectors)


@pytest.mark.parametrize("n", [1, 2, 5, 9, 16, 25, 36])
def test_eig_reconstruction_and_lapack_agreement(n):
    h = random_hermitian(n, n)
    w, v = mc.hermitian_eig(h)
    assert np.all(np.diff(w) <= 0)
    assert mc.max_abs_diff(mc.reconstruct(w, v), h) < 1e-9
    assert mc.max_abs_diff(v.conj().T @ v, mc.identity(n)) < 1e-9
    assert np.allclose(w, np.sort(np.linalg.eigvalsh(h))[::-1], atol=1e-10)


def test_eig_degenerate_spectrum():
    u, _ = np.linalg.qr(random_complex((6, 6), 1))
    h = u @ np.diag([3, 3, 3, 0, 0, -1]) @ u.conj().T
    w, v = mc.hermitian_eig(h)
    assert np.allclose(w, [3, 3, 3, 0, 0, -1], atol=1e-10)
    assert mc.max_abs_diff(mc.reconstruct(w, v), h) < 1e-9


def test_trace_norm_examples():
    assert mc.trace_norm(np.zeros((3, 3))) == 0
    assert mc.trace_norm(np.diag([3.0, -4.0])) == pytest.approx(7)
    psi = np.array([1, 1j]) / np.sqrt(2)
    phi = np.array([1, -1j]) / np.sqrt(2)
    assert mc.trace_norm(mc.projector(psi) - mc.projector(phi)) == pytest.approx(2, abs=1e-12)


def test_trace_norm_non_hermitian_matches_svd():
    m = random_complex((5, 5), 4)
    assert mc.trace_norm(m) == pytest.approx(np.linalg.svd(m, compute_uv=False).sum(), abs=1e-9)


@settings(max_examples=30, deadline=None)
@given(hst.integers(1, 8), hst.integers(0, 2**32 - 1))
def test_trace_norm_two_routes_agree(n, seed):
    h = random_hermitian(n, seed)
    assert abs(mc.trace_norm(h) - mc.singular_value_trace_norm(h)) < 1e-8


def test_partial_trace_examples():
    a = np.diag([0.25, 0.75])
    b = random_complex((3, 3), 2)
    assert mc.allclose(mc.partial_trace(np.kron(a, b), (2, 3), mc.FIRST), b)
    assert mc.allclose(mc.partial_trace(mc.identity(4), (2, 2), mc.SECOND), 2 * mc.identity(2))


def test_partial_trace_of_identity_choi():
    j = sum(np.kron(mc.unit(2, i, k), mc.unit(2, i, k)) for i in range(2) for k in range(2))
    # summing the diagonal blocks by hand: sum_i <i|_first J |i>_first
    blocks = sum(j[i * 2:(i + 1) * 2, i * 2:(i + 1) * 2] for i in range(2))
    assert mc.allclose(blocks, mc.identity(2))
    assert mc.allclose(mc.partial_trace(j, (2, 2), mc.FIRST), mc.identity(2))


def test_partial_trace_dimension_mismatch():
    with pytest.raises(DimensionMismatch):
        mc.partial_trace(mc.identity(6), (2, 2))


@settings(max_examples=30, deadline=None)
@given(hst.integers(1, 4), hst.integers(1, 4), hst.integers(0, 2**32 - 1))
def test_partial_trace_preserves_trace(dx, dz, seed):
    m = random_complex((dx * dz, dx * dz), seed)
    for f in (mc.FIRST, mc.SECOND):
        assert abs(np.trace(mc.partial_trace(m, (dx, dz), f)) - np.trace(m)) < 1e-10


def test_partial_transpose_examples(swap2):
    a, b = random_complex((2, 2), 5), random_complex((3, 3), 6)
    assert mc.allclose(mc.partial_transpose(np.kron(a, b), (2, 3), mc.FIRST), np.kron(a.T, b))
    assert mc.allclose(mc.partial_transpose(np.kron(a, b), (2, 3), mc.SECOND), np.kron(a, b.T))
    bell = mc.projector(np.array([1, 0, 0, 1]) / np.sqrt(2))
    pt = mc.partial_transpose(bell, (2, 2))
    assert mc.allclose(pt, swap2 / 2)
    assert np.allclose(np.sort(np.linalg.eigvalsh(pt)), [-0.5, 0.5, 0.5, 0.5])


def test_partial_transpose_matches_loop_oracle():
    from conftest import pt_by_loops

    m = random_complex((6, 6), 8)
    assert np.array_equal(mc.partial_transpose(m, (2, 3)), pt_by_loops(m, 2, 3))


@settings(max_examples=30, deadline=None)
@given(hst.integers(1, 4), hst.integers(1, 4), hst.integers(0, 2**32 - 1))
def test_partial_transpose_involution_and_hermiticity(dx, dz, seed):
    m = random_complex((dx * dz, dx * dz), seed)
    for f in (mc.FIRST, mc.SECOND):
        assert np.array_equal(mc.partial_transpose(mc.partial_transpose(m, (dx, dz), f), (dx, dz), f), m)
    h = random_hermitian(dx * dz, seed)
    pt = mc.partial_transpose(h, (dx, dz))
    assert mc.hermiticity_defect(pt) < 1e-14
    assert abs(np.trace(pt) - np.trace(h)) < 1e-12


def test_tensor():
    assert mc.allclose(mc.tensor(mc.identity(2), mc.identity(3)), mc.identity(6))
    a, b, c, d = (random_complex((2, 2), s) for s in range(4))
    assert abs(np.trace(mc.tensor(a, b)) - np.trace(a) * np.trace(b)) < 1e-12
    assert mc.allclose(mc.tensor(a, b) @ mc.tensor(c, d), mc.tensor(a @ c, b @ d), 1e-12)


def test_matrix_json_roundtrip_and_rejection():
    m = random_complex((2, 3), 9)
    assert np.array_equal(mc.matrix_from_json(mc.matrix_to_json(m)), m)
    bad = mc.matrix_to_json(m)
    bad["data"].pop()
    with pytest.raises(MalformedInput):
        mc.matrix_from_json(bad)
    with pytest.raises(MalformedInput):
        mc.matrix_from_json({"rows": 1})
