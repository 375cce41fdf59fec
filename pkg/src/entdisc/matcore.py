"""Dense complex matrix primitives.

Matrices are plain ``numpy.ndarray`` objects of dtype ``complex128``.
Bipartite operators use row-major Kronecker ordering with the first factor
as the slow index, so an operator on ``A (x) B`` reshapes to
``(dA, dB, dA, dB)``.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from typing import NamedTuple

import numpy as np

from .errors import DimensionMismatch, MalformedInput, NonSquare, NotHermitian

FIRST = "first"
SECOND = "second"


@dataclass(frozen=True)
class Tolerances:
    """Every numerical cutoff used by the package, in one place."""

    hermiticity: float = 1e-9
    eigen_zero: float = 1e-9
    reconstruction: float = 1e-8
    psd: float = 1e-9
    trace: float = 1e-9
    jacobi_offdiag: float = 1e-12
    jacobi_max_sweeps: int = 100

    def to_dict(self):
        return asdict(self)


DEFAULT_TOL = Tolerances()


class HermitianEig(NamedTuple):
    eigenvalues: np.ndarray  # real, descending
    eigenvectors: np.ndarray  # column k pairs with eigenvalues[k]


def as_matrix(m) -> np.ndarray:
    a = np.asarray(m, dtype=np.complex128)
    if a.ndim != 2:
        raise MalformedInput(f"expected a 2-d matrix, got shape {a.shape}")
    return a


def require_square(m) -> np.ndarray:
    a = as_matrix(m)
    if a.shape[0] != a.shape[1]:
        raise NonSquare(f"matrix is {a.shape[0]}x{a.shape[1]}")
    return a


def max_abs_diff(a, b) -> float:
    a, b = np.asarray(a), np.asarray(b)
    if a.shape != b.shape:
        raise DimensionMismatch(f"shapes {a.shape} and {b.shape} differ")
    if a.size == 0:
        return 0.0
    return float(np.max(np.abs(a - b)))


def allclose(a, b, eps: float = 1e-9) -> bool:
    """Tolerance equality under the max-abs-difference metric."""
    return max_abs_diff(a, b) <= eps


def hermiticity_defect(m) -> float:
    a = require_square(m)
    return max_abs_diff(a, a.conj().T)


def identity(n: int) -> np.ndarray:
    return np.eye(n, dtype=np.complex128)


def ket(n: int, i: int) -> np.ndarray:
    v = np.zeros(n, dtype=np.complex128)
    v[i] = 1.0
    return v


def unit(n: int, i: int, j: int) -> np.ndarray:
    """Matrix unit |i><j| on C^n."""
    e = np.zeros((n, n), dtype=np.complex128)
    e[i, j] = 1.0
    return e


def projector(v) -> np.ndarray:
    v = np.asarray(v, dtype=np.complex128).reshape(-1)
    return np.outer(v, v.conj())


def _jacobi_sweeps(a: np.ndarray, tol: Tolerances):
    n = a.shape[0]
    a = a.copy()
    v = identity(n)
    scale = max(1.0, float(np.linalg.norm(a)))
    offdiag = ~np.eye(n, dtype=bool)
    for _ in range(tol.jacobi_max_sweeps):
        off = float(np.linalg.norm(a[offdiag]))
        if off < tol.jacobi_offdiag * scale:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                r = abs(apq)
                if r < 1e-300:
                    continue
                phase = apq / r
                theta = (a[q, q].real - a[p, p].real) / (2.0 * r)
                if abs(theta) > 1e150:
                    t = 0.5 / theta
                else:
                    t = (1.0 if theta >= 0 else -1.0) / (abs(theta) + math.sqrt(1.0 + theta * theta))
                c = 1.0 / math.sqrt(1.0 + t * t)
                s = t * c
                # Phase rotation making a[p, q] real, followed by a real Givens rotation.
                g = np.array([[c, s], [-s * phase.conjugate(), c * phase.conjugate()]])
                idx = [p, q]
                a[:, idx] = a[:, idx] @ g
                a[idx, :] = g.conj().T @ a[idx, :]
                a[p, q] = a[q, p] = 0.0
                v[:, idx] = v[:, idx] @ g
    return a.diagonal().real.copy(), v


def _fix_phases(vecs: np.ndarray) -> np.ndarray:
    # Largest-magnitude entry of each column made real positive (first index on ties).
    vecs = vecs.copy()
    for k in range(vecs.shape[1]):
        col = vecs[:, k]
        i = int(np.argmax(np.abs(col) - 1e-12 * np.arange(len(col))))
        if abs(col[i]) > 0:
            vecs[:, k] = col * (abs(col[i]) / col[i])
    return vecs


def hermitian_eig(m, tol: Tolerances = DEFAULT_TOL, method: str = "jacobi") -> HermitianEig:
    """Eigendecomposition of a Hermitian matrix.

    ``method="jacobi"`` runs cyclic complex Jacobi rotations until the
    off-diagonal Frobenius mass drops below ``tol.jacobi_offdiag`` (relative to
    the matrix scale), capped at ``tol.jacobi_max_sweeps`` sweeps.
    ``method="lapack"`` defers to ``numpy.linalg.eigh`` and exists as a
    cross-check. Both return eigenvalues in descending order with eigenvector
    phases normalised, so output is deterministic for identical input.

    Raises
    ------
    NonSquare, NotHermitian
    """
    a = require_square(m)
    defect = hermiticity_defect(a)
    if defect > tol.hermiticity:
        raise NotHermitian(f"max|m - m^dagger| = {defect:.3e}", defect=defect)
    a = (a + a.conj().T) / 2
    if method == "jacobi":
        w, v = _jacobi_sweeps(a, tol)
    elif method == "lapack":
        w, v = np.linalg.eigh(a)
    else:
        raise ValueError(f"unknown eigensolver {method!r}")
    order = np.argsort(-w, kind="stable")
    return HermitianEig(w[order], _fix_phases(v[:, order]))


def eigvalsh(m, tol: Tolerances = DEFAULT_TOL) -> np.ndarray:
    return hermitian_eig(m, tol).eigenvalues


def reconstruct(eigenvalues, eigenvectors) -> np.ndarray:
    return (eigenvectors * eigenvalues) @ eigenvectors.conj().T


def trace_norm(m, tol: Tolerances = DEFAULT_TOL) -> float:
    """Sum of singular values.

    Hermitian input (to within ``1e-12`` relative) uses the sum of absolute
    eigenvalues; anything else uses square roots of the eigenvalues of m^dagger m.
    """
    a = require_square(m)
    if not a.size:
        return 0.0
    scale = max(1.0, float(np.max(np.abs(a))))
    if hermiticity_defect(a) <= 1e-12 * scale:
        return float(np.sum(np.abs(eigvalsh(a, tol))))
    return singular_value_trace_norm(a, tol)


def singular_value_trace_norm(m, tol: Tolerances = DEFAULT_TOL) -> float:
    a = require_square(m)
    w = eigvalsh(a.conj().T @ a, tol)
    return float(np.sum(np.sqrt(np.clip(w, 0.0, None))))


def _check_bipartite(a: np.ndarray, dims) -> tuple[int, int]:
    dx, dz = (int(d) for d in dims)
    if dx < 1 or dz < 1 or a.shape != (dx * dz, dx * dz):
        raise DimensionMismatch(f"matrix shape {a.shape} does not match dims ({dx}, {dz})")
    return dx, dz


def partial_trace(m, dims, factor: str = SECOND) -> np.ndarray:
    """Trace out ``factor`` ("first" or "second") of a bipartite operator."""
    a = require_square(m)
    dx, dz = _check_bipartite(a, dims)
    t = a.reshape(dx, dz, dx, dz)
    if factor == FIRST:
        return np.einsum("ijik->jk", t)
    if factor == SECOND:
        return np.einsum("ijkj->ik", t)
    raise ValueError(f"factor must be 'first' or 'second', not {factor!r}")


def partial_transpose(m, dims, factor: str = FIRST) -> np.ndarray:
    a = require_square(m)
    dx, dz = _check_bipartite(a, dims)
    t = a.reshape(dx, dz, dx, dz)
    if factor == FIRST:
        t = t.transpose(2, 1, 0, 3)
    elif factor == SECOND:
        t = t.transpose(0, 3, 2, 1)
    else:
        raise ValueError(f"factor must be 'first' or 'second', not {factor!r}")
    return np.ascontiguousarray(t).reshape(dx * dz, dx * dz)


def tensor(a, b) -> np.ndarray:
    return np.kron(as_matrix(a), as_matrix(b))


def direct_sum_embed(m, extra: int) -> np.ndarray:
    """Pad ``m`` with ``extra`` zero rows/columns at the end."""
    a = require_square(m)
    n = a.shape[0]
    out = np.zeros((n + extra, n + extra), dtype=np.complex128)
    out[:n, :n] = a
    return out


def purity(m) -> float:
    a = require_square(m)
    return float(np.real(np.trace(a @ a)))


def matrix_to_json(m) -> dict:
    a = as_matrix(m)
    flat = a.reshape(-1)
    return {
        "rows": int(a.shape[0]),
        "cols": int(a.shape[1]),
        "data": [[float(z.real), float(z.imag)] for z in flat],
    }


def matrix_from_json(obj) -> np.ndarray:
    try:
        rows, cols, data = int(obj["rows"]), int(obj["cols"]), obj["data"]
    except (KeyError, TypeError, ValueError) as exc:
        raise MalformedInput(f"bad matrix object: {exc}") from exc
    if rows < 1 or cols < 1:
        raise MalformedInput("rows and cols must be positive")
    if len(data) != rows * cols:
        raise MalformedInput(f"data has {len(data)} entries, expected {rows * cols}")
    try:
        arr = np.array([complex(float(re), float(im)) for re, im in data], dtype=np.complex128)
    except (TypeError, ValueError) as exc:
        raise MalformedInput(f"entries must be [re, im] pairs: {exc}") from exc
    return arr.reshape(rows, cols)
