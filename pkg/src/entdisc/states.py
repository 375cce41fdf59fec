"""Density matrices and the probe-state families used by the experiments."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import matcore as mc
from .errors import DimensionMismatch, MalformedInput, NotPSD, ParameterOutOfRange, TraceNotOne
from .rng import as_rng


def _frozen(a) -> np.ndarray:
    a = np.array(a, dtype=np.complex128, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class DensityMatrix:
    mat: np.ndarray
    dims: tuple

    def __post_init__(self):
        object.__setattr__(self, "mat", _frozen(self.mat))
        object.__setattr__(self, "dims", tuple(int(d) for d in self.dims))

    @property
    def dim(self) -> int:
        return self.mat.shape[0]

    @property
    def is_bipartite(self) -> bool:
        return len(self.dims) == 2


@dataclass(frozen=True, eq=False)
class SeparableEnsemble:
    """Certificate of separability: ``sum_i w_i x_i (x) z_i``."""

    weights: np.ndarray
    factors_x: tuple
    factors_z: tuple

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float)
        if len(self.factors_x) != len(w) or len(self.factors_z) != len(w):
            raise DimensionMismatch("weights and factor lists differ in length")
        if np.any(w < 0) or abs(w.sum() - 1.0) > 1e-12:
            raise ParameterOutOfRange("weights must form a probability vector")

    def mixed(self) -> np.ndarray:
        return sum(
            w * np.kron(x.mat, z.mat)
            for w, x, z in zip(self.weights, self.factors_x, self.factors_z)
        )


def validate_state(m, dims, tol: mc.Tolerances = mc.DEFAULT_TOL) -> DensityMatrix:
    """Check that ``m`` is a density matrix on the given tensor factors.

    Errors carry the offending quantity: ``NotPSD`` reports the minimum
    eigenvalue, ``TraceNotOne`` the trace.
    """
    a = mc.require_square(m)
    dims = tuple(int(d) for d in dims)
    if len(dims) not in (1, 2) or any(d < 1 for d in dims):
        raise DimensionMismatch(f"dims must list one or two positive factors, got {dims}")
    if int(np.prod(dims)) != a.shape[0]:
        raise DimensionMismatch(f"dims {dims} do not multiply to {a.shape[0]}")
    w = mc.eigvalsh(a, tol)  # raises NotHermitian
    tr = float(np.real(np.trace(a)))
    if abs(tr - 1.0) > tol.trace:
        raise TraceNotOne(f"trace is {tr!r}", trace=tr)
    if w[-1] < -tol.psd:
        raise NotPSD(f"minimum eigenvalue {w[-1]!r}", min_eigenvalue=float(w[-1]))
    return DensityMatrix((a + a.conj().T) / 2, dims)


def pure_state(vec, dims=None) -> DensityMatrix:
    v = np.asarray(vec, dtype=np.complex128).reshape(-1)
    v = v / np.linalg.norm(v)
    return DensityMatrix(mc.projector(v), dims or (len(v),))


def maximally_mixed(dims) -> DensityMatrix:
    n = int(np.prod(dims))
    return DensityMatrix(mc.identity(n) / n, dims)


def product_state(a: DensityMatrix, b: DensityMatrix) -> DensityMatrix:
    return DensityMatrix(np.kron(a.mat, b.mat), (a.dim, b.dim))


def swap_factors(state: DensityMatrix) -> DensityMatrix:
    dx, dz = state.dims
    t = state.mat.reshape(dx, dz, dx, dz).transpose(1, 0, 3, 2)
    return DensityMatrix(t.reshape(dx * dz, dx * dz), (dz, dx))


def bell_state(d: int) -> DensityMatrix:
    """Maximally entangled pure state ``sum_i |ii> / sqrt(d)`` on d (x) d."""
    if d < 2:
        raise ParameterOutOfRange(f"d must be >= 2, got {d}")
    v = np.zeros(d * d, dtype=np.complex128)
    v[[i * d + i for i in range(d)]] = 1.0 / np.sqrt(d)
    return DensityMatrix(mc.projector(v), (d, d))


def isotropic_state(d: int, visibility: float) -> DensityMatrix:
    if d < 2:
        raise ParameterOutOfRange(f"d must be >= 2, got {d}")
    if not 0.0 <= visibility <= 1.0:
        raise ParameterOutOfRange(f"visibility {visibility} outside [0, 1]")
    bell = bell_state(d).mat
    return DensityMatrix(visibility * bell + (1 - visibility) * mc.identity(d * d) / (d * d), (d, d))


def _gaussian(rng, shape):
    return rng.standard_normal(shape) + 1j * rng.standard_normal(shape)


def random_pure_vector(dim: int, seed) -> np.ndarray:
    rng = as_rng(seed)
    v = _gaussian(rng, dim)
    return v / np.linalg.norm(v)


def sample_random_pure(dim: int, seed) -> DensityMatrix:
    """Haar-random pure state from a normalised complex Gaussian vector."""
    if dim < 1:
        raise ParameterOutOfRange("dim must be positive")
    return DensityMatrix(mc.projector(random_pure_vector(dim, seed)), (dim,))


def sample_random_mixed(dim: int, seed, rank: int | None = None) -> DensityMatrix:
    """Wishart-style state G G^dagger / Tr with G of shape (dim, rank)."""
    rng = as_rng(seed)
    g = _gaussian(rng, (dim, rank or dim))
    w = g @ g.conj().T
    return DensityMatrix(w / np.real(np.trace(w)), (dim,))


def sample_random_state(dims, seed) -> DensityMatrix:
    """Full-rank random state on a bipartite space (generically entangled)."""
    dims = tuple(dims)
    st = sample_random_mixed(int(np.prod(dims)), seed)
    return DensityMatrix(st.mat, dims)


def sample_separable(dims, terms: int, seed, pure_factors: bool = False) -> tuple[SeparableEnsemble, DensityMatrix]:
    """Random separable state with its ensemble certificate.

    Weights are flat-Dirichlet; each local factor is a random pure or random
    Wishart-mixed state with equal probability (always pure with
    ``pure_factors``).
    """
    dx, dz = (int(d) for d in dims)
    if terms < 1:
        raise ParameterOutOfRange("terms must be >= 1")
    rng = as_rng(seed)
    e = rng.exponential(size=terms)
    weights = e / e.sum()

    def local(d):
        if pure_factors or rng.random() < 0.5:
            return DensityMatrix(mc.projector(random_pure_vector(d, rng)), (d,))
        return sample_random_mixed(d, rng)

    xs, zs = [], []
    for _ in range(terms):
        xs.append(local(dx))
        zs.append(local(dz))
    # Renormalise so the weights sum to one as exactly as floating point allows.
    weights = weights / weights.sum()
    ens = SeparableEnsemble(weights, tuple(xs), tuple(zs))
    return ens, DensityMatrix(ens.mixed(), (dx, dz))


def state_to_json(state: DensityMatrix) -> dict:
    return {"dims": list(state.dims), "matrix": mc.matrix_to_json(state.mat)}


def state_from_json(obj, tol: mc.Tolerances = mc.DEFAULT_TOL) -> DensityMatrix:
    try:
        dims, mat = obj["dims"], obj["matrix"]
    except (KeyError, TypeError) as exc:
        raise MalformedInput(f"state object needs 'dims' and 'matrix': {exc}") from exc
    return validate_state(mc.matrix_from_json(mat), dims, tol)
