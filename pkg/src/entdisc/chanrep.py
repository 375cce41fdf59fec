"""Superoperators stored as Choi matrices.

The Choi matrix of a map from L(X) to L(Y) is
``J = sum_ij Phi[|i><j|] (x) |i><j|`` on ``Y (x) X`` (output factor first).
A 4-index view ``J[y, x, y', x']`` gives ``Phi[X][y, y'] = sum J[y,x,y',x'] X[x,x']``,
which is how both application routines below are written.
"""

from __future__ import annotations

import hashlib
from dataclasses import asdict, dataclass
from typing import Callable

import numpy as np

from . import matcore as mc
from .errors import DimensionMismatch, MalformedInput, NonLinearApplier
from .rng import derive_rng
from .states import DensityMatrix


@dataclass(frozen=True, eq=False)
class Superoperator:
    choi: np.ndarray
    d_in: int
    d_out: int

    def __post_init__(self):
        d_in, d_out = int(self.d_in), int(self.d_out)
        choi = np.array(self.choi, dtype=np.complex128, copy=True)
        n = d_in * d_out
        if d_in < 1 or d_out < 1 or choi.shape != (n, n):
            raise DimensionMismatch(f"Choi shape {choi.shape} does not match dOut*dIn = {d_out}*{d_in}")
        choi.setflags(write=False)
        object.__setattr__(self, "choi", choi)
        object.__setattr__(self, "d_in", d_in)
        object.__setattr__(self, "d_out", d_out)

    @property
    def choi4(self) -> np.ndarray:
        return self.choi.reshape(self.d_out, self.d_in, self.d_out, self.d_in)

    def __call__(self, x):
        return apply_choi(self, x)

    def _check_same(self, other):
        if (self.d_in, self.d_out) != (other.d_in, other.d_out):
            raise DimensionMismatch(
                f"maps {self.d_in}->{self.d_out} and {other.d_in}->{other.d_out} are incompatible"
            )

    def __add__(self, other):
        self._check_same(other)
        return Superoperator(self.choi + other.choi, self.d_in, self.d_out)

    def __sub__(self, other):
        self._check_same(other)
        return Superoperator(self.choi - other.choi, self.d_in, self.d_out)

    def __mul__(self, scalar):
        return Superoperator(scalar * self.choi, self.d_in, self.d_out)

    __rmul__ = __mul__

    def digest(self) -> str:
        """Content hash used to tie derived objects back to the map that made them."""
        h = hashlib.sha256()
        h.update(f"{self.d_in}:{self.d_out}:".encode())
        h.update(np.ascontiguousarray(self.choi + 0.0).tobytes())
        return h.hexdigest()


@dataclass(frozen=True)
class ChannelPropertyReport:
    hermiticity_preserving: bool
    trace_preserving: bool
    trace_annihilating: bool
    completely_positive: bool
    is_channel: bool
    max_violation: dict

    def to_dict(self):
        return asdict(self)


def choi_from_applier(
    apply: Callable[[np.ndarray], np.ndarray],
    d_in: int,
    d_out: int,
    check_linearity: bool = True,
    seed: int = 0,
) -> Superoperator:
    """Tabulate ``apply`` on the matrix units of L(X).

    Linearity is spot-checked on 5 seeded random pairs; this is a guard
    against obviously wrong appliers, not a proof.
    """
    blocks = np.zeros((d_out, d_in, d_out, d_in), dtype=np.complex128)
    for i in range(d_in):
        for j in range(d_in):
            out = np.asarray(apply(mc.unit(d_in, i, j)), dtype=np.complex128)
            if out.shape != (d_out, d_out):
                raise DimensionMismatch(f"applier returned shape {out.shape}, expected {(d_out, d_out)}")
            blocks[:, i, :, j] = out
    s = Superoperator(blocks.reshape(d_out * d_in, d_out * d_in), d_in, d_out)
    if check_linearity:
        rng = derive_rng(seed, "linearity")
        for _ in range(5):
            x = rng.standard_normal((d_in, d_in)) + 1j * rng.standard_normal((d_in, d_in))
            y = rng.standard_normal((d_in, d_in)) + 1j * rng.standard_normal((d_in, d_in))
            a, b = rng.standard_normal(2) + 1j * rng.standard_normal(2)
            lhs = np.asarray(apply(a * x + b * y))
            rhs = a * np.asarray(apply(x)) + b * np.asarray(apply(y))
            scale = max(1.0, float(np.max(np.abs(rhs))))
            if mc.max_abs_diff(lhs, rhs) > 1e-9 * scale:
                raise NonLinearApplier("applier failed the linearity spot-check")
            if mc.max_abs_diff(apply_choi(s, x), np.asarray(apply(x))) > 1e-9 * scale:
                raise NonLinearApplier("applier disagrees with its own matrix-unit table")
    return s


def apply_choi(s: Superoperator, x) -> np.ndarray:
    """``Phi[X] = Tr_X[(1_Y (x) X^T) J]``, written as a contraction."""
    a = mc.as_matrix(x)
    if a.shape != (s.d_in, s.d_in):
        raise DimensionMismatch(f"input shape {a.shape}, map expects {s.d_in}x{s.d_in}")
    return np.einsum("yaYb,ab->yY", s.choi4, a)


def apply_tensor_identity(s: Superoperator, rho) -> np.ndarray:
    """``(Phi (x) 1_Z)[rho]`` for rho on ``X (x) Z``; output lives on ``Y (x) Z``."""
    if isinstance(rho, DensityMatrix):
        if not rho.is_bipartite or rho.dims[0] != s.d_in:
            raise DimensionMismatch(f"state dims {rho.dims} do not start with map input {s.d_in}")
        m, dz = rho.mat, rho.dims[1]
    else:
        m = mc.require_square(rho)
        if m.shape[0] % s.d_in:
            raise DimensionMismatch(f"operator of size {m.shape[0]} has no factor {s.d_in}")
        dz = m.shape[0] // s.d_in
    r4 = np.asarray(m).reshape(s.d_in, dz, s.d_in, dz)
    out = np.einsum("yaYb,azbw->yzYw", s.choi4, r4)
    return out.reshape(s.d_out * dz, s.d_out * dz)


def adjoint(s: Superoperator) -> Superoperator:
    """Hilbert-Schmidt adjoint: ``J_adj[x, y, x', y'] = conj(J[y, x, y', x'])``."""
    j4 = s.choi4.transpose(1, 0, 3, 2).conj()
    n = s.d_in * s.d_out
    return Superoperator(j4.reshape(n, n), s.d_out, s.d_in)


def choi_partial_trace_output(s: Superoperator) -> np.ndarray:
    """``Tr_Y J``, an operator on X."""
    return mc.partial_trace(s.choi, (s.d_out, s.d_in), mc.FIRST)


def classify(s: Superoperator, tol: mc.Tolerances = mc.DEFAULT_TOL) -> ChannelPropertyReport:
    herm = mc.hermiticity_defect(s.choi)
    tr_y = choi_partial_trace_output(s)
    tp = mc.max_abs_diff(tr_y, mc.identity(s.d_in))
    ta = float(np.max(np.abs(tr_y)))
    if herm <= tol.hermiticity:
        min_eig = float(mc.eigvalsh(s.choi, tol)[-1])
        cp_violation = max(0.0, -min_eig)
    else:
        cp_violation = float("inf")
    cp = cp_violation <= tol.psd
    tp_ok = tp <= tol.trace
    return ChannelPropertyReport(
        hermiticity_preserving=herm <= tol.hermiticity,
        trace_preserving=tp_ok,
        trace_annihilating=ta <= tol.trace,
        completely_positive=cp,
        is_channel=cp and tp_ok,
        max_violation={
            "hermiticityPreserving": herm,
            "tracePreserving": tp,
            "traceAnnihilating": ta,
            "completelyPositive": cp_violation,
        },
    )


def identity_channel(d: int) -> Superoperator:
    return choi_from_applier(lambda x: x, d, d, check_linearity=False)


def transpose_map(d: int) -> Superoperator:
    return choi_from_applier(lambda x: x.T, d, d, check_linearity=False)


def trace_map(d_in: int, d_out: int) -> Superoperator:
    """``X -> Tr(X) 1_Y``."""
    return Superoperator(mc.identity(d_out * d_in), d_in, d_out)


def zero_map(d_in: int, d_out: int) -> Superoperator:
    return Superoperator(np.zeros((d_in * d_out, d_in * d_out)), d_in, d_out)


def depolarizing_channel(d_in: int, d_out: int) -> Superoperator:
    """Totally depolarizing channel ``X -> Tr(X) 1_Y / d_out``."""
    if d_in < 1 or d_out < 1:
        raise DimensionMismatch("dimensions must be positive")
    return Superoperator(mc.identity(d_out * d_in) / d_out, d_in, d_out)


def random_channel(d_in: int, d_out: int, seed, kraus_rank: int | None = None) -> Superoperator:
    """Random CPTP map from a random isometry ``X -> Y (x) E`` traced over E."""
    rng = derive_rng(seed, "random_channel") if not isinstance(seed, np.random.Generator) else seed
    k = kraus_rank or d_in * d_out
    g = rng.standard_normal((d_out * k, d_in)) + 1j * rng.standard_normal((d_out * k, d_in))
    v, _ = np.linalg.qr(g)  # columns orthonormal: an isometry
    kraus = v.reshape(d_out, k, d_in).transpose(1, 0, 2)
    return choi_from_applier(
        lambda x: sum(kk @ x @ kk.conj().T for kk in kraus), d_in, d_out, check_linearity=False
    )


def in_separable_ball(sigma, dims=None) -> bool:
    """Sufficient separability test: ``Tr(sigma^2) <= 1/(D - 1)``.

    Every state inside this purity ball around the maximally mixed state is
    separable; a ``False`` result says nothing.
    """
    if isinstance(sigma, DensityMatrix):
        m, dims = sigma.mat, sigma.dims
    else:
        m = mc.require_square(sigma)
    if dims is not None and int(np.prod(dims)) != m.shape[0]:
        raise DimensionMismatch(f"dims {dims} do not match size {m.shape[0]}")
    if dims is not None and len(dims) != 2:
        raise DimensionMismatch("separable-ball test needs a bipartite state")
    d = m.shape[0]
    return mc.purity(m) <= 1.0 / (d - 1) + 1e-15


def is_ppt(sigma: DensityMatrix, tol: mc.Tolerances = mc.DEFAULT_TOL) -> bool:
    """Necessary separability test (positive partial transpose)."""
    pt = mc.partial_transpose(sigma.mat, sigma.dims, mc.FIRST)
    return bool(mc.eigvalsh(pt, tol)[-1] >= -tol.psd)


def channel_to_json(s: Superoperator) -> dict:
    return {"dIn": s.d_in, "dOut": s.d_out, "choi": mc.matrix_to_json(s.choi)}


def channel_from_json(obj) -> Superoperator:
    try:
        d_in, d_out, choi = int(obj["dIn"]), int(obj["dOut"]), obj["choi"]
    except (KeyError, TypeError, ValueError) as exc:
        raise MalformedInput(f"channel object needs dIn, dOut, choi: {exc}") from exc
    return Superoperator(mc.matrix_from_json(choi), d_in, d_out)
