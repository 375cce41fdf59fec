"""Positive-map registry and map-based negativity.

Maps always act on the first tensor factor of a state. To test the other
side, swap the factors first with :func:`entdisc.states.swap_factors`.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from . import chanrep as cr
from . import matcore as mc
from .errors import DimensionMismatch, MapNotTracePreserving, NotHermiticityPreserving, NotPositive, UnsupportedDim
from .rng import derive_rng
from .states import DensityMatrix, random_pure_vector, sample_random_mixed

POSITIVITY_SAMPLES = 200
DETECTION_THRESHOLD = 1e-8


@dataclass(frozen=True, eq=False)
class PositiveMapSpec:
    name: str
    superop: cr.Superoperator

    @property
    def domain_dim(self) -> int:
        return self.superop.d_in


@dataclass(frozen=True, eq=False)
class NegativityResult:
    value: float
    negative_eigenvalues: np.ndarray
    witness_output: np.ndarray
    trace_norm: float
    map_digest: str

    @property
    def trace_norm_form(self) -> float:
        return (self.trace_norm - 1.0) / 2.0


@dataclass(frozen=True, eq=False)
class Detection:
    detected: bool
    map: PositiveMapSpec | None
    negativity: float
    result: NegativityResult | None = None
    normalization: object = None  # construct.TPNormalization when detected

    def to_dict(self):
        return {
            "detected": self.detected,
            "map": self.map.name if self.map else None,
            "negativity": self.negativity,
            "negativeEigenvalues": [] if self.result is None else [float(x) for x in self.result.negative_eigenvalues],
        }


def sampled_min_output_eigenvalue(s: cr.Superoperator, samples: int = POSITIVITY_SAMPLES, seed: int = 0) -> float:
    """Smallest output eigenvalue over seeded random PSD inputs.

    Two thirds of the probes are pure (the extreme points, where positivity
    is tightest); the rest are Wishart-mixed.
    """
    rng = derive_rng(seed, "positivity", s.d_in)
    worst = np.inf
    for k in range(samples):
        if k % 3 == 2:
            x = sample_random_mixed(s.d_in, rng).mat
        else:
            x = mc.projector(random_pure_vector(s.d_in, rng))
        out = cr.apply_choi(s, x)
        worst = min(worst, float(mc.eigvalsh((out + out.conj().T) / 2)[-1]))
    return worst


def make_positive_map(name: str, s: cr.Superoperator, samples: int = POSITIVITY_SAMPLES, seed: int = 0) -> PositiveMapSpec:
    """Register a user map after Hermiticity and sampled-positivity checks.

    Sampling can only refute positivity; passing is evidence, not proof.
    """
    defect = mc.hermiticity_defect(s.choi)
    if defect > mc.DEFAULT_TOL.hermiticity:
        raise NotHermiticityPreserving(f"map {name!r}: Choi hermiticity defect {defect:.3e}")
    worst = sampled_min_output_eigenvalue(s, samples, seed)
    if worst < -mc.DEFAULT_TOL.psd:
        raise NotPositive(f"map {name!r} sends a PSD input to min eigenvalue {worst:.3e}", min_eigenvalue=worst)
    return PositiveMapSpec(name, s)


def reduction_map(d: int) -> cr.Superoperator:
    """``X -> Tr(X) 1 - X``."""
    return cr.choi_from_applier(lambda x: np.trace(x) * mc.identity(d) - x, d, d, check_linearity=False)


def choi_map() -> cr.Superoperator:
    """Choi's positive, indecomposable map on 3x3 matrices."""

    def apply(x):
        d = np.diag(x)
        shifted = np.array([d[0] + d[2], d[1] + d[0], d[2] + d[1]])
        out = -x.copy()
        out[np.diag_indices(3)] = shifted
        return out

    return cr.choi_from_applier(apply, 3, 3, check_linearity=False)


@lru_cache(maxsize=None)
def builtin_maps(dim: int) -> tuple[PositiveMapSpec, ...]:
    """Registry in detection order: transpose, reduction, then (dim 3) the Choi map."""
    if dim < 2:
        raise UnsupportedDim(f"positive-map registry needs dim >= 2, got {dim}")
    maps = [
        make_positive_map("transpose", cr.transpose_map(dim)),
        make_positive_map("reduction", reduction_map(dim)),
    ]
    if dim == 3:
        maps.append(make_positive_map("choi-map", choi_map()))
    return tuple(maps)


def get_map(name: str, dim: int) -> PositiveMapSpec:
    for m in builtin_maps(dim):
        if m.name == name:
            return m
    raise UnsupportedDim(f"no map named {name!r} at dim {dim}")


def _as_superop(m) -> cr.Superoperator:
    for attr in ("phi_tp", "superop"):
        if hasattr(m, attr):
            return getattr(m, attr)
    return m


def negativity(phi_tp, rho: DensityMatrix, tol: mc.Tolerances = mc.DEFAULT_TOL) -> NegativityResult:
    """Generalized negativity of ``rho`` under a positive trace-preserving map.

    ``phi_tp`` may be a ``Superoperator``, a ``PositiveMapSpec`` or a TP
    normalization; the map must already be trace-preserving. Eigenvalues
    below ``-tol.eigen_zero`` count as negative.
    """
    s = _as_superop(phi_tp)
    tp_defect = mc.max_abs_diff(cr.choi_partial_trace_output(s), mc.identity(s.d_in))
    if tp_defect > tol.trace:
        raise MapNotTracePreserving(f"Tr_Y J deviates from identity by {tp_defect:.3e}; normalize first")
    if not rho.is_bipartite or rho.dims[0] != s.d_in:
        raise DimensionMismatch(f"state dims {rho.dims} do not start with map input {s.d_in}")
    out = cr.apply_tensor_identity(s, rho)
    out = (out + out.conj().T) / 2
    w = mc.eigvalsh(out, tol)
    neg = w[w < -tol.eigen_zero]
    return NegativityResult(
        value=float(np.sum(np.abs(neg))),
        negative_eigenvalues=neg,
        witness_output=out,
        trace_norm=float(np.sum(np.abs(w))),
        map_digest=s.digest(),
    )


def standard_negativity(rho: DensityMatrix, tol: mc.Tolerances = mc.DEFAULT_TOL) -> float:
    """Negativity of the partial transpose on the first factor."""
    w = mc.eigvalsh(mc.partial_transpose(rho.mat, rho.dims, mc.FIRST), tol)
    return float(-np.sum(w[w < 0])) + 0.0


def detect_entanglement(rho: DensityMatrix, maps=None, tol: mc.Tolerances = mc.DEFAULT_TOL) -> Detection:
    """Try registry maps in order; the first with negativity above 1e-8 wins.

    ``detected=False`` does not certify separability: the registry is finite.
    """
    from .construct import normalize_to_tp

    if not rho.is_bipartite:
        raise DimensionMismatch("entanglement detection needs a bipartite state")
    if maps is None:
        maps = builtin_maps(rho.dims[0])
    for spec in maps:
        tp = normalize_to_tp(spec)
        res = negativity(tp, rho, tol)
        if res.value > DETECTION_THRESHOLD:
            return Detection(True, spec, res.value, res, tp)
    return Detection(False, None, 0.0)
