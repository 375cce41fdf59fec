"""From a detecting positive map to a pair of channels that the detected
state tells apart better than any separable probe can.

Pipeline: positive map -> trace-preserving positive map (one extra output
coordinate) -> trace-annihilating map (a second extra coordinate) -> two
channels whose difference is a positive multiple of the trace-annihilating
map. Appended coordinates are always the last basis vector of the enlarged
output space.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from . import chanrep as cr
from . import matcore as mc
from .detect import NegativityResult, PositiveMapSpec, detect_entanglement, get_map
from .errors import (
    DegenerateMap,
    DegenerateTA,
    DimensionMismatch,
    NotDetected,
    NotHermiticityPreserving,
    NotTA,
    ParameterOutOfRange,
)
from .states import DensityMatrix

XI_BLOCK = "block"
XI_PURIFICATION = "purification"
PARTIAL_TRACE_AGREEMENT = 1e-8
DEGENERACY_CUTOFF = 1e-12
EB_BISECTION_TOL = 1e-6


@dataclass(frozen=True, eq=False)
class TPNormalization:
    phi_tp: cr.Superoperator
    lam: float
    original: PositiveMapSpec | cr.Superoperator


@dataclass(frozen=True, eq=False)
class ChannelPair:
    psi0: cr.Superoperator
    psi1: cr.Superoperator
    c: float
    q: np.ndarray
    xi: np.ndarray
    phi_ta: cr.Superoperator
    phi_tp_digest: str | None = None
    xi_mode: str = XI_BLOCK
    discarded_mass: float = 0.0

    @property
    def closed_form_distance(self) -> float:
        """The no-ancilla distance of the pair, exactly ``2c``."""
        return 2.0 * self.c


@dataclass(frozen=True, eq=False)
class EBPair:
    xi0: cr.Superoperator
    xi1: cr.Superoperator
    p: float
    ball_certified: bool


class Construction(NamedTuple):
    pair: ChannelPair
    map: PositiveMapSpec
    negativity: NegativityResult
    normalization: TPNormalization


def _superop(omega) -> cr.Superoperator:
    return omega.superop if isinstance(omega, PositiveMapSpec) else omega


def normalize_to_tp(omega) -> TPNormalization:
    """Rescale a positive map by its largest output trace and pad it to TP.

    With ``M = Tr_Y J(omega)`` one has ``Tr omega[rho] = Tr(rho M^T)``, so the
    maximum over states is the top eigenvalue of ``M``. The trace deficit
    ``Tr(X) - Tr(omega[X]) / lam`` is routed into a new final output
    coordinate, whose Choi block is ``1 - M / lam``.
    """
    s = _superop(omega)
    m = cr.choi_partial_trace_output(s)
    m = (m + m.conj().T) / 2
    lam = float(mc.eigvalsh(m)[0])
    if lam <= DEGENERACY_CUTOFF:
        raise DegenerateMap(f"map annihilates every state (lambda = {lam:.3e})")
    d_in, d_w = s.d_in, s.d_out + 1
    j4 = np.zeros((d_w, d_in, d_w, d_in), dtype=np.complex128)
    j4[:-1, :, :-1, :] = s.choi4 / lam
    j4[-1, :, -1, :] = mc.identity(d_in) - m / lam
    phi_tp = cr.Superoperator(j4.reshape(d_w * d_in, d_w * d_in), d_in, d_w)
    return TPNormalization(phi_tp, lam, omega)


def ta_from_tp(phi_tp: cr.Superoperator) -> cr.Superoperator:
    """``X -> phi_tp[X] (+) 0  -  Tr(X) |last><last|``."""
    d_in, d_y = phi_tp.d_in, phi_tp.d_out + 1
    j4 = np.zeros((d_y, d_in, d_y, d_in), dtype=np.complex128)
    j4[:-1, :, :-1, :] = phi_tp.choi4
    j4[-1, :, -1, :] = -mc.identity(d_in)
    return cr.Superoperator(j4.reshape(d_y * d_in, d_y * d_in), d_in, d_y)


def build_ta(tp: TPNormalization) -> cr.Superoperator:
    return ta_from_tp(tp.phi_tp)


def jordan_split(h, cutoff: float = mc.DEFAULT_TOL.eigen_zero):
    """Positive and negative parts ``(P0, P1, discarded)`` of a Hermitian matrix.

    Eigenvalues with magnitude at most ``cutoff`` go to neither part; their
    total magnitude is returned as ``discarded``.
    """
    w, v = mc.hermitian_eig(h)
    pos, neg = w > cutoff, w < -cutoff
    p0 = (v[:, pos] * w[pos]) @ v[:, pos].conj().T
    p1 = (v[:, neg] * -w[neg]) @ v[:, neg].conj().T
    discarded = float(np.sum(np.abs(w[~(pos | neg)])))
    return p0, p1, discarded


def _purification(a: np.ndarray, d_out: int, cutoff: float) -> np.ndarray:
    w, v = mc.hermitian_eig(a)
    keep = w > cutoff
    if int(keep.sum()) > d_out:
        raise DimensionMismatch(f"rank {int(keep.sum())} of 1 - cQ exceeds output dimension {d_out}")
    d_in = a.shape[0]
    vec = np.zeros(d_out * d_in, dtype=np.complex128)
    for k, idx in enumerate(np.flatnonzero(keep)):
        vec += np.sqrt(w[idx]) * np.kron(mc.ket(d_out, k), v[:, idx])
    return mc.projector(vec)


def channel_pair_from_ta(
    ta: cr.Superoperator,
    xi_mode: str = XI_BLOCK,
    tol: mc.Tolerances = mc.DEFAULT_TOL,
    phi_tp_digest: str | None = None,
) -> ChannelPair:
    """Split a Hermiticity-preserving, trace-annihilating map into two channels.

    ``J(ta) = P0 - P1`` (Jordan split), ``Q = Tr_Y P0 = Tr_Y P1``,
    ``c = 1 / lambda_max(Q)`` and ``J(psi_i) = c P_i + xi`` where
    ``Tr_Y xi = 1 - cQ``. The default ``xi`` is ``|last><last| (x) (1 - cQ)``;
    ``xi_mode="purification"`` uses a rank-one purification instead.
    """
    report = cr.classify(ta, tol)
    if not report.hermiticity_preserving:
        raise NotHermiticityPreserving(
            f"Choi hermiticity defect {report.max_violation['hermiticityPreserving']:.3e}"
        )
    if not report.trace_annihilating:
        raise NotTA(f"max|Tr_Y J| = {report.max_violation['traceAnnihilating']:.3e}")
    dims = (ta.d_out, ta.d_in)
    p0, p1, discarded = jordan_split(ta.choi, tol.eigen_zero)
    q0 = mc.partial_trace(p0, dims, mc.FIRST)
    q1 = mc.partial_trace(p1, dims, mc.FIRST)
    gap = mc.max_abs_diff(q0, q1)
    if gap > PARTIAL_TRACE_AGREEMENT:
        raise NotTA(f"partial traces of the Jordan parts differ by {gap:.3e}")
    q = (q0 + q1) / 2
    q = (q + q.conj().T) / 2
    q_norm = float(mc.eigvalsh(q)[0])
    if q_norm <= DEGENERACY_CUTOFF:
        raise DegenerateTA("J(ta) vanishes; no channel pair can be built")
    c = 1.0 / q_norm
    slack = mc.identity(ta.d_in) - c * q
    if xi_mode == XI_BLOCK:
        xi = np.kron(mc.projector(mc.ket(ta.d_out, ta.d_out - 1)), slack)
    elif xi_mode == XI_PURIFICATION:
        xi = _purification(slack, ta.d_out, tol.eigen_zero)
    else:
        raise ValueError(f"unknown xi mode {xi_mode!r}")
    psi0 = cr.Superoperator(c * p0 + xi, ta.d_in, ta.d_out)
    psi1 = cr.Superoperator(c * p1 + xi, ta.d_in, ta.d_out)
    return ChannelPair(psi0, psi1, c, q, xi, ta, phi_tp_digest, xi_mode, discarded)


def state_to_channels(
    rho: DensityMatrix,
    map_name: str | None = None,
    xi_mode: str = XI_BLOCK,
    tol: mc.Tolerances = mc.DEFAULT_TOL,
) -> Construction:
    """Detect ``rho`` with the registry and build its channel pair.

    Raises ``NotDetected`` when no registry map sees the entanglement, which
    is not a proof of separability.
    """
    maps = [get_map(map_name, rho.dims[0])] if map_name else None
    det = detect_entanglement(rho, maps, tol)
    if not det.detected:
        tried = map_name or "registry"
        raise NotDetected(f"no negativity above threshold under {tried}")
    tp = det.normalization
    pair = channel_pair_from_ta(build_ta(tp), xi_mode, tol, tp.phi_tp.digest())
    return Construction(pair, det.map, det.result, tp)


def transpose_channels_closed_form(d: int) -> ChannelPair:
    """Transposition channels on ``X -> X (+) C``, ``c = 2 / (d + 1)``.

    ``psi0[X] = (Tr(X) 1_X + X^T) / (d + 1)`` and
    ``psi1[X] = (Tr(X) (1_X + 2|0><0|) - X^T) / (d + 1)`` with ``|0>`` the
    appended coordinate. Their Choi matrices are exactly ``c`` times the
    Jordan parts, so ``xi = 0`` and ``Q = (d + 1)/2 * 1``.
    """
    if d < 2:
        raise ParameterOutOfRange(f"d must be >= 2, got {d}")
    e = d + 1
    one_x = mc.direct_sum_embed(mc.identity(d), 1)
    anc = mc.projector(mc.ket(e, d))

    def psi0(x):
        return (np.trace(x) * one_x + mc.direct_sum_embed(x.T, 1)) / e

    def psi1(x):
        return (np.trace(x) * (one_x + 2 * anc) - mc.direct_sum_embed(x.T, 1)) / e

    t = cr.transpose_map(d)
    return ChannelPair(
        psi0=cr.choi_from_applier(psi0, d, e),
        psi1=cr.choi_from_applier(psi1, d, e),
        c=2.0 / e,
        q=mc.identity(d) * e / 2.0,
        xi=np.zeros((e * d, e * d), dtype=np.complex128),
        phi_ta=ta_from_tp(t),
        phi_tp_digest=t.digest(),
        xi_mode="closed-form",
    )


def _mix(pair: ChannelPair, p: float):
    omega = cr.depolarizing_channel(pair.psi0.d_in, pair.psi0.d_out)
    return p * pair.psi0 + (1 - p) * omega, p * pair.psi1 + (1 - p) * omega


def _in_ball(x0: cr.Superoperator, x1: cr.Superoperator) -> bool:
    dims = (x0.d_out, x0.d_in)
    return all(cr.in_separable_ball(x.choi / x.d_in, dims) for x in (x0, x1))


def eb_mix(pair: ChannelPair, p: float | None = None) -> EBPair:
    """Mix both channels with the totally depolarizing channel.

    With ``p`` omitted, bisection (to 1e-6) finds the largest ``p`` in (0, 1]
    for which both normalised Choi matrices lie in the separable purity
    ball, so the mixed channels are certified entanglement breaking.
    """
    if p is not None:
        if not 0.0 < p <= 1.0:
            raise ParameterOutOfRange(f"p = {p} outside (0, 1]")
        x0, x1 = _mix(pair, p)
        return EBPair(x0, x1, float(p), _in_ball(x0, x1))
    if _in_ball(*_mix(pair, 1.0)):
        return EBPair(*_mix(pair, 1.0), 1.0, True)
    lo, hi = 0.0, 1.0
    while hi - lo > EB_BISECTION_TOL:
        mid = (lo + hi) / 2
        if _in_ball(*_mix(pair, mid)):
            lo = mid
        else:
            hi = mid
    if lo == 0.0:
        lo = EB_BISECTION_TOL / 2
    x0, x1 = _mix(pair, lo)
    return EBPair(x0, x1, lo, _in_ball(x0, x1))
