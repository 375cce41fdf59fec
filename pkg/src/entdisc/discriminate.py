"""State and channel discrimination quantities.

Channel norms are estimated by see-saw ascent, which only ever produces
lower bounds. For pairs built by :mod:`entdisc.construct` the exact no-ancilla
distance ``2c`` is known, and reports compare the two.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, field

import numpy as np

from . import chanrep as cr
from . import matcore as mc
from .construct import ChannelPair
from .detect import NegativityResult, standard_negativity
from .errors import DimensionMismatch, InconsistentProvenance, InvalidPOVM
from .rng import RNG_ALGORITHM, derive_rng
from .states import DensityMatrix, isotropic_state

SEESAW_RESTARTS = 20
SEESAW_MAX_ITER = 500
SEESAW_CONVERGENCE = 1e-10
Z95 = 1.959963984540054


@dataclass(frozen=True, eq=False)
class HelstromResult:
    p_error_min: float
    trace_distance: float
    m0: np.ndarray
    m1: np.ndarray
    p_error: float  # error probability of (m0, m1) evaluated directly

    @property
    def p_success(self) -> float:
        return 1.0 - self.p_error_min


@dataclass(frozen=True, eq=False)
class SeesawResult:
    value: float
    best_input: np.ndarray  # pure input vector achieving ``value``
    iterations: list  # per start, in start order
    starts: int
    seed: int

    def __float__(self):
        return self.value


@dataclass
class DiscriminationReport:
    separable_bound: float
    closed_form_bound: float
    probe_distance: float
    advantage: float
    predicted_advantage: float
    diamond_lower_bound: float
    c: float
    negativity: float
    p_success_probe: float
    p_success_best_product: float
    seed: int
    restarts: int
    seesaw_iterations: dict = field(default_factory=dict)
    flags: list = field(default_factory=list)
    rng_algorithm: str = RNG_ALGORITHM

    def to_dict(self):
        return asdict(self)


def _matrix(x) -> np.ndarray:
    return x.mat if isinstance(x, DensityMatrix) else mc.require_square(x)


def helstrom_measurement(delta) -> tuple[np.ndarray, np.ndarray]:
    """Projectors onto the non-negative and negative eigenspaces of ``delta``.

    Zero eigenvalues go to the first projector so the split is deterministic.
    """
    w, v = mc.hermitian_eig(delta)
    keep = w >= 0
    m0 = v[:, keep] @ v[:, keep].conj().T
    return m0, mc.identity(len(w)) - m0


def helstrom(rho0, rho1) -> HelstromResult:
    """Minimum error for telling two equiprobable states apart."""
    a, b = _matrix(rho0), _matrix(rho1)
    if a.shape != b.shape:
        raise DimensionMismatch(f"states have shapes {a.shape} and {b.shape}")
    delta = a - b
    delta = (delta + delta.conj().T) / 2
    dist = mc.trace_norm(delta)
    m0, m1 = helstrom_measurement(delta)
    p_err = 0.5 * (1 - 0.5 * float(np.real(np.trace((m0 - m1) @ delta))))
    return HelstromResult(0.5 * (1 - 0.5 * dist), dist, m0, m1, p_err)


def _check_pair(psi0: cr.Superoperator, psi1: cr.Superoperator) -> cr.Superoperator:
    if (psi0.d_in, psi0.d_out) != (psi1.d_in, psi1.d_out):
        raise DimensionMismatch(
            f"channels {psi0.d_in}->{psi0.d_out} and {psi1.d_in}->{psi1.d_out} are incompatible"
        )
    return psi0 - psi1


def _seesaw(delta: cr.Superoperator, starts, ancilla: bool):
    """Alternate sign measurement and top-eigenvector input for each start."""
    adj = cr.adjoint(delta)
    fwd = cr.apply_tensor_identity if ancilla else cr.apply_choi

    def value(vec):
        return mc.trace_norm(fwd(delta, mc.projector(vec)))

    best_val, best_vec, iters = -1.0, None, []
    for vec in starts:
        vec = vec / np.linalg.norm(vec)
        out = fwd(delta, mc.projector(vec))
        prev = mc.trace_norm(out)
        n = 0
        for n in range(1, SEESAW_MAX_ITER + 1):
            m0, m1 = helstrom_measurement((out + out.conj().T) / 2)
            k = fwd(adj, m0 - m1)
            vec = mc.hermitian_eig((k + k.conj().T) / 2).eigenvectors[:, 0]
            out = fwd(delta, mc.projector(vec))
            cur = mc.trace_norm(out)
            done = abs(cur - prev) < SEESAW_CONVERGENCE
            prev = max(prev, cur)
            if done:
                break
        iters.append(n)
        final = value(vec)
        if final > best_val:
            best_val, best_vec = final, vec
    return best_val, best_vec, iters


def _random_vectors(dim, restarts, seed, label):
    for i in range(restarts):
        rng = derive_rng(seed, "seesaw", label, i)
        yield rng.standard_normal(dim) + 1j * rng.standard_normal(dim)


def channel_distance_no_ancilla(
    psi0: cr.Superoperator, psi1: cr.Superoperator, restarts: int = SEESAW_RESTARTS, seed: int = 0
) -> SeesawResult:
    """Lower bound on ``max_rho ||psi0[rho] - psi1[rho]||_tr`` over pure inputs.

    Starts: ``|0>``, the uniform superposition, then ``restarts`` seeded
    Gaussian vectors, each from its own ``(seed, index)`` stream.
    """
    delta = _check_pair(psi0, psi1)
    d = delta.d_in
    starts = [mc.ket(d, 0), np.ones(d, dtype=np.complex128)]
    starts += list(_random_vectors(d, restarts, seed, "no-ancilla"))
    val, vec, iters = _seesaw(delta, starts, ancilla=False)
    return SeesawResult(val, vec, iters, len(starts), seed)


def diamond_lower_bound(
    psi0: cr.Superoperator,
    psi1: cr.Superoperator,
    restarts: int = SEESAW_RESTARTS,
    seed: int = 0,
    extra_probes=(),
) -> SeesawResult:
    """See-saw lower bound on the diamond distance with an ancilla of size ``d_in``.

    Starts: the maximally entangled vector, ``|00>``, then seeded Gaussian
    vectors. Any ``extra_probes`` (states on ``X (x) Z``, any ``Z``) enter as
    fixed candidates, so the result dominates each of their probe distances.
    """
    delta = _check_pair(psi0, psi1)
    d = delta.d_in
    max_ent = np.eye(d, dtype=np.complex128).reshape(-1)
    starts = [max_ent, mc.ket(d * d, 0)]
    starts += list(_random_vectors(d * d, restarts, seed, "ancilla"))
    val, vec, iters = _seesaw(delta, starts, ancilla=True)
    for rho in extra_probes:
        val = max(val, probe_distance(psi0, psi1, rho))
    return SeesawResult(val, vec, iters, len(starts), seed)


def probe_distance(psi0: cr.Superoperator, psi1: cr.Superoperator, rho) -> float:
    """Exact ``||((psi0 - psi1) (x) 1)[rho]||_tr``."""
    delta = _check_pair(psi0, psi1)
    return mc.trace_norm(cr.apply_tensor_identity(delta, rho))


def output_states(psi0: cr.Superoperator, psi1: cr.Superoperator, rho):
    """The two states an experimenter measures after probing with ``rho``."""
    if isinstance(rho, DensityMatrix) and not rho.is_bipartite:
        return cr.apply_choi(psi0, rho.mat), cr.apply_choi(psi1, rho.mat)
    return cr.apply_tensor_identity(psi0, rho), cr.apply_tensor_identity(psi1, rho)


def advantage_report(
    pair: ChannelPair,
    rho: DensityMatrix,
    negativity: NegativityResult,
    restarts: int = SEESAW_RESTARTS,
    seed: int = 0,
) -> DiscriminationReport:
    if pair.phi_tp_digest is not None and pair.phi_tp_digest != negativity.map_digest:
        raise InconsistentProvenance("negativity was computed with a different trace-preserving map")
    probe = probe_distance(pair.psi0, pair.psi1, rho)
    sep = channel_distance_no_ancilla(pair.psi0, pair.psi1, restarts, seed)
    dia = diamond_lower_bound(pair.psi0, pair.psi1, restarts, seed, extra_probes=[rho])
    closed = pair.closed_form_distance
    flags = []
    if sep.value > closed + 1e-8:
        flags.append("seesaw-exceeds-closed-form")
    if sep.value < closed - 1e-6:
        flags.append("seesaw-below-closed-form")
    best_product = DensityMatrix(mc.projector(sep.best_input), (pair.psi0.d_in,))
    return DiscriminationReport(
        separable_bound=sep.value,
        closed_form_bound=closed,
        probe_distance=probe,
        advantage=probe - max(sep.value, closed),
        predicted_advantage=2 * pair.c * negativity.value,
        diamond_lower_bound=dia.value,
        c=pair.c,
        negativity=negativity.value,
        p_success_probe=helstrom(*output_states(pair.psi0, pair.psi1, rho)).p_success,
        p_success_best_product=helstrom(*output_states(pair.psi0, pair.psi1, best_product)).p_success,
        seed=seed,
        restarts=restarts,
        seesaw_iterations={"noAncilla": sep.iterations, "diamond": dia.iterations},
        flags=flags,
    )


def channel_report(
    psi0: cr.Superoperator,
    psi1: cr.Superoperator,
    rho: DensityMatrix,
    restarts: int = SEESAW_RESTARTS,
    seed: int = 0,
    closed_form: float | None = None,
) -> DiscriminationReport:
    """Report for a pair with no construction record.

    Without ``closed_form`` the separable bound is only the see-saw lower
    bound, so ``advantage`` may overstate the true gap; the report carries a
    ``one-sided-separable-bound`` flag in that case.
    """
    probe = probe_distance(psi0, psi1, rho)
    sep = channel_distance_no_ancilla(psi0, psi1, restarts, seed)
    dia = diamond_lower_bound(psi0, psi1, restarts, seed, extra_probes=[rho])
    flags = []
    if closed_form is None:
        flags.append("one-sided-separable-bound")
        bound = sep.value
    else:
        bound = max(sep.value, closed_form)
        if sep.value > closed_form + 1e-8:
            flags.append("seesaw-exceeds-closed-form")
    best_product = DensityMatrix(mc.projector(sep.best_input), (psi0.d_in,))
    return DiscriminationReport(
        separable_bound=sep.value,
        closed_form_bound=closed_form,
        probe_distance=probe,
        advantage=probe - bound,
        predicted_advantage=None,
        diamond_lower_bound=dia.value,
        c=None,
        negativity=None,
        p_success_probe=helstrom(*output_states(psi0, psi1, rho)).p_success,
        p_success_best_product=helstrom(*output_states(psi0, psi1, best_product)).p_success,
        seed=seed,
        restarts=restarts,
        seesaw_iterations={"noAncilla": sep.iterations, "diamond": dia.iterations},
        flags=flags,
    )


@dataclass(frozen=True)
class SimulationResult:
    success_rate: float
    ci95: float
    shots: int
    successes: int
    expected_success: float
    seed: int

    @property
    def standard_error(self) -> float:
        return self.ci95 / Z95

    def to_dict(self):
        d = asdict(self)
        d["rngAlgorithm"] = RNG_ALGORITHM
        return d


def _check_povm(m0, m1, dim, tol: mc.Tolerances):
    for m in (m0, m1):
        if m.shape != (dim, dim):
            raise InvalidPOVM(f"POVM element shape {m.shape}, states are {dim}x{dim}")
        if mc.hermiticity_defect(m) > tol.hermiticity:
            raise InvalidPOVM("POVM element is not Hermitian")
        if mc.eigvalsh(m, tol)[-1] < -tol.psd:
            raise InvalidPOVM("POVM element is not positive semidefinite")
    if mc.max_abs_diff(m0 + m1, mc.identity(dim)) > tol.psd:
        raise InvalidPOVM("POVM elements do not sum to the identity")


def simulate_experiment(
    rho0, rho1, measurement, shots: int, seed: int, tol: mc.Tolerances = mc.DEFAULT_TOL
) -> SimulationResult:
    """Monte-Carlo of the guessing game with a uniform prior.

    Each shot picks ``i`` uniformly, draws the outcome by inverse CDF on
    ``(Tr M0 rho_i, Tr M1 rho_i)`` and scores a success when outcome equals
    ``i``. ``ci95`` is the normal-approximation half-width (rough below ~100
    shots).
    """
    a, b = _matrix(rho0), _matrix(rho1)
    if a.shape != b.shape:
        raise DimensionMismatch(f"states have shapes {a.shape} and {b.shape}")
    if shots < 1:
        raise InvalidPOVM("shots must be >= 1")
    m0, m1 = (mc.as_matrix(m) for m in measurement)
    _check_povm(m0, m1, a.shape[0], tol)
    p0 = np.clip([np.real(np.trace(m0 @ a)), np.real(np.trace(m0 @ b))], 0.0, 1.0)
    rng = derive_rng(seed, "simulate")
    which = rng.integers(0, 2, size=shots)
    u = rng.random(shots)
    outcome = np.where(u < p0[which], 0, 1)
    successes = int(np.sum(outcome == which))
    rate = successes / shots
    ci = Z95 * np.sqrt(rate * (1 - rate) / shots)
    expected = 0.5 * (p0[0] + (1 - p0[1]))
    return SimulationResult(rate, float(ci), shots, successes, float(expected), seed)


def isotropic_sweep(d: int, steps: int, pair: ChannelPair | None = None, restarts: int = SEESAW_RESTARTS, seed: int = 0):
    """Advantage of the transposition channels along the isotropic family.

    Returns rows ``(visibility, negativity, probeDistance, separableBound,
    advantage)`` for ``steps`` evenly spaced visibilities in [0, 1].
    """
    from .construct import transpose_channels_closed_form

    pair = pair or transpose_channels_closed_form(d)
    sep = channel_distance_no_ancilla(pair.psi0, pair.psi1, restarts, seed).value
    bound = max(sep, pair.closed_form_distance)
    rows = []
    for v in np.linspace(0.0, 1.0, steps):
        rho = isotropic_state(d, float(v))
        probe = probe_distance(pair.psi0, pair.psi1, rho)
        rows.append((float(v), standard_negativity(rho), probe, sep, probe - bound))
    return rows
