import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as hst

from entdisc import chanrep as cr
from entdisc import construct as co
from entdisc import detect as de
from entdisc import discriminate as di
from entdisc import matcore as mc
from entdisc import states as st
from entdisc.errors import DegenerateMap, DegenerateTA, NotDetected, NotHermiticityPreserving, NotTA, ParameterOutOfRange

from conftest import random_hermitian


def random_ta(d_in, d_out, seed):
    h = random_hermitian(d_in * d_out, seed)
    tr_y = mc.partial_trace(h, (d_out, d_in), mc.FIRST)
    return cr.Superoperator(h - np.kron(mc.identity(d_out) / d_out, tr_y), d_in, d_out)


def transpose_ta_choi_oracle(d):
    # J(Phi_TA) for the transpose route, assembled by hand from matrix units.
    # Output basis: d transposed coordinates, the TP slot, then the TA slot.
    e = d + 2
    j = np.zeros((e * d, e * d), dtype=complex)
    for i in range(d):
        for k in range(d):
            out = np.zeros((e, e), dtype=complex)
            out[k, i] = 1.0  # |i><k|^T
            if i == k:
                out[e - 1, e - 1] = -1.0  # - Tr(X) |last><last|; the TP slot has block 1 - 1 = 0
            j += np.kron(out, mc.unit(d, i, k))
    return j


@pytest.mark.parametrize("d", [2, 3])
def test_transpose_route_c_oracle(d):
    j = transpose_ta_choi_oracle(d)
    w, v = np.linalg.eigh(j)
    p0 = (v[:, w > 1e-9] * w[w > 1e-9]) @ v[:, w > 1e-9].conj().T
    q = mc.partial_trace(p0, (d + 2, d), mc.FIRST)
    c_oracle = 1 / np.linalg.eigvalsh(q)[-1]
    assert c_oracle == pytest.approx(2 / (d + 1), abs=1e-12)

    cons = co.state_to_channels(st.bell_state(d))
    assert mc.allclose(cons.pair.phi_ta.choi, j, 1e-12)
    assert cons.pair.c == pytest.approx(c_oracle, abs=1e-12)
    assert cons.pair.psi0.d_out == d + 2


def test_normalize_transpose_and_trace_map():
    tp = co.normalize_to_tp(de.get_map("transpose", 2))
    assert tp.lam == pytest.approx(1.0)
    assert tp.phi_tp.d_out == 3
    tm = co.normalize_to_tp(cr.trace_map(3, 3))
    assert tm.lam == pytest.approx(3.0)
    # X -> Tr(X) 1/d with a vanishing residual block
    assert mc.allclose(tm.phi_tp.choi4[:3, :, :3, :].reshape(9, 9), mc.identity(9) / 3, 1e-12)
    assert np.max(np.abs(tm.phi_tp.choi4[3])) < 1e-12
    with pytest.raises(DegenerateMap):
        co.normalize_to_tp(cr.zero_map(2, 2))


def test_lambda_equals_max_output_trace():
    # lambda is the largest Tr Omega[rho] over states; compare against sampled pure inputs
    omega = de.get_map("choi-map", 3).superop
    lam = co.normalize_to_tp(omega).lam
    rng = np.random.default_rng(1)
    traces = [np.trace(omega(mc.projector(st.random_pure_vector(3, rng)))).real for _ in range(500)]
    assert max(traces) <= lam + 1e-12
    assert max(traces) > lam - 0.05


@pytest.mark.parametrize("dim", [2, 3, 4])
def test_normalized_registry_maps_are_tp_and_positive(dim):
    for spec in de.builtin_maps(dim):
        tp = co.normalize_to_tp(spec)
        assert cr.classify(tp.phi_tp).trace_preserving
        assert de.sampled_min_output_eigenvalue(tp.phi_tp, 100, seed=2) > -1e-9


def test_build_ta_examples():
    tp = co.normalize_to_tp(de.get_map("transpose", 2))
    ta = co.build_ta(tp)
    assert ta.d_out == 4
    assert np.max(np.abs(cr.choi_partial_trace_output(ta))) < 1e-10


@settings(max_examples=30, deadline=None)
@given(hst.integers(1, 4), hst.integers(2, 4), hst.integers(0, 2**32 - 1))
def test_channel_pair_from_random_ta(d_in, d_out, seed):
    ta = random_ta(d_in, d_out, seed)
    pair = co.channel_pair_from_ta(ta)
    for ch in (pair.psi0, pair.psi1):
        assert cr.classify(ch).is_channel
    assert mc.max_abs_diff((pair.psi0 - pair.psi1).choi, pair.c * ta.choi) < 1e-9
    p0, p1, _ = co.jordan_split(ta.choi)
    assert abs(np.trace(p0 @ p1)) < 1e-9
    assert pair.c * np.linalg.eigvalsh(pair.q)[-1] == pytest.approx(1.0)


def test_channel_pair_purification_mode():
    ta = random_ta(2, 4, 3)
    pair = co.channel_pair_from_ta(ta, xi_mode=co.XI_PURIFICATION)
    assert cr.classify(pair.psi0).is_channel and cr.classify(pair.psi1).is_channel
    assert mc.allclose((pair.psi0 - pair.psi1).choi, pair.c * ta.choi)
    assert np.linalg.matrix_rank(pair.xi, tol=1e-9) <= 1


def test_channel_pair_errors():
    with pytest.raises(DegenerateTA):
        co.channel_pair_from_ta(cr.zero_map(2, 3))
    # a one-dimensional output leaves no room for a nonzero trace-annihilating map
    with pytest.raises(DegenerateTA):
        co.channel_pair_from_ta(random_ta(3, 1, 0))
    with pytest.raises(NotTA):
        co.channel_pair_from_ta(cr.identity_channel(2))
    with pytest.raises(NotHermiticityPreserving):
        co.channel_pair_from_ta(cr.Superoperator(np.triu(np.ones((4, 4))) - np.eye(4), 2, 2))


def test_transpose_pipeline_pair_is_valid():
    pair = co.state_to_channels(st.bell_state(2)).pair
    assert pair.c * np.linalg.eigvalsh(pair.q)[-1] == pytest.approx(1.0)
    assert cr.classify(pair.psi0).is_channel and cr.classify(pair.psi1).is_channel


def test_state_to_channels_not_detected():
    _, sep = st.sample_separable((2, 2), 3, 0)
    with pytest.raises(NotDetected):
        co.state_to_channels(sep)


@pytest.mark.parametrize("d", [2, 3, 4])
def test_closed_form_transpose(d):
    pair = co.transpose_channels_closed_form(d)
    assert pair.c == 2 / (d + 1)
    assert pair.psi0.d_out == d + 1
    assert cr.classify(pair.psi0).is_channel and cr.classify(pair.psi1).is_channel
    # difference is c times (transpose (+) 0 - Tr(X)|last><last|)
    assert mc.allclose((pair.psi0 - pair.psi1).choi, pair.c * pair.phi_ta.choi, 1e-12)


def test_closed_form_values():
    assert co.transpose_channels_closed_form(2).c == pytest.approx(2 / 3)
    assert co.transpose_channels_closed_form(3).c == pytest.approx(1 / 2)
    # psi0[1/2] = (1/3)(1_X (+) 0 + 1/2 (+) 0) = diag(1/2, 1/2, 0)
    out = co.transpose_channels_closed_form(2).psi0(mc.identity(2) / 2)
    assert mc.allclose(out, np.diag([0.5, 0.5, 0.0]), 1e-15)
    out1 = co.transpose_channels_closed_form(2).psi1(mc.identity(2) / 2)
    assert mc.allclose(out1, np.diag([1 / 6, 1 / 6, 2 / 3]), 1e-15)
    with pytest.raises(ParameterOutOfRange):
        co.transpose_channels_closed_form(1)


@pytest.mark.parametrize("dims", [(2, 2), (3, 3)])
def test_closed_form_matches_pipeline_advantage(dims):
    d = dims[0]
    closed = co.transpose_channels_closed_form(d)
    rng = np.random.default_rng(7)
    done = 0
    while done < 20:
        rho = st.sample_random_state(dims, rng)
        try:
            cons = co.state_to_channels(rho, "transpose")
        except NotDetected:
            continue
        a_pipe = di.probe_distance(cons.pair.psi0, cons.pair.psi1, rho) - 2 * cons.pair.c
        a_closed = di.probe_distance(closed.psi0, closed.psi1, rho) - 2 * closed.c
        assert a_pipe == pytest.approx(a_closed, abs=1e-8)
        done += 1


def test_eb_mix():
    pair = co.transpose_channels_closed_form(2)
    with pytest.raises(ParameterOutOfRange):
        co.eb_mix(pair, 0.0)
    auto = co.eb_mix(pair)
    assert auto.ball_certified and 0 < auto.p < 1
    # bisection lands within 1e-6 of the ball boundary
    assert not co.eb_mix(pair, auto.p + 2e-6).ball_certified
    for x in (auto.xi0, auto.xi1):
        assert cr.classify(x).is_channel
        assert cr.is_ppt(st.DensityMatrix(x.choi / x.d_in, (x.d_out, x.d_in)))
    full = co.eb_mix(pair, 1.0)
    assert not full.ball_certified


@pytest.mark.parametrize("p", [0.1, 0.5, None])
def test_eb_scaling_law(p):
    rho = st.bell_state(2)
    pair = co.state_to_channels(rho).pair
    eb = co.eb_mix(pair, p)
    base = di.probe_distance(pair.psi0, pair.psi1, rho)
    assert di.probe_distance(eb.xi0, eb.xi1, rho) == pytest.approx(eb.p * base, abs=1e-9)
