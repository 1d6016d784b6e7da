import itertools
import math

import numpy as np
import pytest
import scipy.linalg
from hypothesis import given, settings, strategies as st

from seqrac import protocol as P
from seqrac.qmath import DensityMatrix, pauli, trace

S2 = math.sqrt(2)
ETA_GRID = np.linspace(0, 1, 101)
INPUTS = list(itertools.product((0, 1), repeat=2))


def _kraus_oracle(y, b, eta):
    """K = sqrt(M), via scipy's matrix square root (an independent route to the Kraus operator)."""
    m = 0.5 * (np.eye(2) + (-1) ** b * eta * pauli("XZ"[y]))
    return scipy.linalg.sqrtm(m)


def _joint_oracle(eta):
    """p(b, c | x, y, z) propagated as kets through sqrt(M) and a projective measurement."""
    p = np.zeros((2,) * 6)
    for x0, x1 in INPUTS:
        angle = math.atan2((-1) ** x0 / S2, (-1) ** x1 / S2)  # Bloch angle from +Z toward +X
        ket = np.array([math.cos(angle / 2), math.sin(angle / 2)])
        for y, b in itertools.product((0, 1), repeat=2):
            after = _kraus_oracle(y, b, eta) @ ket
            for z, c in itertools.product((0, 1), repeat=2):
                w, v = np.linalg.eigh(pauli("XZ"[z]))
                eigvec = v[:, np.argmin(abs(w - (-1) ** c))]
                p[x0, x1, y, b, z, c] = abs(np.vdot(eigvec, after)) ** 2
    return p


def test_prepare_state_examples():
    assert P.prepare_state((0, 0)).to_bloch().as_array() == pytest.approx([1 / S2, 0, 1 / S2], abs=1e-12)
    assert P.prepare_state((1, 0)).to_bloch().as_array() == pytest.approx([-1 / S2, 0, 1 / S2], abs=1e-12)
    overlap = trace(P.prepare_state((0, 0)).matrix @ P.prepare_state((1, 1)).matrix)
    assert abs(overlap) < 1e-12
    for x in INPUTS:
        assert abs(np.linalg.det(P.prepare_state(x).matrix)) < 1e-12


def test_prepare_state_rejects_non_bits():
    with pytest.raises(ValueError):
        P.prepare_state((2, 0))


@pytest.mark.parametrize("eta", ETA_GRID)
def test_povm_and_kraus_consistency(eta):
    for y in (0, 1):
        m = P.WeakMeasurement(y, eta)
        assert np.max(np.abs(m.povm(0) + m.povm(1) - np.eye(2))) <= 1e-12
        assert np.max(np.abs(m.povm(0) - m.povm(1) - eta * m.observable)) <= 1e-12
        for b in (0, 1):
            k = m.kraus(b)
            assert np.max(np.abs(k.conj().T @ k - m.povm(b))) <= 1e-12
            assert np.max(np.abs(k - _kraus_oracle(y, b, eta))) <= 1e-10


def test_projective_limit_is_rank_one():
    for y, b in itertools.product((0, 1), repeat=2):
        k = P.WeakMeasurement(y, 1.0).kraus(b)
        assert np.allclose(k @ k, k, atol=1e-12)
        assert np.linalg.matrix_rank(k, tol=1e-10) == 1


def test_zero_strength_channel_is_identity():
    rho = P.prepare_state((0, 1))
    assert P.average_post_state(rho, 0.0) == rho


def test_weak_measure_projective():
    b0, b1 = P.weak_measure(P.prepare_state((0, 0)), P.WeakMeasurement(0, 1.0))
    assert b0.probability == pytest.approx((1 + 1 / S2) / 2, abs=1e-12)
    assert b0.probability + b1.probability == pytest.approx(1, abs=1e-12)
    plus = DensityMatrix.from_ket([1, 1])
    assert b0.post_state == plus


def test_weak_measure_zero_strength():
    rho = P.prepare_state((0, 0))
    outs = P.weak_measure(rho, P.WeakMeasurement(0, 0.0))
    assert [o.probability for o in outs] == pytest.approx([0.5, 0.5], abs=1e-12)
    avg = sum(o.probability * o.post_state.matrix for o in outs)
    assert np.allclose(avg, rho.matrix, atol=1e-12)


@pytest.mark.parametrize("eta", [0.0, 0.3, 1.0])
def test_weak_measure_maximally_mixed(eta):
    outs = P.weak_measure(DensityMatrix.maximally_mixed(), P.WeakMeasurement(1, eta))
    assert [o.probability for o in outs] == pytest.approx([0.5, 0.5], abs=1e-12)


def test_weak_measure_null_event():
    up = DensityMatrix.from_ket([1, 0])
    b0, b1 = P.weak_measure(up, P.WeakMeasurement(1, 1.0))
    assert b1.probability < 1e-15 and b1.post_state is None
    assert b0.post_state == up


def test_average_post_state_examples():
    rho = P.prepare_state((0, 0))
    assert P.average_post_state(rho, 0.0) == rho
    v = P.average_post_state(rho, 1.0).to_bloch().as_array()
    assert v == pytest.approx([1 / (2 * S2), 0, 1 / (2 * S2)], abs=1e-12)
    mixed = DensityMatrix.maximally_mixed()
    assert P.average_post_state(mixed, 0.7) == mixed


@pytest.mark.parametrize("eta", np.linspace(0, 1, 11))
def test_average_post_state_shrinks_bloch_vector(eta):
    for x in INPUTS:
        before = P.prepare_state(x).to_bloch().as_array()
        after = P.average_post_state(P.prepare_state(x), eta).to_bloch().as_array()
        assert after == pytest.approx(P.shrink_factor(eta) * before, abs=1e-12)


@pytest.mark.parametrize("eta", np.linspace(0, 1, 11))
def test_joint_distribution_matches_ket_oracle(eta):
    assert np.max(np.abs(P.joint_distribution(eta) - _joint_oracle(eta))) < 1e-10


def test_joint_distribution_examples():
    p1 = P.joint_distribution(1.0)
    assert p1[0, 0, 0, 0, 0, 0] == pytest.approx((1 + 1 / S2) / 2, abs=1e-12)
    for eta in (0.0, 0.37, 1.0):
        p = P.joint_distribution(eta)
        assert p.sum(axis=(3, 5)) == pytest.approx(np.ones((2, 2, 2, 2)), abs=1e-12)
    p0 = P.joint_distribution(0.0)
    for x0, x1 in INPUTS:
        rho = P.prepare_state((x0, x1))
        for y, z in ((0, 1), (1, 0)):
            for b, c in itertools.product((0, 1), repeat=2):
                undisturbed = trace(P.projector(z, c) @ rho.matrix).real
                assert p0[x0, x1, y, b, z, c] == pytest.approx(0.5 * undisturbed, abs=1e-12)


def test_witness_spot_values():
    assert P.witness_ab(1) == pytest.approx(0.5 + S2 / 4, abs=1e-12)
    assert P.witness_ac(1) == pytest.approx(0.5 + S2 / 8, abs=1e-12)
    assert P.witness_ab(0.8) == pytest.approx(0.5 + S2 / 5, abs=1e-12)
    assert P.witness_ac(0.8) == pytest.approx(0.5 + S2 / 5, abs=1e-12)
    assert P.witness_ab(0) == 0.5
    assert P.witness_ac(0) == pytest.approx(0.5 + S2 / 4, abs=1e-12)
    assert P.witness_abc(1 / S2) == pytest.approx(0.5, abs=1e-12)
    assert P.witness_abc(0) == pytest.approx(0.25 * (1 + 1 / S2), abs=1e-12)
    assert P.witness_abc(1) == pytest.approx(P.witness_abc(0), abs=1e-12)


def test_witness_rejects_out_of_range():
    with pytest.raises(ValueError):
        P.witness_ab(1.1)
    with pytest.raises(ValueError):
        P.WeakMeasurement(0, -0.1)


@pytest.mark.parametrize("eta", ETA_GRID)
def test_closed_forms_match_enumeration(eta):
    w_ab, w_ac, w_abc = P.witnesses_from_distribution(P.joint_distribution(eta))
    assert w_ab == pytest.approx(P.witness_ab(eta), abs=1e-12)
    assert w_ac == pytest.approx(P.witness_ac(eta), abs=1e-12)
    assert w_abc == pytest.approx(P.witness_abc(eta), abs=1e-12)
    assert P.witness_abc(eta) <= 0.5 + 1e-15


def test_tradeoff_examples():
    assert P.tradeoff_bound(0.75) == pytest.approx((5 + S2) / 8, abs=1e-12)
    assert P.tradeoff_bound(P.MAX_WITNESS) == pytest.approx(P.witness_ac(1), abs=1e-12)
    with pytest.raises(P.DomainError):
        P.tradeoff_bound(0.9)


@pytest.mark.parametrize("eta", ETA_GRID)
def test_tradeoff_saturation_and_inverse(eta):
    assert abs(P.tradeoff_bound(P.witness_ab(eta)) - P.witness_ac(eta)) <= 1e-9
    assert P.inverse_tradeoff_bound(P.witness_ac(eta)) == pytest.approx(P.witness_ab(eta), abs=1e-9)
    assert P.eta_bounds(P.witness_ab(eta), P.witness_ac(eta)) == pytest.approx((eta, eta), abs=1e-9)


def test_inverse_tradeoff_examples():
    assert P.inverse_tradeoff_bound(P.CROSSING_WITNESS) == pytest.approx(P.CROSSING_WITNESS, abs=1e-12)
    assert P.inverse_tradeoff_bound(P.MAX_WITNESS) == pytest.approx(0.5, abs=1e-12)
    for w_ac in np.linspace(P.CROSSING_WITNESS + 1e-6, P.MAX_WITNESS, 50):
        assert P.inverse_tradeoff_bound(w_ac) < w_ac
    with pytest.raises(P.DomainError):
        P.inverse_tradeoff_bound(0.9)


def test_eta_bounds_examples():
    assert P.eta_bounds(P.witness_ab(0.6), P.witness_ac(0.6)) == pytest.approx((0.6, 0.6), abs=1e-9)
    assert P.eta_low(0.75) == pytest.approx(1 / S2, abs=1e-12)
    assert P.eta_up(P.MAX_WITNESS) == pytest.approx(0.0, abs=1e-6)
    with pytest.raises(P.DomainError):
        P.eta_up(0.9)
    assert P.eta_up(0.9, clamp=True) == 0.0


def test_witness_chain_examples():
    assert P.witness_chain([0.3]) == pytest.approx([P.witness_ab(0.3)], abs=1e-12)
    for eta in ETA_GRID:
        assert P.witness_chain([eta, 1]) == pytest.approx([P.witness_ab(eta), P.witness_ac(eta)], abs=1e-12)
    third = P.witness_chain([1 / S2, 2 * (S2 - 1), 1])[2]
    assert third == pytest.approx(P.NO_GO_CLOSED_FORM, abs=1e-12)
    assert third == pytest.approx(0.7354004, abs=1e-7)
    with pytest.raises(ValueError):
        P.witness_chain([])


strengths = st.lists(st.floats(0, 1), min_size=1, max_size=5)


@given(strengths)
@settings(max_examples=60, deadline=None)
def test_chain_matches_density_matrix_simulation(etas):
    assert P.simulate_chain(etas) == pytest.approx(P.witness_chain(etas), abs=1e-12)


@given(st.lists(st.floats(0.05, 0.95), min_size=2, max_size=5))
@settings(max_examples=60, deadline=None)
def test_chain_monotonicity(etas):
    h = 1e-6
    base = P.witness_chain(etas)[-1]
    n = len(etas)
    own = P.witness_chain(etas[:-1] + [etas[-1] + h])[-1]
    assert own > base
    for i in range(n - 1):
        bumped = list(etas)
        bumped[i] += h
        assert P.witness_chain(bumped)[-1] < base


def test_both_witnesses_nonclassical_window():
    lo, hi = 1 / S2, math.sqrt(2 * S2 - 2)
    for eta in np.linspace(lo, hi, 52)[1:-1]:
        assert P.witness_ab(eta) > 0.75 and P.witness_ac(eta) > 0.75
    for eta in ETA_GRID:
        assert max(P.witness_ab(eta), P.witness_ac(eta)) > 0.75


def test_no_go_constraint_boundaries():
    w = P.witness_chain([1 / S2, 2 * (S2 - 1)])
    assert w == pytest.approx([0.75, 0.75], abs=1e-12)


def test_no_go_search():
    res = P.no_go_search()
    assert res.value < 0.75
    assert res.value == pytest.approx(P.NO_GO_CLOSED_FORM, abs=1e-4)
    assert res.value <= P.NO_GO_CLOSED_FORM
    assert res.eta1 == pytest.approx(1 / S2, abs=2e-6)
    assert res.eta2 == pytest.approx(2 * (S2 - 1), abs=1e-5)
    assert P.three_receiver_no_go() == res.value
