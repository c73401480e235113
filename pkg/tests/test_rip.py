import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from analysis_lp.errors import DegenerateFrame, InvalidBlockSize, InvalidP, InvalidRange
from analysis_lp.frames import build_frame
from analysis_lp.rip import (block_tail_terms, estimate_localization, estimate_psi_rip,
                             measurement_bound, psi_rip_profile, sorted_block_tail_check)
from analysis_lp.sensing import dense_operator, dft_matrix, gaussian_operator
from analysis_lp.transforms import (AnalysisOperator, identity_operator, matrix_operator,
                                    undecimated_haar)

COLLAPSED = dict(K=1, c1=1, delta=1 - 1e-15, s=1, L=1, N=math.e, gamma=1 / math.e, C=1)


def exhaustive_rip(A, Psi_dense, s):
    """Exact delta_s for a diagonal A and orthonormal basis over all supports of size s."""
    worst = 0.0
    n = A.shape[1]
    for T in itertools.combinations(range(n), s):
        G = Psi_dense[list(T)]
        M = G @ A.T @ A @ G.T
        S = G @ G.T
        ev = np.linalg.eigvals(np.linalg.solve(S, M)).real
        worst = max(worst, float(np.max(np.abs(ev - 1))))
    return worst


# ------------------------------------------------------------ Psi-RIP

def test_identity_gives_zero():
    est = estimate_psi_rip(dense_operator(np.eye(8)), undecimated_haar(8, 2), 3, trials=20)
    assert est.delta_hat <= 1e-12


def test_scaled_identity():
    est = estimate_psi_rip(dense_operator(2 * np.eye(6)), identity_operator(6), 2, trials=10)
    np.testing.assert_allclose(est.per_trial_ratios, 4.0)
    assert est.delta_hat == pytest.approx(3.0)


def test_diag_instance_matches_exhaustive():
    D = np.diag([1.0, 1.0, 0.5])
    assert exhaustive_rip(D, np.eye(3), 1) == pytest.approx(0.75)
    est = estimate_psi_rip(dense_operator(D), identity_operator(3), 1, trials=30, seed=0)
    assert est.delta_hat == 0.75


def test_unitary_parseval_small():
    U = dft_matrix(16) / 4
    for s in (1, 5, 48):
        est = estimate_psi_rip(dense_operator(U), undecimated_haar(16, 2), s, trials=50)
        assert est.delta_hat <= 1e-8


def test_determinism_and_scale_covariance():
    A = gaussian_operator(10, 16, seed=3)
    Psi = undecimated_haar(16, 2)
    a = estimate_psi_rip(A, Psi, 4, trials=40, seed=9)
    b = estimate_psi_rip(A, Psi, 4, trials=40, seed=9)
    assert a.delta_hat == b.delta_hat
    np.testing.assert_array_equal(a.per_trial_ratios, b.per_trial_ratios)
    t = 1.3
    c = estimate_psi_rip(dense_operator(t * A.matrix), Psi, 4, trials=40, seed=9)
    np.testing.assert_allclose(c.per_trial_ratios, t ** 2 * a.per_trial_ratios, rtol=1e-12)
    assert c.delta_hat == pytest.approx(np.max(np.abs(t ** 2 * a.per_trial_ratios - 1)))


def test_profile_monotone():
    A = gaussian_operator(12, 16, seed=0)
    prof = psi_rip_profile(A, undecimated_haar(16, 3), [1, 2, 4, 8, 16], trials=30)
    deltas = [e.delta_hat for e in prof]
    assert deltas == sorted(deltas)


def test_degenerate_frame():
    n = 4
    zero = AnalysisOperator(lambda x: np.zeros(8), lambda c: np.zeros(n), n, 8)
    with pytest.raises(DegenerateFrame):
        estimate_psi_rip(dense_operator(np.eye(n)), zero, 1, trials=5)
    with pytest.raises(DegenerateFrame):
        estimate_localization(zero, 1, trials=5, ascent_steps=0)


def test_invalid_sparsity():
    with pytest.raises(InvalidRange):
        estimate_psi_rip(dense_operator(np.eye(3)), identity_operator(3), 4)


# -------------------------------------------------------- localization

def test_localization_orthonormal_basis():
    assert estimate_localization(identity_operator(6), 1, trials=30).L_hat == pytest.approx(1.0)
    est = estimate_localization(identity_operator(6), 6, trials=30)
    # ||c||_1 / sqrt(s) <= ||c||_2 = 1
    assert est.L_hat <= 1.0 + 1e-12


def exhaustive_singletons(Psi):
    D = Psi.dense()
    G = D @ D.T
    return max(np.abs(G[:, k]).sum() / math.sqrt(G[k, k]) for k in range(Psi.N) if G[k, k] > 0)


def test_localization_exhaustive_parseval():
    Psi = undecimated_haar(16, 2)
    exact = estimate_localization(Psi, 1, exhaustive=True)
    assert exact.L_hat == pytest.approx(exhaustive_singletons(Psi), rel=1e-12)
    mc = estimate_localization(Psi, 1, trials=20, seed=1)
    assert mc.L_hat <= exact.L_hat + 1e-12


@settings(max_examples=20, deadline=None)
@given(st.integers(2, 5), st.integers(0, 6), st.integers(0, 2 ** 31))
def test_localization_exhaustive_dominates_dense(n, extra, seed):
    rng = np.random.default_rng(seed)
    Psi = matrix_operator(build_frame(rng.standard_normal((n + extra, n))))
    exact = estimate_localization(Psi, 1, exhaustive=True).L_hat
    mc = estimate_localization(Psi, 1, trials=10, seed=seed % 1000).L_hat
    assert mc <= exact * (1 + 1e-12)


def test_localization_ascent_never_decreases():
    Psi = undecimated_haar(32, 3, "unit_norm")
    plain = estimate_localization(Psi, 4, trials=25, seed=2, ascent_steps=0).L_hat
    climbed = estimate_localization(Psi, 4, trials=25, seed=2).L_hat
    assert climbed >= plain


# ----------------------------------------------------- measurement bound

def test_collapsed_case():
    out = measurement_bound(**COLLAPSED)
    assert out["primal_bound"].m_required == 1
    assert out["primal_bound"].rhs == pytest.approx(1.0)


def test_doubling_s_at_least_doubles():
    base = dict(K=1, c1=1, delta=0.5, L=3, N=1e6, gamma=0.5, C=1)
    m1 = measurement_bound(s=4, **base)["primal_bound"].m_required
    m2 = measurement_bound(s=8, **base)["primal_bound"].m_required
    assert m2 >= 2 * m1


def test_identifiable_variant_halves():
    out = measurement_bound(K=2, c1=1, d2=0.5, delta=0.3, s=3, L=2, N=500, gamma=0.1)
    assert out["identifiable_bound"].rhs == pytest.approx(out["primal_bound"].rhs / 2)
    assert out["smaller"] == "identifiable_bound"


@pytest.mark.parametrize("form", ["theorem", "appendix"])
def test_identifiable_never_exceeds_primal(form):
    rng = np.random.default_rng(0)
    for _ in range(100):
        c1 = float(rng.uniform(0.2, 3))
        d2 = float(rng.uniform(0.01, 1)) / c1
        args = dict(K=float(rng.uniform(0.5, 3)), c1=c1, d2=d2, delta=float(rng.uniform(0.1, 0.9)),
                    s=int(rng.integers(1, 50)), L=float(rng.uniform(1, 5)),
                    N=float(rng.integers(10, 10 ** 5)), gamma=float(rng.uniform(0.01, 0.9)),
                    form=form)
        out = measurement_bound(**args)
        assert out["identifiable_bound"].m_required <= out["primal_bound"].m_required
        assert out["primal_bound"].m_required >= 1


@pytest.mark.parametrize("form", ["theorem", "appendix"])
@pytest.mark.parametrize("arg,values,direction", [
    ("s", [1, 2, 5, 10, 40], +1), ("L", [1.0, 1.5, 2.0, 4.0], +1),
    ("K", [0.5, 1.0, 2.0, 3.0], +1), ("delta", [0.1, 0.3, 0.6, 0.9], -1),
    ("c1", [0.25, 0.5, 1.0, 2.0], -1), ("gamma", [1e-6, 1e-3, 0.1, 0.9], -1)])
def test_monotone(form, arg, values, direction):
    base = dict(K=1.0, c1=1.0, delta=0.5, s=4, L=2.0, N=1e4, gamma=0.01, C=1.0, form=form)
    ms = []
    for v in values:
        rhs = measurement_bound(**{**base, arg: v})["primal_bound"].rhs
        ms.append(rhs)
    diffs = np.diff(ms) * direction
    assert np.all(diffs >= 0)


def test_appendix_form_formula():
    out = measurement_bound(K=2, c1=0.5, delta=0.5, s=3, L=1.5, N=100, gamma=0.1,
                            form="appendix")
    kl = (2 * 1.5 / 0.5) ** 2
    expected = 0.5 ** -2 * 3 * kl * max(math.log(3 * kl) ** 3 * math.log(100), math.log(10))
    assert out["primal_bound"].rhs == pytest.approx(expected)


@pytest.mark.parametrize("bad", [dict(delta=1.0), dict(gamma=0.0), dict(K=0), dict(c1=-1),
                                 dict(d2=0.0), dict(form="other")])
def test_measurement_invalid(bad):
    with pytest.raises(InvalidRange):
        measurement_bound(**{**COLLAPSED, "delta": 0.5, **bad})


# ------------------------------------------------------------ block tail

def test_block_tail_constant_vector():
    assert sorted_block_tail_check(np.ones(20), 3, 0.5)
    assert sorted_block_tail_check(np.ones(20), 1, 1.0)


def test_block_tail_geometric():
    c = 0.5 ** np.arange(30)
    lhs, rhs = block_tail_terms(c, 4, 0.5)
    assert sorted_block_tail_check(c, 4, 0.5)
    assert rhs - lhs > 0.5  # measured slack is comfortably positive


def test_block_tail_exclude_and_short_vector():
    c = np.array([10.0, 1.0, 1.0, 1.0])
    lhs, rhs = block_tail_terms(c, 2, 1.0, exclude=[0])
    assert lhs == pytest.approx(1.0) and rhs == pytest.approx(3.0 / math.sqrt(2))
    assert block_tail_terms([1.0], 5, 0.3)[0] == 0.0


def test_block_tail_invalid():
    with pytest.raises(InvalidBlockSize):
        sorted_block_tail_check(np.ones(4), 0, 0.5)
    with pytest.raises(InvalidBlockSize):
        sorted_block_tail_check(np.ones(4), 1.5, 0.5)
    with pytest.raises(InvalidP):
        sorted_block_tail_check(np.ones(4), 2, 1.5)


@settings(max_examples=300, deadline=None)
@given(st.lists(st.floats(-1e6, 1e6, allow_nan=False), min_size=1, max_size=60),
       st.integers(1, 20), st.floats(0.01, 1.0))
def test_block_tail_property(values, M, p):
    assert sorted_block_tail_check(np.array(values), M, p)
