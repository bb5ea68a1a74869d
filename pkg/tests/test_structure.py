from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from kinlyap.errors import DegenerateRank, NotSymmetric, PositiveEigenvalue
from kinlyap.model import CoplanarSteadyState, coplanar_model, new_model
from kinlyap.structure import (
    StructuralDecomposition,
    coplanar_lambda0,
    decompose,
    verify_decomposition,
)


def test_coplanar_lambda0_examples(ref_steady):
    np.testing.assert_allclose(
        coplanar_lambda0(ref_steady), [2.5, 10.0 / 3.0, 5.0, 5.0 / 3.0], rtol=1e-15
    )
    ones = CoplanarSteadyState(U=1.0, f_e=(1.0, 1.0, 1.0, 1.0))
    np.testing.assert_array_equal(coplanar_lambda0(ones), np.ones(4))
    quarter = CoplanarSteadyState(U=1.0, f_e=(0.25, 0.25, 0.25, 0.25))
    np.testing.assert_array_equal(coplanar_lambda0(quarter), 4.0 * np.ones(4))


def rank_one_eigenvalue(model):
    """Independent oracle: Q = p q^T, its nonzero eigenvalue is q^T p."""
    p = np.array([1.0, 1.0, -1.0, -1.0])
    return float(model.Q[0] @ p)


def test_decompose_uniform(uniform_model, uniform_dec):
    assert uniform_dec.r == 1
    assert abs(uniform_dec.lam[0] - (-rank_one_eigenvalue(uniform_model))) <= 1e-10
    assert abs(uniform_dec.lam[0] - 1.0) <= 1e-10


def test_decompose_reference_state(ref_model, ref_dec):
    assert ref_dec.r == 1
    assert abs(ref_dec.lam[0] - 1.5) <= 1e-10


def test_residuals_small(ref_model, ref_dec, uniform_model, uniform_dec):
    for model, dec in ((ref_model, ref_dec), (uniform_model, uniform_dec)):
        res = verify_decomposition(model, dec)
        assert max(res) <= 1e-10


def _exact_residuals(model, dec):
    """Recompute all three residual matrices in exact rational arithmetic."""

    def mat(a):
        return [[Fraction(float(x)) for x in row] for row in np.asarray(a)]

    def matmul(A, B):
        return [
            [sum(A[i][k] * B[k][j] for k in range(len(B))) for j in range(len(B[0]))]
            for i in range(len(A))
        ]

    def maxabs(A):
        return max(abs(x) for row in A for x in row)

    K = model.K
    P, Pi, Q = mat(dec.P), mat(dec.P_inv), mat(model.Q)
    D = [[Fraction(0)] * K for _ in range(K)]
    for j, lam in enumerate(np.asarray(dec.lam)):
        D[K - dec.r + j][K - dec.r + j] = Fraction(float(lam))
    r24 = [
        [matmul(matmul(P, Q), Pi)[i][j] + D[i][j] for j in range(K)] for i in range(K)
    ]
    L0Q = [[Fraction(float(dec.lambda0[i])) * Q[i][j] for j in range(K)] for i in range(K)]
    Pt = [list(col) for col in zip(*P)]
    r25 = [
        [L0Q[i][j] + matmul(matmul(Pt, D), P)[i][j] for j in range(K)] for i in range(K)
    ]
    PPi = matmul(P, Pi)
    rinv = [
        [PPi[i][j] - (Fraction(1) if i == j else Fraction(0)) for j in range(K)]
        for i in range(K)
    ]
    return float(maxabs(r24)), float(maxabs(r25)), float(maxabs(rinv))


def test_residuals_match_exact_arithmetic(uniform_model, uniform_dec):
    """verify_decomposition agrees with an exact-rational recomputation."""
    exact = _exact_residuals(uniform_model, uniform_dec)
    computed = verify_decomposition(uniform_model, uniform_dec)
    for e, c in zip(exact, computed):
        assert e <= 1e-10
        assert abs(e - c) <= 1e-13


def test_scaled_p_breaks_identity(ref_model, ref_dec):
    bad = StructuralDecomposition(
        P=2.0 * ref_dec.P,
        P_inv=ref_dec.P_inv,
        lambda0=ref_dec.lambda0,
        lam=ref_dec.lam,
        r=ref_dec.r,
    )
    res = verify_decomposition(ref_model, bad)
    assert res.residual_25 > 0.1


def test_zero_collision_decomposition():
    model = new_model(np.array([[1.0], [-1.0]]), np.zeros((2, 2)), 1.0)
    lam0 = np.array([2.0, 0.5])
    dec = decompose(model, lam0)
    assert dec.r == 0 and dec.lam.size == 0
    np.testing.assert_array_equal(dec.P, np.diag(np.sqrt(lam0)))
    res = verify_decomposition(model, dec)
    assert res.residual_24 == 0.0 and res.residual_25 == 0.0 and res.residual_inv == 0.0


def test_eigenvalue_similarity(ref_model, ref_dec):
    """Spectrum of -diag(0, Lam) equals the spectrum of Q (numpy oracle)."""
    K, r = 4, ref_dec.r
    ours = np.sort(np.concatenate([np.zeros(K - r), -np.asarray(ref_dec.lam)]))
    theirs = np.sort(np.linalg.eigvals(ref_model.Q).real)
    np.testing.assert_allclose(ours, theirs, rtol=0, atol=1e-9)


def test_ptp_equals_lambda0(ref_dec):
    assert np.max(np.abs(ref_dec.P.T @ ref_dec.P - np.diag(ref_dec.lambda0))) <= 1e-10


def test_not_symmetric():
    model = new_model(
        np.array([[1.0, 0.0], [-1.0, 0.0], [0.0, 1.0], [0.0, -1.0]]),
        np.array(
            [[-0.3, -0.4, 0.6, 0.2]] * 2 + [[0.3, 0.4, -0.6, -0.2]] * 2
        ) + 1e-3 * np.triu(np.ones((4, 4)), 1),
        1.0,
    )
    with pytest.raises(NotSymmetric):
        decompose(model, np.array([2.5, 10.0 / 3.0, 5.0, 5.0 / 3.0]))


def test_positive_eigenvalue():
    model = new_model(np.array([[1.0], [-1.0]]), np.eye(2), 1.0)
    with pytest.raises(PositiveEigenvalue):
        decompose(model, np.ones(2))


def test_degenerate_rank():
    u = np.array([1.0, -1.0])
    model = new_model(np.array([[1.0], [-1.0]]), -1e-12 * np.outer(u, u), 1.0)
    with pytest.raises(DegenerateRank):
        decompose(model, np.ones(2))


@settings(max_examples=30, deadline=None)
@given(
    f1=st.floats(min_value=0.05, max_value=5.0),
    f2=st.floats(min_value=0.05, max_value=5.0),
    f3=st.floats(min_value=0.05, max_value=5.0),
)
def test_random_coplanar_decompositions(f1, f2, f3):
    s = CoplanarSteadyState(U=1.0, f_e=(f1, f2, f3, f1 * f2 / f3))
    model = coplanar_model(s, 1.0)
    dec = decompose(model, coplanar_lambda0(s))
    assert dec.r == 1
    assert abs(dec.lam[0] - (-rank_one_eigenvalue(model))) <= 1e-9 * max(1.0, dec.lam[0])
    assert max(verify_decomposition(model, dec)) <= 1e-10
