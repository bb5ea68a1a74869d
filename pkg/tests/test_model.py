import numpy as np
import pytest
from hypothesis import given, strategies as st

from kinlyap.errors import DimensionMismatch, SteadyStateViolation, ZeroVelocityRow
from kinlyap.model import (
    CoplanarSteadyState,
    coplanar_model,
    coplanar_speed,
    new_model,
    nonlinear_collision_residual,
)

positive = st.floats(min_value=0.05, max_value=5.0)


def steady_from(f1, f2, f3):
    # f4 chosen so f1*f2 = f3*f4 holds exactly enough for the tolerance
    return CoplanarSteadyState(U=1.0, f_e=(f1, f2, f3, f1 * f2 / f3))


def test_coplanar_reference_matrices(ref_model):
    assert ref_model.d == 2 and ref_model.K == 4
    np.testing.assert_array_equal(
        ref_model.velocities,
        np.array([[1.0, 0.0], [-1.0, 0.0], [0.0, 1.0], [0.0, -1.0]]),
    )
    np.testing.assert_allclose(ref_model.Q[0], [-0.3, -0.4, 0.6, 0.2], rtol=0, atol=0)


def test_coplanar_uniform_rank_one(uniform_model):
    u = np.array([1.0, 1.0, -1.0, -1.0])
    np.testing.assert_allclose(uniform_model.Q, -0.25 * np.outer(u, u), rtol=0, atol=1e-15)


def test_steady_state_violation():
    s = CoplanarSteadyState(U=1.0, f_e=(1.0, 1.0, 1.0, 2.0))
    with pytest.raises(SteadyStateViolation):
        coplanar_model(s, 1.0)


def test_nonpositive_density_rejected():
    with pytest.raises(SteadyStateViolation):
        coplanar_model(CoplanarSteadyState(U=1.0, f_e=(1.0, -1.0, 1.0, -1.0)), 1.0)
    with pytest.raises(SteadyStateViolation):
        coplanar_model(CoplanarSteadyState(U=0.0, f_e=(1.0, 1.0, 1.0, 1.0)), 1.0)


def test_zero_velocity_row():
    with pytest.raises(ZeroVelocityRow) as exc:
        new_model(np.zeros((1, 1)), np.zeros((1, 1)), 1.0)
    assert exc.value.row == 0


def test_decoupled_transport_model():
    m = new_model(np.array([[1.0], [-1.0]]), np.zeros((2, 2)), 1.0)
    assert m.K == 2 and m.d == 1
    assert coplanar_speed(m) is None


def test_dimension_mismatch():
    with pytest.raises(DimensionMismatch):
        new_model(np.ones((2, 1)), np.zeros((3, 3)), 1.0)


def test_sigma_validation():
    with pytest.raises(ValueError):
        new_model(np.ones((1, 1)), np.zeros((1, 1)), 0.0)


def test_collision_residual_examples():
    assert nonlinear_collision_residual((0.4, 0.3, 0.2, 0.6)) == 0.0
    assert nonlinear_collision_residual((1.0, 1.0, 1.0, 1.0)) == 0.0
    assert nonlinear_collision_residual((1.0, 1.0, 2.0, 1.0)) == 1.0
    assert nonlinear_collision_residual((1.0, 1.0, 2.0, 1.0), sigma=2.0) == 0.5


@pytest.mark.parametrize("sigma", [1.0, 0.02])
def test_linearization_jacobian(ref_steady, sigma):
    """Central-difference Jacobian of the nonlinear collision terms matches Q/sigma."""
    model = coplanar_model(ref_steady, sigma)
    signs = np.array([1.0, 1.0, -1.0, -1.0])
    h = 1e-5
    fe = np.array(ref_steady.f_e)
    jac = np.empty((4, 4))
    for m in range(4):
        up, dn = fe.copy(), fe.copy()
        up[m] += h
        dn[m] -= h
        r_up = nonlinear_collision_residual(up, sigma)
        r_dn = nonlinear_collision_residual(dn, sigma)
        jac[:, m] = signs * (r_up - r_dn) / (2 * h)
    np.testing.assert_allclose(jac, model.Q / sigma, rtol=0, atol=1e-6)


@given(f1=positive, f2=positive, f3=positive)
def test_coplanar_row_structure(f1, f2, f3):
    model = coplanar_model(steady_from(f1, f2, f3), 1.0)
    Q = model.Q
    np.testing.assert_array_equal(Q[0], Q[1])
    np.testing.assert_array_equal(Q[2], Q[3])
    np.testing.assert_array_equal(Q[0], -Q[2])
    assert all(np.any(model.velocities[k] != 0) for k in range(4))


def test_model_arrays_immutable(ref_model):
    with pytest.raises(ValueError):
        ref_model.Q[0, 0] = 99.0
