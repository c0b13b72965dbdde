import numpy as np
import pytest

from momident.errors import GimbalLockError
from momident.kinematics import (
    LinkState,
    base_link_state,
    base_rotation,
    euler_rate_map,
    euler_rates_from_angular_velocity,
    forward_kinematics,
    integrate_base,
    joint_rotation,
    skew,
    unskew,
)
from momident.robot import BaseState

from helpers import FourierJoints


def test_skew_definition():
    expected = np.array([[0, -3, 2], [3, 0, -1], [-2, 1, 0]], dtype=float)
    assert np.array_equal(skew(np.array([1.0, 2.0, 3.0])), expected)
    assert np.array_equal(skew(np.zeros(3)), np.zeros((3, 3)))


def test_skew_cross_product(rng):
    for _ in range(100):
        v, u = rng.normal(size=3), rng.normal(size=3)
        assert np.allclose(skew(v) @ u, np.cross(v, u), atol=1e-14)
        assert np.allclose(skew(v) @ v, 0.0, atol=1e-14)
    assert np.allclose(unskew(skew(v)), v)


def test_joint_rotation_identity_and_z():
    assert np.allclose(joint_rotation(0.0, 0.0), np.eye(3))
    expected = np.array([[0, -1, 0], [1, 0, 0], [0, 0, 1]], dtype=float)
    assert np.allclose(joint_rotation(np.pi / 2, 0.0), expected, atol=1e-15)


def test_joint_rotation_quarter_twist():
    # closed form at q=0, alpha=pi/2
    expected = np.array([[1, 0, 0], [0, 0, -1], [0, 1, 0]], dtype=float)
    assert np.allclose(joint_rotation(0.0, np.pi / 2), expected, atol=1e-15)


def test_joint_rotation_orthonormal(rng):
    for _ in range(50):
        r = joint_rotation(rng.uniform(-np.pi, np.pi), rng.uniform(-np.pi, np.pi))
        assert np.allclose(r.T @ r, np.eye(3), atol=1e-12)
        assert np.isclose(np.linalg.det(r), 1.0)


def test_base_rotation_axes():
    assert np.allclose(base_rotation(np.zeros(3)), np.eye(3))
    pure_z = base_rotation(np.array([np.pi / 2, 0.0, 0.0]))
    assert np.allclose(pure_z, joint_rotation(np.pi / 2, 0.0), atol=1e-15)


def test_euler_rate_map_zero_structure():
    m = euler_rate_map(np.zeros(3))
    # Z-X-Y at zero: body rates are a pure permutation of the euler rates
    assert np.allclose(np.abs(m), np.array([[0, 1, 0], [0, 0, 1], [1, 0, 0]]))


def test_euler_rate_map_finite_difference(rng):
    h = 1e-6
    for _ in range(50):
        zeta = rng.uniform(-1.2, 1.2, 3)
        zeta_dot = rng.normal(size=3)
        r_plus = base_rotation(zeta + h * zeta_dot)
        r_minus = base_rotation(zeta - h * zeta_dot)
        omega_fd = unskew((r_plus - r_minus) / (2 * h) @ base_rotation(zeta).T)
        omega = base_rotation(zeta) @ (euler_rate_map(zeta) @ zeta_dot)
        assert np.allclose(omega, omega_fd, atol=1e-6)


def test_euler_rate_map_singularity():
    with pytest.raises(GimbalLockError):
        euler_rate_map(np.array([0.0, np.pi / 2 - 1e-9, 0.0]))


def test_euler_rate_map_inverse(rng):
    for _ in range(20):
        zeta = rng.uniform(-1.0, 1.0, 3)
        omega = rng.normal(size=3)
        zeta_dot = euler_rates_from_angular_velocity(zeta, omega)
        back = base_rotation(zeta) @ (euler_rate_map(zeta) @ zeta_dot)
        assert np.allclose(back, omega, atol=1e-12)


def _rest_base():
    return LinkState(np.eye(3), np.zeros(3), np.zeros(3), np.zeros(3))


def test_fk_zero_configuration(model):
    q = np.zeros(model.n_moving)
    states = forward_kinematics(model, _rest_base(), q, q)
    # positions accumulate the fixed offsets
    assert np.allclose(states[1].origin, [0.7, 0.3, 0.9])
    assert np.allclose(states[2].origin, [1.7, 0.3, 0.9])
    assert np.allclose(states[3].origin, [2.7, 0.3, 0.9])
    assert np.allclose(states[6].origin, [1.7, 0.3, 0.9])
    for st in states:
        assert np.allclose(st.linear_velocity, 0)
        assert np.allclose(st.angular_velocity, 0)


def test_fk_pure_translation(model, rng):
    v0 = rng.normal(size=3)
    base = LinkState(np.eye(3), np.zeros(3), v0, np.zeros(3))
    q = rng.uniform(-1, 1, model.n_moving)
    states = forward_kinematics(model, base, q, np.zeros(model.n_moving))
    for st in states:
        assert np.allclose(st.linear_velocity, v0, atol=1e-14)
        assert np.allclose(st.angular_velocity, 0, atol=1e-14)


def test_fk_rotation_composition(model, rng):
    from momident.kinematics import joint_rotation as jr

    q = rng.uniform(-np.pi, np.pi, model.n_moving)
    base = LinkState(
        base_rotation(rng.uniform(-1, 1, 3)), rng.normal(size=3),
        np.zeros(3), np.zeros(3),
    )
    states = forward_kinematics(model, base, q, np.zeros(model.n_moving))
    # chain along arm 1: base -> 1 -> 2 -> 3
    expected = base.rotation
    for j in (1, 2, 3):
        geo = model.links[j].geometry
        expected = expected @ geo.mount @ jr(q[j - 1], geo.twist)
        assert np.allclose(states[j].rotation, expected, atol=1e-13)


def test_fk_velocity_matches_numeric_differentiation(model, rng):
    traj = FourierJoints(model.n_moving, 10.0, rng)
    base = _rest_base()  # base fixed; differentiate child poses over q(t)
    h = 1e-6
    for t in (0.3, 1.7, 4.1):
        q, qd = traj.sample(t)
        qp, _ = traj.sample(t + h)
        qm, _ = traj.sample(t - h)
        states = forward_kinematics(model, base, q, qd)
        plus = forward_kinematics(model, base, qp, qd)
        minus = forward_kinematics(model, base, qm, qd)
        for j in range(1, len(model.links)):
            v_fd = (plus[j].origin - minus[j].origin) / (2 * h)
            assert np.allclose(states[j].linear_velocity, v_fd, atol=1e-6)
            w_fd = unskew(
                (plus[j].rotation - minus[j].rotation) / (2 * h)
                @ states[j].rotation.T
            )
            assert np.allclose(states[j].angular_velocity, w_fd, atol=1e-6)


def test_fk_size_mismatch(model):
    with pytest.raises(ValueError):
        forward_kinematics(model, _rest_base(), np.zeros(3), np.zeros(3))


def test_integrate_base():
    state = BaseState(
        position=np.zeros(3),
        euler=np.zeros(3),
        linear_velocity=np.array([1.0, 0, 0]),
        euler_rates=np.array([0.0, 0.2, 0.0]),
    )
    stepped = integrate_base(state, 0.1)
    assert np.allclose(stepped.position, [0.1, 0, 0])
    assert np.allclose(stepped.euler, [0, 0.02, 0])
    frozen = BaseState(np.ones(3), np.ones(3), np.zeros(3), np.zeros(3))
    assert np.allclose(integrate_base(frozen, 0.5).position, frozen.position)
    # constant rates grow linearly
    s = state
    for _ in range(10):
        s = integrate_base(s, 0.1)
    assert np.allclose(s.position, [1.0, 0, 0])
    assert np.allclose(s.euler, [0, 0.2, 0])
    with pytest.raises(ValueError):
        integrate_base(state, 0.0)


def test_base_link_state_roundtrip(rng):
    state = BaseState(
        position=rng.normal(size=3),
        euler=rng.uniform(-1, 1, 3),
        linear_velocity=rng.normal(size=3),
        euler_rates=rng.normal(size=3),
    )
    link = base_link_state(state)
    back = euler_rates_from_angular_velocity(state.euler, link.angular_velocity)
    assert np.allclose(back, state.euler_rates, atol=1e-12)
