import numpy as np
import pytest

from momident.kinematics import LinkState, forward_kinematics
from momident.momentum import (
    GlobalKinematicMatrix,
    link_kinematic_matrix,
    link_momentum,
    omega_operator,
    stack_global,
    system_kinematic_matrix,
    total_momentum,
)
from momident.robot import inertia_matrix

from helpers import random_link_state, random_parameters


def test_omega_operator_rows():
    op = omega_operator(np.array([1.0, 0.0, 0.0]))
    assert np.array_equal(op[0], [1, 0, 0, 0, 0, 0])
    assert np.array_equal(op[1], [0, 0, 0, 1, 0, 0])
    # third row picks the Ixz column so that (I w)_z = Ixz for w = e_x
    assert np.array_equal(op[2], [0, 0, 0, 0, 0, 1])
    assert np.array_equal(omega_operator(np.zeros(3)), np.zeros((3, 6)))


def test_omega_operator_property(rng):
    for _ in range(300):
        w = rng.normal(size=3)
        vec6 = rng.normal(size=6)
        assert np.allclose(
            omega_operator(w) @ vec6, inertia_matrix(vec6) @ w, atol=1e-12
        )


def test_lkm_at_rest():
    state = LinkState(np.eye(3), np.zeros(3), np.zeros(3), np.zeros(3))
    assert np.array_equal(link_kinematic_matrix(state), np.zeros((6, 10)))


def test_lkm_pure_translation(rng):
    v = rng.normal(size=3)
    state = LinkState(np.eye(3), np.zeros(3), v, np.zeros(3))
    phi = random_parameters(rng, 1)
    out = link_kinematic_matrix(state) @ phi
    assert np.allclose(out[:3], phi[6] * v, atol=1e-12)
    from momident.kinematics import skew

    assert np.allclose(out[3:], -skew(v) @ phi[7:10], atol=1e-12)


def test_lkm_matches_nonlinear_oracle(rng):
    worst = 0.0
    for _ in range(500):
        state = random_link_state(rng)
        phi = random_parameters(rng, 1)
        phi[6] = abs(phi[6]) + 0.05
        p, l = link_momentum(state, phi)
        reference = np.hstack([p, l])
        linear = link_kinematic_matrix(state) @ phi
        worst = max(
            worst,
            np.abs(linear - reference).max() / (1.0 + np.linalg.norm(reference)),
        )
    assert worst <= 1e-10


def test_link_momentum_trivial_cases(rng):
    rest = LinkState(np.eye(3), rng.normal(size=3), np.zeros(3), np.zeros(3))
    phi = random_parameters(rng, 1)
    phi[6] = 2.0
    p, l = link_momentum(rest, phi)
    assert np.allclose(p, 0) and np.allclose(l, 0)
    # point mass at the origin
    v = rng.normal(size=3)
    state = LinkState(np.eye(3), np.zeros(3), v, np.zeros(3))
    point = np.zeros(10)
    point[6] = 3.0
    p, l = link_momentum(state, point)
    assert np.allclose(p, 3.0 * v)
    assert np.allclose(l, 0)


def test_momentum_superposition(rng):
    state = random_link_state(rng)
    doubled = LinkState(
        state.rotation, state.origin, 2 * state.linear_velocity, state.angular_velocity
    )
    phi = random_parameters(rng, 1)
    base = link_kinematic_matrix(state) @ phi
    more = link_kinematic_matrix(doubled) @ phi
    only_v = LinkState(
        state.rotation, state.origin, state.linear_velocity, np.zeros(3)
    )
    with_zero_w = link_kinematic_matrix(only_v) @ phi
    rot_only = LinkState(
        state.rotation, state.origin, np.zeros(3), state.angular_velocity
    )
    with_zero_v = link_kinematic_matrix(rot_only) @ phi
    assert np.allclose(base, with_zero_v + with_zero_w, atol=1e-11)
    assert np.allclose(more, base + with_zero_w, atol=1e-11)


def test_frame_origin_covariance(rng):
    for _ in range(50):
        state = random_link_state(rng)
        d = rng.normal(size=3)
        shifted = LinkState(
            state.rotation, state.origin + d,
            state.linear_velocity, state.angular_velocity,
        )
        phi = random_parameters(rng, 1)
        phi[6] = abs(phi[6])
        p0, l0 = link_momentum(state, phi)
        p1, l1 = link_momentum(shifted, phi)
        assert np.allclose(p0, p1, atol=1e-12)
        assert np.allclose(l1, l0 + np.cross(d, p0), atol=1e-10)


def test_skm_single_link(rng):
    state = random_link_state(rng)
    assert np.array_equal(
        system_kinematic_matrix([state]), link_kinematic_matrix(state)
    )


def test_skm_fixture_rest_and_sum(model, rng):
    rest = LinkState(np.eye(3), np.zeros(3), np.zeros(3), np.zeros(3))
    zeros = np.zeros(model.n_moving)
    states = forward_kinematics(model, rest, zeros, zeros)
    skm = system_kinematic_matrix(states)
    assert np.array_equal(skm, np.zeros((6, 100)))

    moving = LinkState(
        np.eye(3), np.zeros(3), rng.normal(size=3), rng.normal(size=3)
    )
    q = rng.uniform(-1, 1, model.n_moving)
    qd = rng.normal(size=model.n_moving)
    states = forward_kinematics(model, moving, q, qd)
    phi = model.standard_parameters(include_wheels=True)
    skm = system_kinematic_matrix(states)
    assert np.allclose(skm @ phi, total_momentum(states, phi), atol=1e-9)


def test_stack_global(rng):
    skms = [rng.normal(size=(6, 20)) for _ in range(4)]
    gkm = stack_global(skms, [0.0, 0.1, 0.2, 0.3])
    assert gkm.matrix.shape == (24, 20)
    assert gkm.n_samples == 4
    for k in range(4):
        assert np.array_equal(gkm.sample(k), skms[k])
    single = stack_global(skms[:1], [0.0])
    assert single.matrix.shape == (6, 20)
    with pytest.raises(ValueError):
        stack_global([], [])
    with pytest.raises(ValueError):
        GlobalKinematicMatrix(np.zeros((5, 3)), np.zeros(1))
