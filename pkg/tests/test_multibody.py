"""
Tests for floating-base kinematics, dynamics and model files.
"""

import json

import numpy as np
import pytest
from numpy.testing import assert_allclose

from app.dynamics.model_io import load_model, load_model_file, model_summary
from app.dynamics.multibody import (
    AgentState,
    Kinematics,
    bias_forces,
    center_of_mass,
    centroidal_momentum_matrix,
    check_state,
    frame_jacobian,
    gravity_forces,
    integrate_configuration,
    kinetic_energy,
    link_motion,
    mass_matrix,
    potential_energy,
    supported_inverse_dynamics,
)
from app.dynamics.spatial import Transform, rotation_log
from app.utils.exceptions import ModelParseException, ModelValidationException, UnknownFrameException
from tests.conftest import random_state

EPS = 1e-6


def two_link_document(**overrides):
    document = {
        "name": "two_link",
        "links": [
            {"name": "base", "parent": None, "inertia": {"mass": 1.0, "ixx": 0.01, "iyy": 0.01, "izz": 0.01}},
            {
                "name": "arm",
                "parent": "base",
                "joint": {"kind": "revolute", "axis": [0, 0, 1], "origin": {"xyz": [0.2, 0, 0]}},
                "inertia": {"mass": 0.5, "com": [0.1, 0, 0], "ixx": 0.002, "iyy": 0.002, "izz": 0.002},
                "frames": [{"name": "hand", "xyz": [0.2, 0, 0]}],
            },
        ],
    }
    document.update(overrides)
    return document


def pendulum_document(armature=0.0):
    """A point-like bob of 2 kg on a 0.5 m rod, swinging about y."""
    return {
        "name": "pendulum",
        "links": [
            {"name": "base", "parent": None, "inertia": {"mass": 1.0, "ixx": 0.01, "iyy": 0.01, "izz": 0.01}},
            {
                "name": "bob",
                "parent": "base",
                "joint": {"kind": "revolute", "axis": [0, 1, 0], "armature": armature},
                "inertia": {"mass": 2.0, "com": [0, 0, -0.5], "ixx": 0.02, "iyy": 0.02, "izz": 0.01},
            },
        ],
    }


def link_momentum(model, state):
    """[linear; angular about the com] momentum summed link by link from a velocity sweep."""
    kin = Kinematics(model, state)
    sweep = link_motion(model, state, kin=kin)
    com = kin.center_of_mass
    linear, angular = np.zeros(3), np.zeros(3)
    for i, link in enumerate(model.links):
        w = sweep.omega[i]
        v_c = sweep.velocity[i] + np.cross(w, kin.com_positions[i] - kin.poses[i].translation)
        linear += link.inertia.mass * v_c
        angular += np.cross(kin.com_positions[i] - com, link.inertia.mass * v_c) + kin.world_inertias[i] @ w
    return np.concatenate([linear, angular])



@pytest.mark.unit
class TestModelFiles:
    def test_chain_summary(self, chain_model):
        summary = model_summary(chain_model)
        assert summary["n"] == 3
        assert summary["links"] == 4
        assert summary["total_mass"] == pytest.approx(2.8)
        assert summary["frames"] == ["tip"]

    def test_desk_models_have_expected_dofs(self, human_model, robot_model):
        assert human_model.n == 8
        assert robot_model.n == 11
        assert robot_model.has_frame("grasp") and robot_model.has_frame("seat")
        assert human_model.has_frame("palm") and human_model.has_frame("sole")

    def test_links_are_sorted_parent_first(self):
        document = two_link_document()
        document["links"].reverse()
        model = load_model(json.dumps(document))
        assert [link.name for link in model.links] == ["base", "arm"]
        assert model.links[1].parent == 0

    def test_malformed_json_reports_line(self):
        with pytest.raises(ModelParseException) as exc:
            load_model('{\n  "name": "broken",\n  "links": [\n}')
        assert exc.value.details["line"] == 4

    def test_schema_error_reports_field(self):
        document = two_link_document()
        del document["links"][0]["inertia"]["mass"]
        with pytest.raises(ModelParseException) as exc:
            load_model(json.dumps(document))
        assert "mass" in exc.value.details["field"]

    def test_unknown_parent(self):
        document = two_link_document()
        document["links"][1]["parent"] = "nowhere"
        with pytest.raises(ModelValidationException) as exc:
            load_model(json.dumps(document))
        assert exc.value.details["link"] == "arm"

    def test_two_bases_rejected(self):
        document = two_link_document()
        document["links"][1]["parent"] = None
        with pytest.raises(ModelValidationException):
            load_model(json.dumps(document))

    def test_non_unit_axis_rejected(self):
        document = two_link_document()
        document["links"][1]["joint"]["axis"] = [0, 0, 2]
        with pytest.raises(ModelValidationException) as exc:
            load_model(json.dumps(document))
        assert exc.value.details["link"] == "arm"

    def test_non_physical_inertia_rejected(self):
        document = two_link_document()
        document["links"][1]["inertia"].update({"ixx": 0.001, "iyy": 0.001, "izz": 0.01})
        with pytest.raises(ModelValidationException) as exc:
            load_model(json.dumps(document))
        assert "triangle" in exc.value.message

    def test_duplicate_frame_rejected(self):
        document = two_link_document()
        document["links"][1]["frames"].append({"name": "base"})
        with pytest.raises(ModelValidationException):
            load_model(json.dumps(document))

    def test_missing_file(self, tmp_path):
        with pytest.raises(ModelParseException):
            load_model_file(tmp_path / "absent.json")

    def test_unknown_frame(self, chain_model):
        with pytest.raises(UnknownFrameException):
            chain_model.frame("elbow")

    def test_negative_armature_rejected(self):
        with pytest.raises(ModelParseException) as exc:
            load_model(json.dumps(pendulum_document(armature=-0.1)))
        assert "armature" in exc.value.details["field"]


@pytest.mark.unit
class TestKinematics:
    def test_zero_state_hangs_straight_down(self, chain_model):
        kin = Kinematics(chain_model, chain_model.zero_state())
        assert_allclose(kin.frame_pose("tip").translation, [0.0, 0.0, -0.81], atol=1e-12)

    def test_frame_jacobian_matches_finite_difference(self, chain_model, rng):
        state = random_state(chain_model, rng)
        jac = frame_jacobian(chain_model, state, "tip")
        ahead = Kinematics(chain_model, integrate_configuration(state, EPS)).frame_pose("tip")
        behind = Kinematics(chain_model, integrate_configuration(state, -EPS)).frame_pose("tip")
        linear = (ahead.translation - behind.translation) / (2 * EPS)
        angular = rotation_log(ahead.rotation @ behind.rotation.T) / (2 * EPS)
        assert_allclose(jac[:3] @ state.nu, linear, atol=1e-6)
        assert_allclose(jac[3:] @ state.nu, angular, atol=1e-6)

    def test_base_block_of_jacobian(self, chain_model, rng):
        state = random_state(chain_model, rng)
        jac = frame_jacobian(chain_model, state, "tip")
        assert_allclose(jac[:3, :3], np.eye(3))
        assert_allclose(jac[3:, 3:6], np.eye(3))
        assert_allclose(jac[3:, :3], np.zeros((3, 3)))

    def test_linear_momentum_is_mass_times_com_velocity(self, chain_model, rng):
        state = random_state(chain_model, rng)
        momentum = centroidal_momentum_matrix(chain_model, state) @ state.nu
        ahead = center_of_mass(chain_model, integrate_configuration(state, EPS))
        behind = center_of_mass(chain_model, integrate_configuration(state, -EPS))
        assert_allclose(momentum[:3], chain_model.total_mass * (ahead - behind) / (2 * EPS), atol=1e-6)

    def test_check_state_rejects_wrong_dimension(self, chain_model, robot_model):
        with pytest.raises(ModelValidationException):
            check_state(robot_model, chain_model.zero_state())

    @pytest.mark.parametrize("name", ["chain_model", "robot_model"])
    def test_centroidal_momentum_matches_summed_link_momenta(self, name, request, rng):
        model = request.getfixturevalue(name)
        for _ in range(100):
            state = random_state(model, rng)
            momentum = centroidal_momentum_matrix(model, state) @ state.nu
            assert_allclose(momentum, link_momentum(model, state), atol=1e-10)


@pytest.mark.unit
class TestDynamics:
    def test_mass_matrix_symmetric_positive_definite(self, robot_model, rng):
        state = random_state(robot_model, rng)
        M = mass_matrix(robot_model, state)
        assert M.shape == (17, 17)
        assert_allclose(M, M.T, atol=1e-12)
        assert np.linalg.eigvalsh(M)[0] > 0

    def test_gravity_on_base_is_total_weight(self, chain_model, rng):
        state = random_state(chain_model, rng)
        G = gravity_forces(chain_model, state)
        assert_allclose(G[:3], -chain_model.total_mass * chain_model.gravity, atol=1e-10)

    def test_unactuated_free_fall(self, chain_model, rng):
        state = random_state(chain_model, rng).with_velocity(np.zeros(chain_model.nv))
        nu_dot = np.linalg.solve(mass_matrix(chain_model, state), -bias_forces(chain_model, state))
        expected = np.zeros(chain_model.nv)
        expected[:3] = chain_model.gravity
        assert_allclose(nu_dot, expected, atol=1e-9)

    def test_kinetic_energy_rate_equals_power(self, chain_model, rng):
        state = random_state(chain_model, rng)
        tau = rng.normal(size=chain_model.n)
        M = mass_matrix(chain_model, state)
        h = bias_forces(chain_model, state)
        generalized = -h
        generalized[6:] += tau
        nu_dot = np.linalg.solve(M, generalized)

        def energy(dt):
            advanced = integrate_configuration(state.with_velocity(state.nu + dt * nu_dot), dt)
            return kinetic_energy(chain_model, advanced) + potential_energy(chain_model, advanced)

        rate = (energy(1e-6) - energy(-1e-6)) / 2e-6
        assert rate == pytest.approx(tau @ state.s_dot, rel=1e-4, abs=1e-5)

    def test_potential_energy_of_raised_model(self, chain_model):
        state = chain_model.zero_state()
        raised = state.with_configuration(Transform.from_translation([0, 0, 1.0]), state.s)
        gain = potential_energy(chain_model, raised) - potential_energy(chain_model, state)
        assert gain == pytest.approx(chain_model.total_mass * 9.81)

    @pytest.mark.parametrize("name", ["chain_model", "robot_model"])
    def test_mass_matrix_quadratic_form_is_kinetic_energy(self, name, request, rng):
        model = request.getfixturevalue(name)
        for _ in range(100):
            state = random_state(model, rng)
            energy = 0.5 * state.nu @ mass_matrix(model, state) @ state.nu
            assert energy == pytest.approx(kinetic_energy(model, state), rel=1e-10, abs=1e-12)

    @pytest.mark.parametrize("angle", [0.0, 0.4, -1.1, 2.5])
    def test_single_pendulum_closed_form(self, angle):
        model = load_model(json.dumps(pendulum_document()))
        state = AgentState(np.zeros(3), np.eye(3), [angle], np.zeros(6), [1.3])
        M = mass_matrix(model, state)
        h = bias_forces(model, state)
        assert M[6, 6] == pytest.approx(0.02 + 2.0 * 0.5**2)
        assert h[6] == pytest.approx(2.0 * 9.81 * 0.5 * np.sin(angle), abs=1e-12)

    def test_armature_enters_only_the_joint_diagonal(self, rng):
        bare = load_model(json.dumps(pendulum_document()))
        geared = load_model(json.dumps(pendulum_document(armature=0.05)))
        state = random_state(bare, rng)
        difference = mass_matrix(geared, state) - mass_matrix(bare, state)
        expected = np.zeros((7, 7))
        expected[6, 6] = 0.05
        assert_allclose(difference, expected, atol=1e-14)
        assert_allclose(bias_forces(geared, state), bias_forces(bare, state), atol=1e-12)
        assert kinetic_energy(geared, state) - kinetic_energy(bare, state) == pytest.approx(
            0.5 * 0.05 * state.s_dot[0] ** 2
        )


def assert_supported_dynamics(model, state, result, s_ddot, jacobian, bias):
    nu_dot = np.concatenate([result.base_acceleration, s_ddot])
    generalized = mass_matrix(model, state) @ nu_dot + bias_forces(model, state) - jacobian.T @ result.wrenches
    expected = np.zeros(model.nv)
    expected[6:] = result.tau
    assert_allclose(generalized, expected, atol=1e-9)
    assert_allclose(jacobian @ nu_dot + bias, np.zeros(jacobian.shape[0]), atol=1e-9)


@pytest.mark.unit
class TestSupportedInverseDynamics:
    def test_welded_base(self, chain_model, rng):
        state = random_state(chain_model, rng)
        state = state.with_velocity(np.concatenate([np.zeros(6), state.s_dot]))
        jacobian = np.hstack([np.eye(6), np.zeros((6, chain_model.n))])
        s_ddot = rng.normal(size=chain_model.n)
        result = supported_inverse_dynamics(chain_model, state, s_ddot, jacobian, np.zeros(6))
        M = mass_matrix(chain_model, state)
        h = bias_forces(chain_model, state)
        assert_allclose(result.base_acceleration, np.zeros(6), atol=1e-12)
        assert_allclose(result.wrenches, M[:6, 6:] @ s_ddot + h[:6], atol=1e-9)
        assert_allclose(result.tau, M[6:, 6:] @ s_ddot + h[6:], atol=1e-9)
        assert_supported_dynamics(chain_model, state, result, s_ddot, jacobian, np.zeros(6))

    def test_welded_tip_at_rest(self, chain_model, rng):
        state = random_state(chain_model, rng).with_velocity(np.zeros(chain_model.nv))
        jacobian = frame_jacobian(chain_model, state, "tip")
        s_ddot = rng.normal(size=chain_model.n)
        result = supported_inverse_dynamics(chain_model, state, s_ddot, jacobian, np.zeros(6))
        assert_supported_dynamics(chain_model, state, result, s_ddot, jacobian, np.zeros(6))

    def test_floating_body_has_no_wrenches(self, chain_model, rng):
        state = random_state(chain_model, rng)
        s_ddot = rng.normal(size=chain_model.n)
        jacobian = np.zeros((0, chain_model.nv))
        result = supported_inverse_dynamics(chain_model, state, s_ddot, jacobian, np.zeros(0))
        assert result.wrenches.shape == (0,)
        assert_supported_dynamics(chain_model, state, result, s_ddot, jacobian, np.zeros(0))

