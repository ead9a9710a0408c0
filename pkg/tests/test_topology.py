"""
Tests for articulation catalogs and momentum-based topology identification.
"""

from dataclasses import replace

import numpy as np
import pytest
from numpy.testing import assert_allclose

from app.dynamics.multibody import center_of_mass, centroidal_momentum_matrix
from app.dynamics.spatial import Transform, compose, rotation_about
from app.topology.catalog import enumerate_hypotheses, make_hypothesis, parse_catalog
from app.topology.identify import (
    check_observations,
    hypothesis_residual,
    identify_topology,
    is_ambiguous,
    momentum_rate,
)
from app.topology.momentum import hypothesis_state, net_wrench, total_momentum
from app.topology.observations import read_observations, sidecar_path, write_observations
from app.topology.synthetic import MotionProfile, generate_object_observations
from app.utils.config_loader import ConfigLoader
from app.utils.exceptions import ConfigurationException, ObservationException, UnknownFrameException
from app.utils.settings import get_settings
from tests.conftest import CATALOG_PATH, GRASP_FRAMES, TRUE_ASSIGNMENT


def catalog_document():
    return ConfigLoader(CATALOG_PATH.parent).load_json(CATALOG_PATH)


@pytest.fixture(scope="module")
def ranking(object_model, catalog, object_observations):
    return identify_topology(object_model, catalog, object_observations)


@pytest.mark.unit
class TestCatalog:
    def test_enumeration_is_lexicographic(self, catalog):
        hypotheses = enumerate_hypotheses(catalog)
        assert len(hypotheses) == 2**catalog.n
        assert [h.assignment for h in hypotheses][:3] == [(0, 0, 0), (0, 0, 1), (0, 1, 0)]
        assert hypotheses[-1].assignment == (1, 1, 1)

    def test_hypothesis_label(self, catalog):
        hypothesis = make_hypothesis(catalog, TRUE_ASSIGNMENT)
        assert hypothesis.label == "lid=revolute,slider=prismatic,knob=revolute"
        assert hypothesis.to_dict()["joints"] == {"lid": "revolute", "slider": "prismatic", "knob": "revolute"}

    def test_hypothesis_builds_model_joints(self, catalog, object_model):
        built = make_hypothesis(catalog, (1, 1, 1)).build(object_model)
        assert all(kind.value == "prismatic" for kind in built.dof_kinds)
        assert built.total_mass == pytest.approx(object_model.total_mass)

    def test_invalid_assignment(self, catalog):
        with pytest.raises(ConfigurationException):
            make_hypothesis(catalog, (0, 2, 0))
        with pytest.raises(ConfigurationException):
            make_hypothesis(catalog, (0, 1))

    def test_enumeration_guard(self, catalog, monkeypatch):
        monkeypatch.setenv("HRI_MAX_TOPOLOGY_JOINTS", "2")
        get_settings.cache_clear()
        with pytest.raises(ConfigurationException) as exc:
            enumerate_hypotheses(catalog)
        assert exc.value.details == {"n": 3, "limit": 2}

    def test_identical_candidates_rejected(self):
        document = catalog_document()
        joint = document["joints"][0]
        joint["candidates"][1] = dict(joint["candidates"][0])
        with pytest.raises(ConfigurationException) as exc:
            parse_catalog(document)
        assert exc.value.details["field"].startswith("joints.0.candidates")

    def test_exactly_two_candidates(self):
        document = catalog_document()
        document["joints"][2]["candidates"].pop()
        with pytest.raises(ConfigurationException):
            parse_catalog(document)

    def test_uncovered_joint(self, object_model):
        document = catalog_document()
        document["joints"].pop()
        with pytest.raises(ConfigurationException) as exc:
            parse_catalog(document).check_against(object_model)
        assert exc.value.details["links"] == ["knob"]

    def test_base_link_is_not_a_joint(self, object_model):
        document = catalog_document()
        document["joints"][0]["link"] = "body"
        with pytest.raises(ConfigurationException):
            parse_catalog(document).check_against(object_model)


@pytest.mark.unit
class TestMomentumRate:
    def test_exact_on_quadratic_history(self):
        times = np.linspace(0.0, 1.0, 11)
        direction = np.array([1.0, -2.0, 0.5, 0.0, 3.0, 1.0])
        momenta = (times**2)[:, None] * direction
        rate = momentum_rate(momenta, times)
        assert rate.shape == (9, 6)
        assert_allclose(rate, (2.0 * times[1:-1])[:, None] * direction, atol=1e-12)

    def test_smoothing_keeps_constant_rate(self):
        times = np.linspace(0.0, 1.0, 11)
        momenta = times[:, None] * np.ones(6)
        assert_allclose(momentum_rate(momenta, times, smoothing=5), np.ones((9, 6)))

    def test_too_few_samples(self, object_observations):
        with pytest.raises(ObservationException):
            check_observations(object_observations[:2])

    def test_times_must_increase(self, object_observations):
        samples = list(object_observations[:5])
        samples[3] = replace(samples[3], t=samples[2].t)
        with pytest.raises(ObservationException) as exc:
            check_observations(samples)
        assert exc.value.details["sample"] == 3

    def test_unknown_grasp_frame(self, object_model, object_observations):
        sample = object_observations[0]
        renamed = replace(sample, wrenches={"elbow": sample.wrenches[GRASP_FRAMES[0]]})
        with pytest.raises(UnknownFrameException):
            net_wrench(object_model, renamed)


@pytest.mark.unit
class TestAmbiguity:
    def test_equal_residuals_are_ambiguous(self, catalog):
        a = make_hypothesis(catalog, (0, 0, 0)).scored(1.0)
        b = make_hypothesis(catalog, (0, 0, 1)).scored(1.0)
        assert is_ambiguous([a, b])

    def test_separated_residuals(self, catalog):
        a = make_hypothesis(catalog, (0, 0, 0)).scored(1.0)
        b = make_hypothesis(catalog, (0, 0, 1)).scored(2.0)
        assert not is_ambiguous([a, b])
        assert not is_ambiguous([a])


@pytest.mark.integration
class TestIdentification:
    def test_true_topology_ranks_first(self, ranking):
        assert ranking.best.assignment == TRUE_ASSIGNMENT
        assert not ranking.ambiguous
        assert len(ranking.hypotheses) == 8
        assert ranking.best.residual < 0.05 * ranking.hypotheses[1].residual

    def test_ranking_is_sorted(self, ranking):
        residuals = [h.residual for h in ranking.hypotheses]
        assert residuals == sorted(residuals)

    def test_ranking_document(self, ranking, object_observations):
        document = ranking.to_dict()
        assert document["samples"] == len(object_observations)
        assert document["ranking"][0]["assignment"] == list(TRUE_ASSIGNMENT)

    def test_smoothing_and_threads_agree(self, object_model, catalog, object_observations):
        threaded = identify_topology(object_model, catalog, object_observations, smoothing=3, workers=2)
        assert threaded.best.assignment == TRUE_ASSIGNMENT

    def test_generator_needs_a_grasp_frame(self, object_model, catalog):
        with pytest.raises(ConfigurationException):
            generate_object_observations(object_model, catalog, TRUE_ASSIGNMENT, dt=0.01, duration=0.1)
        with pytest.raises(ConfigurationException):
            generate_object_observations(
                object_model, catalog, TRUE_ASSIGNMENT, dt=0.0, duration=0.1, frames=GRASP_FRAMES
            )

    def test_true_residual_shrinks_with_sampling_step(self, object_model, catalog):
        hypothesis = make_hypothesis(catalog, TRUE_ASSIGNMENT)
        means = []
        for dt in (4e-3, 2e-3, 1e-3):
            observations = generate_object_observations(
                object_model, catalog, TRUE_ASSIGNMENT, dt=dt, duration=0.2, frames=GRASP_FRAMES, seed=3
            )
            residual = hypothesis_residual(object_model, hypothesis, observations)
            means.append(residual / (len(observations) - 2))
        # central differences are second order
        for coarse, fine in zip(means, means[1:]):
            assert 3.0 < coarse / fine < 5.0

    def test_residuals_ignore_where_the_inertial_frame_sits(self, object_model, catalog, object_observations):
        displacement = Transform(rotation_about([0.0, 0.0, 1.0], 0.7), np.array([1.5, -2.0, 0.3]))
        rotation = displacement.rotation
        moved = [
            replace(
                obs,
                link_poses={name: compose(displacement, pose) for name, pose in obs.link_poses.items()},
                base_twist=np.concatenate([rotation @ obs.base_twist[:3], rotation @ obs.base_twist[3:]]),
            )
            for obs in object_observations[:40]
        ]
        for assignment in (TRUE_ASSIGNMENT, (1, 0, 1)):
            hypothesis = make_hypothesis(catalog, assignment)
            original = hypothesis_residual(object_model, hypothesis, object_observations[:40])
            assert hypothesis_residual(object_model, hypothesis, moved) == pytest.approx(original, rel=1e-8)

    def test_static_object_is_ambiguous(self, object_model, catalog):
        still = MotionProfile(base_amplitude=(0.0, 0.0, 0.0), base_rotation_amplitude=0.0, joint_amplitude=0.0)
        observations = generate_object_observations(
            object_model, catalog, TRUE_ASSIGNMENT, dt=0.01, duration=0.05, frames=GRASP_FRAMES, profile=still
        )
        assert identify_topology(object_model, catalog, observations).ambiguous

    def test_total_momentum_matches_centroidal_momentum(self, object_model, catalog, object_observations):
        hypothesis = make_hypothesis(catalog, TRUE_ASSIGNMENT)
        built = hypothesis.build(object_model)
        for obs in object_observations[::20]:
            state = hypothesis_state(built, hypothesis, obs)
            centroidal = centroidal_momentum_matrix(built, state) @ state.nu
            com = center_of_mass(built, state)
            expected = np.concatenate([centroidal[:3], centroidal[3:] + np.cross(com, centroidal[:3])])
            assert_allclose(total_momentum(object_model, hypothesis, obs, built), expected, atol=1e-10)


@pytest.mark.integration
class TestObservationFiles:
    def test_written_file_identifies_the_same_topology(self, tmp_path, object_model, catalog, object_observations):
        path = write_observations(tmp_path / "observations.csv", object_observations, catalog)
        assert sidecar_path(path).exists()
        restored = read_observations(path, catalog)
        assert len(restored) == len(object_observations)
        assert identify_topology(object_model, catalog, restored).best.assignment == TRUE_ASSIGNMENT

    def test_missing_sidecar(self, tmp_path, catalog, object_observations):
        path = write_observations(tmp_path / "observations.csv", object_observations[:5], catalog)
        sidecar_path(path).unlink()
        with pytest.raises(ObservationException):
            read_observations(path, catalog)

    def test_missing_column(self, tmp_path, catalog, object_observations):
        path = write_observations(tmp_path / "observations.csv", object_observations[:5], catalog)
        lines = path.read_text().splitlines()
        header = lines[0].split(",")
        keep = [i for i, name in enumerate(header) if name != "base.wz"]
        path.write_text("\n".join(",".join(line.split(",")[i] for i in keep) for line in lines) + "\n")
        with pytest.raises(ObservationException) as exc:
            read_observations(path, catalog)
        assert exc.value.details["missing"] == ["base.wz"]
