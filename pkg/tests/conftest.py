"""
Shared fixtures: models, scenario configurations and synthetic observations.
"""

from pathlib import Path

import numpy as np
import pytest

from app.coupled.system import ContactSpec, SystemState, align_partner, assemble
from app.dynamics.model_io import load_model_file
from app.dynamics.multibody import AgentState, MultibodyModel
from app.dynamics.spatial import rotation_about
from app.simulate.config import load_scenario
from app.simulate.scenario import ScenarioRunner
from app.simulate.state_machine import MachineState
from app.topology.catalog import load_catalog
from app.topology.synthetic import generate_object_observations
from app.utils.settings import get_settings

CONFIG_DIR = Path(__file__).resolve().parents[1] / "config"
MODELS_DIR = CONFIG_DIR / "models"
SCENARIO_PATH = CONFIG_DIR / "scenarios" / "desk_standup.json"
ASSIST_PATH = CONFIG_DIR / "scenarios" / "desk_assist.json"
OBJECT_PATH = MODELS_DIR / "articulated_object.json"
CATALOG_PATH = CONFIG_DIR / "topology" / "articulated_object_catalog.json"

TRUE_ASSIGNMENT = (0, 1, 0)
GRASP_FRAMES = ("left_handle", "right_handle")


def random_state(model: MultibodyModel, rng: np.random.Generator, speed: float = 0.5) -> AgentState:
    """A generic state: random joints, rotated base, random velocity."""
    axis = rng.normal(size=3)
    base_rot = rotation_about(axis / np.linalg.norm(axis), float(rng.uniform(-1.0, 1.0)))
    return AgentState(
        rng.normal(size=3) * 0.2,
        base_rot,
        rng.uniform(-0.8, 0.8, model.n),
        rng.normal(size=6) * speed,
        rng.normal(size=model.n) * speed,
    )


@pytest.fixture(autouse=True)
def fresh_settings():
    """Settings are cached process-wide; start every test from a clean cache."""
    get_settings.cache_clear()
    yield
    get_settings.cache_clear()


@pytest.fixture
def rng():
    return np.random.default_rng(7)


@pytest.fixture(scope="session")
def chain_model():
    return load_model_file(MODELS_DIR / "three_link_chain.json")


@pytest.fixture(scope="session")
def human_model():
    return load_model_file(MODELS_DIR / "desk_human.json")


@pytest.fixture(scope="session")
def robot_model():
    return load_model_file(MODELS_DIR / "desk_robot.json")


@pytest.fixture(scope="session")
def object_model():
    return load_model_file(OBJECT_PATH)


@pytest.fixture(scope="session")
def catalog():
    return load_catalog(CATALOG_PATH)


@pytest.fixture
def scenario_config():
    config, _, _ = load_scenario(SCENARIO_PATH)
    return config


@pytest.fixture
def short_scenario():
    """The desk scenario cut to a few steps."""
    config, base_dir, _ = load_scenario(SCENARIO_PATH, ["duration=0.02"])
    return config, base_dir


@pytest.fixture
def chain_pair(chain_model, rng):
    """Two chains grasping tip to tip, the robot chain welded to the world at its base."""
    contacts = ContactSpec(env_contacts_robot=("base",), mutual=("tip", "tip"))
    system = assemble(chain_model, chain_model, contacts)
    state_r = random_state(chain_model, rng)
    state_h = random_state(chain_model, rng)
    state_h = align_partner(chain_model, chain_model, state_h, state_r, ("tip", "tip"))
    return system, SystemState(state_h, state_r)


@pytest.fixture
def seated_desk(scenario_config, human_model, robot_model):
    """Desk agents in the seated contact set at the scenario's initial posture."""
    runner = ScenarioRunner(scenario_config, human_model, robot_model)
    states = runner.initial_states()
    system = assemble(human_model, robot_model, scenario_config.contact_spec(MachineState.S1))
    return system, states


@pytest.fixture(scope="session")
def object_observations(object_model, catalog):
    return generate_object_observations(
        object_model,
        catalog,
        TRUE_ASSIGNMENT,
        dt=0.002,
        duration=0.4,
        frames=GRASP_FRAMES,
        seed=3,
    )
