import numpy as np
import pytest

from handmap.boxopt import SolveOptions
from handmap.embody import EmbodimentConfig
from handmap.fileio import load_embodiment_config, load_record_config
from handmap.record import RecordConfig
from handmap.robot import load_hand_config
from handmap.se3 import Transform
from handmap.synthetic import clone_hand_yaml

TIGHT_SOLVER = SolveOptions(max_iterations=200, objective_tolerance=1e-13,
                            step_tolerance=1e-9)


def with_solver(config: RecordConfig, solver: SolveOptions) -> RecordConfig:
    return RecordConfig(config.t_hand_model, config.shape, config.weights_plus,
                        config.weights_minus, config.q_min, config.q_max, solver)


@pytest.fixture(scope="session")
def record_config():
    return load_record_config()


@pytest.fixture(scope="session")
def record_config_tight():
    """Default config with weights 1e-3 and a tightly converging solver."""
    return with_solver(load_record_config().with_weights(1e-3), TIGHT_SOLVER)


@pytest.fixture(scope="session")
def mia_config():
    return load_embodiment_config(hand="mia")


@pytest.fixture(scope="session")
def shadow_config():
    return load_embodiment_config(hand="shadow")


@pytest.fixture(scope="session")
def robotiq_config():
    return load_embodiment_config(hand="robotiq_2f140")


@pytest.fixture(scope="session")
def clone_config(record_config):
    """Robot hand cloned from the intermediate model: the identity oracle."""
    hand = load_hand_config(clone_hand_yaml(record_config))
    return EmbodimentConfig(t_robot_model=Transform.identity(), hand=hand,
                            solver=TIGHT_SOLVER)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
