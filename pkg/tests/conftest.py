# Shared test setup: the scripts in src/ import each other by bare module
# name, so src/ goes on the path before any test module is collected.
#
# Created by: Andy Carter, PE
# Created - 2024.03.12
# Last revised - 2024.05.28 - default config fixture
#
# swarm-group-plan - tests


# ************************************************************
import os
import sys

import numpy as np
import pytest

STR_SRC_DIR = os.path.abspath(os.path.join(os.path.dirname(__file__), '..', 'src'))
if STR_SRC_DIR not in sys.path:
    sys.path.insert(0, STR_SRC_DIR)

STR_CONFIG_DIR = os.path.abspath(os.path.join(os.path.dirname(__file__), '..', 'example_config'))

from config_utils import fn_typed_config_from_ini  # noqa: E402
# ************************************************************


@pytest.fixture
def dict_config():
    # built-in defaults, fresh per test
    return fn_typed_config_from_ini(None)


@pytest.fixture
def str_config_dir():
    return STR_CONFIG_DIR


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
