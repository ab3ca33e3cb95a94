"""Shared fixtures: small abstract instances and a physical desk-scale drop"""

import numpy as np
import pytest

from src.fronthaul.channel import build_statistics, gamma_from_beta, make_geometry
from src.fronthaul.config_loader import load_config_text
from src.fronthaul.models import ChannelStatistics, SystemConfig
from src.fronthaul.quantization import default_profile


SMALL_CONFIG_TEXT = """
# two APs, two UEs, short searches
[system]
num_aps = 2
num_ues = 2
antennas_per_ap = 4
bit_budget = 8

[harmony]
stage1_iterations = 5
stage2_iterations = 3

[experiment]
trials = 2
seed = 3
methods = equal, stage1, stage1+2
"""


@pytest.fixture
def profile():
    return default_profile()


@pytest.fixture
def small_config():
    """Unit powers so every term of the SINR has the same order of magnitude"""
    return SystemConfig(
        num_aps=3,
        num_ues=2,
        antennas_per_ap=4,
        bit_budget=12,
        pilot_length=2,
        pilot_power=1.0,
        uplink_power=1.0,
        noise_power=0.5,
    )


@pytest.fixture
def small_stats(small_config):
    beta = np.array([[0.9, 0.2], [0.4, 0.7], [0.15, 0.35]])
    return ChannelStatistics(beta=beta, gamma=gamma_from_beta(beta, small_config))


@pytest.fixture
def small_bits():
    return np.array([[3, 1], [0, 2], [4, 2]])


@pytest.fixture
def desk_config():
    return SystemConfig.from_physical(num_aps=4, num_ues=4, antennas_per_ap=16, bit_budget=32)


@pytest.fixture
def desk_stats(desk_config):
    rng = np.random.default_rng(11)
    geometry = make_geometry(desk_config.num_aps, desk_config.num_ues, rng)
    return build_statistics(geometry, desk_config, rng)


@pytest.fixture
def config_file(tmp_path):
    path = tmp_path / "small.cfg"
    path.write_text(SMALL_CONFIG_TEXT, encoding="utf-8")
    return path


@pytest.fixture
def small_spec():
    return load_config_text(SMALL_CONFIG_TEXT)[1]
