import math

import numpy as np
import pytest
from pydantic import ValidationError

from src.fronthaul.channel import (
    DIAGONAL,
    UPWARD,
    ap_grid,
    beta_from_geometry,
    build_statistics,
    direction_from_label,
    estimator_gain,
    gamma_from_beta,
    make_geometry,
    pathloss_db,
)
from src.fronthaul.errors import DomainError
from src.fronthaul.models import ChannelStatistics, Geometry, SystemConfig


def test_pathloss_reference_points():
    assert pathloss_db(1.0, 1.0) == pytest.approx(22.7)
    assert pathloss_db(10.0, 1.0) == pytest.approx(59.4)
    assert pathloss_db(100.0, 2.1) == pytest.approx(73.4 + 22.7 + 26 * math.log10(2.1))
    assert pathloss_db(10.0, 1.0, shadow_db=-3.0) == pytest.approx(56.4)


def test_pathloss_vectorized():
    loss = pathloss_db(np.array([[1.0, 10.0]]), 1.0, np.array([[0.0, 1.0]]))
    assert loss.shape == (1, 2)
    assert loss[0, 1] == pytest.approx(60.4)


@pytest.mark.parametrize("distance, carrier", [(0.0, 2.1), (-5.0, 2.1), (10.0, 0.0)])
def test_pathloss_domain(distance, carrier):
    with pytest.raises(DomainError):
        pathloss_db(distance, carrier)


def test_physical_config_conversion():
    config = SystemConfig.from_physical()
    assert config.uplink_power == pytest.approx(0.0316227766, rel=1e-9)
    assert config.pilot_power == config.uplink_power
    assert config.noise_power == pytest.approx(6.3608e-13, rel=1e-4)
    assert config.pilot_length == config.num_ues


def test_pilot_shorter_than_ues_rejected():
    with pytest.raises(ValidationError, match="pilot_length"):
        SystemConfig.from_physical(num_ues=8, pilot_length=4)


def test_gamma_below_beta(small_config):
    beta = np.array([1e-3, 0.5, 10.0])
    gamma = gamma_from_beta(beta, small_config)
    assert np.all(gamma < beta)
    energy = small_config.pilot_length * small_config.pilot_power
    assert gamma[1] == pytest.approx(energy * 0.25 / (small_config.noise_power + energy * 0.5))


def test_estimator_gain_squares_to_gamma(small_config):
    beta = np.array([0.2, 0.8])
    gain = estimator_gain(beta, small_config)
    energy = small_config.pilot_length * small_config.pilot_power
    variance = energy * beta + small_config.noise_power
    np.testing.assert_allclose(gain ** 2 * variance, gamma_from_beta(beta, small_config))


def test_statistics_reject_gamma_at_beta():
    with pytest.raises(ValidationError):
        ChannelStatistics(beta=[[1.0, 2.0]], gamma=[[0.5, 2.0]])
    with pytest.raises(ValidationError):
        ChannelStatistics(beta=[[1.0]], gamma=[[0.0]])


def test_four_ap_grid():
    grid = ap_grid(4, 1000.0)
    assert sorted(map(tuple, grid.tolist())) == [(-250, -250), (-250, 250), (250, -250), (250, 250)]


def test_grid_truncated_for_non_square_count():
    grid = ap_grid(5, 900.0)
    assert grid.shape == (5, 2)
    assert np.all(np.abs(grid) < 450)
    assert len({tuple(point) for point in grid.tolist()}) == 5


def test_direction_labels():
    assert direction_from_label("upward") == UPWARD
    assert direction_from_label(" Diagonal ") == DIAGONAL
    x, y = direction_from_label("90")
    assert x == pytest.approx(0.0, abs=1e-12)
    assert y == pytest.approx(1.0)
    with pytest.raises(DomainError):
        direction_from_label("sideways")


def test_displaced_dense_drop():
    rng = np.random.default_rng(0)
    geometry = make_geometry(4, 50, rng, ue_area_m=10.0, displacement_m=300.0, direction=DIAGONAL)
    ues = np.asarray(geometry.ue_positions)
    centre = 300.0 * np.asarray(DIAGONAL)
    assert np.all(np.abs(ues - centre) <= 5.0)


def test_distance_floor_keeps_colocated_ue_finite():
    config = SystemConfig.from_physical(num_aps=1, num_ues=1, shadowing_std_db=0.0)
    geometry = Geometry(ap_positions=[(0.0, 0.0)], ue_positions=[(0.0, 0.0)])
    beta = beta_from_geometry(geometry, config, np.random.default_rng(0))
    assert beta[0, 0] == pytest.approx(10 ** (-(22.7 + 26 * math.log10(2.1)) / 10))


def test_statistics_reproducible(desk_config):
    draws = []
    for _ in range(2):
        rng = np.random.default_rng(5)
        geometry = make_geometry(desk_config.num_aps, desk_config.num_ues, rng)
        draws.append(build_statistics(geometry, desk_config, rng))
    np.testing.assert_array_equal(draws[0].beta, draws[1].beta)
    assert draws[0].beta.shape == (4, 4)
    assert np.all(draws[0].gamma < draws[0].beta)


def test_statistics_read_only(desk_stats):
    with pytest.raises(ValueError):
        desk_stats.beta[0, 0] = 1.0
