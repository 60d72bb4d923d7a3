from __future__ import annotations

import pytest

from plasmaug.dist import (Bernoulli, Categorical, Constant, Uniform,
                           dist_from_json, dist_to_json)
from plasmaug.errors import ConfigurationError
from plasmaug.rng import RandSource


def test_constant_always_returns_value():
    rs = RandSource(1)
    assert all(Constant(0.3).sample(rs) == 0.3 for _ in range(5))


def test_uniform_respects_range():
    rs = RandSource(2)
    values = [Uniform(-1.5, 2.5).sample(rs) for _ in range(1000)]
    assert min(values) >= -1.5
    assert max(values) < 2.5


def test_bernoulli_edge_probabilities():
    rs = RandSource(3)
    assert all(Bernoulli(0.0).sample(rs) == 0.0 for _ in range(50))
    assert all(Bernoulli(1.0).sample(rs) == 1.0 for _ in range(50))


def test_categorical_degenerate_weight_picks_that_branch():
    rs = RandSource(4)
    assert all(Categorical((0.0, 1.0, 0.0)).sample(rs) == 1.0 for _ in range(50))


@pytest.mark.parametrize("bad", [
    lambda: Uniform(2.0, 1.0),
    lambda: Uniform(float("nan"), 1.0),
    lambda: Bernoulli(1.5),
    lambda: Categorical(()),
    lambda: Categorical((0.0, 0.0)),
    lambda: Categorical((-1.0, 2.0)),
    lambda: Constant(float("inf")),
])
def test_invalid_specs_rejected(bad):
    with pytest.raises(ConfigurationError):
        bad()


@pytest.mark.parametrize("dist", [
    Uniform(0.0, 0.5), Bernoulli(0.25), Categorical((1.0, 2.0)), Constant(3.0),
])
def test_json_round_trip(dist):
    assert dist_from_json(dist_to_json(dist)) == dist


def test_json_errors_carry_location():
    with pytest.raises(ConfigurationError, match="/x/y"):
        dist_from_json({"dist": "uniform", "lo": 0.0}, where="/x/y")
    with pytest.raises(ConfigurationError, match="unknown distribution"):
        dist_from_json({"dist": "zipf"}, where="/z")
