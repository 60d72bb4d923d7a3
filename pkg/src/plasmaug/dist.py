"""Parameter distributions attached to tunable augmentation parameters.

A DistSpec is one of Uniform, Bernoulli, Categorical, or Constant.  Sampling
consumes scalars from a :class:`~plasmaug.rng.RandSource`, so a distribution
plus a source is fully deterministic.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Union

from .errors import ConfigurationError
from .rng import RandSource


def _require_finite(name: str, *values: float) -> None:
    for v in values:
        if not math.isfinite(v):
            raise ConfigurationError(f"{name}: parameter {v!r} is not finite")


@dataclass(frozen=True)
class Uniform:
    lo: float
    hi: float

    def __post_init__(self):
        _require_finite("Uniform", self.lo, self.hi)
        if self.lo > self.hi:
            raise ConfigurationError(f"Uniform: lo {self.lo} > hi {self.hi}")

    def sample(self, rs: RandSource) -> float:
        return self.lo + rs.uniform() * (self.hi - self.lo)

    def bounds(self) -> tuple[float, float]:
        return (self.lo, self.hi)


@dataclass(frozen=True)
class Bernoulli:
    p: float

    def __post_init__(self):
        _require_finite("Bernoulli", self.p)
        if not 0.0 <= self.p <= 1.0:
            raise ConfigurationError(f"Bernoulli: p {self.p} outside [0, 1]")

    def sample(self, rs: RandSource) -> float:
        return 1.0 if rs.uniform() < self.p else 0.0

    def bounds(self) -> tuple[float, float]:
        return (0.0, 1.0)


@dataclass(frozen=True)
class Categorical:
    weights: tuple[float, ...]

    def __post_init__(self):
        weights = tuple(float(w) for w in self.weights)
        object.__setattr__(self, "weights", weights)
        _require_finite("Categorical", *weights)
        if not weights:
            raise ConfigurationError("Categorical: empty weight list")
        if any(w < 0 for w in weights):
            raise ConfigurationError(f"Categorical: negative weight in {weights}")
        if sum(weights) <= 0:
            raise ConfigurationError(f"Categorical: weights {weights} sum to zero")

    def sample(self, rs: RandSource) -> float:
        """Sampled branch index, returned as a float for uniformity."""
        total = sum(self.weights)
        u = rs.uniform() * total
        acc = 0.0
        for i, w in enumerate(self.weights):
            acc += w
            if u < acc:
                return float(i)
        return float(len(self.weights) - 1)

    def bounds(self) -> tuple[float, float]:
        return (0.0, float(len(self.weights) - 1))


@dataclass(frozen=True)
class Constant:
    value: float

    def __post_init__(self):
        _require_finite("Constant", self.value)

    def sample(self, rs: RandSource) -> float:
        return self.value

    def bounds(self) -> tuple[float, float]:
        return (self.value, self.value)


DistSpec = Union[Uniform, Bernoulli, Categorical, Constant]

_KIND_NAMES = {Uniform: "uniform", Bernoulli: "bernoulli",
               Categorical: "categorical", Constant: "constant"}


def dist_to_json(dist: DistSpec) -> dict:
    """Plain-dict form used by node serialization and the op catalog."""
    if isinstance(dist, Uniform):
        return {"dist": "uniform", "lo": dist.lo, "hi": dist.hi}
    if isinstance(dist, Bernoulli):
        return {"dist": "bernoulli", "p": dist.p}
    if isinstance(dist, Categorical):
        return {"dist": "categorical", "weights": list(dist.weights)}
    if isinstance(dist, Constant):
        return {"dist": "constant", "value": dist.value}
    raise ConfigurationError(f"not a DistSpec: {dist!r}")


def dist_from_json(obj: object, where: str = "") -> DistSpec:
    """Inverse of :func:`dist_to_json`; raises ConfigurationError with the
    offending location on malformed input."""
    loc = where or "<dist>"
    if not isinstance(obj, dict):
        raise ConfigurationError(f"{loc}: expected an object, got {type(obj).__name__}")
    kind = obj.get("dist")
    try:
        if kind == "uniform":
            return Uniform(float(obj["lo"]), float(obj["hi"]))
        if kind == "bernoulli":
            return Bernoulli(float(obj["p"]))
        if kind == "categorical":
            return Categorical(tuple(float(w) for w in obj["weights"]))
        if kind == "constant":
            return Constant(float(obj["value"]))
    except KeyError as exc:
        raise ConfigurationError(f"{loc}: missing field {exc.args[0]!r}") from None
    except (TypeError, ValueError) as exc:
        raise ConfigurationError(f"{loc}: {exc}") from None
    raise ConfigurationError(f"{loc}: unknown distribution kind {kind!r}")
