"""The augmentation operation library.

Two families, following how an operation touches a sample:

* dorsal ops change pixel values in place and never move content; they apply
  to the image only and map [0, 1] images to [0, 1] images.
* ventral ops move content; they are expressed as sampling fields so the same
  geometry applies to images, masks, and point sets.

Each operation declares a parameter schema (default distribution, hard
bounds, human label) used by the DSL validator and the tuning UI.  Default
magnitudes are engine defaults chosen to be mild; tune them per dataset.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dist import DistSpec, Uniform, dist_to_json
from .errors import ConfigurationError, InvalidInputError
from .field import (SamplingField, clamp01, field_from_matrix,
                    identity_field)
from .plasma import plasma_for_size
from .rng import RandSource

DORSAL = "dorsal"
VENTRAL = "ventral"


@dataclass(frozen=True)
class ParamSpec:
    name: str
    default: DistSpec
    lo: float
    hi: float
    label: str


@dataclass(frozen=True)
class OpDescriptor:
    name: str
    kind: str
    params: tuple[ParamSpec, ...]

    def to_json(self) -> dict:
        return {
            "name": self.name,
            "kind": self.kind,
            "params": [
                {"name": p.name, "label": p.label, "lo": p.lo, "hi": p.hi,
                 "default": dist_to_json(p.default)}
                for p in self.params
            ],
        }


_REGISTRY: dict[str, tuple[OpDescriptor, object]] = {}


def _register(name: str, kind: str, params: list[ParamSpec], fn) -> None:
    if name in _REGISTRY:
        raise ConfigurationError(f"duplicate op name {name!r}")
    _REGISTRY[name] = (OpDescriptor(name, kind, tuple(params)), fn)


def catalog() -> list[OpDescriptor]:
    """All registered ops, in registration order."""
    return [desc for desc, _ in _REGISTRY.values()]


def descriptor(name: str) -> OpDescriptor:
    try:
        return _REGISTRY[name][0]
    except KeyError:
        raise ConfigurationError(f"unknown op {name!r}") from None


def is_registered(name: str) -> bool:
    return name in _REGISTRY


def apply_dorsal(name: str, img: np.ndarray, values: dict, rng: RandSource) -> np.ndarray:
    desc, fn = _REGISTRY[name]
    if desc.kind != DORSAL:
        raise InvalidInputError(f"{name} is not a dorsal op")
    return fn(img, values, rng)


def build_field(name: str, width: int, height: int, values: dict,
                rng: RandSource) -> SamplingField:
    desc, fn = _REGISTRY[name]
    if desc.kind != VENTRAL:
        raise InvalidInputError(f"{name} is not a ventral op")
    return fn(width, height, values, rng)


# --- dorsal ops -----------------------------------------------------------

def _brightness(img, values, rng):
    return clamp01(img + values["delta"])


def _gaussian_noise(img, values, rng):
    noise = rng.normals(img.size).reshape(img.shape)
    return clamp01(img + values["sigma"] * noise)


def _linear_color(img, values, rng):
    return clamp01(values["a"] * img + values["b"])


def _plasma_brightness(img, values, rng):
    h, w = img.shape[-2:]
    p = plasma_for_size(w, h, values["roughness"], rng)
    return clamp01(img + values["strength"] * (2.0 * p - 1.0))


def _plasma_shadow(img, values, rng):
    # Multiplier stays in [1 - strength, 1], so the result needs no clamp.
    h, w = img.shape[-2:]
    p = plasma_for_size(w, h, values["roughness"], rng)
    return img * (1.0 - values["strength"] * p)


# --- ventral ops ----------------------------------------------------------

def _flip_h(width, height, values, rng):
    m = np.diag([-1.0, 1.0, 1.0])
    return field_from_matrix(m, width, height)


def _flip_v(width, height, values, rng):
    m = np.diag([1.0, -1.0, 1.0])
    return field_from_matrix(m, width, height)


def _fit_homography(src: np.ndarray, dst: np.ndarray) -> np.ndarray:
    """Exact homography through 4 point pairs (DLT with h33 = 1)."""
    a = np.zeros((8, 8))
    b = np.zeros(8)
    for i, ((x, y), (u, v)) in enumerate(zip(src, dst)):
        a[2 * i] = [x, y, 1.0, 0.0, 0.0, 0.0, -u * x, -u * y]
        a[2 * i + 1] = [0.0, 0.0, 0.0, x, y, 1.0, -v * x, -v * y]
        b[2 * i] = u
        b[2 * i + 1] = v
    h = np.linalg.solve(a, b)
    return np.array([[h[0], h[1], h[2]], [h[3], h[4], h[5]], [h[6], h[7], 1.0]])


_CORNERS = np.array([[-1.0, -1.0], [1.0, -1.0], [1.0, 1.0], [-1.0, 1.0]])


def _perspective(width, height, values, rng):
    jitter = values["corner_jitter"]
    scale_px = jitter * min(width, height)
    # Pixel displacement -> normalized units per axis.
    nx = 2.0 / (width - 1) if width > 1 else 0.0
    ny = 2.0 / (height - 1) if height > 1 else 0.0
    for _ in range(8):
        draws = rng.take(8).reshape(4, 2)
        disp_px = (2.0 * draws - 1.0) * scale_px
        moved = _CORNERS + disp_px * np.array([nx, ny])
        try:
            forward = _fit_homography(_CORNERS, moved)
        except np.linalg.LinAlgError:
            continue
        det = np.linalg.det(forward)
        if not np.isfinite(forward).all() or abs(det) < 1e-9:
            continue
        return field_from_matrix(np.linalg.inv(forward), width, height)
    raise ConfigurationError(
        "perspective: failed to draw an invertible corner displacement")


def _plasma_warp(width, height, values, rng):
    strength = values["strength"]
    base = identity_field(width, height)
    if strength == 0.0:
        return base
    px = plasma_for_size(width, height, values["roughness"], rng)
    py = plasma_for_size(width, height, values["roughness"], rng)
    amp = 2.0 * strength / min(width, height)
    sx = base.sx + amp * (px - 0.5)
    sy = base.sy + amp * (py - 0.5)
    return SamplingField(sx, sy)


_register("brightness", DORSAL, [
    ParamSpec("delta", Uniform(-0.2, 0.2), -1.0, 1.0, "additive brightness shift"),
], _brightness)

_register("gaussian_noise", DORSAL, [
    ParamSpec("sigma", Uniform(0.0, 0.05), 0.0, 1.0, "noise standard deviation"),
], _gaussian_noise)

_register("linear_color", DORSAL, [
    ParamSpec("a", Uniform(0.8, 1.2), -2.0, 2.0, "multiplicative gain"),
    ParamSpec("b", Uniform(-0.1, 0.1), -1.0, 1.0, "additive offset"),
], _linear_color)

_register("plasma_brightness", DORSAL, [
    ParamSpec("strength", Uniform(0.0, 0.5), 0.0, 1.0, "local brightness amplitude"),
    ParamSpec("roughness", Uniform(0.2, 0.7), 0.05, 1.0, "plasma roughness"),
], _plasma_brightness)

_register("plasma_shadow", DORSAL, [
    ParamSpec("strength", Uniform(0.0, 0.5), 0.0, 1.0, "shadow depth"),
    ParamSpec("roughness", Uniform(0.2, 0.7), 0.05, 1.0, "plasma roughness"),
], _plasma_shadow)

_register("hflip", VENTRAL, [], _flip_h)

_register("vflip", VENTRAL, [], _flip_v)

_register("perspective", VENTRAL, [
    ParamSpec("corner_jitter", Uniform(0.0, 0.1), 0.0, 0.25,
              "corner displacement as a fraction of the short side"),
], _perspective)

_register("plasma_warp", VENTRAL, [
    ParamSpec("strength", Uniform(0.0, 12.0), 0.0, 64.0,
              "maximum displacement in pixels"),
    ParamSpec("roughness", Uniform(0.2, 0.7), 0.05, 1.0, "plasma roughness"),
], _plasma_warp)

# Aliases matching the functional names used in the engine's public API.
flip_h = _flip_h
flip_v = _flip_v


def brightness_global(img: np.ndarray, delta: float) -> np.ndarray:
    return _brightness(img, {"delta": delta}, None)


def gaussian_noise(img: np.ndarray, sigma: float, rng: RandSource) -> np.ndarray:
    if sigma < 0:
        raise InvalidInputError(f"sigma must be >= 0, got {sigma}")
    return _gaussian_noise(img, {"sigma": sigma}, rng)


def linear_color(img: np.ndarray, a: float, b: float) -> np.ndarray:
    return _linear_color(img, {"a": a, "b": b}, None)


def plasma_brightness(img: np.ndarray, strength: float, roughness: float,
                      rng: RandSource) -> np.ndarray:
    return _plasma_brightness(img, {"strength": strength, "roughness": roughness}, rng)


def plasma_shadow(img: np.ndarray, strength: float, roughness: float,
                  rng: RandSource) -> np.ndarray:
    return _plasma_shadow(img, {"strength": strength, "roughness": roughness}, rng)


def perspective(width: int, height: int, corner_jitter: float,
                rng: RandSource) -> SamplingField:
    if not 0.0 <= corner_jitter <= 0.25:
        raise InvalidInputError(
            f"corner_jitter must be in [0, 0.25], got {corner_jitter}")
    return _perspective(width, height, {"corner_jitter": corner_jitter}, rng)


def plasma_warp(width: int, height: int, strength: float, roughness: float,
                rng: RandSource) -> SamplingField:
    if strength < 0:
        raise InvalidInputError(f"strength must be >= 0, got {strength}")
    return _plasma_warp(width, height,
                        {"strength": strength, "roughness": roughness}, rng)
