"""Access to the shipped pipeline presets."""

from __future__ import annotations

from importlib import resources

from ..errors import ConfigurationError

PRESET_NAMES = ("global", "plasma_cascade", "plasma_branching")


def preset_source(name: str) -> str:
    """DSL source of a shipped preset."""
    if name not in PRESET_NAMES:
        raise ConfigurationError(
            f"unknown preset {name!r}; available: {', '.join(PRESET_NAMES)}")
    return (resources.files(__name__) / f"{name}.aug").read_text()
