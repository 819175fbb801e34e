"""
Named scenario presets shipped in presets/*.ini
"""

import logging
from pathlib import Path
from typing import Dict, List

from cli.config import ScenarioConfig, load_scenario
from core.errors import ConfigError

log = logging.getLogger(__name__)

# Base preset directory - absolute path from this file
PRESET_DIR = Path(__file__).resolve().parent.parent / "presets"


class PresetLibrary:
    """Centralized preset lookup with a per-process cache."""

    _cache: Dict[str, ScenarioConfig] = {}

    @staticmethod
    def names() -> List[str]:
        return sorted(p.stem for p in PRESET_DIR.glob("*.ini"))

    @staticmethod
    def path(name: str) -> Path:
        """
        Resolve a preset name to its file.

        Raises:
            ConfigError: no preset of that name exists
        """
        preset_path = PRESET_DIR / f"{name}.ini"
        if not preset_path.exists():
            known = ", ".join(PresetLibrary.names()) or "none"
            raise ConfigError(f"unknown preset {name!r} (available: {known})")
        return preset_path

    @staticmethod
    def get(name: str) -> ScenarioConfig:
        if name in PresetLibrary._cache:
            return PresetLibrary._cache[name]
        config = load_scenario(PresetLibrary.path(name))
        PresetLibrary._cache[name] = config
        log.debug("Loaded preset %s", name)
        return config

    @staticmethod
    def describe(name: str) -> str:
        return PresetLibrary.get(name).description

    @staticmethod
    def clear_cache() -> None:
        PresetLibrary._cache.clear()


def resolve_scenario(ref: str) -> ScenarioConfig:
    """A preset name, or a path to a scenario file."""
    candidate = Path(ref)
    if candidate.suffix == ".ini" or candidate.exists():
        return load_scenario(candidate)
    return PresetLibrary.get(ref)
