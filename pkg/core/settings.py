"""
Model switches and the JSON run manifest
"""

import json
import logging
from dataclasses import asdict, dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Dict, List, Optional

from core import __version__

log = logging.getLogger(__name__)

ALPHA_CONVENTIONS = ("paper", "standard")


@dataclass(frozen=True)
class ModelOptions:
    """Physics switches that are not parameters of the device itself.

    alpha_convention: "paper" uses tan(alpha) = E_J / omega0, "standard" uses
        tan(alpha) = E_J / E_C.
    swap_damping: False puts gamma_c on photon states and gamma_d on
        qubit-excited states; True exchanges them.
    dispersive_threshold: upper bound on eta = zeta / delta.
    """
    alpha_convention: str = "paper"
    swap_damping: bool = False
    dispersive_threshold: float = 0.1

    def __post_init__(self):
        if self.alpha_convention not in ALPHA_CONVENTIONS:
            raise ValueError(
                f"alpha_convention must be one of {ALPHA_CONVENTIONS}, got {self.alpha_convention!r}"
            )
        if not 0.0 < self.dispersive_threshold < 1.0:
            raise ValueError("dispersive_threshold must lie in (0, 1)")

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


DEFAULT_OPTIONS = ModelOptions()


@dataclass
class RunManifest:
    """Record of everything that went into a run, written last."""
    command: str
    parameters: Dict[str, Any] = field(default_factory=dict)
    tolerances: Dict[str, float] = field(default_factory=dict)
    outputs: List[str] = field(default_factory=list)
    checks: Dict[str, Any] = field(default_factory=dict)
    warnings: List[str] = field(default_factory=list)
    exit_status: int = 0

    def to_dict(self) -> Dict[str, Any]:
        data = asdict(self)
        data["version"] = __version__
        data["created"] = datetime.now(timezone.utc).isoformat(timespec="seconds")
        return data

    def save(self, path: Path) -> Path:
        """
        Write the manifest as JSON.

        Args:
            path: Target file; parent directories are created as needed

        Returns:
            The path written
        """
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        tmp = path.with_name(path.name + ".tmp")
        with open(tmp, "w", encoding="utf-8") as f:
            json.dump(self.to_dict(), f, indent=2, ensure_ascii=False, sort_keys=True)
            f.write("\n")
        tmp.replace(path)
        log.info("Wrote manifest %s", path)
        return path

    @staticmethod
    def load(path: Path) -> Optional[Dict[str, Any]]:
        """Read a manifest back; returns None if it is missing or unreadable."""
        path = Path(path)
        if not path.exists():
            return None
        try:
            with open(path, "r", encoding="utf-8") as f:
                return json.load(f)
        except (json.JSONDecodeError, IOError) as e:
            log.warning("Could not load manifest %s: %s", path, e)
            return None
