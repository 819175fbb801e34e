"""
Unit-suffixed quantities for config files

Every numeric config value carries its unit, e.g. ``6 GHz``, ``0.25 fF`` or
``10 us``. Values are converted to the internal units: MHz for frequencies,
microseconds for times, SI for everything else.
"""

import re
from typing import Dict, Optional

_NUMBER = r"[-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?"
_QUANTITY_RE = re.compile(rf"^\s*({_NUMBER})\s*([A-Za-zµμ/]*)\s*$")

# unit -> factor into the internal unit of its kind
UNITS: Dict[str, Dict[str, float]] = {
    "frequency": {"Hz": 1e-6, "kHz": 1e-3, "MHz": 1.0, "GHz": 1e3},
    "time": {"s": 1e6, "ms": 1e3, "us": 1.0, "µs": 1.0, "μs": 1.0, "ns": 1e-3},
    "voltage": {"V": 1.0, "mV": 1e-3, "uV": 1e-6, "µV": 1e-6, "μV": 1e-6},
    "capacitance": {"F": 1.0, "pF": 1e-12, "fF": 1e-15, "aF": 1e-18},
    "mass": {"kg": 1.0, "g": 1e-3},
    "length": {"m": 1.0, "mm": 1e-3, "um": 1e-6, "µm": 1e-6, "μm": 1e-6, "nm": 1e-9},
    "dimensionless": {"": 1.0},
}

INTERNAL_UNIT = {
    "frequency": "MHz",
    "time": "us",
    "voltage": "V",
    "capacitance": "F",
    "mass": "kg",
    "length": "m",
    "dimensionless": "",
}


def parse_quantity(text: str, kind: str) -> float:
    """
    Parse a number with a unit suffix.

    Args:
        text: Raw value such as ``"0.6 MHz"``
        kind: Physical dimension the value must have (a key of ``UNITS``)

    Returns:
        Value in the internal unit of ``kind``

    Raises:
        ValueError: unknown kind, malformed number, or unit of the wrong dimension
    """
    if kind not in UNITS:
        raise ValueError(f"unknown quantity kind {kind!r}")
    match = _QUANTITY_RE.match(text)
    if match is None:
        raise ValueError(f"cannot parse {text!r} as a {kind}")
    number, unit = match.groups()
    table = UNITS[kind]
    if unit not in table:
        expected = ", ".join(u for u in table if u) or "no unit"
        found = unit_kind(unit)
        got = f" (got a {found})" if found else ""
        raise ValueError(f"{text!r}: expected a {kind} in {expected}{got}")
    return float(number) * table[unit]


def unit_kind(unit: str) -> Optional[str]:
    """Dimension a unit belongs to, or None."""
    for kind, table in UNITS.items():
        if unit in table:
            return kind
    return None


def format_quantity(value: float, kind: str) -> str:
    """Render an internal-unit value with its unit, round-trippable through parse_quantity."""
    unit = INTERNAL_UNIT[kind]
    text = repr(float(value))
    return f"{text} {unit}" if unit else text
