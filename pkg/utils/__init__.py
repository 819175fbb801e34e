"""
Utility functions for unit parsing and file output.
"""

from utils.units import parse_quantity, format_quantity
from utils.output import atomic_write_text, format_float, write_csv

__all__ = ["parse_quantity", "format_quantity", "atomic_write_text", "format_float", "write_csv"]
