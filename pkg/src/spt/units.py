"""Unit conversion between dimensionless (g2 = 1) and laboratory 2*pi*MHz inputs.

All internal computation runs in units of the strong cavity coupling g2.  A
frequency quoted as "2*pi x f MHz" maps to the dimensionless value f / g2_mhz;
times map inversely.  Only the ratio matters, so the 2*pi is never applied
explicitly.
"""

from __future__ import annotations


def to_g2_units(value_mhz: float, g2_mhz: float) -> float:
    """Convert a rate/frequency given as 2*pi x MHz to units of g2."""
    if g2_mhz <= 0:
        raise ValueError("g2 reference frequency must be positive")
    return value_mhz / g2_mhz


def from_g2_units(value: float, g2_mhz: float) -> float:
    """Convert a dimensionless rate back to 2*pi x MHz."""
    if g2_mhz <= 0:
        raise ValueError("g2 reference frequency must be positive")
    return value * g2_mhz


def rate_to_hz(value: float, g2_mhz: float) -> float:
    """Dimensionless rate -> 2*pi x Hz."""
    return from_g2_units(value, g2_mhz) * 1e6


def time_to_us(value: float, g2_mhz: float) -> float:
    """Dimensionless time (units of 1/g2) -> microseconds of 1/(2*pi*MHz)."""
    return value / g2_mhz
