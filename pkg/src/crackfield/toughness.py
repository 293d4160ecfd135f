"""Spatially varying fracture toughness: scenario descriptions and rasterization.

A scenario is a background toughness plus a list of tougher inclusions
(periodic stripes along x1, or disks).  Rasterization is piecewise
constant: a cell takes the toughness of the first inclusion containing its
center, with no interface smoothing.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidScenario, UnknownCase
from .grid import GridSpec, ScalarField


@dataclass(frozen=True)
class Stripe:
    """Periodic stripes along x1: tough on [phase + k*period, phase + k*period + width)."""

    period: float
    width: float
    phase: float
    gamma1: float


@dataclass(frozen=True)
class Disk:
    center: tuple[float, float]
    radius: float
    gamma1: float


@dataclass(frozen=True)
class ToughnessScenario:
    gamma0: float
    inclusions: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "inclusions", tuple(self.inclusions))
        if self.gamma0 <= 0:
            raise InvalidScenario("background toughness gamma0 must be positive")
        for inc in self.inclusions:
            if inc.gamma1 <= 0:
                raise InvalidScenario("inclusion toughness gamma1 must be positive")
            if isinstance(inc, Disk) and inc.radius <= 0:
                raise InvalidScenario("disk radius must be positive")
            if isinstance(inc, Stripe) and not 0 < inc.width <= inc.period:
                raise InvalidScenario("stripe width must lie in (0, period]")


ToughnessField = ScalarField


def rasterize(s: ToughnessScenario, g: GridSpec) -> ToughnessField:
    """Evaluate gamma(x) at every cell center.

    Disk membership is tested at the cell center (|c - center| <= radius);
    inclusions that stick out of the domain are clipped with a warning.
    """
    x1c, x2c = g.cell_centers()
    values = np.full(g.shape, s.gamma0, dtype=float)
    claimed = np.zeros(g.shape, dtype=bool)
    for inc in s.inclusions:
        if isinstance(inc, Disk):
            cx, cy = inc.center
            if cx - inc.radius < 0 or cx + inc.radius > g.L or cy - inc.radius < 0 or cy + inc.radius > g.H:
                warnings.warn(f"disk at {inc.center} with radius {inc.radius} is clipped by the domain")
            mask = (x1c - cx) ** 2 + (x2c - cy) ** 2 <= inc.radius**2
        elif isinstance(inc, Stripe):
            mask = np.mod(x1c - inc.phase, inc.period) < inc.width
        else:
            raise InvalidScenario(f"unknown inclusion type {type(inc).__name__}")
        take = mask & ~claimed
        values[take] = inc.gamma1
        claimed |= mask
    return ScalarField(g, values)


# Baked-in layouts I..VII.  The stripe phase for case II starts the first
# tough stripe at x1 = 0.5, right after the initial notch region; it is a
# knob on the Stripe itself if a shifted layout is ever needed.
_PRESETS = {
    "I": lambda: ToughnessScenario(gamma0=0.5),
    "II": lambda: ToughnessScenario(
        gamma0=0.5, inclusions=(Stripe(period=1.0, width=0.5, phase=0.5, gamma1=0.75),)
    ),
    "III": lambda: ToughnessScenario(
        gamma0=0.5, inclusions=(Disk(center=(1.5, 0.5), radius=0.2, gamma1=0.75),)
    ),
    "IV": lambda: ToughnessScenario(
        gamma0=0.5, inclusions=(Disk(center=(2.0, 0.5), radius=0.2, gamma1=1.0),)
    ),
    "V": lambda: ToughnessScenario(
        gamma0=0.5,
        inclusions=(
            Disk(center=(1.5, 0.5), radius=0.2, gamma1=0.75),
            Disk(center=(3.5, 0.5), radius=0.2, gamma1=0.75),
        ),
    ),
    "VI": lambda: ToughnessScenario(
        gamma0=0.5,
        inclusions=(
            Disk(center=(1.5, 0.65), radius=0.2, gamma1=0.75),
            Disk(center=(3.5, 0.45), radius=0.2, gamma1=0.75),
        ),
    ),
    "VII": lambda: ToughnessScenario(
        gamma0=0.5,
        inclusions=(
            Disk(center=(1.5, 0.65), radius=0.2, gamma1=0.75),
            Disk(center=(3.0, 0.45), radius=0.2, gamma1=0.75),
        ),
    ),
}

# Default applied strain per preset (overridable in any config).
CASE_STRAIN = {"I": 1.25, "II": 1.25, "III": 1.25, "IV": 1.25, "V": 1.0, "VI": 1.0, "VII": 1.0}

_ROMAN = {str(k): r for k, r in enumerate(["I", "II", "III", "IV", "V", "VI", "VII"], start=1)}


def preset(case_id) -> ToughnessScenario:
    """Return the toughness layout for one of the studied cases I..VII."""
    key = str(case_id).strip().upper()
    key = _ROMAN.get(key, key)
    if key not in _PRESETS:
        raise UnknownCase(f"unknown case {case_id!r}; expected I..VII")
    return _PRESETS[key]()


def preset_strain(case_id) -> float:
    """Default applied strain amplitude associated with a preset case."""
    key = _ROMAN.get(str(case_id).strip().upper(), str(case_id).strip().upper())
    if key not in CASE_STRAIN:
        raise UnknownCase(f"unknown case {case_id!r}; expected I..VII")
    return CASE_STRAIN[key]
