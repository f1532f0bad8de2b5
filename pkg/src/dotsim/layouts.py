"""Built-in gate layouts.

Two geometries ship with the package:

* ``finger_gate_layout`` — parallel finger gates of 40 nm width at the
  160 nm dot pitch, reaching in from both sides of a 200 nm wide central
  channel, inside a +-1.5 µm window. This approximates a realistic
  linear-array gate pattern and is the default for screened-interaction
  calculations.
* ``full_plane_layout`` — metal covering the whole window, used to
  validate the tile solver against the closed-form image-charge result.

The same geometries are shipped as JSON documents under ``dotsim/data``
for use with the command line (see ``builtin_layout``).
"""
from __future__ import annotations

from importlib import resources

import numpy as np

from .electrostatics import (DEFAULT_DEPTH_NM, GAAS_PERMITTIVITY, GateLayout,
                             PhysicalConstants, load_gate_layout)

BUILTIN_NAMES = ("finger-gates", "full-plane")


def _rect(x0, y0, x1, y1) -> np.ndarray:
    return np.array([[x0, y0], [x1, y0], [x1, y1], [x0, y1]], dtype=float)


def finger_gate_layout(half_window: float = 1500.0, pitch: float = 160.0,
                       finger_width: float = 40.0,
                       channel_half_gap: float = 100.0) -> GateLayout:
    """Finger gates flanking a central channel along y = 0.

    Fingers are centered at x = k*pitch, so a dot array with the same
    pitch sits directly under them, in the channel between the tips.
    """
    if not 0 < finger_width < pitch:
        raise ValueError(f"finger_width must be in (0, {pitch}), got {finger_width}")
    if not 0 <= channel_half_gap < half_window:
        raise ValueError(f"channel_half_gap must be in [0, {half_window})")
    polys = []
    k_max = int(np.floor((half_window - finger_width / 2) / pitch))
    for k in range(-k_max, k_max + 1):
        x0 = k * pitch - finger_width / 2
        x1 = k * pitch + finger_width / 2
        polys.append(_rect(x0, channel_half_gap, x1, half_window))
        polys.append(_rect(x0, -half_window, x1, -channel_half_gap))
    box = ((-half_window, -half_window), (half_window, half_window))
    return GateLayout(tuple(polys), box)


def full_plane_layout(half_window: float = 500.0) -> GateLayout:
    """Metal covering the entire window, for image-charge validation."""
    box = ((-half_window, -half_window), (half_window, half_window))
    return GateLayout((_rect(-half_window, -half_window,
                             half_window, half_window),), box)


def builtin_layout(name: str) -> tuple[GateLayout, PhysicalConstants]:
    """Load one of the shipped layout JSONs by name."""
    if name not in BUILTIN_NAMES:
        raise ValueError(f"unknown builtin layout {name!r}; "
                         f"choose from {BUILTIN_NAMES}")
    fname = name.replace("-", "_") + ".json"
    ref = resources.files("dotsim.data").joinpath(fname)
    with resources.as_file(ref) as path:
        return load_gate_layout(path)


def default_constants() -> PhysicalConstants:
    return PhysicalConstants.for_permittivity(GAAS_PERMITTIVITY, DEFAULT_DEPTH_NM)
