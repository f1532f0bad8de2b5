"""Screened interactions, extended-Hubbard spectra and charge-stability
analysis for gated quantum-dot arrays.

Units everywhere: nm, µeV, elementary charges.
"""
from .electrostatics import (GateLayout, PhysicalConstants, TileChargeSolution,
                             TileSet, TiledScreening, coulomb_bare,
                             image_screening_factor, load_gate_layout,
                             save_gate_layout, screened_potential_image,
                             screened_potential_tiled, screening_curves,
                             solve_tile_charges, tile_layout)
from .layouts import builtin_layout, finger_gate_layout, full_plane_layout

__version__ = "0.1.0"

__all__ = [
    "GateLayout", "PhysicalConstants", "TileChargeSolution", "TileSet",
    "TiledScreening", "coulomb_bare", "image_screening_factor",
    "load_gate_layout", "save_gate_layout", "screened_potential_image",
    "screened_potential_tiled", "screening_curves", "solve_tile_charges",
    "tile_layout", "builtin_layout", "finger_gate_layout", "full_plane_layout",
    "__version__",
]
