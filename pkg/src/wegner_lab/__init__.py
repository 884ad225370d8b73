"""Numerical laboratory for alloy-type random Schrodinger operators on boxes.

Core pieces: finite-difference Hamiltonians on boxes (grids), rasterized
thick-set certification (thick_sets), alloy-type random potentials and the
diluted minorant construction (random_model), spectral primitives with
dual-route validation (spectral), experiment drivers producing deterministic
reports (experiments), and a config-driven command line (cli).
"""

from __future__ import annotations

__version__ = "0.1.0"
