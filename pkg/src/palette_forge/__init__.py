"""Accessible categorical color palettes: generation, ordering, scoring, auditing."""

from palette_forge.colorspace import (
    DEFAULT_VC,
    GamutTable,
    PaletteError,
    UcsCoord,
    ViewingConditions,
    build_gamut_table,
    delta_e,
    format_hex,
    load_or_build,
    parse_hex,
    srgb8_to_lab,
    srgb8_to_ucs,
)
from palette_forge.cvd import delta_e_cvd, min_pairwise_cvd, simulate, simulate_srgb8

__version__ = "0.1.0"

__all__ = [
    "DEFAULT_VC",
    "GamutTable",
    "PaletteError",
    "UcsCoord",
    "ViewingConditions",
    "build_gamut_table",
    "delta_e",
    "delta_e_cvd",
    "format_hex",
    "load_or_build",
    "min_pairwise_cvd",
    "parse_hex",
    "simulate",
    "simulate_srgb8",
    "srgb8_to_lab",
    "srgb8_to_ucs",
    "__version__",
]
