"""Semi-automatic vegetation mapping from UAV visible-band imagery.

Workflow: paint rough cover masks, refine them by hue-spectrum intervals,
harvest labeled square tiles, embed tiles as color/texture vectors, train and
cross-validate classifiers, then map whole images tile by tile.
"""

from .imaging import (
    CoverMask,
    HueRangeSet,
    HueSpectrum,
    RgbImage,
    compute_hue_spectrum,
    derive_hue_ranges,
    refine_mask,
)
from .tiling import SelectionParams, TileManifest, TileSpec, grid_tiles, select_training_tiles

__version__ = "1.0.0"

__all__ = [
    "CoverMask",
    "HueRangeSet",
    "HueSpectrum",
    "RgbImage",
    "compute_hue_spectrum",
    "derive_hue_ranges",
    "refine_mask",
    "SelectionParams",
    "TileManifest",
    "TileSpec",
    "grid_tiles",
    "select_training_tiles",
    "__version__",
]
