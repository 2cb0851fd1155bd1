"""roomwave: synthetic indoor radio-map datasets and predictor evaluation.

Pipeline: procedural room generation -> deterministic ray tracing of
ground-truth path-loss maps -> structured noisy copies of each environment ->
multi-level raster encodings -> interpolation baselines and evaluation
protocols for radio-map predictors.
"""

from .scene import (
    MAP_SIZE, MAP_PIXEL_M, MAP_EXTENT_M, RX_HEIGHT_M, NOISE_FLOOR_DB,
    PL_LO_DB, PL_HI_DB, Material, SceneObject, Transmitter, Scene, RadioMap,
    ObservationSet, save_scene, load_scene, empty_map_for_scene,
    validate_scene, scale_to_unit, unscale_from_unit,
)

__version__ = "0.1.0"
