"""rmtrainer: learned radio-map predictor on rasterized room encodings.

Couples to the dataset toolkit through its files only: RMTF tensors,
channel-name sidecars and manifest.json. The adapter module is the one
exception; it is imported by the evaluation harness and converses in that
package's scene/map types.
"""

__version__ = "0.1.0"
