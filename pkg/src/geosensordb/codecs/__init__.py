"""Delivery-format encoders and ingestion parsers."""

from .csvfmt import encode_csv
from .geotiff import decode_geotiff, encode_geotiff
from .pngfmt import encode_png
from .gml import encode_gml
from .asciigrid import parse_asc, render_asc
from .obscsv import parse_obs_csv

__all__ = [
    "encode_csv",
    "encode_geotiff",
    "decode_geotiff",
    "encode_png",
    "encode_gml",
    "parse_asc",
    "render_asc",
    "parse_obs_csv",
]
