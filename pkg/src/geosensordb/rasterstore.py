"""Tiled, georeferenced, multiband raster coverages for remote observations.

Cells live in memory as float64 tiles and on disk as one file per tile
(``rasters/<name>/<band>/<tcol>_<trow>.tile``).  A tile file is a 16-byte
header (magic ``GFT1``, u16 LE tile size, u8 pixel-type code, 9 zero
bytes) followed by tile_size**2 little-endian IEEE samples, row-major,
top row first.  Unwritten tiles are implicit NoData.
"""

from __future__ import annotations

import math
import struct
import threading
from dataclasses import dataclass, field, replace
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from .errors import (
    DuplicateName,
    InvalidMeta,
    LengthMismatch,
    OutOfRange,
    SridMismatch,
    UnknownBand,
    UnknownCoverage,
)
from .model import Envelope, Point

DEFAULT_TILE_SIZE = 256

TILE_MAGIC = b"GFT1"
PIXEL_TYPE_CODES = {"float32": 1, "float64": 2}
PIXEL_TYPE_NAMES = {v: k for k, v in PIXEL_TYPE_CODES.items()}
_SAMPLE_FMT = {"float32": "<f4", "float64": "<f8"}


@dataclass(frozen=True)
class GeoTransform:
    """Axis-aligned affine grid georeference; (x0, y0) is the outer corner
    of cell (0, 0); dy < 0 for north-up grids."""

    x0: float
    y0: float
    dx: float
    dy: float

    def __post_init__(self):
        if not self.dx > 0:
            raise ValueError(f"dx must be > 0, got {self.dx}")
        if self.dy == 0:
            raise ValueError("dy must be nonzero")


def world_to_cell(gt: GeoTransform, p: Point, width: int, height: int):
    """Map a world position to its owning (col, row), or None when outside.

    Half-open convention: a point exactly on the right/bottom outer edge
    belongs to no cell.
    """
    col = math.floor((p.x - gt.x0) / gt.dx)
    row = math.floor((p.y - gt.y0) / gt.dy)
    if 0 <= col < width and 0 <= row < height:
        return col, row
    return None


def cell_to_world_center(gt: GeoTransform, col: int, row: int,
                         width: int | None = None, height: int | None = None) -> Point:
    if width is not None and not (0 <= col < width and 0 <= row < height):
        raise OutOfRange(f"cell ({col}, {row}) outside {width}x{height} grid")
    return Point(gt.x0 + (col + 0.5) * gt.dx, gt.y0 + (row + 0.5) * gt.dy)


def grid_envelope(gt: GeoTransform, width: int, height: int, srid: int) -> Envelope:
    xs = sorted((gt.x0, gt.x0 + width * gt.dx))
    ys = sorted((gt.y0, gt.y0 + height * gt.dy))
    return Envelope(xs[0], ys[0], xs[1], ys[1], srid)


@dataclass(frozen=True)
class BandMeta:
    index: int
    nodata: float | None = None
    pixel_type: str = "float64"

    def __post_init__(self):
        if self.pixel_type not in PIXEL_TYPE_CODES:
            raise InvalidMeta(f"unknown pixel_type {self.pixel_type!r}")
        if self.index < 1:
            raise InvalidMeta(f"band index must be >= 1, got {self.index}")


@dataclass(frozen=True)
class RasterCoverageMeta:
    name: str
    srid: int
    geotransform: GeoTransform
    width: int
    height: int
    bands: tuple[BandMeta, ...]
    tile_size: int = DEFAULT_TILE_SIZE
    acquired_at: datetime = field(default_factory=lambda: datetime.now(timezone.utc))
    sensor_id: str | None = None

    def __post_init__(self):
        if self.width <= 0 or self.height <= 0:
            raise InvalidMeta(f"grid must be nonempty, got {self.width}x{self.height}")
        if self.tile_size <= 0:
            raise InvalidMeta(f"tile_size must be > 0, got {self.tile_size}")
        if not self.bands:
            raise InvalidMeta("coverage needs at least one band")
        indexes = [b.index for b in self.bands]
        if len(set(indexes)) != len(indexes):
            raise InvalidMeta(f"duplicate band indexes: {indexes}")
        if self.srid <= 0:
            raise InvalidMeta(f"srid must be positive, got {self.srid}")

    def band(self, index: int) -> BandMeta:
        for b in self.bands:
            if b.index == index:
                return b
        raise UnknownBand(f"coverage {self.name!r} has no band {index}")

    def envelope(self) -> Envelope:
        return grid_envelope(self.geotransform, self.width, self.height, self.srid)

    @property
    def tiles_across(self) -> int:
        return -(-self.width // self.tile_size)

    @property
    def tiles_down(self) -> int:
        return -(-self.height // self.tile_size)

    def tile_footprint(self, tile_col: int, tile_row: int) -> Envelope:
        """World extent of a tile's real cells (padding excluded)."""
        ts = self.tile_size
        c0, r0 = tile_col * ts, tile_row * ts
        c1 = min(c0 + ts, self.width)
        r1 = min(r0 + ts, self.height)
        if c0 >= self.width or r0 >= self.height:
            raise OutOfRange(f"tile ({tile_col}, {tile_row}) outside tiling grid")
        gt = self.geotransform
        xs = sorted((gt.x0 + c0 * gt.dx, gt.x0 + c1 * gt.dx))
        ys = sorted((gt.y0 + r0 * gt.dy, gt.y0 + r1 * gt.dy))
        return Envelope(xs[0], ys[0], xs[1], ys[1], self.srid)


def _band_sentinel(band: BandMeta) -> float:
    return math.nan if band.nodata is None else band.nodata


class RasterStore:
    """Tile-file-backed coverage storage.

    Concurrency contract: many readers, one writer per coverage;
    ``write_grid`` publishes a whole band at once (readers observe the old
    or the new grid, never a mixture).
    """

    def __init__(self, root: Path):
        self.root = Path(root)
        self._metas: dict[str, RasterCoverageMeta] = {}
        self._tiles: dict[tuple[str, int], dict[tuple[int, int], np.ndarray]] = {}
        self._lock = threading.RLock()

    # -- catalog ----------------------------------------------------------

    def coverages(self) -> list[RasterCoverageMeta]:
        return sorted(self._metas.values(), key=lambda m: m.name)

    def has_coverage(self, name: str) -> bool:
        return name in self._metas

    def get_meta(self, name: str) -> RasterCoverageMeta:
        try:
            return self._metas[name]
        except KeyError:
            raise UnknownCoverage(f"no coverage named {name!r}") from None

    def create_coverage(self, meta: RasterCoverageMeta) -> None:
        with self._lock:
            if meta.name in self._metas:
                raise DuplicateName(f"coverage {meta.name!r} already exists")
            self._metas[meta.name] = meta

    def add_band(self, name: str, band: BandMeta) -> None:
        with self._lock:
            meta = self.get_meta(name)
            if any(b.index == band.index for b in meta.bands):
                raise DuplicateName(f"coverage {name!r} already has band {band.index}")
            self._metas[name] = replace(meta, bands=meta.bands + (band,))

    def register_loaded(self, meta: RasterCoverageMeta) -> None:
        """Install metadata read back from the catalog file (no create checks)."""
        self._metas[meta.name] = meta

    # -- cell access ------------------------------------------------------

    def write_grid(self, name: str, band: int, cells) -> None:
        meta = self.get_meta(name)
        bmeta = meta.band(band)
        arr = np.asarray(cells, dtype=np.float64).ravel()
        if arr.size != meta.width * meta.height:
            raise LengthMismatch(
                f"expected {meta.width * meta.height} cells for "
                f"{meta.width}x{meta.height}, got {arr.size}"
            )
        grid = arr.reshape(meta.height, meta.width)
        if bmeta.pixel_type == "float32":
            # Round now so in-memory reads match what disk will return.
            grid = grid.astype(np.float32).astype(np.float64)
        ts = meta.tile_size
        sentinel = _band_sentinel(bmeta)
        new_tiles: dict[tuple[int, int], np.ndarray] = {}
        for tr in range(meta.tiles_down):
            for tc in range(meta.tiles_across):
                tile = np.full((ts, ts), sentinel, dtype=np.float64)
                block = grid[tr * ts:(tr + 1) * ts, tc * ts:(tc + 1) * ts]
                tile[: block.shape[0], : block.shape[1]] = block
                new_tiles[(tc, tr)] = tile
        with self._lock:
            for (tc, tr), tile in new_tiles.items():
                self._write_tile_file(meta, bmeta, tc, tr, tile)
            self._tiles[(name, band)] = new_tiles

    def read_cell(self, name: str, band: int, col: int, row: int) -> float | None:
        meta = self.get_meta(name)
        bmeta = meta.band(band)
        if not (0 <= col < meta.width and 0 <= row < meta.height):
            raise OutOfRange(f"cell ({col}, {row}) outside {meta.width}x{meta.height}")
        ts = meta.tile_size
        tile = self._band_tiles(meta, band).get((col // ts, row // ts))
        if tile is None:
            return None
        v = float(tile[row % ts, col % ts])
        if math.isnan(v):
            return None
        if bmeta.nodata is not None and v == bmeta.nodata:
            return None
        return v

    def read_grid(self, name: str, band: int) -> np.ndarray:
        """Full band as (height, width) float64 with NaN where NoData."""
        meta = self.get_meta(name)
        bmeta = meta.band(band)
        ts = meta.tile_size
        grid = np.full((meta.height, meta.width), np.nan)
        for (tc, tr), tile in self._band_tiles(meta, band).items():
            h = min(ts, meta.height - tr * ts)
            w = min(ts, meta.width - tc * ts)
            grid[tr * ts:tr * ts + h, tc * ts:tc * ts + w] = tile[:h, :w]
        if bmeta.nodata is not None:
            grid[grid == bmeta.nodata] = np.nan
        return grid

    def value_at(self, name: str, band: int, p: Point) -> float | None:
        """Cell value under a point, or None when outside or NoData."""
        meta = self.get_meta(name)
        if p.srid != meta.srid:
            raise SridMismatch(f"point srid {p.srid} != coverage srid {meta.srid}")
        cell = world_to_cell(meta.geotransform, p, meta.width, meta.height)
        if cell is None:
            return None
        return self.read_cell(name, band, *cell)

    # -- tiles ------------------------------------------------------------

    def tiles_overlapping(self, name: str, band: int, env: Envelope) -> list[tuple[int, int]]:
        """All tile-grid positions whose footprint overlaps ``env``
        (closed-box rule), written or not."""
        meta = self.get_meta(name)
        meta.band(band)
        if env.srid != meta.srid:
            raise SridMismatch(f"envelope srid {env.srid} != coverage srid {meta.srid}")
        out = []
        for tr in range(meta.tiles_down):
            for tc in range(meta.tiles_across):
                fp = meta.tile_footprint(tc, tr)
                if (fp.min_x <= env.max_x and env.min_x <= fp.max_x
                        and fp.min_y <= env.max_y and env.min_y <= fp.max_y):
                    out.append((tc, tr))
        return out

    def written_tiles(self, name: str, band: int) -> list[tuple[int, int]]:
        meta = self.get_meta(name)
        meta.band(band)
        return sorted(self._band_tiles(meta, band).keys())

    def tile_array(self, name: str, band: int, tile_col: int, tile_row: int) -> np.ndarray | None:
        """Raw tile cells (tile_size square, including padding) or None when
        the tile was never written."""
        meta = self.get_meta(name)
        meta.band(band)
        meta.tile_footprint(tile_col, tile_row)  # range check
        return self._band_tiles(meta, band).get((tile_col, tile_row))

    # -- disk layout ------------------------------------------------------

    def _band_dir(self, name: str, band: int) -> Path:
        return self.root / "rasters" / name / str(band)

    def _band_tiles(self, meta: RasterCoverageMeta, band: int):
        key = (meta.name, band)
        with self._lock:
            if key not in self._tiles:
                self._tiles[key] = self._load_band(meta, band)
            return self._tiles[key]

    def _load_band(self, meta: RasterCoverageMeta, band: int):
        bdir = self._band_dir(meta.name, band)
        tiles: dict[tuple[int, int], np.ndarray] = {}
        if not bdir.is_dir():
            return tiles
        for path in bdir.glob("*.tile"):
            tc_s, _, tr_s = path.stem.partition("_")
            tiles[(int(tc_s), int(tr_s))] = _read_tile_file(path, meta.tile_size)
        return tiles

    def _write_tile_file(self, meta, bmeta, tc, tr, tile: np.ndarray) -> None:
        bdir = self._band_dir(meta.name, bmeta.index)
        bdir.mkdir(parents=True, exist_ok=True)
        path = bdir / f"{tc}_{tr}.tile"
        header = struct.pack("<4sHB9x", TILE_MAGIC, meta.tile_size,
                             PIXEL_TYPE_CODES[bmeta.pixel_type])
        samples = tile.astype(_SAMPLE_FMT[bmeta.pixel_type]).tobytes()
        tmp = path.with_suffix(".tile.tmp")
        tmp.write_bytes(header + samples)
        tmp.replace(path)


def _read_tile_file(path: Path, expected_size: int) -> np.ndarray:
    data = path.read_bytes()
    magic, tile_size, code = struct.unpack_from("<4sHB", data)
    if magic != TILE_MAGIC:
        raise InvalidMeta(f"{path}: bad tile magic {magic!r}")
    if tile_size != expected_size:
        raise InvalidMeta(f"{path}: tile size {tile_size} != catalog {expected_size}")
    dtype = _SAMPLE_FMT[PIXEL_TYPE_NAMES[code]]
    samples = np.frombuffer(data, dtype=dtype, offset=16)
    return samples.astype(np.float64).reshape(tile_size, tile_size)
