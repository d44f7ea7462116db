import math

import numpy as np
import pytest

from geosensordb import Database, Point, TableSchema
from geosensordb.errors import (
    DuplicateKey,
    InvalidSchema,
    TypeMismatch,
    UnknownTable,
)
from geosensordb.model import Envelope
from geosensordb.rtree import RTree
from geosensordb.vectorstore import VectorStore

SCHEMA = TableSchema(
    name="obs", srid=4326, key_column="id",
    columns=(("id", "number"), ("the_geom", "geometry"), ("val", "number")))


def _store_with_points(tmp_path, n, seed=0):
    store = VectorStore(tmp_path)
    store.create_table(SCHEMA)
    rng = np.random.default_rng(seed)
    pts = rng.uniform(0.0, 1000.0, size=(n, 2))
    for i, (x, y) in enumerate(pts):
        store.insert_row("obs", [float(i), Point(float(x), float(y)), float(i) * 0.5])
    return store, pts


def test_schema_validation():
    with pytest.raises(InvalidSchema):
        TableSchema("t", 4326, (("id", "number"),), "id")  # no geometry
    with pytest.raises(InvalidSchema):
        TableSchema("t", 4326,
                    (("g1", "geometry"), ("g2", "geometry"), ("id", "number")),
                    "id")
    with pytest.raises(InvalidSchema):
        TableSchema("t", 4326, (("id", "text"), ("g", "geometry")), "id")
    with pytest.raises(InvalidSchema):
        TableSchema("t", 4326, (("id", "number"), ("g", "geometry")), "missing")


def test_insert_and_key_lookup(tmp_path):
    store = VectorStore(tmp_path)
    store.create_table(SCHEMA)
    key = store.insert_row("obs", [7.0, Point(1, 2), 9.5])
    assert key == 7.0
    assert store.get_by_key("obs", 7.0) == [7.0, Point(1, 2), 9.5]
    assert store.get_by_key("obs", 8.0) is None
    with pytest.raises(DuplicateKey):
        store.insert_row("obs", [7.0, Point(3, 4), 1.0])
    with pytest.raises(TypeMismatch):
        store.insert_row("obs", [8.0, None, 1.0])  # null geometry
    with pytest.raises(TypeMismatch):
        store.insert_row("obs", [9.0, Point(0, 0), math.nan])
    with pytest.raises(UnknownTable):
        store.insert_row("nope", [1.0, Point(0, 0), 0.0])


def test_query_bbox_equals_linear_scan_10k(tmp_path):
    store, pts = _store_with_points(tmp_path, 10_000, seed=3)
    rng = np.random.default_rng(4)
    for _ in range(100):
        xs = np.sort(rng.uniform(0, 1000, 2))
        ys = np.sort(rng.uniform(0, 1000, 2))
        env = Envelope(xs[0], ys[0], xs[1], ys[1], 4326)
        got = sorted(r[0] for r in store.query_bbox("obs", env))
        want = sorted(
            float(i) for i, (x, y) in enumerate(pts)
            if env.min_x <= x <= env.max_x and env.min_y <= y <= env.max_y)
        assert got == want


def test_index_visits_few_leaves_on_small_envelopes(tmp_path):
    store, _ = _store_with_points(tmp_path, 10_000, seed=5)
    index = store.index_of("obs")
    leaves = index.leaf_count()
    rng = np.random.default_rng(6)
    for _ in range(50):
        # Sub-1% of the domain area: 50x50 of 1000x1000.
        x = rng.uniform(0, 950)
        y = rng.uniform(0, 950)
        store.query_bbox("obs", Envelope(x, y, x + 50, y + 50, 4326))
        assert index.last_leaf_visits < 0.20 * leaves


def test_rtree_structure_valid(tmp_path):
    store, _ = _store_with_points(tmp_path, 2_000, seed=7)
    index = store.index_of("obs")
    assert isinstance(index, RTree)
    index.validate()
    assert index.leaf_count() >= 2000 / index.fanout


def test_bbox_boundary_is_closed(tmp_path):
    store = VectorStore(tmp_path)
    store.create_table(SCHEMA)
    store.insert_row("obs", [1.0, Point(10, 10), 0.0])
    assert store.query_bbox("obs", Envelope(10, 10, 20, 20, 4326))
    assert store.query_bbox("obs", Envelope(0, 0, 10, 10, 4326))
    assert not store.query_bbox("obs", Envelope(10.0001, 10, 20, 20, 4326))


def test_rows_persist_and_index_rebuilds(tmp_path):
    root = tmp_path / "db"
    db = Database.init(root)
    db.create_table(SCHEMA)
    for i in range(50):
        db.vectors.insert_row("obs", [float(i), Point(i, i), float(i)])

    db2 = Database.open(root)
    assert db2.vectors.row_count("obs") == 50
    assert db2.vectors.get_by_key("obs", 17.0) == [17.0, Point(17, 17), 17.0]
    env = Envelope(10, 10, 20, 20, 4326)
    assert (sorted(r[0] for r in db2.vectors.query_bbox("obs", env))
            == [float(i) for i in range(10, 21)])
    db2.vectors.index_of("obs").validate()


def test_null_values_roundtrip(tmp_path):
    root = tmp_path / "db"
    db = Database.init(root)
    db.create_table(SCHEMA)
    db.vectors.insert_row("obs", [1.0, Point(0, 0), None])
    db2 = Database.open(root)
    assert db2.vectors.get_by_key("obs", 1.0) == [1.0, Point(0, 0), None]
