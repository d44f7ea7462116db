"""Schema-less GML-style XML for point feature results."""

from __future__ import annotations

import xml.etree.ElementTree as ET
from datetime import datetime

from ..errors import UnsupportedGeometry
from ..model import Circle, Point, format_number, format_timestamp


def encode_gml(rows, columns) -> bytes:
    """One featureMember per row; ``columns`` names each value, the first
    Point value becomes the feature geometry and the rest child elements."""
    root = ET.Element("FeatureCollection")
    for row in rows:
        member = ET.SubElement(root, "featureMember")
        feature = ET.SubElement(member, "Feature")
        geom_done = False
        for name, value in zip(columns, row):
            if isinstance(value, Circle):
                raise UnsupportedGeometry(
                    "circles have no GML rendering; deliver buffered analyses as values")
            if isinstance(value, Point) and not geom_done:
                geom = ET.SubElement(feature, "geometry")
                point = ET.SubElement(geom, "Point")
                point.set("srsName", f"EPSG:{value.srid}")
                pos = ET.SubElement(point, "pos")
                pos.text = f"{format_number(value.x)} {format_number(value.y)}"
                geom_done = True
                continue
            el = ET.SubElement(feature, name)
            if value is None:
                continue
            if isinstance(value, bool):
                el.text = "true" if value else "false"
            elif isinstance(value, (int, float)):
                el.text = format_number(value)
            elif isinstance(value, datetime):
                el.text = format_timestamp(value)
            elif isinstance(value, Point):
                el.text = f"{format_number(value.x)} {format_number(value.y)}"
            else:
                el.text = str(value)
    return ET.tostring(root, encoding="utf-8", xml_declaration=True)
