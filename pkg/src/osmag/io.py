"""Reading and writing map documents as OSM XML.

Writing is canonical: nodes and ways sorted by id, tags sorted by key,
attributes in a fixed order, coordinates with 7 decimal places, UTF-8
bytes with one element per line. Canonical output is a fixed point of
parse-then-serialize, so serializing a reparsed document reproduces the
exact bytes.

Elements this package does not model (relations, bounds, plain ways
without the map tags) are retained verbatim and re-emitted, so feeding a
file through the toolkit never drops third-party data.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from xml.etree import ElementTree as ET

from .errors import (
    InvalidAttributeError,
    MissingAttributeError,
    NonNumericCoordinateError,
    XmlSyntaxError,
)


@dataclass
class RawNode:
    id: int
    lat: float
    lon: float
    tags: dict[str, str] = field(default_factory=dict)
    attrs: dict[str, str] = field(default_factory=dict)


@dataclass
class RawWay:
    id: int
    refs: tuple[int, ...] = ()
    tags: dict[str, str] = field(default_factory=dict)
    attrs: dict[str, str] = field(default_factory=dict)


@dataclass
class RawElement:
    """Opaque pass-through for elements the model does not interpret."""

    tag: str
    attrs: dict[str, str] = field(default_factory=dict)
    children: tuple["RawElement", ...] = ()


@dataclass
class OsmDocument:
    nodes: list[RawNode] = field(default_factory=list)
    ways: list[RawWay] = field(default_factory=list)
    unknown_elements: list[RawElement] = field(default_factory=list)
    osm_attrs: dict[str, str] = field(default_factory=dict)


def _parse_int(value: str, element: str, attr: str) -> int:
    try:
        return int(value)
    except ValueError:
        raise InvalidAttributeError(f"{element} {attr}={value!r} is not an integer") from None


def _parse_coord(value: str, element: str, attr: str) -> float:
    try:
        return float(value)
    except ValueError:
        raise NonNumericCoordinateError(f"{element} {attr}={value!r} is not numeric") from None


def _require(elem: ET.Element, attr: str, kind: str) -> str:
    value = elem.get(attr)
    if value is None:
        raise MissingAttributeError(f"{kind} element lacks required attribute {attr!r}")
    return value


def _collect_tags(elem: ET.Element, kind: str) -> dict[str, str]:
    tags: dict[str, str] = {}
    for tag in elem.findall("tag"):
        k = _require(tag, "k", f"{kind} tag")
        v = _require(tag, "v", f"{kind} tag")
        tags[k] = v
    return tags


def _to_raw_element(elem: ET.Element) -> RawElement:
    children = tuple(_to_raw_element(child) for child in elem)
    return RawElement(elem.tag, dict(elem.attrib), children)


def parse_osm(data: bytes | str) -> OsmDocument:
    """Parse OSM XML bytes (or text) into a document.

    Raises XmlSyntaxError with line/column on malformed XML,
    MissingAttributeError for absent id/lat/lon/ref/k/v, and
    NonNumericCoordinateError for unparseable coordinates.
    """
    if isinstance(data, str):
        data = data.encode("utf-8")
    try:
        root = ET.fromstring(data)
    except ET.ParseError as exc:
        line, column = getattr(exc, "position", (0, 0))
        raise XmlSyntaxError(str(exc), line=line, column=column) from None
    if root.tag != "osm":
        raise XmlSyntaxError(f"expected <osm> document, found <{root.tag}>")

    doc = OsmDocument(osm_attrs=dict(root.attrib))
    for elem in root:
        if elem.tag == "node":
            node_id = _parse_int(_require(elem, "id", "node"), "node", "id")
            lat = _parse_coord(_require(elem, "lat", "node"), "node", "lat")
            lon = _parse_coord(_require(elem, "lon", "node"), "node", "lon")
            attrs = {k: v for k, v in elem.attrib.items() if k not in ("id", "lat", "lon")}
            doc.nodes.append(RawNode(node_id, lat, lon, _collect_tags(elem, "node"), attrs))
        elif elem.tag == "way":
            way_id = _parse_int(_require(elem, "id", "way"), "way", "id")
            refs = tuple(_parse_int(_require(nd, "ref", "nd"), "nd", "ref")
                         for nd in elem.findall("nd"))
            attrs = {k: v for k, v in elem.attrib.items() if k != "id"}
            doc.ways.append(RawWay(way_id, refs, _collect_tags(elem, "way"), attrs))
        else:
            doc.unknown_elements.append(_to_raw_element(elem))
    return doc


# --- canonical writing ------------------------------------------------------

_ESCAPES = {"&": "&amp;", "<": "&lt;", ">": "&gt;", '"': "&quot;",
            "\n": "&#10;", "\r": "&#13;", "\t": "&#9;"}


def _escape(value: str) -> str:
    return "".join(_ESCAPES.get(ch, ch) for ch in value)


def _fmt_coord(value: float) -> str:
    text = f"{value:.7f}"
    return "0.0000000" if text == "-0.0000000" else text


def _fmt_attrs(pairs) -> str:
    return " ".join(f'{k}="{_escape(str(v))}"' for k, v in pairs)


def _node_lines(node: RawNode, out: list[str]) -> None:
    extras = dict(node.attrs)
    extras.setdefault("version", "1")
    pairs = [("id", node.id), ("lat", _fmt_coord(node.lat)), ("lon", _fmt_coord(node.lon))]
    pairs.extend(sorted(extras.items()))
    if node.tags:
        out.append(f"  <node {_fmt_attrs(pairs)}>")
        for k in sorted(node.tags):
            out.append(f'    <tag k="{_escape(k)}" v="{_escape(node.tags[k])}"/>')
        out.append("  </node>")
    else:
        out.append(f"  <node {_fmt_attrs(pairs)}/>")


def _way_lines(way: RawWay, out: list[str]) -> None:
    extras = dict(way.attrs)
    extras.setdefault("version", "1")
    pairs = [("id", way.id)] + sorted(extras.items())
    if way.refs or way.tags:
        out.append(f"  <way {_fmt_attrs(pairs)}>")
        for ref in way.refs:
            out.append(f'    <nd ref="{ref}"/>')
        for k in sorted(way.tags):
            out.append(f'    <tag k="{_escape(k)}" v="{_escape(way.tags[k])}"/>')
        out.append("  </way>")
    else:
        out.append(f"  <way {_fmt_attrs(pairs)}/>")


def _raw_element_lines(elem: RawElement, out: list[str], depth: int) -> None:
    pad = "  " * depth
    attrs = _fmt_attrs(sorted(elem.attrs.items()))
    head = f"{pad}<{elem.tag} {attrs}" if attrs else f"{pad}<{elem.tag}"
    if elem.children:
        out.append(head + ">")
        for child in elem.children:
            _raw_element_lines(child, out, depth + 1)
        out.append(f"{pad}</{elem.tag}>")
    else:
        out.append(head + "/>")


def serialize_document(doc: OsmDocument) -> bytes:
    """Write a document as canonical OSM XML bytes."""
    out: list[str] = ["<?xml version='1.0' encoding='UTF-8'?>"]
    osm_attrs = dict(doc.osm_attrs)
    osm_attrs.setdefault("version", "0.6")
    out.append(f"<osm {_fmt_attrs(sorted(osm_attrs.items()))}>")
    for node in sorted(doc.nodes, key=lambda n: n.id):
        _node_lines(node, out)
    for way in sorted(doc.ways, key=lambda w: w.id):
        _way_lines(way, out)
    for elem in doc.unknown_elements:
        _raw_element_lines(elem, out, 1)
    out.append("</osm>")
    return ("\n".join(out) + "\n").encode("utf-8")


def serialize(model) -> bytes:
    """Write a resolved map model as canonical OSM XML bytes."""
    from .model import document_from_model  # local import to avoid a cycle

    return serialize_document(document_from_model(model))
