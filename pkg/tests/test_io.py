"""XML parsing and canonical writing."""

import pytest

from conftest import fixture_bytes
from osmag.errors import (
    MissingAttributeError, NonNumericCoordinateError, XmlSyntaxError,
)
from osmag.io import (
    OsmDocument, RawNode, RawWay, parse_osm, serialize_document,
)


def test_empty_document():
    doc = parse_osm("<osm/>")
    assert len(doc.nodes) == 0
    assert len(doc.ways) == 0
    assert doc.unknown_elements == []


def test_malformed_xml_reports_position():
    with pytest.raises(XmlSyntaxError) as ei:
        parse_osm("<osm><node id='1' lat='0' lon='0'</osm>")
    assert ei.value.code == "XML_SYNTAX"
    assert ei.value.line >= 1


def test_wrong_root_element():
    with pytest.raises(XmlSyntaxError):
        parse_osm("<xml><osm/></xml>")


def test_missing_required_attributes():
    with pytest.raises(MissingAttributeError):
        parse_osm('<osm><node id="1" lat="0"/></osm>')
    with pytest.raises(MissingAttributeError):
        parse_osm('<osm><way id="1"><nd/></way></osm>')
    with pytest.raises(MissingAttributeError):
        parse_osm('<osm><node id="1" lat="0" lon="0"><tag k="a"/></node></osm>')


def test_non_numeric_coordinates():
    with pytest.raises(NonNumericCoordinateError):
        parse_osm('<osm><node id="1" lat="north" lon="0"/></osm>')


def test_node_way_and_attrs_survive():
    doc = parse_osm(
        '<osm version="0.6" generator="x">'
        '<node id="7" lat="31.5" lon="121.25" version="3" action="modify">'
        '<tag k="amenity" v="bench"/></node>'
        '<way id="9" version="1"><nd ref="7"/><tag k="highway" v="footway"/>'
        '</way></osm>')
    assert doc.osm_attrs == {"version": "0.6", "generator": "x"}
    node = doc.nodes[0]
    assert (node.id, node.lat, node.lon) == (7, 31.5, 121.25)
    assert node.tags == {"amenity": "bench"}
    assert node.attrs == {"version": "3", "action": "modify"}
    way = doc.ways[0]
    assert way.refs == (7,)
    assert way.tags == {"highway": "footway"}
    assert way.attrs == {"version": "1"}


def test_tag_value_escaping_round_trip():
    nasty = 'a & "b" <c> \'d\'\nsecond\tline'
    doc = OsmDocument(
        nodes=[RawNode(1, 0.0, 0.0, {"name": nasty})],
        ways=[RawWay(2, (1,), {"name": nasty})],
        osm_attrs={"version": "0.6"})
    out = serialize_document(doc)
    back = parse_osm(out)
    assert back.nodes[0].tags["name"] == nasty
    assert back.ways[0].tags["name"] == nasty
    assert serialize_document(back) == out


def test_relations_pass_through_byte_exact():
    data = fixture_bytes("two_trees")
    doc = parse_osm(data)
    assert any(e.tag == "relation" for e in doc.unknown_elements)
    out = serialize_document(doc)
    assert b"<relation" in out
    assert parse_osm(out).unknown_elements == doc.unknown_elements


def test_serialization_is_deterministic():
    doc = parse_osm(fixture_bytes("floor_small"))
    assert serialize_document(doc) == serialize_document(doc)


def test_coordinates_keep_seven_decimals():
    doc = OsmDocument(nodes=[RawNode(1, 31.1234567, 121.7654321)],
                      osm_attrs={"version": "0.6"})
    out = serialize_document(doc)
    assert b'lat="31.1234567"' in out
    assert b'lon="121.7654321"' in out
    back = parse_osm(out)
    assert back.nodes[0].lat == 31.1234567
    assert back.nodes[0].lon == 121.7654321
