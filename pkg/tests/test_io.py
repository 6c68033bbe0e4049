import json
import os

import numpy as np
import pytest

from capdisc import io as cio
from capdisc.lambert import NORTH_POLE, Cap, UnitVec3, cap_preimage, lambert_forward_array
from capdisc.lattice import LatticeConfig, build_point_set
from capdisc.planar import Mat2


def test_planar_csv_roundtrip(tmp_path):
    ps = build_point_set(LatticeConfig(Mat2(1.3, 0.2, -0.4, 0.9), 7, (0.1, 0.3)))
    path = tmp_path / "p.csv"
    path.write_text(cio.planar_csv(ps))
    kind, back = cio.read_points_csv(path)
    assert kind == "planar"
    np.testing.assert_array_equal(back.points, ps.points)
    np.testing.assert_array_equal(back.provenance, ps.provenance)


def test_sphere_csv_roundtrip(tmp_path):
    ps = build_point_set(LatticeConfig(Mat2.identity(), 6))
    xyz = lambert_forward_array(ps.points)
    path = tmp_path / "s.csv"
    path.write_text(cio.sphere_csv(xyz))
    kind, back = cio.read_points_csv(path)
    assert kind == "sphere"
    np.testing.assert_array_equal(back, xyz)


def test_csv_header_and_dot_decimal():
    ps = build_point_set(LatticeConfig(Mat2.identity(), 2))
    lines = cio.planar_csv(ps).splitlines()
    assert lines[0] == "px,py,ix,iy"
    assert lines[1] == "0.25,0.25,0,0"


def test_unknown_header(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("a,b\n1,2\n")
    with pytest.raises(ValueError):
        cio.read_points_csv(path)


def test_polyline_csv():
    pre = cap_preimage(Cap(UnitVec3(1, 0, 0), 0.0))
    lines = cio.polyline_csv(pre).splitlines()
    assert lines[0] == "component,px,py"
    assert {ln.split(",")[0] for ln in lines[1:]} == {"0", "1"}


def test_json_schema_and_order():
    text = cio.to_json({"b": 1, "a": [1.5, 2]})
    body = json.loads(text)
    assert body["schema"] == "capdisc/1"
    assert text.index('"a"') < text.index('"b"')
    with pytest.raises(ValueError):
        cio.to_json({"x": float("nan")})


def test_atomic_write(tmp_path):
    path = tmp_path / "sub" / "out.json"
    cio.atomic_write(path, "first\n")
    cio.atomic_write(path, "second\n")
    assert path.read_text() == "second\n"
    assert os.listdir(path.parent) == ["out.json"]
