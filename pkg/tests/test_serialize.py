"""Deterministic JSON/CSV serialization of results and geometry."""

import json
from fractions import Fraction

import numpy as np
import pytest

from liqdrop.appendixlab import swiss_cheese
from liqdrop.geom import (
    Ball,
    BallUnion,
    Cube,
    ScaledTranslate,
    Tetrahedron,
    VoxelSet,
    make_lattice,
    regular_tetrahedron,
)
from liqdrop.jellium import PointConfiguration
from liqdrop.serialize import (
    decode,
    dump_json,
    encode,
    load_json,
    read_csv,
    schedule_rows,
    to_jsonable,
    write_csv,
)


# ---------------------------------------------------------------------------
# geometry round trips
# ---------------------------------------------------------------------------


def _roundtrip(obj):
    data = json.loads(json.dumps(encode(obj)))
    return decode(data)


def test_lattice_roundtrip():
    lat = make_lattice("bcc", density=2.0)
    back = _roundtrip(lat)
    assert back.kind == "bcc"
    assert back.density == pytest.approx(2.0, rel=1e-15)
    np.testing.assert_allclose(back.basis, lat.basis, rtol=1e-15)


def test_domain_roundtrips():
    for obj in (
        Cube(side=2.5, center=(0.5, -1.0, 0.0)),
        Ball(radius=1.2, center=(0.0, 0.1, -0.2)),
        regular_tetrahedron(2.0),
        ScaledTranslate(
            base=Ball(radius=1.0, center=(0.0, 0.0, 0.0)),
            scale=2.0,
            shift=(1.0, 0.0, -1.0),
        ),
    ):
        back = _roundtrip(obj)
        assert type(back) is type(obj)
        assert back.volume == pytest.approx(obj.volume, rel=1e-14)
        assert back.diameter == pytest.approx(obj.diameter, rel=1e-14)


def test_ball_union_and_points_roundtrip():
    bu = BallUnion(
        centers=np.array([[0.0, 0.0, 0.0], [3.0, 0.0, 0.0]]),
        radii=np.array([1.0, 0.5]),
    )
    back = _roundtrip(bu)
    np.testing.assert_allclose(back.centers, bu.centers)
    np.testing.assert_allclose(back.radii, bu.radii)

    cfg = PointConfiguration(
        positions=np.array([[0.0, 1.0, 2.0]]),
        charge=2.5,
        container=Cube(side=4.0),
    )
    back = _roundtrip(cfg)
    assert back.charge == 2.5
    assert isinstance(back.container, Cube)
    np.testing.assert_allclose(back.positions, cfg.positions)


def test_voxelset_roundtrip_is_sparse():
    occ = np.zeros((4, 5, 6), dtype=bool)
    occ[1, 2, 3] = occ[0, 0, 0] = True
    vs = VoxelSet(h=0.25, origin=(1.0, -1.0, 0.0), occ=occ)
    data = encode(vs)
    assert data["occupied"] == [[0, 0, 0], [1, 2, 3]]
    assert data["shape"] == [4, 5, 6]
    back = decode(data)
    assert back.measure == pytest.approx(vs.measure, rel=1e-15)
    assert np.array_equal(back.occ, vs.occ)


def test_decode_rejects_unknown_payloads():
    with pytest.raises(ValueError):
        decode({"no": "type"})
    with pytest.raises(ValueError):
        decode({"type": "Dodecahedron"})
    with pytest.raises(TypeError):
        encode(object())


# ---------------------------------------------------------------------------
# generic JSON conversion
# ---------------------------------------------------------------------------


def test_to_jsonable_handles_numpy_and_fractions():
    out = to_jsonable(
        {
            "a": np.float64(1.5),
            "b": np.int32(7),
            "c": np.bool_(True),
            "d": Fraction(7, 3),
            "e": np.array([1.0, 2.0]),
            "f": [Fraction(1, 2), None],
        }
    )
    assert out == {
        "a": 1.5,
        "b": 7,
        "c": True,
        "d": {"fraction": "7/3"},
        "e": [1.0, 2.0],
        "f": [{"fraction": "1/2"}, None],
    }
    with pytest.raises(TypeError):
        to_jsonable(object())


def test_dump_json_is_deterministic(tmp_path):
    p1, p2 = tmp_path / "a.json", tmp_path / "b.json"
    payload = {"z": 1, "a": [2.5, Fraction(1, 3)], "m": {"y": 2, "x": 1}}
    dump_json(payload, p1)
    dump_json(payload, p2)
    b1, b2 = p1.read_bytes(), p2.read_bytes()
    assert b1 == b2
    assert b1.endswith(b"\n")
    loaded = load_json(p1)
    assert list(loaded.keys()) == sorted(loaded.keys())


# ---------------------------------------------------------------------------
# CSV
# ---------------------------------------------------------------------------


def test_write_csv_rfc4180(tmp_path):
    p = tmp_path / "t.csv"
    write_csv(
        p,
        ["name", "value"],
        [["plain", 1.5], ["with,comma", Fraction(2, 7)], ["empty", None]],
    )
    raw = p.read_bytes()
    assert b"\r\n" in raw
    assert b'"with,comma"' in raw
    header, rows = read_csv(p)
    assert header == ["name", "value"]
    assert rows == [["plain", "1.5"], ["with,comma", "2/7"], ["empty", ""]]


def test_csv_floats_roundtrip_exactly(tmp_path):
    p = tmp_path / "f.csv"
    x = -1.4442307515269701
    write_csv(p, ["v"], [[x]])
    _, rows = read_csv(p)
    assert float(rows[0][0]) == x


def test_schedule_rows_are_exact_fractions(tmp_path):
    s = swiss_cheese(2)
    rows = schedule_rows(s)
    assert len(rows) == 3
    assert rows[0][0] == 0 and rows[1][0] == 1
    assert rows[1][1] == Fraction(53, 2)  # 27 - 1/2
    assert rows[1][2] == 729
    p = tmp_path / "s.csv"
    write_csv(p, ["j", "radius", "count", "leftover", "perimeter"], rows)
    _, got = read_csv(p)
    assert got[1][1] == "53/2"
    assert got[1][2] == "729"
