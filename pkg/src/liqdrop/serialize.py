"""JSON and CSV serialization for geometry, configurations, and reports.

JSON encoding is type-tagged so that geometric objects and point
configurations round-trip exactly; report dataclasses serialize one way
(for summaries) without a decode path.  CSV output uses RFC-4180 quoting.
All emitters are deterministic: keys are sorted and no timestamps or
environment-dependent values are written.
"""

from __future__ import annotations

import csv
import dataclasses
import json
from fractions import Fraction

import numpy as np

from liqdrop.geom import (
    Ball,
    BallUnion,
    Cube,
    Lattice,
    ScaledTranslate,
    Tetrahedron,
    VoxelSet,
)
from liqdrop.jellium import PointConfiguration

__all__ = [
    "to_jsonable",
    "encode",
    "decode",
    "dump_json",
    "load_json",
    "write_csv",
    "read_csv",
    "schedule_rows",
]


def to_jsonable(obj):
    """Convert numbers, arrays, fractions, dataclasses, and containers to
    plain JSON-compatible Python values."""
    if obj is None or isinstance(obj, (bool, int, str)):
        return obj
    if isinstance(obj, float):
        return obj
    if isinstance(obj, Fraction):
        return {"fraction": f"{obj.numerator}/{obj.denominator}"}
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    if isinstance(obj, np.ndarray):
        return [to_jsonable(v) for v in obj.tolist()]
    if isinstance(
        obj,
        (
            Lattice,
            Cube,
            Ball,
            Tetrahedron,
            ScaledTranslate,
            BallUnion,
            VoxelSet,
            PointConfiguration,
        ),
    ):
        return encode(obj)
    if dataclasses.is_dataclass(obj) and not isinstance(obj, type):
        out = {"type": type(obj).__name__}
        for f in dataclasses.fields(obj):
            out[f.name] = to_jsonable(getattr(obj, f.name))
        return out
    if isinstance(obj, dict):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    raise TypeError(f"cannot serialize object of type {type(obj).__name__}")


def encode(obj) -> dict:
    """Type-tagged JSON encoding of geometric objects and configurations."""
    if isinstance(obj, Lattice):
        return {
            "type": "Lattice",
            "kind": obj.kind,
            "density": float(obj.density),
            "basis": np.asarray(obj.basis, dtype=float).tolist(),
        }
    if isinstance(obj, Cube):
        return {
            "type": "Cube",
            "side": float(obj.side),
            "center": np.asarray(obj.center, dtype=float).tolist(),
        }
    if isinstance(obj, Ball):
        return {
            "type": "Ball",
            "radius": float(obj.radius),
            "center": np.asarray(obj.center, dtype=float).tolist(),
        }
    if isinstance(obj, Tetrahedron):
        return {
            "type": "Tetrahedron",
            "vertices": np.asarray(obj.vertices, dtype=float).tolist(),
        }
    if isinstance(obj, ScaledTranslate):
        return {
            "type": "ScaledTranslate",
            "base": encode(obj.base),
            "scale": float(obj.scale),
            "shift": np.asarray(obj.shift, dtype=float).tolist(),
        }
    if isinstance(obj, BallUnion):
        return {
            "type": "BallUnion",
            "centers": np.asarray(obj.centers, dtype=float).tolist(),
            "radii": np.asarray(obj.radii, dtype=float).tolist(),
        }
    if isinstance(obj, VoxelSet):
        occ = np.asarray(obj.occ, dtype=bool)
        idx = np.argwhere(occ)
        return {
            "type": "VoxelSet",
            "h": float(obj.h),
            "origin": np.asarray(obj.origin, dtype=float).tolist(),
            "shape": list(occ.shape),
            "occupied": idx.tolist(),
        }
    if isinstance(obj, PointConfiguration):
        return {
            "type": "PointConfiguration",
            "positions": np.asarray(obj.positions, dtype=float).tolist(),
            "charge": float(obj.charge),
            "container": None if obj.container is None else encode(obj.container),
        }
    raise TypeError(f"cannot encode object of type {type(obj).__name__}")


def decode(data: dict):
    """Inverse of :func:`encode`."""
    if not isinstance(data, dict) or "type" not in data:
        raise ValueError("expected a type-tagged mapping")
    t = data["type"]
    if t == "Lattice":
        return Lattice(
            basis=np.asarray(data["basis"], dtype=float),
            density=float(data["density"]),
            kind=data["kind"],
        )
    if t == "Cube":
        return Cube(side=float(data["side"]), center=tuple(data["center"]))
    if t == "Ball":
        return Ball(radius=float(data["radius"]), center=tuple(data["center"]))
    if t == "Tetrahedron":
        return Tetrahedron(vertices=np.asarray(data["vertices"], dtype=float))
    if t == "ScaledTranslate":
        return ScaledTranslate(
            base=decode(data["base"]),
            scale=float(data["scale"]),
            shift=tuple(data["shift"]),
        )
    if t == "BallUnion":
        return BallUnion(
            centers=np.asarray(data["centers"], dtype=float),
            radii=np.asarray(data["radii"], dtype=float),
        )
    if t == "VoxelSet":
        occ = np.zeros(tuple(data["shape"]), dtype=bool)
        idx = np.asarray(data["occupied"], dtype=int)
        if len(idx):
            occ[idx[:, 0], idx[:, 1], idx[:, 2]] = True
        return VoxelSet(
            h=float(data["h"]),
            origin=np.asarray(data["origin"], dtype=float),
            occ=occ,
        )
    if t == "PointConfiguration":
        container = data.get("container")
        return PointConfiguration(
            positions=np.asarray(data["positions"], dtype=float),
            charge=float(data["charge"]),
            container=None if container is None else decode(container),
        )
    raise ValueError(f"unknown serialized type {t!r}")


def dump_json(obj, path) -> None:
    """Write ``obj`` as deterministic JSON (sorted keys, trailing newline)."""
    payload = to_jsonable(obj)
    with open(path, "w", encoding="utf-8", newline="\n") as fp:
        json.dump(payload, fp, sort_keys=True, indent=2)
        fp.write("\n")


def load_json(path):
    with open(path, "r", encoding="utf-8") as fp:
        return json.load(fp)


def write_csv(path, header, rows) -> None:
    """Write an RFC-4180 CSV file with the given header and rows."""
    with open(path, "w", encoding="utf-8", newline="") as fp:
        w = csv.writer(fp, quoting=csv.QUOTE_MINIMAL, lineterminator="\r\n")
        w.writerow(list(header))
        for row in rows:
            w.writerow(["" if v is None else _cell(v) for v in row])


def _cell(v):
    if isinstance(v, Fraction):
        return f"{v.numerator}/{v.denominator}"
    if isinstance(v, (np.integer,)):
        return int(v)
    if isinstance(v, (np.floating,)):
        return repr(float(v))
    if isinstance(v, float):
        return repr(v)
    return v


def read_csv(path):
    """Read a CSV file back as (header, rows-of-strings)."""
    with open(path, "r", encoding="utf-8", newline="") as fp:
        r = csv.reader(fp)
        rows = list(r)
    if not rows:
        return [], []
    return rows[0], rows[1:]


def schedule_rows(schedule):
    """CSV rows for a ball-packing schedule: one row per generation.

    Columns: generation j, ball radius R_j (exact fraction), number of balls
    of that generation inside the largest ball, leftover volume ratio and
    boundary-area ratio at depth j (exact fractions).
    """
    rows = []
    for j in range(schedule.depth + 1):
        rows.append(
            (
                j,
                schedule.radii[j],
                schedule.counts[j],
                schedule.leftover_ratios[j],
                schedule.perimeter_ratios[j],
            )
        )
    return rows
