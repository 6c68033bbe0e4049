"""CSV / JSON serialisation for point sets, polylines and reports."""

from __future__ import annotations

import csv
import io
import json
import os
import tempfile
from pathlib import Path
from typing import Iterable, Union

import numpy as np

from .lambert import CapPreimage
from .lattice import PlanarPointSet

SCHEMA = "capdisc/1"
PLANAR_HEADER = ["px", "py", "ix", "iy"]
SPHERE_HEADER = ["x", "y", "z"]
POLYLINE_HEADER = ["component", "px", "py"]


def _fmt(x: float) -> str:
    # repr is the shortest string that round-trips; never locale dependent
    return repr(float(x))


def planar_csv(ps: PlanarPointSet) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(PLANAR_HEADER)
    for (x, y), (i, j) in zip(ps.points, ps.provenance):
        w.writerow([_fmt(x), _fmt(y), int(i), int(j)])
    return buf.getvalue()


def sphere_csv(points: np.ndarray) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(SPHERE_HEADER)
    for p in np.asarray(points):
        w.writerow([_fmt(c) for c in p])
    return buf.getvalue()


def polyline_csv(pre: CapPreimage) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(POLYLINE_HEADER)
    for k, comp in enumerate(pre.components):
        for x, y in comp.vertices:
            w.writerow([k, _fmt(x), _fmt(y)])
    return buf.getvalue()


def read_points_csv(path: Union[str, Path]):
    """Read a planar (``px,py,ix,iy``) or spherical (``x,y,z``) point CSV.

    Returns ``("planar", PlanarPointSet)`` or ``("sphere", ndarray)``.
    """
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise ValueError(f"{path}: empty file")
    header = [h.strip() for h in rows[0]]
    body = [r for r in rows[1:] if r]
    if header == PLANAR_HEADER:
        pts = np.array([[float(r[0]), float(r[1])] for r in body]).reshape(-1, 2)
        prov = np.array([[int(r[2]), int(r[3])] for r in body], dtype=np.int64).reshape(-1, 2)
        return "planar", PlanarPointSet(pts, prov)
    if header == SPHERE_HEADER:
        return "sphere", np.array([[float(c) for c in r] for r in body]).reshape(-1, 3)
    raise ValueError(
        f"{path}: unrecognised header {header}; expected {PLANAR_HEADER} or {SPHERE_HEADER}"
    )


def to_json(payload: dict) -> str:
    body = {"schema": SCHEMA}
    body.update(payload)
    return json.dumps(body, sort_keys=True, indent=2, allow_nan=False) + "\n"


def atomic_write(path: Union[str, Path], text: str) -> None:
    """Write via a temporary file in the same directory, then rename."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
