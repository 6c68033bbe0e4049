"""Command-line front end.

Every subcommand builds (or reads) a point set, runs one analysis and writes
a CSV or JSON artifact.  Options may also come from a JSON file passed with
``--config``; flags given on the command line win over the file.

Exit status: 0 success, 2 invalid configuration, 3 numerical failure
(singular matrix and the like).  Messages go to standard error.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from dataclasses import dataclass, fields
from typing import List, Optional, Sequence, Tuple

import numpy as np

from . import io as cio
from .bounds import CLQ_SOURCES, bound_report, certified_clq, theorem_bound
from .discrepancy import (
    EXACT_LIMIT,
    SpherePointSet,
    empty_polar_cap,
    estimate_discrepancy,
    exact_discrepancy,
    polar_certificate,
    separation_distance,
)
from .errors import CapdiscError, DegenerateCap, InvalidConfig, RankError, SingularMatrix
from .intersection import curve_report, intersection_report
from .lambert import Cap, UnitVec3, cap_preimage, clq_estimate, lambert_forward_array
from .lattice import LatticeConfig, build_point_set, modified_point_set
from .planar import Mat2, Polyline, archimedean_spiral, inverse, polyline_length, segment, transform_polyline

COMMANDS = ("generate", "discrepancy", "bounds", "intersect", "clq", "separation", "paper-suite")
PERTURBATION_ALIASES = {
    "center": "cell-center",
    "cell-center": "cell-center",
    "lattice": "lattice-point",
    "lattice-point": "lattice-point",
    "random": "uniform-random",
    "uniform-random": "uniform-random",
    "custom": "custom-offset",
    "custom-offset": "custom-offset",
}
CURVES = ("segment", "circle", "spiral", "cap", "polyline")
DEFAULT_TRIALS = 10_000
PHI = (1.0 + math.sqrt(5.0)) / 2.0

_LATTICE = ("matrix", "K", "offset", "perturbation", "seed", "offset_u", "modified")
# fields echoed into each command's JSON output
ECHO = {
    "generate": _LATTICE + ("sphere",),
    "discrepancy": _LATTICE + ("mode", "trials", "limit", "input"),
    "bounds": _LATTICE + ("clq", "clq_source"),
    "intersect": ("matrix", "K", "offset", "curve", "start", "end", "center", "radius",
                  "half_turns", "scale", "cap", "samples", "input", "n", "m", "closed"),
    "clq": ("matrix", "centers", "heights", "samples", "cap"),
    "separation": _LATTICE + ("input",),
    "paper-suite": ("ks", "trials", "seed"),
}

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERIC = 3


@dataclass
class RunConfig:
    command: str
    matrix: Tuple[float, float, float, float] = (1.0, 0.0, 0.0, 1.0)
    K: Optional[int] = None
    offset: Tuple[float, float] = (0.0, 0.0)
    perturbation: str = "cell-center"
    seed: Optional[int] = None
    offset_u: Optional[Tuple[float, float]] = None
    modified: bool = False
    mode: Optional[str] = None
    trials: Optional[int] = None
    limit: int = EXACT_LIMIT
    output: Optional[str] = None
    format: Optional[str] = None
    input: Optional[str] = None
    sphere: bool = False
    # intersect
    curve: str = "segment"
    start: Tuple[float, float] = (0.0, 0.0)
    end: Tuple[float, float] = (1.0, 1.0)
    center: Tuple[float, float] = (0.5, 0.5)
    radius: float = 0.3
    half_turns: int = 3
    scale: float = 0.02
    cap: Optional[Tuple[float, float, float, float]] = None
    n: Optional[int] = None
    m: int = 0
    closed: bool = False
    # clq / bounds
    centers: int = 16
    heights: int = 16
    samples: int = 64
    clq: Optional[float] = None
    clq_source: Optional[str] = None
    # paper-suite
    ks: Tuple[int, ...] = (8, 10, 12, 50)

    def validate(self) -> None:
        if self.command not in COMMANDS:
            raise InvalidConfig(f"unknown command {self.command!r}; choose from {', '.join(COMMANDS)}")
        if len(self.matrix) != 4:
            raise InvalidConfig("--matrix takes exactly four numbers a b c d (row-major)")
        if self.perturbation not in PERTURBATION_ALIASES:
            raise InvalidConfig(
                f"unknown perturbation {self.perturbation!r}; choose from {', '.join(PERTURBATION_ALIASES)}"
            )
        self.perturbation = PERTURBATION_ALIASES[self.perturbation]
        if self.perturbation == "uniform-random" and self.seed is None:
            raise InvalidConfig("--perturbation random needs --seed")
        if self.perturbation == "custom-offset" and self.offset_u is None:
            raise InvalidConfig("--perturbation custom needs --offset-u U1 U2")
        if self.mode not in (None, "exact", "estimate"):
            raise InvalidConfig(f"--mode must be exact or estimate, got {self.mode!r}")
        if self.trials is not None:
            if self.mode == "exact":
                raise InvalidConfig("--trials only applies to --mode estimate")
            if self.trials < 1:
                raise InvalidConfig("--trials must be >= 1")
        if self.limit < 1:
            raise InvalidConfig("--limit must be >= 1")
        if self.format not in (None, "csv", "json"):
            raise InvalidConfig(f"--format must be csv or json, got {self.format!r}")
        if self.format == "csv" and self.command not in ("generate", "clq"):
            raise InvalidConfig(f"{self.command} writes JSON only; drop --format csv")
        if self.format == "csv" and self.command == "clq" and self.cap is None:
            raise InvalidConfig("clq writes CSV only when exporting a preimage with --cap")
        needs_lattice = self.command in ("generate", "bounds", "intersect", "clq") or (
            self.command in ("discrepancy", "separation") and self.input is None
        )
        if self.command == "clq" and self.K is None:
            needs_lattice = False
        if self.command == "intersect" and self.curve == "polyline" and self.input is None:
            raise InvalidConfig("--curve polyline needs --input POLYLINE.csv")
        if needs_lattice and self.K is None:
            raise InvalidConfig(f"{self.command} needs --k")
        if self.K is not None and self.K < 1:
            raise InvalidConfig("--k must be a positive integer")
        if self.command == "intersect":
            if self.curve not in CURVES:
                raise InvalidConfig(f"--curve must be one of {', '.join(CURVES)}")
            if self.curve == "cap" and self.cap is None:
                raise InvalidConfig("--curve cap needs --cap WX WY WZ T")
            if self.curve == "polyline" and self.n is None:
                raise InvalidConfig("--curve polyline needs the declared convexity --n")
        if self.clq_source is not None and self.clq_source not in CLQ_SOURCES:
            raise InvalidConfig(f"--clq-source must be one of {', '.join(CLQ_SOURCES)}")
        if self.clq is not None and self.clq <= 0:
            raise InvalidConfig("--clq must be positive")

    @property
    def Q(self) -> Mat2:
        return Mat2(*map(float, self.matrix))

    def lattice(self) -> LatticeConfig:
        return LatticeConfig(self.Q, int(self.K), tuple(self.offset), self.perturbation,
                             self.seed, None if self.offset_u is None else tuple(self.offset_u))

    def to_dict(self) -> dict:
        out = {"command": self.command}
        for name in ECHO[self.command]:
            val = getattr(self, name)
            out[name] = list(val) if isinstance(val, tuple) else val
        return out


# ----------------------------------------------------------------- parsing

def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="JSON file with option values (flags override it)")
    p.add_argument("--matrix", nargs=4, type=float, metavar=("A", "B", "C", "D"),
                   help="lattice matrix, row-major (default identity)")
    p.add_argument("--k", dest="K", type=int, help="scale K")
    p.add_argument("--offset", nargs=2, type=float, metavar=("V1", "V2"), help="tiling offset v")
    p.add_argument("--perturbation", help="center | lattice | random | custom")
    p.add_argument("--seed", type=int)
    p.add_argument("--offset-u", dest="offset_u", nargs=2, type=float, metavar=("U1", "U2"),
                   help="in-cell position for --perturbation custom")
    p.add_argument("--modified", action="store_true", default=None,
                   help="use the count-corrected point set")
    p.add_argument("--output", "-o", help="write here (atomically) instead of stdout")
    p.add_argument("--format", help="csv | json")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="capdisc", description=__doc__.split("\n")[0])
    sub = parser.add_subparsers(dest="command")

    p = sub.add_parser("generate", help="build a planar (or spherical) point set")
    _common(p)
    p.add_argument("--sphere", action="store_true", default=None, help="write x,y,z after the Lambert map")

    p = sub.add_parser("discrepancy", help="exact or estimated cap discrepancy")
    _common(p)
    p.add_argument("--mode", help="exact | estimate (default: exact up to --limit points)")
    p.add_argument("--trials", type=int, help=f"random centres in estimate mode (default {DEFAULT_TRIALS})")
    p.add_argument("--limit", type=int, help=f"largest N for exact mode (default {EXACT_LIMIT})")
    p.add_argument("--input", help="point CSV (px,py,ix,iy or x,y,z) instead of a lattice")

    p = sub.add_parser("bounds", help="evaluate the closed-form bounds")
    _common(p)
    p.add_argument("--clq", type=float, help="override the cap preimage constant")
    p.add_argument("--clq-source", dest="clq_source", help=" | ".join(CLQ_SOURCES))

    p = sub.add_parser("intersect", help="count tiling cells met by a curve")
    _common(p)
    p.add_argument("--curve", help=" | ".join(CURVES))
    p.add_argument("--from", dest="start", nargs=2, type=float, metavar=("X", "Y"))
    p.add_argument("--to", dest="end", nargs=2, type=float, metavar=("X", "Y"))
    p.add_argument("--center", nargs=2, type=float, metavar=("X", "Y"))
    p.add_argument("--radius", type=float)
    p.add_argument("--half-turns", dest="half_turns", type=int)
    p.add_argument("--scale", type=float, help="spiral scale")
    p.add_argument("--cap", nargs=4, type=float, metavar=("WX", "WY", "WZ", "T"))
    p.add_argument("--input", help="polyline CSV (component,px,py)")
    p.add_argument("--n", type=int, help="declared convexity of each polyline component")
    p.add_argument("--m", type=int, help="declared self-intersections")
    p.add_argument("--closed", action="store_true", default=None)

    p = sub.add_parser("clq", help="estimate the cap preimage constant or export a preimage")
    _common(p)
    p.add_argument("--centers", type=int)
    p.add_argument("--heights", type=int)
    p.add_argument("--samples", type=int)
    p.add_argument("--cap", nargs=4, type=float, metavar=("WX", "WY", "WZ", "T"),
                   help="export the preimage of this cap instead")

    p = sub.add_parser("separation", help="minimum distance between points")
    _common(p)
    p.add_argument("--input", help="point CSV instead of a lattice")

    p = sub.add_parser("paper-suite", help="standard and golden-ratio lattice presets")
    _common(p)
    p.add_argument("--trials", type=int)
    p.add_argument("--ks", nargs="+", type=int, help="scales for the identity lattice")
    return parser


def _load_config(path: str) -> dict:
    try:
        with open(path) as fh:
            raw = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise InvalidConfig(f"cannot read config {path}: {exc}") from None
    if not isinstance(raw, dict):
        raise InvalidConfig(f"config {path} must hold a JSON object")
    known = {f.name for f in fields(RunConfig)}
    out = {}
    for key, val in raw.items():
        name = key.replace("-", "_")
        if name == "k":
            name = "K"
        if name == "schema":
            continue
        if name not in known:
            raise InvalidConfig(f"config {path}: unknown key {key!r}")
        out[name] = tuple(val) if isinstance(val, list) else val
    return out


def parse_config(argv: Sequence[str]) -> RunConfig:
    argv = list(argv)
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("--config")
    known, _ = pre.parse_known_args(argv)
    file_values = _load_config(known.config) if known.config else {}
    if not any(a in COMMANDS for a in argv):
        if "command" not in file_values:
            raise InvalidConfig(f"no command given; choose from {', '.join(COMMANDS)}")
        argv = [file_values["command"]] + argv
    args = build_parser().parse_args(argv)
    values = dict(file_values)
    values["command"] = args.command
    for key, val in vars(args).items():
        if key in ("config", "command") or val is None:
            continue
        values[key] = tuple(val) if isinstance(val, list) else val
    try:
        cfg = RunConfig(**values)
    except TypeError as exc:
        raise InvalidConfig(str(exc)) from None
    cfg.validate()
    return cfg


# ---------------------------------------------------------------- commands

def _warn(msg: str) -> None:
    print(f"capdisc: {msg}", file=sys.stderr)


def _planar(cfg: RunConfig):
    lc = cfg.lattice()
    return modified_point_set(lc) if cfg.modified else build_point_set(lc)


def _sphere_points(cfg: RunConfig) -> Tuple[SpherePointSet, Optional[object]]:
    if cfg.input is not None:
        try:
            kind, data = cio.read_points_csv(cfg.input)
        except (OSError, ValueError) as exc:
            raise InvalidConfig(str(exc)) from None
        if kind == "planar":
            return SpherePointSet.from_planar(data), None
        return SpherePointSet(data), None
    ps = _planar(cfg)
    return SpherePointSet.from_planar(ps), ps


def _emit(cfg: RunConfig, text: str) -> None:
    if cfg.output:
        cio.atomic_write(cfg.output, text)
    else:
        sys.stdout.write(text)


def cmd_generate(cfg: RunConfig) -> dict:
    ps = _planar(cfg)
    if (cfg.format or "csv") == "csv":
        return {"text": cio.sphere_csv(lambert_forward_array(ps.points)) if cfg.sphere else cio.planar_csv(ps)}
    body = {"command": "generate", "config": cfg.to_dict(), "N": ps.N, "modified": ps.modified,
            "provenance": ps.provenance.tolist()}
    if cfg.sphere:
        body["points"] = lambert_forward_array(ps.points).tolist()
    else:
        body["points"] = ps.points.tolist()
    return body


def _discrepancy(pts: SpherePointSet, cfg: RunConfig):
    mode = cfg.mode
    if mode is None:
        mode = "exact" if pts.N <= cfg.limit else "estimate"
        if mode == "estimate":
            _warn(f"N = {pts.N} exceeds the exact-mode limit {cfg.limit}; "
                  f"using estimate mode with {cfg.trials or DEFAULT_TRIALS} trials")
    if mode == "exact":
        return exact_discrepancy(pts, limit=cfg.limit)
    return estimate_discrepancy(pts, cfg.trials or DEFAULT_TRIALS, cfg.seed or 0)


def cmd_discrepancy(cfg: RunConfig) -> dict:
    pts, ps = _sphere_points(cfg)
    rep = _discrepancy(pts, cfg)
    body = {"command": "discrepancy", "config": cfg.to_dict(), "report": rep.to_dict()}
    if ps is not None:
        body["bounds"] = bound_report(cfg.Q, cfg.K, ps.N).to_dict()
    return body


def cmd_bounds(cfg: RunConfig) -> dict:
    ps = _planar(cfg)
    rep = bound_report(cfg.Q, cfg.K, ps.N, clq=cfg.clq, clq_source=cfg.clq_source)
    return {
        "command": "bounds",
        "config": cfg.to_dict(),
        "report": rep.to_dict(),
        # the count deviation only affects lower-order terms once the set is corrected
        "theorem_leading_without_d": theorem_bound(cfg.Q, ps.N, 0.0, rep.clq_used),
    }


def _cap(values) -> Cap:
    wx, wy, wz, t = values
    return Cap(UnitVec3.normalized((wx, wy, wz)), float(t))


def _read_polylines(cfg: RunConfig) -> List[Polyline]:
    import csv

    try:
        with open(cfg.input, newline="") as fh:
            rows = list(csv.reader(fh))
    except OSError as exc:
        raise InvalidConfig(str(exc)) from None
    if not rows or [h.strip() for h in rows[0]] != cio.POLYLINE_HEADER:
        raise InvalidConfig(f"{cfg.input}: expected header {','.join(cio.POLYLINE_HEADER)}")
    comps: dict = {}
    for r in rows[1:]:
        if r:
            comps.setdefault(int(r[0]), []).append((float(r[1]), float(r[2])))
    return [Polyline(np.array(v), closed=bool(cfg.closed), convexity=cfg.n,
                     self_intersections=cfg.m) for _, v in sorted(comps.items())]


def cmd_intersect(cfg: RunConfig) -> dict:
    Q, K, v = cfg.Q, cfg.K, tuple(cfg.offset)
    reports = []
    if cfg.curve == "segment":
        reports.append(intersection_report(segment(cfg.start, cfg.end), Q, K, v))
    elif cfg.curve == "circle":
        cx, cy, r = cfg.center[0], cfg.center[1], cfg.radius

        def circle(s):
            return np.column_stack([cx + r * np.cos(2 * np.pi * s), cy + r * np.sin(2 * np.pi * s)])

        reports.append(curve_report(circle, 1, 0, Q, K, v, closed=True))
    elif cfg.curve == "spiral":
        beta = archimedean_spiral(cfg.half_turns, center=cfg.center, scale=cfg.scale)
        reports.append(intersection_report(beta, Q, K, v))
    elif cfg.curve == "cap":
        pre = cap_preimage(_cap(cfg.cap), max(cfg.samples, 256))
        reports.extend(intersection_report(c, Q, K, v) for c in pre.components)
    else:
        reports.extend(intersection_report(b, Q, K, v) for b in _read_polylines(cfg))
    return {
        "command": "intersect",
        "config": cfg.to_dict(),
        "components": [r.to_dict() for r in reports],
        "count": sum(r.count for r in reports),
        "holds": all(r.holds for r in reports),
    }


def cmd_clq(cfg: RunConfig) -> dict:
    Q = cfg.Q
    if cfg.cap is not None:
        pre = cap_preimage(_cap(cfg.cap), cfg.samples)
        if cfg.format == "csv":
            return {"text": cio.polyline_csv(pre)}
        Qi = inverse(Q)
        return {
            "command": "clq",
            "config": cfg.to_dict(),
            "cap": pre.cap.to_dict(),
            "components": [
                {"closed": c.closed, "vertices": len(c.vertices), "length": polyline_length(c),
                 "transformed_length": polyline_length(transform_polyline(Qi, c))}
                for c in pre.components
            ],
            "length": pre.length(),
            "transformed_length": pre.length(Q),
        }
    est, witness = clq_estimate(Q, cfg.centers, cfg.heights, cfg.samples, return_witness=True)
    return {
        "command": "clq",
        "config": cfg.to_dict(),
        "estimate": est,
        "witness": witness.to_dict(),
        "certified_upper": certified_clq(Q),
        "resolution": {"centers": cfg.centers, "heights": cfg.heights, "samples": cfg.samples},
    }


def cmd_separation(cfg: RunConfig) -> dict:
    pts, _ = _sphere_points(cfg)
    sep = separation_distance(pts)
    return {"command": "separation", "config": cfg.to_dict(), "N": pts.N, "separation": sep,
            "scaled": sep * pts.N ** 0.75}


def suite_rows(ks: Sequence[int], trials: int, seed: int) -> List[dict]:
    rows = []
    presets = [("identity", Mat2.identity(), k, False) for k in ks]
    presets.append(("golden-modified", Mat2.orthogonal_family(PHI), 50, True))
    for name, Q, K, modified in presets:
        lc = LatticeConfig(Q, K)
        ps = modified_point_set(lc) if modified else build_point_set(lc)
        pts = SpherePointSet.from_planar(ps)
        if pts.N <= EXACT_LIMIT:
            rep = exact_discrepancy(pts)
        else:
            rep = estimate_discrepancy(pts, trials, seed)
        cert = polar_certificate(K, points=pts) if name == "identity" else empty_polar_cap(pts)
        br = bound_report(Q, K, ps.N)
        root = math.sqrt(ps.N)
        rows.append({
            "preset": name, "K": K, "N": ps.N, "method": rep.method,
            "sqrtN_D": rep.scaled, "certificate": root * cert.value,
            "theorem": root * br.theorem_leading, "corollary": root * br.corollary_leading,
        })
    return rows


def format_table(rows: List[dict]) -> str:
    head = f"{'preset':<16}{'K':>5}{'N':>7}  {'method':<9}{'sqrtN*D':>10}{'cert':>10}{'theorem':>10}{'corollary':>11}"
    lines = [head, "-" * len(head)]
    for r in rows:
        lines.append(f"{r['preset']:<16}{r['K']:>5}{r['N']:>7}  {r['method']:<9}"
                     f"{r['sqrtN_D']:>10.5f}{r['certificate']:>10.5f}{r['theorem']:>10.5f}{r['corollary']:>11.5f}")
    lines.append("all columns are scaled by sqrt(N); estimates are lower bounds on D")
    return "\n".join(lines) + "\n"


def cmd_paper_suite(cfg: RunConfig) -> dict:
    rows = suite_rows(cfg.ks, cfg.trials or DEFAULT_TRIALS, cfg.seed or 0)
    if cfg.format == "json":
        return {"command": "paper-suite", "rows": rows}
    sys.stdout.write(format_table(rows))
    if cfg.output:
        cio.atomic_write(cfg.output, cio.to_json({"command": "paper-suite", "rows": rows}))
    return {}


HANDLERS = {
    "generate": cmd_generate,
    "discrepancy": cmd_discrepancy,
    "bounds": cmd_bounds,
    "intersect": cmd_intersect,
    "clq": cmd_clq,
    "separation": cmd_separation,
    "paper-suite": cmd_paper_suite,
}


def execute(cfg: RunConfig) -> int:
    body = HANDLERS[cfg.command](cfg)
    if not body:
        return EXIT_OK
    _emit(cfg, body["text"] if "text" in body else cio.to_json(body))
    return EXIT_OK


def run(argv: Optional[Sequence[str]] = None) -> int:
    argv = sys.argv[1:] if argv is None else argv
    try:
        cfg = parse_config(argv)
        return execute(cfg)
    except SystemExit as exc:
        # argparse reports usage errors itself and exits with 2
        return int(exc.code or 0)
    except (SingularMatrix, RankError, DegenerateCap) as exc:
        _warn(f"numerical failure: {exc}")
        return EXIT_NUMERIC
    except (CapdiscError, ValueError, OSError) as exc:
        _warn(f"invalid configuration: {exc}")
        return EXIT_CONFIG


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
