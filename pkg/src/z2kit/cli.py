"""Command-line front end: verify, z2, frame, scan, orbit."""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import models
from .errors import Aliasing, GapClosed, InvalidSpec, Obstructed, Z2KitError
from .frames import EffectiveCell, symmetric_frame_1d, symmetric_frame_2d
from .invariants import (
    classify_orbit,
    delta_2d,
    fkm_indices,
    gl3z_transform,
    z2_all_routes,
    z2_quadruple_3d,
)
from .linalg import Tolerances

EXIT_OK = 0
EXIT_AXIOM = 1
EXIT_USAGE = 2
EXIT_DISAGREE = 3
EXIT_GAP = 4
EXIT_ALIASING = 5
EXIT_OBSTRUCTED = 6


@dataclass
class RunConfig:
    """Everything one invocation needs; built from parsed CLI flags."""

    builtin: str | None = None
    spec_path: str | None = None
    params: dict = field(default_factory=dict)
    dim: int = 2
    edge_samples: int = 256
    tol: float | None = None
    route: str = "all"
    out: str | None = None
    fmt: str = "json"
    jobs: int = 1
    seed: int = 0

    def __post_init__(self):
        if self.edge_samples < 8:
            raise InvalidSpec("need at least 8 samples per edge")
        if self.tol is not None and self.tol <= 0:
            raise InvalidSpec("tolerances must be positive")

    def tolerances(self) -> Tolerances:
        if self.tol is None:
            return Tolerances()
        return Tolerances(sym=self.tol, skew=self.tol)

    def load_family(self) -> models.ProjectorFamily:
        if self.spec_path:
            return models.load_model_file(self.spec_path)
        name = self.builtin or "kane_mele"
        params = dict(self.params)
        if name in ("constant", "twisted"):
            params.setdefault("dimension", self.dim)
            params.setdefault("seed", self.seed)
        return models.builtin_family(name, **params)


def _json_dump(obj, path: str | None) -> None:
    text = json.dumps(obj, sort_keys=True, indent=2, default=float) + "\n"
    if path:
        Path(path).write_text(text)
    else:
        sys.stdout.write(text)


def _parse_params(pairs) -> dict:
    out = {}
    for pair in pairs or ():
        if "=" not in pair:
            raise InvalidSpec(f"--param expects name=value, got {pair!r}")
        key, val = pair.split("=", 1)
        try:
            out[key] = float(val)
        except ValueError:
            out[key] = val
    return out


def _config_from_args(args) -> RunConfig:
    jobs = getattr(args, "jobs", 1)
    cap = os.environ.get("Z2KIT_THREADS")
    if cap:
        jobs = max(1, min(jobs, int(cap)))
    return RunConfig(
        builtin=getattr(args, "builtin", None),
        spec_path=getattr(args, "spec", None),
        params=_parse_params(getattr(args, "param", None)),
        dim=getattr(args, "dim", 2),
        edge_samples=getattr(args, "edge_samples", 256),
        tol=getattr(args, "tol", None),
        route=getattr(args, "route", "all"),
        out=getattr(args, "out", None),
        fmt=getattr(args, "format", "json"),
        jobs=jobs,
        seed=getattr(args, "seed", 0),
    )


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------

def cmd_verify(config: RunConfig) -> int:
    """Check the projector-family axioms; exit 0 only if all pass."""
    try:
        family = config.load_family()
    except (FileNotFoundError, InvalidSpec, Z2KitError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    tol = config.tol if config.tol is not None else 1e-9
    report = models.verify_assumptions(family, n_samples=100, tol=tol, seed=config.seed)
    payload = {
        "model": family.name,
        "tol": tol,
        "residuals": report.residuals,
        "passed": report.passed,
        "ok": report.ok,
    }
    _json_dump(payload, config.out)
    if not report.ok:
        failed = [k for k, ok in report.passed.items() if not ok]
        print(f"axiom check failed: {', '.join(failed)}", file=sys.stderr)
        return EXIT_AXIOM
    return EXIT_OK


def cmd_z2(config: RunConfig) -> int:
    """Compute the invariant: three routes in 2d, the quadruple in 3d."""
    try:
        family = config.load_family()
    except (FileNotFoundError, InvalidSpec, Z2KitError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    cell = EffectiveCell(edge_samples=config.edge_samples)
    tols = config.tolerances()
    try:
        if family.dimension == 3:
            quad = z2_quadruple_3d(family, cell, tols=tols)
            payload = quad.to_dict()
            payload["model"] = family.name
            _json_dump(payload, config.out)
            if not all(quad.consistency.values()):
                print("opposite-face invariants disagree", file=sys.stderr)
                return EXIT_DISAGREE
            return EXIT_OK
        if family.dimension != 2:
            print("z2 needs a 2d or 3d family; use `frame --dim 1` in 1d",
                  file=sys.stderr)
            return EXIT_USAGE
        if config.route == "all":
            routes = z2_all_routes(family, cell, tols=tols)
            values = {name: rep.value for name, rep in routes.items()}
            agree = len(set(values.values())) == 1
            payload = {
                "model": family.name,
                "value": values["degree"] if agree else None,
                "agree": agree,
                "routes": {name: rep.to_dict() for name, rep in routes.items()},
            }
            _json_dump(payload, config.out)
            if not agree:
                print(f"route disagreement: {values}", file=sys.stderr)
                return EXIT_DISAGREE
            return EXIT_OK
        route_map = {"degree": "degree", "trim": "trim", "fukane": "fu_kane"}
        name = route_map[config.route]
        routes = z2_all_routes(family, cell, tols=tols)
        payload = routes[name].to_dict()
        payload["model"] = family.name
        _json_dump(payload, config.out)
        return EXIT_OK
    except GapClosed as exc:
        print(f"gap closed: {exc}", file=sys.stderr)
        return EXIT_GAP
    except Aliasing as exc:
        print(f"aliasing persists at the resolution cap: {exc}", file=sys.stderr)
        return EXIT_ALIASING


def _frame_payload(field_obj, family, tols: Tolerances) -> dict:
    ks = field_obj.ks.reshape(-1, field_obj.ks.shape[-1])
    vals = field_obj.values.reshape((-1,) + field_obj.values.shape[-2:])
    points = [
        {
            "k": [float(x) for x in k],
            "frame": [[[float(z.real), float(z.imag)] for z in row] for row in v],
        }
        for k, v in zip(ks, vals)
    ]
    meta = {key: val for key, val in field_obj.meta.items()
            if isinstance(val, (int, float, str, bool))}
    meta["grid_shape"] = list(field_obj.values.shape[:-2])
    meta["ambient_dim"] = family.ambient_dim
    meta["rank"] = family.rank
    meta["tolerances"] = {
        "unitary": tols.unitary, "proj": tols.proj, "skew": tols.skew,
        "sym": tols.sym, "rank": tols.rank,
    }
    return {"model": family.name, "metadata": meta, "points": points}


def cmd_frame(config: RunConfig) -> int:
    """Construct a global symmetric frame and export it; exit 6 if obstructed."""
    try:
        family = config.load_family()
    except (FileNotFoundError, InvalidSpec, Z2KitError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    tols = config.tolerances()
    try:
        if family.dimension == 1:
            field_obj = symmetric_frame_1d(family, n_samples=config.edge_samples, tols=tols)
        elif family.dimension == 2:
            cell = EffectiveCell(edge_samples=config.edge_samples)
            field_obj = symmetric_frame_2d(family, cell, tols=tols, fill_seed=config.seed)
        else:
            print("frame construction is implemented for 1d and 2d families",
                  file=sys.stderr)
            return EXIT_USAGE
    except Obstructed as exc:
        print(f"obstructed: {exc}", file=sys.stderr)
        if exc.report:
            _json_dump({"obstructed": True, **{k: v for k, v in exc.report.items()
                                               if k != "diagnostics"}}, None)
        return EXIT_OBSTRUCTED
    except GapClosed as exc:
        print(f"gap closed: {exc}", file=sys.stderr)
        return EXIT_GAP
    payload = _frame_payload(field_obj, family, tols)
    _json_dump(payload, config.out)
    resid = {k: v for k, v in field_obj.meta.items() if isinstance(v, float)}
    print("residual maxima: " + ", ".join(f"{k}={v:.2e}" for k, v in resid.items()),
          file=sys.stderr)
    return EXIT_OK


def _scan_point(task) -> dict:
    name, params, dim, edge_samples, seed = task
    config = RunConfig(builtin=name, params=params, dim=dim,
                       edge_samples=edge_samples, seed=seed)
    family = config.load_family()
    rng = np.random.default_rng(0)
    ks = rng.uniform(-0.5, 0.5, size=(512, family.dimension))
    t0 = time.perf_counter()
    row = dict(params)
    try:
        gap = float(np.min(models.direct_gap(family, ks)))
        row["gap"] = gap
        if family.dimension == 3:
            quad = z2_quadruple_3d(family, EffectiveCell(edge_samples=edge_samples))
            row["delta"] = "".join(str(d) for d in quad.deltas)
        else:
            row["delta"] = delta_2d(family, EffectiveCell(edge_samples=edge_samples)).value
        row["flag"] = ""
    except GapClosed as exc:
        row.update(gap=exc.gap if exc.gap is not None else 0.0, delta="", flag="gap_closed")
    except Aliasing:
        row.update(delta="", flag="aliasing")
    row["seconds"] = round(time.perf_counter() - t0, 4)
    return row


def cmd_scan(config: RunConfig, ranges: dict) -> int:
    """Sweep builtin-model parameters; one CSV row per grid point."""
    if config.spec_path:
        print("scan sweeps builtin parameters; --spec is not supported here",
              file=sys.stderr)
        return EXIT_USAGE
    if not ranges:
        print("empty parameter grid", file=sys.stderr)
        return EXIT_USAGE
    names = sorted(ranges)
    axes = [np.linspace(lo, hi, npts) for (lo, hi, npts) in (ranges[n] for n in names)]
    mesh = [dict(zip(names, vals)) for vals in
            (np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, len(names)))]
    tasks = [
        (config.builtin or "kane_mele", {**config.params, **point}, config.dim,
         config.edge_samples, config.seed)
        for point in mesh
    ]
    if config.jobs > 1:
        with ProcessPoolExecutor(max_workers=config.jobs) as pool:
            rows = list(pool.map(_scan_point, tasks))
    else:
        rows = [_scan_point(t) for t in tasks]

    header = names + ["delta", "gap", "seconds", "flag"]
    sink = open(config.out, "w", newline="") if config.out else sys.stdout
    try:
        writer = csv.DictWriter(sink, fieldnames=header, extrasaction="ignore")
        writer.writeheader()
        for row in rows:
            writer.writerow(row)
    finally:
        if config.out:
            sink.close()
    return EXIT_OK


def cmd_orbit(bits) -> int:
    """Orbit classification of a 3d invariant quadruple."""
    if len(bits) != 4 or any(b not in (0, 1) for b in bits):
        print("orbit expects four bits in {0, 1}", file=sys.stderr)
        return EXIT_USAGE
    deltas = tuple(int(b) for b in bits)
    info = classify_orbit(deltas)
    nu0, nu = fkm_indices(deltas)
    payload = {
        "deltas": list(deltas),
        "orbit": info["orbit"],
        "nu0": nu0,
        "nu": list(nu),
        "nu_tot": info["nu_tot"],
        "omega_hat": info["omega_hat"],
        "trivial": info["trivial"],
        "images": {g: list(gl3z_transform(deltas, g)) for g in ("s1", "s2", "t")},
    }
    _json_dump(payload, None)
    return EXIT_OK


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------

def _add_model_flags(sub, with_route=False, with_jobs=False):
    group = sub.add_mutually_exclusive_group()
    group.add_argument("--builtin", help="builtin model name", default=None)
    group.add_argument("--spec", help="model file (.toml or .json)", default=None)
    sub.add_argument("--param", action="append", metavar="NAME=VALUE",
                     help="builtin model parameter (repeatable)")
    sub.add_argument("--dim", type=int, choices=(1, 2, 3), default=2,
                     help="dimension for builtins that take one")
    sub.add_argument("--edge-samples", type=int, default=256, dest="edge_samples")
    sub.add_argument("--tol", type=float, default=None)
    sub.add_argument("--out", default=None)
    sub.add_argument("--format", choices=("json", "csv"), default="json")
    sub.add_argument("--seed", type=int, default=0)
    if with_route:
        sub.add_argument("--route", choices=("all", "degree", "trim", "fukane"),
                         default="all")
    if with_jobs:
        sub.add_argument("--jobs", type=int, default=1)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="z2kit",
        description="Z2 invariants of time-reversal symmetric insulators, with "
                    "explicit symmetric Bloch frame construction.",
    )
    subs = parser.add_subparsers(dest="command", required=True)

    sub = subs.add_parser("verify", help="check the projector-family axioms")
    _add_model_flags(sub)

    sub = subs.add_parser("z2", help="compute the Z2 invariant(s)")
    _add_model_flags(sub, with_route=True)

    sub = subs.add_parser("frame", help="construct and export a symmetric frame")
    _add_model_flags(sub)

    sub = subs.add_parser("scan", help="parameter sweep to CSV")
    _add_model_flags(sub, with_jobs=True)
    sub.add_argument("--scan", action="append", metavar="NAME=LO:HI:N",
                     required=True, help="parameter range (repeatable)")

    sub = subs.add_parser("orbit", help="orbit algebra of a quadruple")
    sub.add_argument("bits", type=int, nargs=4, help="delta quadruple bits")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "orbit":
        return cmd_orbit(args.bits)
    try:
        config = _config_from_args(args)
    except InvalidSpec as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    if args.command == "verify":
        return cmd_verify(config)
    if args.command == "z2":
        return cmd_z2(config)
    if args.command == "frame":
        return cmd_frame(config)
    if args.command == "scan":
        ranges = {}
        for spec in args.scan:
            name, _, body = spec.partition("=")
            try:
                lo, hi, npts = body.split(":")
                ranges[name] = (float(lo), float(hi), int(npts))
            except ValueError:
                print(f"bad --scan value {spec!r}; expected NAME=LO:HI:N",
                      file=sys.stderr)
                return EXIT_USAGE
        return cmd_scan(config, ranges)
    return EXIT_USAGE


if __name__ == "__main__":
    raise SystemExit(main())
