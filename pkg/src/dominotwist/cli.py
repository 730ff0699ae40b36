"""Command-line surface: deterministic, machine-readable access to the engine.

Every subcommand emits a CommandResult: with --json a single JSON object
{"command", "region", "status", "payload", "timing"}; otherwise readable
text.  The timing field is wall-clock seconds and is the only part of the
output that varies between runs.  Exit codes: 0 ok, 2 indeterminate
(budget exhausted, no wrong answer), 1 error.  All configuration is by
flags; no environment variables are consulted.
"""

from __future__ import annotations

import argparse
import itertools
import json
import sys
import time
from pathlib import Path

from . import hamiltonian as ham
from .kasteleyn import defect_by_determinant, defect_by_enumeration, twist
from .moves import DEFAULT_BUDGET, Connectivity, connected_with_padding, flip_components
from .regions import Region, RegionError, parse_region_spec, region_spec
from .tilings import Tiling, TilingError, count_tilings, tiling_from_text
from .transfer import (
    TransferError,
    cylinder_count,
    cylinder_defect,
    get_transfer,
    save_transfer_cache,
    spectral_estimates,
    transfer_to_json_obj,
)

DIRECTION_GLYPHS = ("[]", "nu", "fb", "ws")  # in-floor axes 0..3
FLOOR_GLYPHS = "UD"  # partner above / below


class CommandResult:
    def __init__(self, command: str, region: str | None, payload: dict,
                 status: str = "ok"):
        self.command = command
        self.region = region
        self.payload = payload
        self.status = status
        self.timing = 0.0

    def to_json_obj(self) -> dict:
        return {
            "command": self.command,
            "region": self.region,
            "status": self.status,
            "payload": self.payload,
            "timing": self.timing,
        }


def _fail(command: str, message: str, region: str | None = None) -> CommandResult:
    return CommandResult(command, region, {"message": message}, status="error")


def _read_tiling(path: str) -> Tiling:
    text = Path(path).read_text()
    stripped = text.lstrip()
    if stripped.startswith("{"):
        from .tilings import tiling_from_json_obj
        return tiling_from_json_obj(json.loads(text))
    return tiling_from_text(text)


def _parse_path_arg(text: str) -> ham.HamiltonianPath:
    """Path argument: 'box:<dims>' for the serpentine path, or a JSON file
    holding an ordered cell list."""
    if text.startswith("box:"):
        dims = tuple(int(x) for x in text[4:].split(","))
        return ham.box_path(dims)
    obj = json.loads(Path(text).read_text())
    region = parse_region_spec(obj["region"])
    return ham.path_from_cells(region, obj["cells"])


# ------------------------------------------------------------ subcommands

def cmd_count(args) -> CommandResult:
    region = parse_region_spec(args.region)
    method = args.method
    if method == "auto":
        method = "transfer" if region.base is not None else "enum"
    if method == "transfer":
        if region.base is None:
            return _fail("count", "transfer method needs a cyl: region",
                         region_spec(region))
        n = cylinder_count(region.base, region.floors)
    else:
        n = count_tilings(region)
    return CommandResult("count", region_spec(region),
                         {"count": n, "method": method})


def cmd_components(args) -> CommandResult:
    region = parse_region_spec(args.region)
    report = flip_components(region, budget=args.budget)
    payload = {
        "component_count": len(report.components),
        "components": report.summary(),
        "complete": report.complete,
        "visited": report.visited,
    }
    status = "ok" if report.complete else "indeterminate"
    return CommandResult("components", region_spec(region), payload, status)


def cmd_twist(args) -> CommandResult:
    t = _read_tiling(args.tiling)
    return CommandResult("twist", region_spec(t.region), {"twist": twist(t)})


def cmd_defect(args) -> CommandResult:
    region = parse_region_spec(args.region)
    method = args.method
    if method == "auto":
        method = "transfer" if region.base is not None else "det"
    if method == "det":
        value = defect_by_determinant(region)
    elif method == "enum":
        value = defect_by_enumeration(region)
    else:
        if region.base is None:
            return _fail("defect", "transfer method needs a cyl: region",
                         region_spec(region))
        value = cylinder_defect(region.base, region.floors)
    payload = {
        "defect": value,
        "abs": abs(value),
        "method": method,
        "note": "sign depends on the cell labeling convention;"
                " only the absolute value is intrinsic",
    }
    return CommandResult("defect", region_spec(region), payload)


def cmd_transfer_export(args) -> CommandResult:
    base = parse_region_spec(args.base)
    tm = get_transfer(base)
    obj = transfer_to_json_obj(tm)
    out = Path(args.out)
    out.write_text(json.dumps(obj, separators=(",", ":")) + "\n")
    nnz_count, nnz_signed = tm.nnz
    payload = {"plugs": tm.size, "nnz_count": nnz_count,
               "nnz_signed": nnz_signed, "out": str(out)}
    if args.binary:
        save_transfer_cache(tm, args.binary)
        payload["binary"] = args.binary
    return CommandResult("transfer-export", region_spec(base), payload)


def cmd_spectral(args) -> CommandResult:
    base = parse_region_spec(args.base)
    rep = spectral_estimates(base, tol=args.tol)
    payload = {
        "lambda": rep.lam,
        "lambda_tilde": rep.lam_tilde,
        "ratio": rep.ratio,
        "residual": rep.residual,
        "residual_tilde": rep.residual_tilde,
    }
    return CommandResult("spectral", region_spec(base), payload)


def cmd_padding(args) -> CommandResult:
    t0 = _read_tiling(args.t0)
    t1 = _read_tiling(args.t1)
    verdict = connected_with_padding(t0, t1, args.floors, budget=args.budget)
    payload = {
        "floors": args.floors,
        "connected": {Connectivity.CONNECTED: True,
                      Connectivity.DISCONNECTED: False,
                      Connectivity.INDETERMINATE: None}[verdict],
        "budget": args.budget,
    }
    status = "indeterminate" if verdict is Connectivity.INDETERMINATE else "ok"
    return CommandResult("padding", region_spec(t0.region), payload, status)


def cmd_generators(args) -> CommandResult:
    path = _parse_path_arg(args.base)
    gens = ham.generator_set(path, cap=args.cap)
    entries = []
    out_dir = Path(args.out) if args.out else None
    if out_dir:
        out_dir.mkdir(parents=True, exist_ok=True)
    for k, g in enumerate(gens):
        entry = {
            "d": list(g.d),
            "plug": g.plug,
            "half_floors": g.half,
            "flux": list(g.flux),
            "twist": g.twist,
        }
        text = g.tiling.to_text()
        if out_dir:
            name = f"gen_{k:03d}_d{g.d[0]}-{g.d[1]}.txt"
            (out_dir / name).write_text(text)
            entry["file"] = name
        else:
            entry["tiling"] = text
        entries.append(entry)
    payload = {"generator_count": len(gens), "generators": entries}
    if out_dir:
        payload["out"] = str(out_dir)
    return CommandResult("generators", region_spec(path.region), payload)


def cmd_flux(args) -> CommandResult:
    path = _parse_path_arg(args.base)
    if args.d is None:
        dominoes = ham.non_respecting_base_dominoes(path)
        payload = {"non_respecting_dominoes": [list(d) for d in dominoes]}
        return CommandResult("flux", region_spec(path.region), payload)
    d = tuple(int(x) for x in args.d.split(","))
    if len(d) != 2:
        return _fail("flux", "--d wants two path positions 'i,j'",
                     region_spec(path.region))
    if args.plug is not None:
        phi = ham.flux(path, d, int(args.plug, 0))
        payload = {"d": list(d), "plug": int(args.plug, 0), "flux": list(phi)}
    else:
        values = sorted(ham.flux_set(path, d))
        payload = {"d": list(d), "flux_set": [list(v) for v in values]}
    return CommandResult("flux", region_spec(path.region), payload)


def cmd_fold(args) -> CommandResult:
    t = _read_tiling(args.tiling)
    src = _parse_path_arg(args.src)
    dst = _parse_path_arg(args.dst)
    moved = ham.unfold(t, src, dst) if args.unfold else ham.fold(t, src, dst)
    text = moved.to_text()
    payload = {"region": region_spec(moved.region)}
    if args.out:
        Path(args.out).write_text(text)
        payload["out"] = args.out
    else:
        payload["tiling"] = text
    return CommandResult("fold", region_spec(t.region), payload)


# ---------------------------------------------------------------- render

def _cell_glyph(region: Region, t: Tiling, i: int) -> str:
    a, b = region.cells[i], region.cells[t.partner[i]]
    axis = next(k for k in range(region.dim) if a[k] != b[k])
    up = b[axis] > a[axis]
    if axis == region.dim - 1:
        return FLOOR_GLYPHS[0 if up else 1]
    pair = DIRECTION_GLYPHS[axis % len(DIRECTION_GLYPHS)]
    return pair[0 if up else 1]


def render_tiling(t: Tiling) -> str:
    """ASCII rendering, one block per floor (last axis), rows by the second
    axis, columns by the first; extra middle axes become labeled slices.
    Each cell shows where its partner lies: [] nu fb ws pairs in-floor,
    U/D for the floor above/below, '.' for cells outside the region."""
    region = t.region
    index = region.index
    if not region.cells:
        return "(empty region)\n"
    box = region.bounding_box
    lo = [b[0] for b in box]
    hi = [b[1] for b in box]
    dim = region.dim
    xs = range(lo[0], hi[0] + 1)

    def row(cell_of) -> str:
        out = []
        for x in xs:
            i = index.get(cell_of(x))
            out.append("." if i is None else _cell_glyph(region, t, i))
        return "  " + "".join(out)

    if dim == 1:
        return row(lambda x: (x,))[2:] + "\n"
    lines: list[str] = []
    for h in range(lo[-1], hi[-1] + 1):
        lines.append(f"floor {h}")
        if dim == 2:
            lines.append(row(lambda x: (x, h)))
            continue
        mids = [range(lo[k], hi[k] + 1) for k in range(2, dim - 1)]
        for mid in itertools.product(*mids) if mids else [()]:
            if mids:
                label = ",".join(f"x{k + 2}={v}" for k, v in enumerate(mid))
                lines.append(f"  [{label}]")
            for y in range(lo[1], hi[1] + 1):
                lines.append(row(lambda x: (x, y, *mid, h)))
    return "\n".join(lines) + "\n"


def cmd_render(args) -> CommandResult:
    t = _read_tiling(args.tiling)
    return CommandResult("render", region_spec(t.region),
                         {"text": render_tiling(t)})


# ------------------------------------------------------------------ main

def _print_text(result: CommandResult) -> None:
    p = result.payload
    if result.status == "error":
        print(f"error: {p.get('message', '?')}", file=sys.stderr)
        return
    if result.command == "render":
        sys.stdout.write(p["text"])
        return
    print(f"{result.command} {result.region or ''}".rstrip())
    for key, value in p.items():
        if key == "components":
            for k, c in enumerate(value):
                print(f"  component {k}: size={c['size']} twist={c['twist']}")
        elif key == "generators":
            for g in value:
                print(f"  d={g['d']} plug={g['plug']:#x} flux={g['flux']}"
                      f" twist={g['twist']} half={g['half_floors']}")
        elif key in ("tiling", "text"):
            sys.stdout.write(value)
        else:
            print(f"  {key}: {value}")
    if result.status != "ok":
        print(f"  status: {result.status}")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="dominotwist",
        description="exact counts, twists, flip components, transfer"
                    " matrices and path constructions for domino tilings",
    )
    sub = ap.add_subparsers(dest="subcommand", required=True)

    def common(p):
        p.add_argument("--json", action="store_true",
                       help="emit a single CommandResult JSON object")
        p.add_argument("--threads", type=int, default=0, metavar="T",
                       help="worker cap (results are identical for any T)")

    p = sub.add_parser("count", help="number of tilings of a region")
    p.add_argument("--region", required=True)
    p.add_argument("--method", choices=("auto", "enum", "transfer"),
                   default="auto")
    common(p)
    p.set_defaults(func=cmd_count)

    p = sub.add_parser("components", help="flip-graph component census")
    p.add_argument("--region", required=True)
    p.add_argument("--budget", type=int, default=DEFAULT_BUDGET)
    common(p)
    p.set_defaults(func=cmd_components)

    p = sub.add_parser("twist", help="twist of a serialized tiling")
    p.add_argument("--tiling", required=True, help="tiling text or JSON file")
    common(p)
    p.set_defaults(func=cmd_twist)

    p = sub.add_parser("defect", help="twist-signed tiling count")
    p.add_argument("--region", required=True)
    p.add_argument("--method", choices=("auto", "det", "enum", "transfer"),
                   default="auto")
    common(p)
    p.set_defaults(func=cmd_defect)

    p = sub.add_parser("transfer-export",
                       help="write plug transfer matrices as JSON")
    p.add_argument("--base", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--binary", help="also write a binary matrix cache here")
    common(p)
    p.set_defaults(func=cmd_transfer_export)

    p = sub.add_parser("spectral",
                       help="dominant growth rates of the transfer matrices")
    p.add_argument("--base", required=True)
    p.add_argument("--tol", type=float, default=1e-9)
    common(p)
    p.set_defaults(func=cmd_spectral)

    p = sub.add_parser("padding",
                       help="flip connectivity after adding vertical floors")
    p.add_argument("--t0", required=True)
    p.add_argument("--t1", required=True)
    p.add_argument("--floors", type=int, required=True,
                   help="even number of vertical floors to append")
    p.add_argument("--budget", type=int, default=DEFAULT_BUDGET)
    common(p)
    p.set_defaults(func=cmd_padding)

    p = sub.add_parser("generators",
                       help="generator tilings for a box base path")
    p.add_argument("--base", required=True,
                   help="'box:<dims>' or a path JSON file")
    p.add_argument("--out", help="directory for tiling text files")
    p.add_argument("--cap", type=int, default=ham.DEFAULT_HALF_FLOOR_CAP)
    common(p)
    p.set_defaults(func=cmd_generators)

    p = sub.add_parser("flux", help="flux of non-respecting dominoes")
    p.add_argument("--base", required=True,
                   help="'box:<dims>' or a path JSON file")
    p.add_argument("--d", help="1-based path positions 'i,j'")
    p.add_argument("--plug", help="plug bitmask (hex or decimal)")
    common(p)
    p.set_defaults(func=cmd_flux)

    p = sub.add_parser("fold", help="transport a tiling between path regions")
    p.add_argument("--tiling", required=True)
    p.add_argument("--src", required=True, help="path of the tiling's base")
    p.add_argument("--dst", required=True, help="target path")
    p.add_argument("--unfold", action="store_true",
                   help="skip the global fold precheck, fail per-domino")
    p.add_argument("--out", help="write the transported tiling here")
    common(p)
    p.set_defaults(func=cmd_fold)

    p = sub.add_parser("render", help="ASCII picture of a tiling, by floors")
    p.add_argument("--tiling", required=True)
    common(p)
    p.set_defaults(func=cmd_render)

    return ap


def main(argv: list[str] | None = None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    if args.threads < 0:
        print("error: --threads must be >= 0", file=sys.stderr)
        return 1
    start = time.perf_counter()
    try:
        result: CommandResult = args.func(args)
    except (RegionError, TilingError, TransferError, ham.HamiltonianError,
            OSError, ValueError, json.JSONDecodeError) as e:
        result = _fail(args.subcommand, str(e))
    result.timing = round(time.perf_counter() - start, 6)
    if args.json:
        print(json.dumps(result.to_json_obj(), separators=(",", ":")))
    else:
        _print_text(result)
    return {"ok": 0, "indeterminate": 2, "error": 1}[result.status]


if __name__ == "__main__":
    sys.exit(main())
