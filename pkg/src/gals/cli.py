"""Command line entry point."""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from . import benchmarks as bm
from .geometry import extract_contour, write_obj, write_polyline_csv, write_vtk
from .io import load_state, read_config, save_state
from .stability import default_scan

CONFIG_KEYS = {"grid", "scheme", "cross", "dt", "out", "refine", "seed", "levels", "revolutions", "final_time"}


def _common(p: argparse.ArgumentParser):
    p.add_argument("--config", help="key=value file; command line flags take precedence")
    p.add_argument("--out", help="output directory")
    p.add_argument("--refine", type=int, help="contour/volume subdivisions per cell edge (default 4)")
    p.add_argument("--seed", type=int, help="seed for random sample points (default 0)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="gals", description="Gradient-augmented level set benchmarks")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run one benchmark with one scheme")
    run.add_argument("benchmark", choices=sorted(bm.BENCHMARKS))
    run.add_argument("--grid", type=int, help="cells per axis")
    run.add_argument("--scheme", choices=bm.SCHEMES)
    run.add_argument("--cross", choices=["cell", "central", "zero"])
    run.add_argument("--dt", help="time step: h, h/2, cfl or a number")
    run.add_argument("--revolutions", type=float, help="Zalesak runs: number of revolutions")
    run.add_argument("--final-time", type=float, dest="final_time")
    _common(run)

    conv = sub.add_parser("converge", help="convergence study over a grid ladder")
    conv.add_argument("benchmark", choices=bm.STUDIES)
    conv.add_argument("--levels", help="comma separated cells per axis, e.g. 32,64,128,256")
    conv.add_argument("--scheme", choices=[s for s in bm.SCHEMES if s.startswith("gals")])
    conv.add_argument("--cross", choices=["cell", "central", "zero"])
    _common(conv)

    scan = sub.add_parser("stability-scan", help="growth matrix eigenvalue scan")
    scan.add_argument("--out", help="output directory")
    scan.add_argument("--config", help="key=value file; command line flags take precedence")

    ext = sub.add_parser("extract", help="zero contour of a saved state")
    ext.add_argument("state_file")
    ext.add_argument("--format", choices=["obj", "vtk", "csv"], help="default: obj in 3D, csv in 2D")
    _common(ext)
    return parser


def _merge_config(args) -> dict:
    values = {}
    if getattr(args, "config", None):
        cfg = read_config(args.config)
        unknown = set(cfg) - CONFIG_KEYS
        if unknown:
            raise SystemExit(f"unknown config keys: {sorted(unknown)}")
        values.update(cfg)
    for key, value in vars(args).items():
        if value is not None:
            values[key] = value
    return values


def _out_dir(values) -> Path | None:
    if values.get("out") is None:
        return None
    out = Path(values["out"])
    out.mkdir(parents=True, exist_ok=True)
    return out


def cmd_run(values) -> int:
    cfg = bm.RunConfig(
        values["benchmark"],
        grid=int(values["grid"]) if "grid" in values else None,
        scheme=values.get("scheme", "gals-rk3"),
        cross=values.get("cross", "cell"),
        dt=values.get("dt"),
        out=values.get("out"),
        refine=int(values.get("refine", 4)),
        seed=int(values.get("seed", 0)),
        final_time=float(values["final_time"]) if "final_time" in values else None,
        revolutions=float(values["revolutions"]) if "revolutions" in values else None,
    )
    result = bm.run_benchmark(cfg)
    print(f"{result.benchmark} [{result.scheme}] n={result.n}")
    for key, value in result.metrics.items():
        print(f"  {key} = {value:.6g}" if isinstance(value, float) else f"  {key} = {value}")
    out = _out_dir(values)
    if out is not None:
        path = save_state(result.state, out / f"{result.benchmark}_{result.scheme}_final.npz")
        print(f"  wrote {len(result.files) + 1} file(s) to {out} (final state {path.name})")
    return 0


def cmd_converge(values) -> int:
    levels = [int(v) for v in str(values["levels"]).split(",")] if "levels" in values else None
    report = bm.convergence_study(
        values["benchmark"],
        levels,
        scheme=values.get("scheme", "gals-rk3"),
        cross=values.get("cross", "cell"),
        seed=int(values.get("seed", 0)),
        refine=int(values.get("refine", 4)),
    )
    print(report.summary())
    out = _out_dir(values)
    if out is not None:
        report.to_csv(out / f"{values['benchmark']}_convergence.csv")
    return 0


def cmd_scan(values) -> int:
    scan = default_scan()
    print(f"max |lambda| over theta != 0: {scan.max_off_zero():.15f}")
    print(f"max |lambda| overall:         {scan.spectral_radius.max():.15f}")
    out = _out_dir(values)
    if out is not None:
        scan.to_csv(out / "stability_scan.csv")
    return 0


def cmd_extract(values) -> int:
    state = load_state(values["state_file"])
    mesh = extract_contour(state, int(values.get("refine", 4)))
    fmt = values.get("format") or ("obj" if state.grid.dim == 3 else "csv")
    out = _out_dir(values) or Path(".")
    stem = Path(values["state_file"]).stem
    writers = {"obj": write_obj, "vtk": write_vtk, "csv": write_polyline_csv}
    print(f"{len(mesh)} vertices, {len(mesh.connectivity)} elements")
    if mesh.is_empty:
        return 0
    path = writers[fmt](mesh, out / f"{stem}.{fmt}")
    print(f"wrote {path}")
    return 0


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    values = _merge_config(args)
    handlers = {"run": cmd_run, "converge": cmd_converge, "stability-scan": cmd_scan, "extract": cmd_extract}
    try:
        return handlers[args.command](values)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
