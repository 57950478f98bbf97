"""Command-line front end: build meshes and orbits, run suites, export data.

Commands: mesh, orbit, cesaro, verify, export. Exit codes: 0 when every
asserted check passes, 1 on usage errors, 2 on verification failure.
Identical flags, seed, and thread count give byte-identical delimited
artifacts; figures are rendered alongside them unless --no-plot is given.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from dataclasses import dataclass, fields

import numpy as np

from .mesh import (MeshInvalidError, PAIR_BUDGET_DEFAULT, build_block_mesh,
                   build_harmonic_mesh, validate_mesh, write_blockmeta_csv,
                   write_mesh_csv, write_mesh_json)
from .orbit import (CesaroTrace, Orbit, block_mean_norm, build_orbit,
                    cesaro_norms)
from .plots import (figure_path, render_margin_figure, render_mesh_figure,
                    render_trace_figure)
from .verify import suite_block, suite_harmonic

COMMANDS = ("mesh", "orbit", "cesaro", "verify", "export")


@dataclass
class RunConfig:
    """Everything a run depends on; seed and threads pin all randomness."""

    command: str
    kind: str = "harmonic"
    suite: str = "harmonic"
    delta: float = 0.125
    q1: int = 8
    blocks: int = 1
    n: int = 1000
    seed: int = 0
    threads: int = 1
    out: str | None = None
    format: str = "csv"
    pair_budget: int = PAIR_BUDGET_DEFAULT
    no_plot: bool = False


class _Parser(argparse.ArgumentParser):
    """argparse with usage failures mapped to exit code 1."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _add_common(sp: argparse.ArgumentParser, *, with_kind: bool) -> None:
    if with_kind:
        sp.add_argument("--kind", choices=("harmonic", "block"),
                        default="harmonic", help="mesh family")
    sp.add_argument("--delta", type=float, default=0.125,
                    help="harmonic first step, in (0, 1/8]")
    sp.add_argument("--q1", type=int, default=8,
                    help="block seed scale Q_1 >= 8")
    sp.add_argument("--blocks", type=int, default=1,
                    help="number of blocks for the block family")
    sp.add_argument("--n", type=int, default=1000,
                    help="harmonic mesh length")
    sp.add_argument("--seed", type=int, default=0,
                    help="seed for all subsampling")
    sp.add_argument("--threads", type=int, default=1,
                    help="worker threads for pair sweeps")
    sp.add_argument("--out", default=None, help="output path")
    sp.add_argument("--format", choices=("csv", "json"), default="csv",
                    help="artifact format")
    sp.add_argument("--pair-budget", type=int, default=PAIR_BUDGET_DEFAULT,
                    dest="pair_budget", help="cap on enumerated index pairs")
    sp.add_argument("--no-plot", action="store_true", dest="no_plot",
                    help="skip companion figures")
    sp.add_argument("--config", default=None,
                    help="JSON file of flag defaults; explicit flags win")


def build_parser() -> tuple[_Parser, dict[str, argparse.ArgumentParser]]:
    parser = _Parser(prog="cesarolab",
                     description="Orbit laboratory for averaged fixed-point "
                                 "iterations on the Gaussian unit curve.")
    subs = parser.add_subparsers(dest="command", required=True)
    table: dict[str, argparse.ArgumentParser] = {}
    for name, blurb in (
            ("mesh", "build and validate a step mesh, export its table"),
            ("orbit", "build an orbit, export radii and knots"),
            ("cesaro", "compute running-mean norms, export the trace"),
            ("verify", "run a full verification suite, write a JSON report"),
            ("export", "write plot-ready mean-norm series")):
        sp = subs.add_parser(name, help=blurb, description=blurb)
        if name == "verify":
            sp.add_argument("--suite", choices=("harmonic", "block"),
                            default=None, help="which suite to run")
        _add_common(sp, with_kind=(name != "verify"))
        table[name] = sp
    table["verify"].set_defaults(format="json", n=10000, blocks=4)
    return parser, table


def _load_config_defaults(argv: list[str], parser: _Parser,
                          table: dict[str, argparse.ArgumentParser]) -> None:
    path = None
    for i, tok in enumerate(argv):
        if tok == "--config" and i + 1 < len(argv):
            path = argv[i + 1]
        elif tok.startswith("--config="):
            path = tok.split("=", 1)[1]
    if path is None:
        return
    try:
        with open(path, "r", encoding="utf-8") as fh:
            loaded = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        parser.error(f"--config: {exc}")
    if not isinstance(loaded, dict):
        parser.error("--config: expected a JSON object of flag defaults")
    known = {f.name for f in fields(RunConfig)} - {"command"} | {"suite"}
    defaults = {}
    for key, value in loaded.items():
        norm = key.replace("-", "_")
        if norm not in known:
            parser.error(f"--config: unknown key {key!r}")
        defaults[norm] = value
    for sp in table.values():
        sp.set_defaults(**defaults)


def parse_args(argv: list[str] | None = None) -> RunConfig:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser, table = build_parser()
    _load_config_defaults(argv, parser, table)
    ns = parser.parse_args(argv)
    if getattr(ns, "kind", "harmonic") not in ("harmonic", "block"):
        parser.error(f"--kind: invalid choice {ns.kind!r}")
    if ns.format not in ("csv", "json"):
        parser.error(f"--format: invalid choice {ns.format!r}")
    if ns.command == "verify":
        if getattr(ns, "suite", None) is None:
            parser.error("--suite is required for verify")
        if ns.suite not in ("harmonic", "block"):
            parser.error(f"--suite: invalid choice {ns.suite!r}")
    names = {f.name for f in fields(RunConfig)}
    kwargs = {k: v for k, v in vars(ns).items() if k in names and v is not None}
    kwargs["out"] = getattr(ns, "out", None)
    return RunConfig(**kwargs)


# ---------------------------------------------------------------------------
# delimited exports

def _write_rows(path: str, header: list[str], rows) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)


def _write_json(path: str, payload) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, sort_keys=True, indent=2, allow_nan=False)
        fh.write("\n")


def export_orbit_csv(orbit: Orbit, path: str) -> None:
    """Per-index table with header n,t,rho."""
    rows = ((n + 1, repr(float(orbit.mesh.t[n])), repr(float(orbit.rho[n])))
            for n in range(len(orbit)))
    _write_rows(path, ["n", "t", "rho"], rows)


def export_orbit_json(orbit: Orbit, path: str) -> None:
    lo, hi = orbit.rho_inf_bracket
    _write_json(path, {
        "kind": orbit.mesh.kind, "param": orbit.mesh.param,
        "n": len(orbit), "t": orbit.mesh.t.tolist(),
        "rho": orbit.rho.tolist(), "rho_inf_lo": lo, "rho_inf_hi": hi})


def export_trace_csv(orbit: Orbit, trace: CesaroTrace, path: str) -> None:
    """Running-mean trace with header n,t,rho,y_norm."""
    rows = ((n + 1, repr(float(orbit.mesh.t[n])), repr(float(orbit.rho[n])),
             repr(float(trace.y_norm[n]))) for n in range(trace.upto))
    _write_rows(path, ["n", "t", "rho", "y_norm"], rows)


def _block_summary(orbit: Orbit, trace: CesaroTrace) -> list[dict]:
    meta = orbit.meta
    out = []
    for k in range(1, meta.num_blocks + 1):
        j_k = int(meta.unit_ends[k - 1])
        e_k = int(meta.block_ends[k - 1])
        out.append({
            "k": k, "i": int(meta.starts[k - 1]), "j_unit": j_k,
            "j_end": e_k, "Q": int(meta.q[k - 1]),
            "w": int(meta.widths[k - 1]),
            "z_norm": trace.z_norm.get(k, block_mean_norm(orbit, k)),
            "y_at_j_unit": float(trace.y_norm[j_k - 1]),
            "y_at_j_end": float(trace.y_norm[e_k - 1])})
    return out


def export_block_summary_csv(orbit: Orbit, trace: CesaroTrace,
                             path: str) -> None:
    """Per-block digest with header k,i,j_unit,j_end,Q,w,z_norm,y_at_j_unit,y_at_j_end."""
    rows = ((b["k"], b["i"], b["j_unit"], b["j_end"], b["Q"], b["w"],
             repr(b["z_norm"]), repr(b["y_at_j_unit"]), repr(b["y_at_j_end"]))
            for b in _block_summary(orbit, trace))
    _write_rows(path, ["k", "i", "j_unit", "j_end", "Q", "w", "z_norm",
                       "y_at_j_unit", "y_at_j_end"], rows)


def export_trace_json(orbit: Orbit, trace: CesaroTrace, path: str) -> None:
    payload = {
        "kind": orbit.mesh.kind, "param": orbit.mesh.param,
        "n": trace.upto, "t": orbit.mesh.t[:trace.upto].tolist(),
        "rho": orbit.rho[:trace.upto].tolist(),
        "y_norm": trace.y_norm.tolist()}
    if orbit.meta is not None:
        payload["blocks"] = _block_summary(orbit, trace)
    _write_json(path, payload)


def export_plot_data(trace: CesaroTrace, path: str, *,
                     orbit: Orbit | None = None) -> str:
    """Plot-ready series: header n,y_norm; block runs add a tag column
    marking the first-unit index (`unit`) and block end (`end`)."""
    if trace.upto == 0:
        raise ValueError("trace is empty; nothing to export")
    meta = orbit.meta if orbit is not None else None
    if meta is None:
        rows = ((n + 1, repr(float(trace.y_norm[n])))
                for n in range(trace.upto))
        _write_rows(path, ["n", "y_norm"], rows)
        return path
    tags = {}
    for k in range(meta.num_blocks):
        tags[int(meta.unit_ends[k])] = "unit"
        tags[int(meta.block_ends[k])] = "end"
    rows = ((n + 1, repr(float(trace.y_norm[n])), tags.get(n + 1, ""))
            for n in range(trace.upto))
    _write_rows(path, ["n", "y_norm", "tag"], rows)
    return path


# ---------------------------------------------------------------------------
# command pipelines

def _default_out(config: RunConfig) -> str:
    if config.command == "verify":
        return f"suite_{config.suite}_report.{config.format}"
    return f"{config.command}_{config.kind}.{config.format}"


def _announce(path: str) -> None:
    print(f"wrote {path}")


def _maybe_render(config: RunConfig, renderer, *args) -> None:
    if config.no_plot:
        return
    try:
        _announce(renderer(*args))
    except Exception as exc:  # figures are best-effort companions
        print(f"warning: figure rendering failed: {exc}", file=sys.stderr)


def _build_pieces(config: RunConfig):
    if config.kind == "harmonic":
        mesh = build_harmonic_mesh(config.delta, config.n)
        meta = None
    else:
        mesh, meta = build_block_mesh(config.q1, config.blocks)
    return mesh, meta


def _sibling(path: str, tag: str) -> str:
    stem, ext = path.rsplit(".", 1) if "." in path else (path, "csv")
    return f"{stem}_{tag}.{ext}"


def run(config: RunConfig) -> int:
    out = config.out or _default_out(config)

    if config.command == "mesh":
        mesh, meta = _build_pieces(config)
        report = validate_mesh(mesh, pair_budget=config.pair_budget,
                               seed=config.seed, threads=config.threads)
        if config.format == "json":
            write_mesh_json(mesh, out, meta)
        else:
            write_mesh_csv(mesh, out, meta)
            if meta is not None:
                blk = _sibling(out, "blocks")
                write_blockmeta_csv(meta, blk)
                _announce(blk)
        _announce(out)
        print(report.summary_line(f"mesh-{config.kind}"))
        _maybe_render(config, render_mesh_figure, mesh,
                      figure_path(out, "mesh"), meta)
        return 0 if report.all_passed else 2

    if config.command == "orbit":
        mesh, meta = _build_pieces(config)
        orbit = build_orbit(mesh, meta, pair_budget=config.pair_budget,
                            seed=config.seed)
        if config.format == "json":
            export_orbit_json(orbit, out)
        else:
            export_orbit_csv(orbit, out)
        _announce(out)
        lo, hi = orbit.rho_inf_bracket
        print(f"ORBIT {config.kind}: N={len(orbit)} "
              f"rho_N={float(orbit.rho[-1])!r} rho_inf_lo={lo!r} "
              f"rho_inf_hi={hi!r}")
        _maybe_render(config, render_mesh_figure, mesh,
                      figure_path(out, "mesh"), meta)
        return 0

    if config.command in ("cesaro", "export"):
        mesh, meta = _build_pieces(config)
        orbit = build_orbit(mesh, meta, pair_budget=config.pair_budget,
                            seed=config.seed)
        trace = cesaro_norms(orbit, len(orbit))
        if meta is not None:
            for k in range(1, meta.num_blocks + 1):
                trace.z_norm[k] = block_mean_norm(orbit, k)
        if config.command == "cesaro":
            if config.format == "json":
                export_trace_json(orbit, trace, out)
            else:
                export_trace_csv(orbit, trace, out)
                if meta is not None:
                    blk = _sibling(out, "blocks")
                    export_block_summary_csv(orbit, trace, blk)
                    _announce(blk)
        else:
            export_plot_data(trace, out, orbit=orbit)
        _announce(out)
        j = int(np.argmin(trace.y_norm))
        print(f"{config.command.upper()} {config.kind}: N={trace.upto} "
              f"min_y_norm={float(trace.y_norm[j])!r} argmin={j + 1}")
        _maybe_render(config, render_trace_figure, orbit, trace,
                      figure_path(out, "trace"))
        return 0

    if config.command == "verify":
        if config.suite == "harmonic":
            report = suite_harmonic(config.delta, config.n, seed=config.seed,
                                    threads=config.threads,
                                    pair_budget=config.pair_budget)
        else:
            report = suite_block(config.q1, config.blocks, seed=config.seed,
                                 threads=config.threads,
                                 pair_budget=config.pair_budget)
        if config.format == "json":
            report.write_json(out)
        else:
            report.write_csv(out)
        _announce(out)
        print(report.summary_line(config.suite))
        for rec in report.failures:
            print(f"FAIL {rec.check_id}: margin={rec.margin!r} "
                  f"tol={rec.tol!r} params={rec.params}")
        _maybe_render(config, render_margin_figure, report,
                      figure_path(out, "margins"))
        return 0 if report.all_passed else 2

    raise ValueError(f"unknown command {config.command!r}")


def main(argv: list[str] | None = None) -> int:
    try:
        config = parse_args(argv)
    except SystemExit as exc:
        code = exc.code
        return code if isinstance(code, int) else (0 if code is None else 1)
    try:
        return run(config)
    except MeshInvalidError as exc:
        print(f"verification failure: {exc}", file=sys.stderr)
        return 2
    except (ValueError, TypeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
