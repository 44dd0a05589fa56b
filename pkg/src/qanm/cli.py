"""Command-line experiment runner.

    qanm <experiment> [options]      run one experiment, write data + manifest
    qanm compare A.json B.json       side-by-side metrics of two manifests

Options may also come from a ``key = value`` file given with ``--config``;
flags on the command line win.
"""

from __future__ import annotations

import argparse
import csv
import inspect
import json
import logging
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .experiments import EXPERIMENTS, ExperimentResult

log = logging.getLogger("qanm")

EXIT_SOLVER = 1
EXIT_CONFIG = 2

# flag name -> (experiment keyword, parser)
OPTIONS = {
    "solver": ("solver", str),
    "shots": ("n_s", float),
    "shot_mode": ("shot_mode", str),
    "order": ("N", int),
    "eps_d": ("eps_d", float),
    "eps_j": ("eps_J", float),
    "omega": ("omega", float),
    "seed": ("seed", int),
    "reps": ("reps", int),
    "max_steps": ("max_steps", int),
    "layers": ("layers", int),
    "maxfev": ("maxfev", int),
    "lambda_target": ("lambda_target", float),
}
OUTPUT_KEYS = {"out", "format", "plot"}


class ConfigError(ValueError):
    pass


def _float_list(text: str) -> tuple[float, ...]:
    return tuple(float(t) for t in text.split(",") if t.strip())


def read_config_file(path: str | Path) -> dict[str, str]:
    """Parse ``key = value`` lines; ``#`` starts a comment."""
    out = {}
    try:
        lines = Path(path).read_text().splitlines()
    except OSError as exc:
        raise ConfigError(f"cannot read config file: {exc}") from exc
    for n, line in enumerate(lines, 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{n}: expected key = value")
        key, value = (s.strip() for s in line.split("=", 1))
        out[key.replace("-", "_").lower()] = value
    return out


def resolve_config(experiment: str, args: argparse.Namespace) -> tuple[dict, dict]:
    """Merge file values and flags into experiment keywords and output settings."""
    raw = read_config_file(args.config) if args.config else {}
    for key in list(OPTIONS) + list(OUTPUT_KEYS):
        val = getattr(args, key, None)
        if val not in (None, False):
            raw[key] = val
    unknown = set(raw) - set(OPTIONS) - OUTPUT_KEYS
    if unknown:
        raise ConfigError(f"unknown option(s): {', '.join(sorted(unknown))}")

    accepted = inspect.signature(EXPERIMENTS[experiment]).parameters
    kwargs = {}
    for key, (name, conv) in OPTIONS.items():
        if key not in raw:
            continue
        if experiment == "shot-sweep" and key == "shots":
            kwargs["n_s_values"] = _float_list(str(raw[key]))
            continue
        if name not in accepted:
            raise ConfigError(f"--{key.replace('_', '-')} does not apply to {experiment}")
        try:
            kwargs[name] = conv(raw[key])
        except ValueError as exc:
            raise ConfigError(f"bad value for {key}: {raw[key]!r}") from exc

    mode = kwargs.get("shot_mode", accepted["shot_mode"].default if "shot_mode" in accepted else "exact")
    if mode not in ("exact", "binomial", "normal"):
        raise ConfigError(f"unknown shot mode {mode!r}")
    solver = kwargs.get("solver", accepted["solver"].default if "solver" in accepted else None)
    stochastic = mode != "exact" and solver not in ("direct", "classical-jacobi")
    if stochastic and "seed" not in kwargs:
        raise ConfigError("a seed is required for sampled shot modes (--seed)")
    for key in ("reps", "N", "max_steps", "layers", "maxfev"):
        if key in kwargs and kwargs[key] < 1:
            raise ConfigError(f"{key} must be positive")
    for key in ("eps_d", "eps_J", "n_s"):
        if key in kwargs and not kwargs[key] > 0:
            raise ConfigError(f"{key} must be positive")
    if "omega" in kwargs and not 0.0 < kwargs["omega"] <= 1.0:
        raise ConfigError("omega must lie in (0, 1]")

    output = {
        "out": Path(str(raw.get("out", "results"))),
        "format": str(raw.get("format", "csv")),
        "plot": str(raw.get("plot", False)).lower() in ("1", "true", "yes"),
    }
    if output["format"] not in ("csv", "json"):
        raise ConfigError(f"unknown format {output['format']!r}")
    return kwargs, output


def _jsonable(value):
    if isinstance(value, dict):
        return {k: _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if isinstance(value, Path):
        return str(value)
    if isinstance(value, np.generic):
        return value.item()
    return value


def _write_table(path: Path, header, rows, fmt: str) -> None:
    if fmt == "csv":
        with path.open("w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(header)
            writer.writerows([[repr(float(v)) if isinstance(v, (float, np.floating)) else v for v in r]
                              for r in rows])
    else:
        path.write_text(json.dumps({"header": list(header), "rows": _jsonable(rows)}, indent=1) + "\n")


def write_outputs(experiment: str, result: ExperimentResult, output: dict) -> list[str]:
    out: Path = output["out"]
    out.mkdir(parents=True, exist_ok=True)
    ext = output["format"]
    artifacts = []
    for name, table in result.tables.items():
        p = out / f"{experiment}_{name}.{ext}"
        _write_table(p, table.header, table.rows, ext)
        artifacts.append(p.name)
    p = out / f"{experiment}_metrics.{ext}"
    _write_table(p, ["metric", "value"], [[k, v] for k, v in result.metrics.items()], ext)
    artifacts.append(p.name)
    if output["plot"] and "path" in result.tables:
        artifacts.append(_plot_path(out / f"{experiment}_path.svg", result.tables["path"]))
    return artifacts


def _plot_path(path: Path, table) -> str:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    data = np.array([[float(v) for v in row[:4]] for row in table.rows])
    fig, ax = plt.subplots(figsize=(5, 4))
    for step in np.unique(data[:, 0]):
        sel = data[:, 0] == step
        ax.plot(data[sel, 3], data[sel, 2], lw=1.5, label=f"step {int(step)}")
    ax.set_xlabel(table.header[3])
    ax.set_ylabel("lambda")
    if np.unique(data[:, 0]).size <= 10:
        ax.legend(fontsize="small")
    fig.tight_layout()
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)
    return path.name


def run(experiment: str, kwargs: dict, output: dict) -> dict:
    start = time.perf_counter()
    result = EXPERIMENTS[experiment](**kwargs)
    wall = time.perf_counter() - start
    artifacts = write_outputs(experiment, result, output)
    manifest = {
        "experiment": experiment,
        "version": __version__,
        "config": _jsonable(kwargs),
        "wall_time_s": wall,
        "totals": {"linear_solves": result.linear_solves, "circuit_executions": result.circuit_executions},
        "metrics": _jsonable(result.metrics),
        "artifacts": artifacts,
    }
    (output["out"] / f"{experiment}_manifest.json").write_text(json.dumps(manifest, indent=2) + "\n")
    return manifest


def compare(a: dict, b: dict) -> list[tuple[str, float, float, float]]:
    """Rows of (quantity, a, b, a / b) over the totals and shared metrics."""
    if a.get("experiment") != b.get("experiment"):
        raise ConfigError(f"cannot compare {a.get('experiment')!r} with {b.get('experiment')!r}")
    flat_a = {**{f"total_{k}": v for k, v in a.get("totals", {}).items()}, **a.get("metrics", {})}
    flat_b = {**{f"total_{k}": v for k, v in b.get("totals", {}).items()}, **b.get("metrics", {})}
    rows = []
    for key in flat_a:
        if key not in flat_b:
            continue
        va, vb = float(flat_a[key]), float(flat_b[key])
        ratio = va / vb if vb != 0 else (1.0 if va == 0 else float("inf"))
        rows.append((key, va, vb, ratio))
    return rows


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qanm", description="Quantum ANM experiment runner")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in EXPERIMENTS:
        p = sub.add_parser(name, help=(EXPERIMENTS[name].__doc__ or "").strip().split("\n")[0])
        p.add_argument("--config", help="key = value file; flags override it")
        p.add_argument("--solver", choices=["direct", "classical-jacobi", "q-jacobi", "vqls"])
        p.add_argument("--shots", help="shots per circuit (comma list for shot-sweep)")
        p.add_argument("--shot-mode", choices=["exact", "binomial", "normal"])
        p.add_argument("--order", help="Taylor order N")
        p.add_argument("--eps-d", help="ANM accuracy parameter")
        p.add_argument("--eps-j", help="Jacobi tolerance")
        p.add_argument("--omega", help="Jacobi relaxation factor")
        p.add_argument("--seed")
        p.add_argument("--reps")
        p.add_argument("--max-steps")
        p.add_argument("--layers", help="VQLS ansatz layers")
        p.add_argument("--maxfev", help="VQLS cost evaluation budget")
        p.add_argument("--lambda-target")
        p.add_argument("--out", help="output directory (default: results)")
        p.add_argument("--format", choices=["csv", "json"])
        p.add_argument("--plot", action="store_true", help="also write an SVG of the path")
    p = sub.add_parser("compare", help="compare two run manifests")
    p.add_argument("manifest_a")
    p.add_argument("manifest_b")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "compare":
            manifests = []
            for path in (args.manifest_a, args.manifest_b):
                try:
                    manifests.append(json.loads(Path(path).read_text()))
                except (OSError, json.JSONDecodeError) as exc:
                    raise ConfigError(f"cannot read manifest {path}: {exc}") from exc
            rows = compare(*manifests)
            writer = csv.writer(sys.stdout, lineterminator="\n")
            writer.writerow(["quantity", "a", "b", "ratio_a_over_b"])
            writer.writerows(rows)
            return 0
        kwargs, output = resolve_config(args.command, args)
    except ConfigError as exc:
        print(f"qanm: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        manifest = run(args.command, kwargs, output)
    except (ArithmeticError, RuntimeError, np.linalg.LinAlgError, ValueError) as exc:
        print(f"qanm: {args.command} failed: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    print(json.dumps({"metrics": manifest["metrics"], "totals": manifest["totals"]}, indent=2))
    return 0


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
