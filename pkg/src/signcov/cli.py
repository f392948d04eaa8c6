"""Command-line front end.

Subcommands:

* ``estimate``    -- location + SSCM variants for a numeric CSV file.
* ``oracle``      -- population SSCM of a model (closed form p = 2, or MC).
* ``asymptotics`` -- limit-covariance bundle for a numeric CSV file.
* ``table`` / ``qq`` / ``sweep`` -- the Monte Carlo experiment families,
  driven by a JSON config file.

Exit codes: 0 success, 2 input/config error, 3 degenerate data,
4 unsupported combination. The environment variable SIGNCOV_SEED overrides
the default seed when no --seed is given explicitly.

Matrices are serialized as {"dims": [rows, cols], "data": [row-major]}.
JSON floats use Python repr, so parsing the output back recovers every
value exactly.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
from pathlib import Path

import numpy as np

from .asymptotics import compute_bundle, fixed_location_cov, location_sensitivity
from .errors import (
    DegenerateSampleError,
    InvalidInputError,
    UnsupportedCombinationError,
)
from .location import sample_mean, spatial_median
from .models import (
    EllipticalModel,
    SeededStream,
    population_sscm_closed_p2,
    population_sscm_mc,
)
from .scatter import ScatterMatrix, sscm_plugin, sscm_star, ssscm
from .simharness import (
    ExperimentConfig,
    run_experiment,
    write_metadata_json,
    write_result_csv,
)

SEED_ENV_VAR = "SIGNCOV_SEED"

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_DEGENERATE = 3
EXIT_UNSUPPORTED = 4


def _matrix_json(M) -> dict:
    M = np.asarray(M, dtype=float)
    return {"dims": list(M.shape), "data": M.ravel(order="C").tolist()}


def read_numeric_csv(path) -> np.ndarray:
    """Strict numeric CSV reader with header auto-detection.

    The first row is treated as a header iff any of its fields fails to
    parse as a float. Any non-numeric field in a data row is a hard error
    (silently dropping rows would bias the estimators).
    """
    path = Path(path)
    if not path.is_file():
        raise InvalidInputError(f"input file not found: {path}")
    with open(path, newline="") as fh:
        raw = [(k + 1, row) for k, row in enumerate(csv.reader(fh)) if row]
    if not raw:
        raise InvalidInputError(f"{path}: no data rows")

    def parse_row(lineno, row):
        out = []
        for col, field in enumerate(row, 1):
            try:
                out.append(float(field))
            except ValueError:
                raise InvalidInputError(
                    f"{path}: line {lineno}, column {col}: "
                    f"not numeric: {field.strip()!r}"
                ) from None
        return out

    # first row is a header iff any of its fields is non-numeric
    data = raw
    try:
        [float(field) for field in raw[0][1]]
    except ValueError:
        data = raw[1:]
        if not data:
            raise InvalidInputError(f"{path}: header but no data rows") from None
    rows = [parse_row(lineno, row) for lineno, row in data]

    widths = {len(r) for r in rows}
    if len(widths) != 1:
        raise InvalidInputError(f"{path}: rows have inconsistent column counts")
    return np.asarray(rows, dtype=float)


def _parse_fixed(text: str, p: int) -> np.ndarray:
    try:
        vals = [float(v) for v in text.split(",")]
    except ValueError:
        raise InvalidInputError(f"--fixed must be comma-separated numbers: {text!r}")
    if len(vals) != p:
        raise InvalidInputError(f"--fixed has {len(vals)} coordinates, data has {p}")
    return np.asarray(vals)


def _scatter_json(s: ScatterMatrix) -> dict:
    return {
        "matrix": _matrix_json(s.matrix),
        "variant": s.variant,
        "n_effective": s.n_effective,
        "location_used": None
        if s.location_used is None
        else np.asarray(s.location_used).tolist(),
    }


def _emit(payload, out_path, fmt: str):
    if fmt == "json":
        text = json.dumps(payload, indent=2) + "\n"
    else:  # csv: section,i,j,value rows for matrices; section,k,,value for vectors
        lines = ["section,i,j,value"]

        def add_matrix(section, mat):
            dims = mat["dims"]
            data = mat["data"]
            for r in range(dims[0]):
                for c in range(dims[1]):
                    lines.append(f"{section},{r},{c},{data[r * dims[1] + c]!r}")

        def add_vector(section, vec):
            for k, v in enumerate(vec):
                lines.append(f"{section},{k},,{v!r}")

        loc = payload["location"]
        add_vector("location", loc["estimate"])
        add_matrix("sscm", payload["sscm"]["matrix"])
        if payload.get("starred"):
            add_matrix("starred", payload["starred"]["matrix"])
        if payload.get("symmetrized"):
            add_matrix("symmetrized", payload["symmetrized"]["matrix"])
        text = "\n".join(lines) + "\n"
    if out_path is None:
        sys.stdout.write(text)
    else:
        with open(out_path, "w") as fh:
            fh.write(text)


def cmd_estimate(args) -> int:
    X = read_numeric_csv(args.input)
    if X.shape[0] < 2 or X.shape[1] < 2:
        raise InvalidInputError(
            f"need at least 2 rows and 2 columns, got {X.shape[0]}x{X.shape[1]}"
        )
    t = None
    if args.location == "fixed":
        if args.fixed is None:
            raise InvalidInputError('--location fixed requires --fixed "c1,c2,..."')
        t = _parse_fixed(args.fixed, X.shape[1])
    scatter, loc, report = sscm_plugin(X, method=args.location, t=t)

    payload = {
        "location": {
            "estimate": loc.estimate.tolist(),
            "method": loc.method,
            "iterations": loc.iterations,
            "converged": loc.converged,
            "anchored": loc.anchored,
            "objective": loc.objective,
            "degenerate_geometry": loc.degenerate_geometry,
        },
        "sscm": _scatter_json(scatter),
        "coincidence": {
            "n": report.n,
            "n_star": report.n_star,
            "indices_coincident": report.indices_coincident,
        },
        "starred": None,
        "symmetrized": None,
        "asymptotics": None,
    }
    if args.star:
        payload["starred"] = _scatter_json(sscm_star(X, loc.estimate))
    if args.symmetrized:
        payload["symmetrized"] = _scatter_json(ssscm(X))
    if args.asymptotics:
        payload["asymptotics"] = _bundle_payload(X, args.location, loc.estimate)
    _emit(payload, args.out, args.output)
    return EXIT_OK


def _bundle_payload(X, location_method: str, t) -> dict:
    """Full bundle for the mean location; for any other location only the
    fixed-location covariance and the sensitivity apply, so the joint and
    plug-in pieces are null."""
    if location_method == "mean":
        bundle = compute_bundle(X, t)
        out = bundle.to_json_dict()
    else:
        out = {
            "fixed_cov": _matrix_json(fixed_location_cov(X, t)),
            "sensitivity": _matrix_json(location_sensitivity(X, t)),
            "joint_cov": None,
            "block_matrix": None,
            "plugin_cov": None,
            "n_used": int(X.shape[0]),
        }
    out["location_used"] = np.asarray(t).tolist()
    out["location_method"] = location_method
    return out


def cmd_oracle(args) -> int:
    model = EllipticalModel.from_json(args.model)
    if args.method == "closed":
        if model.p != 2:
            raise UnsupportedCombinationError(
                "closed-form oracle is available only for p = 2"
            )
        s = population_sscm_closed_p2(model.V)
        payload = {
            "matrix": _matrix_json(s.matrix),
            "se": None,
            "method": "closed",
            "n_draws": None,
        }
    else:
        seed = _resolve_seed(args.seed, default=0)
        s, se = population_sscm_mc(model, args.mc_size, SeededStream(seed, 0))
        payload = {
            "matrix": _matrix_json(s.matrix),
            "se": _matrix_json(se),
            "method": "mc",
            "n_draws": args.mc_size,
        }
    sys.stdout.write(json.dumps(payload, indent=2) + "\n")
    return EXIT_OK


def cmd_asymptotics(args) -> int:
    X = read_numeric_csv(args.input)
    if X.shape[0] < 2 or X.shape[1] < 2:
        raise InvalidInputError(
            f"need at least 2 rows and 2 columns, got {X.shape[0]}x{X.shape[1]}"
        )
    if args.location == "mean":
        t = sample_mean(X).estimate
    elif args.location == "median":
        t = spatial_median(X).estimate
    else:
        if args.fixed is None:
            raise InvalidInputError('--location fixed requires --fixed "c1,c2,..."')
        t = _parse_fixed(args.fixed, X.shape[1])
    payload = _bundle_payload(X, args.location, t)
    text = json.dumps(payload, indent=2) + "\n"
    if args.out is None:
        sys.stdout.write(text)
    else:
        with open(args.out, "w") as fh:
            fh.write(text)
    return EXIT_OK


def _resolve_seed(explicit, default):
    """--seed beats SIGNCOV_SEED beats the provided default."""
    if explicit is not None:
        return explicit
    env = os.environ.get(SEED_ENV_VAR)
    if env is not None:
        try:
            return int(env)
        except ValueError:
            raise InvalidInputError(f"{SEED_ENV_VAR} must be an integer: {env!r}")
    return default


def cmd_experiment(args) -> int:
    path = Path(args.config)
    if not path.is_file():
        raise InvalidInputError(f"config file not found: {path}")
    try:
        raw = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise InvalidInputError(f"{path}: invalid JSON: {exc}") from None
    config = ExperimentConfig.from_json_dict(raw)
    if config.statistic != args.statistic:
        raise InvalidInputError(
            f"config statistic {config.statistic!r} does not match "
            f"subcommand {args.statistic!r}"
        )
    seed = _resolve_seed(args.seed, default=config.master_seed)
    if seed != config.master_seed:
        config = ExperimentConfig.from_json_dict(
            {**config.to_json_dict(), "master_seed": seed}
        )
    if args.fast:
        config = config.fast_profile()

    result = run_experiment(config, workers=args.workers)

    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    csv_path = out_dir / f"{config.statistic}.csv"
    meta_path = out_dir / f"{config.statistic}_metadata.json"
    write_result_csv(result, csv_path)
    write_metadata_json(result, meta_path)

    _print_summary(result)
    sys.stdout.write(f"artifacts: {csv_path} {meta_path}\n")
    return EXIT_OK


def _print_summary(result) -> None:
    if result.statistic == "qq":
        sys.stdout.write("n method sigma2 ks\n")
        for c in result.cells:
            sys.stdout.write(f"{c.n} {c.method} {c.sigma2:.6g} {c.ks:.6g}\n")
    else:
        header = (
            "p n method mean se\n"
            if result.statistic == "table"
            else "p gamma n method mean_abs_error se\n"
        )
        sys.stdout.write(header)
        for c in result.cells:
            lead = f"{c.p} " if c.gamma is None else f"{c.p} {c.gamma:g} "
            sys.stdout.write(f"{lead}{c.n} {c.method} {c.mean:.6g} {c.se:.6g}\n")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="signcov",
        description="Spatial sign covariance matrices with estimated location.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    est = sub.add_parser("estimate", help="estimate location and SSCM from a CSV file")
    est.add_argument("input", help="numeric CSV (header auto-detected)")
    est.add_argument(
        "--location", choices=["mean", "median", "fixed"], default="median"
    )
    est.add_argument("--fixed", help='fixed location as "c1,c2,..."')
    est.add_argument("--star", action="store_true", help="include the trace-1 variant")
    est.add_argument(
        "--symmetrized", action="store_true", help="include the pairwise-difference SSCM"
    )
    est.add_argument(
        "--asymptotics", action="store_true", help="include the limit-covariance bundle"
    )
    est.add_argument("--output", choices=["json", "csv"], default="json")
    est.add_argument("--out", help="output path (default: stdout)")

    orc = sub.add_parser("oracle", help="population SSCM of a model")
    orc.add_argument("--model", required=True, help="model JSON object")
    orc.add_argument("--method", choices=["closed", "mc"], default="closed")
    orc.add_argument("--mc-size", type=int, default=1_000_000)
    orc.add_argument("--seed", type=int, default=None)

    asy = sub.add_parser("asymptotics", help="limit-covariance bundle from a CSV file")
    asy.add_argument("input", help="numeric CSV (header auto-detected)")
    asy.add_argument(
        "--location", choices=["mean", "median", "fixed"], default="mean"
    )
    asy.add_argument("--fixed", help='fixed location as "c1,c2,..."')
    asy.add_argument("--out", help="output path (default: stdout)")

    for name, help_text in [
        ("table", "spherical-error table experiment"),
        ("qq", "element-error quantile experiment"),
        ("sweep", "singularity-family error sweep"),
    ]:
        exp = sub.add_parser(name, help=help_text)
        exp.add_argument("--config", required=True, help="experiment config JSON")
        exp.add_argument("--seed", type=int, default=None)
        exp.add_argument("--workers", type=int, default=1)
        exp.add_argument("--fast", action="store_true", help="1/10 replications")
        exp.add_argument("--out", default=".", help="output directory")
        exp.set_defaults(statistic=name)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    handlers = {
        "estimate": cmd_estimate,
        "oracle": cmd_oracle,
        "asymptotics": cmd_asymptotics,
        "table": cmd_experiment,
        "qq": cmd_experiment,
        "sweep": cmd_experiment,
    }
    try:
        return handlers[args.command](args)
    except UnsupportedCombinationError as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_UNSUPPORTED
    except DegenerateSampleError as exc:
        sys.stderr.write(f"error: degenerate sample: {exc}\n")
        return EXIT_DEGENERATE
    except InvalidInputError as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_INPUT
    except OSError as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_INPUT


def entrypoint():
    sys.exit(main())


if __name__ == "__main__":
    entrypoint()
