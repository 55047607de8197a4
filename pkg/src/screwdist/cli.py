"""Command-line interface: ``screwdist {generate,fit,eval,calibrate,sample}``.

Exit codes: 0 success, 2 usage error, 3 data error, 4 fit did not converge.
Every command that writes ``OUT`` also writes ``OUT.manifest.json``.
"""
from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import sys
import time
from importlib import metadata
from pathlib import Path

import numpy as np
from scipy.stats import special_ortho_group

from .distributions import MatrixVMFParams, joint_sample, mvmf_sample
from .estimation import METHODS, FitConfig, FitReport, fit_method
from .geometry import RigidTransform
from .metrics import evaluate
from .special import DEFAULT_TRUNCATION, LAMBDA_MAX
from .synthetic import (
    CATEGORIES,
    DEFAULT_N_CONFIGS,
    Frustum,
    NoiseSpec,
    SceneSampler,
    dataset_array,
    dumps_dataset,
    generate_dataset,
    read_dataset,
)
from .validation import InvalidLabel

SCHEMA_VERSION = 1
EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_NONCONVERGED = 0, 2, 3, 4
CALIBRATION_COLUMNS = ("method", "noise_lambda", "noise_beta", "lambda1_hat", "lambda2_hat",
                       "lambda_mean_hat", "beta_mnorm_hat", "beta_theta_hat", "beta_d_hat", "converged")
DEFAULT_GRID = "none,15,12,10"


class DataError(Exception):
    """Unreadable or inconsistent input files."""


class UsageError(Exception):
    """Invalid flag combination."""


def tool_version() -> str:
    try:
        return metadata.version("artifact")
    except metadata.PackageNotFoundError:
        return "0+unknown"


def sha256_file(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


def _write_text(path, text: str) -> None:
    path = Path(path)
    if path.parent and not path.parent.exists():
        path.parent.mkdir(parents=True)
    path.write_text(text, encoding="utf-8")


def write_manifest(out, args, inputs, outputs, started: float) -> None:
    config = {k: v for k, v in vars(args).items() if k != "func"}
    manifest = {
        "schema_version": SCHEMA_VERSION,
        "command": args.command,
        "config": config,
        "seed": config.get("seed"),
        "tool_version": tool_version(),
        "inputs": {str(p): sha256_file(p) for p in inputs},
        "outputs": {str(p): sha256_file(p) for p in outputs},
        "wall_time_s": time.time() - started,
    }
    _write_text(f"{out}.manifest.json", json.dumps(manifest, indent=2, sort_keys=True) + "\n")


# ---------------------------------------------------------------------------
# argument helpers


def _floats(text: str, n: int | None = None, name: str = "value") -> tuple:
    try:
        vals = tuple(float(v) for v in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"{name}: expected comma-separated numbers, got {text!r}")
    if n is not None and len(vals) not in (1, n):
        raise argparse.ArgumentTypeError(f"{name}: expected 1 or {n} values")
    return vals


def _stage_budget(text: str) -> tuple:
    try:
        vals = tuple(int(v) for v in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"stage budget must be integers, got {text!r}")
    if not vals or any(v <= 0 for v in vals):
        raise argparse.ArgumentTypeError("stage budgets must be positive")
    return vals


def _positive(text: str) -> float:
    v = float(text)
    if not v > 0:
        raise argparse.ArgumentTypeError(f"expected a positive number, got {text}")
    return v


def _noise(lam, beta, spread) -> NoiseSpec | None:
    noise = NoiseSpec(
        axis_lambda=None if lam is None else (lam * 2 if len(lam) == 1 else lam),
        scalar_precision=None if beta is None else (beta * 3 if len(beta) == 1 else beta),
        bisector_spread=spread,
    )
    return None if noise.is_none else noise


def single_articulation_pose(seed: int, frustum: Frustum | None = None) -> RigidTransform:
    """Object pose shared by every sequence of a single-articulation dataset."""
    rng = np.random.default_rng([seed, 0x5EED])
    frustum = frustum or Frustum()
    return RigidTransform(special_ortho_group.rvs(3, random_state=rng), frustum.sample(rng))


def _sampler(args) -> SceneSampler:
    kw = dict(n_configs=args.n_configs, max_skip=args.max_skip)
    if args.pitch is not None:
        kw["pitch"] = (args.pitch, args.pitch)
    if args.single_articulation:
        kw["camera_pose"] = single_articulation_pose(args.seed)
    return SceneSampler(**kw)


def _load_dataset(path):
    try:
        ds = read_dataset(path)
    except OSError as exc:
        raise DataError(f"cannot read dataset {path}: {exc}") from exc
    except ValueError as exc:
        raise DataError(str(exc)) from exc
    if not ds:
        raise DataError(f"dataset {path} is empty")
    return ds


def _fit_config(args) -> FitConfig:
    budgets = args.stage_budget
    params = FitConfig.__dataclass_fields__["stage_params"].default
    if len(budgets) != len(params):
        raise UsageError(f"--stage-budget needs {len(params)} values")
    return FitConfig(stage_budgets=budgets, learning_rate=args.lr, tol=args.tol,
                     lambda_max=args.lambda_max, truncation=args.truncation, penalty=args.penalty)


# ---------------------------------------------------------------------------
# commands


def cmd_generate(args) -> int:
    unknown = [c for c in args.category if c not in CATEGORIES]
    if unknown:
        raise UsageError(f"unknown categories {unknown}; choose from {CATEGORIES}")
    if args.pitch is not None and set(args.category) != {"helical"}:
        raise UsageError("--pitch applies only to --category helical")
    noise = _noise(args.noise_lambda, args.noise_beta, args.bisector_spread)
    ds = generate_dataset(args.category, args.count, noise, args.seed, _sampler(args))
    _write_text(args.out, dumps_dataset(ds))
    return EXIT_OK


def report_to_json(report: FitReport, dataset_path) -> str:
    blob = report.to_dict()
    blob["schema_version"] = SCHEMA_VERSION
    blob["dataset"] = str(dataset_path)
    blob["dataset_sha256"] = sha256_file(dataset_path)
    return json.dumps(blob, indent=2, sort_keys=True) + "\n"


def load_report(path) -> tuple[FitReport, dict]:
    try:
        blob = json.loads(Path(path).read_text(encoding="utf-8"))
        return FitReport.from_dict(blob), blob
    except (OSError, ValueError, KeyError, TypeError) as exc:
        raise DataError(f"cannot read fit report {path}: {exc}") from exc


def cmd_fit(args) -> int:
    cfg = _fit_config(args)
    ds = _load_dataset(args.dataset)
    try:
        X = dataset_array(ds)
        report = fit_method(args.method, X, cfg)
    except InvalidLabel as exc:
        raise DataError(str(exc)) from exc
    _write_text(args.out, report_to_json(report, args.dataset))
    if not report.converged:
        print(f"warning: {args.method} fit did not converge within budget", file=sys.stderr)
        return EXIT_NONCONVERGED
    return EXIT_OK


def cmd_eval(args) -> int:
    report, blob = load_report(args.report)
    digest = sha256_file(args.dataset)
    if blob.get("dataset_sha256") != digest:
        raise DataError(f"report {args.report} was fitted on a different dataset than {args.dataset}")
    ds = _load_dataset(args.dataset)
    try:
        metrics = evaluate(report, ds, against=args.against)
    except ValueError as exc:
        raise DataError(str(exc)) from exc
    metrics.metadata.update(method=report.method, report_sha256=sha256_file(args.report),
                            dataset_sha256=digest)
    outs = []
    if args.format in ("csv", "both"):
        outs.append(Path(f"{args.out}.csv"))
        _write_text(outs[-1], metrics.to_csv())
    if args.format in ("json", "both"):
        outs.append(Path(f"{args.out}.json"))
        _write_text(outs[-1], metrics.to_json() + "\n")
    args._outputs = outs
    return EXIT_OK


def _grid(text: str) -> list:
    out = []
    for tok in text.split(","):
        tok = tok.strip().lower()
        if tok == "none":
            out.append(None)
        else:
            try:
                v = float(tok)
            except ValueError:
                raise argparse.ArgumentTypeError(f"grid entries must be 'none' or numbers, got {tok!r}")
            if not v > 0:
                raise argparse.ArgumentTypeError("grid concentrations must be positive")
            out.append(v)
    return out


def calibration_table(grid, methods, count: int, seed: int, beta: float, config: FitConfig,
                      n_configs: int = DEFAULT_N_CONFIGS) -> list[dict]:
    """Fit every method on a single-articulation dataset per noise level.

    The same scene and random streams are reused across the grid, so rows
    differ only by the injected noise.
    """
    sampler = SceneSampler(n_configs=n_configs, camera_pose=single_articulation_pose(seed))
    rows = []
    for lam in grid:
        noise = None if lam is None else NoiseSpec((lam, lam), (beta, beta, beta))
        X = dataset_array(generate_dataset("revolute", count, noise, seed, sampler))
        for method in methods:
            rep = fit_method(method, X, config)
            d = rep.distribution
            l1, l2 = rep.lambdas
            rows.append({
                "method": method, "noise_lambda": "none" if lam is None else lam,
                "noise_beta": "none" if lam is None else beta,
                "lambda1_hat": float(l1), "lambda2_hat": float(l2), "lambda_mean_hat": float((l1 + l2) / 2),
                "beta_mnorm_hat": float(d.m_norm.precision), "beta_theta_hat": float(d.theta_precision),
                "beta_d_hat": float(d.d_precision), "converged": bool(rep.converged),
            })
    return rows


def calibration_csv(rows) -> str:
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=CALIBRATION_COLUMNS, lineterminator="\n")
    w.writeheader()
    for r in rows:
        w.writerow({k: (repr(v) if isinstance(v, float) else v) for k, v in r.items()})
    return buf.getvalue()


def cmd_calibrate(args) -> int:
    methods = [m.strip() for m in args.methods.split(",")]
    bad = [m for m in methods if m not in METHODS]
    if bad:
        raise UsageError(f"unknown methods {bad}; choose from {METHODS}")
    rows = calibration_table(args.grid, methods, args.count, args.seed, args.beta, _fit_config(args),
                             args.n_configs)
    _write_text(args.out, calibration_csv(rows))
    return EXIT_OK


def cmd_sample(args) -> int:
    rng = np.random.default_rng(args.seed)
    lines = []
    if args.report is not None:
        report, _ = load_report(args.report)
        if report.method == "vm-soft-ortho":
            raise DataError("sampling is supported for matrix-vMF reports only")
        rows = joint_sample(report.distribution, rng, args.count) if args.count else np.empty((0, 0))
        for r in rows:
            k = (len(r) - 7) // 2
            lines.append({"X": np.column_stack([r[0:3], r[3:6]]).tolist(), "m_norm": r[6],
                          "theta": r[7:7 + k].tolist(), "d": r[7 + k:].tolist()})
    else:
        lam = args.lam
        lam = lam * 2 if len(lam) == 1 else lam
        try:
            params = MatrixVMFParams(args.alpha, args.beta, args.gamma, args.omega, *lam)
        except ValueError as exc:
            raise UsageError(str(exc)) from exc
        for X in mvmf_sample(params, rng, args.count, burn_in=args.burn_in, thin=args.thin):
            lines.append({"X": X.tolist()})
    _write_text(args.out, "".join(json.dumps(l, sort_keys=True) + "\n" for l in lines))
    return EXIT_OK


# ---------------------------------------------------------------------------
# parser


def _add_fit_options(p):
    p.add_argument("--stage-budget", type=_stage_budget, default=(300, 300, 2000),
                   help="comma-separated iteration budgets of the three stages")
    p.add_argument("--lr", type=_positive, default=0.05, help="base step size")
    p.add_argument("--tol", type=_positive, default=1e-10, help="relative NLL tolerance")
    p.add_argument("--lambda-max", type=_positive, default=LAMBDA_MAX, help="singular value cap")
    p.add_argument("--truncation", type=int, default=DEFAULT_TRUNCATION, help="series order of the normalizer")
    p.add_argument("--penalty", type=float, default=1.0, help="orthogonality penalty (vm-soft-ortho)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="screwdist",
                                     description="Generate, fit and evaluate distributions over screw displacements.")
    parser.add_argument("--version", action="version", version=tool_version())
    sub = parser.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", help="write a synthetic JSONL dataset")
    g.add_argument("--category", type=lambda s: s.split(","), default=["revolute"],
                   help=f"comma-separated categories from {CATEGORIES}; sequences cycle through them")
    g.add_argument("--count", type=int, default=50)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--n-configs", type=int, default=DEFAULT_N_CONFIGS)
    g.add_argument("--pitch", type=_positive, help="fixed pitch (m/rad), helical only")
    g.add_argument("--max-skip", type=int, default=0, help="random frame skipping, 0 disables")
    g.add_argument("--single-articulation", action="store_true",
                   help="one scene pose for all sequences (only schedules and noise vary)")
    g.add_argument("--noise-lambda", type=lambda s: _floats(s, 2, "--noise-lambda"),
                   help="matrix-vMF label noise concentration(s)")
    g.add_argument("--noise-beta", type=lambda s: _floats(s, 3, "--noise-beta"),
                   help="truncated-normal precisions for |m|, theta, d")
    g.add_argument("--bisector-spread", type=_positive, help="joint l/m rotation noise (rad)")
    g.add_argument("--out", required=True)
    g.set_defaults(func=cmd_generate)

    f = sub.add_parser("fit", help="fit a screw distribution to a dataset")
    f.add_argument("dataset")
    f.add_argument("--method", choices=METHODS, default="dustnet")
    _add_fit_options(f)
    f.add_argument("--out", required=True)
    f.set_defaults(func=cmd_fit)

    e = sub.add_parser("eval", help="metrics of a fit report's prediction on a dataset")
    e.add_argument("--report", required=True)
    e.add_argument("--dataset", required=True)
    e.add_argument("--format", choices=("csv", "json", "both"), default="both")
    e.add_argument("--against", choices=("clean", "label"), default="clean")
    e.add_argument("--out", required=True, help="output prefix; writes PREFIX.csv and/or PREFIX.json")
    e.set_defaults(func=cmd_eval)

    c = sub.add_parser("calibrate", help="fitted concentration versus injected label noise")
    c.add_argument("--grid", type=_grid, default=_grid(DEFAULT_GRID))
    c.add_argument("--beta", type=_positive, default=50.0, help="scalar noise precision")
    c.add_argument("--count", type=int, default=200)
    c.add_argument("--seed", type=int, default=0)
    c.add_argument("--n-configs", type=int, default=DEFAULT_N_CONFIGS)
    c.add_argument("--methods", default="dustnet,direct-f")
    _add_fit_options(c)
    c.add_argument("--out", required=True)
    c.set_defaults(func=cmd_calibrate)

    s = sub.add_parser("sample", help="draw from a matrix vMF or a fitted report")
    s.add_argument("--lambda", dest="lam", type=lambda t: _floats(t, 2, "--lambda"), default=(0.0,))
    s.add_argument("--alpha", type=float, default=0.0)
    s.add_argument("--beta", type=float, default=0.0)
    s.add_argument("--gamma", type=float, default=0.0)
    s.add_argument("--omega", type=float, default=0.0)
    s.add_argument("--report", help="sample the fitted joint distribution instead")
    s.add_argument("--count", type=int, default=100)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--burn-in", type=int, default=50)
    s.add_argument("--thin", type=int, default=5)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_sample)
    return parser


def _inputs(args) -> list:
    return [Path(p) for p in (getattr(args, "dataset", None), getattr(args, "report", None)) if p]


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    started = time.time()
    for name in ("count",):
        if getattr(args, name, 0) < 0:
            parser.error(f"--{name} must be >= 0")
    if args.command in ("generate", "calibrate") and args.count < 1:
        parser.error("--count must be >= 1")
    try:
        code = args.func(args)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"{parser.prog}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (DataError, OSError) as exc:
        print(f"{parser.prog}: data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    outputs = getattr(args, "_outputs", None) or [Path(args.out)]
    manifest_base = args.out
    inputs = _inputs(args)
    if hasattr(args, "_outputs"):
        del args._outputs
    write_manifest(manifest_base, args, inputs, outputs, started)
    return code


if __name__ == "__main__":
    sys.exit(main())
