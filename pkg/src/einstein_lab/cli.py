#!/usr/bin/env python3
"""Command-line interface for einstein-lab."""

import argparse
import io
import logging
import sys
from multiprocessing import Pool
from typing import Any, Dict, List, Literal, Optional, Sequence, Tuple

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402
import pandas as pd  # noqa: E402
from pydantic import BaseModel, ConfigDict, Field, ValidationError  # noqa: E402

from .core.conformal import (  # noqa: E402
    DEGENERATION_PATHS,
    boundary_constant_curvature,
    boundary_ends,
    classify_boundary_end,
    degeneration_params,
    degeneration_path,
    default_path_values,
)
from .core.curvature import (  # noqa: E402
    closed_form_riem_norm_sq,
    curvature_at,
    einstein_residual,
    type_d_defect,
)
from .core.errors import EinsteinLabError, PreconditionViolated, UsageError  # noqa: E402
from .core.polyfam import (  # noqa: E402
    CarterRootsParams,
    CMetricParams,
    NakedParams,
    get_family,
    metric_at,
    params_from_json,
    params_to_json,
)
from .core.regularity import Periods, bulk_ends, neck_profile, with_root_gap  # noqa: E402
from .core.rootlab import (  # noqa: E402
    admissible_intervals,
    carter_double_root_constraints,
    cmetric_region,
    region_curves,
    region_scan,
    roots,
    sample_admissible_points,
)
from .core.volume import weyl_l2  # noqa: E402
from .utils.config import config  # noqa: E402
from .utils.helpers import (  # noqa: E402
    dump_json,
    error_line,
    frame_to_csv,
    parse_float_list,
    parse_point,
    setup_logging,
    write_output,
)

logger = logging.getLogger(__name__)

COMMANDS = ("verify", "curvature", "roots", "region", "classify", "sweep", "boundary", "weyl-l2")
CLOSED_FORM_RTOL = 1e-7
NECK_PATH = "neck"

# CLI flag -> parameter field
FAMILY_FLAGS = {
    "a": "a",
    "b": "b",
    "c": "c",
    "d": "d",
    "e": "e",
    "mu": "mu",
    "nu": "nu",
    "E": "E",
    "M": "M",
    "N": "N",
    "alpha": "alpha",
    "p3": "p3",
    "p4": "p4",
    "eps": "eps",
    "alpha1": "alpha1",
    "alpha2": "alpha2",
    "alpha3": "alpha3",
    "alpha4": "alpha4",
}


class _ArgumentParser(argparse.ArgumentParser):
    """Parser that raises instead of exiting, so errors keep the JSON contract."""

    def error(self, message: str):
        raise UsageError(message)


class RunConfig(BaseModel):
    """Validated settings of one CLI invocation."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    command: Literal[
        "verify", "curvature", "roots", "region", "classify", "sweep", "boundary", "weyl-l2"
    ]
    params: Optional[Any] = None
    point: Optional[Tuple[float, float]] = None
    samples: Optional[int] = None
    tol: Optional[float] = None
    rel_tol: float = 0.0
    seed: int = 42
    format: Optional[Literal["json", "csv", "svg"]] = None
    out: Optional[str] = None
    lam: float = -3.0
    periods: Any = None
    mu_range: Tuple[float, float, int] = (0.0, 17.0, 18)
    nu_range: Tuple[float, float, int] = (-1.0, 13.0, 15)
    path: Optional[str] = None
    values: Optional[List[float]] = None
    which: Literal["P", "Q"] = "P"
    with_l2: bool = False
    workers: int = Field(1, ge=1)
    endpoint: Optional[str] = None
    at: Optional[float] = None
    domain: Optional[Tuple[float, float]] = None

    def output_format(self, default: str) -> str:
        return self.format or default


def build_parser() -> argparse.ArgumentParser:
    parser = _ArgumentParser(
        prog="einstein-lab",
        description="Numerical toolkit for toric Poincaré–Einstein metrics",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="""
Examples:
  # Einstein residuals at 50 random admissible points
  einstein-lab verify --family cmetric --mu 16 --nu 8 -n 50

  # Admissible (mu, nu) region as CSV or SVG
  einstein-lab region --mu-range 0,17,18 --nu-range=-1,13,15 --format svg

  # Bulk and boundary ends with smooth periods
  einstein-lab classify --family naked --alpha1 -0.5 --alpha4 3 --auto-periods

  # Cone angle along a degeneration path
  einstein-lab sweep --path cone-to-naked --values=-0.1,-0.01,-0.001
        """,
    )

    family = _ArgumentParser(add_help=False)
    group = family.add_argument_group("family parameters")
    group.add_argument("--family", choices=["pd", "cmetric", "carter", "carter-roots", "naked"])
    group.add_argument("--params", help='JSON such as {"family": "cmetric", "params": {...}}')
    group.add_argument("--a", type=int, choices=[0, 1])
    for flag in ("b", "c", "d", "e", "mu", "nu", "E", "M", "N", "alpha", "p3", "p4", "eps"):
        group.add_argument(f"--{flag}", type=float)
    for flag in ("alpha1", "alpha2", "alpha3", "alpha4"):
        group.add_argument(f"--{flag}", type=float)

    common = _ArgumentParser(add_help=False)
    common.add_argument("--format", choices=["json", "csv", "svg"])
    common.add_argument("--out", help="Output path (default: stdout)")
    common.add_argument("--tol", type=float, help="Tolerance override")
    common.add_argument("--seed", type=int, default=config.default_seed)

    periods = _ArgumentParser(add_help=False)
    periods.add_argument("--period-phi", type=float)
    periods.add_argument("--period-psi", type=float)
    periods.add_argument(
        "--auto-periods", action="store_true", help="Solve for periods that smooth both rods"
    )

    subparsers = parser.add_subparsers(dest="command", help="Available commands")

    verify = subparsers.add_parser(
        "verify", parents=[family, common], help="Einstein and closed-form curvature checks"
    )
    verify.add_argument("-n", type=int, default=50, help="Number of sampled points")
    verify.add_argument("--point", type=parse_point, help="Single point x,y instead of samples")
    verify.add_argument("--lambda", dest="lam", type=float, default=-3.0)

    curvature = subparsers.add_parser(
        "curvature", parents=[family, common], help="Curvature at one point"
    )
    curvature.add_argument("--point", type=parse_point, required=True)
    curvature.add_argument("--lambda", dest="lam", type=float, default=-3.0)

    subparsers.add_parser(
        "roots", parents=[family, common], help="Root structure and admissible intervals"
    )

    region = subparsers.add_parser(
        "region", parents=[common], help="C-metric admissible (mu, nu) region"
    )
    region.add_argument("--mu-range", default="0,17,18", help="lo,hi,count")
    region.add_argument("--nu-range", default="-1,13,15", help="lo,hi,count")

    subparsers.add_parser(
        "classify", parents=[family, common, periods], help="Bulk and boundary ends"
    )

    sweep = subparsers.add_parser(
        "sweep", parents=[family, common, periods], help="Neck or degeneration sweeps"
    )
    sweep.add_argument("--path", required=True, choices=[NECK_PATH, *DEGENERATION_PATHS])
    sweep.add_argument("--values", type=parse_float_list, help="Comma-separated path values")
    sweep.add_argument("-n", type=int, default=3, help="Samples when --values is omitted")
    sweep.add_argument("--which", choices=["P", "Q"], default="P")
    sweep.add_argument("--with-l2", action="store_true", help="Add a weyl_l2 column")
    sweep.add_argument(
        "--rel-tol",
        type=float,
        default=config.sweep_rel_tolerance,
        help="Relative tolerance of the weyl_l2 column",
    )
    sweep.add_argument(
        "--workers", type=int, default=1, help="Processes for degeneration sweeps"
    )

    boundary = subparsers.add_parser(
        "boundary", parents=[family, common, periods], help="Boundary end classification"
    )
    boundary.add_argument("--endpoint", help="Endpoint value, 'lo' or 'hi' (default: all)")
    boundary.add_argument("--at", type=float, help="Also report boundary curvature at x")

    l2 = subparsers.add_parser(
        "weyl-l2", parents=[family, common, periods], help="L² norm of the Weyl tensor"
    )
    l2.add_argument("--domain", type=parse_point, help="lo,hi of the diagonal interval")
    l2.add_argument("--rel-tol", type=float, default=0.0)

    return parser


# Argument resolution


def resolve_params(args: argparse.Namespace):
    """Family parameters from --params JSON or --family plus parameter flags.

    Raises:
        UsageError: neither --params nor --family given
        pydantic.ValidationError: fields that do not belong to the family
    """
    if getattr(args, "params", None):
        return params_from_json(args.params)
    if not getattr(args, "family", None):
        raise UsageError("a family is required: use --family or --params")
    data: Dict[str, Any] = {"family": args.family}
    for flag, field in FAMILY_FLAGS.items():
        value = getattr(args, flag, None)
        if value is not None:
            data[field] = value
    return params_from_json(data)


def resolve_cli_periods(args: argparse.Namespace) -> Periods:
    if getattr(args, "auto_periods", False):
        return "auto"
    phi, psi = getattr(args, "period_phi", None), getattr(args, "period_psi", None)
    if phi is None and psi is None:
        return None
    if phi is None or psi is None:
        raise UsageError("--period-phi and --period-psi must be given together")
    return (phi, psi)


def _grid_range(text: str) -> Tuple[float, float, int]:
    values = parse_float_list(text)
    if len(values) != 3 or values[2] < 0 or values[2] != int(values[2]):
        raise UsageError(f"expected lo,hi,count with a non-negative integer count, got {text!r}")
    return values[0], values[1], int(values[2])


def build_run_config(args: argparse.Namespace) -> RunConfig:
    command = args.command
    data: Dict[str, Any] = {
        "command": command,
        "format": args.format,
        "out": args.out,
        "tol": args.tol,
        "seed": args.seed,
    }
    degeneration = command == "sweep" and args.path != NECK_PATH
    if degeneration and not (args.params or args.family):
        data["params"] = None
    elif command != "region":
        data["params"] = resolve_params(args)
    if command in ("classify", "sweep", "boundary", "weyl-l2"):
        data["periods"] = resolve_cli_periods(args)
    if command in ("verify", "curvature"):
        data["point"] = args.point
        data["lam"] = args.lam
    if command in ("verify", "sweep"):
        data["samples"] = args.n
    if command == "region":
        data["mu_range"] = _grid_range(args.mu_range)
        data["nu_range"] = _grid_range(args.nu_range)
    if command == "sweep":
        data.update(
            path=args.path,
            values=args.values,
            which=args.which,
            with_l2=args.with_l2,
            workers=args.workers,
            rel_tol=args.rel_tol,
        )
    if command == "boundary":
        data.update(endpoint=args.endpoint, at=args.at)
    if command == "weyl-l2":
        data.update(domain=args.domain, rel_tol=args.rel_tol)
    return RunConfig(**data)


# Rendering


def _render_svg(fig) -> str:
    buffer = io.StringIO()
    with plt.rc_context({"svg.hashsalt": "einstein-lab", "svg.fonttype": "none"}):
        fig.savefig(buffer, format="svg", metadata={"Date": None})
    plt.close(fig)
    return buffer.getvalue()


def _emit(
    run: RunConfig,
    payload: Dict[str, Any],
    table: Optional[pd.DataFrame] = None,
    figure=None,
) -> None:
    fmt = run.output_format("json")
    if fmt == "csv":
        if table is None:
            raise UsageError(f"{run.command} has no CSV output")
        text = frame_to_csv(table)
    elif fmt == "svg":
        if figure is None:
            raise UsageError(f"{run.command} has no SVG output")
        text = _render_svg(figure())
    else:
        text = dump_json(payload)
    write_output(text, run.out)


def _family_header(params) -> Dict[str, Any]:
    return {} if params is None else params_to_json(params)


# Commands


def run_verify_mode(run: RunConfig) -> int:
    """Einstein residual and closed-form checks; 1 when any check fails."""
    tol = run.tol if run.tol is not None else config.verify_tolerance
    params = run.params
    if run.point is not None:
        points = [run.point]
    else:
        points = sample_admissible_points(params, run.samples or 50, seed=run.seed)
    rows = []
    for point in points:
        m = metric_at(params, point)
        curv = curvature_at(m)
        residual = einstein_residual(m, run.lam, curv)
        closed = closed_form_riem_norm_sq(params, point)
        closed_err = None if closed is None else abs(curv.riem_norm_sq - closed) / abs(closed)
        rows.append(
            {
                "point": point,
                "einstein_residual": residual,
                "riem_norm_sq": curv.riem_norm_sq,
                "weyl_norm_sq": curv.weyl_norm_sq,
                "norm_gap": curv.riem_norm_sq - curv.weyl_norm_sq,
                "closed_form_riem_norm_sq": closed,
                "closed_form_rel_error": closed_err,
                "type_d_defect_sd": type_d_defect(curv.weyl_sd_eigs),
                "type_d_defect_asd": type_d_defect(curv.weyl_asd_eigs),
                "passed": residual <= tol
                and (closed_err is None or closed_err <= CLOSED_FORM_RTOL),
            }
        )
    passed = all(r["passed"] for r in rows)
    max_residual = max((r["einstein_residual"] for r in rows), default=0.0)
    logger.info(f"verify: {len(rows)} points, max residual {max_residual:.3g}, passed={passed}")

    table = pd.DataFrame(
        [
            {"x": r["point"][0], "y": r["point"][1], **{k: v for k, v in r.items() if k != "point"}}
            for r in rows
        ]
    )
    payload = {
        "command": "verify",
        **_family_header(params),
        "lambda": run.lam,
        "tolerance": tol,
        "seed": run.seed,
        "points": rows,
        "max_residual": max_residual,
        "passed": passed,
    }
    _emit(run, payload, table)
    return 0 if passed else 1


def run_curvature_mode(run: RunConfig) -> int:
    m = metric_at(run.params, run.point)
    curv = curvature_at(m)
    payload = {
        "command": "curvature",
        **_family_header(run.params),
        "point": run.point,
        "metric": m.values(),
        "einstein_residual": einstein_residual(m, run.lam, curv),
        "closed_form_riem_norm_sq": closed_form_riem_norm_sq(run.params, run.point),
        **curv.to_dict(),
    }
    _emit(run, payload)
    return 0


def run_roots_mode(run: RunConfig) -> int:
    params = run.params
    family = get_family(params)
    payload: Dict[str, Any] = {
        "command": "roots",
        **_family_header(params),
        "P": roots(family.P).to_dict(),
        "Q": roots(family.Q).to_dict(),
        "components": [c.to_dict() for c in admissible_intervals(params)],
    }
    if isinstance(params, CMetricParams):
        payload["region"] = cmetric_region(params.mu, params.nu).to_dict()
    if isinstance(params, CarterRootsParams):
        payload["double_root_between"] = carter_double_root_constraints(params.p3, params.p4)
    _emit(run, payload)
    return 0


def _region_figure(grid: pd.DataFrame, mu_values: np.ndarray):
    def figure():
        fig, ax = plt.subplots(figsize=(6, 5))
        if len(mu_values):
            fine = np.linspace(float(mu_values.min()), float(mu_values.max()), 400)
            curves = region_curves(fine)
            lower = np.maximum(curves["nu=mu-2sqrt(mu)"], curves["nu=-mu"])
            upper = np.minimum(curves["nu=2sqrt(mu)"], curves["nu=2mu"])
            ax.fill_between(
                fine, lower, upper, where=upper > lower, color="0.85", label="admissible"
            )
            for name in curves.columns[1:]:
                ax.plot(fine, curves[name], linewidth=1.0, label=name)
        if not grid.empty:
            inside = grid[grid["inside"]]
            ax.scatter(inside["mu"], inside["nu"], s=6, color="black", label="inside samples")
        ax.set_xlabel("mu")
        ax.set_ylabel("nu")
        ax.legend(loc="upper left", fontsize="small")
        return fig

    return figure


def run_region_mode(run: RunConfig) -> int:
    mu_values = np.linspace(*run.mu_range[:2], run.mu_range[2])
    nu_values = np.linspace(*run.nu_range[:2], run.nu_range[2])
    grid = region_scan(mu_values, nu_values)
    curves = region_curves(mu_values)
    if grid.empty:
        table = pd.DataFrame(columns=[*grid.columns, *curves.columns[1:]])
        inside = 0
    else:
        table = grid.merge(curves, on="mu", how="left")
        inside = int(grid["inside"].sum())
    logger.info(f"region: {len(grid)} grid points, {inside} inside")
    payload = {
        "command": "region",
        "grid": grid.to_dict(orient="records"),
        "curves": curves.to_dict(orient="records"),
    }
    run = run.model_copy(update={"format": run.output_format("csv")})
    _emit(run, payload, table, _region_figure(grid, mu_values))
    return 0


def _require_periods(run: RunConfig) -> Periods:
    if run.periods is None:
        raise PreconditionViolated(
            "periods", "give --auto-periods or both --period-phi and --period-psi"
        )
    return run.periods


def run_classify_mode(run: RunConfig) -> int:
    params = run.params
    periods = _require_periods(run)
    family = get_family(params)
    bulk = bulk_ends(params, periods)
    boundary = [r.model_dump() for r in boundary_ends(params, periods)]
    components = admissible_intervals(params)
    payload = {
        "command": "classify",
        **_family_header(params),
        "roots": {"P": roots(family.P).to_dict(), "Q": roots(family.Q).to_dict()},
        "components": [c.to_dict() for c in components],
        "regions": [list(r) for c in components for r in c.regions],
        "bulk": bulk,
        "boundary": boundary,
    }
    _emit(run, payload, pd.DataFrame(boundary) if boundary else pd.DataFrame())
    return 0


def _gap_root(params, which: str) -> float:
    """Location of the double root that the ε-path opens up."""
    poly = get_family(with_root_gap(params, 0.0, which)).polynomial(which)
    doubles = [r for r, m in roots(poly).real_roots if m >= 2]
    if not doubles:
        raise PreconditionViolated("double-root", f"{which} has no double root at zero gap")
    return doubles[0]


def _neck_sweep(run: RunConfig) -> pd.DataFrame:
    eps_values = run.values or [0.02 * 2.0 ** (-k) for k in range(run.samples or 3)]
    near = _gap_root(run.params, run.which)
    samples = neck_profile(run.params, near, eps_values, run.which)
    return pd.DataFrame([s.model_dump() for s in samples])


SweepTask = Tuple[str, float, Optional[NakedParams], Periods, bool, Optional[float], float]


def _degeneration_row(task: SweepTask) -> Dict[str, Any]:
    """One sweep row. Must stay at module level for worker processes."""
    path, value, base, periods, with_l2, tol, rel_tol = task
    (report,) = degeneration_path(path, [value], base=base, periods=periods)
    row: Dict[str, Any] = {
        "parameter": report.parameter,
        "endpoint": report.endpoint,
        "kind": report.kind,
        "pattern": f"{report.pattern[0]},{report.pattern[1]}",
        "fitted_exponent": report.fitted_exponent,
        "model_exponent": report.model_exponent,
        "rel_error": report.rel_error,
        "angle": report.angle,
        "closed_form_angle": report.closed_form_angle,
        "nominal_angle": report.nominal_angle,
    }
    if with_l2 and value == 0.0:
        # the naked limit reaches xy = 1 at the domain corner, where the L² norm diverges
        logger.info(f"{path}: no weyl_l2 at the naked limit")
        row["weyl_l2"] = None
    elif with_l2:
        params = degeneration_params(path, value, base)
        row["weyl_l2"] = weyl_l2(params, tol=tol, rel_tol=rel_tol).value
    return row


def _degeneration_sweep(run: RunConfig, periods: Periods) -> pd.DataFrame:
    if run.params is not None and not isinstance(run.params, NakedParams):
        raise PreconditionViolated("naked-family", f"{run.path} runs on the naked subfamily")
    values = run.values or default_path_values(run.path, run.samples or 3)
    tasks = [
        (run.path, float(v), run.params, periods, run.with_l2, run.tol, run.rel_tol)
        for v in values
    ]
    if run.workers > 1 and len(tasks) > 1:
        # Pool.map keeps input order
        with Pool(min(run.workers, len(tasks))) as pool:
            rows = pool.map(_degeneration_row, tasks)
    else:
        rows = [_degeneration_row(task) for task in tasks]
    return pd.DataFrame(rows)


def _sweep_figure(table: pd.DataFrame, x: str, y: str, log: bool):
    def figure():
        fig, ax = plt.subplots(figsize=(6, 4))
        data = table.dropna(subset=[y])
        ax.plot(data[x], data[y], marker="o")
        if log:
            ax.set_xscale("log")
            ax.set_yscale("log")
        ax.set_xlabel(x)
        ax.set_ylabel(y)
        return fig

    return figure


def run_sweep_mode(run: RunConfig) -> int:
    if run.path == NECK_PATH:
        table = _neck_sweep(run)
        figure = _sweep_figure(table, "eps", "min_circumference", log=True)
    else:
        periods = run.periods if run.periods is not None else "auto"
        table = _degeneration_sweep(run, periods)
        figure = _sweep_figure(table, "parameter", "nominal_angle", log=False)
    logger.info(f"sweep {run.path}: {len(table)} samples")
    payload = {
        "command": "sweep",
        **_family_header(run.params),
        "path": run.path,
        "rows": table.to_dict(orient="records"),
    }
    run = run.model_copy(update={"format": run.output_format("csv")})
    _emit(run, payload, table, figure)
    return 0


def _endpoints(run: RunConfig) -> Optional[List[float]]:
    if run.endpoint is None:
        return None
    if run.endpoint in ("lo", "hi"):
        components = admissible_intervals(run.params)
        if not components:
            raise PreconditionViolated("admissible-interval", "no admissible component")
        return [components[0].lo if run.endpoint == "lo" else components[-1].hi]
    try:
        return [float(run.endpoint)]
    except ValueError as exc:
        raise UsageError(
            f"--endpoint must be a number, 'lo' or 'hi', got {run.endpoint!r}"
        ) from exc


def run_boundary_mode(run: RunConfig) -> int:
    periods = _require_periods(run)
    chosen = _endpoints(run)
    if chosen is None:
        reports = boundary_ends(run.params, periods)
    else:
        reports = [classify_boundary_end(run.params, t, periods) for t in chosen]
    ends = [r.model_dump() for r in reports]
    payload: Dict[str, Any] = {"command": "boundary", **_family_header(run.params), "ends": ends}
    if run.at is not None:
        payload["curvature"] = boundary_constant_curvature(run.params, run.at)
    _emit(run, payload, pd.DataFrame(ends))
    return 0


def run_weyl_l2_mode(run: RunConfig) -> int:
    result = weyl_l2(
        run.params, domain=run.domain, periods=run.periods, tol=run.tol, rel_tol=run.rel_tol
    )
    payload = {"command": "weyl-l2", **_family_header(run.params), **result.model_dump()}
    _emit(run, payload, pd.DataFrame([result.model_dump()]))
    return 0


MODES = {
    "verify": run_verify_mode,
    "curvature": run_curvature_mode,
    "roots": run_roots_mode,
    "region": run_region_mode,
    "classify": run_classify_mode,
    "sweep": run_sweep_mode,
    "boundary": run_boundary_mode,
    "weyl-l2": run_weyl_l2_mode,
}


def main(argv: Optional[Sequence[str]] = None) -> int:
    """Run one command.

    Returns:
        0 on success, 1 when verification fails, 2 on any error
    """
    parser = build_parser()
    setup_logging(level=config.log_level, log_file=config.log_file)
    try:
        args = parser.parse_args(argv)
        if not args.command:
            parser.print_help(sys.stderr)
            raise UsageError(f"a command is required: one of {', '.join(COMMANDS)}")
        run = build_run_config(args)
        logger.debug(f"running {run.command} with {run.model_dump(exclude={'params'})}")
        return MODES[run.command](run)
    except ValidationError as exc:
        logger.error(f"invalid parameters: {exc}")
        print(error_line(exc, code="validation"), file=sys.stderr)
    except (EinsteinLabError, ValueError) as exc:
        logger.error(f"Error: {exc}")
        print(error_line(exc), file=sys.stderr)
    return 2


if __name__ == "__main__":
    sys.exit(main())
