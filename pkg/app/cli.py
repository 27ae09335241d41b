"""
Command-line front end: `vni-lab <command> [options]`.

Every command writes one CSV or JSON report. Exit codes: 0 success,
2 invalid usage or input, 3 unreadable data, 4 a certified invariant failed.
"""
import argparse
import json
import logging
import sys
from pathlib import Path
from typing import Any, Literal, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, ValidationError

from app.constants import (
    DYADIC_L1,
    EXIT_DATA,
    EXIT_INVARIANT,
    EXIT_OK,
    EXIT_USAGE,
    REMARK_C3_BOUND,
    REMARK_CHAIN,
    SPLIT_KERNEL_L1,
)
from app.core.errors import DataError, InvalidInputError, InvariantViolation, LabError
from app.core.logging import setup_logging
from app.core.parallel import ordered_map
from app.reports.writer import write_report
from app.services.besov import besov_report
from app.services.hankel import foguel_from_json, verify_foguel_vn
from app.services.kernels import (
    dyadic_w,
    fejer,
    l1_norm,
    splitting_kernel_l1,
    trapezoid,
    trapezoid_l1_bound,
)
from app.services.kmn import kmn_bounds
from app.services.operators import eval_poly_tuple, operator_norm, random_commuting_tuple
from app.services.polydisc import (
    BoundReport,
    cdn_bounds,
    chain_constants,
    counterexample_gallery,
    gallery_rows,
    monomial_shift_sequence,
    split,
)
from app.services.polynomial import band_limits, load_poly, random_poly, sup_norm

logger = logging.getLogger(__name__)


class RunConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    command: Literal["kernel-norms", "kmn", "split", "besov", "foguel-verify", "cdn", "gallery", "vn-random"]
    seed: int = 0
    out: Optional[Path] = None
    format: Literal["csv", "json"] = "csv"
    header: bool = True
    points: Optional[int] = Field(default=None, description="Torus grid points per axis.")
    quad: Optional[int] = Field(default=None, description="Radial quadrature nodes.")
    tolerances: dict[str, float] = Field(default_factory=dict)
    options: dict[str, Any] = Field(default_factory=dict)


def _tol(config: RunConfig, key: str, default: float) -> float:
    return config.tolerances.get(key, default)


# --- Commands ---

def _kernel_norms(config: RunConfig) -> tuple[list[dict], list[str]]:
    opts = config.options
    rows, failures = [], []
    tol = _tol(config, "l1", 1e-9)

    def record(family: str, params: str, value: float, bound: float, exact: bool = False):
        holds = bool(abs(value - bound) <= tol if exact else value <= bound + tol)
        rows.append({"family": family, "params": params, "l1": float(value), "bound": float(bound), "holds": holds})
        if not holds:
            failures.append(f"{family}({params}): {value:.12g} vs {bound:.12g}")

    for n in range(1, opts.get("fejer_max", 256) + 1):
        record("fejer", str(n), l1_norm(fejer(n)), 1.0, exact=True)
    for n in range(0, opts.get("w_max", 12) + 1):
        record("dyadic_w", str(n), l1_norm(dyadic_w(n)), DYADIC_L1)
    rng = np.random.default_rng(config.seed)
    for _ in range(opts.get("trapezoids", 200)):
        k, l, m, n = sorted(rng.choice(np.arange(0, 400), size=4, replace=False).tolist())
        record("trapezoid", f"{k},{l},{m},{n}", l1_norm(trapezoid(k, l, m, n)), trapezoid_l1_bound(k, l, m, n))
    split_max = opts.get("split_max", 512)
    for d in opts.get("dims", [3, 4]):
        seen = set()
        for n in range(1, split_max + 1):
            for m in range(0, n + 1):
                key = (m // (2 * d), n)
                if key in seen:
                    continue
                seen.add(key)
                record("splitting", f"d={d},m={m},n={n}", splitting_kernel_l1(d, m, n), SPLIT_KERNEL_L1)
    return rows, failures


def _kmn_pair(m: int, n: int, with_hankel: bool):
    try:
        return kmn_bounds(m, n, with_hankel=with_hankel), None
    except InvariantViolation as e:
        return None, str(e)


def _kmn(config: RunConfig) -> tuple[list, list[str]]:
    opts = config.options
    pairs = [(m, n) for n in range(opts.get("n_max", 64) + 1) for m in range(min(n, opts.get("m_max", 64)) + 1)]
    with_hankel = opts.get("hankel", True)
    results = ordered_map(lambda mn: _kmn_pair(mn[0], mn[1], with_hankel), pairs)
    rows = [bounds for bounds, _ in results if bounds is not None]
    failures = [failure for _, failure in results if failure is not None]
    return rows, failures


class SplitSummary(BaseModel):
    dim: int
    degree: int
    m: int
    n: int
    cutoff: int
    factors: list[float]
    chain: list[float]
    within_chain: bool
    within_remark_chain: Optional[bool]
    coefficient_deviation: float
    residual_deviation: float
    bands_ok: bool


def _split(config: RunConfig) -> tuple[list, list[str]]:
    opts = config.options
    p = load_poly(opts["poly"])
    result = split(p, opts.get("m"), opts.get("n"))
    chain = chain_constants(p.dim)
    scale = max((abs(c) for c in p.coeffs.values()), default=1.0)
    low, high = band_limits(p)
    summary = SplitSummary(
        dim=p.dim, degree=p.degree, cutoff=result.cutoff,
        m=low if opts.get("m") is None else opts["m"],
        n=high if opts.get("n") is None else opts["n"],
        factors=result.sup_norm_factors, chain=chain,
        within_chain=all(f <= c * (1 + 1e-12) for f, c in zip(result.sup_norm_factors, chain)),
        within_remark_chain=(
            all(f <= c for f, c in zip(result.sup_norm_factors, REMARK_CHAIN)) if p.dim == 3 else None
        ),
        coefficient_deviation=result.coefficient_deviation,
        residual_deviation=result.residual_deviation,
        bands_ok=result.bands_ok,
    )
    failures = []
    if result.coefficient_deviation > 1e-12 * scale or result.residual_deviation > 1e-12 * scale:
        failures.append("split coefficient identity")
    if not result.bands_ok:
        failures.append("split band limits")
    if not summary.within_chain:
        failures.append("split sup-norm factors exceed the triangle-inequality chain")
    return [summary], failures


def _besov(config: RunConfig) -> tuple[list, list[str]]:
    opts = config.options
    p = load_poly(opts["poly"])
    rows = [besov_report(p, float(a), config.quad) for a in opts.get("a", [0.0, 1.0, 2.0])]
    return rows, []


def _foguel_verify(config: RunConfig) -> tuple[list, list[str]]:
    opts = config.options
    try:
        payload = json.loads(Path(opts["tuple"]).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as e:
        raise DataError(f"Cannot read Foguel tuple {opts['tuple']}: {e}") from e
    F = foguel_from_json(payload)
    p = load_poly(opts["poly"])
    report = verify_foguel_vn(p, F)
    slack = _tol(config, "foguel", 1e-4)
    failures = []
    if report.ratio > report.bound + slack:
        failures.append(f"Foguel ratio {report.ratio:.9f} exceeds {report.bound}")
    if report.corner_norm > report.corner_bound * (1 + slack):
        failures.append(f"derivative corner {report.corner_norm:.9f} exceeds {report.corner_bound:.9f}")
    return [report], failures


def _cdn(config: RunConfig) -> tuple[list, list[str]]:
    opts = config.options
    d = opts.get("d", 3)
    n_max = opts.get("n_max", 512)
    rows, failures = [], []
    log_constants = []
    for n in range(1, n_max + 1):
        for report in cdn_bounds(d, n):
            rows.append({"d": d, "n": n, **report.model_dump()})
            if report.name != "pipeline":
                continue
            log_constants.append(report.details["log_constant"])
            if d == 3 and report.value > REMARK_C3_BOUND:
                failures.append(f"C(3,{n}) pipeline {report.value:.6g} exceeds {REMARK_C3_BOUND}")
    if d >= 4 and log_constants:
        summary = BoundReport(
            name="pipeline_log_constant", value=max(log_constants), certified=False,
            provenance=f"largest pipeline / log(n+1)^{d - 3} over n <= {n_max}",
            details={"last": log_constants[-1]},
        )
        rows.append({"d": d, "n": n_max, **summary.model_dump()})

    if opts.get("poly"):
        p = load_poly(opts["poly"])
        sequence = monomial_shift_sequence(p, range(opts.get("shift_max", 64) + 1))
        for report in sequence:
            rows.append({"d": p.dim, "n": p.degree, **report.model_dump()})
        values = [r.value for r in sequence]
        if any(b > a * (1 + 1e-12) for a, b in zip(values, values[1:])):
            failures.append("monomial shift bounds are not nonincreasing in m")
    return rows, failures


def _gallery(config: RunConfig) -> tuple[list, list[str]]:
    entries = counterexample_gallery(config.points or 1024)
    rows = gallery_rows(entries)
    failures = []
    if config.options.get("verify", False):
        for row in rows:
            if abs(row.norm - row.exact_norm) > 1e-9:
                failures.append(f"{row.name}: ||p(T)|| = {row.norm:.15g} differs from {row.exact_norm:.15g}")
            if row.certified_sup > 5.001 or row.ratio < 1.039:
                failures.append(f"{row.name}: certified sup {row.certified_sup:.6g}, ratio {row.ratio:.6g}")
            if row.max_commutator > 1e-14 or row.max_contraction > 1.0 + 1e-12:
                failures.append(f"{row.name}: tuple is not an exactly commuting family of contractions")
    return rows, failures


class VnRandomRow(BaseModel):
    instance: int
    scheme: str
    d: int
    degree: int
    norm: float
    certified_sup: float
    ratio: float
    uncertainty: float


def _vn_random(config: RunConfig) -> tuple[list, list[str]]:
    opts = config.options
    d = opts.get("d", 2)
    count = opts.get("count", 100)
    size = opts.get("size", 6)
    degree = opts.get("degree", 6)
    schemes = ["diagonal", "single-generator", "direct-sum"]

    def run_instance(i: int) -> VnRandomRow:
        scheme = schemes[i % len(schemes)]
        T = random_commuting_tuple(d, size, config.seed + i, scheme)
        p = random_poly(d, degree, np.random.default_rng(config.seed + 10_000 + i))
        evaluation = eval_poly_tuple(p, T)
        sup = sup_norm(p, config.points).certified_upper
        norm = operator_norm(evaluation.value)
        return VnRandomRow(
            instance=i, scheme=scheme, d=d, degree=degree, norm=norm,
            certified_sup=sup, ratio=norm / sup, uncertainty=evaluation.uncertainty,
        )

    rows = ordered_map(run_instance, range(count))
    failures = []
    if d <= 2:
        slack = _tol(config, "vn", 1e-6)
        failures = [f"instance {r.instance}: ratio {r.ratio:.12f}" for r in rows if r.ratio > 1 + slack]
    return rows, failures


HANDLERS = {
    "kernel-norms": _kernel_norms,
    "kmn": _kmn,
    "split": _split,
    "besov": _besov,
    "foguel-verify": _foguel_verify,
    "cdn": _cdn,
    "gallery": _gallery,
    "vn-random": _vn_random,
}


def run(config: RunConfig) -> int:
    """Run one command and write its report; raises InvariantViolation when a certified check fails."""
    logger.info(f"Running {config.command} (seed={config.seed})")
    rows, failures = HANDLERS[config.command](config)
    write_report(rows, config.out, config.format, config.header, config.command)
    if failures:
        for failure in failures:
            logger.error(f"Invariant failed: {failure}")
        raise InvariantViolation(f"{len(failures)} certified check(s) failed in {config.command}")
    return EXIT_OK


# --- Argument parsing ---

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="vni-lab", description="Numerical laboratory for von Neumann's inequality")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--out", type=Path, default=None, help="Report file (default: stdout)")
    common.add_argument("--format", choices=["csv", "json"], default="csv")
    common.add_argument("--no-header", action="store_true", help="Omit the timestamp header")
    common.add_argument("--points", type=int, default=None, help="Torus grid points per axis")
    common.add_argument("--quad", type=int, default=None, help="Radial quadrature nodes")
    common.add_argument("--tol", action="append", default=[], metavar="KEY=VALUE", help="Tolerance override")
    common.add_argument("--log-level", default=None)

    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("kernel-norms", parents=[common], help="L1 norms of the kernel families")
    p.add_argument("--fejer-max", type=int, default=256)
    p.add_argument("--w-max", type=int, default=12)
    p.add_argument("--trapezoids", type=int, default=200)
    p.add_argument("--split-max", type=int, default=512)
    p.add_argument("--dims", type=int, nargs="+", default=[3, 4])

    p = sub.add_parser("kmn", parents=[common], help="Bounds on K(m, n) over a grid")
    p.add_argument("--m-max", type=int, default=64)
    p.add_argument("--n-max", type=int, default=64)
    p.add_argument("--no-hankel", dest="hankel", action="store_false")

    p = sub.add_parser("split", parents=[common], help="Band splitting of a polynomial")
    p.add_argument("--poly", required=True)
    p.add_argument("--m", type=int, default=None)
    p.add_argument("--n", type=int, default=None)

    p = sub.add_parser("besov", parents=[common], help="Dyadic and integral Besov norms")
    p.add_argument("--poly", required=True)
    p.add_argument("--a", type=float, nargs="+", default=[0.0, 1.0, 2.0])

    p = sub.add_parser("foguel-verify", parents=[common], help="Foguel-Hankel tuple check")
    p.add_argument("--tuple", required=True)
    p.add_argument("--poly", required=True)

    p = sub.add_parser("cdn", parents=[common], help="Bounds on C(d, n)")
    p.add_argument("--d", type=int, default=3)
    p.add_argument("--n-max", type=int, default=512)
    p.add_argument("--poly", default=None, help="Polynomial in 3 variables for the monomial shift sequence")
    p.add_argument("--shift-max", type=int, default=64)

    p = sub.add_parser("gallery", parents=[common], help="Counterexample gallery")
    p.add_argument("--verify", action="store_true")

    p = sub.add_parser("vn-random", parents=[common], help="Random von Neumann / Ando suites")
    p.add_argument("--d", type=int, default=2)
    p.add_argument("--count", type=int, default=100)
    p.add_argument("--size", type=int, default=6)
    p.add_argument("--degree", type=int, default=6)
    return parser


GLOBAL_KEYS = {"command", "seed", "out", "format", "no_header", "points", "quad", "tol", "log_level"}


def config_from_args(args: argparse.Namespace) -> RunConfig:
    tolerances = {}
    for item in args.tol:
        key, sep, value = item.partition("=")
        if not sep:
            raise InvalidInputError(f"--tol expects KEY=VALUE, got {item!r}")
        try:
            tolerances[key] = float(value)
        except ValueError as e:
            raise InvalidInputError(f"--tol {item!r}: {e}") from e
    options = {k: v for k, v in vars(args).items() if k not in GLOBAL_KEYS}
    return RunConfig(
        command=args.command, seed=args.seed, out=args.out, format=args.format,
        header=not args.no_header, points=args.points, quad=args.quad,
        tolerances=tolerances, options=options,
    )


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_USAGE if e.code else EXIT_OK
    setup_logging(args.log_level)
    try:
        return run(config_from_args(args))
    except ValidationError as e:
        logger.error(f"Invalid configuration: {e}")
        return EXIT_USAGE
    except InvariantViolation as e:
        logger.error(str(e))
        return EXIT_INVARIANT
    except DataError as e:
        logger.error(f"Data error: {e}")
        return EXIT_DATA
    except LabError as e:
        logger.error(str(e))
        return e.exit_code if e.exit_code in (EXIT_USAGE, EXIT_DATA, EXIT_INVARIANT) else EXIT_USAGE
    except OSError as e:
        logger.error(f"I/O error: {e}")
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
