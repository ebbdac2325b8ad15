from __future__ import annotations

from argparse import ArgumentParser, ArgumentTypeError, Namespace, RawTextHelpFormatter
from pathlib import Path

from gpbound.analysis.constants import (
    DEFAULT_CHECK_BUDGET,
    DEFAULT_GRID_RESOLUTION,
    DEFAULT_MC_BATCH,
    DEFAULT_MC_SAMPLES,
    DEFAULT_NOISE_VAR,
    DEFAULT_RESTARTS,
)
from gpbound.analysis.domain.kernel_model import FamilyKind
from gpbound.analysis.engine.bound_engine import BoundMethod
from gpbound.analysis.engine.box_optimizer import MaximizerKind


class CommandKind:
    FIT = "fit"
    BOUND = "bound"
    VALIDATE = "validate"
    SCENARIO = "scenario"
    CHECK_KERNEL = "check-kernel"


def grid_axis(text: str) -> tuple[float, float, int]:
    """Parses one ``lo:hi:n`` grid axis."""
    parts = text.split(":")
    if len(parts) != 3:
        raise ArgumentTypeError(f"grid axis must look like lo:hi:n, got {text!r}")
    try:
        lo, hi, n = float(parts[0]), float(parts[1]), int(parts[2])
    except ValueError:
        raise ArgumentTypeError(f"grid axis must look like lo:hi:n, got {text!r}") from None
    if n < 1 or hi < lo:
        raise ArgumentTypeError(f"grid axis needs lo <= hi and n >= 1, got {text!r}")
    return lo, hi, n


def _common_parser() -> ArgumentParser:
    common = ArgumentParser(add_help=False)
    common.add_argument(
        "--seed",
        type=int,
        default=None,
        help="single seed all randomness derives from (default: 0, or the scenario config seed)")
    common.add_argument(
        "--threads",
        type=int,
        default=None,
        help="worker threads (default: available cores; GPBOUND_THREADS overrides)")
    common.add_argument(
        "--output-dir",
        type=Path,
        default=None,
        metavar="DIR",
        help="directory for all outputs (default: <user cache>/gpbound/runs/<command>)")
    common.add_argument(
        "-v",
        "--verbose",
        action="store_true",
        help="also echo the audit trail to stderr")
    return common


def _family_args(parser: ArgumentParser, *, required: bool = True) -> None:
    parser.add_argument(
        "--family",
        required=required,
        choices=[k.value for k in FamilyKind],
        help="kernel family")
    parser.add_argument(
        "--p",
        type=int,
        default=None,
        help="degree (poly), shape (rq) or smoothness index 0..2 (matern)")


def create_arg_parser() -> ArgumentParser:
    """
    Creates the argument parser of the ``gpbound`` command line.

    Returns:
        ArgumentParser: The parser with one subparser per command.
    """
    common = _common_parser()
    parser = ArgumentParser(
        prog="gpbound",
        description="mean-square prediction error bounds for misspecified Gaussian process models",
        formatter_class=RawTextHelpFormatter)
    parser.add_argument(
        "--version",
        action="store_true",
        help="print the version and exit")
    sub = parser.add_subparsers(dest="command", metavar="COMMAND")

    # ---- fit ----
    fit = sub.add_parser(
        CommandKind.FIT,
        parents=[common],
        help="fit kernel hyperparameters by maximum marginal likelihood")
    fit.add_argument("data", type=Path, help="training CSV with columns x_1.., y_1..")
    _family_args(fit)
    fit.add_argument(
        "--noise-var",
        type=float,
        default=DEFAULT_NOISE_VAR,
        help=f"measurement-noise variance (default: {DEFAULT_NOISE_VAR})")
    fit.add_argument(
        "--restarts",
        type=int,
        default=DEFAULT_RESTARTS,
        help=f"optimizer restarts (default: {DEFAULT_RESTARTS})")

    # ---- bound ----
    bound = sub.add_parser(
        CommandKind.BOUND,
        parents=[common],
        help="evaluate error bounds over a grid of test points")
    bound.add_argument("estimate", type=Path, help="model.json of the estimated GP")
    bound.add_argument("cands", type=Path, help="candidate-set JSON (list of family/p/lower/upper)")
    bound.add_argument("--truth", type=Path, default=None, help="model.json of the true GP (adds exact_mspe)")
    grid = bound.add_mutually_exclusive_group(required=True)
    grid.add_argument(
        "--grid",
        type=grid_axis,
        action="append",
        metavar="LO:HI:N",
        help="one regular axis per input dimension; repeat for n_x > 1")
    grid.add_argument("--grid-file", type=Path, help="CSV of test points with columns x_1..")
    bound.add_argument(
        "--method",
        choices=[m.value for m in BoundMethod],
        default=BoundMethod.BOTH.value,
        help="which bounds to evaluate (default: both)")
    bound.add_argument(
        "--maximizer",
        choices=[m.value for m in MaximizerKind],
        default=MaximizerKind.OPTIMIZE.value,
        help="box maximizer of the thm1 bound (default: optimize)")
    bound.add_argument(
        "--grid-resolution",
        type=int,
        default=DEFAULT_GRID_RESOLUTION,
        help="points per axis for --maximizer grid")
    bound.add_argument(
        "--unsafe",
        action="store_true",
        help="evaluate thm2 even if kernel property checks fail")
    bound.add_argument(
        "--check-budget",
        type=int,
        default=DEFAULT_CHECK_BUDGET,
        help=f"cases per kernel property check (default: {DEFAULT_CHECK_BUDGET})")

    # ---- validate ----
    validate = sub.add_parser(
        CommandKind.VALIDATE,
        parents=[common],
        help="Monte Carlo estimate of the error at one test point")
    validate.add_argument("truth", type=Path, help="model.json of the true GP")
    validate.add_argument("estimate", type=Path, help="model.json of the estimated GP")
    validate.add_argument("--x", type=float, nargs="+", required=True, help="test point coordinates")
    validate.add_argument(
        "--n-samples",
        type=int,
        default=DEFAULT_MC_SAMPLES,
        help=f"number of joint draws (default: {DEFAULT_MC_SAMPLES})")
    validate.add_argument(
        "--batch",
        type=int,
        default=DEFAULT_MC_BATCH,
        help=f"draws per batch (default: {DEFAULT_MC_BATCH})")

    # ---- scenario ----
    scenario = sub.add_parser(
        CommandKind.SCENARIO,
        parents=[common],
        help="run the one-dimensional state-space experiment")
    scenario.add_argument(
        "config",
        type=Path,
        nargs="?",
        default=None,
        help="scenario config (JSON, YAML or TOML); defaults apply for missing keys")

    # ---- check-kernel ----
    check = sub.add_parser(
        CommandKind.CHECK_KERNEL,
        parents=[common],
        help="numerically check monotonicity and quasi-concavity of a kernel over a box")
    target = check.add_mutually_exclusive_group(required=True)
    target.add_argument("--cands", type=Path, help="candidate-set JSON; every entry is checked")
    target.add_argument("--family", choices=[k.value for k in FamilyKind], help="kernel family")
    check.add_argument("--p", type=int, default=None, help="structural parameter of --family")
    check.add_argument("--n-x", type=int, default=1, help="input dimension for se_ard (default: 1)")
    check.add_argument("--lower", type=float, nargs="+", help="lower box corner for --family")
    check.add_argument("--upper", type=float, nargs="+", help="upper box corner for --family")
    check.add_argument(
        "--budget",
        type=int,
        default=DEFAULT_CHECK_BUDGET,
        help=f"sampled cases per check (default: {DEFAULT_CHECK_BUDGET})")

    return parser


def parse_cli(argv: list[str] | None = None) -> Namespace:
    """
    Parses the command line.

    Args:
        argv (list[str] | None): Arguments without the program name; None reads ``sys.argv``.

    Returns:
        Namespace: The parsed arguments.

    Raises:
        SystemExit: With code 2 on usage errors (argparse behavior).
    """
    parser = create_arg_parser()
    args = parser.parse_args(argv)
    if not args.version and args.command is None:
        parser.error("a command is required")
    if args.command == CommandKind.CHECK_KERNEL and args.family and (args.lower is None or args.upper is None):
        parser.error("--family requires --lower and --upper")
    return args
