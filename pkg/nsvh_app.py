# nsvh_app.py
import argparse
import json
import logging
import sys
from typing import List, Optional

from exceptions import ConvergenceError, NsvhError
from settings import load_settings
from ui import calibrate, fit, price, probplot, risk, simulate, verify
from utils.io_utils import write_output

logger = logging.getLogger("nsvh")

# --- EXIT CODES ---
EXIT_OK = 0
EXIT_FAILED_CHECKS = 3

ROUTES = {
    "price": price,
    "fit": fit,
    "calibrate": calibrate,
    "risk": risk,
    "probplot": probplot,
    "simulate": simulate,
    "verify": verify,
}


def _lambda_arg(parser: argparse.ArgumentParser, required: bool = False):
    parser.add_argument("--lambda", dest="lam", type=float, choices=[0.0, 1.0], required=required,
                        help="model lambda (0 = normal SABR, 1 = Johnson S_U)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="nsvh", description="NSVh model pricing, fitting and risk toolkit")
    parser.add_argument("--config", help="TOML settings file ([nsvh] table)")
    parser.add_argument("--seed", type=int, help="random seed (64-bit unsigned)")
    parser.add_argument("--threads", type=int, help="worker threads for Monte-Carlo")
    parser.add_argument("--format", dest="output_format", choices=["json", "csv"], help="output format")
    parser.add_argument("--output", help="write the result here instead of stdout")
    parser.add_argument("-v", "--verbose", action="count", default=0, help="-v for INFO, -vv for DEBUG")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("price", help="call and put prices per strike")
    p.add_argument("--params", required=True)
    p.add_argument("--strikes", required=True, help="comma-separated offsets K - F_bar_T")
    p.add_argument("--absolute", action="store_true", help="treat --strikes as absolute strikes")
    _lambda_arg(p)
    p.add_argument("--method", choices=["analytic", "mc"], default="analytic")
    p.add_argument("--paths", type=int, help="Monte-Carlo triplets")
    p.add_argument("--groups", type=int, help="Monte-Carlo groups for standard errors")

    p = sub.add_parser("fit", help="moment-matched parameters from a returns file")
    p.add_argument("--returns", required=True)
    _lambda_arg(p, required=True)
    p.add_argument("--horizon", type=float, default=1.0, help="T used to split S into alpha")
    p.add_argument("--levels", action="store_true", help="file holds index levels, not returns")

    p = sub.add_parser("calibrate", help="fit (sigma0, alpha, rho) to a smile")
    p.add_argument("--quotes", required=True)
    p.add_argument("--forward", type=float)
    p.add_argument("--expiry", type=float)
    _lambda_arg(p, required=True)
    p.add_argument("--tolerance", type=float)

    p = sub.add_parser("risk", help="value-at-risk and expected shortfall")
    p.add_argument("--params")
    p.add_argument("--p", required=True, help="comma-separated levels, e.g. 0.01,0.05")
    p.add_argument("--method", choices=["closed", "mc", "empirical", "normal"], default="closed")
    p.add_argument("--returns")
    p.add_argument("--levels", action="store_true")
    _lambda_arg(p)
    p.add_argument("--paths", type=int, help="Monte-Carlo triplets")
    p.add_argument("--groups", type=int)
    p.add_argument("--fast-su", dest="fast_su", action="store_true", help="one-normal S_U sampler (lambda = 1)")

    p = sub.add_parser("probplot", help="S_U probability-plot scores")
    p.add_argument("--returns", required=True)
    p.add_argument("--params", required=True)
    p.add_argument("--levels", action="store_true")
    p.add_argument("--standardize", choices=["sample", "model"], default="sample",
                   help="z1 from sample moments or from the model mean and variance")

    p = sub.add_parser("simulate", help="exact multi-step paths")
    p.add_argument("--params", required=True)
    p.add_argument("--grid", required=True, help="comma-separated increasing times")
    p.add_argument("--paths", type=int, required=True)
    p.add_argument("--groups", type=int)
    p.add_argument("--independent", action="store_true", help="one path per triplet")
    _lambda_arg(p)

    p = sub.add_parser("verify", help="run the oracle checks")
    p.add_argument("--suite", choices=["kernel", "euler", "moments", "all"], default="all")
    p.add_argument("--paths", type=int, default=100_000, help="Euler paths")
    p.add_argument("--triplets", type=int, default=1_000_000, help="Monte-Carlo triplets")
    return parser


def _configure_logging(verbose: int, default_level: str):
    level = {0: getattr(logging, default_level.upper(), logging.WARNING), 1: logging.INFO}.get(verbose, logging.DEBUG)
    logging.basicConfig(level=level, stream=sys.stderr, format="%(asctime)s %(levelname)s %(name)s: %(message)s")


def _emit_error(error: NsvhError):
    sys.stdout.write(json.dumps(error.to_dict(), indent=2, default=str) + "\n")


# --- MAIN APP ROUTER ---
def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        settings = load_settings(args.config).override(seed=args.seed, threads=args.threads,
                                                       output_format=args.output_format)
        _configure_logging(args.verbose, settings.log_level)
        logger.info("running %s with seed %d", args.command, settings.seed)

        result = ROUTES[args.command].render(args, settings)
        write_output(result, settings.output_format, args.output)

        if args.command == "calibrate" and not result["converged"]:
            # the best point has been written; only the exit code reports the failure
            logger.error("calibration did not converge after %d iterations", result["iterations"])
            return ConvergenceError.exit_code
        if args.command == "verify" and not result["passed"].all():
            failed = result.loc[~result["passed"], "check"].tolist()
            logger.error("failed checks: %s", ", ".join(failed))
            return EXIT_FAILED_CHECKS
    except NsvhError as e:
        logger.error("%s: %s", e.code, e.message)
        _emit_error(e)
        return e.exit_code
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
