"""Command-line front end."""

from __future__ import annotations

import argparse
import asyncio
import json
import logging
import sys
from collections.abc import Sequence
from pathlib import Path
from typing import Any

from . import async_run_config
from .algebra import GizatullinError
from .autoflow import (
    Flow,
    apply_step,
    endpoint_error,
    execute_word,
    plan_transitivity,
    require_smooth,
    scaled_residual,
    word_json,
)
from .config import InvalidConfigError, RunConfig, build_config
from .const import (
    CATALOG_IDS,
    CONF_OUT,
    CONF_P,
    CONF_Q,
    CONF_RANGE,
    CONF_SAMPLES,
    CONF_SEED,
    CONF_SUITES,
    CONF_TIMINGS,
    CONF_TOL,
    DEFAULT_MOVE_TOL,
    DEFAULT_RESIDUAL_TOL,
    EXIT_FINDING,
    EXIT_INVALID,
    EXIT_NUMERIC,
    EXIT_OK,
    MODE_ALGEBRAIC,
    MODE_FLOWS,
    SUITE_ALL,
    SUITES,
)
from .coordinator import INVALID_ERRORS, NUMERIC_ERRORS
from .grammar import (
    PolySyntaxError,
    WrongVariableError,
    format_coeff,
    format_complex,
    format_poly,
    parse_point_text,
    parse_value,
)
from .liecert import (
    ExtractionError,
    InvalidParametersError,
    SpanExtensionError,
    certificate_json,
    final_generator,
    matches_root,
    verify_tree,
)
from .surface import Surface, SurfacePoint, make_point

_LOGGER = logging.getLogger(__name__)


class InvalidArgumentError(GizatullinError):
    """Error to indicate a malformed command-line value."""


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--P", required=True, help="P(x), e.g. 'x - 1'")
    parser.add_argument("--Q", required=True, help="Q(u), e.g. 'u - 1'")
    parser.add_argument("--tol", type=float, default=None, help="residual tolerance")
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--out", type=Path, default=None, help="write JSON here instead of stdout")
    parser.add_argument("--verbose", action="store_true", help="log at DEBUG level")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="gizatullin", description="Exact and numeric checks on the surfaces S_{P,Q}."
    )
    sub = parser.add_subparsers(dest="command", required=True)

    verify = sub.add_parser("verify", help="run verification suites")
    _add_common(verify)
    verify.add_argument(
        "--suite",
        action="append",
        default=[],
        choices=(*SUITES, SUITE_ALL),
        help="suite to run; repeat for several",
    )
    verify.add_argument("--range", type=int, default=1, help="maximum of j, k, l, m")
    verify.add_argument("--samples", type=int, default=None)
    verify.add_argument("--timings", action="store_true", help="include wall-clock timings")

    cert = sub.add_parser("cert", help="emit the certificate of a final generator")
    _add_common(cert)
    cert.add_argument("--params", default="0,0,0,0", help="j,k,l,m")

    move = sub.add_parser("move", help="plan and execute a word between two points")
    _add_common(move)
    move.add_argument("--from", dest="source", required=True, help="x,y,u,v")
    move.add_argument("--to", dest="target", required=True, help="x,y,u,v")
    move.add_argument("--mode", choices=(MODE_FLOWS, MODE_ALGEBRAIC), default=MODE_FLOWS)

    flow = sub.add_parser("flow", help="apply one catalog flow")
    _add_common(flow)
    flow.add_argument("--field", required=True, choices=CATALOG_IDS)
    flow.add_argument("--time", required=True)
    flow.add_argument("--point", required=True, help="x,y,u,v")
    return parser


def _config(args: argparse.Namespace) -> RunConfig:
    data: dict[str, Any] = {
        CONF_P: args.P,
        CONF_Q: args.Q,
        CONF_SEED: args.seed,
        CONF_OUT: args.out,
    }
    if args.tol is not None:
        data[CONF_TOL] = args.tol
    if args.command == "verify":
        data[CONF_SUITES] = args.suite
        data[CONF_RANGE] = args.range
        data[CONF_TIMINGS] = args.timings
        if args.samples is not None:
            data[CONF_SAMPLES] = args.samples
    return build_config(data)


def _point(S: Surface, text: str) -> SurfacePoint:
    return make_point(S, parse_point_text(text), DEFAULT_RESIDUAL_TOL)


def _format_point(p: SurfacePoint) -> list[str]:
    if p.kind == "exact":
        return [format_coeff(c) for c in p.coords]
    return [format_complex(c) for c in p.to_numpy()]


def _emit(document: dict[str, Any], out: Path | None) -> None:
    text = json.dumps(document, indent=2, sort_keys=True) + "\n"
    if out is None:
        sys.stdout.write(text)
    else:
        out.write_text(text, encoding="utf-8")


def _run_verify(config: RunConfig) -> int:
    report, code = asyncio.run(async_run_config(config))
    _emit(report, config.out)
    return code


def _run_cert(args: argparse.Namespace, config: RunConfig, S: Surface) -> int:
    try:
        j, k, ell, m = (int(n) for n in args.params.split(","))
    except ValueError as err:
        raise InvalidArgumentError(f"--params expects four integers, got {args.params!r}") from err
    final = final_generator(S, j, k, ell, m)
    verified = verify_tree(final.certificate, S) and matches_root(S, final)
    document = certificate_json(final.certificate, S)
    document["params"] = [j, k, ell, m]
    document["T"] = format_poly(final.T)
    document["y_shift"] = final.y_shift
    document["verified"] = verified
    _emit(document, config.out)
    return EXIT_OK if verified else EXIT_FINDING


def _run_move(args: argparse.Namespace, config: RunConfig, S: Surface) -> int:
    require_smooth(S)
    p, q = _point(S, args.source), _point(S, args.target)
    word = plan_transitivity(S, p, q, args.mode, config.tol)
    result = execute_word(word, p, config.tol)
    error = endpoint_error(result, q)
    document = word_json(word)
    document["endpoint"] = _format_point(result.endpoint)
    document["endpoint_error"] = error
    document["max_residual"] = result.max_residual
    _emit(document, config.out)
    return EXIT_OK if error <= DEFAULT_MOVE_TOL else EXIT_NUMERIC


def _run_flow(args: argparse.Namespace, config: RunConfig, S: Surface) -> int:
    p = _point(S, args.point)
    step = Flow(args.field, parse_value(args.time))
    _, endpoint, residual, steps = apply_step(S, step, p, config.tol)
    _emit(
        {
            "field": args.field,
            "time": args.time,
            "endpoint": _format_point(endpoint),
            "residual": max(residual, scaled_residual(S, endpoint.to_numpy())),
            "steps": steps,
        },
        config.out,
    )
    return EXIT_OK


def exit_code(err: Exception) -> int:
    """Map an exception to the documented exit code."""
    if isinstance(err, (ExtractionError, SpanExtensionError)):
        return EXIT_FINDING
    if isinstance(err, NUMERIC_ERRORS):
        return EXIT_NUMERIC
    if isinstance(
        err,
        (
            *INVALID_ERRORS,
            InvalidConfigError,
            InvalidArgumentError,
            InvalidParametersError,
            PolySyntaxError,
            WrongVariableError,
        ),
    ):
        return EXIT_INVALID
    raise err


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.WARNING,
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )
    try:
        config = _config(args)
        S = config.surface()
        if args.command == "verify":
            return _run_verify(config)
        if args.command == "cert":
            return _run_cert(args, config, S)
        if args.command == "move":
            return _run_move(args, config, S)
        return _run_flow(args, config, S)
    except GizatullinError as err:
        code = exit_code(err)
        sys.stderr.write(f"error: {err}\n")
        return code
