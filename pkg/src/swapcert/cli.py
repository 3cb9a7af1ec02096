"""Command-line front end.

Subcommands: ideal | noisy | certify | bounds-curve | decompose | sep-bound |
sample. Exit codes: 0 success or certification pass, 1 certification fail,
2 usage error, 3 validation error (malformed or inconsistent input files).
The default tolerance can be set through the SWAPCERT_TOL environment
variable; commands that draw samples require an explicit seed.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from pathlib import Path
from typing import Any, Sequence

import numpy as np

from . import blocks, certify, protocol, serialize
from .linalg import ValidationError

EXIT_OK = 0
EXIT_CERT_FAIL = 1
EXIT_USAGE = 2
EXIT_VALIDATION = 3

TOL_ENV_VAR = "SWAPCERT_TOL"


class UsageError(Exception):
    pass


def _default_tol() -> float:
    raw = os.environ.get(TOL_ENV_VAR)
    if raw is None:
        return 1e-9
    try:
        return float(raw)
    except ValueError:
        raise UsageError(f"{TOL_ENV_VAR}={raw!r} is not a number") from None


def _write_output(text: str, out: str | None) -> None:
    if out is None or out == "-":
        sys.stdout.write(text)
        if not text.endswith("\n"):
            sys.stdout.write("\n")
    else:
        Path(out).write_text(text if text.endswith("\n") else text + "\n", encoding="utf-8")


def _flatten(obj: Any, prefix: str = "") -> list[tuple[str, Any]]:
    rows: list[tuple[str, Any]] = []
    if isinstance(obj, dict):
        for key in sorted(obj):
            rows.extend(_flatten(obj[key], f"{prefix}{key}." if prefix else f"{key}."))
    elif isinstance(obj, (list, tuple)):
        for idx, item in enumerate(obj):
            rows.extend(_flatten(item, f"{prefix}{idx}."))
    else:
        rows.append((prefix.rstrip("."), obj))
    return rows


def _render(payload: dict, fmt: str) -> str:
    if fmt == "json":
        return serialize.json_dumps(payload)
    lines = ["key,value"]
    for key, value in _flatten(serialize._round_tree(payload)):
        lines.append(f"{key},{value}")
    return "\n".join(lines)


def _report_payload(report: protocol.ChshReport, tol: float) -> tuple[dict, list[certify.Verdict]]:
    verdicts = [
        certify.certify_crit1(report.s_ac, report.s_bc, report.s_ab_given_c, tol),
        certify.certify_crit2(report.s_ac, report.s_bc, report.s_ab_given_c, tol),
    ]
    payload = {
        "report": serialize.report_to_json(report),
        "verdicts": [serialize.verdict_to_json(v) for v in verdicts],
    }
    try:
        bounds = certify.distance_bounds(report.s_ab_given_c)
        payload["distance_bounds"] = serialize.bounds_to_json(bounds)
    except ValidationError:
        payload["distance_bounds"] = None
    return payload, verdicts


def cmd_ideal(args: argparse.Namespace) -> int:
    tol = args.tol if args.tol is not None else _default_tol()
    report = protocol.exact_report(protocol.ideal_scenario())
    payload, verdicts = _report_payload(report, tol)
    _write_output(_render(payload, args.format), args.out)
    return EXIT_OK if all(v.passed for v in verdicts) else EXIT_CERT_FAIL


def cmd_noisy(args: argparse.Namespace) -> int:
    for name, value in (("--v-ac", args.v_ac), ("--v-bc", args.v_bc)):
        if not 0.0 <= value <= 1.0:
            raise UsageError(f"{name} must lie in [0, 1], got {value}")
    tol = args.tol if args.tol is not None else _default_tol()
    sc = protocol.noisy_scenario(args.v_ac, args.v_bc, args.theta)
    payload, _ = _report_payload(protocol.exact_report(sc), tol)
    _write_output(_render(payload, args.format), args.out)
    return EXIT_OK


def _load_report(path: Path, text: str) -> protocol.ChshReport:
    stripped = text.lstrip()
    looks_json = path.suffix.lower() == ".json" or stripped.startswith("{")
    if looks_json:
        try:
            obj = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ValidationError(f"{path.name}: {exc}") from None
        return serialize.report_from_json(obj)
    return protocol.estimate_report(serialize.counts_from_csv(text))


def cmd_certify(args: argparse.Namespace) -> int:
    path = Path(args.input)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ValidationError(str(exc)) from None
    report = _load_report(path, text)
    if args.tol is not None and args.tol_sigma is not None:
        raise UsageError("--tol and --tol-sigma are mutually exclusive")
    if args.tol_sigma is not None:
        if report.stderr is None:
            raise UsageError("--tol-sigma needs a report with standard errors (counts input)")
        tol = args.tol_sigma * max(report.stderr.s_ac, report.stderr.s_bc)
    else:
        tol = args.tol if args.tol is not None else _default_tol()
    for c, value in enumerate(report.s_ab_given_c):
        if not math.isfinite(value):
            raise ValidationError(f"report is missing the conditional value for outcome {c + 1}")
    payload, verdicts = _report_payload(report, tol)
    _write_output(_render(payload, args.format), args.out)
    return EXIT_OK if verdicts[0].passed else EXIT_CERT_FAIL


def cmd_bounds_curve(args: argparse.Namespace) -> int:
    if not (0.0 <= args.s_min <= args.s_max <= certify.TSIRELSON + 1e-9):
        raise UsageError(
            f"need 0 <= s-min <= s-max <= {certify.TSIRELSON:.9g}, "
            f"got [{args.s_min}, {args.s_max}]"
        )
    if args.steps < 1:
        raise UsageError("--steps must be at least 1")
    grid = np.linspace(args.s_min, args.s_max, args.steps)
    rows = []
    for s in grid:
        bounds = certify.distance_bounds([float(s)] * 4)
        rows.append((float(s), bounds.lower, bounds.upper))
    if args.format == "json":
        payload = [{"S": s, "lower": lo, "upper": up} for s, lo, up in rows]
        _write_output(serialize.json_dumps(payload), args.out)
    else:
        _write_output(serialize.bounds_curve_csv(rows), args.out)
    return EXIT_OK


def _load_settings(path_str: str) -> tuple:
    path = Path(path_str)
    try:
        obj = json.loads(path.read_text(encoding="utf-8"))
    except OSError as exc:
        raise ValidationError(str(exc)) from None
    except json.JSONDecodeError as exc:
        raise ValidationError(f"{path.name}: {exc}") from None
    if not isinstance(obj, dict):
        raise ValidationError(f"{path.name}: expected a JSON object")
    out = []
    for key in ("a0", "a1", "b0", "b1"):
        if key not in obj:
            raise ValidationError(f"{path.name}: missing observable '{key}'")
        out.append(serialize.observable_from_json(obj[key], key))
    return tuple(out)


def _blocks_payload(decomposition: blocks.ObservableBlocks) -> list[dict]:
    return [
        {
            "basis": serialize.matrix_to_json(b.basis),
            "a0": serialize.matrix_to_json(b.a0),
            "a1": serialize.matrix_to_json(b.a1),
        }
        for b in decomposition.blocks
    ]


def _structure_payload(a0, a1, b0, b1) -> tuple[dict, blocks.ChshBlockStructure]:
    a_blocks = blocks.jordan_blocks(a0, a1)
    b_blocks = blocks.jordan_blocks(b0, b1)
    structure = blocks.block_chsh(a_blocks, b_blocks)
    n_a, n_b = len(a_blocks.blocks), len(b_blocks.blocks)
    alpha = [[0.0] * n_b for _ in range(n_a)]
    for pair in structure.pairs:
        alpha[pair.row][pair.col] = pair.alpha
    payload = {
        "a_blocks": _blocks_payload(a_blocks),
        "b_blocks": _blocks_payload(b_blocks),
        "alpha": alpha,
        "lambda": structure.lam,
        "sep_bound": blocks.sep_bound_formula(structure),
    }
    return payload, structure


def cmd_decompose(args: argparse.Namespace) -> int:
    a0, a1, b0, b1 = _load_settings(args.settings)
    payload, _ = _structure_payload(a0, a1, b0, b1)
    _write_output(serialize.json_dumps(payload), args.out)
    return EXIT_OK


def cmd_sep_bound(args: argparse.Namespace) -> int:
    if args.restarts < 1:
        raise UsageError("--restarts must be at least 1")
    a0, a1, b0, b1 = _load_settings(args.settings)
    payload, _ = _structure_payload(a0, a1, b0, b1)
    beta = blocks.chsh_operator(a0, a1, b0, b1)
    value, state = blocks.sep_bound_oracle(
        beta, (a0.dim, b0.dim), restarts=args.restarts, iters=args.iters, seed=args.seed
    )
    payload["oracle_value"] = value
    payload["oracle_state"] = serialize.matrix_to_json(state.vector)
    payload["difference"] = abs(payload["sep_bound"] - value)
    _write_output(serialize.json_dumps(payload), args.out)
    return EXIT_OK


def cmd_sample(args: argparse.Namespace) -> int:
    if args.n_per_setting < 1:
        raise UsageError("--n-per-setting must be at least 1")
    if args.scenario is not None:
        path = Path(args.scenario)
        try:
            obj = json.loads(path.read_text(encoding="utf-8"))
        except OSError as exc:
            raise ValidationError(str(exc)) from None
        except json.JSONDecodeError as exc:
            raise ValidationError(f"{path.name}: {exc}") from None
        sc = serialize.scenario_from_json(obj)
    else:
        for name, value in (("--v-ac", args.v_ac), ("--v-bc", args.v_bc)):
            if not 0.0 <= value <= 1.0:
                raise UsageError(f"{name} must lie in [0, 1], got {value}")
        sc = protocol.noisy_scenario(args.v_ac, args.v_bc, args.theta)
    table = protocol.sample_counts(sc, args.n_per_setting, args.seed)
    _write_output(serialize.counts_to_csv(table), args.out)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="swapcert",
        description="Simulate and certify entangled joint measurements through CHSH tests.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p: argparse.ArgumentParser, formats: Sequence[str] = ("json", "csv")) -> None:
        p.add_argument("--out", default=None, help="output path (default: stdout)")
        if formats:
            p.add_argument("--format", choices=list(formats), default=formats[0])

    p = sub.add_parser("ideal", help="report and verdicts for the ideal four-qubit scenario")
    p.add_argument("--tol", type=float, default=None,
                   help=f"tolerance for the maximal-violation tests (default {TOL_ENV_VAR} or 1e-9)")
    add_common(p)
    p.set_defaults(func=cmd_ideal)

    p = sub.add_parser("noisy", help="report and verdicts for a noisy scenario")
    p.add_argument("--v-ac", type=float, default=1.0, help="visibility of the first pair")
    p.add_argument("--v-bc", type=float, default=1.0, help="visibility of the second pair")
    p.add_argument("--theta", type=float, default=0.0, help="joint-basis rotation angle (radians)")
    p.add_argument("--tol", type=float, default=None)
    add_common(p)
    p.set_defaults(func=cmd_noisy)

    p = sub.add_parser("certify", help="verdicts and distance bounds from counts CSV or report JSON")
    p.add_argument("input", help="counts CSV or report JSON file")
    p.add_argument("--tol", type=float, default=None, help="absolute tolerance")
    p.add_argument("--tol-sigma", type=float, default=None,
                   help="tolerance as a multiple of the estimated standard error")
    add_common(p)
    p.set_defaults(func=cmd_certify)

    p = sub.add_parser("bounds-curve", help="distance bounds as a function of the common CHSH value")
    p.add_argument("--s-min", type=float, default=2.0)
    p.add_argument("--s-max", type=float, default=certify.TSIRELSON)
    p.add_argument("--steps", type=int, default=100)
    p.add_argument("--out", default=None)
    p.add_argument("--format", choices=["csv", "json"], default="csv")
    p.set_defaults(func=cmd_bounds_curve)

    p = sub.add_parser("decompose", help="block decomposition and separable bound of CHSH settings")
    p.add_argument("settings", help="JSON file with observables a0, a1, b0, b1")
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_decompose)

    p = sub.add_parser("sep-bound", help="separable bound with a see-saw cross-check")
    p.add_argument("settings", help="JSON file with observables a0, a1, b0, b1")
    p.add_argument("--restarts", type=int, default=32)
    p.add_argument("--iters", type=int, default=500)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_sep_bound)

    p = sub.add_parser("sample", help="draw outcome counts from a scenario")
    p.add_argument("--n-per-setting", type=int, required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--scenario", default=None, help="scenario JSON file (default: built from noise flags)")
    p.add_argument("--v-ac", type=float, default=1.0)
    p.add_argument("--v-bc", type=float, default=1.0)
    p.add_argument("--theta", type=float, default=0.0)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_sample)

    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ValidationError as exc:
        print(f"validation error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())
