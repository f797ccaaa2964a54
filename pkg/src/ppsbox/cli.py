"""Command-line driver.

    ppsbox <subcommand> [--ensemble FILE | --preset NAME] [--seed N]
           [--samples N] [--grid N] [--out FILE] [--format json|csv]

Exit codes: 0 success, 2 input error, 3 degenerate post-selection,
4 internal numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from typing import Optional, Sequence

import numpy as np

from . import __version__, qstate
from .abl import (
    DegeneratePostSelection,
    PrePostEnsemble,
    ZeroBranch,
    direction_from_json,
    events_from_json,
    joint_local_abl,
    sequential_abl,
)
from .chsh import EQ9_MAPPING, ChshConfig, d_alpha, maximize_chsh, pr_game
from .nosignal import classify, ghz_demo, scan_no_signaling, unitary_attack_demo
from .presets import PRESETS, get_preset
from .qstate import MeasurementDirection, StateError
from .swapping import non_maximal_attack, partial_basis, swap_protocol

EXIT_OK, EXIT_INPUT, EXIT_DEGENERATE, EXIT_NUMERICAL = 0, 2, 3, 4
DEFAULT_ALPHAS = "0.5,0.4,0.3,0.2,0.1,0.05"
SCAN_SAMPLES, SWAP_SAMPLES = 10_000, 1_000


class InputError(Exception):
    pass


def _load_json(path: str):
    try:
        with open(path, encoding="utf-8") as fh:
            return json.load(fh)
    except FileNotFoundError as exc:
        raise InputError(f"file not found: {path}") from exc
    except json.JSONDecodeError as exc:
        raise InputError(f"{path}: invalid JSON ({exc})") from exc


def _ensemble(args, file_attr: str = "ensemble", default: Optional[str] = None) -> PrePostEnsemble:
    path = getattr(args, file_attr, None)
    if path:
        return PrePostEnsemble.from_json(_load_json(path))
    name = args.preset or default
    if name is None:
        raise InputError("give --ensemble FILE or --preset NAME")
    try:
        return get_preset(name, alpha=args.alpha, theta=args.theta)
    except KeyError as exc:
        raise InputError(str(exc.args[0])) from exc


def _direction(token: str) -> Optional[MeasurementDirection]:
    token = token.strip()
    if token in ("-", "_", "", "none"):
        return None
    if ":" in token:
        w, p = token.split(":", 1)
        try:
            return MeasurementDirection(float(w), float(p))
        except ValueError as exc:
            raise InputError(f"bad direction {token!r}") from exc
    try:
        return direction_from_json(token)
    except StateError as exc:
        raise InputError(str(exc)) from exc


def _config_echo(args) -> dict:
    # the destination path is not part of the computation
    skip = {"func", "out"}
    return {k: v for k, v in sorted(vars(args).items()) if k not in skip}


def _document(args, result) -> dict:
    return {
        "tool": "ppsbox",
        "version": __version__,
        "command": args.command,
        "seed": args.seed,
        "config": _config_echo(args),
        "result": result,
    }


# -- subcommands -------------------------------------------------------------


def cmd_abl(args) -> dict:
    ens = _ensemble(args)
    if args.events:
        dist = sequential_abl(ens, events_from_json(_load_json(args.events), ens.num_parties))
    else:
        if not args.dirs:
            raise InputError("give --dirs (one direction per party, '-' for none) or --events FILE")
        dirs = [_direction(t) for t in args.dirs.split(",")]
        if len(dirs) != ens.num_parties:
            raise InputError(f"--dirs needs {ens.num_parties} entries")
        dist = joint_local_abl(ens, dirs)
    return {"labels": list(dist.labels), "distribution": dist.to_json()}


def cmd_scan(args) -> dict:
    return scan_no_signaling(_ensemble(args), args.samples, args.seed).to_json()


def cmd_classify(args) -> dict:
    return classify(_ensemble(args)).to_json()


def _chsh_config(args) -> ChshConfig:
    return ChshConfig(grid_per_angle=args.grid, refine_iters=args.refine_iters, seed=args.seed)


def cmd_chsh_max(args) -> dict:
    return maximize_chsh(_ensemble(args), _chsh_config(args)).to_json()


def cmd_d_alpha(args) -> list[dict]:
    try:
        alphas = [float(a) for a in args.alphas.split(",")]
    except ValueError as exc:
        raise InputError(f"bad --alphas list: {exc}") from exc
    cfg = _chsh_config(args)
    out = []
    for a in alphas:
        if not 0.0 < a < 1.0:
            raise InputError("alpha values must lie in the open interval (0, 1)")
        out.append(d_alpha(a, cfg, theta=args.theta or 0.0, cross_check=not args.no_cross_check).to_json())
    return out


def cmd_pr_game(args) -> dict:
    ens = _ensemble(args, default="eq9")
    mapping = EQ9_MAPPING
    if args.mapping:
        toks = args.mapping.split(",")
        if len(toks) != 4:
            raise InputError("--mapping needs four directions: x0,x1,y0,y1")
        d = [_direction(t) for t in toks]
        if any(v is None for v in d):
            raise InputError("every PR-game input needs a direction")
        mapping = {"x": (d[0], d[1]), "y": (d[2], d[3])}
    return pr_game(ens, mapping, rounds=args.rounds, seed=args.seed).to_json()


def _pairs(args) -> tuple[PrePostEnsemble, PrePostEnsemble]:
    ab = _ensemble(args, "ensemble_ab", default="eq9")
    cb = _ensemble(args, "ensemble_cb", default="eq9")
    return ab, cb


def cmd_swap(args) -> dict:
    ab, cb = _pairs(args)
    basis = None if args.eta is None else partial_basis(args.eta)
    unitary = None if args.no_hadamard else qstate.HADAMARD
    reports = swap_protocol(ab, cb, basis, unitary, _chsh_config(args), args.samples, args.seed)
    return {"outcomes": [r.to_json() for r in reports], "total_probability": sum(r.probability for r in reports)}


def cmd_ghz(args) -> dict:
    return ghz_demo().to_json()


def cmd_attack(args) -> dict:
    ab, cb = _pairs(args)
    eta = math.pi / 6 if args.eta is None else args.eta
    try:
        worst, labels = non_maximal_attack(ab, cb, eta, args.samples, args.seed)
    except ValueError as exc:
        raise InputError(str(exc)) from exc
    return {"eta": eta, "worst": worst.to_json(), "classes": {k: v.label for k, v in labels.items()}}


def cmd_unitary_attack(args) -> dict:
    return unitary_attack_demo().to_json()


def _d_alpha_csv(args, rows: list[dict]) -> str:
    buf = io.StringIO()
    buf.write(f"# ppsbox {__version__} d-alpha seed={args.seed} grid={args.grid}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["alpha", "d", "b_max", "converged"])
    for r in rows:
        w.writerow([repr(r["alpha"]), repr(r["d"]), repr(r["b_max"]), str(r["converged"]).lower()])
    return buf.getvalue()


# -- parser ------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    src = common.add_argument_group("input")
    src.add_argument("--ensemble", help="ensemble JSON file")
    src.add_argument("--preset", help=f"named ensemble: {', '.join(sorted(PRESETS))}")
    src.add_argument("--alpha", type=float, default=None, help="weight parameter for parametrized presets")
    src.add_argument("--theta", type=float, default=None, help="phase parameter for parametrized presets")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--samples", type=int, default=None, help="random samples (default 10000; 1000 for swap and attack)")
    common.add_argument("--grid", type=int, default=24, help="grid points per angle")
    common.add_argument("--refine-iters", type=int, default=20_000)
    common.add_argument("--out", help="write the output document here instead of stdout")
    common.add_argument("--format", choices=("json", "csv"), default="json")

    parser = argparse.ArgumentParser(prog="ppsbox", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"ppsbox {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("abl", parents=[common], help="ABL outcome distribution")
    p.add_argument("--dirs", help="per-party directions, e.g. '_,x' or 'z,1.2:0.3' (_ = no measurement)")
    p.add_argument("--events", help="event-sequence JSON file for ordered measurements")
    p.set_defaults(func=cmd_abl)

    sub.add_parser("scan", parents=[common], help="randomized no-signaling scan").set_defaults(func=cmd_scan)
    sub.add_parser("classify", parents=[common], help="causal class of an ensemble").set_defaults(func=cmd_classify)
    sub.add_parser("chsh-max", parents=[common], help="maximize the CHSH value").set_defaults(func=cmd_chsh_max)

    p = sub.add_parser("d-alpha", parents=[common], help="d(alpha) sweep for the swapped class")
    p.add_argument("--alphas", default=DEFAULT_ALPHAS, help="comma-separated weights in (0, 1)")
    p.add_argument("--no-cross-check", action="store_true", help="skip the unconstrained maximization")
    p.set_defaults(func=cmd_d_alpha)

    p = sub.add_parser("pr-game", parents=[common], help="PR-game success probabilities")
    p.add_argument("--mapping", help="directions for x0,x1,y0,y1 (default: z,x,x,z)")
    p.add_argument("--rounds", type=int, default=0, help="also sample this many rounds per input pair")
    p.set_defaults(func=cmd_pr_game)

    for name, func, helptext in (
        ("swap", cmd_swap, "entanglement swapping with a Bell (or --eta) measurement"),
        ("attack", cmd_attack, "signaling via a partially entangled swapping basis"),
    ):
        p = sub.add_parser(name, parents=[common], help=helptext)
        p.add_argument("--ensemble-ab", help="Alice-Bob1 ensemble JSON")
        p.add_argument("--ensemble-cb", help="Bob2-Clare ensemble JSON (Bob's particle first)")
        p.add_argument("--eta", type=float, default=None, help="partial-basis angle")
        if name == "swap":
            p.add_argument("--no-hadamard", action="store_true")
        p.set_defaults(func=func)

    sub.add_parser("ghz", parents=[common], help="three-party GHZ signaling example").set_defaults(func=cmd_ghz)
    sub.add_parser("unitary-attack", parents=[common], help="signaling via local unitaries").set_defaults(
        func=cmd_unitary_attack
    )
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if not exc.code else EXIT_INPUT
    # resolved here: set_defaults on one subparser would leak through the shared parent
    if args.samples is None:
        args.samples = SWAP_SAMPLES if args.command in ("swap", "attack") else SCAN_SAMPLES
    try:
        if args.format == "csv" and args.command != "d-alpha":
            raise InputError("csv output is only available for d-alpha")
        result = args.func(args)
        if args.format == "csv":
            text = _d_alpha_csv(args, result)
        else:
            text = json.dumps(_document(args, result), indent=2) + "\n"
    except (InputError, ValueError) as exc:
        print(f"ppsbox: input error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (DegeneratePostSelection, ZeroBranch) as exc:
        print(f"ppsbox: degenerate post-selection: {exc}", file=sys.stderr)
        return EXIT_DEGENERATE
    except (ArithmeticError, np.linalg.LinAlgError) as exc:
        print(f"ppsbox: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def main_entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    main_entry()
