"""Command-line interface.

Every subcommand writes one output file (JSON or CSV) with an embedded
metadata header carrying the tool version, the seed, and a hash of the
resolved configuration. Outputs are byte-identical across reruns with the
same inputs and seed.

Exit codes: 0 success; 1 a checked claim failed (bound violated, tie in
strict mode, non-Nash profile, certification failure); 2 usage or IO error,
including non-convergence.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from math import factorial

import numpy as np

from .certify import (
    CertificateError,
    exclusion_ball_search,
    monotone_region_sample,
    paradox_nash_target,
    prop1_bound_check,
)
from .dice import (
    DicePerturbation,
    TieError,
    dice_bound_rows,
    dice_choice_intervals,
    enumerate_argmax_faces,
)
from .game import Game, StrategyProfile, build_paradox_game, build_prism_game, is_nash
from .logit import LogitParams, solve_logit_fixed_point, trace_logit_path
from .serialize import (
    atomic_write_text,
    build_metadata,
    csv_text,
    certificate_to_json,
    dice_csv_rows,
    estimate_to_json,
    family_to_json,
    json_text,
    profile_to_json,
    region_csv_rows,
    trace_csv_rows,
)
from .solver import ConvergenceError, SolverConfig
from .structural import (
    PerturbationFamily,
    check_qrf_monotone,
    qrf_monte_carlo,
    qrf_quadrature_iid,
    solve_structural_qre,
)

GAME_ALIASES = ("prism", "paradox")
OUT_DIR_ENV = "QREKIT_OUT_DIR"


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise _UsageError(message)


def _parse_floats(text: str) -> list[float]:
    try:
        return [float(part) for part in text.split(",") if part != ""]
    except ValueError:
        raise ValueError(f"expected comma-separated numbers, got {text!r}")


def _parse_ints(text: str) -> tuple[int, ...]:
    try:
        return tuple(int(part) for part in text.split(",") if part != "")
    except ValueError:
        raise ValueError(f"expected comma-separated integers, got {text!r}")


def _parse_range(text: str) -> list[float]:
    """Inclusive start:stop:step grid, endpoints rounded to step multiples."""
    parts = text.split(":")
    if len(parts) != 3:
        raise ValueError(f"expected start:stop:step, got {text!r}")
    start, stop, step = (float(p) for p in parts)
    if step <= 0 or stop < start:
        raise ValueError(f"range {text!r} must have positive step and stop >= start")
    count = int(round((stop - start) / step)) + 1
    return [start + i * step for i in range(count)]


def _parse_profile(text: str) -> StrategyProfile:
    return StrategyProfile.from_lists([_parse_floats(part) for part in text.split(";")])


def _load_game(args) -> Game:
    name = args.game
    if name == "prism":
        return build_prism_game()
    if name == "paradox":
        return build_paradox_game(args.k, args.opponents)
    with open(name, "r", encoding="utf-8") as handle:
        return Game.from_json_dict(json.load(handle))


def _config(args) -> SolverConfig:
    return SolverConfig(
        tol=args.tol,
        max_iters=args.max_iters,
        damping=args.damping,
        seed=args.seed,
        mc_samples=args.mc_samples,
    )


def _out_path(args, default_name: str) -> str:
    if args.out:
        return args.out
    return os.path.join(os.environ.get(OUT_DIR_ENV, "."), default_name)


def _write(path: str, text: str) -> None:
    atomic_write_text(path, text)
    print(f"wrote {path}")


def _add_common(parser, *, game=False, solver=False, out_default=None):
    parser.add_argument("--seed", type=int, default=0, help="RNG seed (default 0)")
    parser.add_argument("--out", default=None, help="output file path")
    if game:
        parser.add_argument(
            "--game",
            default="prism",
            help="'prism', 'paradox', or a game JSON path (default prism)",
        )
        parser.add_argument("--k", type=int, default=3, help="paradox ladder size")
        parser.add_argument(
            "--opponents",
            type=_parse_ints,
            default=(2,),
            help="paradox opponent action counts, comma-separated (default 2)",
        )
    if solver:
        parser.add_argument("--tol", type=float, default=1e-10)
        parser.add_argument("--max-iters", type=int, default=100_000)
        parser.add_argument("--damping", type=float, default=0.5)
        parser.add_argument("--mc-samples", type=int, default=1_000_000)
    parser.set_defaults(out_default=out_default)


def _iid_family(kind: str, scale: float, players: int) -> PerturbationFamily:
    return PerturbationFamily.iid(kind, scale, players)


def _cmd_solve_logit(args) -> int:
    game = _load_game(args)
    if args.lambdas is not None:
        lams = _parse_floats(args.lambdas)
    else:
        lams = [args.lam] * game.player_count
    params = LogitParams(tuple(lams))
    config = _config(args)
    profile, residual = solve_logit_fixed_point(game, params, config=config)
    payload = {
        "metadata": build_metadata(
            args.seed,
            {
                "command": "solve-logit",
                "game": game.to_json_dict(),
                "lambdas": lams,
                "tol": config.tol,
                "max_iters": config.max_iters,
                "damping": config.damping,
            },
        ),
        "game": game.to_json_dict(),
        "lambdas": lams,
        "profile": profile_to_json(profile),
        "residual": residual,
    }
    _write(_out_path(args, "solve-logit.json"), json_text(payload))
    return 0


def _cmd_trace_logit(args) -> int:
    game = _load_game(args)
    if args.direction is not None:
        direction = LogitParams(tuple(_parse_floats(args.direction)))
    else:
        direction = LogitParams((1.0,) * game.player_count)
    config = _config(args)
    trace = trace_logit_path(
        game,
        direction,
        args.lambda_max,
        config,
        initial_step=args.step,
    )
    columns, rows = trace_csv_rows(game, trace)
    metadata = build_metadata(
        args.seed,
        {
            "command": "trace-logit",
            "game": game.to_json_dict(),
            "direction": list(direction.lambdas),
            "lambda_max": args.lambda_max,
            "step": args.step,
            "tol": config.tol,
        },
    )
    metadata["terminal_reason"] = trace.terminal_reason
    _write(_out_path(args, "trace-logit.csv"), csv_text(metadata, columns, rows))
    return 0


def _qrf_payload(args, est, family):
    return {
        "metadata": build_metadata(
            args.seed,
            {
                "command": args.command_name,
                "x": _parse_floats(args.x),
                "family": family_to_json(family),
                "samples": getattr(args, "mc_samples", None),
                "nodes": getattr(args, "nodes", None),
            },
        ),
        "x": _parse_floats(args.x),
        "family": family_to_json(family),
        "estimate": estimate_to_json(est),
    }


def _cmd_qrf_mc(args) -> int:
    family = _iid_family(args.marginal, args.scale, 1)
    config = SolverConfig(seed=args.seed, mc_samples=args.mc_samples)
    est = qrf_monte_carlo(np.asarray(_parse_floats(args.x)), family, 0, config)
    args.command_name = "qrf-mc"
    _write(_out_path(args, "qrf-mc.json"), json_text(_qrf_payload(args, est, family)))
    return 0


def _cmd_qrf_quad(args) -> int:
    family = _iid_family(args.marginal, args.scale, 1)
    est = qrf_quadrature_iid(np.asarray(_parse_floats(args.x)), family, 0, args.nodes)
    args.command_name = "qrf-quad"
    _write(_out_path(args, "qrf-quad.json"), json_text(_qrf_payload(args, est, family)))
    return 0


def _cmd_solve_structural(args) -> int:
    game = _load_game(args)
    family = _iid_family(args.marginal, args.scale, game.player_count)
    config = _config(args)
    profile, residual = solve_structural_qre(
        game, family, args.method, None, config, args.nodes
    )
    payload = {
        "metadata": build_metadata(
            args.seed,
            {
                "command": "solve-structural",
                "game": game.to_json_dict(),
                "family": family_to_json(family),
                "method": args.method,
                "tol": config.tol,
                "mc_samples": config.mc_samples,
                "nodes": args.nodes,
            },
        ),
        "game": game.to_json_dict(),
        "family": family_to_json(family),
        "method": args.method,
        "profile": profile_to_json(profile),
        "residual": residual,
    }
    _write(_out_path(args, "solve-structural.json"), json_text(payload))
    return 0


def _cmd_check_monotone(args) -> int:
    family = _iid_family(args.marginal, args.scale, 1)
    config = SolverConfig(seed=args.seed)
    verdict, worst, witness = check_qrf_monotone(
        family, 0, args.n_actions, args.trials, config
    )
    payload = {
        "metadata": build_metadata(
            args.seed,
            {
                "command": "check-monotone",
                "family": family_to_json(family),
                "n_actions": args.n_actions,
                "trials": args.trials,
            },
        ),
        "family": family_to_json(family),
        "n_actions": args.n_actions,
        "trials": args.trials,
        "verdict": verdict,
        "worst_violation": worst,
        "witness": None if witness is None else list(witness),
    }
    _write(_out_path(args, "check-monotone.json"), json_text(payload))
    return 0 if verdict else 1


def _cmd_dice_oracle(args) -> int:
    v = _parse_floats(args.v)
    dice = DicePerturbation(tuple(_parse_floats(args.base)))
    report = enumerate_argmax_faces(v, dice, strict_mode=args.strict, tie_tolerance=args.tie_tol)
    intervals = dice_choice_intervals(v, dice, tie_tolerance=args.tie_tol)
    payload = {
        "metadata": build_metadata(
            args.seed,
            {
                "command": "dice-oracle",
                "v": v,
                "base": list(dice.base),
                "strict": args.strict,
                "tie_tol": args.tie_tol,
            },
        ),
        "v": v,
        "base": list(dice.base),
        "face_count": dice.face_count,
        "strict_counts": list(report.strict_counts),
        "tied_counts": list(report.tied_counts),
        "tie_faces": report.tie_face_count,
        "intervals": [{"low": lo, "high": hi} for lo, hi in intervals],
    }
    if report.tie_face_count == 0:
        payload["probabilities"] = [c / dice.face_count for c in report.strict_counts]
    _write(_out_path(args, "dice-oracle.json"), json_text(payload))
    return 0


def _ladder_grid(k: int, d1_values, d2_values):
    out = []
    for d1 in d1_values:
        for d2 in d2_values:
            if d2 > d1:
                out.append([0.0] + [d1] * (k - 2) + [d1 + d2])
    return out


def _base_grid(k: int, values):
    """All strictly increasing bases (0, b_2, ..., b_K) drawn from values."""
    from itertools import combinations

    return [(0.0, *combo) for combo in combinations(sorted(values), k - 1) if combo[0] > 0]


def _cmd_verify_dice_bound(args) -> int:
    v_grid = _ladder_grid(args.k, _parse_range(args.d1_range), _parse_range(args.d2_range))
    base_grid = _base_grid(args.k, _parse_range(args.base_range))
    if not v_grid or not base_grid:
        raise ValueError("grids produced no instances; widen the ranges")
    rows = list(dice_bound_rows(args.k, v_grid, base_grid, args.tie_tol))
    columns, csv_rows = dice_csv_rows(args.k, rows)
    all_pass = all(
        row.bound_ok and row.implication_ok is not False for row in rows
    )
    metadata = build_metadata(
        args.seed,
        {
            "command": "verify-dice-bound",
            "k": args.k,
            "d1_range": args.d1_range,
            "d2_range": args.d2_range,
            "base_range": args.base_range,
            "tie_tol": args.tie_tol,
        },
    )
    metadata["instances"] = len(rows)
    metadata["all_pass"] = all_pass
    _write(_out_path(args, "verify-dice-bound.csv"), csv_text(metadata, columns, csv_rows))
    return 0 if all_pass else 1


def _cmd_prop1_check(args) -> int:
    kinds = [kind.strip() for kind in args.marginals.split(",") if kind.strip()]
    families = [_iid_family(kind, args.scale, 1) for kind in kinds]
    v_grid = _ladder_grid(args.k, _parse_range(args.d1_range), _parse_range(args.d2_range))
    if not v_grid:
        raise ValueError("utility grid is empty; widen the ranges")
    report = prop1_bound_check(families, v_grid, tol=args.bound_tol)
    payload = {
        "metadata": build_metadata(
            args.seed,
            {
                "command": "prop1-check",
                "marginals": kinds,
                "scale": args.scale,
                "k": args.k,
                "d1_range": args.d1_range,
                "d2_range": args.d2_range,
                "bound_tol": args.bound_tol,
            },
        ),
        "bound_tol": args.bound_tol,
        "all_ok": report.all_ok,
        "rows": [
            {
                "family": family_to_json(row.family),
                "v": list(row.v),
                "probability": row.probability,
                "cap": row.cap,
                "margin": row.margin,
                "ok": row.ok,
            }
            for row in report.rows
        ],
    }
    _write(_out_path(args, "prop1-check.json"), json_text(payload))
    return 0 if report.all_ok else 1


def _cmd_exclusion_certificate(args) -> int:
    game = build_paradox_game(args.k, args.opponents)
    sigma_star = paradox_nash_target(game, args.alpha)
    kinds = [kind.strip() for kind in args.marginals.split(",") if kind.strip()]
    families = [_iid_family(kind, args.scale, game.player_count) for kind in kinds]
    config = _config(args)
    cert = exclusion_ball_search(
        game, sigma_star, args.epsilon, families, args.starts, config
    )
    payload = {
        "metadata": build_metadata(
            args.seed,
            {
                "command": "exclusion-certificate",
                "k": args.k,
                "opponents": list(args.opponents),
                "alpha": args.alpha,
                "epsilon": args.epsilon,
                "marginals": kinds,
                "scale": args.scale,
                "starts": args.starts,
                "tol": config.tol,
            },
        ),
        **certificate_to_json(cert),
    }
    _write(_out_path(args, "exclusion-certificate.json"), json_text(payload))
    return 0


def _cmd_region_sample(args) -> int:
    game = _load_game(args)
    samples = monotone_region_sample(game, args.samples, args.seed)
    columns, rows = region_csv_rows(game, samples)
    metadata = build_metadata(
        args.seed,
        {"command": "region-sample", "samples": args.samples},
    )
    metadata["samples"] = args.samples
    _write(_out_path(args, "region-sample.csv"), csv_text(metadata, columns, rows))
    return 0


def _cmd_nash_check(args) -> int:
    game = _load_game(args)
    profile = _parse_profile(args.profile)
    verdict = is_nash(game, profile, args.nash_tol)
    payload = {
        "metadata": build_metadata(
            args.seed,
            {
                "command": "nash-check",
                "game": game.to_json_dict(),
                "profile": profile_to_json(profile),
                "nash_tol": args.nash_tol,
            },
        ),
        "game": game.to_json_dict(),
        "profile": profile_to_json(profile),
        "nash_tol": args.nash_tol,
        "is_nash": verdict,
    }
    _write(_out_path(args, "nash-check.json"), json_text(payload))
    return 0 if verdict else 1


def _cmd_build_game(args) -> int:
    if args.family == "prism":
        game = build_prism_game()
    elif args.family == "paradox":
        game = build_paradox_game(args.k, args.opponents)
    else:
        raise ValueError(f"unknown game family {args.family!r}")
    payload = dict(game.to_json_dict())
    payload["metadata"] = build_metadata(
        args.seed,
        {
            "command": "build-game",
            "family": args.family,
            "k": args.k,
            "opponents": list(args.opponents),
        },
    )
    _write(_out_path(args, "build-game.json"), json_text(payload))
    return 0


def _build_parser() -> _Parser:
    parser = _Parser(prog="qrekit", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve-logit", help="damped fixed point of the logit response")
    _add_common(p, game=True, solver=True)
    p.add_argument("--lam", type=float, default=1.0, help="one precision for all players")
    p.add_argument("--lambdas", default=None, help="per-player precisions, comma-separated")
    p.set_defaults(handler=_cmd_solve_logit)

    p = sub.add_parser("trace-logit", help="trace the principal path over precision")
    _add_common(p, game=True, solver=True)
    p.add_argument("--lambda-max", type=float, default=50.0)
    p.add_argument("--step", type=float, default=0.1)
    p.add_argument("--direction", default=None, help="per-player direction, comma-separated")
    p.set_defaults(handler=_cmd_trace_logit)

    p = sub.add_parser("qrf-mc", help="Monte-Carlo choice probabilities")
    _add_common(p)
    p.add_argument("--x", required=True, help="utility vector, comma-separated")
    p.add_argument("--marginal", default="gumbel", choices=("gumbel", "normal", "uniform"))
    p.add_argument("--scale", type=float, default=1.0)
    p.add_argument("--mc-samples", type=int, default=1_000_000)
    p.set_defaults(handler=_cmd_qrf_mc)

    p = sub.add_parser("qrf-quad", help="quadrature choice probabilities")
    _add_common(p)
    p.add_argument("--x", required=True, help="utility vector, comma-separated")
    p.add_argument("--marginal", default="gumbel", choices=("gumbel", "normal", "uniform"))
    p.add_argument("--scale", type=float, default=1.0)
    p.add_argument("--nodes", type=int, default=2048)
    p.set_defaults(handler=_cmd_qrf_quad)

    p = sub.add_parser("solve-structural", help="structural fixed point for one family")
    _add_common(p, game=True, solver=True)
    p.add_argument("--marginal", default="gumbel", choices=("gumbel", "normal", "uniform"))
    p.add_argument("--scale", type=float, default=1.0)
    p.add_argument("--method", default="quadrature", choices=("quadrature", "monte_carlo"))
    p.add_argument("--nodes", type=int, default=2048)
    p.set_defaults(handler=_cmd_solve_structural)

    p = sub.add_parser("check-monotone", help="probe ordinal equivalence of the response map")
    _add_common(p)
    p.add_argument("--marginal", default="gumbel", choices=("gumbel", "normal", "uniform"))
    p.add_argument("--scale", type=float, default=1.0)
    p.add_argument("--n-actions", type=int, default=3)
    p.add_argument("--trials", type=int, default=100)
    p.set_defaults(handler=_cmd_check_monotone)

    p = sub.add_parser("dice-oracle", help="exact enumeration over permutation faces")
    _add_common(p)
    p.add_argument("--v", required=True, help="utility vector, comma-separated")
    p.add_argument("--base", required=True, help="strictly increasing base, comma-separated")
    p.add_argument("--strict", action="store_true", help="fail on tie faces")
    p.add_argument("--tie-tol", type=float, default=1e-12)
    p.set_defaults(handler=_cmd_dice_oracle)

    p = sub.add_parser("verify-dice-bound", help="middle-action cap on a product grid")
    _add_common(p)
    p.add_argument("--k", type=int, default=3)
    p.add_argument("--d1-range", default="0.25:2:0.25", help="bottom gap grid start:stop:step")
    p.add_argument("--d2-range", default="0.5:3:0.25", help="top gap grid start:stop:step")
    p.add_argument("--base-range", default="0.25:3:0.25", help="base value grid start:stop:step")
    p.add_argument("--tie-tol", type=float, default=1e-12)
    p.set_defaults(handler=_cmd_verify_dice_bound)

    p = sub.add_parser("prop1-check", help="1/K cap for the next-to-top action")
    _add_common(p)
    p.add_argument("--marginals", default="gumbel,normal,uniform")
    p.add_argument("--scale", type=float, default=1.0)
    p.add_argument("--k", type=int, default=3)
    p.add_argument("--d1-range", default="0.25:1:0.25")
    p.add_argument("--d2-range", default="0.5:2:0.25")
    p.add_argument("--bound-tol", type=float, default=1e-6)
    p.set_defaults(handler=_cmd_prop1_check)

    p = sub.add_parser("exclusion-certificate", help="ball-exclusion evidence")
    _add_common(p, solver=True)
    p.add_argument("--k", type=int, default=3)
    p.add_argument("--opponents", type=_parse_ints, default=(2,))
    p.add_argument("--alpha", type=float, default=0.35)
    p.add_argument("--epsilon", type=float, default=0.01)
    p.add_argument("--marginals", default="gumbel,normal,uniform")
    p.add_argument("--scale", type=float, default=1.0)
    p.add_argument("--starts", type=int, default=20)
    p.set_defaults(handler=_cmd_exclusion_certificate)

    p = sub.add_parser("region-sample", help="classify sampled profiles of the benchmark game")
    _add_common(p, game=True)
    p.add_argument("--samples", type=int, default=1000)
    p.set_defaults(handler=_cmd_region_sample)

    p = sub.add_parser("nash-check", help="best-response check for a profile")
    _add_common(p, game=True)
    p.add_argument(
        "--profile",
        required=True,
        help="per-player distributions: comma within, semicolon between",
    )
    p.add_argument("--nash-tol", type=float, default=1e-9)
    p.set_defaults(handler=_cmd_nash_check)

    p = sub.add_parser("build-game", help="write a built-in game as JSON")
    _add_common(p)
    p.add_argument("--family", default="prism", choices=GAME_ALIASES)
    p.add_argument("--k", type=int, default=3)
    p.add_argument("--opponents", type=_parse_ints, default=(2,))
    p.set_defaults(handler=_cmd_build_game)

    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except _UsageError as err:
        print(f"usage error: {err}", file=sys.stderr)
        return 2
    try:
        return args.handler(args)
    except (TieError, CertificateError) as err:
        print(f"check failed: {err}", file=sys.stderr)
        return 1
    except ConvergenceError as err:
        print(f"did not converge: {err}", file=sys.stderr)
        return 2
    except (ValueError, OSError, KeyError, json.JSONDecodeError) as err:
        print(f"error: {err}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
