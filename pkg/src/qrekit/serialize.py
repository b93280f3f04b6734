"""Deterministic file output: canonical JSON, comment-headed CSV, atomic
writes, and the JSON forms of the package's domain objects.

Determinism contract: identical inputs and seed produce byte-identical text.
Floats are rendered with repr (shortest round-trip), JSON keys are sorted,
and no timestamps or environment details enter the output.
"""

from __future__ import annotations

import hashlib
import json
import os
import tempfile
from fractions import Fraction

import numpy as np

from . import __version__
from .certify import ExclusionCertificate, RegionSample
from .game import Game, StrategyProfile
from .logit import TraceResult
from .structural import Marginal, PerturbationFamily, QRFEstimate

TOOL_NAME = "qrekit"

__all__ = [
    "TOOL_NAME",
    "config_hash",
    "build_metadata",
    "json_text",
    "csv_text",
    "atomic_write_text",
    "family_to_json",
    "family_from_json",
    "profile_to_json",
    "profile_from_json",
    "estimate_to_json",
    "trace_csv_rows",
    "region_csv_rows",
    "dice_csv_rows",
    "certificate_to_json",
]


def _jsonable(value):
    """Recursively coerce numpy containers and exact rationals to plain
    JSON-serializable Python values."""
    if isinstance(value, np.ndarray):
        return [_jsonable(v) for v in value.tolist()]
    if isinstance(value, (np.floating,)):
        return float(value)
    if isinstance(value, (np.integer,)):
        return int(value)
    if isinstance(value, np.bool_):
        return bool(value)
    if isinstance(value, Fraction):
        return {"numerator": value.numerator, "denominator": value.denominator}
    if isinstance(value, dict):
        return {k: _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    return value


def config_hash(config: dict) -> str:
    """16-hex-digit digest of the canonical JSON of a configuration dict."""
    canonical = json.dumps(_jsonable(config), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()[:16]


def build_metadata(seed: int, config: dict) -> dict:
    return {
        "tool": TOOL_NAME,
        "version": __version__,
        "seed": int(seed),
        "config_hash": config_hash(config),
    }


def json_text(data) -> str:
    return json.dumps(_jsonable(data), sort_keys=True, indent=2) + "\n"


def _cell(value) -> str:
    if isinstance(value, bool) or isinstance(value, np.bool_):
        return "true" if value else "false"
    if value is None:
        return "na"
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return str(value)


def csv_text(metadata: dict, columns, rows) -> str:
    """CSV with '# key=value' comment headers followed by a column header
    line and data rows."""
    lines = [f"# {key}={_cell(val)}" for key, val in metadata.items()]
    lines.append(",".join(columns))
    for row in rows:
        if len(row) != len(columns):
            raise ValueError(f"row has {len(row)} cells for {len(columns)} columns")
        lines.append(",".join(_cell(v) for v in row))
    return "\n".join(lines) + "\n"


def atomic_write_text(path: str, text: str) -> None:
    """Write via a sibling temp file and rename, so readers never observe a
    half-written file."""
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix=".part")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as handle:
            handle.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def family_to_json(family: PerturbationFamily) -> list:
    return [
        {"player": i, "marginal": m.kind, "scale": m.scale}
        for i, m in enumerate(family.marginals)
    ]


def family_from_json(items) -> PerturbationFamily:
    if not items:
        raise ValueError("family JSON must list at least one marginal")
    by_player = {}
    for item in items:
        player = int(item["player"])
        if player in by_player:
            raise ValueError(f"duplicate marginal for player {player}")
        by_player[player] = Marginal(str(item["marginal"]), float(item["scale"]))
    if sorted(by_player) != list(range(len(by_player))):
        raise ValueError("family JSON must cover players 0..n-1 exactly once each")
    return PerturbationFamily(tuple(by_player[i] for i in range(len(by_player))))


def profile_to_json(profile: StrategyProfile) -> list:
    return [dist.tolist() for dist in profile.strategies]


def profile_from_json(lists) -> StrategyProfile:
    return StrategyProfile.from_lists(lists)


def estimate_to_json(est: QRFEstimate) -> dict:
    out = {
        "probabilities": est.probabilities.tolist(),
        "standard_errors": est.standard_errors.tolist(),
        "method": est.method,
    }
    if est.method == "monte_carlo":
        out["sample_count"] = est.sample_count
        out["tie_count"] = est.tie_count
    else:
        out["nodes"] = est.nodes
    return out


def _profile_columns(game: Game):
    return [
        f"p{i}_{a}" for i in range(game.player_count) for a in range(game.action_counts[i])
    ]


def trace_csv_rows(game: Game, trace: TraceResult):
    """(columns, rows) for a homotopy trace: the multiplier, the accepted
    residual, then profile entries player-major."""
    columns = ["lambda", "residual"] + _profile_columns(game)
    rows = [
        [point.multiplier, point.residual, *point.profile.flat().tolist()]
        for point in trace.points
    ]
    return columns, rows


def region_csv_rows(game: Game, samples):
    """(columns, rows) for region samples: profile entries, then the labels
    joined with '+'."""
    columns = _profile_columns(game) + ["classification"]
    rows = []
    for sample in samples:
        if not isinstance(sample, RegionSample):
            raise ValueError("expected RegionSample items")
        rows.append([*sample.profile.flat().tolist(), "+".join(sample.classification)])
    return columns, rows


def dice_csv_rows(k: int, rows_iter):
    """(columns, rows) for dice bound rows: utilities, base, strict-win
    probabilities, tie faces, premise/bound/implication flags."""
    from math import factorial

    faces = factorial(k)
    columns = (
        [f"v_{a}" for a in range(k)]
        + [f"base_{a}" for a in range(k)]
        + [f"p_{a}" for a in range(k)]
        + ["tie_faces", "premise_ok", "bound_ok", "implication_ok"]
    )
    rows = []
    for row in rows_iter:
        rows.append(
            [
                *row.v,
                *row.base,
                *[count / faces for count in row.strict_counts],
                row.tie_face_count,
                row.premise_ok,
                row.bound_ok,
                row.implication_ok,
            ]
        )
    return columns, rows


def certificate_to_json(cert: ExclusionCertificate) -> dict:
    return {
        "game": cert.game.to_json_dict(),
        "sigma_star": profile_to_json(cert.sigma_star),
        "epsilon": cert.epsilon,
        "analytic_reason": cert.analytic_reason,
        "numeric_evidence": [
            {
                "family": family_to_json(ev.family),
                "equilibria": [
                    {"profile": profile_to_json(p), "residual": r}
                    for p, r in ev.equilibria
                ],
                "min_distance": ev.min_distance,
            }
            for ev in cert.numeric_evidence
        ],
    }
