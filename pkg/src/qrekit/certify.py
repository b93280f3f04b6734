"""Equilibrium-exclusion certificates and the supporting checks: the
mixture path toward a target equilibrium, the ladder-shape premise test, the
1/K cap on the next-to-top action, and region classification for the
three-by-two benchmark game.

Names like ``prop1`` and ``lemma2`` are fixed interface tokens; the
docstrings state what each check computes.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .game import (
    Game,
    StrategyProfile,
    build_paradox_game,
    build_prism_game,
    expected_utilities,
    is_nash,
)
from .solver import SolverConfig, multi_start_profiles
from .structural import PerturbationFamily, qrf_quadrature_iid
from .game import _utilities_from_raw

__all__ = [
    "CertificateError",
    "GapPair",
    "FamilyEvidence",
    "ExclusionCertificate",
    "RegionSample",
    "REGION_LABELS",
    "paradox_nash_target",
    "lemma2_sequence",
    "prop1_premises_hold",
    "Prop1Row",
    "Prop1Report",
    "prop1_bound_check",
    "exclusion_ball_search",
    "recheck_certificate",
    "classify_prism_profile",
    "monotone_region_sample",
]


class CertificateError(RuntimeError):
    """Certification failed on the evidence: an equilibrium landed inside
    the exclusion ball, or an analytic probe broke the ladder premise.
    Precondition problems (bad epsilon, non-Nash target) raise ValueError."""


@dataclass(frozen=True)
class GapPair:
    """Bottom and top utility gaps of a ladder-shaped vector: d1 is the gap
    above the lowest action, d2 the gap below the highest."""

    d1: float
    d2: float

    def __post_init__(self):
        if not (np.isfinite(self.d1) and np.isfinite(self.d2)):
            raise ValueError("gaps must be finite")


def _alpha_interval(k: int) -> tuple[float, float]:
    return 1.0 / k, 1.0 / (k - 1)


def _check_alpha(k: int, alpha: float) -> float:
    alpha = float(alpha)
    lo, hi = _alpha_interval(k)
    if not lo < alpha < hi:
        raise ValueError(f"alpha must lie strictly between 1/{k} and 1/{k - 1}")
    return alpha


def _paradox_shape(game: Game) -> None:
    """Require the exact payoff structure produced by build_paradox_game."""
    k = game.action_counts[0]
    rebuilt = build_paradox_game(k, game.action_counts[1:])
    if not np.array_equal(game.payoffs, rebuilt.payoffs):
        raise ValueError("game does not have the ladder-with-indifference structure")


def paradox_nash_target(game: Game, alpha: float) -> StrategyProfile:
    """The Nash profile targeted by the approach sequence: opponents pure on
    their dominant first action; player 1 plays (0, alpha, ..., alpha,
    1 - (K-2) alpha)."""
    _paradox_shape(game)
    k = game.action_counts[0]
    alpha = _check_alpha(k, alpha)
    first = np.full(k, alpha)
    first[0] = 0.0
    first[-1] = 1.0 - (k - 2) * alpha
    rest = []
    for c in game.action_counts[1:]:
        vec = np.zeros(c)
        vec[0] = 1.0
        rest.append(vec)
    return StrategyProfile((first, *rest))


def lemma2_sequence(game: Game, alpha: float, lam: int) -> StrategyProfile:
    """Point lam of the approach path: the target Nash profile mixed with the
    uniform profile at weights (1 - 1/lam, 1/lam).

    lam = 1 is exactly uniform; the path converges to the target in max norm
    at rate 1/lam.
    """
    lam = int(lam)
    if lam < 1:
        raise ValueError("lam must be a positive integer")
    target = paradox_nash_target(game, alpha)
    w = 1.0 - 1.0 / lam
    mixed = [
        w * t + (1.0 / lam) * (1.0 / len(t)) for t in target.strategies
    ]
    return StrategyProfile(tuple(mixed))


def _ladder_vector_shape(v: np.ndarray, tol: float) -> tuple[bool, GapPair]:
    d1 = float(v[1] - v[0])
    d2 = float(v[-1] - v[-2])
    gaps = GapPair(d1, d2)
    middles = v[1:-1]
    if float(np.max(middles) - np.min(middles)) > tol:
        return False, gaps
    if not (v[0] < v[1] - tol and v[-2] < v[-1] - tol):
        return False, gaps
    return bool(d2 > d1 + tol), gaps


def prop1_premises_hold(game: Game, profile: StrategyProfile, tol: float = 1e-9):
    """Whether player 1's expected utilities at ``profile`` have the ladder
    shape: lowest strictly below the equal middles, top strictly above, and
    the top gap strictly wider than the bottom gap. Returns (holds, gaps)."""
    if game.action_counts[0] < 3:
        raise ValueError("player 1 needs at least three actions")
    if tol < 0:
        raise ValueError("tol must be nonnegative")
    u = expected_utilities(game, profile)[0]
    return _ladder_vector_shape(np.asarray(u, dtype=np.float64), tol)


@dataclass(frozen=True)
class Prop1Row:
    """Bound check for one (family, utility vector) pair: probability of the
    next-to-top action, the 1/K cap, and the signed margin cap - probability."""

    family: PerturbationFamily
    v: tuple[float, ...]
    probability: float
    cap: float
    margin: float
    ok: bool


@dataclass(frozen=True)
class Prop1Report:
    rows: tuple[Prop1Row, ...]
    all_ok: bool


def prop1_bound_check(families, v_instances, tol: float = 1e-6) -> Prop1Report:
    """Quadrature check that the next-to-top action's choice probability does
    not exceed 1/K + tol, for every family and ladder-shaped utility vector.

    Inputs whose utilities do not have the ladder shape are rejected.
    """
    families = list(families)
    vs = [np.asarray(v, dtype=np.float64) for v in v_instances]
    if not families or not vs:
        raise ValueError("families and v_instances must be nonempty")
    for v in vs:
        if v.ndim != 1 or len(v) < 3 or not np.all(np.isfinite(v)):
            raise ValueError("each utility vector must be finite with length >= 3")
        holds, gaps = _ladder_vector_shape(v, 1e-12)
        if not holds:
            raise ValueError(
                f"utility vector {tuple(v)} lacks the ladder shape (gaps {gaps.d1}, {gaps.d2})"
            )

    rows = []
    all_ok = True
    for family in families:
        for v in vs:
            k = len(v)
            p = float(qrf_quadrature_iid(v, family, 0).probabilities[k - 2])
            cap = 1.0 / k
            ok = p <= cap + tol
            all_ok = all_ok and ok
            rows.append(Prop1Row(family, tuple(v), p, cap, cap - p, ok))
    return Prop1Report(tuple(rows), all_ok)


@dataclass(frozen=True)
class FamilyEvidence:
    """Multi-start solve record for one perturbation family: every solved
    equilibrium with its residual, and the closest distance to the excluded
    profile."""

    family: PerturbationFamily
    equilibria: tuple[tuple[StrategyProfile, float], ...]
    min_distance: float

    def __post_init__(self):
        if not self.equilibria:
            raise ValueError("evidence needs at least one solved equilibrium")
        if not np.isfinite(self.min_distance) or self.min_distance < 0:
            raise ValueError("min_distance must be a nonnegative real")


@dataclass(frozen=True)
class ExclusionCertificate:
    """Evidence that no structural quantal response equilibrium of ``game``
    lies within ``epsilon`` (max norm) of ``sigma_star``."""

    game: Game
    sigma_star: StrategyProfile
    epsilon: float
    analytic_reason: str
    numeric_evidence: tuple[FamilyEvidence, ...]

    def __post_init__(self):
        if not self.epsilon > 0:
            raise ValueError("epsilon must be positive")
        if not is_nash(self.game, self.sigma_star):
            raise ValueError("sigma_star must be a Nash equilibrium of game")
        for ev in self.numeric_evidence:
            if not ev.min_distance > self.epsilon:
                raise ValueError(
                    f"evidence distance {ev.min_distance} does not clear epsilon {self.epsilon}"
                )
            worst = min(
                self.sigma_star.distance_max(profile) for profile, _ in ev.equilibria
            )
            if abs(worst - ev.min_distance) > 1e-12:
                raise ValueError("stored min_distance inconsistent with equilibria")


def _ball_feasibility(sigma_star: StrategyProfile, k: int) -> float:
    """Largest radius keeping the whole ball inside the region where the
    first action stays below 1/K and the second stays above it."""
    s1 = sigma_star[0]
    return float(min(1.0 / k - s1[0], s1[1] - 1.0 / k))


_ANALYTIC_REASON = (
    "Every profile in the ball keeps action 1 below 1/K and action 2 above "
    "1/K. For any opponent play that is not exactly pure, player 1's "
    "expected utilities form a strict ladder whose top gap doubles the "
    "bottom gap, so a choice rule that is ordinally equivalent to those "
    "utilities must weight the next-to-top action at least as much as "
    "action 2, hence above 1/K. Exchangeable perturbation families cap the "
    "next-to-top action at 1/K, so no such rule selects a profile in the "
    "ball; with opponents exactly pure, player 1 is indifferent and "
    "structural responses put 1/K on action 1, also outside the ball."
)


def exclusion_ball_search(
    game: Game,
    sigma_star: StrategyProfile,
    epsilon: float,
    families,
    starts: int = 20,
    config: SolverConfig = SolverConfig(),
) -> ExclusionCertificate:
    """Build an ExclusionCertificate for a ladder-structure game.

    Analytic branch: verifies on probe opponent mixtures that the ladder
    premise holds with the top gap twice the bottom gap, backing the recorded
    reason. Numeric branch: for each family, solves the structural fixed
    point from the uniform start plus ``starts`` random starts and requires
    every solution to land farther than ``epsilon`` from ``sigma_star``.
    """
    from .structural import solve_structural_qre

    _paradox_shape(game)
    k = game.action_counts[0]
    epsilon = float(epsilon)
    if not is_nash(game, sigma_star):
        raise ValueError("sigma_star is not a Nash equilibrium of the game")
    feasible = _ball_feasibility(sigma_star, k)
    if not 0.0 < epsilon < feasible:
        raise ValueError(
            f"epsilon must lie in (0, {feasible:.6g}) to keep the ball inside "
            "the region separating actions 1 and 2 across 1/K"
        )
    families = list(families)
    if not families:
        raise ValueError("at least one perturbation family is required")
    if starts < 0:
        raise ValueError("starts must be nonnegative")

    # analytic branch: the ladder premise with doubled top gap on probe
    # opponent mixtures, degenerating to indifference only when exactly pure
    for q in (0.9, 0.99, 0.999):
        probe_rest = []
        for i in range(1, game.player_count):
            c = game.action_counts[i]
            dist = np.full(c, (1.0 - q) / (c - 1)) if c > 1 else np.ones(1)
            if c > 1:
                dist[0] = q
            probe_rest.append(dist)
        probe = StrategyProfile((sigma_star[0], *probe_rest))
        holds, gaps = prop1_premises_hold(game, probe)
        if not holds or abs(gaps.d2 - 2.0 * gaps.d1) > 1e-9 * max(1.0, abs(gaps.d1)):
            raise CertificateError(
                f"ladder premise failed on probe mixture {q}: gaps ({gaps.d1}, {gaps.d2})"
            )

    evidence = []
    for family in families:
        solved = []
        for start in multi_start_profiles(game, starts, config.seed):
            profile, residual = solve_structural_qre(
                game, family, "quadrature", start, config
            )
            solved.append((profile, float(residual)))
        distances = [sigma_star.distance_max(p) for p, _ in solved]
        min_distance = float(min(distances))
        if min_distance <= epsilon:
            raise CertificateError(
                f"family {family.marginals[0].kind} produced an equilibrium at "
                f"distance {min_distance:.6g} <= epsilon {epsilon:.6g}"
            )
        evidence.append(FamilyEvidence(family, tuple(solved), min_distance))

    return ExclusionCertificate(
        game, sigma_star, epsilon, _ANALYTIC_REASON, tuple(evidence)
    )


def recheck_certificate(
    cert: ExclusionCertificate, tol: float = 1e-10, nodes: int = 2048
) -> bool:
    """Re-derive every stored equilibrium's residual from the stored game and
    family, requiring it within tolerance and the profile outside the ball."""
    game = cert.game
    for ev in cert.numeric_evidence:
        for profile, stored_residual in ev.equilibria:
            worst = 0.0
            for i in range(game.player_count):
                u = _utilities_from_raw(game.payoffs[i], profile.strategies, i)
                target = qrf_quadrature_iid(u, ev.family, i, nodes).probabilities
                worst = max(worst, float(np.max(np.abs(target - profile[i]))))
            if worst > max(tol, stored_residual) + 1e-12:
                return False
            if cert.sigma_star.distance_max(profile) <= cert.epsilon:
                return False
    return True


REGION_LABELS = (
    "nash",
    "monotone_interior",
    "monotone_boundary",
    "excluded_by_prop1",
    "other",
)


@dataclass(frozen=True)
class RegionSample:
    """One sampled profile with its classification labels."""

    profile: StrategyProfile
    classification: tuple[str, ...]

    def __post_init__(self):
        labels = tuple(self.classification)
        if not labels or any(l not in REGION_LABELS for l in labels):
            raise ValueError(f"labels must be nonempty and drawn from {REGION_LABELS}")
        object.__setattr__(self, "classification", labels)


def _prism_shape(game: Game) -> None:
    if not np.array_equal(game.payoffs, build_prism_game().payoffs):
        raise ValueError("region sampling is specific to the three-by-two benchmark game")


def classify_prism_profile(game: Game, profile: StrategyProfile, tol: float = 1e-9):
    """Labels for one profile of the three-by-two benchmark game.

    nash: the opponent's first column gets all mass (within tol).
    monotone_interior: second column has positive mass and the row ranking
        is strictly increasing.
    monotone_boundary: second column has no mass (within tol) and the row
        distribution is uniform within tol, matching the indifference.
    excluded_by_prop1: monotone_interior with the middle row above 1/3.
    other: none of the above.
    """
    _prism_shape(game)
    s1, s2 = profile[0], profile[1]
    labels = []
    if s2[0] >= 1.0 - tol:
        labels.append("nash")
    interior = s2[1] > tol
    if interior and s1[2] > s1[1] > s1[0]:
        labels.append("monotone_interior")
        if s1[1] > 1.0 / 3.0:
            labels.append("excluded_by_prop1")
    if not interior and float(np.max(s1) - np.min(s1)) <= tol:
        labels.append("monotone_boundary")
    if not labels:
        labels.append("other")
    return tuple(labels)


def monotone_region_sample(game: Game, samples: int, seed: int = 0):
    """Uniformly sample the product of the two simplices and classify each
    draw. Returns a list of RegionSample in draw order."""
    _prism_shape(game)
    if samples < 1:
        raise ValueError("samples must be positive")
    seq = np.random.SeedSequence(seed, spawn_key=(3,))
    rng = np.random.Generator(np.random.Philox(seq))
    out = []
    for _ in range(samples):
        s1 = rng.dirichlet(np.ones(3))
        s2 = rng.dirichlet(np.ones(2))
        profile = StrategyProfile((s1, s2))
        out.append(RegionSample(profile, classify_prism_profile(game, profile)))
    return out
