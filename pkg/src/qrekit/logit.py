"""Logistic quantal response: the softmax response map, damped fixed-point
solves, precision path tracing from the uniform profile, and the analytic
infeasibility bound for the prism game."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .game import Game, StrategyProfile, _utilities_from_raw
from .solver import ConvergenceError, SolverConfig, damped_fixed_point

__all__ = [
    "LogitParams",
    "TracePoint",
    "TraceResult",
    "logit_qrf",
    "solve_logit_fixed_point",
    "trace_logit_path",
    "logit_feasibility_bound",
]

_TERMINAL_REASONS = ("converged", "max_lambda", "step_failure")


@dataclass(frozen=True)
class LogitParams:
    """One precision parameter per player; zero means uniform play."""

    lambdas: tuple[float, ...]

    def __post_init__(self):
        lams = tuple(float(l) for l in self.lambdas)
        if not lams:
            raise ValueError("need at least one precision parameter")
        if any(not np.isfinite(l) or l < 0 for l in lams):
            raise ValueError("precision parameters must be finite and nonnegative")
        object.__setattr__(self, "lambdas", lams)

    @classmethod
    def scalar(cls, lam: float, player_count: int) -> "LogitParams":
        return cls((float(lam),) * player_count)

    def scaled(self, t: float) -> "LogitParams":
        return LogitParams(tuple(t * l for l in self.lambdas))


@dataclass(frozen=True)
class TracePoint:
    multiplier: float
    profile: StrategyProfile
    residual: float


@dataclass(frozen=True)
class TraceResult:
    """A precision path: fixed points indexed by the scalar multiplier on the
    direction vector, with strictly increasing multipliers."""

    points: tuple[TracePoint, ...]
    terminal_reason: str

    def __post_init__(self):
        if self.terminal_reason not in _TERMINAL_REASONS:
            raise ValueError(f"unknown terminal reason {self.terminal_reason!r}")
        if not self.points:
            raise ValueError("a trace needs at least one point")
        mults = [p.multiplier for p in self.points]
        if any(b <= a for a, b in zip(mults, mults[1:])):
            raise ValueError("trace multipliers must be strictly increasing")


def logit_qrf(x, lam: float) -> np.ndarray:
    """Softmax of lam * x with max subtraction for overflow safety."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1 or x.size == 0:
        raise ValueError("utility vector must be nonempty and 1-D")
    if not np.all(np.isfinite(x)):
        raise ValueError("utilities must be finite")
    lam = float(lam)
    if not np.isfinite(lam) or lam < 0:
        raise ValueError("lam must be finite and nonnegative")
    z = lam * x
    z = z - z.max()
    e = np.exp(z)
    return e / e.sum()


def _logit_response(game: Game, params: LogitParams):
    if len(params.lambdas) != game.player_count:
        raise ValueError(
            f"got {len(params.lambdas)} precision parameters for "
            f"{game.player_count} players"
        )

    def response(strategies):
        targets = [
            logit_qrf(_utilities_from_raw(game.payoffs[i], strategies, i), params.lambdas[i])
            for i in range(game.player_count)
        ]
        return targets, 0.0

    return response


def solve_logit_fixed_point(
    game: Game,
    params: LogitParams,
    start: StrategyProfile | None = None,
    config: SolverConfig = SolverConfig(),
):
    """Damped iteration to a logistic quantal response fixed point.

    Returns (profile, residual); raises ConvergenceError with the last
    iterate attached when max_iters is exhausted.
    """
    if start is None:
        start = StrategyProfile.uniform(game)
    response = _logit_response(game, params)
    strategies, residual = damped_fixed_point(response, start.strategies, config)
    return StrategyProfile(tuple(strategies)), residual


def trace_logit_path(
    game: Game,
    direction: LogitParams,
    lambda_max: float,
    config: SolverConfig = SolverConfig(),
    *,
    initial_step: float = 0.1,
    step_cap: float = 1.0,
    max_halvings: int = 30,
    stall_tol: float | None = None,
) -> TraceResult:
    """Follow the principal fixed-point branch from the uniform profile.

    The path starts at multiplier 0, where the uniform profile is an exact
    fixed point, and advances with an adaptive step: halve on a failed solve,
    double (up to ``step_cap``) on success, warm-starting from the last
    accepted point. With ``stall_tol`` set, the trace stops early with reason
    "converged" once three consecutive accepted points move less than that in
    max norm; otherwise it runs to ``lambda_max`` ("max_lambda") or exhausts
    ``max_halvings`` ("step_failure"), keeping the last good point.
    """
    lambda_max = float(lambda_max)
    if not np.isfinite(lambda_max) or lambda_max < 0:
        raise ValueError("lambda_max must be finite and nonnegative")
    if initial_step <= 0 or step_cap <= 0:
        raise ValueError("steps must be positive")

    profile = StrategyProfile.uniform(game)
    targets, _ = _logit_response(game, direction.scaled(0.0))(profile.strategies)
    residual0 = max(
        float(np.max(np.abs(s - t))) for s, t in zip(profile.strategies, targets)
    )
    points = [TracePoint(0.0, profile, residual0)]
    if lambda_max == 0.0:
        return TraceResult(tuple(points), "max_lambda")

    t = 0.0
    step = min(initial_step, step_cap, lambda_max)
    stall_count = 0
    while t < lambda_max:
        proposal = min(t + step, lambda_max)
        halvings = 0
        while True:
            try:
                profile_next, residual = solve_logit_fixed_point(
                    game, direction.scaled(proposal), start=profile, config=config
                )
                break
            except ConvergenceError:
                halvings += 1
                if halvings > max_halvings:
                    return TraceResult(tuple(points), "step_failure")
                step /= 2.0
                proposal = min(t + step, lambda_max)
        moved = profile.distance_max(profile_next)
        t, profile = proposal, profile_next
        points.append(TracePoint(t, profile, residual))
        step = min(step * 2.0, step_cap)
        if stall_tol is not None:
            stall_count = stall_count + 1 if moved <= stall_tol else 0
            if stall_count >= 3 and t < lambda_max:
                return TraceResult(tuple(points), "converged")
    return TraceResult(tuple(points), "max_lambda")


def logit_feasibility_bound(alpha: float) -> tuple[float, float]:
    """Lower bound certifying that no logistic fixed point of the prism game
    puts probability ``alpha`` on the middle row when alpha > 1/3.

    A fixed point with middle-row weight alpha forces total probability mass
    at least alpha**2/x + alpha + x, where x is the bottom-row weight and
    x <= 1 - 2*alpha. The map x -> alpha**2/x + alpha + x decreases on
    (0, alpha), so the minimum over feasible x sits at x = 1 - 2*alpha; a
    minimum above 1 is the contradiction. Returns (minimum, argmin).
    """
    alpha = float(alpha)
    if not 1.0 / 3.0 < alpha < 0.5:
        raise ValueError("alpha must lie strictly between 1/3 and 1/2")
    x_star = 1.0 - 2.0 * alpha
    return alpha * alpha / x_star + alpha + x_star, x_star
