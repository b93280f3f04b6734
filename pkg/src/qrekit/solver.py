"""Shared fixed-point machinery: solver configuration, damped iteration,
and seeded multi-start profiles."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .game import Game, StrategyProfile

__all__ = [
    "SolverConfig",
    "ConvergenceError",
    "damped_fixed_point",
    "random_interior_profile",
    "multi_start_profiles",
]


@dataclass(frozen=True)
class SolverConfig:
    """Knobs shared by every fixed-point solve.

    ``seed`` feeds all randomized work (Monte-Carlo draws, random starts);
    ``mc_samples`` only matters to Monte-Carlo estimators.
    """

    tol: float = 1e-10
    max_iters: int = 100_000
    damping: float = 0.5
    seed: int = 0
    mc_samples: int = 1_000_000

    def __post_init__(self):
        if not (np.isfinite(self.tol) and self.tol > 0):
            raise ValueError("tol must be a positive finite real")
        if int(self.max_iters) < 1:
            raise ValueError("max_iters must be at least 1")
        if not 0.0 < self.damping <= 1.0:
            raise ValueError("damping must lie in (0, 1]")
        if not 0 <= int(self.seed) < 2**64:
            raise ValueError("seed must be a 64-bit nonnegative integer")
        if int(self.mc_samples) < 1:
            raise ValueError("mc_samples must be positive")
        object.__setattr__(self, "max_iters", int(self.max_iters))
        object.__setattr__(self, "seed", int(self.seed))
        object.__setattr__(self, "mc_samples", int(self.mc_samples))


class ConvergenceError(RuntimeError):
    """Raised when damped iteration fails to reach tolerance; carries the
    last iterate so callers can report or restart."""

    def __init__(self, message, strategies=None, residual=None, iterations=None):
        super().__init__(message)
        self.strategies = strategies
        self.residual = residual
        self.iterations = iterations


def damped_fixed_point(response, start_strategies, config: SolverConfig):
    """Iterate sigma <- (1 - d) sigma + d R(sigma) until the max-norm
    residual ||sigma - R(sigma)|| drops to config.tol plus whatever slack the
    response reports (nonzero for Monte-Carlo responses).

    ``response`` maps a list of per-player strategy vectors to
    (targets, slack). Returns (strategies, residual) for the accepted
    iterate, whose residual is the one checked.
    """
    sigma = [np.array(s, dtype=np.float64) for s in start_strategies]
    d = config.damping
    residual = np.inf
    for iteration in range(config.max_iters):
        targets, slack = response(sigma)
        residual = max(
            float(np.max(np.abs(s - t))) for s, t in zip(sigma, targets)
        )
        if residual <= config.tol + slack:
            return sigma, residual
        sigma = [(1.0 - d) * s + d * t for s, t in zip(sigma, targets)]
    raise ConvergenceError(
        f"no fixed point within {config.max_iters} iterations "
        f"(last residual {residual:.3e})",
        strategies=sigma,
        residual=residual,
        iterations=config.max_iters,
    )


def random_interior_profile(game: Game, rng: np.random.Generator) -> StrategyProfile:
    """Uniformly distributed interior profile (flat Dirichlet per player)."""
    return StrategyProfile(
        tuple(rng.dirichlet(np.ones(c)) for c in game.action_counts)
    )


def multi_start_profiles(game: Game, count: int, seed: int) -> list[StrategyProfile]:
    """Uniform profile plus ``count`` seeded random interior starts."""
    if count < 0:
        raise ValueError("count must be nonnegative")
    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence(seed, spawn_key=(4,))))
    starts = [StrategyProfile.uniform(game)]
    starts.extend(random_interior_profile(game, rng) for _ in range(count))
    return starts
