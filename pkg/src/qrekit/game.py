"""Finite normal-form games.

Expected utility, Nash checks, ordinal payoff-monotonicity, and builders for
the two benchmark games used throughout the package: a 3x2 "prism" game whose
Nash set is a two-dimensional face, and a "paradox" family built around an
indifference row with escalating payoff gaps.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import prod

import numpy as np

__all__ = [
    "SIMPLEX_TOL",
    "Game",
    "StrategyProfile",
    "OrdinalComparison",
    "expected_utility",
    "expected_utilities",
    "is_nash",
    "is_payoff_monotone",
    "compare_ordinal",
    "ordinal_violations",
    "build_prism_game",
    "build_paradox_game",
]

# Tolerance baked into StrategyProfile validation: entries must sum to 1
# within this much.
SIMPLEX_TOL = 1e-9


def _readonly(values) -> np.ndarray:
    arr = np.array(values, dtype=np.float64)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class Game:
    """An n-player game with a dense payoff tensor per player.

    ``payoffs`` has shape ``(n, |A_1|, ..., |A_n|)``; axis ``j + 1`` of the
    stacked tensor indexes player ``j``'s action.
    """

    action_counts: tuple[int, ...]
    payoffs: np.ndarray

    def __post_init__(self):
        counts = tuple(int(c) for c in self.action_counts)
        if len(counts) < 1 or any(c < 1 for c in counts):
            raise ValueError("action_counts must be a nonempty tuple of positive integers")
        tensor = np.asarray(self.payoffs, dtype=np.float64)
        expected_shape = (len(counts), *counts)
        if tensor.shape != expected_shape:
            raise ValueError(
                f"payoff tensor has shape {tensor.shape}, expected {expected_shape}"
            )
        if not np.all(np.isfinite(tensor)):
            raise ValueError("payoffs must be finite")
        object.__setattr__(self, "action_counts", counts)
        object.__setattr__(self, "payoffs", _readonly(tensor))

    @property
    def player_count(self) -> int:
        return len(self.action_counts)

    def to_json_dict(self) -> dict:
        """JSON form: per-player flat payoff arrays with player 1's action
        index varying fastest (column-major flattening over the action axes)."""
        return {
            "players": self.player_count,
            "actions": list(self.action_counts),
            "payoffs": [
                self.payoffs[i].ravel(order="F").tolist()
                for i in range(self.player_count)
            ],
        }

    @classmethod
    def from_json_dict(cls, data: dict) -> "Game":
        counts = tuple(int(c) for c in data["actions"])
        n = int(data["players"])
        if n != len(counts):
            raise ValueError("'players' disagrees with the length of 'actions'")
        flats = data["payoffs"]
        if len(flats) != n:
            raise ValueError("'payoffs' must hold one flat array per player")
        size = prod(counts)
        tensors = []
        for flat in flats:
            arr = np.asarray(flat, dtype=np.float64)
            if arr.size != size:
                raise ValueError(f"flat payoff array has {arr.size} entries, expected {size}")
            tensors.append(arr.reshape(counts, order="F"))
        return cls(counts, np.stack(tensors))


@dataclass(frozen=True)
class StrategyProfile:
    """One mixed strategy per player; every entry validated as a simplex point."""

    strategies: tuple[np.ndarray, ...]

    def __post_init__(self):
        cleaned = []
        for s in self.strategies:
            arr = np.asarray(s, dtype=np.float64)
            if arr.ndim != 1 or arr.size == 0:
                raise ValueError("each strategy must be a nonempty 1-D vector")
            if not np.all(np.isfinite(arr)):
                raise ValueError("strategy entries must be finite")
            if np.any(arr < 0.0):
                raise ValueError("strategy entries must be nonnegative")
            if abs(float(arr.sum()) - 1.0) > SIMPLEX_TOL:
                raise ValueError(f"strategy entries must sum to 1, got {arr.sum()!r}")
            cleaned.append(_readonly(arr))
        if not cleaned:
            raise ValueError("profile needs at least one player")
        object.__setattr__(self, "strategies", tuple(cleaned))

    @classmethod
    def uniform(cls, game: Game) -> "StrategyProfile":
        return cls(tuple(np.full(c, 1.0 / c) for c in game.action_counts))

    @classmethod
    def pure(cls, game: Game, actions: tuple[int, ...]) -> "StrategyProfile":
        if len(actions) != game.player_count:
            raise ValueError("need one action per player")
        strategies = []
        for count, action in zip(game.action_counts, actions):
            if not 0 <= action < count:
                raise ValueError(f"action {action} out of range for {count} actions")
            vec = np.zeros(count)
            vec[action] = 1.0
            strategies.append(vec)
        return cls(tuple(strategies))

    @classmethod
    def from_lists(cls, lists) -> "StrategyProfile":
        return cls(tuple(np.asarray(entry, dtype=np.float64) for entry in lists))

    def __getitem__(self, player: int) -> np.ndarray:
        return self.strategies[player]

    @property
    def player_count(self) -> int:
        return len(self.strategies)

    def flat(self) -> np.ndarray:
        return np.concatenate(self.strategies)

    def to_lists(self) -> list[list[float]]:
        return [s.tolist() for s in self.strategies]

    def distance_max(self, other: "StrategyProfile") -> float:
        if [len(s) for s in self.strategies] != [len(s) for s in other.strategies]:
            raise ValueError("profiles have mismatched shapes")
        return float(np.max(np.abs(self.flat() - other.flat())))


@dataclass(frozen=True)
class OrdinalComparison:
    """Outcome of an ordinal-equivalence check between utilities and choice
    probabilities. ``witness`` is present exactly when the verdict is false."""

    tie_tolerance: float
    verdict: bool
    witness: tuple[int, ...] | None = None

    def __post_init__(self):
        if self.tie_tolerance < 0:
            raise ValueError("tie_tolerance must be nonnegative")
        if self.verdict and self.witness is not None:
            raise ValueError("a passing comparison cannot carry a witness")
        if not self.verdict and self.witness is None:
            raise ValueError("a failing comparison must carry a witness")


def _check_profile(game: Game, profile: StrategyProfile) -> None:
    if profile.player_count != game.player_count:
        raise ValueError(
            f"profile has {profile.player_count} players, game has {game.player_count}"
        )
    for i, (s, c) in enumerate(zip(profile.strategies, game.action_counts)):
        if len(s) != c:
            raise ValueError(f"player {i} strategy has {len(s)} entries, expected {c}")


def _utilities_from_raw(payoff_tensor: np.ndarray, strategies, player: int) -> np.ndarray:
    """Contract every opponent axis of one player's payoff tensor with the
    opponents' mixed strategies. Contracting from the highest axis down keeps
    lower axis indices stable."""
    u = payoff_tensor
    for j in range(len(strategies) - 1, -1, -1):
        if j == player:
            continue
        u = np.tensordot(u, strategies[j], axes=([j], [0]))
    return np.asarray(u, dtype=np.float64)


def expected_utility(game: Game, profile: StrategyProfile, player: int) -> np.ndarray:
    """Expected utility of each of ``player``'s actions against the
    opponents' mixed strategies in ``profile``."""
    _check_profile(game, profile)
    if not 0 <= player < game.player_count:
        raise ValueError(f"player index {player} out of range")
    return _utilities_from_raw(game.payoffs[player], profile.strategies, player)


def expected_utilities(game: Game, profile: StrategyProfile) -> list[np.ndarray]:
    _check_profile(game, profile)
    return [
        _utilities_from_raw(game.payoffs[i], profile.strategies, i)
        for i in range(game.player_count)
    ]


def is_nash(game: Game, profile: StrategyProfile, tol: float = 1e-9) -> bool:
    """True when no player can gain more than ``tol`` by a unilateral
    deviation to a best response."""
    if tol < 0:
        raise ValueError("tol must be nonnegative")
    for i, u in enumerate(expected_utilities(game, profile)):
        current = float(u @ profile.strategies[i])
        if float(u.max()) > current + tol:
            return False
    return True


def ordinal_violations(values, probabilities, tie_tolerance: float):
    """All ordered pairs violating ordinal equivalence of ``probabilities``
    with ``values``, as (a, b, margin) triples.

    Scan order: strict pairs (values[a] > values[b] + tol) by decreasing
    utility margin, then tied pairs by index. A strict pair violates when
    probabilities[a] is not strictly above probabilities[b]; a tied pair
    violates when the probabilities differ by more than the tolerance.
    """
    if tie_tolerance < 0:
        raise ValueError("tie_tolerance must be nonnegative")
    v = np.asarray(values, dtype=np.float64)
    p = np.asarray(probabilities, dtype=np.float64)
    if v.shape != p.shape or v.ndim != 1:
        raise ValueError("values and probabilities must be 1-D and the same length")
    if not (np.all(np.isfinite(v)) and np.all(np.isfinite(p))):
        raise ValueError("values and probabilities must be finite")
    k = len(v)
    strict = [
        (a, b)
        for a in range(k)
        for b in range(k)
        if v[a] > v[b] + tie_tolerance
    ]
    strict.sort(key=lambda ab: (-(v[ab[0]] - v[ab[1]]), ab))
    out = []
    for a, b in strict:
        if not p[a] > p[b]:
            out.append((a, b, float(p[b] - p[a])))
    for a in range(k):
        for b in range(a + 1, k):
            if abs(v[a] - v[b]) <= tie_tolerance and abs(p[a] - p[b]) > tie_tolerance:
                out.append((a, b, float(abs(p[a] - p[b]) - tie_tolerance)))
    return out


def compare_ordinal(values, probabilities, tie_tolerance: float = 1e-9) -> OrdinalComparison:
    violations = ordinal_violations(values, probabilities, tie_tolerance)
    if violations:
        a, b, _ = violations[0]
        return OrdinalComparison(tie_tolerance, False, (a, b))
    return OrdinalComparison(tie_tolerance, True, None)


def is_payoff_monotone(
    game: Game, profile: StrategyProfile, tie_tolerance: float = 1e-9
) -> OrdinalComparison:
    """Check that every player's mixed strategy is ordinally equivalent to
    that player's expected utilities: strictly better actions get strictly
    more weight, and actions tied within the tolerance get weights within the
    tolerance. The witness, if any, is the first violating (player, a, b)."""
    if tie_tolerance < 0:
        raise ValueError("tie_tolerance must be nonnegative")
    for i, u in enumerate(expected_utilities(game, profile)):
        violations = ordinal_violations(u, profile.strategies[i], tie_tolerance)
        if violations:
            a, b, _ = violations[0]
            return OrdinalComparison(tie_tolerance, False, (i, a, b))
    return OrdinalComparison(tie_tolerance, True, None)


def build_prism_game() -> Game:
    """3x2 game: player 1's payoff is flat at 100 when the column player
    stays put, and climbs 101/102/104 when the column player moves; the
    column player's own payoff makes staying strictly dominant."""
    p1 = np.array([
        [100.0, 101.0],
        [100.0, 102.0],
        [100.0, 104.0],
    ])
    p2 = np.array([
        [100.0, 0.0],
        [100.0, 0.0],
        [100.0, 0.0],
    ])
    return Game((3, 2), np.stack([p1, p2]))


def build_paradox_game(k: int, opponent_action_counts=(2,)) -> Game:
    """Game with an indifference row: player 1 gets 5 whenever every opponent
    plays its first (dominant) action, and otherwise a ladder 1, 2, ..., 2, 4
    over own actions; each opponent gets 1 on its first action, else 0."""
    k = int(k)
    if k < 3:
        raise ValueError("k must be at least 3")
    opp_counts = tuple(int(c) for c in opponent_action_counts)
    if not opp_counts or any(c < 1 for c in opp_counts):
        raise ValueError("opponent action counts must be positive integers")
    if all(c < 2 for c in opp_counts):
        raise ValueError("at least one opponent needs two or more actions")
    counts = (k, *opp_counts)
    n = len(counts)

    ladder = np.full(k, 2.0)
    ladder[0] = 1.0
    ladder[-1] = 4.0
    p1 = np.broadcast_to(ladder.reshape((k,) + (1,) * (n - 1)), counts).copy()
    joint_star = (slice(None),) + (0,) * (n - 1)
    p1[joint_star] = 5.0

    tensors = [p1]
    for j in range(1, n):
        t = np.zeros(counts)
        own_first = tuple(0 if axis == j else slice(None) for axis in range(n))
        t[own_first] = 1.0
        tensors.append(t)
    return Game(counts, np.stack(tensors))
