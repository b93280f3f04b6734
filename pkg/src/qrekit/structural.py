"""Structural quantal response functions driven by additive i.i.d. payoff
perturbations.

Choice probabilities are computed two independent ways: a one-dimensional
quadrature over the perturbation marginal, and Monte-Carlo argmax frequencies
with deterministic counter-based sampling. Both feed a damped fixed-point
solver; Monte-Carlo solves freeze one common set of draws so the iteration map
is deterministic.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import sqrt, pi

import numpy as np
from scipy.special import ndtr, ndtri

from .game import Game, StrategyProfile, _utilities_from_raw, ordinal_violations
from .solver import SolverConfig, damped_fixed_point

__all__ = [
    "MARGINAL_KINDS",
    "Marginal",
    "PerturbationFamily",
    "QRFEstimate",
    "qrf_monte_carlo",
    "qrf_quadrature_iid",
    "solve_structural_qre",
    "check_qrf_monotone",
    "estimate_region_mass",
]

MARGINAL_KINDS = ("gumbel", "normal", "uniform")

# quadrature truncation: keep all but this much tail mass per side
_TAIL_MASS = 1e-13
_PANEL_POINTS = 16
_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(_PANEL_POINTS)

# Monte-Carlo chunking: fixed chunk size, one Philox sub-stream per chunk, so
# any evaluation order reproduces the same counts bit for bit
_MC_CHUNK = 1 << 17


@dataclass(frozen=True)
class Marginal:
    """One perturbation marginal: ``gumbel`` and ``normal`` are scale
    families around zero, ``uniform`` is the uniform law on [0, scale]
    (location is irrelevant for argmax probabilities)."""

    kind: str
    scale: float

    def __post_init__(self):
        if self.kind not in MARGINAL_KINDS:
            raise ValueError(f"unknown marginal kind {self.kind!r}")
        s = float(self.scale)
        if not np.isfinite(s) or s <= 0:
            raise ValueError("scale must be a positive finite real")
        object.__setattr__(self, "scale", s)

    @property
    def bounded(self) -> bool:
        return self.kind == "uniform"

    def cdf(self, t):
        t = np.asarray(t, dtype=np.float64)
        s = self.scale
        if self.kind == "gumbel":
            return np.exp(-np.exp(-t / s))
        if self.kind == "normal":
            return ndtr(t / s)
        return np.clip(t / s, 0.0, 1.0)

    def pdf(self, t):
        t = np.asarray(t, dtype=np.float64)
        s = self.scale
        if self.kind == "gumbel":
            z = t / s
            return np.exp(-z - np.exp(-z)) / s
        if self.kind == "normal":
            z = t / s
            return np.exp(-0.5 * z * z) / (s * sqrt(2.0 * pi))
        return np.where((t >= 0.0) & (t <= s), 1.0 / s, 0.0)

    def ppf(self, q: float) -> float:
        if not 0.0 < q < 1.0:
            raise ValueError("quantile level must lie in (0, 1)")
        s = self.scale
        if self.kind == "gumbel":
            return -s * np.log(-np.log(q))
        if self.kind == "normal":
            return s * float(ndtri(q))
        return s * q

    def sample(self, rng: np.random.Generator, size):
        s = self.scale
        if self.kind == "gumbel":
            return rng.gumbel(0.0, s, size)
        if self.kind == "normal":
            return rng.normal(0.0, s, size)
        return rng.uniform(0.0, s, size)


@dataclass(frozen=True)
class PerturbationFamily:
    """Per-player perturbation marginals; perturbations are i.i.d. across a
    player's actions."""

    marginals: tuple[Marginal, ...]

    def __post_init__(self):
        margs = tuple(self.marginals)
        if not margs:
            raise ValueError("family needs at least one marginal")
        if any(not isinstance(m, Marginal) for m in margs):
            raise ValueError("marginals must be Marginal instances")
        object.__setattr__(self, "marginals", margs)

    @classmethod
    def iid(cls, kind: str, scale: float, player_count: int = 1) -> "PerturbationFamily":
        return cls((Marginal(kind, scale),) * player_count)

    def marginal_for(self, player: int) -> Marginal:
        if not 0 <= player < len(self.marginals):
            raise ValueError(f"no marginal for player {player}")
        return self.marginals[player]


@dataclass(frozen=True)
class QRFEstimate:
    """Estimated choice distribution plus per-entry standard errors (zero for
    quadrature). ``tie_count`` records Monte-Carlo draws whose argmax was not
    unique (broken toward the lowest index)."""

    probabilities: np.ndarray
    standard_errors: np.ndarray
    method: str
    sample_count: int = 0
    nodes: int = 0
    tie_count: int = 0

    def __post_init__(self):
        p = np.asarray(self.probabilities, dtype=np.float64)
        se = np.asarray(self.standard_errors, dtype=np.float64)
        if p.shape != se.shape or p.ndim != 1:
            raise ValueError("probabilities and standard_errors must be matching vectors")
        if np.any(p < 0) or abs(float(p.sum()) - 1.0) > 1e-9:
            raise ValueError("probabilities must be a simplex point")
        if np.any(se < 0) or np.any(se > 0.5):
            raise ValueError("standard errors must lie in [0, 0.5]")
        if self.method not in ("monte_carlo", "quadrature"):
            raise ValueError(f"unknown method {self.method!r}")
        p.setflags(write=False)
        se.setflags(write=False)
        object.__setattr__(self, "probabilities", p)
        object.__setattr__(self, "standard_errors", se)


def _check_utilities(x) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1 or x.size == 0:
        raise ValueError("utility vector must be nonempty and 1-D")
    if not np.all(np.isfinite(x)):
        raise ValueError("utilities must be finite")
    return x


def _panel_nodes(edges: np.ndarray):
    """Gauss-Legendre nodes and weights for the panels delimited by
    ``edges``. Each panel carries the same fixed-order rule.

    Parameters
    ----------
    edges : ndarray
        Sorted panel boundaries, length >= 2.

    Returns
    -------
    t, w : ndarray
        Flattened nodes and matching weights covering [edges[0], edges[-1]].
    """
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[:-1] + edges[1:])
    t = mid[:, None] + half[:, None] * _GL_NODES[None, :]
    w = half[:, None] * _GL_WEIGHTS[None, :]
    return t.ravel(), w.ravel()


def _uniform_edges(shifts: np.ndarray, scale: float) -> np.ndarray:
    """Panel edges for the uniform marginal aligned with every kink of the
    shifted-CDF product, which makes the panel integrands polynomial and the
    fixed-order rule exact."""
    kinks = np.concatenate([-shifts, scale - shifts])
    inside = kinks[(kinks > 0.0) & (kinks < scale)]
    return np.unique(np.concatenate([[0.0, scale], inside]))


def qrf_quadrature_iid(
    x, family: PerturbationFamily, player: int = 0, nodes: int = 2048
) -> QRFEstimate:
    """Quantal response probabilities by one-dimensional quadrature.

    For utilities x and i.i.d. perturbations with pdf f and cdf F, action k
    is chosen with probability

        P(k) = integral f(t) * prod_{l != k} F(t + x_k - x_l) dt.

    The marginal's support is truncated to all but 1e-13 of tail mass per
    side and covered with composite Gauss-Legendre panels (``nodes`` total
    points for the smooth marginals; the uniform marginal instead aligns
    panels with its CDF kinks, which integrates its piecewise-polynomial
    integrand exactly). Raw integrals are renormalized to sum to one.
    """
    x = _check_utilities(x)
    if nodes < _PANEL_POINTS:
        raise ValueError(f"nodes must be at least {_PANEL_POINTS}")
    marginal = family.marginal_for(player)
    k_count = len(x)

    raw = np.empty(k_count)
    used_nodes = 0
    if marginal.bounded:
        for k in range(k_count):
            shifts = x[k] - np.delete(x, k)
            t, w = _panel_nodes(_uniform_edges(shifts, marginal.scale))
            integrand = marginal.pdf(t)
            if shifts.size:
                integrand = integrand * marginal.cdf(t[:, None] + shifts[None, :]).prod(axis=1)
            raw[k] = float(w @ integrand)
            used_nodes = max(used_nodes, len(t))
    else:
        panels = max(1, round(nodes / _PANEL_POINTS))
        lo = marginal.ppf(_TAIL_MASS)
        hi = marginal.ppf(1.0 - _TAIL_MASS)
        t, w = _panel_nodes(np.linspace(lo, hi, panels + 1))
        used_nodes = len(t)
        pdf_t = marginal.pdf(t)
        for k in range(k_count):
            shifts = x[k] - np.delete(x, k)
            integrand = pdf_t
            if shifts.size:
                integrand = integrand * marginal.cdf(t[:, None] + shifts[None, :]).prod(axis=1)
            raw[k] = float(w @ integrand)

    total = float(raw.sum())
    if not total > 0:
        raise ValueError("quadrature produced no probability mass")
    return QRFEstimate(
        probabilities=raw / total,
        standard_errors=np.zeros(k_count),
        method="quadrature",
        nodes=used_nodes,
    )


def _chunk_rng(seed: int, stream: tuple[int, ...], chunk_index: int) -> np.random.Generator:
    seq = np.random.SeedSequence(seed, spawn_key=(*stream, chunk_index))
    return np.random.Generator(np.random.Philox(seq))


def _mc_draws(marginal: Marginal, k_count: int, n_samples: int, seed: int, stream):
    """All perturbation draws as one (n_samples, k_count) array, generated in
    fixed chunks with per-chunk sub-seeding."""
    out = np.empty((n_samples, k_count))
    start = 0
    chunk_index = 0
    while start < n_samples:
        size = min(_MC_CHUNK, n_samples - start)
        rng = _chunk_rng(seed, stream, chunk_index)
        out[start : start + size] = marginal.sample(rng, (size, k_count))
        start += size
        chunk_index += 1
    return out


def _argmax_counts(y: np.ndarray, k_count: int):
    top = y.max(axis=1)
    ties = int(((y == top[:, None]).sum(axis=1) > 1).sum())
    counts = np.bincount(y.argmax(axis=1), minlength=k_count).astype(np.int64)
    return counts, ties


def _mc_argmax_counts(x, marginal, n_samples, seed, stream):
    k_count = len(x)
    counts = np.zeros(k_count, dtype=np.int64)
    ties = 0
    start = 0
    chunk_index = 0
    while start < n_samples:
        size = min(_MC_CHUNK, n_samples - start)
        rng = _chunk_rng(seed, stream, chunk_index)
        eps = marginal.sample(rng, (size, k_count))
        c, t = _argmax_counts(eps + x, k_count)
        counts += c
        ties += t
        start += size
        chunk_index += 1
    return counts, ties


def qrf_monte_carlo(
    x, family: PerturbationFamily, player: int = 0, config: SolverConfig = SolverConfig()
) -> QRFEstimate:
    """Argmax frequencies over config.mc_samples perturbation draws.

    Sampling is chunked and sub-seeded from (config.seed, player, chunk), so
    results are reproducible bit for bit regardless of evaluation order, and
    repeated calls with the same seed reuse common random numbers across
    different utility vectors. Ties go to the lowest action index and are
    counted in ``tie_count``.
    """
    x = _check_utilities(x)
    marginal = family.marginal_for(player)
    n = config.mc_samples
    counts, ties = _mc_argmax_counts(x, marginal, n, config.seed, (0, player))
    p = counts / n
    return QRFEstimate(
        probabilities=p,
        standard_errors=np.sqrt(p * (1.0 - p) / n),
        method="monte_carlo",
        sample_count=n,
        tie_count=ties,
    )


def estimate_region_mass(
    family: PerturbationFamily,
    n_actions: int,
    action: int,
    config: SolverConfig = SolverConfig(),
    player: int = 0,
):
    """Monte-Carlo mass of the perturbation region where ``action`` is the
    unique argmax at equal utilities; exchangeability makes the true value
    1/n_actions for every action. Returns (mass, standard_error)."""
    if n_actions < 1:
        raise ValueError("n_actions must be positive")
    if not 0 <= action < n_actions:
        raise ValueError("action index out of range")
    est = qrf_monte_carlo(np.zeros(n_actions), family, player, config)
    return float(est.probabilities[action]), float(est.standard_errors[action])


def solve_structural_qre(
    game: Game,
    family: PerturbationFamily,
    method: str = "quadrature",
    start: StrategyProfile | None = None,
    config: SolverConfig = SolverConfig(),
    nodes: int = 2048,
):
    """Damped fixed point of the structural quantal response map.

    With method="monte_carlo" the perturbation draws are frozen once up
    front (common random numbers), making the iteration map deterministic;
    convergence is then declared at config.tol plus three standard errors.
    Returns (profile, residual).
    """
    if method not in ("quadrature", "monte_carlo"):
        raise ValueError(f"unknown method {method!r}")
    if len(family.marginals) != game.player_count:
        raise ValueError(
            f"family has {len(family.marginals)} marginals for "
            f"{game.player_count} players"
        )
    if start is None:
        start = StrategyProfile.uniform(game)

    if method == "quadrature":

        def response(strategies):
            targets = [
                qrf_quadrature_iid(
                    _utilities_from_raw(game.payoffs[i], strategies, i),
                    family,
                    i,
                    nodes,
                ).probabilities
                for i in range(game.player_count)
            ]
            return targets, 0.0

    else:
        n = config.mc_samples
        draws = [
            _mc_draws(family.marginal_for(i), c, n, config.seed, (1, i))
            for i, c in enumerate(game.action_counts)
        ]

        def response(strategies):
            targets = []
            worst_se = 0.0
            for i in range(game.player_count):
                u = _utilities_from_raw(game.payoffs[i], strategies, i)
                counts, _ = _argmax_counts(draws[i] + u, game.action_counts[i])
                p = counts / n
                targets.append(p)
                worst_se = max(worst_se, float(np.sqrt(p * (1.0 - p) / n).max()))
            return targets, 3.0 * worst_se

    strategies, residual = damped_fixed_point(response, start.strategies, config)
    return StrategyProfile(tuple(strategies)), residual


def check_qrf_monotone(
    family: PerturbationFamily,
    player: int = 0,
    n_actions: int = 3,
    trials: int = 100,
    config: SolverConfig = SolverConfig(),
    qrf=None,
):
    """Probe ordinal equivalence of a quantal response function with its
    utility argument on random and deliberately tied vectors.

    ``qrf`` defaults to the quadrature estimator for ``family``; injecting a
    different callable is how a broken response map gets caught. Tolerance
    per probe is max(3 * max standard error, 1e-8). Returns
    (verdict, worst_violation, witness_vector_or_None).
    """
    if trials < 1:
        raise ValueError("trials must be positive")
    if n_actions < 2:
        raise ValueError("need at least two actions to compare")
    if qrf is None:
        def qrf(vec):
            return qrf_quadrature_iid(vec, family, player)

    rng = _chunk_rng(config.seed, (2,), player)
    probes = [rng.normal(0.0, 1.0, n_actions) for _ in range(trials)]
    probes.append(np.zeros(n_actions))
    tied_pair = np.arange(float(n_actions))
    tied_pair[1] = tied_pair[0]
    probes.append(tied_pair)
    lone_top = np.zeros(n_actions)
    lone_top[-1] = 1.0
    probes.append(lone_top)

    verdict = True
    worst = 0.0
    witness = None
    for probe in probes:
        est = qrf(probe)
        tol = max(3.0 * float(np.max(est.standard_errors)), 1e-8)
        violations = ordinal_violations(probe, est.probabilities, tol)
        if violations:
            verdict = False
            margin = max(v[2] for v in violations)
            if witness is None or margin > worst:
                worst = margin
                witness = probe.copy()
    return verdict, worst, witness
