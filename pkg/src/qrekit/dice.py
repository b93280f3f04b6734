"""Exact enumeration oracle for finite-support perturbations whose support is
every permutation of one fixed base vector, each face equally likely.

This is a brute-force companion to the continuous machinery: face counts are
integers, probabilities are exact rationals, and the middle-action bound can
be checked by exhaustive enumeration instead of quadrature.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from itertools import permutations
from math import factorial

import numpy as np

__all__ = [
    "TieError",
    "DicePerturbation",
    "DiceFace",
    "FaceReport",
    "enumerate_argmax_faces",
    "dice_choice_probabilities",
    "dice_choice_intervals",
    "middle_face_implication_holds",
    "verify_dice_bound",
    "dice_bound_rows",
]

# K! faces; 8! = 40320 keeps enumeration instant
_MAX_ACTIONS = 8

# absolute slack deciding when two perturbed utilities count as tied
DEFAULT_TIE_TOLERANCE = 1e-12


class TieError(ValueError):
    """A face had no strict maximizer where one was required."""


@dataclass(frozen=True)
class DicePerturbation:
    """Finite perturbation support: all permutations of ``base``, uniform."""

    base: tuple[float, ...]

    def __post_init__(self):
        base = tuple(float(b) for b in self.base)
        if len(base) < 1:
            raise ValueError("base must be nonempty")
        if len(base) > _MAX_ACTIONS:
            raise ValueError(f"base longer than {_MAX_ACTIONS} actions is not supported")
        if any(not np.isfinite(b) for b in base):
            raise ValueError("base entries must be finite")
        if any(b2 <= b1 for b1, b2 in zip(base, base[1:])):
            raise ValueError("base must be strictly increasing")
        object.__setattr__(self, "base", base)

    @property
    def n_actions(self) -> int:
        return len(self.base)

    @property
    def face_count(self) -> int:
        return factorial(len(self.base))


@dataclass(frozen=True)
class DiceFace:
    """One equally likely face: the perturbation it assigns per action, the
    perturbed utilities, and the strict winner (None on a tie)."""

    perturbation: tuple[float, ...]
    totals: tuple[float, ...]
    winner: int | None
    tie_actions: tuple[int, ...]
    probability: Fraction

    def __post_init__(self):
        if (self.winner is None) == (not self.tie_actions):
            raise ValueError("face needs exactly one of winner or tie_actions")


@dataclass(frozen=True)
class FaceReport:
    """Full enumeration for one utility vector: every face plus per-action
    strict and tied win counts."""

    faces: tuple[DiceFace, ...]
    strict_counts: tuple[int, ...]
    tied_counts: tuple[int, ...]
    tie_tolerance: float

    def __post_init__(self):
        if sum(f.probability for f in self.faces) != 1:
            raise ValueError("face probabilities must sum to one")
        strict = [0] * len(self.strict_counts)
        tied = [0] * len(self.tied_counts)
        for f in self.faces:
            if f.winner is not None:
                strict[f.winner] += 1
            for a in f.tie_actions:
                tied[a] += 1
        if tuple(strict) != self.strict_counts or tuple(tied) != self.tied_counts:
            raise ValueError("counts inconsistent with faces")

    @property
    def tie_face_count(self) -> int:
        return sum(1 for f in self.faces if f.winner is None)


def _check_vector(v, n_actions: int) -> np.ndarray:
    v = np.asarray(v, dtype=np.float64)
    if v.shape != (n_actions,):
        raise ValueError(f"utility vector must have length {n_actions}")
    if not np.all(np.isfinite(v)):
        raise ValueError("utilities must be finite")
    return v


def enumerate_argmax_faces(
    v,
    dice: DicePerturbation,
    strict_mode: bool = False,
    tie_tolerance: float = DEFAULT_TIE_TOLERANCE,
) -> FaceReport:
    """Enumerate every permutation face of ``dice`` applied to ``v``.

    On each face the perturbed utilities are v + perturbation; the winner is
    the strict argmax, with any utilities within ``tie_tolerance`` of the
    maximum treated as tied. strict_mode turns a tie face into a TieError.
    """
    if tie_tolerance < 0:
        raise ValueError("tie_tolerance must be nonnegative")
    k = dice.n_actions
    v = _check_vector(v, k)
    prob = Fraction(1, dice.face_count)

    faces = []
    strict = [0] * k
    tied = [0] * k
    for perm in permutations(dice.base):
        totals = v + np.asarray(perm)
        top = float(totals.max())
        contenders = tuple(int(a) for a in np.flatnonzero(top - totals <= tie_tolerance))
        if len(contenders) == 1:
            winner = contenders[0]
            strict[winner] += 1
            faces.append(DiceFace(perm, tuple(totals), winner, (), prob))
        else:
            if strict_mode:
                raise TieError(
                    f"tie among actions {contenders} on face {perm} (totals {tuple(totals)})"
                )
            for a in contenders:
                tied[a] += 1
            faces.append(DiceFace(perm, tuple(totals), None, contenders, prob))
    return FaceReport(tuple(faces), tuple(strict), tuple(tied), tie_tolerance)


def dice_choice_probabilities(
    v, dice: DicePerturbation, tie_tolerance: float = DEFAULT_TIE_TOLERANCE
) -> np.ndarray:
    """Choice distribution as strict-win counts over the number of faces.

    Raises TieError when any face lacks a strict maximizer; use
    dice_choice_intervals for inputs that can tie.
    """
    report = enumerate_argmax_faces(v, dice, strict_mode=True, tie_tolerance=tie_tolerance)
    return np.asarray(report.strict_counts, dtype=np.float64) / dice.face_count


def dice_choice_intervals(
    v, dice: DicePerturbation, tie_tolerance: float = DEFAULT_TIE_TOLERANCE
) -> list[tuple[Fraction, Fraction]]:
    """Exact per-action probability intervals [strict wins, strict + tied
    involvements] over the face count; the ends coincide when no face ties."""
    report = enumerate_argmax_faces(v, dice, tie_tolerance=tie_tolerance)
    n = dice.face_count
    return [
        (Fraction(s, n), Fraction(s + t, n))
        for s, t in zip(report.strict_counts, report.tied_counts)
    ]


def _strict_winner(v, perturbation, tie_tolerance: float):
    totals = np.asarray(v, dtype=np.float64) + np.asarray(perturbation, dtype=np.float64)
    top = float(totals.max())
    contenders = np.flatnonzero(top - totals <= tie_tolerance)
    return int(contenders[0]) if len(contenders) == 1 else None


def middle_face_implication_holds(
    v, dice: DicePerturbation, tie_tolerance: float = DEFAULT_TIE_TOLERANCE
) -> bool:
    """Three-action pairing check behind the 2-of-6 counting bound.

    With base (b1, b2, b3) and gaps v[1]-v[0] < v[2]-v[1], a strict win for
    the middle action on the face assigning (b3, b2, b1) forces its loss on
    the face assigning (b1, b3, b2). Returns whether that exclusion holds.
    """
    if dice.n_actions != 3:
        raise ValueError("implication check is specific to three actions")
    v = _check_vector(v, 3)
    b1, b2, b3 = dice.base
    wins_hi_mid = _strict_winner(v, (b3, b2, b1), tie_tolerance) == 1
    wins_lo_hi = _strict_winner(v, (b1, b3, b2), tie_tolerance) == 1
    return not (wins_hi_mid and wins_lo_hi)


def _premise_ok(v: np.ndarray, tol: float = 1e-12) -> bool:
    """Ladder shape: lowest strictly below the equal middles, which sit
    strictly below the top, and the top gap strictly exceeds the bottom gap."""
    k = len(v)
    if k < 3:
        return False
    middles = v[1:-1]
    if np.max(middles) - np.min(middles) > tol:
        return False
    if not (v[0] < v[1] - tol and v[-2] < v[-1] - tol):
        return False
    return bool((v[-1] - v[-2]) > (v[1] - v[0]) + tol)


@dataclass(frozen=True)
class DiceBoundRow:
    """Outcome of the middle-action bound on one (v, base) instance."""

    v: tuple[float, ...]
    base: tuple[float, ...]
    strict_counts: tuple[int, ...]
    tie_face_count: int
    premise_ok: bool
    bound_ok: bool
    implication_ok: bool | None


def dice_bound_rows(k: int, v_grid, base_grid, tie_tolerance: float = DEFAULT_TIE_TOLERANCE):
    """Yield one DiceBoundRow per (v, base) pair of the product grid.

    The bound checked is an exact integer comparison: strict wins of the
    next-to-top action times k must not exceed k!. The three-action pairing
    implication is evaluated only where the ladder premise holds.
    """
    if k < 3:
        raise ValueError("bound verification needs at least three actions")
    v_list = [_check_vector(v, k) for v in v_grid]
    dice_list = [
        b if isinstance(b, DicePerturbation) else DicePerturbation(tuple(b)) for b in base_grid
    ]
    if not v_list or not dice_list:
        raise ValueError("grids must be nonempty")
    for d in dice_list:
        if d.n_actions != k:
            raise ValueError("base length must match k")

    faces_total = factorial(k)
    for v in v_list:
        premise = _premise_ok(v)
        for dice in dice_list:
            report = enumerate_argmax_faces(v, dice, tie_tolerance=tie_tolerance)
            middle_wins = report.strict_counts[k - 2]
            bound_ok = middle_wins * k <= faces_total
            implication = (
                middle_face_implication_holds(v, dice, tie_tolerance)
                if premise and k == 3
                else None
            )
            yield DiceBoundRow(
                tuple(float(x) for x in v),
                dice.base,
                report.strict_counts,
                report.tie_face_count,
                premise,
                bound_ok,
                implication,
            )


def verify_dice_bound(k: int, v_grid, base_grid, tie_tolerance: float = DEFAULT_TIE_TOLERANCE):
    """Exhaustively check the middle-action probability bound on a grid.

    Returns (all_pass, counterexamples); each counterexample is a dict with a
    ``kind`` of "bound" or "implication" plus the instance that failed it.
    Premise-violating utility vectors are allowed (the bound is still
    evaluated and reported) so that negative controls can be observed.
    """
    all_pass = True
    counterexamples = []
    for row in dice_bound_rows(k, v_grid, base_grid, tie_tolerance):
        if not row.bound_ok:
            all_pass = False
            counterexamples.append(
                {
                    "kind": "bound",
                    "v": row.v,
                    "base": row.base,
                    "strict_counts": row.strict_counts,
                    "premise_ok": row.premise_ok,
                }
            )
        if row.implication_ok is False:
            all_pass = False
            counterexamples.append(
                {
                    "kind": "implication",
                    "v": row.v,
                    "base": row.base,
                    "strict_counts": row.strict_counts,
                    "premise_ok": row.premise_ok,
                }
            )
    return all_pass, counterexamples
