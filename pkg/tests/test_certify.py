"""Exclusion certificates, ladder premises, the 1/K cap, region labels."""

from fractions import Fraction

import numpy as np
import pytest

from qrekit.certify import (
    ExclusionCertificate,
    FamilyEvidence,
    GapPair,
    Prop1Report,
    RegionSample,
    classify_prism_profile,
    exclusion_ball_search,
    lemma2_sequence,
    monotone_region_sample,
    paradox_nash_target,
    prop1_bound_check,
    prop1_premises_hold,
    recheck_certificate,
)
from qrekit.game import (
    StrategyProfile,
    build_paradox_game,
    build_prism_game,
    is_nash,
    is_payoff_monotone,
)
from qrekit.solver import SolverConfig
from qrekit.structural import PerturbationFamily

ALL_FAMILIES = [PerturbationFamily.iid(kind, 1.0, 2) for kind in ("gumbel", "normal", "uniform")]


def opponent_mix(game, q):
    dists = [None]
    for c in game.action_counts[1:]:
        d = np.full(c, (1.0 - q) / (c - 1)) if c > 1 else np.ones(1)
        if c > 1:
            d[0] = q
        dists.append(d)
    return dists


class TestNashTarget:
    def test_three_action_target(self, paradox3):
        target = paradox_nash_target(paradox3, 0.35)
        assert np.allclose(target[0], [0.0, 0.35, 0.65], atol=1e-15)
        assert target[1].tolist() == [1.0, 0.0]
        assert is_nash(paradox3, target)

    def test_alpha_interval_enforced(self, paradox3):
        for bad in (1.0 / 3.0, 0.5, 0.2, 0.7):
            with pytest.raises(ValueError):
                paradox_nash_target(paradox3, bad)

    def test_rejects_foreign_game(self, prism):
        with pytest.raises(ValueError):
            paradox_nash_target(prism, 0.35)


def exact_sequence_point(k, alpha, lam, opp_counts):
    """Fraction replica of the mixture path, exact by construction."""
    target_first = [Fraction(0)] + [alpha] * (k - 2) + [1 - (k - 2) * alpha]
    uniform_first = [Fraction(1, k)] * k
    w = 1 - Fraction(1, lam)
    first = [w * t + Fraction(1, lam) * u for t, u in zip(target_first, uniform_first)]
    rest = []
    for c in opp_counts:
        pure = [Fraction(1)] + [Fraction(0)] * (c - 1)
        rest.append([w * p + Fraction(1, lam) * Fraction(1, c) for p in pure])
    return [first] + rest


class TestApproachSequence:
    def test_lambda_one_is_uniform(self, paradox3):
        profile = lemma2_sequence(paradox3, 0.35, 1)
        assert profile.distance_max(StrategyProfile.uniform(paradox3)) == 0.0

    def test_matches_exact_fraction_oracle(self, paradox3):
        alpha = Fraction(5, 12)
        for lam in (1, 2, 3, 7, 50, 1000):
            got = lemma2_sequence(paradox3, float(alpha), lam)
            want = exact_sequence_point(3, alpha, lam, (2,))
            for p in range(2):
                for a, w in zip(got[p], want[p]):
                    assert abs(a - float(w)) <= 1e-15

    def test_rate_identity_exact_in_fractions(self):
        # max-norm distance to the target is exactly (distance at lam=1)/lam
        alpha = Fraction(5, 12)
        k = 3
        target_first = [Fraction(0), alpha, 1 - alpha]
        for lam in (1, 2, 5, 97, 12345):
            point = exact_sequence_point(k, alpha, lam, (2,))
            gaps = [abs(a - t) for a, t in zip(point[0], target_first)]
            gaps += [abs(point[1][0] - 1), abs(point[1][1] - 0)]
            step_one = exact_sequence_point(k, alpha, 1, (2,))
            gaps_one = [abs(a - t) for a, t in zip(step_one[0], target_first)]
            gaps_one += [abs(step_one[1][0] - 1), abs(step_one[1][1] - 0)]
            assert max(gaps) == max(gaps_one) / lam

    def test_monotone_beyond_threshold(self, paradox3):
        # lam = 1 collapses to uniform and fails on the strict utility gaps;
        # every later point keeps the required strict ordering
        assert not is_payoff_monotone(paradox3, lemma2_sequence(paradox3, 0.35, 1), 1e-9).verdict
        for lam in (2, 3, 10, 100):
            profile = lemma2_sequence(paradox3, 0.35, lam)
            assert is_payoff_monotone(paradox3, profile, 1e-9).verdict

    def test_four_action_variant(self):
        game = build_paradox_game(4, (2,))
        alpha = 7.0 / 24.0
        profile = lemma2_sequence(game, alpha, 100)
        assert profile[0][1] == pytest.approx(profile[0][2], abs=1e-16)
        assert is_payoff_monotone(game, profile, 1e-9).verdict

    def test_rejects_bad_lambda(self, paradox3):
        with pytest.raises(ValueError):
            lemma2_sequence(paradox3, 0.35, 0)


class TestPremises:
    def test_near_pure_opponents_give_doubled_gap(self, paradox3):
        dists = opponent_mix(paradox3, 0.99)
        profile = StrategyProfile((np.full(3, 1.0 / 3.0), dists[1]))
        holds, gaps = prop1_premises_hold(paradox3, profile)
        assert holds
        assert gaps.d1 == pytest.approx(0.01, abs=1e-12)
        assert gaps.d2 == pytest.approx(0.02, abs=1e-12)

    def test_pure_opponents_collapse_to_indifference(self, paradox3):
        profile = StrategyProfile.pure(paradox3, (0, 0))
        holds, gaps = prop1_premises_hold(paradox3, profile)
        assert not holds
        assert gaps.d1 == 0.0
        assert gaps.d2 == 0.0

    def test_prism_with_mixed_column(self, prism):
        profile = StrategyProfile.from_lists([[1 / 3, 1 / 3, 1 / 3], [0.99, 0.01]])
        holds, gaps = prop1_premises_hold(prism, profile)
        assert holds
        assert gaps.d1 == pytest.approx(0.01, abs=1e-12)
        assert gaps.d2 == pytest.approx(0.02, abs=1e-12)

    def test_requires_three_actions(self, prism):
        from qrekit.game import Game

        small = Game((2, 2), np.zeros((2, 2, 2)))
        profile = StrategyProfile.uniform(small)
        with pytest.raises(ValueError):
            prop1_premises_hold(small, profile)


class TestBoundCheck:
    def test_gumbel_three_actions(self):
        report = prop1_bound_check(
            [PerturbationFamily.iid("gumbel", 1.0)], [[0.0, 1.0, 3.0]], tol=1e-8
        )
        assert isinstance(report, Prop1Report)
        assert report.all_ok
        row = report.rows[0]
        assert row.probability <= 1.0 / 3.0 + 1e-8
        assert row.cap == pytest.approx(1.0 / 3.0)
        assert row.margin == pytest.approx(row.cap - row.probability)

    def test_normal_five_actions(self):
        report = prop1_bound_check(
            [PerturbationFamily.iid("normal", 1.0)], [[0.0, 1.0, 1.0, 1.0, 3.0]], tol=1e-8
        )
        assert report.all_ok
        assert report.rows[0].probability <= 0.2 + 1e-8

    def test_rejects_premise_violations(self):
        fam = [PerturbationFamily.iid("gumbel", 1.0)]
        with pytest.raises(ValueError):
            prop1_bound_check(fam, [[1.0, 1.0, 1.0]])
        with pytest.raises(ValueError):
            prop1_bound_check(fam, [[0.0, 2.0, 3.0]])  # top gap narrower
        with pytest.raises(ValueError):
            prop1_bound_check(fam, [])
        with pytest.raises(ValueError):
            prop1_bound_check([], [[0.0, 1.0, 3.0]])


@pytest.fixture(scope="module")
def certificate(paradox3):
    sigma_star = paradox_nash_target(paradox3, 0.35)
    return exclusion_ball_search(
        paradox3, sigma_star, 0.01, ALL_FAMILIES, starts=3, config=SolverConfig(seed=5)
    )


class TestExclusion:
    def test_certificate_clears_epsilon(self, certificate):
        assert certificate.epsilon == 0.01
        assert len(certificate.numeric_evidence) == 3
        for ev in certificate.numeric_evidence:
            assert ev.min_distance > 0.01
            assert len(ev.equilibria) == 4  # uniform start plus three random

    def test_certificate_mentions_cap_argument(self, certificate):
        assert "1/K" in certificate.analytic_reason

    def test_recheck_passes(self, certificate):
        assert recheck_certificate(certificate)

    def test_recheck_catches_tampering(self, certificate):
        ev = certificate.numeric_evidence[0]
        shifted = StrategyProfile.from_lists([[0.5, 0.3, 0.2], [0.6, 0.4]])
        tampered_ev = FamilyEvidence(
            ev.family,
            ((shifted, ev.equilibria[0][1]),),
            certificate.sigma_star.distance_max(shifted),
        )
        tampered = ExclusionCertificate(
            certificate.game,
            certificate.sigma_star,
            certificate.epsilon,
            certificate.analytic_reason,
            (tampered_ev,),
        )
        assert not recheck_certificate(tampered)

    def test_oversized_epsilon_rejected(self, paradox3):
        sigma_star = paradox_nash_target(paradox3, 0.35)
        with pytest.raises(ValueError) as err:
            exclusion_ball_search(paradox3, sigma_star, 0.9, ALL_FAMILIES, starts=1)
        assert "0.0166" in str(err.value)

    def test_non_nash_rejected(self, paradox3):
        not_nash = StrategyProfile.from_lists([[0.0, 0.35, 0.65], [0.0, 1.0]])
        with pytest.raises(ValueError):
            exclusion_ball_search(paradox3, not_nash, 0.01, ALL_FAMILIES, starts=1)

    def test_four_action_variant(self):
        game = build_paradox_game(4, (2,))
        sigma_star = paradox_nash_target(game, 0.26)
        cert = exclusion_ball_search(
            game,
            sigma_star,
            0.005,
            [PerturbationFamily.iid("gumbel", 1.0, 2)],
            starts=2,
            config=SolverConfig(seed=6),
        )
        assert all(ev.min_distance > 0.005 for ev in cert.numeric_evidence)

    def test_certificate_validation(self, paradox3):
        sigma_star = paradox_nash_target(paradox3, 0.35)
        close = StrategyProfile.from_lists([[0.001, 0.349, 0.65], [1.0, 0.0]])
        bad_ev = FamilyEvidence(
            ALL_FAMILIES[0], ((close, 1e-11),), sigma_star.distance_max(close)
        )
        with pytest.raises(ValueError):
            ExclusionCertificate(paradox3, sigma_star, 0.01, "reason", (bad_ev,))


class TestRegions:
    def test_wedge_example_is_excluded(self, prism):
        profile = StrategyProfile.from_lists([[0.03, 0.35, 0.62], [0.99, 0.01]])
        labels = classify_prism_profile(prism, profile)
        assert "monotone_interior" in labels
        assert "excluded_by_prop1" in labels
        assert "nash" not in labels

    def test_lid_centroid_is_nash_boundary(self, prism):
        profile = StrategyProfile.from_lists([[1 / 3, 1 / 3, 1 / 3], [1.0, 0.0]])
        labels = classify_prism_profile(prism, profile)
        assert set(labels) == {"nash", "monotone_boundary"}

    def test_reversed_ranking_is_other(self, prism):
        profile = StrategyProfile.from_lists([[0.62, 0.35, 0.03], [0.99, 0.01]])
        assert classify_prism_profile(prism, profile) == ("other",)

    def test_interior_below_cap_not_excluded(self, prism):
        profile = StrategyProfile.from_lists([[0.1, 0.3, 0.6], [0.9, 0.1]])
        labels = classify_prism_profile(prism, profile)
        assert labels == ("monotone_interior",)

    def test_sampling_is_deterministic_and_consistent(self, prism):
        a = monotone_region_sample(prism, 200, seed=42)
        b = monotone_region_sample(prism, 200, seed=42)
        assert len(a) == 200
        for sa, sb in zip(a, b):
            assert sa.profile.distance_max(sb.profile) == 0.0
            assert sa.classification == sb.classification

    def test_interior_monotone_classes_have_consistent_ranking(self, prism):
        # the wedge description: monotone with positive second-column mass
        # always comes with the increasing row ranking
        for sample in monotone_region_sample(prism, 500, seed=7):
            if "monotone_interior" in sample.classification:
                s1 = sample.profile[0]
                assert s1[2] > s1[1] > s1[0]
                assert sample.profile[1][1] > 0
            if "excluded_by_prop1" in sample.classification:
                assert sample.profile[0][1] > 1 / 3
                assert "monotone_interior" in sample.classification

    def test_region_sample_validation(self, prism, paradox3):
        with pytest.raises(ValueError):
            monotone_region_sample(prism, 0)
        with pytest.raises(ValueError):
            monotone_region_sample(paradox3, 10)
        with pytest.raises(ValueError):
            RegionSample(StrategyProfile.uniform(prism), ("wedge",))
