import numpy as np
import pytest

from conftest import random_game
from qrekit.game import (
    Game,
    OrdinalComparison,
    StrategyProfile,
    build_paradox_game,
    build_prism_game,
    compare_ordinal,
    expected_utilities,
    expected_utility,
    is_nash,
    is_payoff_monotone,
)


class TestGameConstruction:
    def test_prism_payoff_entries(self, prism):
        assert prism.action_counts == (3, 2)
        assert prism.payoffs[0][2, 1] == 104.0
        assert prism.payoffs[1][0, 0] == 100.0
        # column player's move action pays it nothing everywhere
        assert np.all(prism.payoffs[1][:, 1] == 0.0)

    def test_paradox_entries_k3(self, paradox3):
        assert paradox3.action_counts == (3, 2)
        # middle rung of the ladder away from the dominant column
        assert paradox3.payoffs[0][1, 1] == 2.0
        # indifference row on the dominant column
        assert np.all(paradox3.payoffs[0][:, 0] == 5.0)
        # opponent: 1 on its first action regardless of the row
        assert np.all(paradox3.payoffs[1][:, 0] == 1.0)
        assert np.all(paradox3.payoffs[1][:, 1] == 0.0)

    def test_paradox_entries_k5(self):
        g = build_paradox_game(5, (2,))
        assert g.payoffs[0][4, 0] == 5.0
        assert g.payoffs[0][4, 1] == 4.0
        assert g.payoffs[0][0, 1] == 1.0
        assert np.all(g.payoffs[0][1:4, 1] == 2.0)

    def test_paradox_multiple_opponents(self):
        g = build_paradox_game(4, (2, 3))
        assert g.action_counts == (4, 2, 3)
        # payoff 5 only when both opponents sit on their first action
        assert np.all(g.payoffs[0][:, 0, 0] == 5.0)
        assert g.payoffs[0][3, 1, 0] == 4.0
        assert g.payoffs[0][3, 0, 2] == 4.0
        # second opponent's payoff keyed to its own axis only
        assert np.all(g.payoffs[2][:, :, 0] == 1.0)
        assert np.all(g.payoffs[2][:, :, 1:] == 0.0)

    def test_paradox_rejects_small_k(self):
        with pytest.raises(ValueError):
            build_paradox_game(2, (2,))

    def test_paradox_rejects_trivial_opponents(self):
        with pytest.raises(ValueError):
            build_paradox_game(3, (1, 1))

    def test_bad_tensor_shape_rejected(self):
        with pytest.raises(ValueError):
            Game((2, 2), np.zeros((2, 2, 3)))

    def test_nonfinite_payoffs_rejected(self):
        payoffs = np.zeros((2, 2, 2))
        payoffs[0, 0, 0] = np.nan
        with pytest.raises(ValueError):
            Game((2, 2), payoffs)


class TestGameJson:
    def test_flat_layout_first_player_fastest(self, prism):
        data = prism.to_json_dict()
        assert data["players"] == 2
        assert data["actions"] == [3, 2]
        # row player's action varies fastest in the flat arrays
        assert data["payoffs"][0] == [100.0, 100.0, 100.0, 101.0, 102.0, 104.0]
        assert data["payoffs"][1] == [100.0, 100.0, 100.0, 0.0, 0.0, 0.0]

    def test_round_trip(self):
        rng = np.random.default_rng(7)
        g = random_game(rng, (3, 2, 2))
        back = Game.from_json_dict(g.to_json_dict())
        assert back.action_counts == g.action_counts
        assert np.array_equal(back.payoffs, g.payoffs)

    def test_inconsistent_counts_rejected(self, prism):
        data = prism.to_json_dict()
        data["players"] = 3
        with pytest.raises(ValueError):
            Game.from_json_dict(data)

    def test_wrong_flat_length_rejected(self, prism):
        data = prism.to_json_dict()
        data["payoffs"][0] = data["payoffs"][0][:-1]
        with pytest.raises(ValueError):
            Game.from_json_dict(data)


class TestStrategyProfile:
    def test_negative_entry_rejected(self):
        with pytest.raises(ValueError):
            StrategyProfile((np.array([1.1, -0.1]),))

    def test_bad_sum_rejected(self):
        with pytest.raises(ValueError):
            StrategyProfile((np.array([0.6, 0.5]),))

    def test_uniform_and_pure(self, prism):
        u = StrategyProfile.uniform(prism)
        assert np.allclose(u[0], 1.0 / 3.0)
        p = StrategyProfile.pure(prism, (2, 0))
        assert p[0].tolist() == [0.0, 0.0, 1.0]
        assert p[1].tolist() == [1.0, 0.0]

    def test_distance_max(self, prism):
        a = StrategyProfile.uniform(prism)
        b = StrategyProfile.pure(prism, (0, 0))
        assert a.distance_max(b) == pytest.approx(2.0 / 3.0)
        assert a.distance_max(a) == 0.0


class TestExpectedUtility:
    def test_prism_pure_column(self, prism):
        profile = StrategyProfile.from_lists([[1 / 3, 1 / 3, 1 / 3], [1.0, 0.0]])
        u = expected_utility(prism, profile, 0)
        assert u.tolist() == [100.0, 100.0, 100.0]

    def test_prism_mixed_column(self, prism):
        profile = StrategyProfile.from_lists([[1 / 3, 1 / 3, 1 / 3], [0.99, 0.01]])
        u = expected_utility(prism, profile, 0)
        assert np.allclose(u, [100.01, 100.02, 100.04], rtol=0, atol=1e-10)

    def test_pure_profile_reads_tensor_entry(self):
        rng = np.random.default_rng(11)
        g = random_game(rng, (3, 2, 4))
        profile = StrategyProfile.pure(g, (1, 0, 3))
        for i in range(3):
            u = expected_utility(g, profile, i)
            expected = [g.payoffs[i][a, 0, 3] for a in range(3)] if i == 0 else None
            if i == 0:
                assert np.allclose(u, expected, atol=1e-12)
        assert expected_utility(g, profile, 1)[0] == pytest.approx(g.payoffs[1][1, 0, 3])
        assert expected_utility(g, profile, 2)[2] == pytest.approx(g.payoffs[2][1, 0, 2])

    def test_affine_in_each_opponent_strategy(self):
        rng = np.random.default_rng(23)
        for _ in range(20):
            g = random_game(rng, (3, 2, 2))
            s1 = rng.dirichlet(np.ones(3))
            s2a, s2b = rng.dirichlet(np.ones(2)), rng.dirichlet(np.ones(2))
            s3 = rng.dirichlet(np.ones(2))
            w = rng.uniform()
            mixed = StrategyProfile((s1, w * s2a + (1 - w) * s2b, s3))
            ua = expected_utility(g, StrategyProfile((s1, s2a, s3)), 0)
            ub = expected_utility(g, StrategyProfile((s1, s2b, s3)), 0)
            um = expected_utility(g, mixed, 0)
            assert np.max(np.abs(um - (w * ua + (1 - w) * ub))) < 1e-10

    def test_paradox_gap_structure(self):
        # with p = joint weight on the opponents' first actions, the utility
        # ladder gives consecutive gaps (1-p) at the bottom and 2(1-p) at the top
        rng = np.random.default_rng(5)
        for k in (3, 4, 5):
            g = build_paradox_game(k, (2, 3))
            s2 = rng.dirichlet(np.ones(2))
            s3 = rng.dirichlet(np.ones(3))
            profile = StrategyProfile((rng.dirichlet(np.ones(k)), s2, s3))
            p = s2[0] * s3[0]
            u = expected_utility(g, profile, 0)
            assert u[1] - u[0] == pytest.approx(1.0 - p, abs=1e-10)
            assert u[-1] - u[-2] == pytest.approx(2.0 * (1.0 - p), abs=1e-10)
            assert np.allclose(u[1:-1], u[1], atol=1e-10)

    def test_profile_mismatch_rejected(self, prism):
        bad = StrategyProfile.from_lists([[0.5, 0.5], [1.0, 0.0]])
        with pytest.raises(ValueError):
            expected_utility(prism, bad, 0)


class TestIsNash:
    def test_prism_pure_column_any_row(self, prism):
        profile = StrategyProfile.from_lists([[0.2, 0.3, 0.5], [1.0, 0.0]])
        assert is_nash(prism, profile) is True

    def test_prism_mixed_column_not_nash(self, prism):
        profile = StrategyProfile.from_lists([[0.2, 0.3, 0.5], [0.5, 0.5]])
        assert is_nash(prism, profile) is False

    def test_single_action_game(self):
        g = Game((1, 1), np.zeros((2, 1, 1)))
        profile = StrategyProfile.from_lists([[1.0], [1.0]])
        assert is_nash(g, profile) is True

    def test_prism_nash_exactly_on_pure_column_grid(self, prism):
        for q in (0.0, 0.25, 0.5, 0.75, 1.0):
            for s1 in ([1, 0, 0], [0.2, 0.3, 0.5], [1 / 3, 1 / 3, 1 / 3]):
                profile = StrategyProfile.from_lists([s1, [q, 1.0 - q]])
                assert is_nash(prism, profile) is (q == 1.0)


class TestPayoffMonotone:
    def test_prism_aligned_profile(self, prism):
        profile = StrategyProfile.from_lists([[0.03, 0.35, 0.62], [0.99, 0.01]])
        assert is_payoff_monotone(prism, profile).verdict is True

    def test_prism_uniform_against_pure_column(self, prism):
        profile = StrategyProfile.from_lists([[1 / 3, 1 / 3, 1 / 3], [1.0, 0.0]])
        assert is_payoff_monotone(prism, profile).verdict is True

    def test_prism_reversed_profile_witness(self, prism):
        profile = StrategyProfile.from_lists([[0.62, 0.35, 0.03], [0.99, 0.01]])
        result = is_payoff_monotone(prism, profile)
        assert result.verdict is False
        assert result.witness == (0, 2, 0)

    def test_negative_tolerance_rejected(self, prism):
        profile = StrategyProfile.uniform(prism)
        with pytest.raises(ValueError):
            is_payoff_monotone(prism, profile, tie_tolerance=-1e-9)

    def test_affine_rescaling_preserves_verdict(self):
        # generic profiles only: ties are measure zero, and the strict part of
        # the check is invariant once the tolerance scales with the payoffs
        rng = np.random.default_rng(31)
        for _ in range(20):
            g = random_game(rng, (3, 2))
            profile = StrategyProfile(
                tuple(rng.dirichlet(np.ones(c)) for c in g.action_counts)
            )
            scale, shift = rng.uniform(0.5, 3.0), rng.normal()
            payoffs = g.payoffs.copy()
            payoffs[0] = scale * payoffs[0] + shift
            g2 = Game(g.action_counts, payoffs)
            tol = 1e-9
            r1 = is_payoff_monotone(g, profile, tol)
            r2 = is_payoff_monotone(g2, profile, tol * scale)
            assert r1.verdict == r2.verdict

    def test_compare_ordinal_tie_rule(self):
        values = np.array([1.0, 1.0, 2.0])
        assert compare_ordinal(values, [0.25, 0.25, 0.5]).verdict is True
        bad = compare_ordinal(values, [0.1, 0.4, 0.5])
        assert bad.verdict is False
        assert bad.witness == (0, 1)


class TestOrdinalComparison:
    def test_verdict_witness_consistency(self):
        with pytest.raises(ValueError):
            OrdinalComparison(1e-9, True, (0, 1))
        with pytest.raises(ValueError):
            OrdinalComparison(1e-9, False, None)
