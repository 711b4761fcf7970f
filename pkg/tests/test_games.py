import numpy as np
import pytest

from coopsim.games import (
    Action,
    ActionProfile,
    GamePayoffs,
    MultiPlayerPD,
    NAMED_GAMES,
    effective_payoffs,
    expected_values,
    from_fear_greed,
    game_by_name,
    is_social_dilemma,
    multi_player_payoff,
    payoff,
)

PD = game_by_name("pd")


class TestFromFearGreed:
    def test_prisoners_dilemma_payoffs(self):
        g = from_fear_greed(fear=1, greed=1)
        assert (g.R, g.P, g.T, g.S) == (3, 1, 4, 0)

    def test_chicken_payoffs(self):
        g = from_fear_greed(fear=-1, greed=0.5)
        assert (g.T, g.S) == (3.5, 2)

    def test_zero_levels_reproduce_anchors(self):
        g = from_fear_greed(fear=0, greed=0)
        assert (g.T, g.S) == (3, 1)

    def test_round_trip_exact(self):
        for fear in np.linspace(-2, 2, 9):
            for greed in np.linspace(-2, 2, 9):
                g = from_fear_greed(fear, greed)
                assert g.fear() == fear
                assert g.greed() == greed


class TestSocialDilemma:
    def test_pd_is_dilemma(self):
        assert is_social_dilemma(GamePayoffs(R=3, P=1, T=4, S=0))

    def test_chicken_with_unit_greed_is_not(self):
        # Violates R > (T+S)/2 once greed reaches 1 with fear -1.
        assert not is_social_dilemma(GamePayoffs(R=3, P=1, T=4, S=2))

    def test_no_greed_no_fear_is_not(self):
        assert not is_social_dilemma(GamePayoffs(R=3, P=1, T=3, S=2))

    def test_all_named_games_qualify(self):
        for name, g in NAMED_GAMES.items():
            assert is_social_dilemma(g), name


class TestPayoff:
    def test_mutual_cooperation(self):
        assert payoff(PD, Action.C, Action.C) == (3, 3)

    def test_unilateral_cooperation(self):
        assert payoff(PD, Action.C, Action.D) == (0, 4)

    def test_mutual_defection_any_game(self):
        g = GamePayoffs(R=7, P=-2, T=9, S=1)
        assert payoff(g, Action.D, Action.D) == (-2, -2)

    def test_symmetry(self):
        for g in NAMED_GAMES.values():
            for a in Action:
                for b in Action:
                    assert payoff(g, a, b)[0] == payoff(g, b, a)[1]


class TestExpectedValues:
    def test_pure_corners_match_cells(self):
        for g in NAMED_GAMES.values():
            for p in (0.0, 1.0):
                for q in (0.0, 1.0):
                    a = Action.C if p == 1.0 else Action.D
                    b = Action.C if q == 1.0 else Action.D
                    assert expected_values(g, p, q) == pytest.approx(payoff(g, a, b), abs=0)

    def test_quarter_point_value(self):
        v1, v2 = expected_values(PD, 0.25, 0.25)
        assert v1 == pytest.approx(1.5, abs=1e-12)
        assert v2 == pytest.approx(1.5, abs=1e-12)
        assert v1 + v2 == pytest.approx(3.0, abs=1e-12)

    def test_matches_brute_force_enumeration(self):
        # Bilinear form checked against outcome-weighted enumeration.
        for g in NAMED_GAMES.values():
            for p in np.linspace(0, 1, 11):
                for q in np.linspace(0, 1, 11):
                    cells = {
                        (Action.C, Action.C): p * q,
                        (Action.C, Action.D): p * (1 - q),
                        (Action.D, Action.C): (1 - p) * q,
                        (Action.D, Action.D): (1 - p) * (1 - q),
                    }
                    v1 = sum(w * payoff(g, a, b)[0] for (a, b), w in cells.items())
                    v2 = sum(w * payoff(g, a, b)[1] for (a, b), w in cells.items())
                    got = expected_values(g, p, q)
                    assert got[0] == pytest.approx(v1, abs=1e-12)
                    assert got[1] == pytest.approx(v2, abs=1e-12)

    def test_rejects_out_of_range(self):
        with pytest.raises(ValueError):
            expected_values(PD, -0.1, 0.5)
        with pytest.raises(ValueError):
            expected_values(PD, 0.5, 1.1)


class TestMultiPlayerPD:
    def test_sole_defector_gets_four(self):
        game = MultiPlayerPD(10)
        profile = ActionProfile((Action.D,) + (Action.C,) * 9)
        assert multi_player_payoff(game, 0, profile) == 4

    def test_sole_cooperator_gets_zero(self):
        game = MultiPlayerPD(10)
        profile = ActionProfile((Action.C,) + (Action.D,) * 9)
        assert multi_player_payoff(game, 0, profile) == 0

    def test_interpolation(self):
        game = MultiPlayerPD(10)
        profile = ActionProfile((Action.D,) + (Action.C,) * 3 + (Action.D,) * 6)
        assert multi_player_payoff(game, 0, profile) == pytest.approx(2.0)

    def test_unanimous_anchors_for_all_sizes(self):
        for n in range(2, 13):
            game = MultiPlayerPD(n)
            all_c = ActionProfile((Action.C,) * n)
            all_d = ActionProfile((Action.D,) * n)
            for i in range(n):
                assert multi_player_payoff(game, i, all_c) == 3
                assert multi_player_payoff(game, i, all_d) == 1

    def test_two_player_table_matches_pd(self):
        np.testing.assert_array_equal(MultiPlayerPD(2).payoff_table(), PD.payoff_table())

    def test_index_and_length_errors(self):
        game = MultiPlayerPD(3)
        with pytest.raises(ValueError):
            multi_player_payoff(game, 3, ActionProfile((Action.C,) * 3))
        with pytest.raises(ValueError):
            multi_player_payoff(game, 0, ActionProfile((Action.C,) * 2))
        with pytest.raises(ValueError):
            MultiPlayerPD(1)


class TestEffectivePayoffs:
    def test_zero_rewards_identity(self):
        views = effective_payoffs(PD, [(0, 0)] * 4)
        for view in views:
            assert view.fear() == PD.fear()
            assert view.greed() == PD.greed()

    def test_rewarding_mutual_cooperation_reduces_greed(self):
        rewards = [(2, 2), (0, 0), (0, 0), (0, 0)]
        views = effective_payoffs(PD, rewards)
        assert views[0].greed() == pytest.approx(-1.0)

    def test_punishing_mutual_defection_reduces_fear(self):
        rewards = [(0, 0), (0, 0), (0, 0), (-2, -2)]
        views = effective_payoffs(PD, rewards)
        assert views[0].fear() == pytest.approx(-1.0)

    def test_player_views_swap_mixed_outcomes(self):
        rewards = [(0, 0), (5, -5), (0, 0), (0, 0)]  # only (C, D) touched
        v1, v2 = effective_payoffs(PD, rewards)
        assert v1.S == PD.S + 5  # player 1 cooperated against a defector
        assert v2.T == PD.T - 5  # player 2 was the defector

    def test_rejects_bad_shape(self):
        with pytest.raises(ValueError):
            effective_payoffs(PD, [(0, 0)] * 3)
