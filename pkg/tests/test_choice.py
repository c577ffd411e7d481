"""Logit, nested logsum, discretionary skeleton and parking choice tests"""
import math

import numpy as np
import pytest

from wayfarer import choice
from wayfarer import modes
from wayfarer import parking
from wayfarer import skims
from wayfarer.geometry import Point


@pytest.mark.parametrize("epsilon", [0.1, 1.0, 7.5])
def test_probabilities_are_normalized(epsilon):
    rng = np.random.default_rng(1)
    for _ in range(100):
        utilities = rng.normal(0.0, 20.0, size=int(rng.integers(1, 12)))
        total = choice.choice_probabilities(utilities, epsilon).sum()
        assert abs(total - 1.0) <= 1e-12


def test_probabilities_are_translation_invariant():
    utilities = np.array([-3.0, 0.5, 2.0, 4.25])
    shifted = choice.choice_probabilities(utilities + 1000.0, 2.0)
    np.testing.assert_allclose(choice.choice_probabilities(utilities, 2.0),
                               shifted, rtol=0.0, atol=1e-12)


@pytest.mark.parametrize(
        "difference, epsilon", [(0.0, 1.0), (1.0, 1.0), (-2.5, 0.5),
                                (3.0, 4.0), (12.0, 2.0)])
def test_two_alternatives_match_the_closed_form(difference, epsilon):
    probabilities = choice.choice_probabilities([difference, 0.0], epsilon)
    expected = 1.0 / (1.0 + math.exp(-difference / epsilon))
    assert abs(probabilities[0] - expected) <= 1e-12


def test_sampled_frequencies_match_probabilities():
    rng = np.random.default_rng(2024)
    utilities = {"walk": -1.0, "car": 0.5, "transit": 0.0}
    draws = 100_000
    counts = dict.fromkeys(utilities, 0)
    for _ in range(draws):
        counts[choice.mnl_choose(utilities, 1.0, rng)] += 1
    expected = choice.choice_probabilities(list(utilities.values()), 1.0)
    for (key, count), probability in zip(counts.items(), expected):
        assert abs(count / draws - probability) <= 0.01, key


def test_empty_choice_set():
    with pytest.raises(choice.EmptyChoiceSet):
        choice.mnl_choose({}, 1.0, np.random.default_rng(0))
    with pytest.raises(choice.EmptyChoiceSet):
        choice.logsum([], 1.0)


def test_equal_nest_scales_collapse_to_a_flat_logsum():
    rng = np.random.default_rng(77)
    for _ in range(100):
        scale = float(rng.uniform(0.2, 3.0))
        destinations = int(rng.integers(1, 6))
        table = rng.normal(0.0, 5.0, size=(destinations, len(modes.Mode)))
        inner = [choice.destination_logsum(dict(zip(modes.Mode, row)), scale)
                 for row in table]
        nested = choice.logsum(inner, scale)
        flat = choice.logsum(table.ravel(), scale)
        assert abs(nested - flat) <= 1e-9


def test_utility_counts_cost_time_and_transfers():
    params = choice.ModeChoiceParams(asc={modes.Mode.CAR: 2.0},
                                     beta_transfer=0.5)
    utility = choice.utility_from_terms(modes.Mode.CAR, 3.0, 1800.0, 2, 20.0,
                                        params)
    assert utility == pytest.approx(2.0 - 3.0 - 10.0 - 1.0)


def test_tour_utility_requires_an_allowed_mode():
    trips = [{modes.Mode.WALK: -1.0}, {modes.Mode.WALK: -1.0}]
    with pytest.raises(choice.InfeasibleTourMode):
        choice.tour_utility(trips, modes.TourMode.CAR_BASED, 1.0)
    assert choice.tour_utility(trips, modes.TourMode.WALK_BASED, 1.0) == \
        pytest.approx(-2.0)


def test_skeleton_window_rounds_to_whole_hours():
    weights = np.zeros((1, 24))
    weights[0, 9] = 1.0
    weights[0, 17] = 1.0
    rng = np.random.default_rng(3)
    hours = {choice.discretionary_skeleton(8.25, 17.75, weights, rng)
             .start_hour for _ in range(200)}
    assert hours == {9, 17}


def test_skeleton_respects_window_edges():
    weights = np.ones((2, 24))
    rng = np.random.default_rng(4)
    for _ in range(200):
        skeleton = choice.discretionary_skeleton(8.25, 17.75, weights, rng)
        assert 9 <= skeleton.start_hour <= 17
        assert skeleton.start_hour * 3600 <= skeleton.start_time < \
            (skeleton.start_hour + 1) * 3600


def test_degenerate_window_is_too_narrow():
    with pytest.raises(choice.WindowTooNarrow):
        choice.discretionary_skeleton(9.0, 9.5, np.ones((1, 24)),
                                      np.random.default_rng(0))


def test_destination_sets_repeat_across_iterations():
    centroids = {str(i): Point(i * 100.0, 0.0) for i in range(20)}
    first = choice.sample_destinations("0", centroids, 1500.0, 5, 42, "p1", 0)
    again = choice.sample_destinations("0", centroids, 1500.0, 5, 42, "p1", 0)
    assert first == again
    assert len(first) == 5
    assert all(int(taz) <= 15 for taz in first)


def test_no_destination_within_the_radius():
    with pytest.raises(choice.NoCandidates):
        choice.sample_destinations("0", {"0": Point(0.0, 0.0)}, -1.0, 5, 42,
                                   "p1", 0)


def test_very_negative_constant_never_participates():
    params = choice.DiscretionaryParams(beta0={"shopping": -1e9},
                                        mean_duration={"shopping": 3600.0})
    assert choice.participation_probability("shopping", 3600.0, 10.0,
                                            params) == 0.0


def test_range_anxiety_only_counts_electric_shortfall():
    agent = choice.ParkingAgent(electric=True, state_of_charge=0.25,
                                capacity=4e7, consumption=500.0,
                                remaining_distance=40_000.0, duration=3600.0)
    assert choice.range_anxiety(agent) == pytest.approx(0.5)
    assert choice.range_anxiety(agent, charger_power_kw=50.0) == 0.0
    assert choice.range_anxiety(choice.ParkingAgent()) == 0.0


def test_parking_utility_prefers_cheaper_closer_stalls():
    params = choice.ParkingChoiceParams()
    agent = choice.ParkingAgent()
    near = parking.StallQuote("a", "z", walk_distance=50.0, price=1.0)
    far = parking.StallQuote("b", "z", walk_distance=400.0, price=1.0)
    dear = parking.StallQuote("c", "z", walk_distance=50.0, price=9.0)
    assert choice.parking_utility(near, agent, params) > \
        choice.parking_utility(far, agent, params)
    assert choice.parking_utility(near, agent, params) > \
        choice.parking_utility(dear, agent, params)


def test_durations_are_exponential_around_the_mean():
    params = choice.DiscretionaryParams(mean_duration={"shopping": 1800.0})
    rng = np.random.default_rng(8)
    draws = [choice.sample_duration("shopping", params, rng)
             for _ in range(20000)]
    assert min(draws) >= 0.0
    assert np.mean(draws) == pytest.approx(1800.0, rel=0.05)
    with pytest.raises(ValueError):
        choice.sample_duration("gym", params, rng)


def test_destination_utility_counts_both_directions():
    outbound = skims.ODSkimEntry(modes.Mode.CAR, "a", "b", 8, mean_time=1800.0,
                                 mean_cost=2.0, mean_distance=1000.0)
    inbound = skims.ODSkimEntry(modes.Mode.CAR, "b", "a", 9, mean_time=1800.0,
                                mean_cost=3.0, mean_distance=1000.0,
                                mean_transfers=1.0)
    params = choice.DiscretionaryParams(
            beta_by_mode={modes.Mode.CAR: 1.0},
            beta_time_by_mode={modes.Mode.CAR: 10.0})
    assert choice.destination_mode_utility(
            outbound, inbound, modes.Mode.CAR, params) == \
        pytest.approx(1.0 - 5.0 - 10.0 - 1.0)


@pytest.mark.parametrize("beta0, taken", [(1e9, True), (-1e9, False)])
def test_participation_follows_an_overwhelming_constant(beta0, taken):
    params = choice.DiscretionaryParams(beta0={"shopping": beta0})
    rng = np.random.default_rng(2)
    assert {choice.participation_choice("shopping", 3600.0, 0.0, params, rng)
            for _ in range(50)} == {taken}
