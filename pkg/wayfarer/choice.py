"""Utility functions and stochastic choice models"""
import dataclasses
import math
import typing

import numpy as np
from scipy import special

from . import errors
from . import modes
from . import streams


class EmptyChoiceSet(errors.WayfarerError):
    """A choice was requested among zero alternatives"""


class InfeasibleTourMode(errors.WayfarerError):
    """A trip of the tour has no mode allowed by the tour mode"""


class WindowTooNarrow(errors.WayfarerError):
    """The mandatory activity leaves no whole hour for a subtour"""


class NoCandidates(errors.WayfarerError):
    """No destination lies within the sampling radius"""


def _by_mode(mapping):
    return {modes.Mode.parse(k): float(v) for k, v in (mapping or {}).items()}


@dataclasses.dataclass(frozen=True)
class ModeChoiceParams:
    """
    Trip and tour mode choice parameters, in dollars

    * asc: alternative specific constants per mode
    * beta_transfer: disutility per transfer
    * epsilon: trip choice scale
    * epsilon_tour: tour choice scale
    * vot_multiplier: per-mode multiplier on the traveller's value of time
    * rail_bonus: utility bonus of itineraries using non-bus transit
    * default_vot: value of time for people without one, dollars per hour
    """
    asc: typing.Mapping[modes.Mode, float] = dataclasses.field(
            default_factory=dict)
    beta_transfer: float = 1.0
    epsilon: float = 1.0
    epsilon_tour: float = 1.0
    vot_multiplier: typing.Mapping[modes.Mode, float] = dataclasses.field(
            default_factory=dict)
    rail_bonus: float = 0.0
    default_vot: float = 15.0

    def __post_init__(self):
        if self.epsilon <= 0 or self.epsilon_tour <= 0:
            raise ValueError("choice scales must be positive")

    @classmethod
    def from_config(cls, config):
        return cls(
                asc=_by_mode(config["modeChoice.asc"]),
                beta_transfer=float(config["modeChoice.betaTransfer"]),
                epsilon=float(config["modeChoice.epsilon"]),
                epsilon_tour=float(config["modeChoice.epsilonTour"]),
                vot_multiplier=_by_mode(config["modeChoice.votMultiplier"]),
                rail_bonus=float(config["modeChoice.railBonus"]),
                default_vot=float(config["modeChoice.defaultValueOfTime"]))


@dataclasses.dataclass(frozen=True)
class DiscretionaryParams:
    """
    Discretionary activity choice parameters

    * beta0: participation constant per activity type
    * beta_time: dollars per hour of participation per activity type
    * mean_duration: mean activity duration in seconds per activity type
    * lambda_dest, lambda_mode: nest scales of destination and mode logsums
    * dest_sample_count, dest_max_radius: destination choice set sampling
    * beta_cost, beta_time_by_mode ($/h), beta_transfer, beta_by_mode:
      destination-mode utility coefficients
    * logsum_multiplier: weight of the travel logsum in participation
    * lateness_penalty: utility added when the return trip ends late
    * epsilon: scale of the participation logit
    """
    beta0: typing.Mapping[str, float] = dataclasses.field(default_factory=dict)
    beta_time: typing.Mapping[str, float] = dataclasses.field(
            default_factory=dict)
    mean_duration: typing.Mapping[str, float] = dataclasses.field(
            default_factory=dict)
    lambda_dest: float = 1.0
    lambda_mode: float = 1.0
    dest_sample_count: int = 5
    dest_max_radius: float = 5000.0
    beta_cost: float = 1.0
    beta_time_by_mode: typing.Mapping[modes.Mode, float] = dataclasses.field(
            default_factory=dict)
    beta_transfer: float = 1.0
    beta_by_mode: typing.Mapping[modes.Mode, float] = dataclasses.field(
            default_factory=dict)
    logsum_multiplier: float = 1.0
    lateness_penalty: float = -50.0
    epsilon: float = 1.0
    default_beta_time: float = 15.0

    def __post_init__(self):
        if self.lambda_dest <= 0 or self.lambda_mode <= 0:
            raise ValueError("nest scales must be positive")
        if self.dest_sample_count < 1:
            raise ValueError("at least one destination must be sampled")

    @classmethod
    def from_config(cls, config, activity_params):
        """
        Args:
            config (Config): run configuration
            activity_params (pandas.DataFrame): activity_type,
                mean_duration_s, value_of_time_usd_per_hr
        """
        epsilon = float(config["modeChoice.epsilon"])
        lambda_dest = config["discretionary.lambdaDest"]
        lambda_mode = config["discretionary.lambdaMode"]
        return cls(
                beta0={str(k): float(v) for k, v in
                       config["discretionary.beta0"].items()},
                beta_time=dict(zip(
                    activity_params["activity_type"].astype(str),
                    activity_params["value_of_time_usd_per_hr"].astype(float))),
                mean_duration=dict(zip(
                    activity_params["activity_type"].astype(str),
                    activity_params["mean_duration_s"].astype(float))),
                lambda_dest=float(lambda_dest) if lambda_dest else epsilon,
                lambda_mode=float(lambda_mode) if lambda_mode else epsilon,
                dest_sample_count=int(config["discretionary.destSampleCount"]),
                dest_max_radius=float(config["discretionary.destMaxRadius"]),
                beta_cost=float(config["discretionary.betaCost"]),
                beta_time_by_mode=_by_mode(
                    config["discretionary.betaTimeByMode"]),
                beta_transfer=float(config["discretionary.betaTransfer"]),
                beta_by_mode=_by_mode(config["discretionary.betaByMode"]),
                logsum_multiplier=float(
                    config["discretionary.logsumMultiplier"]),
                lateness_penalty=float(
                    config["discretionary.latenessPenalty"]),
                epsilon=epsilon,
                default_beta_time=float(
                    config["modeChoice.defaultValueOfTime"]))

    def activity_beta_time(self, activity_type):
        return self.beta_time.get(activity_type, self.default_beta_time)

    def mode_beta_time(self, mode):
        return self.beta_time_by_mode.get(mode, self.default_beta_time)


@dataclasses.dataclass(frozen=True)
class ParkingChoiceParams:
    """Sensitivities of the parking and charging logit"""
    beta_cost: float = 1.0
    beta_walk_distance: float = 0.002
    beta_range_anxiety: float = 5.0
    beta_home_preference: float = 1.0
    beta_enroute_detour: float = 0.001
    epsilon: float = 1.0

    def __post_init__(self):
        if self.epsilon <= 0:
            raise ValueError("parking choice scale must be positive")

    @classmethod
    def from_config(cls, config):
        return cls(
                beta_cost=float(config["parking.betaCost"]),
                beta_walk_distance=float(config["parking.betaWalkDistance"]),
                beta_range_anxiety=float(config["parking.betaRangeAnxiety"]),
                beta_home_preference=float(
                    config["parking.betaHomePreference"]),
                beta_enroute_detour=float(config["parking.betaEnrouteDetour"]),
                epsilon=float(config["parking.epsilon"]))


def utility_from_terms(mode, cost, seconds, transfers, value_of_time, params,
                       rail=False):
    """
    Trip utility from its cost, duration and transfer count

    Cost, time and transfers are disutilities with the cost coefficient
    fixed at one, so one unit of utility is worth one dollar.
    """
    vot = value_of_time * params.vot_multiplier.get(mode, 1.0)
    utility = (params.asc.get(mode, 0.0)
               - cost
               - vot * seconds / 3600.0
               - params.beta_transfer * transfers)
    if rail:
        utility += params.rail_bonus
    return utility


def trip_utility(itinerary, value_of_time, params):
    """
    Utility of a priced and timed itinerary

    Args:
        itinerary (router.Itinerary): the itinerary
        value_of_time (float): the traveller's dollars per hour
        params (ModeChoiceParams): mode choice parameters

    Returns:
        float: utility in dollars
    """
    return utility_from_terms(
            itinerary.classification,
            itinerary.total_cost,
            itinerary.total_time,
            itinerary.transfers,
            value_of_time,
            params,
            rail=itinerary.uses_rail)


def choice_probabilities(utilities, epsilon):
    """
    Multinomial logit probabilities

    Args:
        utilities (sequence of float): alternative utilities
        epsilon (float): scale of the error term

    Returns:
        numpy.ndarray: probabilities in the order given
    """
    values = np.asarray(list(utilities), dtype=float)
    if values.size == 0:
        raise EmptyChoiceSet("no alternatives to choose from")
    if epsilon <= 0:
        raise ValueError("choice scale must be positive")
    return special.softmax(values / epsilon)


def _draw(probabilities, rng):
    cumulative = np.cumsum(probabilities)
    index = int(np.searchsorted(cumulative, rng.random() * cumulative[-1],
                                side="right"))
    return min(index, len(probabilities) - 1)


def mnl_choose(utilities, epsilon, rng):
    """
    Sample an alternative from a multinomial logit

    Args:
        utilities (dict): alternative -> utility
        epsilon (float): scale of the error term
        rng (numpy.random.Generator): random stream

    Returns:
        the chosen key of utilities
    """
    if not utilities:
        raise EmptyChoiceSet("no alternatives to choose from")
    keys = list(utilities)
    probabilities = choice_probabilities([utilities[k] for k in keys], epsilon)
    return keys[_draw(probabilities, rng)]


def logsum(utilities, scale):
    """Expected maximum utility, scale * log(sum(exp(U / scale)))"""
    values = np.asarray(list(utilities), dtype=float)
    if values.size == 0:
        raise EmptyChoiceSet("logsum of an empty choice set")
    return float(scale * special.logsumexp(values / scale))


def tour_utility(trip_mode_utilities, tour_mode, epsilon_tour,
                 shared_modes=frozenset()):
    """
    Utility of a tour mode from the utilities of the trips it contains

    Args:
        trip_mode_utilities (list of dict): per trip, Mode -> utility
        tour_mode (modes.TourMode): the tour mode being evaluated
        epsilon_tour (float): tour choice scale
        shared_modes (frozenset): shared modes with a fleet

    Returns:
        float: sum over trips of the scaled logsum of allowed trip modes
    """
    total = 0.0
    last = len(trip_mode_utilities) - 1
    for index, utilities in enumerate(trip_mode_utilities):
        allowed = modes.tour_trip_modes(tour_mode, index in (0, last),
                                        shared_modes)
        available = [u for mode, u in utilities.items() if mode in allowed]
        if not available:
            raise InfeasibleTourMode(
                    f"trip {index} has no mode allowed by {tour_mode.value}")
        total += logsum(available, epsilon_tour)
    return total


class Skeleton(typing.NamedTuple):
    activity_index: int
    start_hour: int
    start_time: float


def discretionary_skeleton(mandatory_start, mandatory_end, intercepts, rng):
    """
    Sample a subtour activity type and start time

    Args:
        mandatory_start (float): start of the surrounding window, hours
        mandatory_end (float): end of the surrounding window, hours
        intercepts (numpy.ndarray): activity types x 24 hourly weights
        rng (numpy.random.Generator): random stream

    Returns:
        Skeleton: activity row, start hour and start second
    """
    start_ind = math.ceil(mandatory_start + 0.5)
    end_ind = math.floor(mandatory_end - 0.5)
    if end_ind < start_ind:
        raise WindowTooNarrow(
                f"window {mandatory_start:g}-{mandatory_end:g} h has no hour "
                f"for a subtour")
    weights = np.asarray(intercepts, dtype=float)
    hours = weights.shape[1]
    lo, hi = max(start_ind, 0), min(end_ind, hours - 1)
    window = weights[:, lo:hi + 1]
    if window.size == 0 or window.sum() <= 0:
        raise EmptyChoiceSet("no activity has weight in the window")
    flat = window.ravel() / window.sum()
    chosen = _draw(flat, rng)
    activity_index, offset = divmod(chosen, window.shape[1])
    hour = lo + offset
    return Skeleton(int(activity_index), int(hour),
                    float((hour + rng.random()) * 3600.0))


def sample_duration(activity_type, params, rng):
    """Exponentially distributed activity duration in seconds"""
    mean = params.mean_duration.get(activity_type)
    if mean is None or mean <= 0:
        raise ValueError(f"no positive mean duration for {activity_type}")
    return float(rng.exponential(mean))


def sample_destinations(origin_taz, taz_centroids, radius, count, seed,
                        agent_id, subtour_index):
    """
    Sample a destination choice set uniformly within a radius

    The stream is keyed by agent and subtour so the choice set is the same
    in every iteration.

    Args:
        origin_taz (str): TAZ the subtour leaves from
        taz_centroids (dict): TAZ id -> Point
        radius (float): meters
        count (int): destinations wanted
        seed (int): run seed
        agent_id (str): the person
        subtour_index (int): which subtour of the person's plan

    Returns:
        list of str: TAZ ids
    """
    origin = taz_centroids[origin_taz]
    candidates = sorted(taz_id for taz_id, p in taz_centroids.items()
                        if origin.distance_to(p) <= radius)
    if not candidates:
        raise NoCandidates(f"no TAZ within {radius:g} m of {origin_taz}")
    if len(candidates) <= count:
        return candidates
    rng = streams.stream(seed, "destinations", agent_id, subtour_index)
    picked = rng.choice(len(candidates), size=count, replace=False)
    return [candidates[i] for i in picked]


def destination_mode_utility(outbound, inbound, mode, params):
    """
    Round-trip utility of reaching a destination by a mode

    Args:
        outbound (skims.ODSkimEntry): origin to destination skim
        inbound (skims.ODSkimEntry): destination to origin skim
        mode (modes.Mode): the mode
        params (DiscretionaryParams): coefficients

    Returns:
        float: U_dm
    """
    cost = outbound.mean_cost + inbound.mean_cost
    hours = (outbound.mean_time + inbound.mean_time) / 3600.0
    transfers = outbound.mean_transfers + inbound.mean_transfers
    return (params.beta_by_mode.get(mode, 0.0)
            - params.beta_cost * cost
            - params.mode_beta_time(mode) * hours
            - params.beta_transfer * transfers)


def destination_logsum(mode_utilities, lambda_mode):
    """Logsum over the modes reaching one destination"""
    return logsum(mode_utilities.values(), lambda_mode)


def participation_probability(activity_type, duration, travel_logsum, params,
                              late=False):
    """Probability of taking the tour against staying (utility zero)"""
    utility = (params.beta0.get(activity_type, 0.0)
               + duration / 3600.0 * params.activity_beta_time(activity_type)
               + params.logsum_multiplier * travel_logsum)
    if late:
        utility += params.lateness_penalty
    return float(special.expit(utility / params.epsilon))


def participation_choice(activity_type, duration, travel_logsum, params, rng,
                         late=False):
    """
    Decide whether a discretionary tour is taken

    Args:
        activity_type (str): the sampled activity
        duration (float): activity duration in seconds
        travel_logsum (float): lambda_dest-scaled logsum over destinations
        params (DiscretionaryParams): coefficients
        rng (numpy.random.Generator): random stream
        late (bool): whether the return trip misses the next departure

    Returns:
        bool: True if the tour is taken
    """
    probability = participation_probability(activity_type, duration,
                                            travel_logsum, params, late)
    return bool(rng.random() < probability)


@dataclasses.dataclass(frozen=True)
class ParkingAgent:
    """
    What the parking choice needs to know about the driver and vehicle

    * electric: whether the vehicle charges from a plug
    * state_of_charge: fraction of primary capacity remaining
    * capacity: primary capacity in joules
    * consumption: joules per meter
    * remaining_distance: meters still to drive today
    * duration: expected parking duration in seconds
    * at_home: whether the destination is the household's home
    """
    electric: bool = False
    state_of_charge: float = 1.0
    capacity: float = 0.0
    consumption: float = 0.0
    remaining_distance: float = 0.0
    duration: float = 0.0
    at_home: bool = False


def range_anxiety(agent, charger_power_kw=None):
    """Shortfall of range against remaining daily distance, after charging"""
    if not agent.electric or agent.remaining_distance <= 0 \
            or agent.consumption <= 0 or agent.capacity <= 0:
        return 0.0
    soc = agent.state_of_charge
    if charger_power_kw:
        added = charger_power_kw * 1000.0 * agent.duration / agent.capacity
        soc = min(1.0, soc + added)
    driving_range = soc * agent.capacity / agent.consumption
    return max(0.0, 1.0 - driving_range / agent.remaining_distance)


def parking_utility(quote, agent, params):
    """
    Utility of one parking alternative

    Args:
        quote (parking.StallQuote): the stall alternative
        agent (ParkingAgent): driver and vehicle state
        params (ParkingChoiceParams): sensitivities

    Returns:
        float: utility
    """
    home = 1.0 if agent.at_home and quote.residential else 0.0
    return (-params.beta_cost * quote.price
            - params.beta_walk_distance * quote.walk_distance
            - params.beta_range_anxiety * range_anxiety(
                agent, quote.charger_power)
            + params.beta_home_preference * home
            - params.beta_enroute_detour * quote.detour)
