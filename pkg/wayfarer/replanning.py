"""Scoring, plan memory and the plan strategies applied between days"""
import dataclasses
import enum
import logging
import math
import typing

import numpy as np

from . import choice
from . import modes
from . import outputs
from . import scenario as scn
from . import streams

LOG = logging.getLogger(__name__)

# Modes whose skims price a discretionary destination
DESTINATION_MODES = (modes.Mode.WALK, modes.Mode.BIKE, modes.Mode.CAR,
                     modes.Mode.WALK_TRANSIT, modes.Mode.RIDE_HAIL)

DAY_LENGTH = 24 * 3600.0


class Strategy(enum.Enum):
    KEEP_BEST = "KeepBest"
    CLEAR_ROUTES = "ClearRoutes"
    CLEAR_MODES = "ClearModes"
    CLEAR_DISCRETIONARY = "ClearDiscretionary"


@dataclasses.dataclass(frozen=True)
class ReplanningWeights:
    keep_best: float = 0.7
    clear_routes: float = 0.1
    clear_modes: float = 0.1
    clear_discretionary: float = 0.1

    def __post_init__(self):
        values = dataclasses.astuple(self)
        if any(v < 0 for v in values):
            raise ValueError("replanning weights must be non-negative")
        if not math.isclose(sum(values), 1.0, abs_tol=1e-9):
            raise ValueError(f"replanning weights sum to {sum(values)}, not 1")

    @classmethod
    def from_config(cls, config):
        weights = config["replanning.weights"]
        return cls(**{field.name: float(weights.get(strategy.value, 0.0))
                      for field, strategy in zip(dataclasses.fields(cls),
                                                 Strategy)})

    def items(self):
        return list(zip(Strategy, dataclasses.astuple(self)))


@dataclasses.dataclass(frozen=True)
class ScoringParams:
    """
    * mode: trip utility coefficients
    * activity_beta_time: dollars per hour spent at each activity type
    * default_beta_time: dollars per hour at unlisted activity types
    * stuck_penalty: score of a person who never finished the day
    * replanning_penalty: dollars lost per forced re-choice
    """
    mode: choice.ModeChoiceParams = choice.ModeChoiceParams()
    activity_beta_time: typing.Mapping[str, float] = dataclasses.field(
            default_factory=dict)
    default_beta_time: float = 15.0
    stuck_penalty: float = -1000.0
    replanning_penalty: float = 1.0
    day_length: float = DAY_LENGTH

    @classmethod
    def from_config(cls, config, activity_params=None):
        beta_time = {}
        if activity_params is not None:
            beta_time = dict(zip(
                activity_params["activity_type"].astype(str),
                activity_params["value_of_time_usd_per_hr"].astype(float)))
        return cls(
                mode=choice.ModeChoiceParams.from_config(config),
                activity_beta_time=beta_time,
                default_beta_time=float(
                    config["modeChoice.defaultValueOfTime"]),
                stuck_penalty=float(config["replanning.stuckPenalty"]),
                replanning_penalty=float(
                    config["replanning.replanningPenalty"]))

    def beta_time(self, activity_type):
        return self.activity_beta_time.get(activity_type,
                                           self.default_beta_time)


def _activity_utility(activity_type, start, end, params):
    return params.beta_time(activity_type) * max(0.0, end - start) / 3600.0


def score_plan(person_events, value_of_time, params, stuck=False):
    """
    Experienced utility of one person's day

    A trip runs from an ActivityEnd to the next ActivityStart; its mode is
    the last ModeChoice in between and its cost the sum of PersonCost
    events. The first activity counts from midnight and the last one until
    the end of the day.

    Args:
        person_events (pandas.DataFrame): the person's events, time-sorted
        value_of_time (float): dollars per hour
        params (ScoringParams): coefficients
        stuck (bool): whether the person ended the day stuck

    Returns:
        float: the score in dollars
    """
    if stuck:
        return params.stuck_penalty
    score = 0.0
    replans = 0
    activity = None
    trip = None
    rows = zip(person_events["type"], person_events["time"],
               outputs.column(person_events, "actType"),
               outputs.column(person_events, "mode"),
               outputs.numeric(person_events, "cost"),
               outputs.numeric(person_events, "transfers"))
    for kind, time, act_type, mode, cost, transfers in rows:
        if kind == "ActivityStart":
            if trip is not None:
                score += choice.utility_from_terms(
                        trip["mode"], trip["cost"], time - trip["depart"],
                        trip["transfers"], value_of_time, params.mode)
                trip = None
            activity = (act_type, time)
        elif kind == "ActivityEnd":
            if activity is not None:
                score += _activity_utility(activity[0], activity[1], time,
                                           params)
            activity = None
            trip = {"depart": time, "cost": 0.0, "transfers": 0.0,
                    "mode": modes.Mode.WALK}
        elif kind == "ModeChoice" and trip is not None:
            trip["mode"] = modes.Mode.parse(mode)
            trip["transfers"] = transfers
        elif kind == "PersonCost" and trip is not None:
            trip["cost"] += cost
        elif kind == "Replanning":
            replans += 1
    if activity is not None:
        score += _activity_utility(activity[0], activity[1],
                                   params.day_length, params)
    return score - params.replanning_penalty * replans


def score_day(events, values_of_time, stuck, params):
    """
    Score every person of a day

    Args:
        events (pandas.DataFrame): the day's events
        values_of_time (dict): person id -> dollars per hour
        stuck (iterable of str): persons who did not finish
        params (ScoringParams): coefficients

    Returns:
        dict: person id -> score
    """
    stuck = set(stuck)
    grouped = {}
    if "person" in events.columns:
        personal = events[events["person"].notna()]
        grouped = {str(k): v for k, v in personal.groupby("person", sort=True)}
    empty = events.iloc[0:0]
    return {person_id: score_plan(grouped.get(person_id, empty), vot, params,
                                  person_id in stuck)
            for person_id, vot in sorted(values_of_time.items())}


class PlanMemory:
    """
    The plans one person remembers, exactly one of them selected

    Adding a plan beyond the maximum size evicts the worst-scoring
    unselected plan; unscored plans are evicted last.
    """

    def __init__(self, plans, max_size=5):
        if max_size < 1:
            raise ValueError("plan memory needs room for one plan")
        plans = list(plans)
        if not plans:
            raise ValueError("plan memory needs a plan")
        if sum(p.selected for p in plans) != 1:
            plans = [dataclasses.replace(p, selected=i == 0)
                     for i, p in enumerate(plans)]
        self.plans = plans
        self.max_size = max_size
        self._evict()

    def __len__(self):
        return len(self.plans)

    @property
    def selected_index(self):
        return next(i for i, p in enumerate(self.plans) if p.selected)

    @property
    def selected(self):
        return self.plans[self.selected_index]

    def best(self):
        scored = [p for p in self.plans if p.score is not None]
        if not scored:
            return self.selected
        return max(scored, key=lambda p: p.score)

    def select_best(self):
        """Select the best-scoring plan, the current one on ties"""
        def score(index):
            value = self.plans[index].score
            return -math.inf if value is None else value

        current = self.selected_index
        best = max(range(len(self.plans)), key=score)
        if score(best) > score(current):
            self.select(best)
        return self.selected

    def select(self, index):
        self.plans = [dataclasses.replace(p, selected=i == index)
                      for i, p in enumerate(self.plans)]

    def replace_selected(self, plan, score=None):
        """Swap in the executed version of the selected plan"""
        self.plans[self.selected_index] = dataclasses.replace(
                plan, selected=True,
                score=score if score is not None else plan.score)

    def add(self, plan):
        """Remember a new plan and select it"""
        self.plans = [dataclasses.replace(p, selected=False)
                      for p in self.plans]
        self.plans.append(dataclasses.replace(plan, selected=True,
                                              score=None))
        self._evict()

    def _evict(self):
        while len(self.plans) > self.max_size:
            candidates = [(math.inf if p.score is None else p.score, i)
                          for i, p in enumerate(self.plans) if not p.selected]
            _, worst = min(candidates)
            LOG.debug("evicting plan scored %s", self.plans[worst].score)
            del self.plans[worst]

    def choose_logit(self, scale, rng):
        """Select a remembered plan with probability softmax(score / scale)"""
        scored = [i for i, p in enumerate(self.plans) if p.score is not None]
        if not scored:
            return self.selected
        index = choice.mnl_choose({i: self.plans[i].score for i in scored},
                                  scale, rng)
        self.select(index)
        return self.selected


def select_strategy(weights, rng):
    """Draw the strategy a person applies tonight"""
    strategies, probabilities = zip(*weights.items())
    return strategies[int(rng.choice(len(strategies), p=probabilities))]


def clear_routes(plan):
    """Forget stored car paths, keeping the chosen modes"""
    elements = tuple(dataclasses.replace(e, route=())
                     if isinstance(e, scn.Leg) else e for e in plan.elements)
    return dataclasses.replace(plan, elements=elements, score=None)


def clear_modes(plan):
    """Forget trip modes; routes go with them"""
    elements = tuple(dataclasses.replace(e, mode=None, route=())
                     if isinstance(e, scn.Leg) else e for e in plan.elements)
    return dataclasses.replace(plan, elements=elements, score=None)


def clear_discretionary(plan, home_windows=((7.0, 11.0), (11.0, 15.0),
                                            (15.0, 20.0))):
    """
    Keep only the day's anchors and mandatory activities

    The first and last activities stay as the day's anchors. Each mandatory
    activity gets one blank subtour leaving from it within the time it is
    occupied; a day without mandatory activities collapses to the first
    activity with one blank subtour per home window.

    Args:
        plan (scenario.Plan): the plan
        home_windows (sequence of (float, float)): hours of the blank
            subtours of days without mandatory activities

    Returns:
        scenario.Plan: the cleared plan with blanks
    """
    acts = plan.activities
    mandatory = [i for i, a in enumerate(acts) if a.mandatory]
    if not mandatory:
        anchor = dataclasses.replace(acts[0], end_time=None)
        blanks = tuple(scn.BlankSubtour(0, float(start), float(end))
                       for start, end in home_windows)
        return scn.Plan((anchor,), blanks=blanks)
    keep = sorted({0, len(acts) - 1, *mandatory})
    kept = [acts[i] for i in keep]
    elements = [kept[0]]
    for activity in kept[1:]:
        elements += [scn.Leg(), activity]
    blanks = []
    for position, index in enumerate(keep):
        if index not in mandatory or acts[index].end_time is None:
            continue
        previous = kept[position - 1].end_time if position else 0.0
        blanks.append(scn.BlankSubtour(position, (previous or 0.0) / 3600.0,
                                       acts[index].end_time / 3600.0))
    return scn.Plan(tuple(elements), blanks=tuple(blanks))


@dataclasses.dataclass
class DiscretionaryContext:
    """What filling a person's blank subtours needs"""
    skims: typing.Any
    params: choice.DiscretionaryParams
    intercepts: typing.Any
    taz_centroids: typing.Mapping[str, typing.Any]
    seed: int

    @property
    def activity_types(self):
        return list(self.intercepts["activity_type"].astype(str))

    @property
    def weights(self):
        hours = [f"hour_{h}" for h in range(24)]
        return self.intercepts[hours].to_numpy(dtype=float)


def _destination_utilities(origin_taz, candidates, depart, ret, context):
    """Mode logsum per destination and the fastest travel times to it"""
    utilities, times = {}, {}
    for destination in candidates:
        by_mode, best = {}, None
        for mode in DESTINATION_MODES:
            outbound = context.skims.lookup(mode, origin_taz, destination,
                                            depart)
            inbound = context.skims.lookup(mode, destination, origin_taz, ret)
            by_mode[mode] = choice.destination_mode_utility(
                    outbound, inbound, mode, context.params)
            if best is None or by_mode[mode] > by_mode[best[0]]:
                best = (mode, outbound.mean_time, inbound.mean_time)
        utilities[destination] = choice.destination_logsum(
                by_mode, context.params.lambda_mode)
        times[destination] = best[1:]
    return utilities, times


def _fill_one(acts, legs, index, blank, ready, context, person_id, subtour,
              rng):
    """
    Try one blank subtour leaving from acts[index]

    Returns:
        float: when the person is back at acts[index], None if the subtour
        was skipped
    """
    anchor = acts[index]
    window_start = max(blank.window_start, ready / 3600.0)
    try:
        skeleton = choice.discretionary_skeleton(
                window_start, blank.window_end, context.weights, rng)
    except (choice.WindowTooNarrow, choice.EmptyChoiceSet) as exc:
        LOG.debug("%s: subtour %d skipped: %s", person_id, subtour, exc)
        return None
    activity_type = context.activity_types[skeleton.activity_index]
    try:
        duration = choice.sample_duration(activity_type, context.params, rng)
        candidates = choice.sample_destinations(
                anchor.taz, context.taz_centroids,
                context.params.dest_max_radius,
                context.params.dest_sample_count, context.seed, person_id,
                subtour)
    except (ValueError, choice.NoCandidates) as exc:
        LOG.debug("%s: subtour %d skipped: %s", person_id, subtour, exc)
        return None
    depart = skeleton.start_time
    if anchor.end_time is not None:
        # the sampled hour may run past the anchor's end
        depart = min(depart, anchor.end_time)
    utilities, times = _destination_utilities(
            anchor.taz, candidates, depart, depart + duration, context)
    travel_logsum = choice.logsum(utilities.values(),
                                  context.params.lambda_dest)
    deadline = anchor.end_time if anchor.end_time is not None \
        else DAY_LENGTH
    fastest = min(out + back for out, back in times.values())
    late = depart + fastest + duration > deadline
    if not choice.participation_choice(activity_type, duration, travel_logsum,
                                       context.params, rng, late=late):
        return None
    destination = choice.mnl_choose(utilities, context.params.lambda_dest,
                                    rng)
    outbound, inbound = times[destination]
    leave = depart + outbound + duration
    if anchor.end_time is not None:
        leave = min(leave, max(depart, anchor.end_time - inbound))
    stop = scn.Activity(activity_type, context.taz_centroids[destination],
                        destination, end_time=leave)
    acts[index:index + 1] = [dataclasses.replace(anchor, end_time=depart),
                             stop, anchor]
    legs[index:index] = [scn.Leg(), scn.Leg()]
    return leave + inbound


def fill_discretionary(plan, context, person_id, iteration=0):
    """
    Turn a plan's blank subtours into concrete activities

    Each blank runs skeleton, duration, destination set and participation
    in turn; a taken subtour goes to a destination drawn from the nested
    logit and its trips are left without modes. Blanks whose window cannot
    hold a subtour are dropped.

    Args:
        plan (scenario.Plan): plan with blanks
        context (DiscretionaryContext): skims, coefficients and tables
        person_id (str): the person
        iteration (int): iteration keying the random stream

    Returns:
        scenario.Plan: a plan without blanks
    """
    if not plan.blanks:
        return plan
    rng = streams.stream(context.seed, "discretionary", iteration, person_id)
    acts = list(plan.activities)
    legs = list(plan.legs)
    # each inserted subtour moves later activities two places on
    shift = [0] * len(acts)
    ready = {}
    for subtour, blank in enumerate(sorted(plan.blanks,
                                           key=lambda b: (b.after,
                                                          b.window_start))):
        index = blank.after + shift[blank.after]
        back = _fill_one(acts, legs, index, blank,
                         ready.get(blank.after, 0.0), context, person_id,
                         subtour, rng)
        if back is None:
            continue
        ready[blank.after] = back
        shift = [s + 2 if i >= blank.after else s for i, s in enumerate(shift)]
    elements = [acts[0]]
    for leg, activity in zip(legs, acts[1:]):
        elements += [leg, activity]
    filled = dataclasses.replace(plan, elements=tuple(elements), blanks=())
    filled.check(f"plan of {person_id}")
    return filled


def apply_strategy(strategy, memory, rng, selection_scale=1.0,
                   home_windows=((7.0, 11.0), (11.0, 15.0), (15.0, 20.0))):
    """
    Apply a strategy to a person's memory

    KeepBest reselects among remembered plans; the others mutate a copy of
    the selected plan and select the copy.

    Returns:
        scenario.Plan: the plan selected for the next day
    """
    if strategy is Strategy.KEEP_BEST:
        return memory.choose_logit(selection_scale, rng)
    current = memory.selected
    if strategy is Strategy.CLEAR_ROUTES:
        memory.add(clear_routes(current))
    elif strategy is Strategy.CLEAR_MODES:
        memory.add(clear_modes(current))
    else:
        memory.add(clear_discretionary(current, home_windows))
    return memory.selected


@dataclasses.dataclass(frozen=True)
class ScoreStats:
    iteration: int
    min: float
    mean: float
    max: float
    best: float

    def as_row(self):
        return dataclasses.asdict(self)


def score_stats(memories, iteration):
    """
    Statistics over the executed plans and each person's best plan

    Args:
        memories (dict): person id -> PlanMemory
        iteration (int): iteration number

    Returns:
        ScoreStats: min, mean and max of selected scores, mean best score
    """
    executed = np.array([m.selected.score for m in memories.values()
                         if m.selected.score is not None], dtype=float)
    best = np.array([m.best().score for m in memories.values()
                     if m.best().score is not None], dtype=float)
    if executed.size == 0:
        return ScoreStats(iteration, math.nan, math.nan, math.nan, math.nan)
    return ScoreStats(iteration, float(executed.min()), float(executed.mean()),
                      float(executed.max()), float(best.mean()))
