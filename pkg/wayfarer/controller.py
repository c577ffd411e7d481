"""The iteration loop tying the day simulation to traffic and replanning"""
import concurrent.futures
import dataclasses
import logging
import math
import os

import pandas as pd

from . import agentsim
from . import choice
from . import config as cfg
from . import network
from . import outputs
from . import physsim
from . import replanning
from . import router as routing
from . import skims as skimming
from . import streams

LOG = logging.getLogger(__name__)

ITERS = "ITERS"
SUMMARY_FILE = "summaryStats.csv"
SCORE_FILE = "scoreStats.csv"
MODE_CHOICE_FILE = "modeChoice.csv"
MODE_CHOICE_SVG = "modeChoice.svg"
CONFIG_FILE = "config.yaml"

GZIP = {"method": "gzip", "mtime": 0}


def iteration_dir(output_dir, iteration):
    return os.path.join(output_dir, ITERS, f"it.{iteration}")


@dataclasses.dataclass
class IterationResult:
    iteration: int
    summary: dict
    mode_split: pd.Series
    relaxation_gap: float
    stuck: int
    scores: replanning.ScoreStats


@dataclasses.dataclass
class RunResult:
    output_dir: str
    iterations: list

    @property
    def relaxation_gap(self):
        return self.iterations[-1].relaxation_gap if self.iterations \
            else math.nan


class Controller:
    """
    Runs the configured number of iterations over one scenario

    Every iteration fills blank subtours, simulates the day, pushes the
    executed car routes through the traffic simulation, updates link travel
    times and skims, scores the executed plans and lets persons replan.
    """

    def __init__(self, config, scenario, output_dir=None, workers=None):
        self.config = config
        self.scenario = scenario
        self.output_dir = output_dir or config.path("outputDirectory")
        self.workers = int(workers if workers is not None
                           else config["simulation.workers"])
        self.seed = int(config["seed"])
        self.net = scenario.network

        self.physsim_params = physsim.PhysSimParams.from_config(config)
        self.period_length = self.physsim_params.period_length
        self.periods = max(1, math.ceil(float(config["simulation.endTime"])
                                        / self.period_length))
        self.table = network.LinkTravelTimeTable.free_flow(
                self.net, self.period_length, self.periods)
        self.router = routing.Router.from_config(config, self.net, self.table,
                                                 scenario.timetable)
        self.skims = skimming.Skims(self.net.taz_centroids,
                                    skimming.SkimSettings.from_config(config))
        warm = config["skims.warmStartDirectory"]
        if warm:
            LOG.info("warm start of skims from %s", config.path(
                "skims.warmStartDirectory"))
            self.skims.import_(config.path("skims.warmStartDirectory"))

        self.scoring = replanning.ScoringParams.from_config(
                config, scenario.activity_params)
        self.weights = replanning.ReplanningWeights.from_config(config)
        self.selection_scale = float(config["replanning.selectionScale"])
        fraction = float(
                config["replanning.fractionOfIterationsToDisableInnovation"])
        if not 0.0 <= fraction <= 1.0:
            raise cfg.ConfigError(
                    "replanning.fractionOfIterationsToDisableInnovation must "
                    f"lie in [0, 1], got {fraction}")
        # plans for later iterations come from selection alone
        self.innovation_until = math.floor(fraction * (config.iterations - 1))
        self.home_windows = tuple(
                tuple(window) for window in config["discretionary.homeWindows"])
        max_plans = int(config["replanning.maxPlans"])
        self.memories = {
            pid: replanning.PlanMemory([person.plan], max_plans)
            for pid, person in sorted(scenario.persons.items())}
        default_vot = float(config["modeChoice.defaultValueOfTime"])
        self.values_of_time = {
            pid: person.value_of_time if person.value_of_time is not None
            else default_vot
            for pid, person in scenario.persons.items()}
        self.discretionary = self._discretionary_context()
        self.results = []

    def _discretionary_context(self):
        if not self.config["discretionary.enabled"]:
            return None
        if self.scenario.activity_intercepts is None or \
                self.scenario.activity_params is None:
            LOG.info("no activity tables; discretionary subtours disabled")
            return None
        return replanning.DiscretionaryContext(
                skims=self.skims,
                params=choice.DiscretionaryParams.from_config(
                    self.config, self.scenario.activity_params),
                intercepts=self.scenario.activity_intercepts,
                taz_centroids=self.net.taz_centroids,
                seed=self.seed)

    def _map(self, function, items):
        if self.workers > 1:
            with concurrent.futures.ThreadPoolExecutor(
                    max_workers=self.workers) as pool:
                return list(pool.map(function, items))
        return [function(item) for item in items]

    def prepare_plans(self, iteration):
        """
        Fill the blank subtours of every selected plan

        Returns:
            dict: person id -> plan to execute
        """
        def fill(person_id):
            memory = self.memories[person_id]
            plan = memory.selected
            if plan.blanks:
                if self.discretionary is None:
                    plan = dataclasses.replace(plan, blanks=())
                else:
                    plan = replanning.fill_discretionary(
                            plan, self.discretionary, person_id, iteration)
                memory.replace_selected(plan)
            return person_id, plan

        return dict(self._map(fill, sorted(self.memories)))

    def replan(self, iteration):
        """
        Let every person apply a strategy to their plan memory

        Once the next iteration lies past the innovation cutoff, persons
        only switch to their best-scoring remembered plan.
        """
        if iteration + 1 > self.innovation_until:
            switched = 0
            for memory in self.memories.values():
                before = memory.selected_index
                memory.select_best()
                switched += memory.selected_index != before
            LOG.info("iteration %d replanning: innovation off, %d persons "
                     "switched to their best plan", iteration, switched)
            return

        def apply(person_id):
            rng = streams.stream(self.seed, "replanning", iteration,
                                 person_id)
            strategy = replanning.select_strategy(self.weights, rng)
            if strategy is replanning.Strategy.CLEAR_DISCRETIONARY and \
                    self.discretionary is None:
                strategy = replanning.Strategy.KEEP_BEST
            replanning.apply_strategy(strategy, self.memories[person_id], rng,
                                      self.selection_scale, self.home_windows)
            return strategy

        chosen = self._map(apply, sorted(self.memories))
        counts = pd.Series([s.value for s in chosen]).value_counts()
        LOG.info("iteration %d replanning: %s", iteration,
                 ", ".join(f"{k} {v}" for k, v in sorted(counts.items())))

    def run_iteration(self, iteration):
        directory = iteration_dir(self.output_dir, iteration)
        os.makedirs(directory, exist_ok=True)
        plans = self.prepare_plans(iteration)

        day = agentsim.AgentSim(self.scenario, self.config, self.router,
                                self.skims, iteration, plans).run()
        events = day.events.to_frame()
        if self.config["outputs.writeEvents"]:
            outputs.write_events(events, os.path.join(directory,
                                                      "events.csv.gz"))

        traffic = physsim.simulate(self.net, day.routes, self.physsim_params)
        linkstats = physsim.compute_linkstats(self.net, traffic,
                                              self.period_length, self.periods)
        linkstats.to_csv(os.path.join(directory, "linkstats.csv.gz"),
                         index=False, compression=GZIP)
        gap = physsim.relaxation_gap(self.table.to_frame(), linkstats)
        self.table = network.update_link_times(
                self.table, linkstats,
                float(self.config["physsim.linkTimeNoise"]),
                streams.stream(self.seed, "linkTimeNoise", iteration))
        self.router = self.router.with_table(self.table)

        self.skims.finalize_iteration()
        self.skims.export(directory)

        scores = replanning.score_day(events, self.values_of_time, day.stuck,
                                      self.scoring)
        for person_id, plan in day.plans.items():
            self.memories[person_id].replace_selected(plan, scores[person_id])
        score_stats = replanning.score_stats(self.memories, iteration)

        summary = outputs.summarize(events, iteration)
        summary["relaxationGap"] = gap
        summary["stuckAgents"] = len(day.stuck)
        outputs.append_row(summary, os.path.join(self.output_dir,
                                                 SUMMARY_FILE))
        outputs.append_row(score_stats.as_row(),
                           os.path.join(self.output_dir, SCORE_FILE))
        LOG.info("iteration %d: relaxation gap %.4f, %d stuck, mean score "
                 "%.2f", iteration, gap, len(day.stuck), score_stats.mean)
        result = IterationResult(iteration, summary, outputs.mode_split(events),
                                 gap, len(day.stuck), score_stats)
        self.results.append(result)
        return result

    def _reset_outputs(self):
        os.makedirs(self.output_dir, exist_ok=True)
        for name in (SUMMARY_FILE, SCORE_FILE, MODE_CHOICE_FILE,
                     MODE_CHOICE_SVG):
            path = os.path.join(self.output_dir, name)
            if os.path.exists(path):
                os.remove(path)
        with open(os.path.join(self.output_dir, CONFIG_FILE), "w",
                  encoding="utf-8") as handle:
            handle.write(self.config.to_yaml())

    def run(self):
        """
        Run every configured iteration

        Returns:
            RunResult: the output directory and per-iteration results

        Raises:
            scheduler.SchedulerStuck: a day could not complete
        """
        self._reset_outputs()
        iterations = self.config.iterations
        LOG.info("running %d iterations of %d persons into %s", iterations,
                 len(self.memories), self.output_dir)
        for iteration in range(iterations):
            LOG.info("iteration %d starts", iteration)
            self.run_iteration(iteration)
            if iteration < iterations - 1:
                self.replan(iteration)

        series = outputs.mode_split_series(
                {r.iteration: r.mode_split for r in self.results})
        series.to_csv(os.path.join(self.output_dir, MODE_CHOICE_FILE),
                      index=False)
        if self.config["outputs.modeChoiceSvg"] and not series.empty:
            outputs.plot_mode_split(series, os.path.join(self.output_dir,
                                                         MODE_CHOICE_SVG))
        return RunResult(self.output_dir, list(self.results))
