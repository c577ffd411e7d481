"""Iteration loop tests"""
import filecmp
import os

import numpy as np
import pandas as pd
import pytest

import conftest
from wayfarer import config as cfg
from wayfarer import controller
from wayfarer import modes

TRANSIT = {m.value for m in modes.TRANSIT_MODES}


def run(directory, output_dir, overrides=(), workers=None):
    config, scenario = conftest.load_toy(directory, list(overrides))
    return controller.Controller(config, scenario, str(output_dir),
                                 workers).run()


def files_under(directory):
    found = []
    for root, _, names in os.walk(directory):
        found += [os.path.relpath(os.path.join(root, n), directory)
                  for n in names]
    return sorted(found)


def test_two_iterations_write_every_output(small_toy_dir, tmp_path):
    result = run(small_toy_dir, tmp_path / "out",
                 ["simulation.lastIteration=1"])
    assert [r.iteration for r in result.iterations] == [0, 1]
    names = files_under(result.output_dir)
    for iteration in (0, 1):
        for name in ("events.csv.gz", "linkstats.csv.gz", "skims_od.csv.gz",
                     "skims_ridehail.csv.gz", "skims_parking.csv.gz"):
            assert os.path.join("ITERS", f"it.{iteration}", name) in names
    for name in ("summaryStats.csv", "scoreStats.csv", "modeChoice.csv",
                 "config.yaml"):
        assert name in names

    summary = pd.read_csv(
            os.path.join(result.output_dir, "summaryStats.csv"))
    assert summary.iteration.tolist() == [0, 1]
    assert (summary.relaxationGap >= 0).all()
    assert result.relaxation_gap == pytest.approx(
            summary.relaxationGap.iloc[-1])


def test_runs_are_byte_identical(small_toy_dir, tmp_path):
    first = run(small_toy_dir, tmp_path / "first",
                ["simulation.lastIteration=1"], workers=1)
    second = run(small_toy_dir, tmp_path / "second",
                 ["simulation.lastIteration=1"], workers=2)
    names = files_under(first.output_dir)
    assert names == files_under(second.output_dir)
    match, mismatch, errors = filecmp.cmpfiles(
            first.output_dir, second.output_dir, names, shallow=False)
    assert (mismatch, errors) == ([], [])
    assert len(match) == len(names)


def test_different_seeds_change_the_day(small_toy_dir, tmp_path):
    first = run(small_toy_dir, tmp_path / "a",
                ["simulation.lastIteration=0", "seed=1"])
    second = run(small_toy_dir, tmp_path / "b",
                 ["simulation.lastIteration=0", "seed=2"])
    events = os.path.join(controller.ITERS, "it.0", "events.csv.gz")
    assert not filecmp.cmp(os.path.join(first.output_dir, events),
                           os.path.join(second.output_dir, events),
                           shallow=False)


def shares(result):
    frames = []
    for r in result.iterations:
        split = r.mode_split
        frames.append(split / split.sum())
    return frames


@pytest.mark.slow
def test_relaxation_settles_on_the_toy(toy_dir, tmp_path):
    result = run(toy_dir, tmp_path / "out")
    gaps = [r.relaxation_gap for r in result.iterations]
    assert len(gaps) == 10
    # the toy queues at the commute peak
    assert gaps[0] > 0.01
    assert gaps[-1] <= 0.5 * gaps[0]
    last = shares(result)[-3:]
    for before, after in zip(last, last[1:]):
        change = before.sub(after, fill_value=0.0).abs().sum()
        assert change <= 0.05


def mean_share(directory, tmp_path, overrides, wanted):
    values = []
    for seed in (1, 2, 3):
        result = run(directory, tmp_path / f"{len(os.listdir(tmp_path))}",
                     ["simulation.lastIteration=0", f"seed={seed}",
                      *overrides])
        split, = shares(result)
        values.append(split[split.index.isin(wanted)].sum())
    return float(np.mean(values))


@pytest.mark.slow
def test_car_constant_raises_car_share(toy_dir, tmp_path):
    base = mean_share(toy_dir, tmp_path, [], {"CAR"})
    boosted = mean_share(toy_dir, tmp_path, ["modeChoice.asc.CAR=5.0"],
                         {"CAR"})
    assert boosted > base


@pytest.mark.slow
def test_higher_fares_lower_transit_share(toy_dir, tmp_path):
    base = mean_share(toy_dir, tmp_path, [], TRANSIT)
    dearer = mean_share(toy_dir, tmp_path, ["transit.fareMultiplier=5.0"],
                        TRANSIT)
    assert dearer < base


@pytest.mark.parametrize("fraction, innovated", [(0.0, False), (1.0, True)])
def test_innovation_cutoff(small_toy_dir, tmp_path, fraction, innovated):
    config, scenario = conftest.load_toy(small_toy_dir, [
            "simulation.lastIteration=2",
            f"replanning.fractionOfIterationsToDisableInnovation={fraction}"])
    runner = controller.Controller(config, scenario, str(tmp_path / "out"))
    runner.run()
    sizes = {len(memory) for memory in runner.memories.values()}
    assert (sizes != {1}) is innovated


def test_innovation_cutoff_must_be_a_fraction(small_toy_dir, tmp_path):
    config, scenario = conftest.load_toy(small_toy_dir, [
            "replanning.fractionOfIterationsToDisableInnovation=1.5"])
    with pytest.raises(cfg.ConfigError):
        controller.Controller(config, scenario, str(tmp_path / "out"))
