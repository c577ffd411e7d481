"""Trigger scheduler tests"""
import itertools

import numpy as np
import pytest

from wayfarer import scheduler


class TreeActor(scheduler.Actor):
    """Spawns the children of each node of a trigger tree"""

    def __init__(self, actor_id, children, times, withheld=None):
        super().__init__(actor_id)
        self.children = children
        self.times = times
        self.withheld = withheld
        self.handled = []

    def handle(self, trigger):
        node = trigger.payload
        self.handled.append(node)
        if node == self.withheld:
            return scheduler.DEFER
        return [scheduler.Trigger(self.times[c], self.actor_id, c)
                for c in self.children[node]]


def random_tree(rng, size):
    parents = [None] + [int(rng.integers(0, i)) for i in range(1, size)]
    times = [float(rng.uniform(0, 100))]
    for i in range(1, size):
        gap = 0.0 if rng.random() < 0.2 else float(rng.exponential(40.0))
        times.append(times[parents[i]] + gap)
    children = {i: [j for j in range(size) if parents[j] == i]
                for i in range(size)}
    return children, times


def fake_clock():
    ticks = itertools.count()
    return lambda: float(next(ticks))


def test_random_trees_complete_in_time_order():
    rng = np.random.default_rng(2024)
    for _ in range(1000):
        size = int(rng.integers(1, 20))
        children, times = random_tree(rng, size)
        sched = scheduler.Scheduler(window_size=float(rng.uniform(1, 120)))
        actor = sched.register(TreeActor("tree", children, times))
        sched.schedule_trigger(scheduler.Trigger(times[0], "tree", 0))

        handled = sched.run(stuck_timeout=5.0)

        assert handled == size
        assert sorted(actor.handled) == list(range(size))
        delivered = [t for t, _ in sched.delivered]
        assert delivered == sorted(delivered)
        assert not sched.window.open


def test_any_withheld_completion_is_reported_stuck():
    rng = np.random.default_rng(99)
    for _ in range(200):
        size = int(rng.integers(1, 15))
        children, times = random_tree(rng, size)
        withheld = int(rng.integers(0, size))
        sched = scheduler.Scheduler(window_size=30.0, clock=fake_clock(),
                                    sleep=lambda seconds: None)
        sched.register(TreeActor("tree", children, times, withheld))
        sched.schedule_trigger(scheduler.Trigger(times[0], "tree", 0))

        with pytest.raises(scheduler.SchedulerStuck) as info:
            sched.run(stuck_timeout=5.0)

        assert [(actor, t) for actor, _, t in info.value.report] == \
            [("tree", times[withheld])]


def test_deferred_trigger_completed_later_releases_the_window():
    sched = scheduler.Scheduler(window_size=10.0)
    sched.schedule_trigger(scheduler.Trigger(0.0, "a"))
    sched.schedule_trigger(scheduler.Trigger(50.0, "b"))
    first = sched.advance()
    assert [t.target for t in first] == ["a"]
    assert sched.advance() == []

    sched.complete(scheduler.CompletionNotice(first[0].id))

    assert [t.target for t in sched.advance()] == ["b"]
    assert sched.window.lower == 50.0


def test_triggers_at_the_end_time_stay_queued():
    sched = scheduler.Scheduler()
    sched.register(TreeActor("tree", {0: [], 1: []}, [10.0, 100.0]))
    sched.schedule_trigger(scheduler.Trigger(10.0, "tree", 0))
    sched.schedule_trigger(scheduler.Trigger(100.0, "tree", 1))

    assert sched.run(until=100.0) == 1
    assert sched.queued == 1


def test_same_time_triggers_deliver_in_scheduling_order():
    sched = scheduler.Scheduler()
    ids = [sched.schedule_trigger(scheduler.Trigger(5.0, f"a{i}"))
           for i in range(5)]
    assert [t.id for t in sched.advance()] == ids


def test_scheduling_before_the_window_fails():
    sched = scheduler.Scheduler()
    sched.schedule_trigger(scheduler.Trigger(100.0, "a"))
    sched.advance()
    with pytest.raises(scheduler.PastTime):
        sched.schedule_trigger(scheduler.Trigger(50.0, "b"))


def test_spawning_into_the_past_fails():
    sched = scheduler.Scheduler()
    sched.schedule_trigger(scheduler.Trigger(100.0, "a"))
    trigger, = sched.advance()
    with pytest.raises(scheduler.PastTime):
        sched.complete(scheduler.CompletionNotice(
            trigger.id, (scheduler.Trigger(99.0, "a"),)))


def test_completing_twice_fails():
    sched = scheduler.Scheduler()
    sched.schedule_trigger(scheduler.Trigger(0.0, "a"))
    trigger, = sched.advance()
    sched.complete(scheduler.CompletionNotice(trigger.id))
    with pytest.raises(scheduler.UnknownTrigger):
        sched.complete(scheduler.CompletionNotice(trigger.id))


def test_stuck_report_waits_for_the_timeout():
    sched = scheduler.Scheduler(clock=fake_clock())
    trigger_id = sched.schedule_trigger(scheduler.Trigger(5.0, "a"))
    sched.advance()
    assert sched.detect_stuck(100.0) == []
    assert sched.detect_stuck(0.5) == [("a", trigger_id, 5.0)]
    sched.complete(scheduler.CompletionNotice(trigger_id))
    assert sched.detect_stuck(0.5) == []
