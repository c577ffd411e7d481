"""Discrete-event trigger scheduler and actor mailboxes"""
import collections
import dataclasses
import heapq
import itertools
import logging
import math
import time
import typing

from . import errors

LOG = logging.getLogger(__name__)

# Returned by Actor.handle to hold a trigger open; someone must later call
# Scheduler.complete for it or the run is reported stuck.
DEFER = object()


class PastTime(errors.WayfarerError):
    """A trigger was scheduled before the current window lower bound"""


class UnknownTrigger(errors.WayfarerError):
    """A completion arrived for a trigger that is not open"""


class SchedulerStuck(errors.WayfarerError):
    """The window cannot advance because triggers were never completed"""

    def __init__(self, report):
        self.report = report
        lines = ", ".join(f"{actor}#{tid}@{t:g}" for actor, tid, t in report)
        super().__init__(f"simulation stuck on open triggers: {lines}")


@dataclasses.dataclass(frozen=True)
class Trigger:
    """
    A scheduler message delivered to one actor at a simulated time

    * time: seconds from midnight
    * target: the id of the receiving actor
    * payload: what the actor should react to
    * id: assigned by the scheduler when the trigger is scheduled
    """
    time: float
    target: str
    payload: typing.Any = None
    id: typing.Optional[int] = None


@dataclasses.dataclass(frozen=True)
class CompletionNotice:
    """Acknowledges a trigger and carries the triggers it spawned"""
    trigger_id: int
    new_triggers: typing.Tuple[Trigger, ...] = ()


@dataclasses.dataclass
class SchedulerWindow:
    """The half-open interval [lower, upper) of deliverable trigger times"""
    lower: float
    size: float
    open: typing.Dict[int, Trigger] = dataclasses.field(default_factory=dict)

    @property
    def upper(self):
        return self.lower + self.size


class Actor:
    """
    Base class for everything that receives triggers

    Delivered triggers queue in a FIFO mailbox and are handled one at a time.
    """

    def __init__(self, actor_id):
        self.actor_id = actor_id
        self.mailbox = collections.deque()

    def tell(self, trigger):
        self.mailbox.append(trigger)

    def process(self):
        """
        Handle the oldest trigger in the mailbox

        Returns:
            CompletionNotice or None: None when the actor holds the trigger
            open
        """
        trigger = self.mailbox.popleft()
        spawned = self.handle(trigger)
        if spawned is DEFER:
            return None
        return CompletionNotice(trigger.id, tuple(spawned or ()))

    def handle(self, trigger):
        """
        React to a trigger

        Args:
            trigger (Trigger): the delivered trigger

        Returns:
            iterable of Trigger, or DEFER to withhold completion
        """
        raise NotImplementedError


class Scheduler:
    """
    Trigger window scheduler

    Triggers are delivered in (time, id) order while their time lies below
    the window's upper bound. The lower bound only moves forward, and only to
    the earliest time still open or queued, so one uncompleted trigger holds
    back everything scheduled more than a window later.
    """

    def __init__(self, window_size=60.0, start_time=0.0, clock=time.monotonic,
                 sleep=time.sleep):
        """
        Initialiser

        Args:
            window_size (float): simulated seconds deliverable ahead of the
                lower bound
            start_time (float): initial lower bound
            clock (callable): wall clock used for stuck detection
            sleep (callable): used while waiting for late completions
        """
        self.window = SchedulerWindow(lower=start_time, size=window_size)
        self.actors = {}
        self._queue = []
        self._ids = itertools.count()
        self._clock = clock
        self._sleep = sleep
        self._last_progress = clock()
        self.scheduled = 0
        self.completed = 0
        self.delivered = []

    def register(self, actor):
        self.actors[actor.actor_id] = actor
        return actor

    @property
    def queued(self):
        return len(self._queue)

    def schedule_trigger(self, trigger):
        """
        Enqueue a trigger

        Args:
            trigger (Trigger): trigger without id

        Returns:
            int: the assigned trigger id
        """
        if trigger.time < self.window.lower:
            raise PastTime(
                    f"trigger for {trigger.target} at {trigger.time:g} is "
                    f"before the window lower bound {self.window.lower:g}")
        trigger_id = next(self._ids)
        scheduled = dataclasses.replace(trigger, id=trigger_id)
        heapq.heappush(self._queue, (scheduled.time, trigger_id, scheduled))
        self.scheduled += 1
        return trigger_id

    def _refresh_lower(self):
        candidates = [t.time for t in self.window.open.values()]
        if self._queue:
            candidates.append(self._queue[0][0])
        if candidates and min(candidates) > self.window.lower:
            self.window.lower = min(candidates)
            self._last_progress = self._clock()

    def advance(self, limit=None):
        """
        Deliver queued triggers inside the window

        Args:
            limit (int): deliver at most this many triggers

        Returns:
            list of Trigger: the delivered triggers in delivery order
        """
        self._refresh_lower()
        delivered = []
        while self._queue and self._queue[0][0] < self.window.upper:
            if limit is not None and len(delivered) >= limit:
                break
            _, trigger_id, trigger = heapq.heappop(self._queue)
            self.window.open[trigger_id] = trigger
            delivered.append(trigger)
            actor = self.actors.get(trigger.target)
            if actor is not None:
                actor.tell(trigger)
        if delivered:
            self._last_progress = self._clock()
            self.delivered.extend((t.time, t.id) for t in delivered)
        return delivered

    def complete(self, notice):
        """
        Close a trigger and schedule what it spawned

        Args:
            notice (CompletionNotice): the acknowledgment

        Returns:
            list of int: ids of the spawned triggers
        """
        trigger = self.window.open.get(notice.trigger_id)
        if trigger is None:
            raise UnknownTrigger(f"trigger {notice.trigger_id} is not open")
        for child in notice.new_triggers:
            if child.time < max(trigger.time, self.window.lower):
                raise PastTime(
                        f"trigger {trigger.id} at {trigger.time:g} spawned a "
                        f"trigger for {child.target} at {child.time:g}")
        del self.window.open[notice.trigger_id]
        self.completed += 1
        ids = [self.schedule_trigger(child) for child in notice.new_triggers]
        self._refresh_lower()
        return ids

    def detect_stuck(self, wall_timeout):
        """
        Report open triggers if the window has not moved for too long

        Args:
            wall_timeout (float): wall-clock seconds without progress

        Returns:
            list of (actor id, trigger id, time), sorted by time
        """
        if not self.window.open:
            return []
        if self._clock() - self._last_progress < wall_timeout:
            return []
        return sorted(
                ((t.target, t.id, t.time) for t in self.window.open.values()),
                key=lambda entry: (entry[2], entry[1]))

    def run(self, until=math.inf, stuck_timeout=30.0):
        """
        Deliver and handle triggers one at a time until none are left

        Args:
            until (float): triggers at or after this time stay queued
            stuck_timeout (float): wall-clock seconds to wait on open
                triggers before giving up

        Returns:
            int: number of triggers handled
        """
        handled = 0
        while True:
            delivered = []
            if self._queue and self._queue[0][0] < until:
                delivered = self.advance(limit=1)
            if not delivered:
                if not self.window.open:
                    break
                report = self.detect_stuck(stuck_timeout)
                if report:
                    for actor, trigger_id, at in report:
                        LOG.error("open trigger %d for %s at %g",
                                  trigger_id, actor, at)
                    raise SchedulerStuck(report)
                self._sleep(min(0.05, stuck_timeout))
                continue
            for trigger in delivered:
                actor = self.actors[trigger.target]
                notice = actor.process()
                handled += 1
                if notice is not None:
                    self.complete(notice)
        return handled
