"""
Simulation Engine Module

Discrete-event engines for a scheduled cluster:
- run_continuous: the exponential race of arrivals, template or job
  departures, ADGP clock ticks and frame epochs
- run_jump_chain: the uniformized chain, one candidate event per step
- run_loss_system: the reference system that drops what it cannot place

All engines feed a MetricsAccumulator and can emit a replayable trace.
"""

import heapq
import logging
import time as timer
from dataclasses import dataclass
from enum import Enum
from typing import TYPE_CHECKING, Dict, List, Optional, Sequence, Set, Tuple

from .cluster import (
    ClusterSpec,
    Configuration,
    ConfigurationKey,
    JobType,
    TemplateKey,
    TemplateTag,
    add_template,
    feasible_template_count,
    remove_template,
)
from .exceptions import InvariantViolationError, UnsupportedPolicyError
from .kernel import RandomStreams, random_partition
from .metrics import (
    DEFAULT_TRACKING_THRESHOLD,
    MetricsAccumulator,
    MetricsReport,
    trace_footer,
    trace_header,
    trace_record,
)
from .schedulers import (
    Action,
    ActionKind,
    Event,
    EventKind,
    PolicyVariant,
    SchedulerPolicy,
    SchedulingContext,
    SystemState,
    adgp_clock_rate,
    handle_event,
    idle_template_conflicts,
    on_start,
    state_problems,
)

if TYPE_CHECKING:
    from .scenario import Scenario

logger = logging.getLogger(__name__)


class EngineKind(str, Enum):
    CONTINUOUS = 'continuous'
    JUMP_CHAIN = 'jump-chain'
    LOSS = 'loss'


class EventQueue:
    """
    Pending timed events ordered by (time, kind priority, sequence number).

    Cancelled events stay in the heap and are skipped when they surface.

    Example:
        >>> events = EventQueue()
        >>> handle = events.schedule(1.5, Event(EventKind.ARRIVAL, 0))
        >>> events.pop()
        (1.5, Event(kind=<EventKind.ARRIVAL: 2>, job_type_id=0, template_id=None))
    """

    def __init__(self):
        self._heap: List[Tuple[float, int, int, Event]] = []
        self._live: Set[int] = set()
        self._sequence = 0

    def __len__(self) -> int:
        return len(self._live)

    def schedule(self, time: float, event: Event) -> int:
        """Add an event and return its cancellation handle."""
        handle = self._sequence
        self._sequence += 1
        heapq.heappush(self._heap, (time, int(event.kind), handle, event))
        self._live.add(handle)
        return handle

    def cancel(self, handle: Optional[int]):
        if handle is not None:
            self._live.discard(handle)

    def pop(self) -> Optional[Tuple[float, Event]]:
        """Remove and return the earliest live event, or None when empty."""
        while self._heap:
            time, _, handle, event = heapq.heappop(self._heap)
            if handle in self._live:
                self._live.discard(handle)
                return time, event
        return None


@dataclass
class SimulationResult:
    """
    Outcome of one engine run.

    Attributes:
        report: Time (or step) averaged metrics
        state: Final system state
        trace: Header, event records and footer when tracing was requested
    """
    report: MetricsReport
    state: SystemState
    trace: Optional[List[Dict]] = None


@dataclass
class LossResult:
    """
    Outcome of a loss-system run.

    Attributes:
        distribution: Fraction of post-warm-up time spent in each configuration
        report: Time-averaged metrics, including the drop count
        configuration: Final configuration
        trace: Event trace when requested
    """
    distribution: Dict[ConfigurationKey, float]
    report: MetricsReport
    configuration: Configuration
    trace: Optional[List[Dict]] = None

    @property
    def drops(self) -> int:
        return self.report.drops


def tracking_enabled(cluster: ClusterSpec, jobs: Sequence[JobType],
                     threshold: int = DEFAULT_TRACKING_THRESHOLD) -> bool:
    """Whether the template space is small enough for per-template occupancy."""
    total = sum(feasible_template_count(cluster.total_slots, job.node_count) for job in jobs)
    return total < threshold


def uniformization_rate(cluster: ClusterSpec, jobs: Sequence[JobType]) -> float:
    """xi = 2 (sum_j lambda_j + M sum_j mu_j), a bound on every total outflow rate."""
    return 2.0 * (sum(job.arrival_rate for job in jobs)
                  + cluster.total_slots * sum(job.service_rate for job in jobs))


def _entries(configuration: Configuration) -> Dict[TemplateKey, Tuple[float, bool]]:
    return {key: (t.cost, t.is_actual) for key, t in configuration.templates.items()}


class _Run:
    """Mutable bookkeeping of one replication: state, clocks, metrics and trace."""

    def __init__(self, scenario: 'Scenario', policy: SchedulerPolicy, horizon: float, seed: int,
                 trace: bool, check_invariants: bool, clocked: bool):
        self.ctx = SchedulingContext(scenario.cluster, scenario.jobs, policy, scenario.max_states)
        self.streams = RandomStreams(seed)
        self.state = SystemState.initial(self.ctx.job_ids, scenario.initial_queues)
        self.horizon = horizon
        self.check_invariants = check_invariants
        self.clocked = clocked
        track = tracking_enabled(scenario.cluster, scenario.jobs, scenario.tracking_threshold)
        if not track:
            logger.info("template space above %d, tracking aggregate cost only", scenario.tracking_threshold)
        params = policy.params
        self.accumulator = MetricsAccumulator(self.ctx.job_ids, params.h, params.b, horizon,
                                              scenario.warmup, track)
        self.records: Optional[List[Dict]] = None
        if trace:
            self.records = [trace_header(self.ctx.job_ids, params.h, params.b, horizon, scenario.warmup,
                                         track, self.state.initial_sizes)]
        self.events = EventQueue()
        self.departures: Dict[TemplateKey, int] = {}
        self.ticks: Dict[int, Tuple[float, int]] = {}
        self.epochs = 0
        # DGP and ADGP templates depart on their own clocks; the baselines time jobs
        self.template_clocks = policy.variant in (PolicyVariant.DGP, PolicyVariant.ADGP)

    # ----- clocks -----

    def _schedule_arrival(self, now: float, job: JobType):
        if job.arrival_rate > 0:
            delay = self.streams.arrivals.exponential(1.0 / job.arrival_rate)
            self.events.schedule(now + delay, Event(EventKind.ARRIVAL, job.id))

    def _schedule_departure(self, now: float, j: int, key: TemplateKey):
        delay = self.streams.departures.exponential(1.0 / self.ctx.jobs[j].service_rate)
        self.departures[key] = self.events.schedule(now + delay, Event(EventKind.DEPARTURE, j, key))

    def _update_departures(self, now: float, actions: Sequence[Action]):
        for action in actions:
            if action.kind in (ActionKind.TEMPLATE_DESTROYED, ActionKind.JOB_DEPARTED,
                               ActionKind.JOB_INTERRUPTED):
                self.events.cancel(self.departures.pop(action.template_id, None))
            elif action.kind is ActionKind.TEMPLATE_CREATED and self.template_clocks:
                self._schedule_departure(now, action.job_type_id, action.template_id)
            elif action.kind is ActionKind.JOB_STARTED and not self.template_clocks:
                self._schedule_departure(now, action.job_type_id, action.template_id)

    def _refresh_ticks(self, now: float):
        """Resample a dedicated clock whenever its rate changes (memoryless)."""
        for j in self.ctx.job_ids:
            rate = adgp_clock_rate(self.state, j, self.ctx)
            current = self.ticks.get(j)
            if current is not None and current[0] == rate:
                continue
            if current is not None:
                self.events.cancel(current[1])
            delay = self.streams.clocks.exponential(1.0 / rate)
            self.ticks[j] = (rate, self.events.schedule(now + delay, Event(EventKind.TICK, j)))

    def _schedule_epoch(self):
        self.events.schedule(self.epochs * self.ctx.params.frame_length, Event(EventKind.EPOCH))
        self.epochs += 1

    # ----- processing -----

    def start(self):
        self.accumulator.record(self.accumulator.observe(self.state.queue_sizes(), {}), count_event=False)
        outcome = on_start(self.state, self.ctx, self.streams)
        if outcome.actions:
            self.state = outcome.state
            self._record(0.0, 'start', None, None, outcome.actions, count_event=False)
        if not self.clocked:
            return
        for j in self.ctx.job_ids:
            self._schedule_arrival(0.0, self.ctx.jobs[j])
        self._update_departures(0.0, outcome.actions)
        variant = self.ctx.policy.variant
        if variant is PolicyVariant.FRAME_BASED:
            self._schedule_epoch()
        elif variant is PolicyVariant.ADGP:
            self._refresh_ticks(0.0)

    def handle(self, now: float, event: Event):
        self.accumulator.advance(now)
        if self.clocked:
            if event.kind is EventKind.ARRIVAL:
                self._schedule_arrival(now, self.ctx.jobs[event.job_type_id])
            elif event.kind is EventKind.EPOCH:
                self._schedule_epoch()
            elif event.kind is EventKind.TICK:
                del self.ticks[event.job_type_id]
            elif event.kind is EventKind.DEPARTURE:
                self.departures.pop(event.template_id, None)
        outcome = handle_event(self.state.at(now), event, self.ctx, self.streams)
        self.state = outcome.state
        if self.clocked:
            self._update_departures(now, outcome.actions)
            if self.ctx.policy.variant is PolicyVariant.ADGP:
                self._refresh_ticks(now)
        self._record(now, event.kind.name.lower(), event.job_type_id, event.template_id, outcome.actions)

    def _record(self, now: float, kind: str, job_type_id: Optional[int], template_id: Optional[TemplateKey],
                actions: Sequence[Action], count_event: bool = True):
        sizes = self.state.queue_sizes()
        obs = self.accumulator.observe(sizes, _entries(self.state.configuration))
        self.accumulator.record(obs, actions, count_event=count_event)
        if self.records is not None:
            self.records.append(trace_record(now, kind, job_type_id, template_id, actions, obs.queues))
        if self.check_invariants:
            problems = state_problems(self.state)
            problems += [f"type {j}: waiting job next to an idle virtual template"
                         for j in idle_template_conflicts(self.state)]
            if problems:
                raise InvariantViolationError(now, problems)

    def finish(self, events: Optional[int] = None) -> SimulationResult:
        report = self.accumulator.finish(events)
        if self.records is not None:
            self.records.append(trace_footer(self.horizon, report.events))
        return SimulationResult(report, self.state, self.records)


# ==================== CONTINUOUS TIME ====================

def run_continuous(scenario: 'Scenario', policy: Optional[SchedulerPolicy] = None,
                   horizon: Optional[float] = None, seed: int = 0, trace: bool = False,
                   check_invariants: bool = False) -> SimulationResult:
    """
    Simulate the scheduled cluster in continuous time.

    Events at equal times fire in (kind priority, scheduling order); the
    run is a pure function of its arguments.

    Args:
        scenario: Cluster, job types and run options
        policy: Scheduling policy (defaults to the scenario's)
        horizon: Simulated time (defaults to the scenario's)
        seed: Root seed of the random streams
        trace: Keep the raw event trace
        check_invariants: Verify bookkeeping invariants after every event

    Returns:
        SimulationResult with the time-averaged report

    Raises:
        ValueError: If horizon is negative
    """
    policy = policy or scenario.policy
    horizon = scenario.horizon if horizon is None else float(horizon)
    if horizon < 0:
        raise ValueError(f"horizon must be nonnegative, got {horizon}")

    started = timer.perf_counter()
    logger.info("continuous run: policy=%s horizon=%g seed=%d", policy.label, horizon, seed)
    run = _Run(scenario, policy, horizon, seed, trace, check_invariants, clocked=True)
    run.start()
    while True:
        nxt = run.events.pop()
        if nxt is None or nxt[0] > horizon:
            break
        run.handle(*nxt)
    result = run.finish()
    logger.info("continuous run done: %d events in %.2fs", result.report.events, timer.perf_counter() - started)
    return result


# ==================== JUMP CHAIN ====================

def _jump_event(state: SystemState, ctx: SchedulingContext, r: float,
                streams: RandomStreams) -> Optional[Event]:
    """Map r in [0, xi) to an arrival, a uniformly chosen departure or None (self-loop)."""
    for j in ctx.job_ids:
        rate = ctx.jobs[j].arrival_rate
        if r < rate:
            return Event(EventKind.ARRIVAL, j)
        r -= rate
    for j in ctx.job_ids:
        templates = state.configuration.of_type(j)
        rate = len(templates) * ctx.jobs[j].service_rate
        if r < rate:
            chosen = templates[int(streams.departures.integers(len(templates)))]
            return Event(EventKind.DEPARTURE, j, chosen.key)
        r -= rate
    return None


def run_jump_chain(scenario: 'Scenario', policy: Optional[SchedulerPolicy] = None,
                   steps: Optional[int] = None, seed: int = 0, trace: bool = False,
                   check_invariants: bool = False) -> SimulationResult:
    """
    Simulate the jump chain of the uniformized process.

    At each step an arrival of type j happens with probability lambda_j/xi,
    the departure of a uniformly chosen type-j template with probability
    |C^(j)| mu_j / xi, and nothing otherwise. Metrics are step averages;
    self-loops are counted as events but not traced.

    Raises:
        UnsupportedPolicyError: For ADGP and frame-based policies
        ValueError: If steps is negative
    """
    policy = policy or scenario.policy
    if policy.variant not in (PolicyVariant.DGP, PolicyVariant.ROUND_ROBIN):
        raise UnsupportedPolicyError(f"the jump chain cannot run {policy.variant.value}")
    steps = scenario.steps if steps is None else int(steps)
    if steps < 0:
        raise ValueError(f"steps must be nonnegative, got {steps}")

    xi = uniformization_rate(scenario.cluster, scenario.jobs)
    started = timer.perf_counter()
    logger.info("jump chain: policy=%s steps=%d xi=%g seed=%d", policy.label, steps, xi, seed)
    run = _Run(scenario, policy, float(steps), seed, trace, check_invariants, clocked=False)
    run.start()
    for step in range(1, steps + 1):
        r = run.streams.clocks.random() * xi
        event = _jump_event(run.state, run.ctx, r, run.streams)
        if event is not None:
            run.handle(float(step), event)
    result = run.finish(events=steps)
    logger.info("jump chain done in %.2fs", timer.perf_counter() - started)
    return result


# ==================== LOSS SYSTEM ====================

def run_loss_system(scenario: 'Scenario', horizon: Optional[float] = None, seed: int = 0,
                    trace: bool = False) -> LossResult:
    """
    Simulate the loss system: arrivals are placed by random partition when
    enough slots are free and dropped otherwise; placed jobs hold their
    template for an exponential(mu_j) time. There are no queues and no
    acceptance test.

    Returns:
        LossResult whose distribution is the post-warm-up time fraction per
        configuration

    Raises:
        ValueError: If horizon is negative
    """
    horizon = scenario.horizon if horizon is None else float(horizon)
    if horizon < 0:
        raise ValueError(f"horizon must be nonnegative, got {horizon}")
    cluster = scenario.cluster
    jobs = {job.id: job for job in scenario.jobs}
    job_ids = sorted(jobs)
    streams = RandomStreams(seed)
    params = scenario.policy.params
    accumulator = MetricsAccumulator(job_ids, params.h, params.b, horizon, scenario.warmup, track_templates=True)
    empty_sizes = {j: 0 for j in job_ids}
    records = [trace_header(job_ids, params.h, params.b, horizon, scenario.warmup, True, empty_sizes)] if trace else None

    config = Configuration.empty()
    issued = {j: 0 for j in job_ids}
    events = EventQueue()
    for j in job_ids:
        if jobs[j].arrival_rate > 0:
            events.schedule(streams.arrivals.exponential(1.0 / jobs[j].arrival_rate), Event(EventKind.ARRIVAL, j))
    accumulator.record(accumulator.observe(empty_sizes, {}), count_event=False)
    logger.info("loss system: horizon=%g seed=%d", horizon, seed)

    while True:
        nxt = events.pop()
        if nxt is None or nxt[0] > horizon:
            break
        now, event = nxt
        accumulator.advance(now)
        j = event.job_type_id
        job = jobs[j]
        if event.kind is EventKind.ARRIVAL:
            events.schedule(now + streams.arrivals.exponential(1.0 / job.arrival_rate), event)
            template = random_partition(config, job, cluster, streams.placement)
            if template is None:
                actions = (Action(ActionKind.JOB_DROPPED, j),)
            else:
                template = template.as_actual(issued[j])
                issued[j] += 1
                config = add_template(config, template)
                actions = (
                    Action(ActionKind.TEMPLATE_CREATED, j, template.key, tag=TemplateTag.ACTUAL, cost=template.cost),
                    Action(ActionKind.JOB_STARTED, j, template.key, job_id=template.job_id),
                )
                delay = streams.departures.exponential(1.0 / job.service_rate)
                events.schedule(now + delay, Event(EventKind.DEPARTURE, j, template.key))
        else:
            template = config.get(event.template_id)
            config = remove_template(config, event.template_id)
            actions = (
                Action(ActionKind.JOB_DEPARTED, j, template.key, job_id=template.job_id),
                Action(ActionKind.TEMPLATE_DESTROYED, j, template.key),
            )
        sizes = {k: config.count(k) for k in job_ids}
        obs = accumulator.observe(sizes, _entries(config))
        accumulator.record(obs, actions)
        if records is not None:
            records.append(trace_record(now, event.kind.name.lower(), j, event.template_id, actions, obs.queues))

    report = accumulator.finish()
    if records is not None:
        records.append(trace_footer(horizon, report.events))
    logger.info("loss system done: %d events, %d drops", report.events, report.drops)
    return LossResult(report.steady.configurations or {}, report, config, records)
