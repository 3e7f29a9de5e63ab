"""
Schedulers Module

Event handlers of the scheduling policies. Every handler is a pure function
from (state, event, random streams) to an EventOutcome holding the new state
and the actions taken; handlers never mutate their inputs.

Policies:
- DGP: decides at arrivals and departures, proposing one random template and
  keeping it with logistic probability of its weight
- ADGP: decides at the ticks of a dedicated clock per job type
- Frame-based Max Weight: resets the configuration every T time units
- Round robin: spreads each arriving graph over machines in turn
"""

import logging
import math
from dataclasses import dataclass, field, replace
from enum import Enum, IntEnum
from typing import Dict, List, Mapping, Optional, Sequence, Tuple

import numpy as np

from .cluster import (
    ClusterSpec,
    Configuration,
    JobType,
    Template,
    TemplateKey,
    TemplateTag,
    add_template,
    enumerate_configurations,
    remove_template,
    template_cost,
    DEFAULT_MAX_STATES,
)
from .kernel import RandomStreams, SchedulerParams, accept_probability, f_eval, random_partition
from .weights import LiveWeights, WeightTable

logger = logging.getLogger(__name__)


class PolicyVariant(str, Enum):
    DGP = 'dgp'
    ADGP = 'adgp'
    FRAME_BASED = 'frame'
    ROUND_ROBIN = 'round_robin'


class WeightMode(str, Enum):
    LIVE = 'live'
    FIXED = 'fixed'


@dataclass(frozen=True)
class SchedulerPolicy:
    """
    A scheduling policy and its parameters.

    Attributes:
        variant: Which policy runs
        params: Tuning parameters
        mode: Live weights follow the queues; fixed weights are pinned
        fixed_weights: The pinned table, required in fixed mode
    """
    variant: PolicyVariant = PolicyVariant.DGP
    params: SchedulerParams = field(default_factory=SchedulerParams)
    mode: WeightMode = WeightMode.LIVE
    fixed_weights: Optional[WeightTable] = None

    def __post_init__(self):
        object.__setattr__(self, 'variant', PolicyVariant(self.variant))
        object.__setattr__(self, 'mode', WeightMode(self.mode))
        if self.mode is WeightMode.FIXED and self.fixed_weights is None:
            raise ValueError("fixed-weights mode requires a weight table")

    def weight_table(self, total_slots: int) -> WeightTable:
        if self.mode is WeightMode.FIXED:
            return self.fixed_weights
        return LiveWeights(self.params, total_slots)

    @property
    def label(self) -> str:
        suffix = '-bar' if self.mode is WeightMode.FIXED else ''
        return f"{self.variant.value}{suffix}"


# ==================== STATE ====================

@dataclass(frozen=True)
class JobQueue:
    """
    Jobs of one type in the system, FIFO for those still waiting.

    Job ids are issued in arrival order. Waiting jobs are the re-queued ids
    (interrupted jobs, served first) followed by ids in
    [next_waiting, next_id).
    """
    requeued: Tuple[int, ...] = ()
    next_waiting: int = 0
    next_id: int = 0
    in_service: int = 0

    @property
    def waiting(self) -> int:
        return len(self.requeued) + self.next_id - self.next_waiting

    @property
    def size(self) -> int:
        """Q^(j): waiting plus in service."""
        return self.waiting + self.in_service

    def waiting_ids(self) -> List[int]:
        return list(self.requeued) + list(range(self.next_waiting, self.next_id))

    def arrive(self) -> Tuple['JobQueue', int]:
        return replace(self, next_id=self.next_id + 1), self.next_id

    def start(self) -> Tuple['JobQueue', int]:
        """Move the head-of-line job into service."""
        if self.requeued:
            return replace(self, requeued=self.requeued[1:], in_service=self.in_service + 1), self.requeued[0]
        if self.next_waiting < self.next_id:
            return replace(self, next_waiting=self.next_waiting + 1, in_service=self.in_service + 1), self.next_waiting
        raise ValueError("no waiting job to start")

    def finish(self) -> 'JobQueue':
        if self.in_service < 1:
            raise ValueError("no job in service")
        return replace(self, in_service=self.in_service - 1)

    def interrupt(self, job_ids: Sequence[int]) -> 'JobQueue':
        """Return interrupted jobs to the head of the line, oldest first."""
        return replace(
            self,
            requeued=tuple(sorted(job_ids)) + self.requeued,
            in_service=self.in_service - len(job_ids),
        )


@dataclass(frozen=True)
class SystemState:
    """
    Queues plus configuration: the Markov state of a scheduled cluster.

    Attributes:
        queues: Job queue per job type id
        configuration: Reserved templates
        clock: Simulation time
        arrived: Cumulative arrivals H^(j)
        departed: Cumulative departures D^(j)
        initial_sizes: Q^(j)(0)
        cursor: Next machine position for round-robin placement
        interruptions: Jobs interrupted so far
        drops: Arrivals dropped so far (loss system)
    """
    queues: Mapping[int, JobQueue]
    configuration: Configuration = field(default_factory=Configuration.empty)
    clock: float = 0.0
    arrived: Mapping[int, int] = field(default_factory=dict)
    departed: Mapping[int, int] = field(default_factory=dict)
    initial_sizes: Mapping[int, int] = field(default_factory=dict)
    cursor: int = 0
    interruptions: int = 0
    drops: int = 0

    @classmethod
    def initial(cls, job_type_ids: Sequence[int], initial_sizes: Optional[Mapping[int, int]] = None) -> 'SystemState':
        """Empty configuration, optionally with jobs already waiting."""
        initial_sizes = {j: (initial_sizes or {}).get(j, 0) for j in job_type_ids}
        queues = {}
        for j in job_type_ids:
            queue = JobQueue()
            for _ in range(initial_sizes[j]):
                queue, _ = queue.arrive()
            queues[j] = queue
        zeros = {j: 0 for j in job_type_ids}
        return cls(queues=queues, arrived=dict(zeros), departed=dict(zeros), initial_sizes=initial_sizes)

    def queue_sizes(self) -> Dict[int, int]:
        return {j: q.size for j, q in self.queues.items()}

    def at(self, clock: float) -> 'SystemState':
        return replace(self, clock=clock)


def state_problems(state: SystemState) -> List[str]:
    """
    Check the bookkeeping invariants of a state.

    Returns:
        Violations of queue conservation and of the actual-template count
    """
    problems = []
    for j, queue in state.queues.items():
        expected = state.initial_sizes.get(j, 0) + state.arrived.get(j, 0) - state.departed.get(j, 0)
        if queue.size != expected:
            problems.append(f"type {j}: Q={queue.size} but Q(0)+H-D={expected}")
        actual = len(state.configuration.actual(j))
        if actual != queue.in_service:
            problems.append(f"type {j}: {actual} actual templates but {queue.in_service} jobs in service")
        if actual > queue.size:
            problems.append(f"type {j}: more actual templates than jobs")
    return problems


def idle_template_conflicts(state: SystemState) -> List[int]:
    """Job types with a waiting job and an idle virtual template at once."""
    return [
        j for j, queue in state.queues.items()
        if queue.waiting > 0 and state.configuration.virtual(j)
    ]


# ==================== EVENTS AND OUTCOMES ====================

class EventKind(IntEnum):
    """Event kinds, ordered by tie-breaking priority."""
    EPOCH = 0
    DEPARTURE = 1
    ARRIVAL = 2
    TICK = 3


@dataclass(frozen=True)
class Event:
    kind: EventKind
    job_type_id: Optional[int] = None
    template_id: Optional[TemplateKey] = None


class ActionKind(str, Enum):
    TEMPLATE_CREATED = 'template-created'
    TEMPLATE_DESTROYED = 'template-destroyed'
    TEMPLATE_REJECTED = 'template-rejected'
    JOB_ENQUEUED = 'job-enqueued'
    JOB_STARTED = 'job-started'
    JOB_DEPARTED = 'job-departed'
    JOB_INTERRUPTED = 'job-interrupted'
    JOB_DROPPED = 'job-dropped'


@dataclass(frozen=True)
class Action:
    """One step taken by a handler, as recorded in traces."""
    kind: ActionKind
    job_type_id: int
    template_id: Optional[TemplateKey] = None
    job_id: Optional[int] = None
    tag: Optional[TemplateTag] = None
    cost: Optional[float] = None

    def to_dict(self) -> Dict:
        record = {'action': self.kind.value, 'job_type': self.job_type_id}
        if self.template_id is not None:
            record['template'] = [self.template_id[0], [list(s) for s in self.template_id[1]]]
        if self.job_id is not None:
            record['job'] = self.job_id
        if self.tag is not None:
            record['tag'] = self.tag.value
        if self.cost is not None:
            record['cost'] = self.cost
        return record

    @classmethod
    def from_dict(cls, record: Mapping) -> 'Action':
        template_id = None
        if 'template' in record:
            j, assignment = record['template']
            template_id = (int(j), tuple(tuple(s) for s in assignment))
        return cls(
            kind=ActionKind(record['action']),
            job_type_id=int(record['job_type']),
            template_id=template_id,
            job_id=record.get('job'),
            tag=TemplateTag(record['tag']) if 'tag' in record else None,
            cost=record.get('cost'),
        )


@dataclass(frozen=True)
class EventOutcome:
    """
    Result of one handler call.

    Attributes:
        state: The new state
        actions: Everything the handler did, in order
        interrupted: Jobs interrupted by this event
    """
    state: SystemState
    actions: Tuple[Action, ...] = ()
    interrupted: int = 0

    @property
    def started(self) -> int:
        return sum(1 for a in self.actions if a.kind is ActionKind.JOB_STARTED)


class SchedulingContext:
    """
    Static inputs a handler needs besides the state.

    Attributes:
        cluster: The cluster
        jobs: Job types by id
        policy: The running policy
        weights: Weight table implied by the policy mode
    """

    def __init__(self, cluster: ClusterSpec, jobs: Sequence[JobType], policy: SchedulerPolicy,
                 max_states: int = DEFAULT_MAX_STATES):
        self.cluster = cluster
        self.jobs = {job.id: job for job in jobs}
        self.policy = policy
        self.params = policy.params
        self.total_slots = cluster.total_slots
        self.weights = policy.weight_table(self.total_slots)
        self.max_states = max_states
        self._frame_space = None

    @property
    def job_ids(self) -> List[int]:
        return sorted(self.jobs)

    def frame_space(self):
        """Enumerated configurations with per-type counts and costs, built once."""
        if self._frame_space is None:
            configurations = enumerate_configurations(self.cluster, list(self.jobs.values()), self.max_states)
            ids = self.job_ids
            counts = np.array([[c.count(j) for j in ids] for c in configurations], dtype=float)
            costs = np.array([c.total_cost() for c in configurations])
            self._frame_space = (configurations, counts, costs)
        return self._frame_space


# ==================== SHARED STEPS ====================

def _bump(counter: Mapping[int, int], j: int, delta: int = 1) -> Dict[int, int]:
    updated = dict(counter)
    updated[j] = updated.get(j, 0) + delta
    return updated


def _enqueue(state: SystemState, j: int, actions: List[Action]) -> SystemState:
    queues = dict(state.queues)
    queues[j], job_id = queues[j].arrive()
    actions.append(Action(ActionKind.JOB_ENQUEUED, j, job_id=job_id))
    return replace(state, queues=queues, arrived=_bump(state.arrived, j))


def _fill_from_queue(state: SystemState, j: int, rng: np.random.Generator, actions: List[Action]) -> SystemState:
    """Place head-of-line jobs into virtual templates of their type, chosen uniformly."""
    queue = state.queues[j]
    config = state.configuration
    virtual = config.virtual(j)
    if queue.waiting == 0 or not virtual:
        return state
    while queue.waiting > 0 and virtual:
        template = virtual.pop(int(rng.integers(len(virtual))))
        queue, job_id = queue.start()
        config = config.replace_template(template.as_actual(job_id))
        actions.append(Action(ActionKind.JOB_STARTED, j, template.key, job_id=job_id))
    queues = dict(state.queues)
    queues[j] = queue
    return replace(state, queues=queues, configuration=config)


def _release(state: SystemState, template: Template, actions: List[Action]) -> SystemState:
    """The resident job of an actual template departs; the template stays."""
    j = template.job_type_id
    queues = dict(state.queues)
    queues[j] = queues[j].finish()
    actions.append(Action(ActionKind.JOB_DEPARTED, j, template.key, job_id=template.job_id))
    return replace(
        state,
        queues=queues,
        departed=_bump(state.departed, j),
        configuration=state.configuration.replace_template(template.as_virtual()),
    )


def _destroy(state: SystemState, template_id: TemplateKey, actions: List[Action]) -> SystemState:
    template = state.configuration.get(template_id)
    if template.is_actual:
        state = _release(state, template, actions)
    actions.append(Action(ActionKind.TEMPLATE_DESTROYED, template.job_type_id, template.key))
    return replace(state, configuration=remove_template(state.configuration, template_id))


def _offer(state: SystemState, template: Template, p: float, rng: np.random.Generator,
           actions: List[Action]) -> SystemState:
    """Keep a proposed virtual template with probability p."""
    u = rng.random()
    if u < p:
        actions.append(Action(ActionKind.TEMPLATE_CREATED, template.job_type_id, template.key,
                              tag=TemplateTag.VIRTUAL, cost=template.cost))
        return replace(state, configuration=add_template(state.configuration, template))
    actions.append(Action(ActionKind.TEMPLATE_REJECTED, template.job_type_id, template.key, cost=template.cost))
    return state


# ==================== DGP ====================

def dgp_on_arrival(state: SystemState, j: int, ctx: SchedulingContext, streams: RandomStreams) -> EventOutcome:
    """
    Handle a type-j arrival under DGP.

    The job joins its queue; a random virtual template is proposed and kept
    with probability accept_probability(w(t+), beta); then the head-of-line
    job fills a virtual template of its type if one exists.
    """
    actions: List[Action] = []
    state = _enqueue(state, j, actions)
    template = random_partition(state.configuration, ctx.jobs[j], ctx.cluster, streams.placement)
    if template is not None:
        w = ctx.weights.weight(template, state.queue_sizes())
        state = _offer(state, template, accept_probability(w, ctx.params.beta), streams.acceptance, actions)
    state = _fill_from_queue(state, j, streams.placement, actions)
    return EventOutcome(state, tuple(actions))


def dgp_on_departure(state: SystemState, template_id: TemplateKey, ctx: SchedulingContext,
                     streams: RandomStreams) -> EventOutcome:
    """
    Handle the departure of a template under DGP.

    An actual template's job leaves; a virtual template on the identical
    slots is added back with probability accept_probability(w(t+), beta);
    then waiting jobs fill virtual templates of the type.

    Raises:
        UnknownTemplateError: If the template is not in the configuration
    """
    actions: List[Action] = []
    template = state.configuration.get(template_id)
    j = template.job_type_id
    state = _destroy(state, template_id, actions)
    fresh = Template(j, template.assignment, template.cost)
    w = ctx.weights.weight(fresh, state.queue_sizes())
    state = _offer(state, fresh, accept_probability(w, ctx.params.beta), streams.acceptance, actions)
    state = _fill_from_queue(state, j, streams.placement, actions)
    return EventOutcome(state, tuple(actions))


# ==================== ADGP ====================

def adgp_clock_rate(state: SystemState, j: int, ctx: SchedulingContext) -> float:
    """lambda_hat * exp(ceiling_j / beta), the dedicated clock rate of type j."""
    exponent = ctx.weights.ceiling(j, state.queue_sizes()) / ctx.params.beta
    return ctx.params.clock_rate * math.exp(min(exponent, 700.0))


def adgp_on_clock(state: SystemState, j: int, ctx: SchedulingContext, streams: RandomStreams) -> EventOutcome:
    """
    Handle a tick of type j's dedicated clock under ADGP.

    A random template is proposed and kept with probability
    exp((w - ceiling) / beta), which is exp(-cost / beta) for live weights.
    """
    actions: List[Action] = []
    template = random_partition(state.configuration, ctx.jobs[j], ctx.cluster, streams.placement)
    if template is None:
        return EventOutcome(state, ())
    sizes = state.queue_sizes()
    gap = ctx.weights.weight(template, sizes) - ctx.weights.ceiling(j, sizes)
    p = math.exp(min(gap / ctx.params.beta, 0.0))
    state = _offer(state, template, p, streams.acceptance, actions)
    state = _fill_from_queue(state, j, streams.placement, actions)
    return EventOutcome(state, tuple(actions))


def adgp_on_arrival(state: SystemState, j: int, ctx: SchedulingContext, streams: RandomStreams) -> EventOutcome:
    """Enqueue only; the template set is left unchanged."""
    actions: List[Action] = []
    state = _enqueue(state, j, actions)
    # an idle virtual template of this type, if any, takes the job (tag flip only)
    state = _fill_from_queue(state, j, streams.placement, actions)
    return EventOutcome(state, tuple(actions))


def adgp_on_departure(state: SystemState, template_id: TemplateKey, ctx: SchedulingContext,
                      streams: RandomStreams) -> EventOutcome:
    """Remove the departing template; its job, if any, leaves."""
    actions: List[Action] = []
    j = state.configuration.get(template_id).job_type_id
    state = _destroy(state, template_id, actions)
    state = _fill_from_queue(state, j, streams.placement, actions)
    return EventOutcome(state, tuple(actions))


def adgp_on_arrival_or_departure(state: SystemState, event: Event, ctx: SchedulingContext,
                                 streams: RandomStreams) -> EventOutcome:
    if event.kind is EventKind.ARRIVAL:
        return adgp_on_arrival(state, event.job_type_id, ctx, streams)
    if event.kind is EventKind.DEPARTURE:
        return adgp_on_departure(state, event.template_id, ctx, streams)
    raise ValueError(f"ADGP arrival/departure handler got {event.kind.name}")


# ==================== FRAME-BASED MAX WEIGHT ====================

def frame_select_config(state: SystemState, ctx: SchedulingContext, streams: RandomStreams) -> Configuration:
    """
    Choose a configuration maximizing sum over templates of alpha * f(1 + Q_j) - cost.

    Ties are broken uniformly at random. The returned templates are all
    virtual.

    Raises:
        StateSpaceTooLargeError: If the configuration space cannot be enumerated
    """
    configurations, counts, costs = ctx.frame_space()
    sizes = state.queue_sizes()
    terms = np.array([ctx.params.alpha * f_eval(1.0 + sizes[j], ctx.params.b) for j in ctx.job_ids])
    scores = counts @ terms - costs
    best = scores.max()
    winners = np.flatnonzero(scores >= best - 1e-12 * max(1.0, abs(best)))
    choice = winners[int(streams.placement.integers(len(winners)))] if len(winners) > 1 else winners[0]
    return configurations[int(choice)]


def frame_on_epoch(state: SystemState, selected: Configuration, ctx: SchedulingContext,
                   streams: RandomStreams) -> EventOutcome:
    """
    Reset the configuration at a frame epoch.

    Templates kept by identity keep their jobs; occupied templates that are
    dropped interrupt their jobs, which rejoin the head of their queue. New
    templates start virtual and are filled from the queues.
    """
    actions: List[Action] = []
    old = state.configuration
    keep = selected.key()
    interrupted: Dict[int, List[int]] = {}
    for template in old:
        if template.key in keep:
            continue
        if template.is_actual:
            interrupted.setdefault(template.job_type_id, []).append(template.job_id)
            actions.append(Action(ActionKind.JOB_INTERRUPTED, template.job_type_id, template.key,
                                  job_id=template.job_id))
        actions.append(Action(ActionKind.TEMPLATE_DESTROYED, template.job_type_id, template.key))

    templates = {}
    for template in selected:
        if template.key in old:
            templates[template.key] = old.get(template.key)
        else:
            templates[template.key] = template.as_virtual()
            actions.append(Action(ActionKind.TEMPLATE_CREATED, template.job_type_id, template.key,
                                  tag=TemplateTag.VIRTUAL, cost=template.cost))

    queues = dict(state.queues)
    for j, job_ids in interrupted.items():
        queues[j] = queues[j].interrupt(job_ids)
    count = sum(len(ids) for ids in interrupted.values())
    state = replace(state, queues=queues, configuration=Configuration(templates),
                    interruptions=state.interruptions + count)
    for j in ctx.job_ids:
        state = _fill_from_queue(state, j, streams.placement, actions)
    if count:
        logger.debug("epoch at t=%.4f interrupted %d job(s)", state.clock, count)
    return EventOutcome(state, tuple(actions), interrupted=count)


def frame_on_arrival(state: SystemState, j: int, ctx: SchedulingContext, streams: RandomStreams) -> EventOutcome:
    """Enqueue and serve at once if a virtual template of the type is idle."""
    actions: List[Action] = []
    state = _enqueue(state, j, actions)
    state = _fill_from_queue(state, j, streams.placement, actions)
    return EventOutcome(state, tuple(actions))


def frame_on_departure(state: SystemState, template_id: TemplateKey, ctx: SchedulingContext,
                       streams: RandomStreams) -> EventOutcome:
    """A job completes; its template stays reserved until the next epoch."""
    actions: List[Action] = []
    template = state.configuration.get(template_id)
    if not template.is_actual:
        raise ValueError(f"template {template_id} holds no job")
    state = _release(state, template, actions)
    state = _fill_from_queue(state, template.job_type_id, streams.placement, actions)
    return EventOutcome(state, tuple(actions))


def frame_run_frame(state: SystemState, selected: Configuration, events: Sequence[Event],
                    ctx: SchedulingContext, streams: RandomStreams) -> EventOutcome:
    """
    Apply an epoch and then every in-frame arrival and departure in order.

    Returns:
        The combined outcome; interrupted counts the epoch's interruptions
    """
    outcome = frame_on_epoch(state, selected, ctx, streams)
    state, actions = outcome.state, list(outcome.actions)
    for event in events:
        if event.kind is EventKind.ARRIVAL:
            step = frame_on_arrival(state, event.job_type_id, ctx, streams)
        elif event.kind is EventKind.DEPARTURE:
            step = frame_on_departure(state, event.template_id, ctx, streams)
        else:
            raise ValueError(f"unexpected {event.kind.name} event inside a frame")
        state = step.state
        actions.extend(step.actions)
    return EventOutcome(state, tuple(actions), interrupted=outcome.interrupted)


# ==================== ROUND ROBIN ====================

def round_robin_place(state: SystemState, j: int, ctx: SchedulingContext) -> EventOutcome:
    """
    Place the head-of-line type-j job node by node over machines in turn.

    Starting at the cursor, each node takes the lowest free slot of the next
    machine that has one. The job stays queued when too few slots are free.
    """
    queue = state.queues[j]
    job = ctx.jobs[j]
    config = state.configuration
    if queue.waiting == 0 or len(config.free_slots(ctx.cluster)) < job.node_count:
        return EventOutcome(state, ())

    machines = ctx.cluster.machines
    free = {m: [s for s in range(count) if (m, s) not in config.occupied_slots] for m, count in machines}
    position = state.cursor % len(machines)
    assignment = []
    while len(assignment) < job.node_count:
        machine_id = machines[position][0]
        if free[machine_id]:
            assignment.append((machine_id, free[machine_id].pop(0)))
        position = (position + 1) % len(machines)

    assignment = tuple(assignment)
    queue, job_id = queue.start()
    template = Template(j, assignment, template_cost(assignment, job, ctx.cluster), TemplateTag.ACTUAL, job_id)
    queues = dict(state.queues)
    queues[j] = queue
    actions = (
        Action(ActionKind.TEMPLATE_CREATED, j, template.key, tag=TemplateTag.ACTUAL, cost=template.cost),
        Action(ActionKind.JOB_STARTED, j, template.key, job_id=job_id),
    )
    state = replace(state, queues=queues, configuration=add_template(config, template), cursor=position)
    return EventOutcome(state, actions)


def _round_robin_drain(state: SystemState, ctx: SchedulingContext, actions: List[Action]) -> SystemState:
    for j in ctx.job_ids:
        while True:
            outcome = round_robin_place(state, j, ctx)
            if not outcome.actions:
                break
            state = outcome.state
            actions.extend(outcome.actions)
    return state


def round_robin_on_arrival(state: SystemState, j: int, ctx: SchedulingContext,
                           streams: RandomStreams) -> EventOutcome:
    actions: List[Action] = []
    state = _enqueue(state, j, actions)
    state = _round_robin_drain(state, ctx, actions)
    return EventOutcome(state, tuple(actions))


def round_robin_on_departure(state: SystemState, template_id: TemplateKey, ctx: SchedulingContext,
                             streams: RandomStreams) -> EventOutcome:
    actions: List[Action] = []
    state = _destroy(state, template_id, actions)
    state = _round_robin_drain(state, ctx, actions)
    return EventOutcome(state, tuple(actions))


# ==================== DISPATCH ====================

def on_start(state: SystemState, ctx: SchedulingContext, streams: RandomStreams) -> EventOutcome:
    """
    Serve jobs present at time zero.

    Only round robin places jobs without an event; frame-based serves them
    at its first epoch and the randomized policies wait for their clocks.
    """
    if ctx.policy.variant is not PolicyVariant.ROUND_ROBIN:
        return EventOutcome(state, ())
    actions: List[Action] = []
    state = _round_robin_drain(state, ctx, actions)
    return EventOutcome(state, tuple(actions))


def handle_event(state: SystemState, event: Event, ctx: SchedulingContext, streams: RandomStreams) -> EventOutcome:
    """
    Route an event to the running policy's handler.

    Raises:
        ValueError: If the policy has no handler for the event kind
    """
    variant = ctx.policy.variant
    if variant is PolicyVariant.DGP:
        if event.kind is EventKind.ARRIVAL:
            return dgp_on_arrival(state, event.job_type_id, ctx, streams)
        if event.kind is EventKind.DEPARTURE:
            return dgp_on_departure(state, event.template_id, ctx, streams)
    elif variant is PolicyVariant.ADGP:
        if event.kind is EventKind.TICK:
            return adgp_on_clock(state, event.job_type_id, ctx, streams)
        return adgp_on_arrival_or_departure(state, event, ctx, streams)
    elif variant is PolicyVariant.FRAME_BASED:
        if event.kind is EventKind.ARRIVAL:
            return frame_on_arrival(state, event.job_type_id, ctx, streams)
        if event.kind is EventKind.DEPARTURE:
            return frame_on_departure(state, event.template_id, ctx, streams)
        if event.kind is EventKind.EPOCH:
            return frame_on_epoch(state, frame_select_config(state, ctx, streams), ctx, streams)
    elif variant is PolicyVariant.ROUND_ROBIN:
        if event.kind is EventKind.ARRIVAL:
            return round_robin_on_arrival(state, event.job_type_id, ctx, streams)
        if event.kind is EventKind.DEPARTURE:
            return round_robin_on_departure(state, event.template_id, ctx, streams)
    raise ValueError(f"{variant.value} does not handle {event.kind.name} events")
