"""
Metrics Module

Time averages of piecewise-constant system observables, shared by the
engines (online) and by trace replay (offline). Both feed the same
accumulator with the same observations, so their reports agree exactly.
"""

from dataclasses import dataclass, field
from typing import Dict, Iterable, Mapping, Optional, Sequence, Tuple

from .cluster import ConfigurationKey, TemplateKey
from .exceptions import MalformedTraceError
from .kernel import f_eval
from .schedulers import Action, ActionKind, TemplateTag

DEFAULT_WARMUP = 0.1
DEFAULT_TRACKING_THRESHOLD = 10_000

# template identity -> (cost, holds a job)
TemplateEntries = Mapping[TemplateKey, Tuple[float, bool]]


@dataclass(frozen=True)
class Observation:
    """Values of every tracked observable between two events."""
    queues: Tuple[int, ...]
    f_queue: float
    cost: float
    templates: int
    actual: int
    template_ids: Tuple[TemplateKey, ...] = ()


def observe(sizes: Mapping[int, int], entries: TemplateEntries, job_ids: Sequence[int],
            h: float, b: float) -> Observation:
    """
    Build an observation from queue sizes and the templates present.

    Costs are summed in canonical template order.
    """
    ordered = sorted(entries)
    return Observation(
        queues=tuple(sizes[j] for j in job_ids),
        f_queue=sum(f_eval(h + sizes[j], b) for j in job_ids),
        cost=sum(entries[key][0] for key in ordered),
        templates=len(ordered),
        actual=sum(1 for key in ordered if entries[key][1]),
        template_ids=tuple(ordered),
    )


@dataclass
class TimeAverages:
    """
    Time averages over one window of a run.

    Attributes:
        duration: Window length
        queue: Average jobs in system per job type id
        f_queue: Average of sum_j f(h + Q_j)
        cost: Average instantaneous partitioning cost
        templates: Average number of templates
        actual_templates: Average number of templates holding a job
        cost_histogram: Fraction of time at each total cost value
        occupancy: Fraction of time each template is present (small instances)
        configurations: Fraction of time in each configuration (small instances)
    """
    duration: float = 0.0
    queue: Dict[int, float] = field(default_factory=dict)
    f_queue: float = 0.0
    cost: float = 0.0
    templates: float = 0.0
    actual_templates: float = 0.0
    cost_histogram: Dict[float, float] = field(default_factory=dict)
    occupancy: Optional[Dict[TemplateKey, float]] = None
    configurations: Optional[Dict[ConfigurationKey, float]] = None

    def to_dict(self) -> Dict:
        return {
            'duration': self.duration,
            'queue': {str(j): q for j, q in self.queue.items()},
            'f_queue': self.f_queue,
            'cost': self.cost,
            'templates': self.templates,
            'actual_templates': self.actual_templates,
            'cost_histogram': {repr(c): p for c, p in sorted(self.cost_histogram.items())},
        }


class _Window:
    """Integrals over [start, end) of the observables."""

    def __init__(self, job_ids: Sequence[int], start: float, track: bool):
        self.job_ids = list(job_ids)
        self.start = start
        self.track = track
        self.queue = [0.0] * len(self.job_ids)
        self.f_queue = 0.0
        self.cost = 0.0
        self.templates = 0.0
        self.actual = 0.0
        self.cost_histogram: Dict[float, float] = {}
        self.occupancy: Dict[TemplateKey, float] = {}
        self.configurations: Dict[ConfigurationKey, float] = {}

    def add(self, obs: Observation, begin: float, end: float):
        dt = end - max(begin, self.start)
        if dt <= 0:
            return
        for position, q in enumerate(obs.queues):
            self.queue[position] += q * dt
        self.f_queue += obs.f_queue * dt
        self.cost += obs.cost * dt
        self.templates += obs.templates * dt
        self.actual += obs.actual * dt
        self.cost_histogram[obs.cost] = self.cost_histogram.get(obs.cost, 0.0) + dt
        if self.track:
            for key in obs.template_ids:
                self.occupancy[key] = self.occupancy.get(key, 0.0) + dt
            config = frozenset(obs.template_ids)
            self.configurations[config] = self.configurations.get(config, 0.0) + dt

    def averages(self, end: float) -> TimeAverages:
        duration = max(end - self.start, 0.0)
        if duration <= 0:
            return TimeAverages(queue={j: 0.0 for j in self.job_ids},
                                occupancy={} if self.track else None,
                                configurations={} if self.track else None)
        return TimeAverages(
            duration=duration,
            queue={j: total / duration for j, total in zip(self.job_ids, self.queue)},
            f_queue=self.f_queue / duration,
            cost=self.cost / duration,
            templates=self.templates / duration,
            actual_templates=self.actual / duration,
            cost_histogram={c: t / duration for c, t in self.cost_histogram.items()},
            occupancy={k: t / duration for k, t in self.occupancy.items()} if self.track else None,
            configurations={k: t / duration for k, t in self.configurations.items()} if self.track else None,
        )


@dataclass
class MetricsReport:
    """
    Summary of one simulation run.

    Attributes:
        horizon: Simulated time (or steps for the jump chain)
        warmup: Start of the steady window
        events: Events processed
        interruptions: Jobs interrupted
        drops: Arrivals dropped (loss system)
        overall: Averages over the whole horizon
        steady: Averages after the warm-up cut
    """
    horizon: float
    warmup: float
    events: int
    interruptions: int
    drops: int
    overall: TimeAverages
    steady: TimeAverages

    def to_dict(self) -> Dict:
        return {
            'horizon': self.horizon,
            'warmup': self.warmup,
            'events': self.events,
            'interruptions': self.interruptions,
            'drops': self.drops,
            'overall': self.overall.to_dict(),
            'steady': self.steady.to_dict(),
        }


class MetricsAccumulator:
    """
    Integrates observations over time.

    Call advance(t) before handling an event at time t, record(obs, actions)
    after it, and finish(horizon) at the end. Integration happens only when
    the observation changes, so repeated identical observations do not
    perturb the result.
    """

    def __init__(self, job_ids: Sequence[int], h: float, b: float, horizon: float,
                 warmup_fraction: float = DEFAULT_WARMUP, track_templates: bool = False):
        self.job_ids = list(job_ids)
        self.h = h
        self.b = b
        self.horizon = horizon
        self.warmup_fraction = warmup_fraction
        self.track_templates = track_templates
        self.warmup = horizon * warmup_fraction
        self._overall = _Window(self.job_ids, 0.0, track_templates)
        self._steady = _Window(self.job_ids, self.warmup, track_templates)
        self._current: Optional[Observation] = None
        self._segment_start = 0.0
        self._now = 0.0
        self.events = 0
        self.interruptions = 0
        self.drops = 0

    def observe(self, sizes: Mapping[int, int], entries: TemplateEntries) -> Observation:
        return observe(sizes, entries, self.job_ids, self.h, self.b)

    def advance(self, time: float):
        self._now = min(time, self.horizon)

    def record(self, obs: Observation, actions: Iterable[Action] = (), count_event: bool = True):
        if count_event:
            self.events += 1
        for action in actions:
            if action.kind is ActionKind.JOB_INTERRUPTED:
                self.interruptions += 1
            elif action.kind is ActionKind.JOB_DROPPED:
                self.drops += 1
        if obs == self._current:
            return
        self._close(self._now)
        self._current = obs
        self._segment_start = self._now

    def _close(self, end: float):
        if self._current is not None and end > self._segment_start:
            self._overall.add(self._current, self._segment_start, end)
            self._steady.add(self._current, self._segment_start, end)

    def finish(self, events: Optional[int] = None) -> MetricsReport:
        self._close(self.horizon)
        self._segment_start = self.horizon
        return MetricsReport(
            horizon=self.horizon,
            warmup=self.warmup,
            events=self.events if events is None else events,
            interruptions=self.interruptions,
            drops=self.drops,
            overall=self._overall.averages(self.horizon),
            steady=self._steady.averages(self.horizon),
        )


def zero_report(job_ids: Sequence[int] = ()) -> MetricsReport:
    empty = TimeAverages(queue={j: 0.0 for j in job_ids})
    return MetricsReport(horizon=0.0, warmup=0.0, events=0, interruptions=0, drops=0,
                         overall=empty, steady=TimeAverages(queue={j: 0.0 for j in job_ids}))


# ==================== TRACES ====================

def trace_header(job_ids: Sequence[int], h: float, b: float, horizon: float, warmup_fraction: float,
                 track_templates: bool, initial_sizes: Mapping[int, int]) -> Dict:
    return {
        'kind': 'header',
        'job_types': list(job_ids),
        'h': h,
        'b': b,
        'horizon': horizon,
        'warmup_fraction': warmup_fraction,
        'track_templates': track_templates,
        'initial_queues': [initial_sizes.get(j, 0) for j in job_ids],
    }


def trace_record(time: float, event_kind: str, job_type_id: Optional[int], template_id: Optional[TemplateKey],
                 actions: Sequence[Action], queues: Sequence[int]) -> Dict:
    return {
        'time': time,
        'event': event_kind,
        'job_type': job_type_id,
        'template': None if template_id is None else [template_id[0], [list(s) for s in template_id[1]]],
        'actions': [a.to_dict() for a in actions],
        'queues': list(queues),
    }


def trace_footer(horizon: float, events: int) -> Dict:
    return {'kind': 'end', 'time': horizon, 'events': events}


def apply_actions(entries: Dict[TemplateKey, Tuple[float, bool]], actions: Iterable[Action]):
    """Replay template actions onto a (cost, holds-a-job) table, in place."""
    for action in actions:
        key = action.template_id
        if action.kind is ActionKind.TEMPLATE_CREATED:
            entries[key] = (action.cost, action.tag is TemplateTag.ACTUAL)
        elif action.kind is ActionKind.TEMPLATE_DESTROYED:
            if key not in entries:
                raise MalformedTraceError(f"destroyed unknown template {key}")
            del entries[key]
        elif action.kind is ActionKind.JOB_STARTED:
            if key not in entries:
                raise MalformedTraceError(f"job started in unknown template {key}")
            entries[key] = (entries[key][0], True)
        elif action.kind in (ActionKind.JOB_DEPARTED, ActionKind.JOB_INTERRUPTED):
            if key not in entries:
                raise MalformedTraceError(f"job left unknown template {key}")
            entries[key] = (entries[key][0], False)


def summarize_trace(trace: Sequence[Mapping]) -> MetricsReport:
    """
    Recompute a run's metrics from its raw event trace.

    Args:
        trace: Header, one record per event, footer

    Returns:
        A report equal to the engine's own

    Raises:
        MalformedTraceError: If header or footer is missing, times decrease,
            or actions reference unknown templates
    """
    if not trace:
        return zero_report()
    header, footer = trace[0], trace[-1]
    if header.get('kind') != 'header' or footer.get('kind') != 'end':
        raise MalformedTraceError("trace must start with a header and end with an end record")
    try:
        job_ids = list(header['job_types'])
        accumulator = MetricsAccumulator(job_ids, header['h'], header['b'], header['horizon'],
                                         header['warmup_fraction'], header['track_templates'])
        initial = dict(zip(job_ids, header['initial_queues']))
    except KeyError as error:
        raise MalformedTraceError(f"header is missing {error}") from None

    entries: Dict[TemplateKey, Tuple[float, bool]] = {}
    accumulator.record(accumulator.observe(initial, entries), count_event=False)
    last = 0.0
    for position, record in enumerate(trace[1:-1], start=1):
        try:
            time = record['time']
            actions = [Action.from_dict(a) for a in record['actions']]
            queues = record['queues']
        except (KeyError, ValueError, TypeError) as error:
            raise MalformedTraceError(f"record {position}: {error}") from None
        if time < last:
            raise MalformedTraceError(f"record {position}: time {time} before {last}")
        if len(queues) != len(job_ids):
            raise MalformedTraceError(f"record {position}: expected {len(job_ids)} queue sizes")
        last = time
        accumulator.advance(time)
        apply_actions(entries, actions)
        accumulator.record(accumulator.observe(dict(zip(job_ids, queues)), entries), actions)
    return accumulator.finish(events=footer.get('events'))
