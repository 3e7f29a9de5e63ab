"""
Scenario Module

Scenario documents: a single JSON file describing the cluster, the job
types, the policy, the engine and the run options. ScenarioValidator
collects every problem before anything is built, so one load reports all
mistakes at once.
"""

import itertools
import json
import logging
import os
from dataclasses import dataclass, field, replace
from typing import Any, Dict, List, Mapping, Optional, Sequence, Tuple

from .cluster import (
    ClusterSpec,
    Edge,
    JobType,
    cluster_problems,
    job_problems,
    template_cost,
    DEFAULT_MAX_STATES,
)
from .engine import EngineKind
from .exceptions import InvalidTemplateError, ScenarioParseError, ScenarioValidationError
from .kernel import SchedulerParams, params_problems
from .metrics import DEFAULT_TRACKING_THRESHOLD, DEFAULT_WARMUP
from .schedulers import PolicyVariant, SchedulerPolicy, WeightMode
from .weights import ConstantWeights, QueueTermWeights, TemplateWeights, WeightTable, weights_from_dict

logger = logging.getLogger(__name__)

SWEEP_AXES = ('beta', 'alpha', 'epsilon', 'h', 'T')
TIED_PRESET = 'tied'

# scenario key -> SchedulerParams field
PARAM_FIELDS = {
    'alpha': 'alpha',
    'beta': 'beta',
    'epsilon': 'epsilon',
    'h': 'h',
    'b': 'b',
    'T': 'frame_length',
    'clock_rate': 'clock_rate',
}

TOP_LEVEL_KEYS = {
    'id', 'cluster', 'jobs', 'policy', 'engine', 'horizon', 'steps', 'seeds', 'sweep',
    'initial_queues', 'warmup', 'max_states', 'tracking_threshold', 'output',
}


@dataclass
class OutputSpec:
    """Where results go and whether event traces are written."""
    directory: str = 'results'
    trace: bool = False

    def to_dict(self) -> Dict[str, Any]:
        return {'directory': self.directory, 'trace': self.trace}


@dataclass
class SweepSpec:
    """
    A grid over policy parameters.

    Attributes:
        beta, alpha, epsilon, h, T: Values per axis; an empty axis keeps the base value
        preset: 'tied' ties alpha, h and epsilon to beta
    """
    beta: List[float] = field(default_factory=list)
    alpha: List[float] = field(default_factory=list)
    epsilon: List[float] = field(default_factory=list)
    h: List[float] = field(default_factory=list)
    T: List[float] = field(default_factory=list)
    preset: Optional[str] = None

    def axes(self) -> Dict[str, List[float]]:
        return {name: list(getattr(self, name)) for name in SWEEP_AXES if getattr(self, name)}

    def points(self, base: SchedulerParams, tied_alpha: bool = True) -> List[SchedulerParams]:
        """
        Expand the grid in axis order beta, alpha, epsilon, h, T.

        Raises:
            ValueError: If a grid point violates a parameter constraint
        """
        axes = self.axes()
        names = list(axes)
        result = []
        for values in itertools.product(*(axes[n] for n in names)):
            chosen = dict(zip(names, values))
            beta = chosen.get('beta', base.beta)
            overrides = {'frame_length': chosen.get('T', base.frame_length), 'clock_rate': base.clock_rate}
            if self.preset == TIED_PRESET:
                result.append(SchedulerParams.tied_to_beta(beta, base.b, **overrides))
                continue
            alpha = chosen.get('alpha', beta ** 2 if tied_alpha else base.alpha)
            result.append(SchedulerParams(
                alpha=alpha,
                beta=beta,
                epsilon=chosen.get('epsilon', base.epsilon),
                h=chosen.get('h', base.h),
                b=base.b,
                **overrides,
            ))
        return result

    def to_dict(self) -> Dict[str, Any]:
        data: Dict[str, Any] = self.axes()
        if self.preset:
            data['preset'] = self.preset
        return data


@dataclass
class Scenario:
    """
    Everything one experiment needs.

    Attributes:
        cluster: The cluster
        jobs: Job types
        policy: Scheduling policy
        engine: continuous, jump-chain or loss
        horizon: Simulated time for continuous and loss runs
        steps: Step count for jump-chain runs
        seeds: Replication seeds
        sweep: Optional parameter grid
        initial_queues: Jobs waiting at time zero per job type id
        warmup: Fraction of the horizon excluded from steady averages
        max_states: Enumeration budget of exact analysis and frame-based selection
        tracking_threshold: Template count below which occupancy is tracked
        output: Output location
        id: Scenario name used in result files
        tied_alpha: alpha follows beta ** 2 across sweep points
    """
    cluster: ClusterSpec
    jobs: List[JobType]
    policy: SchedulerPolicy = field(default_factory=SchedulerPolicy)
    engine: EngineKind = EngineKind.CONTINUOUS
    horizon: float = 1000.0
    steps: int = 100_000
    seeds: List[int] = field(default_factory=lambda: [0])
    sweep: Optional[SweepSpec] = None
    initial_queues: Dict[int, int] = field(default_factory=dict)
    warmup: float = DEFAULT_WARMUP
    max_states: int = DEFAULT_MAX_STATES
    tracking_threshold: int = DEFAULT_TRACKING_THRESHOLD
    output: OutputSpec = field(default_factory=OutputSpec)
    id: str = 'scenario'
    tied_alpha: bool = True

    def __post_init__(self):
        self.engine = EngineKind(self.engine)
        self.jobs = list(self.jobs)
        if not self.seeds:
            raise ValueError("seeds must not be empty")

    @property
    def job_ids(self) -> List[int]:
        return sorted(job.id for job in self.jobs)

    def job(self, job_type_id: int) -> JobType:
        for job in self.jobs:
            if job.id == job_type_id:
                return job
        raise KeyError(job_type_id)

    def with_params(self, params: SchedulerParams) -> 'Scenario':
        return replace(self, policy=replace(self.policy, params=params))

    def sweep_points(self) -> List[SchedulerParams]:
        if self.sweep is None or not self.sweep.axes():
            return [self.policy.params]
        return self.sweep.points(self.policy.params, self.tied_alpha)


# ==================== VALIDATION ====================

@dataclass
class ScenarioValidationResult:
    """
    Outcome of validating a scenario document.

    Attributes:
        is_valid: Whether the document can be loaded
        errors: Violated invariants, each prefixed by its JSON path
        warnings: Legal but suspicious settings
        scenario: The built scenario when valid
    """
    is_valid: bool
    errors: List[str]
    warnings: List[str]
    scenario: Optional[Scenario] = None

    def to_dict(self) -> Dict[str, Any]:
        return {
            'is_valid': self.is_valid,
            'errors': self.errors,
            'warnings': self.warnings,
        }


def _is_int(value) -> bool:
    return isinstance(value, int) and not isinstance(value, bool)


def _is_number(value) -> bool:
    return isinstance(value, (int, float)) and not isinstance(value, bool)


class ScenarioValidator:
    """
    Checks a parsed scenario document and builds the Scenario.

    Example:
        >>> result = ScenarioValidator().validate({'cluster': {'machines': [{'id': 0, 'slots': 2}]},
        ...                                        'jobs': [{'id': 0, 'nodes': 1}]})
        >>> result.is_valid
        True
    """

    def __init__(self, source: Optional[str] = None):
        self.source = source
        self.errors: List[str] = []
        self.warnings: List[str] = []

    def _error(self, where: str, message: str):
        self.errors.append(f"{where}: {message}")

    def _number(self, data: Mapping, key: str, where: str, default, integer: bool = False):
        if key not in data:
            return default
        value = data[key]
        valid = _is_int(value) if integer else _is_number(value)
        if not valid:
            self._error(f"{where}{key}", f"expected {'an integer' if integer else 'a number'}, got {value!r}")
            return default
        return value

    def validate(self, data: Any) -> ScenarioValidationResult:
        self.errors, self.warnings = [], []
        if not isinstance(data, dict):
            self._error('$', f"scenario must be a JSON object, got {type(data).__name__}")
            return ScenarioValidationResult(False, self.errors, self.warnings)

        for key in sorted(set(data) - TOP_LEVEL_KEYS):
            self.warnings.append(f"{key}: unknown key ignored")

        cluster = self._cluster(data.get('cluster'))
        jobs = self._jobs(data.get('jobs'), cluster)
        job_ids = [job.id for job in jobs] if jobs is not None else None
        policy, tied_alpha = self._policy(data.get('policy', {}), cluster, jobs)
        engine = self._engine(data.get('engine', EngineKind.CONTINUOUS.value), policy)

        horizon = self._number(data, 'horizon', '', 1000.0)
        if horizon < 0:
            self._error('horizon', f"must be nonnegative, got {horizon}")
        steps = self._number(data, 'steps', '', 100_000, integer=True)
        if steps < 0:
            self._error('steps', f"must be nonnegative, got {steps}")
        seeds = self._seeds(data.get('seeds', [0]))
        initial_queues = self._initial_queues(data.get('initial_queues', {}), job_ids)
        warmup = self._number(data, 'warmup', '', DEFAULT_WARMUP)
        if not 0 <= warmup < 1:
            self._error('warmup', f"must lie in [0, 1), got {warmup}")
        max_states = self._number(data, 'max_states', '', DEFAULT_MAX_STATES, integer=True)
        if max_states < 1:
            self._error('max_states', f"must be positive, got {max_states}")
        threshold = self._number(data, 'tracking_threshold', '', DEFAULT_TRACKING_THRESHOLD, integer=True)
        if threshold < 0:
            self._error('tracking_threshold', f"must be nonnegative, got {threshold}")
        sweep = self._sweep(data.get('sweep'), policy, tied_alpha)
        output = self._output(data.get('output', {}))

        scenario_id = data.get('id')
        if scenario_id is None:
            scenario_id = os.path.splitext(os.path.basename(self.source))[0] if self.source else 'scenario'
        elif not isinstance(scenario_id, str) or not scenario_id:
            self._error('id', f"expected a nonempty string, got {scenario_id!r}")

        if self.errors:
            return ScenarioValidationResult(False, self.errors, self.warnings)
        scenario = Scenario(
            cluster=cluster,
            jobs=jobs,
            policy=policy,
            engine=engine,
            horizon=float(horizon),
            steps=steps,
            seeds=seeds,
            sweep=sweep,
            initial_queues=initial_queues,
            warmup=float(warmup),
            max_states=max_states,
            tracking_threshold=threshold,
            output=output,
            id=scenario_id,
            tied_alpha=tied_alpha,
        )
        return ScenarioValidationResult(True, self.errors, self.warnings, scenario)

    # ----- sections -----

    def _cluster(self, data) -> Optional[ClusterSpec]:
        if data is None:
            self._error('cluster', "is required")
            return None
        if not isinstance(data, dict):
            self._error('cluster', "expected an object")
            return None
        if 'uniform' in data:
            uniform = data['uniform']
            if not isinstance(uniform, dict):
                self._error('cluster.uniform', "expected an object")
                return None
            count = self._number(uniform, 'machines', 'cluster.uniform.', None, integer=True)
            slots = self._number(uniform, 'slots', 'cluster.uniform.', None, integer=True)
            if count is None or slots is None:
                self._error('cluster.uniform', "needs integer 'machines' and 'slots'")
                return None
            if count < 1:
                self._error('cluster.uniform.machines', f"must be positive, got {count}")
                return None
            machines = [(m, slots) for m in range(count)]
        else:
            entries = data.get('machines')
            if not isinstance(entries, list):
                self._error('cluster.machines', "expected a list of {id, slots} objects")
                return None
            machines = []
            for position, entry in enumerate(entries):
                if not isinstance(entry, dict) or not _is_int(entry.get('id')):
                    self._error(f"cluster.machines[{position}]", "expected an object with integer 'id' and 'slots'")
                    continue
                machines.append((entry['id'], entry.get('slots')))
        problems = cluster_problems(machines)
        for problem in problems:
            self._error('cluster', problem)
        return None if problems else ClusterSpec(tuple(machines))

    def _jobs(self, data, cluster: Optional[ClusterSpec]) -> Optional[List[JobType]]:
        if not isinstance(data, list) or not data:
            self._error('jobs', "expected a nonempty list of job types")
            return None
        jobs = []
        seen = set()
        for position, entry in enumerate(data):
            where = f"jobs[{position}]"
            if not isinstance(entry, dict):
                self._error(where, "expected an object")
                continue
            job_id = entry.get('id', position)
            if not _is_int(job_id):
                self._error(f"{where}.id", f"expected an integer, got {job_id!r}")
                continue
            if job_id in seen:
                self._error(f"{where}.id", f"duplicate job type id {job_id}")
            seen.add(job_id)
            nodes = entry.get('nodes')
            if not _is_int(nodes):
                self._error(f"{where}.nodes", f"expected an integer, got {nodes!r}")
                continue
            edges = []
            for index, raw in enumerate(entry.get('edges', [])):
                if (not isinstance(raw, list) or len(raw) not in (2, 3)
                        or not all(_is_int(v) for v in raw[:2])
                        or (len(raw) == 3 and not _is_number(raw[2]))):
                    self._error(f"{where}.edges[{index}]", f"expected [u, v] or [u, v, weight], got {raw!r}")
                    continue
                edges.append(Edge(*raw))
            arrival = self._number(entry, 'arrival_rate', f"{where}.", 1.0)
            service = self._number(entry, 'service_rate', f"{where}.", 1.0)
            problems = job_problems(job_id, nodes, edges, arrival, service)
            for problem in problems:
                self._error(where, problem)
            if cluster is not None and nodes >= cluster.total_slots:
                self._error(f"{where}.nodes",
                            f"|V_j|<M violated: {nodes} nodes on a cluster of {cluster.total_slots} slots")
                continue
            if not problems:
                jobs.append(JobType(job_id, nodes, tuple(edges), float(arrival), float(service)))
                if arrival == 0:
                    self.warnings.append(f"{where}.arrival_rate: zero, type {job_id} never arrives")
        return jobs if len(jobs) == len(data) else None

    def _policy(self, data, cluster: Optional[ClusterSpec],
                jobs: Optional[List[JobType]]) -> Tuple[SchedulerPolicy, bool]:
        default = SchedulerPolicy()
        if not isinstance(data, dict):
            self._error('policy', "expected an object")
            return default, True
        try:
            variant = PolicyVariant(data.get('variant', PolicyVariant.DGP.value))
        except ValueError:
            choices = ', '.join(v.value for v in PolicyVariant)
            self._error('policy.variant', f"unknown variant {data.get('variant')!r}; expected one of {choices}")
            variant = PolicyVariant.DGP
        try:
            mode = WeightMode(data.get('mode', WeightMode.LIVE.value))
        except ValueError:
            self._error('policy.mode', f"expected 'live' or 'fixed', got {data.get('mode')!r}")
            mode = WeightMode.LIVE

        raw = data.get('params', {})
        if not isinstance(raw, dict):
            self._error('policy.params', "expected an object")
            raw = {}
        values = {}
        for key in sorted(raw):
            if key not in PARAM_FIELDS:
                self._error(f"policy.params.{key}", f"unknown parameter; expected one of {', '.join(PARAM_FIELDS)}")
                continue
            value = self._number(raw, key, 'policy.params.', None)
            if value is not None:
                values[PARAM_FIELDS[key]] = float(value)
        tied_alpha = 'alpha' not in values
        merged = SchedulerParams().to_dict()
        merged.update(values)
        if tied_alpha:
            merged['alpha'] = merged['beta'] ** 2 if merged['beta'] > 0 else 1.0
        problems = params_problems(**merged)
        for problem in problems:
            self._error('policy.params', problem)
        params = SchedulerParams(**merged) if not problems else SchedulerParams()

        weights = None
        if mode is WeightMode.FIXED:
            weights = self._weights(data.get('weights'), cluster, jobs)
            if variant in (PolicyVariant.FRAME_BASED, PolicyVariant.ROUND_ROBIN):
                self.warnings.append(f"policy.mode: fixed weights are ignored by {variant.value}")
        elif 'weights' in data:
            self.warnings.append("policy.weights: ignored in live mode")
        if mode is WeightMode.FIXED and weights is None:
            return default, tied_alpha
        return SchedulerPolicy(variant, params, mode, weights), tied_alpha

    def _weights(self, data, cluster: Optional[ClusterSpec], jobs: Optional[List[JobType]]) -> Optional[WeightTable]:
        if not isinstance(data, dict):
            self._error('policy.weights', "fixed mode needs a weight table")
            return None
        try:
            table = weights_from_dict(data)
        except (KeyError, ValueError, TypeError, AttributeError) as error:
            self._error('policy.weights', f"malformed table ({error})")
            return None
        if jobs is None or cluster is None:
            return table
        job_map = {job.id: job for job in jobs}
        if isinstance(table, (ConstantWeights, QueueTermWeights)):
            values = table.values if isinstance(table, ConstantWeights) else table.terms
            missing = sorted(set(job_map) - set(values))
            if missing:
                self._error('policy.weights.values', f"no weight for job types {missing}")
                return None
            unknown = sorted(set(values) - set(job_map))
            if unknown:
                self._error('policy.weights.values', f"unknown job types {unknown}")
                return None
        elif isinstance(table, TemplateWeights):
            ok = True
            for position, ((j, assignment), _) in enumerate(sorted(table.table.items())):
                where = f"policy.weights.entries[{position}]"
                if j not in job_map:
                    self._error(where, f"unknown job type {j}")
                    ok = False
                    continue
                try:
                    template_cost(assignment, job_map[j], cluster)
                except InvalidTemplateError as error:
                    self._error(where, str(error))
                    ok = False
            if not ok:
                return None
        return table

    def _engine(self, value, policy: SchedulerPolicy) -> EngineKind:
        try:
            engine = EngineKind(value)
        except ValueError:
            choices = ', '.join(e.value for e in EngineKind)
            self._error('engine', f"unknown engine {value!r}; expected one of {choices}")
            return EngineKind.CONTINUOUS
        if engine is EngineKind.JUMP_CHAIN and policy.variant not in (PolicyVariant.DGP, PolicyVariant.ROUND_ROBIN):
            self._error('engine', f"the jump chain cannot run {policy.variant.value}")
        return engine

    def _seeds(self, data) -> List[int]:
        if not isinstance(data, list) or not data:
            self._error('seeds', "expected a nonempty list of integers")
            return [0]
        seeds = []
        for position, seed in enumerate(data):
            if not _is_int(seed) or seed < 0:
                self._error(f"seeds[{position}]", f"expected a nonnegative integer, got {seed!r}")
            else:
                seeds.append(seed)
        return seeds

    def _initial_queues(self, data, job_ids: Optional[List[int]]) -> Dict[int, int]:
        if not isinstance(data, dict):
            self._error('initial_queues', "expected an object mapping job type id to count")
            return {}
        queues = {}
        for key, count in data.items():
            where = f"initial_queues.{key}"
            try:
                j = int(key)
            except ValueError:
                self._error(where, "key must be a job type id")
                continue
            if job_ids is not None and j not in job_ids:
                self._error(where, f"unknown job type {j}")
            if not _is_int(count) or count < 0:
                self._error(where, f"expected a nonnegative integer, got {count!r}")
                continue
            queues[j] = count
        return queues

    def _sweep(self, data, policy: SchedulerPolicy, tied_alpha: bool) -> Optional[SweepSpec]:
        if data is None:
            return None
        if not isinstance(data, dict):
            self._error('sweep', "expected an object")
            return None
        axes = {}
        for key in sorted(data):
            if key == 'preset':
                continue
            if key not in SWEEP_AXES:
                self._error(f"sweep.{key}", f"unknown axis; expected one of {', '.join(SWEEP_AXES)}")
                continue
            values = data[key]
            if not isinstance(values, list) or not values or not all(_is_number(v) for v in values):
                self._error(f"sweep.{key}", "expected a nonempty list of numbers")
                continue
            axes[key] = [float(v) for v in values]
        preset = data.get('preset')
        if preset is not None and preset != TIED_PRESET:
            self._error('sweep.preset', f"unknown preset {preset!r}; expected '{TIED_PRESET}'")
            preset = None
        if preset == TIED_PRESET:
            clash = sorted({'alpha', 'epsilon', 'h'} & set(axes))
            if clash:
                self._error('sweep.preset', f"the tied preset fixes {clash}; remove those axes")
        sweep = SweepSpec(preset=preset, **axes)
        if self.errors:
            return sweep
        try:
            sweep.points(policy.params, tied_alpha)
        except ValueError as error:
            self._error('sweep', f"grid point violates a parameter constraint ({error})")
        return sweep

    def _output(self, data) -> OutputSpec:
        if not isinstance(data, dict):
            self._error('output', "expected an object")
            return OutputSpec()
        directory = data.get('directory', 'results')
        if not isinstance(directory, str) or not directory:
            self._error('output.directory', f"expected a nonempty string, got {directory!r}")
            directory = 'results'
        trace = data.get('trace', False)
        if not isinstance(trace, bool):
            self._error('output.trace', f"expected true or false, got {trace!r}")
            trace = False
        return OutputSpec(directory, trace)


# ==================== LOADING AND DUMPING ====================

def parse_scenario(data: Any, source: Optional[str] = None) -> Scenario:
    """
    Validate a parsed document and build the Scenario.

    Raises:
        ScenarioValidationError: Listing every violated invariant
    """
    result = ScenarioValidator(source).validate(data)
    for warning in result.warnings:
        logger.warning("%s: %s", source or 'scenario', warning)
    if not result.is_valid:
        raise ScenarioValidationError(result.errors, source)
    return result.scenario


def load_scenario(path: str) -> Scenario:
    """
    Read, parse and validate a scenario file.

    Raises:
        ScenarioParseError: If the file is not valid JSON (with line and column)
        ScenarioValidationError: Listing every violated invariant
        OSError: If the file cannot be read
    """
    with open(path, encoding='utf-8') as handle:
        text = handle.read()
    try:
        data = json.loads(text)
    except json.JSONDecodeError as error:
        raise ScenarioParseError(path, error.lineno, error.colno, error.msg) from None
    return parse_scenario(data, path)


def dump_scenario(scenario: Scenario) -> Dict[str, Any]:
    """The JSON document that loads back into an equivalent scenario."""
    params = {key: getattr(scenario.policy.params, name) for key, name in PARAM_FIELDS.items()}
    if scenario.tied_alpha:
        del params['alpha']
    policy: Dict[str, Any] = {
        'variant': scenario.policy.variant.value,
        'mode': scenario.policy.mode.value,
        'params': params,
    }
    if scenario.policy.fixed_weights is not None:
        policy['weights'] = scenario.policy.fixed_weights.to_dict()
    data: Dict[str, Any] = {
        'id': scenario.id,
        'cluster': scenario.cluster.to_dict(),
        'jobs': [job.to_dict() for job in sorted(scenario.jobs, key=lambda job: job.id)],
        'policy': policy,
        'engine': scenario.engine.value,
        'horizon': scenario.horizon,
        'steps': scenario.steps,
        'seeds': list(scenario.seeds),
        'initial_queues': {str(j): n for j, n in sorted(scenario.initial_queues.items())},
        'warmup': scenario.warmup,
        'max_states': scenario.max_states,
        'tracking_threshold': scenario.tracking_threshold,
        'output': scenario.output.to_dict(),
    }
    if scenario.sweep is not None:
        data['sweep'] = scenario.sweep.to_dict()
    return data


def save_scenario(scenario: Scenario, path: str):
    with open(path, 'w', encoding='utf-8') as handle:
        json.dump(dump_scenario(scenario), handle, indent=2)
        handle.write('\n')
