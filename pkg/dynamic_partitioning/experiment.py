"""
Experiment Module

Runs a scenario over its sweep points and seeds, attaches exact reference
distances where they exist, aggregates replications and writes the result
files. Replications may run in a process pool; results are merged by
replication index, so output never depends on the pool size.
"""

import csv
import json
import logging
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy import stats

from .engine import EngineKind, run_continuous, run_jump_chain, run_loss_system, tracking_enabled
from .exact import (
    ConfigurationSpace,
    StationaryDistribution,
    closed_form_pi,
    empirical_distribution,
    gamma_distribution,
    gamma_hat_distribution,
    total_variation,
)
from .exceptions import PartitioningError, StateSpaceTooLargeError
from .kernel import SchedulerParams
from .metrics import MetricsReport
from .scenario import Scenario
from .schedulers import PolicyVariant, WeightMode

logger = logging.getLogger(__name__)

SUMMARY_FILE = 'summary.csv'
AGGREGATE_FILE = 'aggregate.csv'
TRACE_DIRECTORY = 'traces'
LEADING_COLUMNS = ('scenario_id', 'policy', 'engine', 'beta', 'alpha', 'epsilon', 'h', 'T', 'seed')
TRAILING_COLUMNS = ('avg_cost', 'interruptions', 'drops', 'tv_to_reference')
AGGREGATED_METRICS = ('avg_cost', 'interruptions', 'drops', 'tv_to_reference')
CONFIDENCE = 0.95


@dataclass
class RunRecord:
    """
    Summary of one replication.

    Averages are the post-warm-up (steady) time averages.
    """
    index: int
    point: int
    scenario_id: str
    policy: str
    engine: str
    params: SchedulerParams
    seed: int
    avg_queue: Dict[int, float]
    avg_cost: float
    interruptions: int
    drops: int
    events: int
    tv_to_reference: Optional[float] = None
    report: Optional[MetricsReport] = field(default=None, repr=False, compare=False)

    def row(self, job_ids: Sequence[int]) -> Dict[str, Any]:
        """The flat summary record in frozen column order."""
        values: Dict[str, Any] = {
            'scenario_id': self.scenario_id,
            'policy': self.policy,
            'engine': self.engine,
            'beta': self.params.beta,
            'alpha': self.params.alpha,
            'epsilon': self.params.epsilon,
            'h': self.params.h,
            'T': self.params.frame_length,
            'seed': self.seed,
        }
        for j in job_ids:
            values[f'avg_queue_{j}'] = self.avg_queue.get(j)
        values.update(
            avg_cost=self.avg_cost,
            interruptions=self.interruptions,
            drops=self.drops,
            tv_to_reference=self.tv_to_reference,
        )
        return values

    def to_dict(self) -> Dict[str, Any]:
        data = self.row(sorted(self.avg_queue))
        data['events'] = self.events
        if self.report is not None:
            data['report'] = self.report.to_dict()
        return data


@dataclass
class AggregateRecord:
    """Mean and Student-t confidence half-width of one sweep point's replications."""
    point: int
    first: RunRecord
    runs: int
    means: Dict[str, Optional[float]]
    half_widths: Dict[str, Optional[float]]

    def row(self, job_ids: Sequence[int]) -> Dict[str, Any]:
        base = self.first.row(job_ids)
        values = {key: base[key] for key in LEADING_COLUMNS if key != 'seed'}
        values['runs'] = self.runs
        for name in _metric_names(job_ids):
            values[f'{name}_mean'] = self.means.get(name)
            values[f'{name}_ci95'] = self.half_widths.get(name)
        return values


@dataclass
class ExperimentResult:
    records: List[RunRecord]
    aggregates: List[AggregateRecord]
    traces: Dict[int, List[Dict]] = field(default_factory=dict)

    @property
    def job_ids(self) -> List[int]:
        return sorted({j for record in self.records for j in record.avg_queue})


def _metric_names(job_ids: Sequence[int]) -> List[str]:
    return [f'avg_queue_{j}' for j in job_ids] + list(AGGREGATED_METRICS)


# ==================== REPLICATIONS ====================

def simulate(scenario: Scenario, seed: int, trace: bool = False) -> Tuple[MetricsReport, Optional[List[Dict]]]:
    """Run the scenario's engine once and return its report and trace."""
    if scenario.engine is EngineKind.LOSS:
        result = run_loss_system(scenario, seed=seed, trace=trace)
        return result.report, result.trace
    if scenario.engine is EngineKind.JUMP_CHAIN:
        result = run_jump_chain(scenario, seed=seed, trace=trace)
    else:
        result = run_continuous(scenario, seed=seed, trace=trace)
    return result.report, result.trace


def reference_distribution(scenario: Scenario,
                           space: Optional[ConfigurationSpace] = None) -> Optional[StationaryDistribution]:
    """
    The exact stationary configuration law of a run, when one is known.

    That is gamma for loss runs and the product form pi* for fixed-weight
    DGP and ADGP runs; None otherwise or when the space is too large.
    """
    policy = scenario.policy
    if scenario.engine is not EngineKind.LOSS and not (
            policy.mode is WeightMode.FIXED and policy.variant in (PolicyVariant.DGP, PolicyVariant.ADGP)):
        return None
    try:
        space = space or ConfigurationSpace(scenario.cluster, scenario.jobs, scenario.max_states)
    except StateSpaceTooLargeError as error:
        logger.info("no exact reference: %s", error)
        return None
    if scenario.engine is EngineKind.LOSS:
        return gamma_distribution(scenario.cluster, scenario.jobs, space)
    if policy.variant is PolicyVariant.ADGP:
        base = gamma_hat_distribution(scenario.cluster, scenario.jobs, policy.params.clock_rate, space)
    else:
        base = gamma_distribution(scenario.cluster, scenario.jobs, space)
    return closed_form_pi(base, policy.fixed_weights, policy.params.beta)


def _run_replication(task: Tuple[int, int, Scenario, int, bool]) -> Tuple[RunRecord, Optional[List[Dict]]]:
    index, point, scenario, seed, trace = task
    report, events = simulate(scenario, seed, trace)
    label = 'loss' if scenario.engine is EngineKind.LOSS else scenario.policy.label
    record = RunRecord(
        index=index,
        point=point,
        scenario_id=scenario.id,
        policy=label,
        engine=scenario.engine.value,
        params=scenario.policy.params,
        seed=seed,
        avg_queue=dict(report.steady.queue),
        avg_cost=report.steady.cost,
        interruptions=report.interruptions,
        drops=report.drops,
        events=report.events,
        report=report,
    )
    return record, events


def _half_width(values: Sequence[float]) -> Optional[float]:
    if len(values) < 2:
        return None
    sample = np.asarray(values, dtype=float)
    spread = sample.std(ddof=1) / math.sqrt(len(sample))
    return float(stats.t.ppf(0.5 + CONFIDENCE / 2.0, len(sample) - 1) * spread)


def aggregate(records: Sequence[RunRecord]) -> List[AggregateRecord]:
    """One aggregate per sweep point, in sweep order."""
    job_ids = sorted({j for record in records for j in record.avg_queue})
    groups: Dict[int, List[RunRecord]] = {}
    for record in sorted(records, key=lambda r: r.index):
        groups.setdefault(record.point, []).append(record)
    result = []
    for point in sorted(groups):
        group = groups[point]
        means: Dict[str, Optional[float]] = {}
        widths: Dict[str, Optional[float]] = {}
        for name in _metric_names(job_ids):
            values = [r.row(job_ids)[name] for r in group]
            values = [v for v in values if v is not None]
            means[name] = float(np.mean(values)) if values else None
            widths[name] = _half_width(values)
        result.append(AggregateRecord(point, group[0], len(group), means, widths))
    return result


def run_experiment(scenario: Scenario, workers: int = 1, trace: Optional[bool] = None,
                   out_dir: Optional[str] = None, reference: bool = True) -> ExperimentResult:
    """
    Run every sweep point with every seed.

    Args:
        scenario: A validated scenario
        workers: Process pool size; 1 runs in-process
        trace: Keep event traces (defaults to the scenario's output setting)
        out_dir: When given, results are written there, including the
            completed part of a run that aborts
        reference: Compute the distance to the exact reference law when one exists

    Returns:
        ExperimentResult with records ordered by replication index

    Raises:
        PartitioningError: Whatever an engine or exact analysis raises, after
            the completed records are flushed
    """
    trace = scenario.output.trace if trace is None else trace
    tasks = []
    points = scenario.sweep_points()
    for point, params in enumerate(points):
        variant = scenario.with_params(params)
        for seed in scenario.seeds:
            tasks.append((len(tasks), point, variant, seed, trace))
    logger.info("experiment %s: %d point(s) x %d seed(s)", scenario.id, len(points), len(scenario.seeds))

    records: List[RunRecord] = []
    traces: Dict[int, List[Dict]] = {}
    try:
        if workers > 1 and len(tasks) > 1:
            with ProcessPoolExecutor(max_workers=workers) as pool:
                for record, events in pool.map(_run_replication, tasks):
                    records.append(record)
                    if events is not None:
                        traces[record.index] = events
        else:
            for task in tasks:
                record, events = _run_replication(task)
                records.append(record)
                if events is not None:
                    traces[record.index] = events
        if reference:
            _attach_references(scenario, points, records)
    except PartitioningError:
        if out_dir and records:
            logger.warning("aborting; flushing %d completed run(s) to %s", len(records), out_dir)
            records.sort(key=lambda r: r.index)
            emit_outputs(records, out_dir, aggregate(records), traces)
        raise

    records.sort(key=lambda r: r.index)
    result = ExperimentResult(records, aggregate(records), traces)
    if out_dir:
        emit_outputs(result.records, out_dir, result.aggregates, result.traces)
    return result


def _attach_references(scenario: Scenario, points: Sequence[SchedulerParams], records: List[RunRecord]):
    if not tracking_enabled(scenario.cluster, scenario.jobs, scenario.tracking_threshold):
        return
    try:
        space = ConfigurationSpace(scenario.cluster, scenario.jobs, scenario.max_states)
    except StateSpaceTooLargeError:
        return
    references = {}
    for point, params in enumerate(points):
        references[point] = reference_distribution(scenario.with_params(params), space)
    for record in records:
        reference = references.get(record.point)
        occupancy = record.report.steady.configurations if record.report is not None else None
        if reference is None or not occupancy:
            continue
        record.tv_to_reference = total_variation(empirical_distribution(space, occupancy), reference)


# ==================== OUTPUT ====================

def _cell(value) -> str:
    if value is None:
        return ''
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _write_csv(path: str, columns: Sequence[str], rows: Sequence[Dict[str, Any]]):
    with open(path, 'w', newline='', encoding='utf-8') as handle:
        writer = csv.writer(handle, lineterminator='\n')
        writer.writerow(columns)
        for row in rows:
            writer.writerow([_cell(row.get(column)) for column in columns])


def summary_columns(job_ids: Sequence[int]) -> List[str]:
    return list(LEADING_COLUMNS) + [f'avg_queue_{j}' for j in job_ids] + list(TRAILING_COLUMNS)


def aggregate_columns(job_ids: Sequence[int]) -> List[str]:
    columns = [c for c in LEADING_COLUMNS if c != 'seed'] + ['runs']
    for name in _metric_names(job_ids):
        columns += [f'{name}_mean', f'{name}_ci95']
    return columns


def emit_outputs(records: Sequence[RunRecord], out_dir: str,
                 aggregates: Optional[Sequence[AggregateRecord]] = None,
                 traces: Optional[Dict[int, List[Dict]]] = None) -> List[str]:
    """
    Write summary.csv, aggregate.csv and one JSONL trace per traced run.

    Returns:
        Paths written, in order

    Raises:
        ValueError: If there are no records
        OSError: On I/O failure
    """
    if not records:
        raise ValueError("no records to write")
    os.makedirs(out_dir, exist_ok=True)
    job_ids = sorted({j for record in records for j in record.avg_queue})
    written = []

    path = os.path.join(out_dir, SUMMARY_FILE)
    _write_csv(path, summary_columns(job_ids), [r.row(job_ids) for r in records])
    written.append(path)

    if aggregates:
        path = os.path.join(out_dir, AGGREGATE_FILE)
        _write_csv(path, aggregate_columns(job_ids), [a.row(job_ids) for a in aggregates])
        written.append(path)

    if traces:
        trace_dir = os.path.join(out_dir, TRACE_DIRECTORY)
        os.makedirs(trace_dir, exist_ok=True)
        by_index = {r.index: r for r in records}
        for index in sorted(traces):
            record = by_index.get(index)
            if record is None:
                continue
            name = f"{record.scenario_id}_p{record.point}_s{record.seed}.jsonl"
            path = os.path.join(trace_dir, name)
            with open(path, 'w', encoding='utf-8') as handle:
                for entry in traces[index]:
                    handle.write(json.dumps(entry, sort_keys=True))
                    handle.write('\n')
            written.append(path)
    logger.info("wrote %d file(s) to %s", len(written), out_dir)
    return written


def load_trace(path: str) -> List[Dict]:
    """Read a JSONL trace back for summarize_trace."""
    with open(path, encoding='utf-8') as handle:
        return [json.loads(line) for line in handle if line.strip()]
