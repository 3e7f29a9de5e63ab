"""
Unit Tests for Experiments

Tests covering:
- Replications over seeds and sweep points
- Aggregation with Student-t half-widths
- Result files, traces and pool-size independence
- Exact reference distances
- Flushing completed runs when a replication fails
"""

import math
import os
import sys
from unittest.mock import patch

import pytest
from scipy import stats

# Add parent directory to path for imports
sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from dynamic_partitioning import experiment
from dynamic_partitioning.exceptions import NumericalError
from dynamic_partitioning.experiment import (
    AGGREGATE_FILE,
    SUMMARY_FILE,
    TRACE_DIRECTORY,
    emit_outputs,
    load_trace,
    reference_distribution,
    run_experiment,
    summary_columns,
)
from dynamic_partitioning.metrics import summarize_trace
from dynamic_partitioning.scenario import parse_scenario


def small_scenario(**extra):
    data = {
        'id': 'small',
        'cluster': {'uniform': {'machines': 2, 'slots': 2}},
        'jobs': [{'id': 0, 'nodes': 2, 'edges': [[0, 1]], 'arrival_rate': 1.0}],
        'horizon': 60.0,
        'seeds': [0, 1, 2],
    }
    data.update(extra)
    return parse_scenario(data)


def read(path):
    with open(path, encoding='utf-8') as handle:
        return handle.read()


class TestRunExperiment:
    """Tests for run_experiment."""

    def test_three_seeds_one_aggregate(self):
        """Test one record per seed and one aggregate per point."""
        result = run_experiment(small_scenario())
        assert [r.seed for r in result.records] == [0, 1, 2]
        assert [r.index for r in result.records] == [0, 1, 2]
        assert len(result.aggregates) == 1
        aggregate = result.aggregates[0]
        assert aggregate.runs == 3
        costs = [r.avg_cost for r in result.records]
        assert aggregate.means['avg_cost'] == pytest.approx(sum(costs) / 3)
        assert aggregate.half_widths['avg_cost'] is not None

    def test_records_use_steady_averages(self):
        """Test that records carry post-warm-up averages."""
        result = run_experiment(small_scenario(seeds=[4]))
        record = result.records[0]
        assert record.avg_cost == record.report.steady.cost
        assert record.avg_queue == record.report.steady.queue
        assert record.policy == 'dgp'
        assert record.engine == 'continuous'

    def test_sweep_points_in_order(self):
        """Test replication order point by point."""
        scenario = small_scenario(seeds=[0, 1], sweep={'beta': [1.0, 0.5]})
        result = run_experiment(scenario)
        assert [(r.point, r.seed) for r in result.records] == [(0, 0), (0, 1), (1, 0), (1, 1)]
        assert [r.params.beta for r in result.records] == [1.0, 1.0, 0.5, 0.5]
        assert [a.point for a in result.aggregates] == [0, 1]

    def test_no_reference_for_live_policy(self):
        """Test that live policies have no exact reference."""
        result = run_experiment(small_scenario(seeds=[0]))
        assert result.records[0].tv_to_reference is None
        assert reference_distribution(small_scenario()) is None

    def test_loss_reference_distance(self):
        """Test the distance between a long loss run and its exact law."""
        scenario = parse_scenario({
            'cluster': {'machines': [{'id': 0, 'slots': 2}]},
            'jobs': [{'id': 0, 'nodes': 1}],
            'engine': 'loss',
            'horizon': 10000.0,
            'seeds': [0],
        })
        result = run_experiment(scenario)
        assert result.records[0].policy == 'loss'
        assert result.records[0].tv_to_reference < 0.06

    def test_fixed_weight_reference(self):
        """Test that fixed-weight DGP runs get a product-form reference."""
        scenario = small_scenario(
            seeds=[0],
            policy={'mode': 'fixed', 'weights': {'values': {'0': 0.5}}},
        )
        reference = reference_distribution(scenario)
        assert reference is not None
        assert sum(reference.probabilities) == pytest.approx(1.0)
        assert run_experiment(scenario).records[0].tv_to_reference is not None


class TestAggregation:
    """Tests for confidence half-widths."""

    def test_single_run_has_no_width(self):
        """Test that one replication gives no interval."""
        assert experiment._half_width([1.0]) is None

    def test_student_t_width(self):
        """Test the 95% half-width of three values."""
        expected = stats.t.ppf(0.975, 2) * 1.0 / math.sqrt(3)
        assert experiment._half_width([1.0, 2.0, 3.0]) == pytest.approx(expected)


class TestOutputs:
    """Tests for result files."""

    def test_files_written(self, tmp_path):
        """Test summary and aggregate files without traces."""
        run_experiment(small_scenario(), out_dir=str(tmp_path))
        assert sorted(os.listdir(tmp_path)) == [AGGREGATE_FILE, SUMMARY_FILE]
        lines = read(tmp_path / SUMMARY_FILE).splitlines()
        assert lines[0] == ','.join(summary_columns([0]))
        assert len(lines) == 4
        assert lines[1].startswith('small,dgp,continuous,')

    def test_pool_size_does_not_change_output(self, tmp_path):
        """Test byte-identical files for one and two workers."""
        serial, pooled = tmp_path / 'serial', tmp_path / 'pooled'
        run_experiment(small_scenario(), workers=1, out_dir=str(serial))
        run_experiment(small_scenario(), workers=2, out_dir=str(pooled))
        for name in (SUMMARY_FILE, AGGREGATE_FILE):
            assert read(serial / name) == read(pooled / name)

    def test_traces_replay_from_disk(self, tmp_path):
        """Test that written traces reproduce each run's report."""
        result = run_experiment(small_scenario(seeds=[0, 1]), trace=True, out_dir=str(tmp_path))
        names = sorted(os.listdir(tmp_path / TRACE_DIRECTORY))
        assert names == ['small_p0_s0.jsonl', 'small_p0_s1.jsonl']
        for record, name in zip(result.records, names):
            trace = load_trace(str(tmp_path / TRACE_DIRECTORY / name))
            assert summarize_trace(trace).to_dict() == record.report.to_dict()

    def test_empty_records(self, tmp_path):
        """Test that nothing to write is an error."""
        with pytest.raises(ValueError, match="no records"):
            emit_outputs([], str(tmp_path))

    def test_failure_flushes_completed_runs(self, tmp_path):
        """Test that runs finished before a failure are still written."""
        real = experiment._run_replication

        def failing(task):
            if task[0] == 2:
                raise NumericalError("generator has no stationary law")
            return real(task)

        with patch.object(experiment, '_run_replication', side_effect=failing):
            with pytest.raises(NumericalError):
                run_experiment(small_scenario(), out_dir=str(tmp_path))
        lines = read(tmp_path / SUMMARY_FILE).splitlines()
        assert len(lines) == 3
