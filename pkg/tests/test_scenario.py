"""
Unit Tests for Scenario Documents

Comprehensive tests covering:
- Valid documents and their defaults
- Error collection with JSON paths
- Policies, fixed weight tables and engines
- Sweep grids and the tied-parameter preset
- File loading, parse errors and dumping
"""

import glob
import json
import math
import pytest
import sys
import os

# Add parent directory to path for imports
sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from dynamic_partitioning.engine import EngineKind
from dynamic_partitioning.exceptions import ScenarioParseError, ScenarioValidationError
from dynamic_partitioning.scenario import (
    ScenarioValidator,
    dump_scenario,
    load_scenario,
    parse_scenario,
    save_scenario,
)
from dynamic_partitioning.schedulers import PolicyVariant, WeightMode
from dynamic_partitioning.weights import ConstantWeights

SCENARIO_DIR = os.path.join(os.path.dirname(os.path.dirname(os.path.abspath(__file__))), 'scenarios')


def minimal(**extra):
    data = {
        'cluster': {'machines': [{'id': 0, 'slots': 2}]},
        'jobs': [{'id': 0, 'nodes': 1}],
    }
    data.update(extra)
    return data


class TestScenarioValidator:
    """Tests for ScenarioValidator class."""

    def setup_method(self):
        """Set up test fixtures."""
        self.validator = ScenarioValidator()

    # ==================== VALID DOCUMENTS ====================

    def test_minimal_document(self):
        """Test defaults of a minimal scenario."""
        result = self.validator.validate(minimal())
        assert result.is_valid is True
        assert result.errors == []
        scenario = result.scenario
        assert scenario.engine is EngineKind.CONTINUOUS
        assert scenario.seeds == [0]
        assert scenario.horizon == 1000.0
        assert scenario.warmup == 0.1
        assert scenario.policy.variant is PolicyVariant.DGP
        assert scenario.policy.params.h == pytest.approx(math.e)
        assert scenario.id == 'scenario'

    def test_uniform_cluster(self):
        """Test the uniform cluster shorthand."""
        result = self.validator.validate(minimal(cluster={'uniform': {'machines': 3, 'slots': 2}}))
        assert result.scenario.cluster.total_slots == 6

    def test_id_from_file_name(self):
        """Test that the file name names an anonymous scenario."""
        result = ScenarioValidator('/tmp/some_case.json').validate(minimal())
        assert result.scenario.id == 'some_case'

    def test_alpha_tied_to_beta(self):
        """Test alpha = beta^2 when alpha is omitted."""
        result = self.validator.validate(minimal(policy={'params': {'beta': 0.5}}))
        assert result.scenario.policy.params.alpha == pytest.approx(0.25)
        assert result.scenario.tied_alpha is True

    def test_fixed_weights(self):
        """Test a fixed-weights policy."""
        policy = {'mode': 'fixed', 'weights': {'kind': 'constant', 'values': {'0': 0.5}}}
        result = self.validator.validate(minimal(policy=policy))
        assert result.scenario.policy.mode is WeightMode.FIXED
        assert result.scenario.policy.fixed_weights == ConstantWeights({0: 0.5})
        assert result.scenario.policy.label == 'dgp-bar'

    def test_unknown_key_warns(self):
        """Test that unknown keys are warnings, not errors."""
        result = self.validator.validate(minimal(colour='blue'))
        assert result.is_valid is True
        assert result.warnings == ['colour: unknown key ignored']

    def test_zero_arrival_rate_warns(self):
        """Test the warning for a type that never arrives."""
        result = self.validator.validate(minimal(jobs=[{'id': 0, 'nodes': 1, 'arrival_rate': 0}]))
        assert result.is_valid is True
        assert any('never arrives' in w for w in result.warnings)

    # ==================== INVALID DOCUMENTS ====================

    @pytest.mark.parametrize("data,expected_error", [
        ([], "$: scenario must be a JSON object"),
        ({'jobs': [{'id': 0, 'nodes': 1}]}, "cluster: is required"),
        (minimal(jobs=[]), "jobs: expected a nonempty list"),
        (minimal(jobs=[{'id': 0, 'nodes': 2}]), "jobs[0].nodes: |V_j|<M violated"),
        (minimal(jobs=[{'id': 0, 'nodes': 1, 'edges': [[0]]}]), "jobs[0].edges[0]: expected [u, v]"),
        (minimal(jobs=[{'id': 0, 'nodes': 1, 'service_rate': 0}]), "jobs[0]: service rate must be positive"),
        (minimal(policy={'variant': 'greedy'}), "policy.variant: unknown variant 'greedy'"),
        (minimal(policy={'params': {'gamma': 1}}), "policy.params.gamma: unknown parameter"),
        (minimal(policy={'params': {'epsilon': 2}}), "policy.params: epsilon must lie in (0, 1)"),
        (minimal(policy={'mode': 'fixed'}), "policy.weights: fixed mode needs a weight table"),
        (minimal(engine='warp'), "engine: unknown engine 'warp'"),
        (minimal(engine='jump-chain', policy={'variant': 'adgp'}), "engine: the jump chain cannot run adgp"),
        (minimal(seeds=[]), "seeds: expected a nonempty list"),
        (minimal(seeds=[1, -2]), "seeds[1]: expected a nonnegative integer"),
        (minimal(horizon=-5), "horizon: must be nonnegative"),
        (minimal(warmup=1.0), "warmup: must lie in [0, 1)"),
        (minimal(initial_queues={'3': 1}), "initial_queues.3: unknown job type 3"),
        (minimal(sweep={'gamma': [1]}), "sweep.gamma: unknown axis"),
        (minimal(output={'trace': 'yes'}), "output.trace: expected true or false"),
    ])
    def test_invalid_documents(self, data, expected_error):
        """Test that each invariant is reported with its path."""
        result = self.validator.validate(data)
        assert result.is_valid is False
        assert any(error.startswith(expected_error) for error in result.errors), result.errors

    def test_all_errors_collected(self):
        """Test that one validation reports every problem."""
        data = minimal(
            jobs=[{'id': 0, 'nodes': 5}, {'id': 0, 'nodes': 1}],
            seeds=['a'],
            engine='warp',
        )
        result = self.validator.validate(data)
        paths = [error.split(':')[0] for error in result.errors]
        assert 'jobs[0].nodes' in paths
        assert 'jobs[1].id' in paths
        assert 'seeds[0]' in paths
        assert 'engine' in paths

    def test_missing_fixed_weight(self):
        """Test a constant table that skips a job type."""
        data = minimal(
            jobs=[{'id': 0, 'nodes': 1}, {'id': 1, 'nodes': 1}],
            policy={'mode': 'fixed', 'weights': {'values': {'0': 1.0}}},
        )
        result = self.validator.validate(data)
        assert "policy.weights.values: no weight for job types [1]" in result.errors

    def test_template_weight_outside_cluster(self):
        """Test per-template entries are checked against the cluster."""
        weights = {'kind': 'template', 'entries': [{'job_type': 0, 'assignment': [[4, 0]], 'weight': 1.0}]}
        result = self.validator.validate(minimal(policy={'mode': 'fixed', 'weights': weights}))
        assert result.is_valid is False
        assert any('unknown slot' in error for error in result.errors)

    def test_to_dict(self):
        """Test the result's dictionary form."""
        result = self.validator.validate(minimal(engine='warp'))
        data = result.to_dict()
        assert data['is_valid'] is False
        assert len(data['errors']) == 1


class TestSweep:
    """Tests for sweep grids."""

    def test_beta_axis_ties_alpha(self):
        """Test that alpha follows beta across points."""
        scenario = parse_scenario(minimal(sweep={'beta': [1.0, 0.5]}))
        points = scenario.sweep_points()
        assert [p.beta for p in points] == [1.0, 0.5]
        assert [p.alpha for p in points] == pytest.approx([1.0, 0.25])

    def test_explicit_alpha_is_kept(self):
        """Test that a given alpha stays fixed across beta points."""
        scenario = parse_scenario(minimal(policy={'params': {'alpha': 0.01}}, sweep={'T': [1.0, 10.0]}))
        points = scenario.sweep_points()
        assert [p.frame_length for p in points] == [1.0, 10.0]
        assert all(p.alpha == 0.01 for p in points)

    def test_grid_order(self):
        """Test the product order beta, then alpha."""
        scenario = parse_scenario(minimal(sweep={'alpha': [0.1, 0.2], 'beta': [0.5, 0.25]}))
        pairs = [(p.beta, p.alpha) for p in scenario.sweep_points()]
        assert pairs == [(0.5, 0.1), (0.5, 0.2), (0.25, 0.1), (0.25, 0.2)]

    def test_tied_preset(self):
        """Test parameters tied to beta by the preset."""
        scenario = parse_scenario(minimal(sweep={'beta': [0.5], 'preset': 'tied'}))
        (point,) = scenario.sweep_points()
        assert point.h == pytest.approx(math.exp(4.0))
        assert point.epsilon == pytest.approx(0.5 ** (1.0 / 16.0))

    def test_tied_preset_rejects_tied_axes(self):
        """Test that the preset owns alpha, epsilon and h."""
        result = ScenarioValidator().validate(minimal(sweep={'beta': [0.5], 'h': [3.0], 'preset': 'tied'}))
        assert any(error.startswith('sweep.preset') for error in result.errors)

    def test_invalid_grid_point(self):
        """Test that every grid point is checked."""
        result = ScenarioValidator().validate(minimal(sweep={'beta': [1.0], 'preset': 'tied'}))
        assert any('grid point violates' in error for error in result.errors)

    def test_no_sweep(self):
        """Test that a scenario without a grid has one point."""
        scenario = parse_scenario(minimal())
        assert scenario.sweep_points() == [scenario.policy.params]


class TestLoadAndDump:
    """Tests for scenario files."""

    def test_parse_error_has_position(self, tmp_path):
        """Test that syntax errors carry line and column."""
        path = tmp_path / 'broken.json'
        path.write_text('{\n  "cluster": ,\n}\n')
        with pytest.raises(ScenarioParseError) as info:
            load_scenario(str(path))
        assert info.value.line == 2
        assert info.value.column == 14
        assert info.value.exit_code == 2

    def test_validation_error_lists_everything(self, tmp_path):
        """Test that load reports all violations at once."""
        path = tmp_path / 'bad.json'
        path.write_text(json.dumps(minimal(seeds=[], engine='warp')))
        with pytest.raises(ScenarioValidationError) as info:
            load_scenario(str(path))
        assert len(info.value.errors) == 2

    def test_missing_file(self, tmp_path):
        """Test that unreadable files raise OSError."""
        with pytest.raises(OSError):
            load_scenario(str(tmp_path / 'absent.json'))

    def test_dump_and_reload(self, tmp_path):
        """Test that a saved scenario loads back to the same document."""
        data = minimal(
            id='case',
            policy={'variant': 'adgp', 'mode': 'fixed', 'params': {'beta': 0.5, 'clock_rate': 2.0},
                    'weights': {'kind': 'queue_term', 'values': {'0': 0.3}}},
            sweep={'beta': [0.5, 0.25]},
            initial_queues={'0': 2},
            seeds=[3, 4],
        )
        scenario = parse_scenario(data)
        path = tmp_path / 'case.json'
        save_scenario(scenario, str(path))
        reloaded = load_scenario(str(path))
        assert dump_scenario(reloaded) == dump_scenario(scenario)
        assert reloaded.policy.fixed_weights == scenario.policy.fixed_weights
        assert reloaded.initial_queues == {0: 2}

    @pytest.mark.parametrize("path", sorted(glob.glob(os.path.join(SCENARIO_DIR, '*.json'))))
    def test_shipped_scenarios_load(self, path):
        """Test that every example scenario is valid."""
        scenario = load_scenario(path)
        assert scenario.id
        assert scenario.sweep_points()
