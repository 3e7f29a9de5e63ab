"""
Integration Tests for the Command Line Interface

Tests covering:
- Every subcommand on small scenarios
- Exit codes for invalid input, capacity and state space failures
- Flag overrides and written output files
"""

import csv
import json
import os
import sys

import pytest

# Add parent directory to path for imports
sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from app import apply_overrides, build_parser, main
from dynamic_partitioning.scenario import parse_scenario

SINGLE_MACHINE = {
    'id': 'single',
    'cluster': {'machines': [{'id': 0, 'slots': 2}]},
    'jobs': [{'id': 0, 'nodes': 1, 'arrival_rate': 1.0, 'service_rate': 1.0}],
    'horizon': 50.0,
    'seeds': [0, 1],
}


def write_scenario(tmp_path, **changes):
    data = dict(SINGLE_MACHINE)
    data.update(changes)
    path = tmp_path / 'scenario.json'
    path.write_text(json.dumps(data))
    return str(path)


@pytest.mark.integration
class TestSimulateCommand:
    """Tests for simulate and sweep."""

    def test_simulate_writes_summary(self, tmp_path):
        """Test a successful run and its summary file."""
        out = tmp_path / 'out'
        code = main(['simulate', write_scenario(tmp_path), '--out', str(out)])
        assert code == 0
        with open(out / 'summary.csv', newline='') as handle:
            rows = list(csv.DictReader(handle))
        assert [row['seed'] for row in rows] == ['0', '1']
        assert all(row['scenario_id'] == 'single' for row in rows)

    def test_simulate_ignores_sweep(self, tmp_path):
        """Test that simulate runs only the base parameters."""
        out = tmp_path / 'out'
        path = write_scenario(tmp_path, sweep={'beta': [1.0, 0.5]})
        assert main(['simulate', path, '--out', str(out), '--seed', '7']) == 0
        with open(out / 'summary.csv', newline='') as handle:
            rows = list(csv.DictReader(handle))
        assert len(rows) == 1
        assert rows[0]['seed'] == '7'

    def test_sweep_runs_every_point(self, tmp_path):
        """Test that sweep runs the whole grid."""
        out = tmp_path / 'out'
        path = write_scenario(tmp_path, sweep={'beta': [1.0, 0.5]})
        assert main(['sweep', path, '--out', str(out)]) == 0
        with open(out / 'aggregate.csv', newline='') as handle:
            rows = list(csv.DictReader(handle))
        assert [row['beta'] for row in rows] == ['1.0', '0.5']

    def test_trace_flag(self, tmp_path):
        """Test that --trace writes JSONL traces."""
        out = tmp_path / 'out'
        assert main(['simulate', write_scenario(tmp_path), '--out', str(out), '--trace']) == 0
        assert len(os.listdir(out / 'traces')) == 2


@pytest.mark.integration
class TestAnalysisCommands:
    """Tests for exact, static-opt and bounds."""

    def test_exact_fixed_weights(self, tmp_path):
        """Test closed form against the generator solve."""
        policy = {'mode': 'fixed', 'params': {'beta': 1.0},
                  'weights': {'kind': 'constant', 'values': {'0': 0.7}}}
        path = write_scenario(tmp_path, policy=policy)
        assert main(['exact', path, '--out', str(tmp_path)]) == 0
        with open(tmp_path / 'single_exact.json') as handle:
            payload = json.load(handle)
        assert payload['configurations'] == 4
        assert payload['tv'] < 1e-9

    def test_static_opt(self, tmp_path):
        """Test the optimum and margin of a feasible load."""
        assert main(['static-opt', write_scenario(tmp_path), '--out', str(tmp_path)]) == 0
        with open(tmp_path / 'single_static_opt.json') as handle:
            payload = json.load(handle)
        assert payload['capacity_margin']['delta'] == pytest.approx(1.0)

    def test_static_opt_negative_margin(self, tmp_path, capsys):
        """Test exit code 3 for loads outside the capacity region."""
        path = write_scenario(tmp_path, jobs=[{'id': 0, 'nodes': 1, 'arrival_rate': 3.0}])
        assert main(['static-opt', path, '--out', str(tmp_path)]) == 3
        assert 'outside the capacity region' in capsys.readouterr().out

    def test_bounds(self, tmp_path):
        """Test the DGP bound report."""
        assert main(['bounds', write_scenario(tmp_path), '--out', str(tmp_path)]) == 0
        assert os.path.exists(tmp_path / 'single_bounds_dgp.json')

    def test_frame_bounds_need_constants(self, tmp_path):
        """Test that missing frame constants are invalid input."""
        assert main(['bounds', write_scenario(tmp_path), '--out', str(tmp_path), '--theorem', 'frame']) == 2


@pytest.mark.integration
class TestExitCodes:
    """Tests for failure exit codes."""

    def test_missing_file(self, tmp_path):
        """Test an unreadable scenario file."""
        assert main(['simulate', str(tmp_path / 'absent.json')]) == 2

    def test_parse_error(self, tmp_path, capsys):
        """Test that syntax errors name their position."""
        path = tmp_path / 'broken.json'
        path.write_text('{"cluster": }')
        assert main(['simulate', str(path)]) == 2
        assert 'broken.json:1:13:' in capsys.readouterr().err

    def test_validation_error(self, tmp_path, capsys):
        """Test that invalid scenarios list their errors."""
        path = write_scenario(tmp_path, engine='jump-chain', policy={'variant': 'adgp'})
        assert main(['simulate', path]) == 2
        assert 'the jump chain cannot run adgp' in capsys.readouterr().err

    def test_state_space_budget(self, tmp_path):
        """Test exit code 3 when enumeration exceeds the budget."""
        assert main(['exact', write_scenario(tmp_path), '--out', str(tmp_path), '--max-states', '2']) == 3


class TestOverrides:
    """Tests for flag precedence."""

    def test_flags_replace_scenario_fields(self):
        """Test that flags win over the scenario document."""
        scenario = parse_scenario(dict(SINGLE_MACHINE, output={'directory': 'elsewhere'}))
        args = build_parser().parse_args(['simulate', 'x.json', '--seed', '3', '4', '--out', 'here',
                                          '--trace', '--max-states', '9'])
        updated = apply_overrides(scenario, args)
        assert updated.seeds == [3, 4]
        assert updated.output.directory == 'here'
        assert updated.output.trace is True
        assert updated.max_states == 9

    def test_no_flags_keep_scenario(self):
        """Test that absent flags change nothing."""
        scenario = parse_scenario(SINGLE_MACHINE)
        args = build_parser().parse_args(['simulate', 'x.json'])
        assert apply_overrides(scenario, args) == scenario
