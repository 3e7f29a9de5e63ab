"""
Unit Tests for the Simulation Engines

Comprehensive tests covering:
- Event queue ordering and cancellation
- Continuous-time runs of every policy with invariant checks
- Reproducibility and trace replay
- Jump chain runs and unsupported policies
- The loss system on a single machine
"""

import pytest
import sys
import os

# Add parent directory to path for imports
sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from dynamic_partitioning.cluster import ClusterSpec, Edge, JobType
from dynamic_partitioning.engine import (
    EventQueue,
    run_continuous,
    run_jump_chain,
    run_loss_system,
    tracking_enabled,
    uniformization_rate,
)
from dynamic_partitioning.exceptions import UnsupportedPolicyError
from dynamic_partitioning.kernel import SchedulerParams
from dynamic_partitioning.metrics import summarize_trace
from dynamic_partitioning.scenario import Scenario
from dynamic_partitioning.schedulers import Event, EventKind, SchedulerPolicy
from dynamic_partitioning.weights import ConstantWeights

PARAMS = SchedulerParams(beta=0.5, frame_length=2.0)

POLICIES = [
    SchedulerPolicy('dgp', PARAMS),
    SchedulerPolicy('dgp', PARAMS, 'fixed', ConstantWeights({0: 0.5})),
    SchedulerPolicy('adgp', PARAMS),
    SchedulerPolicy('adgp', PARAMS, 'fixed', ConstantWeights({0: 0.5})),
    SchedulerPolicy('frame', PARAMS),
    SchedulerPolicy('round_robin', PARAMS),
]


def two_by_two(arrival_rate=1.2, **options):
    cluster = ClusterSpec.uniform(2, 2)
    jobs = [JobType(0, 2, (Edge(0, 1),), arrival_rate=arrival_rate, service_rate=1.0)]
    return Scenario(cluster, jobs, **options)


def single_machine(**options):
    return Scenario(ClusterSpec.uniform(1, 2), [JobType(0, 1)], **options)


class TestEventQueue:
    """Tests for the timed event queue."""

    def test_order_by_time_then_priority(self):
        """Test that ties break by kind priority, then scheduling order."""
        events = EventQueue()
        events.schedule(1.0, Event(EventKind.ARRIVAL, 0))
        events.schedule(1.0, Event(EventKind.DEPARTURE, 0))
        events.schedule(0.5, Event(EventKind.TICK, 0))
        events.schedule(1.0, Event(EventKind.ARRIVAL, 1))
        popped = [events.pop() for _ in range(4)]
        assert [(t, e.kind, e.job_type_id) for t, e in popped] == [
            (0.5, EventKind.TICK, 0),
            (1.0, EventKind.DEPARTURE, 0),
            (1.0, EventKind.ARRIVAL, 0),
            (1.0, EventKind.ARRIVAL, 1),
        ]
        assert events.pop() is None

    def test_cancel(self):
        """Test lazy cancellation."""
        events = EventQueue()
        first = events.schedule(1.0, Event(EventKind.ARRIVAL, 0))
        events.schedule(2.0, Event(EventKind.ARRIVAL, 1))
        events.cancel(first)
        events.cancel(None)
        assert len(events) == 1
        assert events.pop()[1].job_type_id == 1


class TestHelpers:
    """Tests for engine helpers."""

    @pytest.mark.parametrize("machines,slots,arrival,service,expected", [
        (1, 2, 1.0, 1.0, 6.0),
        (2, 2, 1.0, 2.0, 18.0),
    ])
    def test_uniformization_rate(self, machines, slots, arrival, service, expected):
        """Test xi = 2 (sum lambda + M sum mu)."""
        cluster = ClusterSpec.uniform(machines, slots)
        assert uniformization_rate(cluster, [JobType(0, 1, (), arrival, service)]) == expected

    def test_uniformization_rate_two_types(self):
        """Test lambda = (1, 2), mu = (1, 1) on three slots."""
        jobs = [JobType(0, 1, arrival_rate=1.0), JobType(1, 1, arrival_rate=2.0)]
        assert uniformization_rate(ClusterSpec.uniform(1, 3), jobs) == 18.0

    def test_tracking_threshold(self):
        """Test that large template spaces switch tracking off."""
        cluster = ClusterSpec.uniform(2, 2)
        jobs = [JobType(0, 2)]
        assert tracking_enabled(cluster, jobs, threshold=13) is True
        assert tracking_enabled(cluster, jobs, threshold=12) is False


class TestContinuousEngine:
    """Tests for the continuous-time engine."""

    @pytest.mark.parametrize("policy", POLICIES, ids=lambda p: f"{p.variant.value}-{p.mode.value}")
    def test_invariants_hold(self, policy):
        """Test every policy under per-event invariant checks."""
        result = run_continuous(two_by_two(), policy, horizon=150.0, seed=3, check_invariants=True)
        assert result.report.events > 0
        assert result.report.overall.duration == pytest.approx(150.0)

    @pytest.mark.parametrize("policy", POLICIES, ids=lambda p: f"{p.variant.value}-{p.mode.value}")
    def test_trace_replay_matches(self, policy):
        """Test that replaying the trace reproduces the report exactly."""
        result = run_continuous(two_by_two(), policy, horizon=120.0, seed=5, trace=True)
        replayed = summarize_trace(result.trace)
        assert replayed.to_dict() == result.report.to_dict()
        assert replayed.steady.configurations == result.report.steady.configurations

    def test_same_seed_same_run(self):
        """Test reproducibility."""
        first = run_continuous(two_by_two(), POLICIES[0], horizon=100.0, seed=9)
        second = run_continuous(two_by_two(), POLICIES[0], horizon=100.0, seed=9)
        assert first.report.to_dict() == second.report.to_dict()

    def test_different_seeds_differ(self):
        """Test that the seed matters."""
        first = run_continuous(two_by_two(), POLICIES[0], horizon=100.0, seed=1)
        second = run_continuous(two_by_two(), POLICIES[0], horizon=100.0, seed=2)
        assert first.report.to_dict() != second.report.to_dict()

    def test_zero_horizon(self):
        """Test an empty run."""
        result = run_continuous(two_by_two(), POLICIES[0], horizon=0.0)
        assert result.report.events == 0
        assert result.report.overall.duration == 0.0

    def test_negative_horizon(self):
        """Test input validation."""
        with pytest.raises(ValueError, match="nonnegative"):
            run_continuous(two_by_two(), horizon=-1.0)

    def test_zero_rate_type_never_arrives(self):
        """Test that a type with zero arrival rate stays empty."""
        scenario = Scenario(ClusterSpec.uniform(2, 2), [JobType(0, 1), JobType(1, 1, arrival_rate=0.0)])
        result = run_continuous(scenario, horizon=100.0, seed=0)
        assert result.state.arrived[1] == 0
        assert result.report.overall.queue[1] == 0.0

    def test_initial_queues_drain(self):
        """Test that jobs present at time zero are served."""
        scenario = two_by_two(arrival_rate=0.0, initial_queues={0: 3})
        result = run_continuous(scenario, SchedulerPolicy('round_robin'), horizon=200.0, seed=0,
                                check_invariants=True)
        assert result.state.queue_sizes() == {0: 0}
        assert result.state.departed[0] == 3

    def test_frame_interruptions_counted(self):
        """Test that frame resets interrupt jobs and count them."""
        policy = SchedulerPolicy('frame', SchedulerParams(alpha=0.01, frame_length=0.5))
        result = run_continuous(two_by_two(arrival_rate=1.8), policy, horizon=300.0, seed=2)
        assert result.report.interruptions == result.state.interruptions


class TestJumpChain:
    """Tests for the uniformized jump chain."""

    def test_step_count(self):
        """Test that every step counts as an event."""
        result = run_jump_chain(single_machine(), SchedulerPolicy('dgp'), steps=500, seed=0)
        assert result.report.events == 500
        assert result.report.horizon == 500.0

    def test_trace_replay_matches(self):
        """Test replay of a jump chain trace."""
        result = run_jump_chain(two_by_two(), POLICIES[1], steps=2000, seed=4, trace=True,
                                check_invariants=True)
        assert summarize_trace(result.trace).to_dict() == result.report.to_dict()

    @pytest.mark.parametrize("variant", ['adgp', 'frame'])
    def test_unsupported_policies(self, variant):
        """Test that clocked policies are refused."""
        with pytest.raises(UnsupportedPolicyError):
            run_jump_chain(single_machine(), SchedulerPolicy(variant), steps=10)

    def test_negative_steps(self):
        """Test input validation."""
        with pytest.raises(ValueError):
            run_jump_chain(single_machine(), steps=-1)


class TestLossSystem:
    """Tests for the loss system."""

    def test_single_machine_distribution(self):
        """Test the time fractions of the four configurations."""
        result = run_loss_system(single_machine(), horizon=20_000.0, seed=0)
        empty = frozenset()
        a1 = frozenset({(0, ((0, 0),))})
        a2 = frozenset({(0, ((0, 1),))})
        both = a1 | a2
        expected = {empty: 0.4, a1: 0.2, a2: 0.2, both: 0.2}
        assert set(result.distribution) == set(expected)
        for key, probability in expected.items():
            assert result.distribution[key] == pytest.approx(probability, abs=0.03)

    def test_drops_and_replay(self):
        """Test that full clusters drop arrivals and traces replay."""
        result = run_loss_system(single_machine(), horizon=500.0, seed=1, trace=True)
        assert result.drops > 0
        replayed = summarize_trace(result.trace)
        assert replayed.to_dict() == result.report.to_dict()
        assert replayed.steady.configurations == result.distribution

    def test_templates_are_actual(self):
        """Test that loss templates always hold their job."""
        result = run_loss_system(two_by_two(), horizon=200.0, seed=0)
        assert all(t.is_actual for t in result.configuration)
