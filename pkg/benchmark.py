#!/usr/bin/env python3
"""
Performance Benchmark for the Simulation Engines

Measures simulated events per second for each policy on a small cluster.
"""

import time
import sys
import os

sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))

from dynamic_partitioning import (
    ClusterSpec,
    ConstantWeights,
    Edge,
    JobType,
    Scenario,
    SchedulerParams,
    SchedulerPolicy,
    run_continuous,
    run_jump_chain,
    run_loss_system,
)

CLUSTER = ClusterSpec.uniform(2, 4)
JOBS = [
    JobType(0, 2, (Edge(0, 1),), arrival_rate=1.5, service_rate=1.0),
    JobType(1, 3, (Edge(0, 1), Edge(1, 2)), arrival_rate=0.5, service_rate=1.0),
]
PARAMS = SchedulerParams(beta=0.5)

POLICIES = [
    ('dgp', SchedulerPolicy('dgp', PARAMS)),
    ('dgp-bar', SchedulerPolicy('dgp', PARAMS, 'fixed', ConstantWeights({0: 0.5, 1: 0.5}))),
    ('adgp', SchedulerPolicy('adgp', PARAMS)),
    ('frame', SchedulerPolicy('frame', SchedulerParams(alpha=0.5, frame_length=2.0))),
    ('round_robin', SchedulerPolicy('round_robin', PARAMS)),
]


def benchmark(run, label):
    """Run once and return statistics."""
    start_time = time.perf_counter()
    report = run()
    total_time = time.perf_counter() - start_time
    return {
        'label': label,
        'total_time': total_time,
        'events': report.events,
        'eps': report.events / total_time if total_time > 0 else float('inf'),
    }


def show(result):
    print(f"  {result['label']:<14} {result['events']:>9} events  "
          f"{result['total_time']:7.3f}s  {result['eps']:>12,.0f} events/second")


def main():
    print("=" * 60)
    print("Dynamic Partitioning Engine Benchmark")
    print("=" * 60)

    scenario = Scenario(CLUSTER, JOBS, tracking_threshold=0)

    # Warmup
    print("\n[Warmup] Short continuous run...")
    run_continuous(scenario, POLICIES[0][1], horizon=50.0, seed=0)

    print("\n[Benchmark 1] Continuous-time engine (horizon 2,000)...")
    for label, policy in POLICIES:
        show(benchmark(lambda: run_continuous(scenario, policy, horizon=2000.0, seed=1).report, label))

    print("\n[Benchmark 2] Jump chain (50,000 steps)...")
    for label, policy in POLICIES:
        if policy.variant.value not in ('dgp', 'round_robin'):
            continue
        show(benchmark(lambda: run_jump_chain(scenario, policy, steps=50_000, seed=1).report, label))

    print("\n[Benchmark 3] Loss system (horizon 20,000)...")
    show(benchmark(lambda: run_loss_system(scenario, horizon=20000.0, seed=1).report, 'loss'))

    print("\n" + "=" * 60)


if __name__ == "__main__":
    main()
