#!/usr/bin/env python3
"""
Command Line Interface for Dynamic Partitioning Experiments

Subcommands:
    simulate    run the scenario at its base parameters for every seed
    sweep       run every point of the scenario's parameter grid
    exact       stationary configuration laws of the scenario
    static-opt  static partitioning optimum and capacity margin
    bounds      evaluate the queue and cost bounds

Exit codes: 0 success, 2 invalid input, 3 capacity or state space, 4 numerical.
"""

import argparse
import json
import logging
import os
import sys
from dataclasses import replace
from typing import List, Optional

from dynamic_partitioning import __version__
from dynamic_partitioning.exact import (
    BoundTheorem,
    ConfigurationSpace,
    build_fixed_weight_generator,
    capacity_margin,
    closed_form_pi,
    divergences,
    gamma_distribution,
    gamma_hat_distribution,
    solve_stationary,
    static_optimum,
    theorem_bounds,
)
from dynamic_partitioning.exceptions import PartitioningError
from dynamic_partitioning.experiment import run_experiment
from dynamic_partitioning.scenario import Scenario, load_scenario
from dynamic_partitioning.schedulers import PolicyVariant, WeightMode

logger = logging.getLogger('dynamic_partitioning.app')


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog='app.py', description='Dynamic graph partitioning experiments')
    parser.add_argument('--version', action='version', version=f'%(prog)s {__version__}')

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument('scenario', help='scenario JSON file')
    common.add_argument('--seed', type=int, nargs='+', help='replace the scenario seed list')
    common.add_argument('--out', help='output directory (default: scenario output.directory)')
    common.add_argument('--trace', action='store_true', help='write JSONL event traces')
    common.add_argument('--max-states', type=int, help='enumeration budget for exact analysis')
    common.add_argument('--workers', type=int, default=1, help='replication pool size')
    common.add_argument('--log-level', default='WARNING',
                        choices=['DEBUG', 'INFO', 'WARNING', 'ERROR'], help='logging verbosity')

    commands = parser.add_subparsers(dest='command', required=True)
    commands.add_parser('simulate', parents=[common], help='run the base parameters')
    commands.add_parser('sweep', parents=[common], help='run every sweep point')
    commands.add_parser('exact', parents=[common], help='stationary configuration laws')
    commands.add_parser('static-opt', parents=[common], help='static optimum and capacity margin')
    bounds = commands.add_parser('bounds', parents=[common], help='queue and cost bounds')
    bounds.add_argument('--theorem', choices=[t.value for t in BoundTheorem], default=BoundTheorem.DGP.value)
    bounds.add_argument('--B1', type=float, help='frame-based constant B1')
    bounds.add_argument('--B2', type=float, help='frame-based constant B2')
    bounds.add_argument('--C0', type=float, help='constant of the bias precondition')
    bounds.add_argument('--delta', type=float, help='use this margin instead of the computed one')
    return parser


def apply_overrides(scenario: Scenario, args: argparse.Namespace) -> Scenario:
    """Command line flags take precedence over scenario fields."""
    if args.seed:
        scenario = replace(scenario, seeds=list(args.seed))
    if args.max_states:
        scenario = replace(scenario, max_states=args.max_states)
    output = scenario.output
    if args.out:
        output = replace(output, directory=args.out)
    if args.trace:
        output = replace(output, trace=True)
    return replace(scenario, output=output)


def _write_json(directory: str, name: str, payload) -> str:
    os.makedirs(directory, exist_ok=True)
    path = os.path.join(directory, name)
    with open(path, 'w', encoding='utf-8') as handle:
        json.dump(payload, handle, indent=2, sort_keys=True)
        handle.write('\n')
    return path


# ==================== COMMANDS ====================

def command_simulate(scenario: Scenario, args: argparse.Namespace) -> int:
    if args.command == 'simulate':
        scenario = replace(scenario, sweep=None)
    result = run_experiment(scenario, workers=args.workers, out_dir=scenario.output.directory)
    print("=" * 60)
    print(f"Scenario {scenario.id}: {len(result.records)} run(s), engine {scenario.engine.value}")
    print("=" * 60)
    for record in result.records:
        queues = ', '.join(f"Q{j}={q:.3f}" for j, q in sorted(record.avg_queue.items()))
        tv = '' if record.tv_to_reference is None else f", TV={record.tv_to_reference:.4f}"
        print(f"  [{record.point}] {record.policy} beta={record.params.beta:g} seed={record.seed}: "
              f"{queues}, cost={record.avg_cost:.4f}, interruptions={record.interruptions}{tv}")
    print(f"\nResults written to {scenario.output.directory}")
    return 0


def command_exact(scenario: Scenario, args: argparse.Namespace) -> int:
    space = ConfigurationSpace(scenario.cluster, scenario.jobs, scenario.max_states)
    policy = scenario.policy
    gamma = gamma_distribution(scenario.cluster, scenario.jobs, space)
    payload = {'configurations': len(space), 'gamma': gamma.to_dict()}
    print(f"Configurations: {len(space)}")
    print(f"gamma_min = {gamma.probabilities.min():.6g}")

    if policy.mode is WeightMode.FIXED and policy.variant in (PolicyVariant.DGP, PolicyVariant.ADGP):
        beta = policy.params.beta
        if policy.variant is PolicyVariant.ADGP:
            base = gamma_hat_distribution(scenario.cluster, scenario.jobs, policy.params.clock_rate, space)
            payload['gamma_hat'] = base.to_dict()
        else:
            base = gamma
        closed = closed_form_pi(base, policy.fixed_weights, beta)
        solved = solve_stationary(build_fixed_weight_generator(scenario, policy.fixed_weights, beta,
                                                               policy.variant, space))
        tv, kl = divergences(solved, closed)
        payload.update(pi_closed_form=closed.to_dict(), pi_solved=solved.to_dict(), tv=tv, kl=kl)
        print(f"pi* (closed form) vs generator solve: TV={tv:.3e}, KL={kl:.3e}, residual={solved.residual:.3e}")

    path = _write_json(scenario.output.directory, f"{scenario.id}_exact.json", payload)
    print(f"Written to {path}")
    return 0


def command_static_opt(scenario: Scenario, args: argparse.Namespace) -> int:
    space = ConfigurationSpace(scenario.cluster, scenario.jobs, scenario.max_states)
    margin = capacity_margin(scenario.cluster, scenario.jobs, space=space)
    payload = {'capacity_margin': margin.to_dict()}
    if margin.negative:
        print(f"Loads lie outside the capacity region (delta* = {margin.delta:.6g})")
    else:
        optimum = static_optimum(scenario.cluster, scenario.jobs, space=space)
        payload['static_optimum'] = optimum.to_dict()
        print(f"G(x*) = {optimum.value:.6g}")
        print(f"delta* = {'unconstrained' if margin.unconstrained else f'{margin.delta:.6g}'}")
    path = _write_json(scenario.output.directory, f"{scenario.id}_static_opt.json", payload)
    print(f"Written to {path}")
    return 3 if margin.negative else 0


def command_bounds(scenario: Scenario, args: argparse.Namespace) -> int:
    supplied = {name: getattr(args, name) for name in ('B1', 'B2', 'C0', 'delta') if getattr(args, name) is not None}
    report = theorem_bounds(args.theorem, scenario, scenario.policy.params, supplied)
    print(f"queue bound = {report.queue_bound:.6g}")
    print(f"cost bound  = {report.cost_bound:.6g}")
    for name, holds in report.preconditions.items():
        print(f"  {name}: {'n/a' if holds is None else holds}")
    path = _write_json(scenario.output.directory, f"{scenario.id}_bounds_{args.theorem}.json", report.to_dict())
    print(f"Written to {path}")
    return 0


COMMANDS = {
    'simulate': command_simulate,
    'sweep': command_simulate,
    'exact': command_exact,
    'static-opt': command_static_opt,
    'bounds': command_bounds,
}


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=getattr(logging, args.log_level), format='%(levelname)s %(name)s: %(message)s')
    try:
        scenario = apply_overrides(load_scenario(args.scenario), args)
        return COMMANDS[args.command](scenario, args)
    except PartitioningError as error:
        print(f"error: {error}", file=sys.stderr)
        return error.exit_code
    except (ValueError, OSError) as error:
        print(f"error: {error}", file=sys.stderr)
        return 2


if __name__ == '__main__':
    sys.exit(main())
