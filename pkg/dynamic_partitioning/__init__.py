"""
Dynamic Partitioning Package

Randomized graph-partitioning schedulers for slotted clusters, with
discrete-event simulation, exact stationary analysis and experiment tooling.
"""

from .cluster import ClusterSpec, Configuration, Edge, JobType, Template, TemplateTag
from .kernel import RandomStreams, SchedulerParams
from .weights import ConstantWeights, LiveWeights, QueueTermWeights, TemplateWeights
from .schedulers import PolicyVariant, SchedulerPolicy, SystemState, WeightMode
from .metrics import MetricsReport, summarize_trace
from .engine import EngineKind, run_continuous, run_jump_chain, run_loss_system
from .exact import (
    BoundReport,
    ConfigurationSpace,
    StationaryDistribution,
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
from .scenario import Scenario, ScenarioValidator, dump_scenario, load_scenario
from .experiment import emit_outputs, run_experiment
from .exceptions import PartitioningError

__all__ = [
    'ClusterSpec', 'Configuration', 'Edge', 'JobType', 'Template', 'TemplateTag',
    'RandomStreams', 'SchedulerParams',
    'ConstantWeights', 'LiveWeights', 'QueueTermWeights', 'TemplateWeights',
    'PolicyVariant', 'SchedulerPolicy', 'SystemState', 'WeightMode',
    'MetricsReport', 'summarize_trace',
    'EngineKind', 'run_continuous', 'run_jump_chain', 'run_loss_system',
    'BoundReport', 'ConfigurationSpace', 'StationaryDistribution', 'build_fixed_weight_generator',
    'capacity_margin', 'closed_form_pi', 'divergences', 'gamma_distribution', 'gamma_hat_distribution',
    'solve_stationary', 'static_optimum', 'theorem_bounds',
    'Scenario', 'ScenarioValidator', 'dump_scenario', 'load_scenario',
    'emit_outputs', 'run_experiment',
    'PartitioningError',
]
__version__ = '1.0.0'
