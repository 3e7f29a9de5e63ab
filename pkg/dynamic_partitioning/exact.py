"""
Exact Analysis Module

Ground truth for small instances: product-form configuration laws, exact
generators of the fixed-weight chains and their stationary solves,
divergences, the static partitioning linear program, the capacity margin
and the performance-bound calculators.

Everything here enumerates the configuration space and refuses (with
StateSpaceTooLargeError) rather than approximates when it is too large.
"""

import logging
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import TYPE_CHECKING, Dict, List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np
from scipy import optimize, sparse
from scipy.sparse import csgraph
from scipy.special import logsumexp

from .cluster import (
    ClusterSpec,
    Configuration,
    ConfigurationKey,
    JobType,
    Template,
    TemplateKey,
    enumerate_configurations,
    enumerate_feasible_templates,
    feasible_template_count,
    DEFAULT_MAX_STATES,
)
from .exceptions import (
    InfeasibleLoadError,
    NumericalError,
    ReducibleChainError,
    SupportMismatchError,
    UnsupportedPolicyError,
)
from .kernel import SchedulerParams, accept_probability, f_derivative, f_eval
from .schedulers import PolicyVariant
from .weights import WeightTable

if TYPE_CHECKING:
    from .scenario import Scenario

logger = logging.getLogger(__name__)

NORMALIZATION_TOLERANCE = 1e-12


# ==================== CONFIGURATION SPACE ====================

class ConfigurationSpace:
    """
    An enumerated configuration space with its add moves.

    Attributes:
        cluster: The cluster
        jobs: Job types by id
        configurations: All configurations in canonical order
        counts: |C^(j)| per configuration (rows) and job type (columns)
        costs: Total partitioning cost per configuration
        free: Free slot count per configuration
    """

    def __init__(self, cluster: ClusterSpec, jobs: Sequence[JobType], max_states: int = DEFAULT_MAX_STATES,
                 configurations: Optional[Sequence[Configuration]] = None):
        self.cluster = cluster
        self.jobs = {job.id: job for job in jobs}
        self.job_ids = sorted(self.jobs)
        if configurations is None:
            configurations = enumerate_configurations(cluster, jobs, max_states)
        self.configurations = list(configurations)
        self.index = {c.key(): i for i, c in enumerate(self.configurations)}
        self.counts = np.array([[c.count(j) for j in self.job_ids] for c in self.configurations], dtype=float)
        self.costs = np.array([c.total_cost() for c in self.configurations])
        self.free = np.array([cluster.total_slots - len(c.occupied_slots) for c in self.configurations])
        self._moves = None

    def __len__(self) -> int:
        return len(self.configurations)

    def position(self, configuration: Union[Configuration, ConfigurationKey]) -> int:
        key = configuration.key() if isinstance(configuration, Configuration) else frozenset(configuration)
        try:
            return self.index[key]
        except KeyError:
            raise SupportMismatchError(f"configuration {sorted(key)} is not in the space") from None

    def add_moves(self) -> List[Tuple[int, int, Template, int]]:
        """
        Every transition C -> C plus A.

        Returns:
            (source index, target index, template, |A^(j)(C)|) tuples
        """
        if self._moves is None:
            moves = []
            for i, config in enumerate(self.configurations):
                for j in self.job_ids:
                    job = self.jobs[j]
                    available = feasible_template_count(int(self.free[i]), job.node_count)
                    for template in enumerate_feasible_templates(config, job, self.cluster):
                        target = self.index[config.key() | {template.key}]
                        moves.append((i, target, template, available))
            self._moves = moves
        return self._moves

    def templates(self) -> List[Template]:
        """Every template that fits the empty cluster."""
        found = []
        for j in self.job_ids:
            found.extend(enumerate_feasible_templates(Configuration.empty(), self.jobs[j], self.cluster))
        return found

    def weight_sums(self, weights: WeightTable) -> np.ndarray:
        """Sum of template weights of every configuration."""
        _require_fixed(weights)
        return np.array([
            sum(weights.weight(t, {}) for t in config) for config in self.configurations
        ])


def _require_fixed(weights: WeightTable):
    if not weights.fixed:
        raise ValueError("exact analysis needs a fixed weight table; freeze live weights at a queue snapshot")


# ==================== DISTRIBUTIONS ====================

@dataclass
class StationaryDistribution:
    """
    A probability vector over an enumerated configuration list.

    Attributes:
        probabilities: Probability of each configuration
        configurations: The configurations, in the same order
        residual: Solver residual (infinity norm of pi Q) or normalization error
    """
    probabilities: np.ndarray
    configurations: List[Configuration] = field(default_factory=list)
    residual: float = 0.0

    def __post_init__(self):
        self.probabilities = np.asarray(self.probabilities, dtype=float)
        if np.any(self.probabilities < 0) or not np.all(np.isfinite(self.probabilities)):
            raise NumericalError("probabilities must be finite and nonnegative")
        if abs(self.probabilities.sum() - 1.0) > NORMALIZATION_TOLERANCE * max(1, len(self.probabilities)):
            raise NumericalError(f"probabilities sum to {self.probabilities.sum()!r}")

    @classmethod
    def from_log_weights(cls, log_weights: np.ndarray, configurations: Sequence[Configuration]) -> 'StationaryDistribution':
        """Normalize unnormalized log weights with log-sum-exp."""
        log_weights = np.asarray(log_weights, dtype=float)
        probabilities = np.exp(log_weights - logsumexp(log_weights))
        total = probabilities.sum()
        return cls(probabilities / total, list(configurations), residual=abs(total - 1.0))

    def __len__(self) -> int:
        return len(self.probabilities)

    def __getitem__(self, index: int) -> float:
        return float(self.probabilities[index])

    def probability(self, configuration: Union[Configuration, ConfigurationKey]) -> float:
        key = configuration.key() if isinstance(configuration, Configuration) else frozenset(configuration)
        for position, config in enumerate(self.configurations):
            if config.key() == key:
                return float(self.probabilities[position])
        return 0.0

    def expectation(self, values: Sequence[float]) -> float:
        return float(np.dot(self.probabilities, np.asarray(values, dtype=float)))

    def as_dict(self) -> Dict[ConfigurationKey, float]:
        return {c.key(): float(p) for c, p in zip(self.configurations, self.probabilities)}

    def to_dict(self) -> Dict:
        return {
            'states': [c.to_dict()['templates'] for c in self.configurations],
            'probabilities': self.probabilities.tolist(),
            'residual': self.residual,
        }


def _space(cluster: ClusterSpec, jobs: Sequence[JobType],
           configurations: Union[None, ConfigurationSpace, Sequence[Configuration]],
           max_states: int) -> ConfigurationSpace:
    if isinstance(configurations, ConfigurationSpace):
        return configurations
    return ConfigurationSpace(cluster, jobs, max_states, configurations)


def product_form_log_weights(space: ConfigurationSpace, loads: Mapping[int, float]) -> np.ndarray:
    """log of (free slots)! * prod_j load_j ** |C^(j)|, -inf where a zero load is raised to a positive power."""
    log_weights = np.array([math.lgamma(f + 1.0) for f in space.free])
    for column, j in enumerate(space.job_ids):
        count = space.counts[:, column]
        if loads[j] > 0:
            log_weights = log_weights + count * math.log(loads[j])
        else:
            log_weights = np.where(count > 0, -np.inf, log_weights)
    return log_weights


def gamma_distribution(cluster: ClusterSpec, jobs: Sequence[JobType],
                       configurations: Union[None, ConfigurationSpace, Sequence[Configuration]] = None,
                       max_states: int = DEFAULT_MAX_STATES) -> StationaryDistribution:
    """
    The loss-system law gamma_C proportional to (free slots)! * prod_j rho_j ** |C^(j)|.

    Computed in the log domain.
    """
    space = _space(cluster, jobs, configurations, max_states)
    loads = {j: space.jobs[j].load for j in space.job_ids}
    return StationaryDistribution.from_log_weights(product_form_log_weights(space, loads), space.configurations)


def gamma_hat_distribution(cluster: ClusterSpec, jobs: Sequence[JobType], clock_rate: float,
                           configurations: Union[None, ConfigurationSpace, Sequence[Configuration]] = None,
                           max_states: int = DEFAULT_MAX_STATES) -> StationaryDistribution:
    """gamma with rho_j replaced by lambda_hat / mu_j, the reference law of the dedicated-clock chain."""
    space = _space(cluster, jobs, configurations, max_states)
    loads = {j: clock_rate / space.jobs[j].service_rate for j in space.job_ids}
    return StationaryDistribution.from_log_weights(product_form_log_weights(space, loads), space.configurations)


def closed_form_pi(gamma: StationaryDistribution, weights: WeightTable, beta: float) -> StationaryDistribution:
    """
    pi*(C) proportional to gamma(C) * exp(sum of template weights in C / beta).

    Raises:
        ValueError: If the table is not fixed or a template has no weight
    """
    _require_fixed(weights)
    sums = np.array([sum(weights.weight(t, {}) for t in config) for config in gamma.configurations])
    with np.errstate(divide='ignore'):
        log_gamma = np.log(gamma.probabilities)
    return StationaryDistribution.from_log_weights(log_gamma + sums / beta, gamma.configurations)


def empirical_distribution(space: ConfigurationSpace,
                           occupancy: Mapping[ConfigurationKey, float]) -> StationaryDistribution:
    """
    Align measured time fractions with an enumerated space.

    Raises:
        SupportMismatchError: If a visited configuration is not in the space
        NumericalError: If nothing was observed
    """
    fractions = np.zeros(len(space))
    for key, value in occupancy.items():
        fractions[space.position(key)] += value
    total = fractions.sum()
    if total <= 0:
        raise NumericalError("empty occupancy measurement")
    return StationaryDistribution(fractions / total, space.configurations, residual=abs(total - 1.0))


# ==================== GENERATORS AND SOLVES ====================

@dataclass
class Generator:
    """
    A rate matrix over an enumerated configuration space.

    Attributes:
        rates: Off-diagonal transition rates, diagonal = -row sum
        space: The configuration space indexing rows and columns
    """
    rates: np.ndarray
    space: Optional[ConfigurationSpace] = None

    @property
    def configurations(self) -> List[Configuration]:
        return self.space.configurations if self.space is not None else []


def build_fixed_weight_generator(scenario: 'Scenario', weights: WeightTable, beta: float,
                                 variant: PolicyVariant = PolicyVariant.DGP,
                                 space: Optional[ConfigurationSpace] = None) -> Generator:
    """
    Exact generator of the configuration chain under pinned weights.

    DGP: C -> C+A at (lambda_j / |A^(j)(C)|) * sigma(w_A / beta) and
    C+A -> C at mu_j * (1 - sigma(w_A / beta)), sigma the logistic.
    ADGP: C -> C+A at lambda_hat * exp(w_A / beta) / |A^(j)(C)| and
    C+A -> C at mu_j.

    Raises:
        StateSpaceTooLargeError: If the space cannot be enumerated
        UnsupportedPolicyError: For other policy variants
    """
    _require_fixed(weights)
    variant = PolicyVariant(variant)
    if variant not in (PolicyVariant.DGP, PolicyVariant.ADGP):
        raise UnsupportedPolicyError(f"no fixed-weight generator for {variant.value}")
    if space is None:
        space = ConfigurationSpace(scenario.cluster, scenario.jobs, scenario.max_states)
    clock_rate = scenario.policy.params.clock_rate

    rates = np.zeros((len(space), len(space)))
    for source, target, template, available in space.add_moves():
        job = space.jobs[template.job_type_id]
        w = weights.weight(template, {})
        if variant is PolicyVariant.DGP:
            p = accept_probability(w, beta)
            add = job.arrival_rate / available * p
            # 1 - sigma(z) == sigma(-z), kept exact for large |z|
            remove = job.service_rate * accept_probability(-w, beta)
        else:
            add = clock_rate * math.exp(w / beta) / available
            remove = job.service_rate
        rates[source, target] += add
        rates[target, source] += remove
    np.fill_diagonal(rates, -rates.sum(axis=1))
    logger.debug("built %s-bar generator over %d configurations", variant.value, len(space))
    return Generator(rates, space)


def is_irreducible(rates: np.ndarray) -> bool:
    """Strong connectivity of the transition graph."""
    graph = sparse.csr_matrix(rates - np.diag(np.diag(rates)) > 0)
    components, _ = csgraph.connected_components(graph, directed=True, connection='strong')
    return components == 1


def solve_stationary(generator: Union[Generator, np.ndarray]) -> StationaryDistribution:
    """
    Solve pi Q = 0, sum(pi) = 1 by Grassmann-Taksar-Heyman elimination.

    The elimination never subtracts, so the result is accurate to working
    precision even for stiff rates.

    Raises:
        ReducibleChainError: If the chain is not irreducible
    """
    if isinstance(generator, Generator):
        rates, configurations = generator.rates, generator.configurations
    else:
        rates, configurations = np.asarray(generator, dtype=float), []
    n = rates.shape[0]
    if n == 0:
        raise ReducibleChainError("empty generator")
    if not is_irreducible(rates):
        raise ReducibleChainError("generator is not irreducible")

    work = rates.copy()
    np.fill_diagonal(work, 0.0)
    for k in range(n - 1, 0, -1):
        outflow = work[k, :k].sum()
        if outflow <= 0:
            raise ReducibleChainError(f"state {k} cannot reach lower states")
        work[:k, k] /= outflow
        work[:k, :k] += np.outer(work[:k, k], work[k, :k])
    pi = np.zeros(n)
    pi[0] = 1.0
    for k in range(1, n):
        pi[k] = pi[:k] @ work[:k, k]
    pi /= pi.sum()
    residual = float(np.abs(pi @ rates).max())
    return StationaryDistribution(pi, list(configurations), residual=residual)


# ==================== DIVERGENCES ====================

def _vector(p) -> np.ndarray:
    return p.probabilities if isinstance(p, StationaryDistribution) else np.asarray(p, dtype=float)


def total_variation(p, q) -> float:
    p, q = _vector(p), _vector(q)
    if p.shape != q.shape:
        raise SupportMismatchError(f"supports differ: {p.shape} vs {q.shape}")
    return float(0.5 * np.abs(p - q).sum())


def kl_divergence(p, q) -> float:
    """
    sum p log(p / q) over the support of p.

    Raises:
        SupportMismatchError: If q vanishes where p does not
    """
    p, q = _vector(p), _vector(q)
    if p.shape != q.shape:
        raise SupportMismatchError(f"supports differ: {p.shape} vs {q.shape}")
    support = p > 0
    if np.any(q[support] <= 0):
        raise SupportMismatchError("q vanishes where p is positive")
    return float(np.sum(p[support] * np.log(p[support] / q[support])))


def divergences(p, q) -> Tuple[float, float]:
    """(total variation, Kullback-Leibler) of p from q."""
    return total_variation(p, q), kl_divergence(p, q)


# ==================== STATIC OPTIMUM AND CAPACITY ====================

@dataclass
class StaticOptimum:
    """
    Solution of the static partitioning program.

    Attributes:
        value: G(x*), the least time-averaged partitioning cost
        time_sharing: Optimal distribution over configurations
        occupancy: x_A of every template used with positive fraction
        loads: The load vector served
    """
    value: float
    time_sharing: np.ndarray
    configurations: List[Configuration]
    occupancy: Dict[TemplateKey, float]
    loads: Dict[int, float]

    def to_dict(self) -> Dict:
        return {
            'value': self.value,
            'loads': {str(j): r for j, r in self.loads.items()},
            'occupancy': [
                {'job_type': j, 'assignment': [list(s) for s in assignment], 'fraction': x}
                for (j, assignment), x in sorted(self.occupancy.items())
            ],
        }


def _loads(space: ConfigurationSpace, loads: Optional[Mapping[int, float]]) -> Dict[int, float]:
    if loads is None:
        return {j: space.jobs[j].load for j in space.job_ids}
    return {j: float(loads[j]) for j in space.job_ids}


def static_optimum(cluster: ClusterSpec, jobs: Sequence[JobType], loads: Optional[Mapping[int, float]] = None,
                   max_states: int = DEFAULT_MAX_STATES,
                   space: Optional[ConfigurationSpace] = None) -> StaticOptimum:
    """
    Minimize sum_C pi(C) cost(C) subject to sum_C pi(C) |C^(j)| >= rho_j,
    sum pi = 1 and pi >= 0, over the enumerated configurations.

    Args:
        cluster: The cluster
        jobs: Job types
        loads: rho per job type id (defaults to lambda / mu)
        max_states: Enumeration budget
        space: A prebuilt configuration space

    Returns:
        StaticOptimum with the x_A witness

    Raises:
        InfeasibleLoadError: If the loads lie outside the capacity region
        StateSpaceTooLargeError: If the space cannot be enumerated
    """
    space = space or ConfigurationSpace(cluster, jobs, max_states)
    rho = _loads(space, loads)
    result = optimize.linprog(
        c=space.costs,
        A_ub=-space.counts.T,
        b_ub=-np.array([rho[j] for j in space.job_ids]),
        A_eq=np.ones((1, len(space))),
        b_eq=[1.0],
        bounds=(0, None),
        method='highs-ds',
    )
    if result.status == 2:
        raise InfeasibleLoadError(f"loads {rho} lie outside the capacity region")
    if result.status != 0:
        raise NumericalError(f"static partitioning program failed: {result.message}")

    pi = np.clip(result.x, 0.0, None)
    occupancy: Dict[TemplateKey, float] = {}
    for config, share in zip(space.configurations, pi):
        if share > 0:
            for key in config.templates:
                occupancy[key] = occupancy.get(key, 0.0) + float(share)
    return StaticOptimum(float(result.fun), pi, space.configurations, occupancy, rho)


@dataclass
class CapacityMargin:
    """
    Largest delta with rho (1 + delta) inside the capacity region.

    Attributes:
        delta: The margin; infinite when unconstrained
        unconstrained: All loads are zero
        negative: The loads already lie outside the region
    """
    delta: float
    unconstrained: bool = False
    negative: bool = False

    def to_dict(self) -> Dict:
        return {
            'delta': 'unconstrained' if self.unconstrained else self.delta,
            'unconstrained': self.unconstrained,
            'negative': self.negative,
        }


def is_feasible_load(space: ConfigurationSpace, loads: Mapping[int, float]) -> bool:
    """Whether some time sharing over configurations serves the loads."""
    result = optimize.linprog(
        c=np.zeros(len(space)),
        A_ub=-space.counts.T,
        b_ub=-np.array([loads[j] for j in space.job_ids]),
        A_eq=np.ones((1, len(space))),
        b_eq=[1.0],
        bounds=(0, None),
        method='highs-ds',
    )
    return result.status == 0


def capacity_margin(cluster: ClusterSpec, jobs: Sequence[JobType], loads: Optional[Mapping[int, float]] = None,
                    max_states: int = DEFAULT_MAX_STATES, space: Optional[ConfigurationSpace] = None,
                    tolerance: float = 1e-9) -> CapacityMargin:
    """
    Bisect on delta using load feasibility.

    The upper end of the search comes from the largest per-type template
    count, which bounds every feasible scale factor.
    """
    space = space or ConfigurationSpace(cluster, jobs, max_states)
    rho = _loads(space, loads)
    positive = [j for j in space.job_ids if rho[j] > 0]
    if not positive:
        return CapacityMargin(math.inf, unconstrained=True)

    def feasible(scale: float) -> bool:
        return is_feasible_load(space, {j: rho[j] * scale for j in space.job_ids})

    largest = space.counts.max(axis=0)
    high = min(largest[space.job_ids.index(j)] / rho[j] for j in positive)
    if high <= 0:
        return CapacityMargin(-1.0, negative=True)
    if feasible(high):
        low = high
    else:
        low = 0.0
        while high - low > tolerance * max(1.0, high):
            middle = 0.5 * (low + high)
            if feasible(middle):
                low = middle
            else:
                high = middle
    delta = low - 1.0
    return CapacityMargin(delta, negative=delta < 0)


# ==================== WEIGHT SUMS ====================

def expected_weight(pi: StationaryDistribution, weights: WeightTable) -> float:
    """E_pi of the configuration weight sum."""
    sums = np.array([sum(weights.weight(t, {}) for t in config) for config in pi.configurations])
    return pi.expectation(sums)


def max_weight(space: ConfigurationSpace, weights: WeightTable) -> float:
    """max_C of the configuration weight sum."""
    return float(space.weight_sums(weights).max())


def weight_lower_bound(space: ConfigurationSpace, gamma: StationaryDistribution,
                       weights: WeightTable, beta: float) -> float:
    """max_C sum w + beta * log(gamma_min), which E_pi*[sum w] never falls below."""
    return max_weight(space, weights) + beta * math.log(float(gamma.probabilities.min()))


# ==================== BOUNDS ====================

class BoundTheorem(str, Enum):
    FRAME_BASED = 'frame'
    DGP = 'dgp'


@dataclass
class BoundReport:
    """
    Evaluated queue and cost bounds with their constants.

    Attributes:
        theorem: Which bound was evaluated
        params: Echo of alpha, beta, epsilon, h, b and T
        constants: G(x*), gamma_min, b_max, K2, K3, delta*, rho_min and
            any user-supplied constants
        queue_bound: Bound on sum_j E f(Q_j)
        cost_bound: Bound on the average partitioning cost
        preconditions: Name to whether it holds (None when not evaluable)
    """
    theorem: BoundTheorem
    params: Dict[str, float]
    constants: Dict[str, float]
    queue_bound: float
    cost_bound: float
    preconditions: Dict[str, Optional[bool]] = field(default_factory=dict)

    def to_dict(self) -> Dict:
        return {
            'theorem': self.theorem.value,
            'params': dict(self.params),
            'constants': dict(self.constants),
            'queue_bound': self.queue_bound,
            'cost_bound': self.cost_bound,
            'preconditions': dict(self.preconditions),
        }


def h_condition_holds(h: float, c0: float, beta: float, epsilon: float, b: float) -> bool:
    """log h >= C0 (1/beta) (1/epsilon) ** ((2 - b + 1/b) / (1 - b)), compared in log space."""
    exponent = (2.0 - b + 1.0 / b) / (1.0 - b)
    return math.log(h) >= c0 / beta * (1.0 / epsilon) ** exponent


def theorem_bounds(which: Union[BoundTheorem, str], scenario: 'Scenario', params: SchedulerParams,
                   supplied: Optional[Mapping[str, float]] = None,
                   space: Optional[ConfigurationSpace] = None) -> BoundReport:
    """
    Evaluate the right-hand sides of the performance bounds.

    Args:
        which: frame (needs B1, B2) or dgp (C0 optional, for the h precondition)
        scenario: Cluster and job types
        params: alpha, beta, epsilon, h, b, T
        supplied: User constants B1, B2, C0 and optionally delta to use
            instead of the computed margin
        space: A prebuilt configuration space

    Raises:
        InfeasibleLoadError: If the margin is not positive
        ValueError: If a required constant is missing
    """
    which = BoundTheorem(which)
    supplied = dict(supplied or {})
    space = space or ConfigurationSpace(scenario.cluster, scenario.jobs, scenario.max_states)
    rho = _loads(space, None)
    if min(rho.values()) <= 0:
        raise InfeasibleLoadError("bounds need every load to be positive")

    margin = capacity_margin(scenario.cluster, scenario.jobs, rho, space=space)
    delta = supplied.get('delta', margin.delta)
    if delta <= 0:
        raise InfeasibleLoadError(f"capacity margin {delta} is not positive")
    in_region = is_feasible_load(space, {j: r * (1.0 + delta) for j, r in rho.items()})

    optimum = static_optimum(scenario.cluster, scenario.jobs, rho, space=space)
    g = optimum.value
    rho_min = min(rho.values())
    total_slots = scenario.cluster.total_slots
    alpha, beta, epsilon, h, b = params.alpha, params.beta, params.epsilon, params.h, params.b
    constants = {'G': g, 'delta': delta, 'rho_min': rho_min}
    echo = {'alpha': alpha, 'beta': beta, 'epsilon': epsilon, 'h': h, 'b': b, 'T': params.frame_length}

    if which is BoundTheorem.FRAME_BASED:
        try:
            b1, b2 = supplied['B1'], supplied['B2']
        except KeyError as missing:
            raise ValueError(f"frame-based bounds need constant {missing}") from None
        t = params.frame_length
        constants.update(B1=b1, B2=b2)
        queue = ((b1 + b2 * t) + (1.0 + delta) * g / alpha) / (delta * rho_min) + b1 * t
        cost = g + alpha * (b1 + b2 * t)
        return BoundReport(which, echo, constants, queue, cost, {'load_in_region': in_region})

    gamma = gamma_distribution(scenario.cluster, scenario.jobs, space)
    log_gamma_min = math.log(float(gamma.probabilities.min()))
    b_max = max((t.cost for t in space.templates()), default=0.0)
    k2 = f_derivative(h, b) * (total_slots + sum(rho.values()))
    k3 = f_eval(total_slots + h, b) * total_slots
    constants.update(gamma_min=math.exp(log_gamma_min), b_max=b_max, K2=k2, K3=k3)
    queue = 2.0 / (rho_min * delta) * (
        k2 + k3 - beta / alpha * log_gamma_min + (1.0 + delta / 2.0) * g / alpha + epsilon / alpha * b_max
    )
    cost = g + alpha * (k2 + k3) - beta * log_gamma_min + epsilon * b_max

    preconditions: Dict[str, Optional[bool]] = {
        'load_in_region': in_region,
        'delta_in_unit_interval': 0 < delta < 1,
        'alpha_le_beta_lt_1': alpha <= beta < 1,
        'epsilon_le_delta': epsilon <= delta,
        'h_condition': None,
    }
    if 'C0' in supplied:
        constants['C0'] = supplied['C0']
        preconditions['h_condition'] = h_condition_holds(h, supplied['C0'], beta, epsilon, b)
    if preconditions['h_condition'] is False:
        logger.warning("h=%g is below the bias precondition for C0=%g", h, supplied['C0'])
    return BoundReport(which, echo, constants, queue, cost, preconditions)
