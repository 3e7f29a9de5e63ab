"""
Stochastic Kernel Module

Weight functions, acceptance probabilities, the random partition procedure
and the seeded random streams shared by every scheduler and engine.
"""

import logging
import math
from dataclasses import asdict, dataclass
from typing import Dict, List, Mapping, Optional, Sequence, Union

import numpy as np

from .cluster import ClusterSpec, Configuration, JobType, Template, template_cost
from .exceptions import DomainError

logger = logging.getLogger(__name__)

SUBSTREAMS = ('arrivals', 'departures', 'placement', 'acceptance', 'clocks')

# smallest and largest doubles strictly inside (0, 1)
_P_FLOOR = math.ulp(0.0)
_P_CEILING = 1.0 - 2.0 ** -53


def params_problems(alpha: float, beta: float, epsilon: float, h: float, b: float,
                    frame_length: float, clock_rate: float) -> List[str]:
    """List every parameter constraint that is violated."""
    problems = []
    if not alpha > 0:
        problems.append(f"alpha must be positive, got {alpha}")
    if not beta > 0:
        problems.append(f"beta must be positive, got {beta}")
    if not 0 < epsilon < 1:
        problems.append(f"epsilon must lie in (0, 1), got {epsilon}")
    if not h >= 1:
        problems.append(f"h must be at least 1, got {h}")
    if not 0 < b < 1:
        problems.append(f"b must lie in (0, 1), got {b}")
    if not frame_length > 0:
        problems.append(f"frame length T must be positive, got {frame_length}")
    if not clock_rate > 0:
        problems.append(f"clock rate must be positive, got {clock_rate}")
    return problems


@dataclass(frozen=True)
class SchedulerParams:
    """
    Tuning parameters shared by the schedulers.

    Attributes:
        alpha: Queue weight scale; defaults to beta ** 2
        beta: Temperature of the acceptance rule
        epsilon: Weight mixing floor in f_group
        h: Queue bias
        b: Exponent in f(x) = log(x) ** (1 - b)
        frame_length: Frame length T (frame-based only)
        clock_rate: Base rate of the dedicated clocks (ADGP only)
    """
    alpha: Optional[float] = None
    beta: float = 1.0
    epsilon: float = 0.1
    h: float = math.e
    b: float = 0.5
    frame_length: float = 1.0
    clock_rate: float = 1.0

    def __post_init__(self):
        if self.alpha is None:
            object.__setattr__(self, 'alpha', self.beta ** 2)
        problems = params_problems(self.alpha, self.beta, self.epsilon, self.h, self.b,
                                   self.frame_length, self.clock_rate)
        if problems:
            raise ValueError("; ".join(problems))

    @classmethod
    def tied_to_beta(cls, beta: float, b: float = 0.5, **overrides) -> 'SchedulerParams':
        """
        Parameters tied to beta: alpha = beta^2, h = exp((1/beta)^(1/(1-b))),
        epsilon = beta^(b^2/4).
        """
        values = dict(
            alpha=beta ** 2,
            beta=beta,
            epsilon=beta ** (b * b / 4),
            h=math.exp((1.0 / beta) ** (1.0 / (1.0 - b))),
            b=b,
        )
        values.update(overrides)
        return cls(**values)

    def to_dict(self) -> Dict[str, float]:
        return asdict(self)


def f_eval(x: float, b: float) -> float:
    """
    Evaluate f(x) = log(x) ** (1 - b).

    Raises:
        DomainError: If x < 1
    """
    if x < 1:
        raise DomainError(f"f is defined for x >= 1, got {x}")
    return math.log(x) ** (1.0 - b)


def f_derivative(x: float, b: float) -> float:
    """f'(x) = (1 - b) log(x) ** (-b) / x; infinite at x = 1."""
    if x < 1:
        raise DomainError(f"f is defined for x >= 1, got {x}")
    if x == 1:
        return math.inf
    return (1.0 - b) * math.log(x) ** (-b) / x


def f_group(j: int, x: Union[Sequence[float], Mapping[int, float]], b: float,
            epsilon: float, total_slots: int) -> float:
    """
    Evaluate max(f(x_j), epsilon / (8M) * f(x_max)).

    Args:
        j: Index (sequence) or job type id (mapping) of the component
        x: Component values, all at least 1
        b: Exponent of f
        epsilon: Mixing floor
        total_slots: M

    Returns:
        The mixed queue weight of component j
    """
    values = list(x.values()) if isinstance(x, Mapping) else list(x)
    own = f_eval(x[j], b)
    largest = f_eval(max(values), b)
    return max(own, epsilon / (8.0 * total_slots) * largest)


def tilde_weight(j: int, cost: float, queues: Union[Sequence[int], Mapping[int, int]],
                 params: SchedulerParams, total_slots: int) -> float:
    """
    Weight of a type-j template: alpha * f_group(j, h + Q) - cost.

    The result may be negative.
    """
    if isinstance(queues, Mapping):
        biased = {k: params.h + q for k, q in queues.items()}
    else:
        biased = [params.h + q for q in queues]
    return params.alpha * f_group(j, biased, params.b, params.epsilon, total_slots) - cost


def accept_probability(w: float, beta: float) -> float:
    """
    Logistic acceptance exp(w/beta) / (1 + exp(w/beta)).

    Computed on the branch that never exponentiates a positive number and
    clamped to the open interval (0, 1).
    """
    z = w / beta
    if z >= 0:
        p = 1.0 / (1.0 + math.exp(-z))
    else:
        e = math.exp(z)
        p = e / (1.0 + e)
    return min(max(p, _P_FLOOR), _P_CEILING)


def random_partition(config: Configuration, job: JobType, cluster: ClusterSpec,
                     rng: np.random.Generator) -> Optional[Template]:
    """
    Place a job graph node by node, each on a uniformly chosen free slot.

    Sequential uniform choice of distinct slots makes every feasible
    template equally likely.

    Args:
        config: Current configuration
        job: Job type to place
        cluster: The cluster
        rng: Placement stream

    Returns:
        A virtual template, or None when fewer than |V_j| slots are free
    """
    free = config.free_slots(cluster)
    if len(free) < job.node_count:
        return None
    assignment = []
    for _ in range(job.node_count):
        assignment.append(free.pop(int(rng.integers(len(free)))))
    assignment = tuple(assignment)
    return Template(job.id, assignment, template_cost(assignment, job, cluster))


class RandomStreams:
    """
    Named, independent random streams derived from one seed.

    Each stochastic concern draws from its own counter-based (Philox)
    stream, so adding a draw to one concern never shifts the draws of
    another.

    Example:
        >>> streams = RandomStreams(7)
        >>> u = streams.acceptance.random()
    """

    def __init__(self, seed: int):
        self.seed = seed
        children = np.random.SeedSequence(seed).spawn(len(SUBSTREAMS))
        self._streams = {
            name: np.random.Generator(np.random.Philox(child))
            for name, child in zip(SUBSTREAMS, children)
        }

    def stream(self, name: str) -> np.random.Generator:
        return self._streams[name]

    @property
    def arrivals(self) -> np.random.Generator:
        return self._streams['arrivals']

    @property
    def departures(self) -> np.random.Generator:
        return self._streams['departures']

    @property
    def placement(self) -> np.random.Generator:
        return self._streams['placement']

    @property
    def acceptance(self) -> np.random.Generator:
        return self._streams['acceptance']

    @property
    def clocks(self) -> np.random.Generator:
        return self._streams['clocks']
