"""
Cluster Model Module

Core value types for slotted clusters, job graphs, templates and
configurations, together with the configuration algebra and the
partitioning cost of a template.
"""

import itertools
import math
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Dict, FrozenSet, Iterable, Iterator, List, Mapping, Optional, Sequence, Tuple, Union

from .exceptions import (
    InvalidTemplateError,
    SlotCollisionError,
    StateSpaceTooLargeError,
    UnknownTemplateError,
)

# (machine-id, slot-index)
Slot = Tuple[int, int]
# (job-type-id, slot per node)
TemplateKey = Tuple[int, Tuple[Slot, ...]]
ConfigurationKey = FrozenSet[TemplateKey]

DEFAULT_MAX_STATES = 100_000


def cluster_problems(machines: Sequence[Tuple[int, int]]) -> List[str]:
    """
    List every invariant a machine list violates.

    Args:
        machines: Sequence of (machine-id, slot-count) pairs

    Returns:
        Human readable problems, empty when the list is valid
    """
    problems = []
    if not machines:
        problems.append("cluster must have at least one machine")
    seen = set()
    for position, (machine_id, slot_count) in enumerate(machines):
        if machine_id in seen:
            problems.append(f"machines[{position}]: duplicate machine id {machine_id}")
        seen.add(machine_id)
        if not isinstance(slot_count, int) or slot_count < 1:
            problems.append(f"machines[{position}]: slot count must be a positive integer, got {slot_count!r}")
    return problems


@dataclass(frozen=True)
class ClusterSpec:
    """
    A cluster of machines, each offering a number of identical slots.

    Attributes:
        machines: Ordered (machine-id, slot-count) pairs
    """
    machines: Tuple[Tuple[int, int], ...]

    def __post_init__(self):
        object.__setattr__(self, 'machines', tuple((int(m), s) for m, s in self.machines))
        problems = cluster_problems(self.machines)
        if problems:
            raise ValueError("; ".join(problems))

    @classmethod
    def uniform(cls, machine_count: int, slots_per_machine: int) -> 'ClusterSpec':
        """Build a cluster of identical machines numbered from 0."""
        return cls(tuple((m, slots_per_machine) for m in range(machine_count)))

    @property
    def total_slots(self) -> int:
        """Total slot count M."""
        return sum(count for _, count in self.machines)

    def slots(self) -> Tuple[Slot, ...]:
        """All slots in canonical (machine order, slot index) order."""
        return tuple((machine_id, index) for machine_id, count in self.machines for index in range(count))

    def has_slot(self, slot: Slot) -> bool:
        machine_id, index = slot
        for candidate, count in self.machines:
            if candidate == machine_id:
                return 0 <= index < count
        return False

    def to_dict(self) -> Dict:
        return {'machines': [{'id': m, 'slots': s} for m, s in self.machines]}


@dataclass(frozen=True)
class Edge:
    """An undirected, weighted edge between two nodes of a job graph."""
    u: int
    v: int
    weight: float = 1.0


def job_problems(job_id: int, node_count: int, edges: Sequence[Edge],
                 arrival_rate: float, service_rate: float) -> List[str]:
    """
    List every invariant a job type definition violates.

    Edges are direction blind: (u, v) and (v, u) count as the same edge.
    """
    problems = []
    if not isinstance(node_count, int) or node_count < 1:
        problems.append(f"node count must be a positive integer, got {node_count!r}")
        node_count = 0
    seen = set()
    for position, edge in enumerate(edges):
        where = f"edges[{position}]"
        if edge.u == edge.v:
            problems.append(f"{where}: self loop on node {edge.u}")
        for end in (edge.u, edge.v):
            if not 0 <= end < node_count:
                problems.append(f"{where}: node index {end} out of range [0, {node_count})")
        pair = frozenset((edge.u, edge.v))
        if pair in seen:
            problems.append(f"{where}: duplicate edge ({edge.u}, {edge.v})")
        seen.add(pair)
        if edge.weight < 0:
            problems.append(f"{where}: weight must be nonnegative, got {edge.weight}")
    if arrival_rate < 0:
        problems.append(f"arrival rate must be nonnegative, got {arrival_rate}")
    if service_rate <= 0:
        problems.append(f"service rate must be positive, got {service_rate}")
    return problems


@dataclass(frozen=True)
class JobType:
    """
    A job graph together with its Poisson arrival rate and exponential service rate.

    Attributes:
        id: Job type identifier
        node_count: Number of nodes |V_j|, each needing one slot
        edges: Data flows between nodes
        arrival_rate: lambda_j, jobs per unit time
        service_rate: mu_j, inverse mean holding time
    """
    id: int
    node_count: int
    edges: Tuple[Edge, ...] = ()
    arrival_rate: float = 1.0
    service_rate: float = 1.0

    def __post_init__(self):
        edges = tuple(e if isinstance(e, Edge) else Edge(*e) for e in self.edges)
        object.__setattr__(self, 'edges', edges)
        problems = job_problems(self.id, self.node_count, edges, self.arrival_rate, self.service_rate)
        if problems:
            raise ValueError(f"job type {self.id}: " + "; ".join(problems))

    @property
    def load(self) -> float:
        """rho_j = lambda_j / mu_j."""
        return self.arrival_rate / self.service_rate

    def fits(self, cluster: ClusterSpec) -> bool:
        """Whether the graph is strictly smaller than the cluster (|V_j| < M)."""
        return self.node_count < cluster.total_slots

    def with_rates(self, arrival_rate: Optional[float] = None,
                   service_rate: Optional[float] = None) -> 'JobType':
        return replace(
            self,
            arrival_rate=self.arrival_rate if arrival_rate is None else arrival_rate,
            service_rate=self.service_rate if service_rate is None else service_rate,
        )

    def to_dict(self) -> Dict:
        return {
            'id': self.id,
            'nodes': self.node_count,
            'edges': [[e.u, e.v, e.weight] for e in self.edges],
            'arrival_rate': self.arrival_rate,
            'service_rate': self.service_rate,
        }


class TemplateTag(str, Enum):
    """Whether a template holds a running job or reserves empty slots."""
    ACTUAL = 'actual'
    VIRTUAL = 'virtual'


@dataclass(frozen=True)
class Template:
    """
    An injective placement of one job graph's nodes onto concrete slots.

    Attributes:
        job_type_id: The job type this template partitions
        assignment: Slot of each node, indexed by node
        cost: Cached partitioning cost of the assignment
        tag: Actual (running a job) or virtual (reserved)
        job_id: Resident job when actual
    """
    job_type_id: int
    assignment: Tuple[Slot, ...]
    cost: float = 0.0
    tag: TemplateTag = TemplateTag.VIRTUAL
    job_id: Optional[int] = None

    @property
    def key(self) -> TemplateKey:
        """Template identity: job type plus full slot assignment."""
        return (self.job_type_id, self.assignment)

    @property
    def slots(self) -> FrozenSet[Slot]:
        return frozenset(self.assignment)

    @property
    def is_actual(self) -> bool:
        return self.tag is TemplateTag.ACTUAL

    def as_actual(self, job_id: int) -> 'Template':
        return replace(self, tag=TemplateTag.ACTUAL, job_id=job_id)

    def as_virtual(self) -> 'Template':
        return replace(self, tag=TemplateTag.VIRTUAL, job_id=None)


def template_cost(template: Union[Template, Sequence[Slot]], job: JobType, cluster: ClusterSpec) -> float:
    """
    Compute the partitioning cost of a template.

    The cost is the total weight of edges whose endpoints sit on
    different machines.

    Args:
        template: A Template or a bare node-to-slot assignment
        job: The job type being partitioned
        cluster: The cluster the slots belong to

    Returns:
        Sum of broken edge weights

    Raises:
        InvalidTemplateError: If a node is unassigned, a slot does not
            exist, or two nodes share a slot
    """
    assignment = template.assignment if isinstance(template, Template) else tuple(template)
    if isinstance(template, Template) and template.job_type_id != job.id:
        raise InvalidTemplateError(f"template is for job type {template.job_type_id}, not {job.id}")
    if len(assignment) != job.node_count:
        raise InvalidTemplateError(
            f"job type {job.id} has {job.node_count} nodes but {len(assignment)} are assigned"
        )
    for node, slot in enumerate(assignment):
        if not cluster.has_slot(slot):
            raise InvalidTemplateError(f"node {node} assigned to unknown slot {slot}")
    if len(set(assignment)) != len(assignment):
        raise InvalidTemplateError("assignment is not injective")

    cost = 0.0
    for edge in job.edges:
        if assignment[edge.u][0] != assignment[edge.v][0]:
            cost += edge.weight
    return cost


def make_template(job: JobType, cluster: ClusterSpec, assignment: Sequence[Slot],
                  tag: TemplateTag = TemplateTag.VIRTUAL) -> Template:
    """Build a template with its cost filled in."""
    assignment = tuple(tuple(slot) for slot in assignment)
    return Template(job.id, assignment, template_cost(assignment, job, cluster), tag)


@dataclass(frozen=True)
class Configuration:
    """
    The slot-disjoint set of templates currently reserved in the cluster.

    Templates are keyed by identity; tags (actual or virtual) live on the
    templates themselves. Instances are immutable: the algebra returns new
    configurations.

    Attributes:
        templates: Template identity to template
    """
    templates: Mapping[TemplateKey, Template] = field(default_factory=dict)
    _occupied: FrozenSet[Slot] = field(init=False, repr=False, compare=False, default=frozenset())

    def __post_init__(self):
        occupied = set()
        for template in self.templates.values():
            clash = occupied.intersection(template.assignment)
            if clash:
                raise SlotCollisionError(clash)
            occupied.update(template.assignment)
        object.__setattr__(self, '_occupied', frozenset(occupied))

    @classmethod
    def empty(cls) -> 'Configuration':
        return cls({})

    @classmethod
    def of(cls, templates: Iterable[Template]) -> 'Configuration':
        return cls({t.key: t for t in templates})

    def __len__(self) -> int:
        return len(self.templates)

    def __contains__(self, template_id) -> bool:
        return template_id in self.templates

    def __iter__(self) -> Iterator[Template]:
        for template_id in sorted(self.templates):
            yield self.templates[template_id]

    def key(self) -> ConfigurationKey:
        """Configuration identity, ignoring tags and clocks."""
        return frozenset(self.templates)

    def get(self, template_id: TemplateKey) -> Template:
        try:
            return self.templates[template_id]
        except KeyError:
            raise UnknownTemplateError(template_id) from None

    @property
    def occupied_slots(self) -> FrozenSet[Slot]:
        return self._occupied

    def free_slots(self, cluster: ClusterSpec) -> List[Slot]:
        """Free slots of the cluster in canonical order."""
        return [slot for slot in cluster.slots() if slot not in self._occupied]

    def of_type(self, job_type_id: int) -> List[Template]:
        return [t for t in self if t.job_type_id == job_type_id]

    def actual(self, job_type_id: int) -> List[Template]:
        return [t for t in self.of_type(job_type_id) if t.is_actual]

    def virtual(self, job_type_id: int) -> List[Template]:
        return [t for t in self.of_type(job_type_id) if not t.is_actual]

    def count(self, job_type_id: int) -> int:
        """|C^(j)|, actual and virtual together."""
        return sum(1 for t in self.templates.values() if t.job_type_id == job_type_id)

    def total_cost(self) -> float:
        """Instantaneous partitioning cost, summed in canonical key order."""
        return sum(t.cost for t in self)

    def replace_template(self, template: Template) -> 'Configuration':
        """Swap in a template with the same identity (tag or clock change)."""
        if template.key not in self.templates:
            raise UnknownTemplateError(template.key)
        templates = dict(self.templates)
        templates[template.key] = template
        return Configuration(templates)

    def to_dict(self) -> Dict:
        return {
            'templates': [
                {
                    'job_type': t.job_type_id,
                    'assignment': [list(slot) for slot in t.assignment],
                    'cost': t.cost,
                    'tag': t.tag.value,
                }
                for t in self
            ]
        }


def add_template(config: Configuration, template: Template) -> Configuration:
    """
    Add a template to a configuration (C plus A).

    Raises:
        SlotCollisionError: If any of the template's slots is occupied
    """
    clash = config.occupied_slots.intersection(template.assignment)
    if clash:
        raise SlotCollisionError(clash)
    templates = dict(config.templates)
    templates[template.key] = template
    return Configuration(templates)


def remove_template(config: Configuration, template_id: TemplateKey) -> Configuration:
    """
    Remove a template, freeing its slots.

    Raises:
        UnknownTemplateError: If the template is not in the configuration
    """
    if template_id not in config.templates:
        raise UnknownTemplateError(template_id)
    templates = dict(config.templates)
    del templates[template_id]
    return Configuration(templates)


def feasible_template_count(free_slots: int, node_count: int) -> int:
    """binom(F, |V_j|) * |V_j|!, zero when the graph does not fit."""
    if free_slots < node_count:
        return 0
    return math.comb(free_slots, node_count) * math.factorial(node_count)


def enumerate_feasible_templates(config: Configuration, job: JobType, cluster: ClusterSpec) -> List[Template]:
    """
    List every template of a job type that fits into the free slots.

    Args:
        config: Current configuration
        job: Job type to place
        cluster: The cluster

    Returns:
        All injective node-to-free-slot maps, in lexicographic order
    """
    free = config.free_slots(cluster)
    if len(free) < job.node_count:
        return []
    return [
        Template(job.id, assignment, template_cost(assignment, job, cluster))
        for assignment in itertools.permutations(free, job.node_count)
    ]


def enumerate_configurations(cluster: ClusterSpec, jobs: Sequence[JobType],
                             max_states: int = DEFAULT_MAX_STATES) -> List[Configuration]:
    """
    Enumerate every slot-disjoint set of templates over all job types.

    Configurations are ordered canonically: by number of templates, then by
    their sorted template identities (job type id first, then the
    lexicographic slot assignment).

    Args:
        cluster: The cluster
        jobs: Job types that may hold templates
        max_states: Abort threshold

    Returns:
        All configurations including the empty one

    Raises:
        StateSpaceTooLargeError: If more than max_states configurations exist
    """
    slots = cluster.slots()
    bit = {slot: 1 << position for position, slot in enumerate(slots)}

    template_total = 1 + sum(feasible_template_count(len(slots), job.node_count) for job in jobs)
    if template_total > max_states:
        raise StateSpaceTooLargeError(max_states, min(template_total, max_states + 1))

    candidates = []
    for job in sorted(jobs, key=lambda j: j.id):
        for template in enumerate_feasible_templates(Configuration.empty(), job, cluster):
            mask = 0
            for slot in template.assignment:
                mask |= bit[slot]
            candidates.append((template, mask))

    found: List[Tuple[Template, ...]] = []

    def extend(start: int, occupied: int, chosen: Tuple[Template, ...]):
        found.append(chosen)
        if len(found) > max_states:
            raise StateSpaceTooLargeError(max_states, len(found))
        for index in range(start, len(candidates)):
            template, mask = candidates[index]
            if not occupied & mask:
                extend(index + 1, occupied | mask, chosen + (template,))

    extend(0, 0, ())
    found.sort(key=lambda chosen: (len(chosen), [t.key for t in chosen]))
    return [Configuration.of(chosen) for chosen in found]
