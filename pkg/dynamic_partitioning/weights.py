"""
Weights Module

Template weight tables. Live tables follow the queues; fixed tables pin the
weights so the configuration process becomes time-homogeneous.
"""

from abc import ABC, abstractmethod
from typing import Dict, Iterable, Mapping, Optional

from .cluster import Template, TemplateKey
from .kernel import SchedulerParams, f_group, tilde_weight


class WeightTable(ABC):
    """Abstract base class for template weight tables."""

    #: Whether weights ignore the queues
    fixed = True

    @abstractmethod
    def weight(self, template: Template, queues: Mapping[int, int]) -> float:
        """
        Weight of a template given the current queue sizes.

        Args:
            template: The template being scored
            queues: Jobs in system per job type id

        Returns:
            The template weight, possibly negative
        """
        pass

    @abstractmethod
    def ceiling(self, job_type_id: int, queues: Mapping[int, int]) -> float:
        """
        Upper bound of the weights of all templates of a job type.

        Used as the exponent of the dedicated clock rate; acceptance then
        multiplies by exp((w - ceiling) / beta).
        """
        pass

    def to_dict(self) -> Optional[Dict]:
        return None

    def __eq__(self, other) -> bool:
        if type(self) is not type(other):
            return NotImplemented
        return self.to_dict() == other.to_dict()

    __hash__ = None


class LiveWeights(WeightTable):
    """
    Weights recomputed from the queues: alpha * f_group(j, h + Q) - cost.
    """

    fixed = False

    def __init__(self, params: SchedulerParams, total_slots: int):
        self.params = params
        self.total_slots = total_slots

    def weight(self, template: Template, queues: Mapping[int, int]) -> float:
        return tilde_weight(template.job_type_id, template.cost, queues, self.params, self.total_slots)

    def ceiling(self, job_type_id: int, queues: Mapping[int, int]) -> float:
        return queue_term(job_type_id, queues, self.params, self.total_slots)

    def to_dict(self) -> Dict:
        return {'kind': 'live', 'params': self.params.to_dict(), 'total_slots': self.total_slots}

    def freeze(self, queues: Mapping[int, int]) -> 'QueueTermWeights':
        """Snapshot the weights at the given queue sizes."""
        return QueueTermWeights({j: self.ceiling(j, queues) for j in queues})


class ConstantWeights(WeightTable):
    """One weight shared by every template of a job type."""

    def __init__(self, values: Mapping[int, float]):
        self.values = dict(values)

    def weight(self, template: Template, queues: Mapping[int, int]) -> float:
        return self.values[template.job_type_id]

    def ceiling(self, job_type_id: int, queues: Mapping[int, int]) -> float:
        return self.values[job_type_id]

    def to_dict(self) -> Dict:
        return {'kind': 'constant', 'values': {str(j): w for j, w in self.values.items()}}


class QueueTermWeights(WeightTable):
    """Weights term_j - cost, i.e. live weights frozen at a queue snapshot."""

    def __init__(self, terms: Mapping[int, float]):
        self.terms = dict(terms)

    def weight(self, template: Template, queues: Mapping[int, int]) -> float:
        return self.terms[template.job_type_id] - template.cost

    def ceiling(self, job_type_id: int, queues: Mapping[int, int]) -> float:
        return self.terms[job_type_id]

    def to_dict(self) -> Dict:
        return {'kind': 'queue_term', 'values': {str(j): w for j, w in self.terms.items()}}


class TemplateWeights(WeightTable):
    """An explicit weight for every template identity."""

    def __init__(self, table: Mapping[TemplateKey, float]):
        self.table = dict(table)
        self._ceilings: Dict[int, float] = {}
        for (job_type_id, _), w in self.table.items():
            self._ceilings[job_type_id] = max(w, self._ceilings.get(job_type_id, w))

    def weight(self, template: Template, queues: Mapping[int, int]) -> float:
        try:
            return self.table[template.key]
        except KeyError:
            raise ValueError(f"no weight for template {template.key}") from None

    def ceiling(self, job_type_id: int, queues: Mapping[int, int]) -> float:
        return self._ceilings[job_type_id]

    def missing(self, templates: Iterable[Template]):
        """Template identities among the given ones that have no weight."""
        return [t.key for t in templates if t.key not in self.table]

    def to_dict(self) -> Dict:
        return {
            'kind': 'template',
            'entries': [
                {'job_type': j, 'assignment': [list(s) for s in assignment], 'weight': w}
                for (j, assignment), w in sorted(self.table.items())
            ],
        }


def queue_term(job_type_id: int, queues: Mapping[int, int], params: SchedulerParams, total_slots: int) -> float:
    """alpha * f_group(j, h + Q), the queue part of a live weight."""
    biased = {k: params.h + q for k, q in queues.items()}
    return params.alpha * f_group(job_type_id, biased, params.b, params.epsilon, total_slots)


def weights_from_dict(data: Mapping) -> WeightTable:
    """
    Build a fixed weight table from its scenario representation.

    Raises:
        ValueError: For an unknown kind
    """
    kind = data.get('kind', 'constant')
    if kind == 'constant':
        return ConstantWeights({int(j): float(w) for j, w in data['values'].items()})
    if kind == 'queue_term':
        return QueueTermWeights({int(j): float(w) for j, w in data['values'].items()})
    if kind == 'template':
        return TemplateWeights({
            (int(entry['job_type']), tuple(tuple(s) for s in entry['assignment'])): float(entry['weight'])
            for entry in data['entries']
        })
    raise ValueError(f"unknown weight table kind {kind!r}")
