# use annotations to type hint a method with the type of the enclosing class
from __future__ import annotations

from abc import ABC, abstractmethod
from dataclasses import dataclass, field, replace
from enum import Enum, auto
from typing import Optional, Tuple

from .scoring import (
    DEFAULT_THRESHOLD,
    DEFAULT_WEIGHTS,
    Factor,
    ScoringWeights,
    TrustFactors,
    compute_score,
    is_trusted,
)


class CspEventKind(Enum):
    """events the cloud provider scores users and coordinators on"""

    SIGNATURE_FAILURE = auto()
    HMAC_FAILURE = auto()
    MALFORMED_REQUEST = auto()
    REPORTED_ABUSE = auto()

    def __str__(self) -> str:
        return self.name

    @property
    def factor(self) -> Factor:
        """factor lowered by this kind of event"""
        if self in (CspEventKind.SIGNATURE_FAILURE, CspEventKind.HMAC_FAILURE):
            return Factor.AUTHENTICATION
        if self == CspEventKind.MALFORMED_REQUEST:
            return Factor.ACTIVITY
        return Factor.USER_REPORT


class Decision(Enum):
    """outcome of a trust evaluation"""

    GRANT = auto()
    DENY = auto()

    def __str__(self) -> str:
        return self.name


@dataclass(frozen=True)
class CspEvent:
    """a scored behavior of a user or coordinator; severity in (0, 1]"""

    kind: CspEventKind
    severity: float = 1.0
    timestamp: int = 0


@dataclass(frozen=True)
class CspPenaltySchedule:
    """factor decrements per event kind"""

    signature_failure: float = 25.0
    hmac_failure: float = 25.0
    malformed_request: float = 20.0
    reported_abuse: float = 50.0

    def amount(self, event: CspEvent) -> float:
        """decrement applied for event"""
        if event.kind == CspEventKind.SIGNATURE_FAILURE:
            return self.signature_failure
        if event.kind == CspEventKind.HMAC_FAILURE:
            return self.hmac_failure
        if event.kind == CspEventKind.MALFORMED_REQUEST:
            return self.malformed_request
        return self.reported_abuse * min(1.0, max(0.0, event.severity))


@dataclass(frozen=True)
class EntityTrustRecord:
    """CSP side trust state of one user or coordinator"""

    entity_id: str
    factors: TrustFactors = field(default_factory=TrustFactors)
    events: Tuple[CspEvent, ...] = ()
    threshold: float = DEFAULT_THRESHOLD
    weights: ScoringWeights = DEFAULT_WEIGHTS

    @property
    def score(self) -> float:
        """weighted score of the current factors"""
        return compute_score(self.factors, self.weights)


class TrustEvaluator(ABC):
    """
    Abstract base class for CSP trust engines. Decisions must depend only on
    the record handed in.
    """

    @abstractmethod
    def record_event(self, record: EntityTrustRecord, event: CspEvent) -> EntityTrustRecord:
        """record with event applied"""

    @abstractmethod
    def evaluate(self, record: EntityTrustRecord) -> Decision:
        """grant or deny for the entity in its current state"""


class ThresholdEvaluator(TrustEvaluator):
    """weighted score against the record's inclusive threshold"""

    def __init__(self, schedule: Optional[CspPenaltySchedule] = None) -> None:
        self.schedule = CspPenaltySchedule() if schedule is None else schedule

    def record_event(self, record: EntityTrustRecord, event: CspEvent) -> EntityTrustRecord:
        factors = record.factors.decreased(event.kind.factor, self.schedule.amount(event))
        return replace(record, factors=factors, events=record.events + (event,))

    def evaluate(self, record: EntityTrustRecord) -> Decision:
        return Decision.GRANT if is_trusted(record.score, record.threshold) else Decision.DENY


DEFAULT_EVALUATOR = ThresholdEvaluator()


def csp_record_event(
    record: EntityTrustRecord, event: CspEvent, evaluator: TrustEvaluator = DEFAULT_EVALUATOR
) -> EntityTrustRecord:
    """apply event to record"""
    return evaluator.record_event(record, event)


def csp_evaluate(record: EntityTrustRecord, evaluator: TrustEvaluator = DEFAULT_EVALUATOR) -> Decision:
    """Grant or Deny for record"""
    return evaluator.evaluate(record)
