# use annotations to type hint a method with the type of the enclosing class
from __future__ import annotations

import math
from dataclasses import dataclass, replace
from enum import Enum, auto
from typing import Union

from .error import InvalidWeights

MAX_SCORE = 100.0
DEFAULT_THRESHOLD = 50.0

# absolute slack for float rounding of the weighted sum: a score this close
# below the threshold still counts as at the threshold, weights may miss 1.0 by it
SCORE_TOLERANCE = 1e-9


def _clamp(value: float) -> float:
    return min(MAX_SCORE, max(0.0, float(value)))


class Factor(Enum):
    """the three trust factors of the weighted score"""

    AUTHENTICATION = auto()
    ACTIVITY = auto()
    USER_REPORT = auto()

    def __str__(self) -> str:
        return self.name


class EventKind(Enum):
    """coordinator side trust events against a sensor"""

    AUTH_FAILURE = auto()
    UNAUTHORIZED_MESSAGE = auto()
    INACTIVITY = auto()
    USER_REPORT = auto()

    def __str__(self) -> str:
        return self.name

    @property
    def factor(self) -> Factor:
        """the single factor this kind of event lowers"""
        if self in (EventKind.AUTH_FAILURE, EventKind.UNAUTHORIZED_MESSAGE):
            return Factor.AUTHENTICATION
        if self == EventKind.INACTIVITY:
            return Factor.ACTIVITY
        return Factor.USER_REPORT


@dataclass(frozen=True)
class TrustFactors:
    """F1 authentication, F2 activity, F3 user reports; each clamped to [0, 100]"""

    f1_auth: float = MAX_SCORE
    f2_activity: float = MAX_SCORE
    f3_user_report: float = MAX_SCORE

    def __post_init__(self) -> None:
        object.__setattr__(self, "f1_auth", _clamp(self.f1_auth))
        object.__setattr__(self, "f2_activity", _clamp(self.f2_activity))
        object.__setattr__(self, "f3_user_report", _clamp(self.f3_user_report))

    def get(self, factor: Factor) -> float:
        """value of one factor"""
        if factor == Factor.AUTHENTICATION:
            return self.f1_auth
        if factor == Factor.ACTIVITY:
            return self.f2_activity
        return self.f3_user_report

    def decreased(self, factor: Factor, amount: float) -> TrustFactors:
        """copy with one factor lowered by amount, clamped at zero"""
        value = self.get(factor) - amount
        if factor == Factor.AUTHENTICATION:
            return replace(self, f1_auth=value)
        if factor == Factor.ACTIVITY:
            return replace(self, f2_activity=value)
        return replace(self, f3_user_report=value)


@dataclass(frozen=True)
class ScoringWeights:
    """SF1, SF2, SF3 of the weighted trust score"""

    sf1: float = 0.40
    sf2: float = 0.40
    sf3: float = 0.20

    def __post_init__(self) -> None:
        if min(self.sf1, self.sf2, self.sf3) < 0:
            raise InvalidWeights(f"weights must be non-negative: {self}")
        if not math.isclose(self.sf1 + self.sf2 + self.sf3, 1.0, abs_tol=SCORE_TOLERANCE):
            raise InvalidWeights(f"weights must sum to 1.0: {self}")


@dataclass(frozen=True)
class TrustScore:
    """score value in [0, 100] at an epoch"""

    value: float
    epoch: int = 0


@dataclass(frozen=True)
class TrustEvent:
    """a scored behavior; severity scales user reports and lies in (0, 1]"""

    kind: EventKind
    severity: float = 1.0
    timestamp: int = 0


@dataclass(frozen=True)
class PenaltySchedule:
    """factor decrements per event kind"""

    auth_failure: float = 25.0
    unauthorized_message: float = 25.0
    inactivity: float = 20.0
    user_report: float = 50.0

    def amount(self, event: TrustEvent) -> float:
        """decrement applied for event"""
        if event.kind == EventKind.AUTH_FAILURE:
            return self.auth_failure
        if event.kind == EventKind.UNAUTHORIZED_MESSAGE:
            return self.unauthorized_message
        if event.kind == EventKind.INACTIVITY:
            return self.inactivity
        return self.user_report * min(1.0, max(0.0, event.severity))


DEFAULT_WEIGHTS = ScoringWeights()
DEFAULT_SCHEDULE = PenaltySchedule()


def compute_score(factors: TrustFactors, weights: ScoringWeights = DEFAULT_WEIGHTS) -> float:
    """TS = F1 SF1 + F2 SF2 + F3 SF3, clamped to [0, 100]"""
    raw = factors.f1_auth * weights.sf1 + factors.f2_activity * weights.sf2 + factors.f3_user_report * weights.sf3
    return _clamp(raw)


def apply_penalty(
    factors: TrustFactors, event: TrustEvent, schedule: PenaltySchedule = DEFAULT_SCHEDULE
) -> TrustFactors:
    """lower the factor event.kind maps to; other factors are unchanged"""
    return factors.decreased(event.kind.factor, schedule.amount(event))


def is_trusted(score: Union[TrustScore, float], threshold: float = DEFAULT_THRESHOLD) -> bool:
    """
    score >= threshold, inclusive. scores within SCORE_TOLERANCE below the
    threshold count as equal to it, so a weighted sum that lands a rounding
    error short is not locked out
    """
    value = score.value if isinstance(score, TrustScore) else float(score)
    return value >= threshold or math.isclose(value, threshold, abs_tol=SCORE_TOLERANCE)
