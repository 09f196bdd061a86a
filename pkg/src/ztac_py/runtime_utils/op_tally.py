"""
Tally of primitive cryptographic operations, keyed by protocol phase and the
entity performing them.

Instrumented functions are wrapped with `counted`. Only the outermost
instrumented call is tallied, so a KP-ABE encryption that internally runs an
AEAD encryption counts as one T_ABE-Enc and not as an additional T_Enc.
"""

# use annotations to type hint a method with the type of the enclosing class
from __future__ import annotations

import functools
import hashlib
from collections import Counter
from contextlib import contextmanager
from contextvars import ContextVar
from enum import Enum
from typing import Any, Callable, Dict, Iterator, List, Optional, Set, Tuple, TypeVar, cast

import polars as pl

from ztac_py.crypto_core.error import NonceReuse

F = TypeVar("F", bound=Callable[..., Any])


class Term(Enum):
    """
    Cost terms. The first nine make up the overhead vocabulary of the protocol
    cost model, the rest are auxiliary terms the cost model does not price.
    """

    ENC = "T_Enc"
    SHA = "T_SHA"
    ECDH = "T_ECDH"
    VER = "T_VER"
    ABE_SETUP = "T_ABE-Setup"
    ABE_KEYGEN = "T_ABE-KeyGen"
    ABE_ENC = "T_ABE-Enc"
    ABE_DEC = "T_ABE-Dec"
    IBBE = "T_IBBE"

    MAC = "T_MAC"
    SIGN = "T_SIGN"
    PKE = "T_PKE"
    KEYGEN = "T_KeyGen"
    IBBE_SETUP = "T_IBBE-Setup"

    def __str__(self) -> str:
        return self.value

    @property
    def in_cost_model(self) -> bool:
        """Is this one of the priced overhead terms?"""
        return self in COST_MODEL_TERMS

    @classmethod
    def from_label(cls, label: str) -> Term:
        """look up a term by its report label, e.g. T_ABE-Enc"""
        for term in cls:
            if term.value == label:
                return term
        raise ValueError(f"Unknown cost term {label}")


COST_MODEL_TERMS = (
    Term.ENC,
    Term.SHA,
    Term.ECDH,
    Term.VER,
    Term.ABE_SETUP,
    Term.ABE_KEYGEN,
    Term.ABE_ENC,
    Term.ABE_DEC,
    Term.IBBE,
)


class Phase(Enum):
    """Protocol phases, in execution order"""

    INITIALIZATION = "Initialization"
    REGISTRATION = "User registration"
    UPLOADING = "Data Uploading"
    DOWNLOADING = "Data Downloading"

    def __str__(self) -> str:
        return self.value


UNPHASED = "-"
UNKNOWN_ACTOR = ("unknown", "unknown")

_ACTIVE_TALLY: ContextVar[Optional["OperationTally"]] = ContextVar("active_tally", default=None)
_PHASE: ContextVar[Optional[Phase]] = ContextVar("tally_phase", default=None)
_ACTOR: ContextVar[Tuple[str, str]] = ContextVar("tally_actor", default=UNKNOWN_ACTOR)
_DEPTH: ContextVar[int] = ContextVar("tally_depth", default=0)

TallyKey = Tuple[str, str, str, Term]


class OperationTally:
    """
    Counts of primitive operations plus the nonce ledger for every AEAD
    encryption performed while the tally is active.
    """

    def __init__(self) -> None:
        self.counts: Counter[TallyKey] = Counter()
        self._nonces: Set[Tuple[str, bytes]] = set()

    def add(self, term: Term, weight: int = 1) -> None:
        """add weight operations of a term for the current phase and actor"""
        phase = _PHASE.get()
        entity, role = _ACTOR.get()
        key = (UNPHASED if phase is None else phase.value, role, entity, term)
        self.counts[key] += weight

    def register_nonce(self, key: bytes, nonce: bytes) -> None:
        """record a (key, nonce) pair, raising NonceReuse on a repeat"""
        fingerprint = hashlib.sha256(b"nonce-ledger:" + key).hexdigest()[:16]
        entry = (fingerprint, bytes(nonce))
        if entry in self._nonces:
            raise NonceReuse(fingerprint, nonce)
        self._nonces.add(entry)

    @property
    def nonce_count(self) -> int:
        """number of distinct (key, nonce) pairs seen"""
        return len(self._nonces)

    def totals(self) -> Dict[Term, int]:
        """counts per term across all phases and entities"""
        totals: Dict[Term, int] = {}
        for (_, _, _, term), count in self.counts.items():
            totals[term] = totals.get(term, 0) + count
        return totals

    def cell(self, phase: Phase, term: Term, entity: Optional[str] = None, role: Optional[str] = None) -> int:
        """
        number of operations of a term in a phase, optionally restricted to a
        single entity or to every entity of a role
        """
        total = 0
        for (phase_label, key_role, key_entity, key_term), count in self.counts.items():
            if phase_label != phase.value or key_term != term:
                continue
            if entity is not None and key_entity != entity:
                continue
            if role is not None and key_role != role:
                continue
            total += count
        return total

    def to_frame(self) -> pl.DataFrame:
        """
        tally as a dataframe with columns phase, role, entity, term, count,
        sorted by phase order then role, entity and term label
        """
        phase_order = {phase.value: index for index, phase in enumerate(Phase)}
        rows: List[Dict[str, Any]] = [
            {
                "phase": phase,
                "role": role,
                "entity": entity,
                "term": term.value,
                "count": count,
                "_order": phase_order.get(phase, len(phase_order)),
            }
            for (phase, role, entity, term), count in self.counts.items()
            if count > 0
        ]
        schema = {
            "phase": pl.String,
            "role": pl.String,
            "entity": pl.String,
            "term": pl.String,
            "count": pl.Int64,
            "_order": pl.Int64,
        }
        frame = pl.DataFrame(rows, schema=schema)
        return frame.sort(["_order", "role", "entity", "term"]).drop("_order")


def counted(term: Term, weight: Optional[Callable[..., int]] = None) -> Callable[[F], F]:
    """
    decorator tallying one operation (or weight(*args, **kwargs) operations)
    of term each time the wrapped function is entered from outside of any
    other instrumented call
    """

    def decorator(func: F) -> F:
        @functools.wraps(func)
        def wrapper(*args: Any, **kwargs: Any) -> Any:
            depth = _DEPTH.get()
            if depth == 0:
                tally = _ACTIVE_TALLY.get()
                if tally is not None:
                    tally.add(term, 1 if weight is None else weight(*args, **kwargs))

            reset = _DEPTH.set(depth + 1)
            try:
                return func(*args, **kwargs)
            finally:
                _DEPTH.reset(reset)

        return cast(F, wrapper)

    return decorator


def register_nonce(key: bytes, nonce: bytes) -> None:
    """forward a (key, nonce) pair to the active tally's ledger, if any"""
    tally = _ACTIVE_TALLY.get()
    if tally is not None:
        tally.register_nonce(key, nonce)


def active_tally() -> Optional[OperationTally]:
    """the tally currently recording, if any"""
    return _ACTIVE_TALLY.get()


def current_phase() -> Optional[Phase]:
    """the protocol phase operations are being attributed to, if any"""
    return _PHASE.get()


@contextmanager
def recording(tally: Optional[OperationTally] = None) -> Iterator[OperationTally]:
    """record operations into tally (a fresh one if None) inside the block"""
    if tally is None:
        tally = OperationTally()
    reset = _ACTIVE_TALLY.set(tally)
    try:
        yield tally
    finally:
        _ACTIVE_TALLY.reset(reset)


@contextmanager
def suspended() -> Iterator[None]:
    """stop recording inside the block, e.g. for audits of finished runs"""
    reset = _ACTIVE_TALLY.set(None)
    try:
        yield
    finally:
        _ACTIVE_TALLY.reset(reset)


@contextmanager
def in_phase(phase: Phase) -> Iterator[None]:
    """attribute operations inside the block to a protocol phase"""
    reset = _PHASE.set(phase)
    try:
        yield
    finally:
        _PHASE.reset(reset)


@contextmanager
def acting_as(entity: str, role: str) -> Iterator[None]:
    """attribute operations inside the block to an entity"""
    reset = _ACTOR.set((entity, role))
    try:
        yield
    finally:
        _ACTOR.reset(reset)
