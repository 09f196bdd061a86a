from dataclasses import dataclass
from typing import Iterable, List, Optional

import polars as pl

from .evaluator import EntityTrustRecord
from .merkle import TrustMerkleTree
from .scoring import ScoringWeights, TrustFactors, compute_score

LEDGER_SCHEMA = {
    "window": pl.Int64,
    "holder": pl.String,
    "entity": pl.String,
    "f1": pl.Float64,
    "f2": pl.Float64,
    "f3": pl.Float64,
    "score": pl.Float64,
    "epoch": pl.Int64,
    "root": pl.String,
}


@dataclass(frozen=True)
class LedgerEntry:
    """
    one snapshot of an entity's trust state as seen by its holder. epoch and
    root are only present for sensors, whose state lives in a trust tree.
    """

    window: int
    holder: str
    entity: str
    factors: TrustFactors
    score: float
    epoch: Optional[int] = None
    root: Optional[str] = None

    def to_line(self) -> str:
        """key=value line for the ledger dump"""
        parts = [
            f"window={self.window}",
            f"holder={self.holder}",
            f"entity={self.entity}",
            f"f1={self.factors.f1_auth:.2f}",
            f"f2={self.factors.f2_activity:.2f}",
            f"f3={self.factors.f3_user_report:.2f}",
            f"score={self.score:.2f}",
            f"epoch={'-' if self.epoch is None else self.epoch}",
            f"root={'-' if self.root is None else self.root}",
        ]
        return " ".join(parts)


def sensor_entry(
    window: int, holder: str, factors: TrustFactors, weights: ScoringWeights, tree: TrustMerkleTree
) -> LedgerEntry:
    """snapshot of a sensor held by a coordinator"""
    return LedgerEntry(
        window=window,
        holder=holder,
        entity=tree.device_id.decode("utf-8"),
        factors=factors,
        score=compute_score(factors, weights),
        epoch=tree.epoch,
        root=tree.root.hex(),
    )


def record_entry(window: int, holder: str, record: EntityTrustRecord) -> LedgerEntry:
    """snapshot of a user or coordinator held by the cloud provider"""
    return LedgerEntry(window=window, holder=holder, entity=record.entity_id, factors=record.factors, score=record.score)


def ledger_frame(entries: Iterable[LedgerEntry]) -> pl.DataFrame:
    """entries as a dataframe, one row per snapshot"""
    rows = [
        {
            "window": entry.window,
            "holder": entry.holder,
            "entity": entry.entity,
            "f1": entry.factors.f1_auth,
            "f2": entry.factors.f2_activity,
            "f3": entry.factors.f3_user_report,
            "score": entry.score,
            "epoch": entry.epoch,
            "root": entry.root,
        }
        for entry in entries
    ]
    return pl.DataFrame(rows, schema=LEDGER_SCHEMA)


def ledger_lines(entries: Iterable[LedgerEntry]) -> List[str]:
    """line oriented ledger dump"""
    return [entry.to_line() for entry in entries]
