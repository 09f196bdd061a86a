"""
Run reports: sectioned text with COUNTS, TIMINGS, TRUST, OUTCOMES and
INVARIANTS. COUNTS is the per phase and role table, as CSV like TIMINGS;
TRUST is the ledger dump; OUTCOMES and INVARIANTS are key=value lines. A
run report holds no wall clock values, so equal (scenario, seed) pairs
produce byte identical files.
"""

import io
import os
from typing import Dict, List, Optional

import polars as pl

from ztac_py.runtime_utils.op_tally import COST_MODEL_TERMS, Phase, Term
from ztac_py.trust_ledger.dump import ledger_lines

from .runner import RunReport

SECTIONS = ("COUNTS", "TIMINGS", "TRUST", "OUTCOMES", "INVARIANTS")
HEADER = "# ztac run report"

COUNT_SCHEMA = {"phase": pl.String, "role": pl.String, "entity": pl.String, "term": pl.String, "count": pl.Int64}
ROLE_ORDER = ("sensor", "wnc", "csp", "user")


def _frame_csv(frame: pl.DataFrame) -> str:
    return frame.write_csv().rstrip("\n")


def tally_counts(report: RunReport) -> pl.DataFrame:
    """
    per phase and role table with one column per cost term, summed over the
    entities of a role. cost model terms come first, in their usual order,
    followed by the auxiliary terms that were used
    """
    return pivot_counts(report.tally.to_frame())


def pivot_counts(counts: pl.DataFrame) -> pl.DataFrame:
    """pivot a phase, role, entity, term, count frame into the per phase table"""
    phase_order = {phase.value: index for index, phase in enumerate(Phase)}
    role_order = {role: index for index, role in enumerate(ROLE_ORDER)}
    used = set(counts.get_column("term").to_list())
    terms = [term.value for term in COST_MODEL_TERMS]
    terms += [term.value for term in Term if not term.in_cost_model and term.value in used]

    if counts.is_empty():
        return pl.DataFrame(schema={"phase": pl.String, "role": pl.String, **{term: pl.Int64 for term in terms}})

    summed = counts.group_by(["phase", "role", "term"]).agg(pl.col("count").sum())
    table = summed.pivot(on="term", index=["phase", "role"], values="count", aggregate_function="sum")
    for term in terms:
        if term not in table.columns:
            table = table.with_columns(pl.lit(0, dtype=pl.Int64).alias(term))
    table = table.with_columns(
        pl.col("phase").replace_strict(phase_order, default=len(phase_order), return_dtype=pl.Int64).alias("_phase"),
        pl.col("role").replace_strict(role_order, default=len(role_order), return_dtype=pl.Int64).alias("_role"),
    )
    table = table.sort(["_phase", "_role"]).select(["phase", "role", *terms])
    return table.fill_null(0)


def counts_cell(table: pl.DataFrame, phase: Phase, role: str, term: Term) -> int:
    """one cell of the per phase table, 0 if the row or column is absent"""
    if term.value not in table.columns:
        return 0
    rows = table.filter((pl.col("phase") == phase.value) & (pl.col("role") == role))
    if rows.is_empty():
        return 0
    return int(rows.get_column(term.value).sum())


def _outcome_lines(report: RunReport) -> List[str]:
    lines = []
    for step, status in sorted(report.setup.items()):
        lines.append(f"setup entity={step} status={status}")
    for user, status in sorted(report.registrations.items()):
        lines.append(f"registration user={user} status={status}")
    for window in report.windows:
        lines.append(
            f"window={window.window} emitted={','.join(window.emitted) or '-'} "
            f"accepted={','.join(window.accepted) or '-'} untrusted={','.join(window.untrusted) or '-'} "
            f"uploaded={str(window.uploaded).lower()} stored={str(window.stored).lower()}"
            + (f" detail={window.detail}" if window.detail else "")
        )
    for access in report.access:
        windows = ",".join(str(window) for window in access.windows) or "-"
        lines.append(f"access user={access.user} status={access.status} readings={access.readings} windows={windows}")
    lines.append(f"stored_records={report.stored_records}")
    for (receiver, reason), count in sorted(report.rejections.items()):
        lines.append(f"rejected receiver={receiver} reason={reason} count={count}")
    if report.stats is not None:
        stats = report.stats
        lines.append(
            f"bus sent={stats.sent} delivered={stats.delivered} dropped={stats.dropped} delayed={stats.delayed} "
            f"injected={stats.injected} in_flight={stats.in_flight} tampered={stats.tampered} "
            f"tampered_accepted={stats.tampered_accepted}"
        )
    for interference in report.interference:
        sender, receiver = interference.link
        lines.append(
            f"adversary index={interference.index} action={interference.kind} link={sender}->{receiver}"
            + (f" {interference.detail}" if interference.detail else "")
        )
    lines.append(f"leaks={len(report.leaks)}")
    for leak in report.leaks:
        lines.append(f"leak holder={leak.holder} kind={leak.kind} label={leak.label}")
    if report.curious is not None:
        curious = report.curious
        lines.append(
            f"curious_csp records={curious.records} abe_layer_opened={str(curious.abe_layer_opened).lower()} "
            f"identity_keys_opened={curious.identity_keys_opened} "
            f"identity_keygen_refused={str(curious.identity_keygen_refused).lower()} "
            f"plaintext_recovered={str(curious.plaintext_recovered).lower()} "
            f"holds_ibbe_master={str(curious.holds_ibbe_master).lower()}"
        )
    return lines


def render_report(report: RunReport, timings: Optional[pl.DataFrame] = None) -> str:
    """the report as text; timings are only present for benchmark runs"""
    parts = [
        HEADER,
        f"scenario={report.scenario} seed={report.seed} epochs={report.epochs} chain_length={report.chain_length}",
        "",
        "[COUNTS]",
        _frame_csv(tally_counts(report)),
        "",
        "[TIMINGS]",
        "# wall clock timings come from `ztac_sim bench`" if timings is None else _frame_csv(timings),
        "",
        "[TRUST]",
        *ledger_lines(report.ledger),
        "",
        "[OUTCOMES]",
        *_outcome_lines(report),
        "",
        "[INVARIANTS]",
        f"status={'ok' if report.ok else 'violated'}",
        *(f"violation={violation}" for violation in report.violations),
    ]
    return "\n".join(parts) + "\n"


def resolve_report_path(path: str) -> str:
    """relative report paths land in ZTAC_REPORT_DIR when it is set"""
    directory = os.environ.get("ZTAC_REPORT_DIR", "").strip()
    if directory and not os.path.isabs(path):
        return os.path.join(directory, path)
    return path


def write_report(text: str, path: str) -> str:
    """write a rendered report, creating parent directories; returns the final path"""
    target = resolve_report_path(path)
    parent = os.path.dirname(target)
    if parent:
        os.makedirs(parent, exist_ok=True)
    with open(target, "w", encoding="utf-8") as report_file:
        report_file.write(text)
    return target


def split_sections(text: str) -> Dict[str, List[str]]:
    """section name to its non blank, non comment lines"""
    sections: Dict[str, List[str]] = {}
    current: Optional[str] = None
    for line in text.splitlines():
        stripped = line.strip()
        if stripped.startswith("[") and stripped.endswith("]"):
            current = stripped[1:-1]
            sections[current] = []
        elif current is not None and stripped and not stripped.startswith("#"):
            sections[current].append(stripped)
    return sections


def read_counts(sections: Dict[str, List[str]]) -> pl.DataFrame:
    """the per phase table of the COUNTS section"""
    lines = sections.get("COUNTS", [])
    if len(lines) <= 1:
        return pivot_counts(pl.DataFrame(schema=COUNT_SCHEMA))
    columns = lines[0].split(",")
    schema = {column: pl.String if column in ("phase", "role") else pl.Int64 for column in columns}
    return pl.read_csv(io.StringIO("\n".join(lines)), schema=schema)


def parse_line(line: str) -> Dict[str, str]:
    """key=value pairs of one report line; bare words map to an empty string"""
    pairs = {}
    for word in line.split():
        key, _, value = word.partition("=")
        pairs[key] = value
    return pairs


def summarize_report(text: str) -> str:
    """human readable summary of a report for `ztac_sim inspect`"""
    sections = split_sections(text)
    table = read_counts(sections)
    outcomes = [parse_line(line) for line in sections.get("OUTCOMES", [])]
    invariants = sections.get("INVARIANTS", ["status=unknown"])

    with pl.Config(tbl_rows=-1, tbl_cols=-1, tbl_width_chars=200):
        lines = ["per phase operation counts:", str(table), ""]

    stored = [entry["stored_records"] for entry in outcomes if "stored_records" in entry]
    lines.append(f"stored records: {stored[0] if stored else '?'}")
    for entry in outcomes:
        if "access" in entry:
            lines.append(f"access {entry['user']}: {entry['status']} ({entry['readings']} readings)")
    rejected = sum(int(entry["count"]) for entry in outcomes if "rejected" in entry)
    lines.append(f"rejected deliveries: {rejected}")
    lines.append(f"trust ledger lines: {len(sections.get('TRUST', []))}")
    lines.extend(invariants)
    return "\n".join(lines) + "\n"


def report_ok(text: str) -> bool:
    """does the INVARIANTS section of a report say ok?"""
    return "status=ok" in split_sections(text).get("INVARIANTS", [])
