"""
Connection establishment time and communication overhead tables.

Markdown is for people, the CSV files keep full float precision for reprocessing.
"""
# Standard Libraries
import re
# Third party packages
import pandas as pd
from pydantic.typing import Dict, List, Tuple, Optional, Sequence
# Local package
from qkd_ike.config import LOGGER_BENCH
from qkd_ike.constants import ExchangeType
from qkd_ike.models.bench import PhaseStats, OverheadRow, OverheadTable, BenchReport
from qkd_ike.models.handshake import HandshakeResult, RESULT_PHASES
# Local module

LOGGER = LOGGER_BENCH

STATS_COLUMNS = ["mode", "phase", "count", "mean_ms", "std_ms", "min_ms", "q1_ms", "median_ms", "q3_ms", "max_ms", "outliers"]
TOTAL_LABEL = "TOTAL"
EXCHANGE_ORDER = [ExchangeType.IKE_SA_INIT.name, ExchangeType.IKE_AUTH.name, ExchangeType.CREATE_CHILD_SA.name]
LABEL_PATTERN = re.compile(r"^(?P<exchange>\S+) MID=(?P<mid>\d+) (?P<side>[IR])$")


def label_sort_key(label: str) -> Tuple[int, int, int, str]:
    """Exchange, message id, request before response."""
    match = LABEL_PATTERN.match(label)
    if match is None:
        return len(EXCHANGE_ORDER), 0, 0, label
    exchange = match.group("exchange")
    position = EXCHANGE_ORDER.index(exchange) if exchange in EXCHANGE_ORDER else len(EXCHANGE_ORDER)
    return position, int(match.group("mid")), 0 if match.group("side") == "I" else 1, label


def overhead_table(results: Dict[str, HandshakeResult], framing_bytes: int = 0) -> OverheadTable:
    """Builds the per message size table from one successful trace per mode."""
    sizes = {mode: result.bytes_by_label(framing_bytes=framing_bytes) for mode, result in results.items()}
    labels = sorted({label for by_label in sizes.values() for label in by_label}, key=label_sort_key)
    rows = [OverheadRow(label=label, bytes={mode: sizes[mode].get(label) for mode in sizes}) for label in labels]
    return OverheadTable(modes=list(sizes.keys()), framing_bytes=framing_bytes, rows=rows)


def total_means(stats: Sequence[PhaseStats]) -> Dict[str, float]:
    """Sum of the phase means per mode."""
    totals = {}
    for entry in stats:
        totals[entry.mode] = totals.get(entry.mode, 0.0) + entry.mean_ms
    return totals


def stats_frame(stats: Sequence[PhaseStats]) -> pd.DataFrame:
    rows = []
    for entry in stats:
        row = entry.dict(include=set(STATS_COLUMNS))
        row["outliers"] = " ".join(repr(value) for value in entry.outliers)
        rows.append(row)
    return pd.DataFrame(rows, columns=STATS_COLUMNS)


def overhead_frame(overhead: OverheadTable) -> pd.DataFrame:
    rows = [dict(label=row.label, **{mode: row.bytes.get(mode) for mode in overhead.modes}) for row in overhead.rows]
    rows.append(dict(label=TOTAL_LABEL, **overhead.totals))
    return pd.DataFrame(rows, columns=["label"] + list(overhead.modes)).astype({mode: "Int64" for mode in overhead.modes})


def markdown_table(header: List[str], rows: List[List[str]]) -> str:
    lines = [
        "| " + " | ".join(header) + " |",
        "|" + "|".join("---" for _ in header) + "|"
    ]
    lines.extend("| " + " | ".join(row) + " |" for row in rows)
    return "\n".join(lines)


def _modes_of(stats: Sequence[PhaseStats]) -> List[str]:
    modes = []
    for entry in stats:
        if entry.mode not in modes:
            modes.append(entry.mode)
    return modes


def time_markdown(stats: Sequence[PhaseStats]) -> str:
    modes = _modes_of(stats)
    by_key = {(entry.mode, entry.phase): entry for entry in stats}
    rows = []
    for phase in RESULT_PHASES:
        row = [phase]
        for mode in modes:
            entry = by_key.get((mode, phase))
            row.append("-" if entry is None else f"M: {entry.mean_ms:.3f} ms, SD: {entry.std_ms:.3f} ms")
        rows.append(row)
    totals = total_means(stats)
    rows.append([TOTAL_LABEL] + [f"{totals[mode]:.3f} ms" for mode in modes])
    return markdown_table(header=["Phase"] + modes, rows=rows)


def overhead_markdown(overhead: OverheadTable) -> str:
    rows = []
    for row in overhead.rows:
        rows.append([row.label] + ["-" if row.bytes.get(mode) is None else str(row.bytes[mode]) for mode in overhead.modes])
    totals = overhead.totals
    rows.append([TOTAL_LABEL] + [str(totals[mode]) for mode in overhead.modes])
    return markdown_table(header=["Message"] + list(overhead.modes), rows=rows)


def render_tables(stats: Sequence[PhaseStats], overhead: Optional[OverheadTable] = None) -> Tuple[str, Dict[str, str]]:
    """
    Returns the markdown text and the CSV documents keyed by file name.

    :param stats: PhaseStats of every benchmarked mode, must not be empty
    :param overhead: Message sizes, omitted when no handshake succeeded
    """
    if not stats:
        msg = "Cannot render tables without statistics"
        LOGGER.error(msg)
        raise ValueError(msg)
    sections = ["## Connection establishment time", "", time_markdown(stats)]
    csv_files = {"phase_stats.csv": stats_frame(stats).to_csv(index=False)}
    if overhead is not None:
        caption = "## Communication overhead (bytes"
        caption += f", {overhead.framing_bytes} bytes framing per message)" if overhead.framing_bytes else ")"
        sections.extend(["", caption, "", overhead_markdown(overhead)])
        csv_files["overhead.csv"] = overhead_frame(overhead).to_csv(index=False)
    return "\n".join(sections) + "\n", csv_files


def read_stats_csv(path_or_buffer) -> List[PhaseStats]:
    """Inverse of the phase_stats.csv writer."""
    frame = pd.read_csv(path_or_buffer, keep_default_na=False, float_precision="round_trip")
    stats = []
    for record in frame.to_dict(orient="records"):
        outliers = str(record.pop("outliers")).split()
        stats.append(PhaseStats(outliers=[float(value) for value in outliers], **record))
    return stats


def render_report(report: BenchReport, tables_markdown: str) -> str:
    config = report.config
    lines = [
        "# QKD IKEv2 benchmark",
        "",
        f"* modes: {', '.join(config.modes)}",
        f"* iterations per mode: {config.iterations}",
        f"* transport: {config.transport.kind}, latency {config.transport.latency_ms} ms",
        f"* KMS: {config.kms_endpoint}, latency {config.kms_latency_ms} ms",
        f"* Child SAs: {config.sa_plan.child_sa_count}, EAP rounds: {config.eap.round_count}",
        "",
        tables_markdown
    ]
    if report.dh_cost is not None:
        cost = report.dh_cost
        lines.extend([
            "## DH cost",
            "",
            f"* group {cost.group_id}, {cost.iterations} iterations",
            f"* key pair generation: {cost.keypair_mean_ms:.3f} ms",
            f"* shared secret: {cost.shared_secret_mean_ms:.3f} ms",
            f"* predicted INIT gap to QKD: {cost.predicted_init_gap_ms:.3f} ms",
        ])
        for mode, gap in report.measured_init_gap_ms.items():
            lines.append(f"* measured {mode} INIT gap to QKD: {gap:.3f} ms")
        lines.append("")
    failed = {mode: count for mode, count in report.failures.items() if count}
    if failed:
        lines.extend(["## Failures", ""])
        for mode, count in failed.items():
            statuses = sorted(set(report.failure_statuses.get(mode, [])))
            lines.append(f"* {mode}: {count} failed ({', '.join(statuses)})")
        lines.append("")
    return "\n".join(lines)
