# Standard Libraries
# Third party packages
import pandas as pd
from pydantic.typing import List, Iterable, Sequence
# Local package
from qkd_ike.config import LOGGER_BENCH
from qkd_ike.models.bench import PhaseStats
from qkd_ike.models.handshake import HandshakeResult, RESULT_PHASES
# Local module

LOGGER = LOGGER_BENCH

WHISKER_FACTOR = 1.5
SAMPLE_COLUMNS = ["iteration", "success", "status"] + RESULT_PHASES + ["total_ms", "total_bytes", "messages"]


def phase_stats(mode: str, phase: str, samples: Iterable[float]) -> PhaseStats:
    """
    Boxplot parameters of one phase.

    Quartiles use linear interpolation between order statistics. The standard deviation is the
    sample one (n - 1), zero for a single sample. Outliers lie beyond 1.5 IQR from the box.
    """
    series = pd.Series(list(samples), dtype="float64").dropna()
    if series.empty:
        msg = f"No samples for {mode} {phase}"
        LOGGER.error(msg)
        raise ValueError(msg)
    q1, median, q3 = (float(value) for value in series.quantile([0.25, 0.5, 0.75]))
    iqr = q3 - q1
    low, high = q1 - WHISKER_FACTOR * iqr, q3 + WHISKER_FACTOR * iqr
    outliers = series[(series < low) | (series > high)]
    return PhaseStats(
        mode=mode,
        phase=phase,
        count=len(series),
        mean_ms=float(series.mean()),
        std_ms=float(series.std(ddof=1)) if len(series) > 1 else 0.0,
        min_ms=float(series.min()),
        q1_ms=q1,
        median_ms=median,
        q3_ms=q3,
        max_ms=float(series.max()),
        outliers=[float(value) for value in outliers]
    )


def samples_frame(results: Sequence[HandshakeResult]) -> pd.DataFrame:
    """One row per handshake. Phases a failed run never reached are left empty."""
    rows = []
    for iteration, result in enumerate(results):
        row = {
            "iteration": iteration,
            "success": result.success,
            "status": result.status,
            "total_ms": result.total_ms,
            "total_bytes": result.total_bytes(),
            "messages": result.message_count
        }
        for phase in RESULT_PHASES:
            row[phase] = result.phase_durations_ms.get(phase)
        rows.append(row)
    return pd.DataFrame(rows, columns=SAMPLE_COLUMNS)


def mode_stats(mode: str, frame: pd.DataFrame) -> List[PhaseStats]:
    """PhaseStats per phase over the successful runs of one mode."""
    successful = frame[frame["success"].astype(bool)]
    if successful.empty:
        LOGGER.warning(f"No successful {mode} handshake, no statistics")
        return []
    return [phase_stats(mode=mode, phase=phase, samples=successful[phase]) for phase in RESULT_PHASES]
