"""
Repeated handshakes per mode, statistics and report files.

Iterations run one after the other in the calling thread so timings of two handshakes never
overlap.
"""
# Standard Libraries
import pathlib
import secrets
import time
# Third party packages
import pandas as pd
from pydantic.typing import List, Optional, Dict
# Local package
from qkd_ike.config import LOGGER_BENCH
from qkd_ike.exceptions import DhWeakValueError
from qkd_ike.handshake import run_full_handshake
from qkd_ike.keys import MODP_2048, dh_keypair, dh_shared_secret
from qkd_ike.keys.dh import Rng, validate_public
from qkd_ike.kms import KmePair
from qkd_ike.models.bench import BenchConfig, BenchReport, DhCostReport
from qkd_ike.models.handshake import HandshakeResult
from qkd_ike.models.keys import DhGroup
# Local module
from .stats import samples_frame, mode_stats
from .tables import overhead_table, render_tables, render_report

LOGGER = LOGGER_BENCH

QKD_MODE = "QKD"


def bench_dh_cost(group: DhGroup = MODP_2048, iterations: int = 100, rng: Rng = None) -> DhCostReport:
    """Mean host cost of one key pair generation and one shared secret computation."""
    if iterations < 10:
        msg = f"DH cost needs at least 10 iterations, got {iterations}"
        LOGGER.error(msg)
        raise ValueError(msg)
    rng = rng or secrets.SystemRandom()
    while True:
        _, peer_public = dh_keypair(group=group, rng=rng)
        try:
            validate_public(value=peer_public, group=group)
            break
        except DhWeakValueError:
            continue
    keypair_ns, shared_ns = [], []
    for _ in range(iterations):
        start = time.perf_counter_ns()
        private, _ = dh_keypair(group=group, rng=rng)
        middle = time.perf_counter_ns()
        dh_shared_secret(private=private, peer_public=peer_public, group=group)
        keypair_ns.append(middle - start)
        shared_ns.append(time.perf_counter_ns() - middle)
    report = DhCostReport(
        group_id=group.group_id,
        iterations=iterations,
        keypair_mean_ms=float(pd.Series(keypair_ns).mean()) / 1e6,
        shared_secret_mean_ms=float(pd.Series(shared_ns).mean()) / 1e6
    )
    LOGGER.info(
        f"Group {group.group_id}: key pair {report.keypair_mean_ms:.3f} ms, "
        f"shared secret {report.shared_secret_mean_ms:.3f} ms, predicted INIT gap {report.predicted_init_gap_ms:.3f} ms"
    )
    return report


def _top_up(pair: KmePair, needed: int):
    """Refills the simulated link between iterations, outside of any timed phase."""
    stored = pair.kme_a.store.stored_key_count
    if stored >= needed:
        return
    count = min(max(needed, pair.config.initial_keys), pair.config.capacity - stored)
    LOGGER.debug(f"Key pool at {stored}, adding {count} keys")
    pair.replenish(count=count)


def run_mode(config: BenchConfig, mode: str, pair: Optional[KmePair] = None) -> List[HandshakeResult]:
    results = []
    for iteration in range(config.iterations):
        handshake_config = config.handshake_config(mode=mode, iteration=iteration)
        if handshake_config.is_qkd and pair is not None:
            _top_up(pair=pair, needed=handshake_config.assignment_plan().slot_count)
        result = run_full_handshake(config=handshake_config, pair=pair)
        if not result.success:
            LOGGER.warning(f"{mode} iteration {iteration} failed in {result.failed_phase}: {result.status}")
        results.append(result)
    failed = len([r for r in results if not r.success])
    LOGGER.info(f"{mode}: {config.iterations - failed}/{config.iterations} handshakes succeeded")
    return results


def run_bench(config: BenchConfig, output_dir: Optional[pathlib.Path] = None) -> BenchReport:
    """
    Benchmarks every configured mode and writes the report files.

    Files: samples_<mode>.csv per mode, phase_stats.csv, overhead.csv and report.md.
    The overhead table uses the first successful run of each mode.
    """
    output_dir = pathlib.Path(output_dir or config.output_dir)
    output_dir.mkdir(parents=True, exist_ok=True)
    pair = None
    if QKD_MODE in config.modes and config.kms_endpoint == "local":
        pair = KmePair(config=config.kms)

    stats = []
    failures: Dict[str, int] = {}
    failure_statuses: Dict[str, List[str]] = {}
    first_success: Dict[str, HandshakeResult] = {}
    output_files = []
    for mode in config.modes:
        LOGGER.info(f"Benchmarking {mode}, {config.iterations} iterations")
        results = run_mode(config=config, mode=mode, pair=pair)
        frame = samples_frame(results)
        samples_path = output_dir.joinpath(f"samples_{mode}.csv")
        frame.to_csv(samples_path, index=False)
        output_files.append(str(samples_path))
        stats.extend(mode_stats(mode=mode, frame=frame))
        failed = [r for r in results if not r.success]
        failures[mode] = len(failed)
        failure_statuses[mode] = [r.status for r in failed]
        success = next((r for r in results if r.success), None)
        if success is not None:
            first_success[mode] = success

    overhead = None
    if first_success:
        overhead = overhead_table(results=first_success, framing_bytes=config.effective_framing)

    dh_cost = None
    measured_gaps = {}
    init_means = {entry.mode: entry.mean_ms for entry in stats if entry.phase == "INIT"}
    dh_modes = [mode for mode in init_means if mode != QKD_MODE]
    if QKD_MODE in init_means and dh_modes:
        dh_cost = bench_dh_cost(group=MODP_2048, iterations=config.dh_iterations)
        measured_gaps = {mode: init_means[mode] - init_means[QKD_MODE] for mode in dh_modes}

    report = BenchReport(
        config=config,
        stats=stats,
        overhead=overhead,
        failures=failures,
        failure_statuses=failure_statuses,
        dh_cost=dh_cost,
        measured_init_gap_ms=measured_gaps
    )
    if stats:
        tables_markdown, csv_files = render_tables(stats=stats, overhead=overhead)
        for name, text in csv_files.items():
            path = output_dir.joinpath(name)
            path.write_text(text)
            output_files.append(str(path))
    else:
        tables_markdown = "No handshake succeeded.\n"
    report_path = output_dir.joinpath("report.md")
    report_path.write_text(render_report(report=report, tables_markdown=tables_markdown))
    output_files.append(str(report_path))
    report.output_files = output_files
    if report.success:
        LOGGER.info(f"Benchmark finished, report in {report_path}")
    else:
        LOGGER.error(f"Benchmark finished with failures: {failures}")
    return report
