"""
``qkd-ike`` command line.

Subcommands: ``bench``, ``dh-cost``, ``kms-serve`` and ``handshake``. Every subcommand reads
the same optional config file, flags override its fields. Exit code is 0 only on full success.
"""
# Standard Libraries
import argparse
import sys
import time
# Third party packages
from pydantic import ValidationError
from pydantic.typing import List, Optional, Dict, Any
# Local package
from qkd_ike import config as qkd_config
from qkd_ike.config import LOGGER_BENCH, LOGGER_SPEC
from qkd_ike.exceptions import QkdIkeError
from qkd_ike.handshake import run_full_handshake
from qkd_ike.keys import MODP_2048, TOY_GROUP
from qkd_ike.kms import KmePair
from qkd_ike.kms.server import serve_pair, stop_pair
from qkd_ike.loaders import ConfigLoader
from qkd_ike.models.bench import BenchConfig
from qkd_ike.models.bench.BenchModels import ALL_MODES
# Local module
from .harness import run_bench, bench_dh_cost

LOGGER = LOGGER_BENCH

DH_GROUPS = {MODP_2048.group_id: MODP_2048, TOY_GROUP.group_id: TOY_GROUP}

EXIT_OK = 0
EXIT_FAILED = 1
EXIT_USAGE = 2


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qkd-ike", description="QKD based IKEv2 handshake lab for 5G NWu")
    parser.add_argument("-c", "--config", help="JSON or YAML benchmark configuration")
    parser.add_argument("-v", "--verbosity", type=int, choices=range(0, 6), help="0 (silent) to 5 (debug), all subsystems")
    subparsers = parser.add_subparsers(dest="command", required=True)

    bench = subparsers.add_parser("bench", help="Benchmark handshakes of every configured mode")
    bench.add_argument("--modes", nargs="+", choices=ALL_MODES)
    bench.add_argument("-n", "--iterations", type=int)
    bench.add_argument("-o", "--output-dir")
    bench.add_argument("--dh-iterations", type=int)
    bench.add_argument("--no-framing", action="store_true", help="Report IKE message sizes without Ethernet/IP/UDP")
    _add_handshake_arguments(bench)

    handshake = subparsers.add_parser("handshake", help="Run one handshake and print the result with its trace")
    handshake.add_argument("-m", "--mode", choices=ALL_MODES, default="QKD")
    handshake.add_argument("--format", choices=["yaml", "json"], default="yaml")
    _add_handshake_arguments(handshake)

    dh_cost = subparsers.add_parser("dh-cost", help="Measure the host cost of DH exponentiations")
    dh_cost.add_argument("-n", "--iterations", type=int, default=100)
    dh_cost.add_argument("--group", type=int, choices=sorted(DH_GROUPS.keys()), default=MODP_2048.group_id)

    kms_serve = subparsers.add_parser(
        "kms-serve", help="Serve both KMEs of a simulated pair over HTTP",
        description="The pool starts with max(kms.initial_keys, iterations x keys per QKD handshake) keys, "
                    "so a bench run with the same config and flags never exhausts it. "
                    "kms.generation_rate adds keys while serving."
    )
    kms_serve.add_argument("-n", "--iterations", type=int, help="Bench iterations the pool is sized for")
    kms_serve.add_argument("--key-count", type=int, help="Keys requested per QKD handshake")
    kms_serve.add_argument("--child-sas", type=int)
    return parser


def _add_handshake_arguments(parser: argparse.ArgumentParser):
    parser.add_argument("--transport", choices=["memory", "udp"])
    parser.add_argument("--latency-ms", type=float, help="One way transport latency")
    parser.add_argument("--loss", type=float, help="Datagram loss probability")
    parser.add_argument("--kms-endpoint", choices=["local", "http"])
    parser.add_argument("--kms-latency-ms", type=float)
    parser.add_argument("--key-count", type=int, help="Keys requested per QKD handshake")
    parser.add_argument("--key-id-encoding", choices=["raw", "text"])
    parser.add_argument("--child-sas", type=int)
    parser.add_argument("--seed", type=int)


def overrides_from(args: argparse.Namespace) -> Dict[str, Any]:
    """Maps parsed flags to dotted BenchConfig paths. Flags not given stay None."""
    overrides = {
        "modes": getattr(args, "modes", None),
        "iterations": getattr(args, "iterations", None) if args.command in ("bench", "kms-serve") else None,
        "output_dir": getattr(args, "output_dir", None),
        "dh_iterations": getattr(args, "dh_iterations", None),
        "transport.kind": getattr(args, "transport", None),
        "transport.latency_ms": getattr(args, "latency_ms", None),
        "transport.loss_probability": getattr(args, "loss", None),
        "kms_endpoint": getattr(args, "kms_endpoint", None),
        "kms_latency_ms": getattr(args, "kms_latency_ms", None),
        "key_count_override": getattr(args, "key_count", None),
        "key_id_encoding": getattr(args, "key_id_encoding", None),
        "sa_plan.child_sa_count": getattr(args, "child_sas", None),
        "seed": getattr(args, "seed", None)
    }
    if getattr(args, "no_framing", False):
        overrides["include_framing"] = False
    return overrides


def set_verbosity(verbosity: int):
    for spec in LOGGER_SPEC.values():
        setattr(qkd_config.CONFIG, spec["level_attr"], verbosity)
    qkd_config.update_loggers()


def cmd_bench(config: BenchConfig) -> int:
    report = run_bench(config=config)
    for path in report.output_files:
        print(path)
    return EXIT_OK if report.success else EXIT_FAILED


def cmd_handshake(config: BenchConfig, mode: str, output_format: str) -> int:
    result = run_full_handshake(config=config.handshake_config(mode=mode))
    if output_format == "json":
        print(result.json(indent=2))
    else:
        print(result.yaml(exclude_none=True))
    return EXIT_OK if result.success else EXIT_FAILED


def cmd_dh_cost(iterations: int, group_id: int) -> int:
    report = bench_dh_cost(group=DH_GROUPS[group_id], iterations=iterations)
    print(report.yaml())
    print(f"predicted_init_gap_ms: {report.predicted_init_gap_ms}")
    return EXIT_OK


def serving_pair(config: BenchConfig) -> KmePair:
    """
    KME pair for kms-serve, its pool sized for a bench run with the same config.

    Remote KMEs cannot be topped up between iterations, so the pool starts with
    max(kms.initial_keys, iterations x keys per QKD handshake), capped at kms.capacity.
    """
    initial_keys = min(max(config.kms.initial_keys, config.qkd_key_demand), config.kms.capacity)
    if initial_keys < config.qkd_key_demand and config.kms.generation_rate <= 0:
        LOGGER.warning(f"Pool capacity {config.kms.capacity} is below the {config.qkd_key_demand} keys a bench run draws")
    LOGGER.info(f"Serving {initial_keys} keys, generation rate {config.kms.generation_rate} keys/s")
    return KmePair(config=config.kms.copy(update={"initial_keys": initial_keys}))


def cmd_kms_serve(config: BenchConfig) -> int:
    pair = serving_pair(config=config)
    pair.start_generation()
    threads = serve_pair(pair=pair)
    try:
        while all(thread.is_alive() for thread in threads):
            time.sleep(0.5)
    except KeyboardInterrupt:
        LOGGER.info("Stopping KMEs")
    finally:
        stop_pair(pair=pair)
        for thread in threads:
            thread.join(timeout=5)
    return EXIT_OK


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.verbosity is not None:
        set_verbosity(args.verbosity)
    try:
        config = ConfigLoader(input_file=args.config).load(overrides=overrides_from(args))
    except (FileNotFoundError, ValueError, ValidationError) as e:
        print(f"Invalid configuration: {e}", file=sys.stderr)
        return EXIT_USAGE
    try:
        if args.command == "bench":
            return cmd_bench(config=config)
        if args.command == "handshake":
            return cmd_handshake(config=config, mode=args.mode, output_format=args.format)
        if args.command == "dh-cost":
            return cmd_dh_cost(iterations=args.iterations, group_id=args.group)
        return cmd_kms_serve(config=config)
    except (QkdIkeError, ValueError) as e:
        LOGGER.error(f"{args.command} failed: {repr(e)}")
        return EXIT_FAILED


if __name__ == "__main__":
    sys.exit(main())
