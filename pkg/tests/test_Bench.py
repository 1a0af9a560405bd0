import io
import pathlib
import random
import statistics
import tempfile
import unittest

from pydantic import ValidationError

from qkd_ike.bench import (
    phase_stats, samples_frame, mode_stats, overhead_table, render_tables, read_stats_csv, total_means, label_sort_key,
    run_bench, run_mode, bench_dh_cost
)
from qkd_ike.bench.cli import main, serving_pair, EXIT_OK, EXIT_USAGE
from qkd_ike.bench.tables import time_markdown
from qkd_ike.handshake import run_full_handshake
from qkd_ike.keys import MODP_2048, TOY_GROUP
from qkd_ike.kms import KmePair
from qkd_ike.models.bench import BenchConfig, PhaseStats
from qkd_ike.models.handshake import HandshakeResult
from qkd_ike.models.kms import KmsConfig

from tests.BaseTestClass import TestModelBase


def make_stats(mode: str, phase: str, mean: float) -> PhaseStats:
    return PhaseStats(
        mode=mode, phase=phase, count=1, mean_ms=mean, std_ms=0.0, min_ms=mean, q1_ms=mean, median_ms=mean,
        q3_ms=mean, max_ms=mean
    )


class TestBenchConfig(TestModelBase):

    TEST_CLASS = BenchConfig
    RESOURCE_DIR = TestModelBase.RESOURCE_DIR.joinpath("bench")

    def test_defaults(self):
        config = BenchConfig()
        self.assertEqual(config.modes, ["DH_PSK", "DH_CERT", "QKD"])
        self.assertEqual(config.iterations, 100)
        self.assertEqual(config.effective_framing, 42)
        self.assertEqual(BenchConfig(include_framing=False).effective_framing, 0)

    def test_invalid(self):
        test_cases = [
            {"test_name": "Test-No-Modes", "data": {"modes": []}},
            {"test_name": "Test-Duplicate-Modes", "data": {"modes": ["QKD", "QKD"]}},
            {"test_name": "Test-Unknown-Mode", "data": {"modes": ["PQC"]}},
            {"test_name": "Test-Zero-Iterations", "data": {"iterations": 0}},
            {"test_name": "Test-Few-DH-Iterations", "data": {"dh_iterations": 5}},
        ]
        for test_case in test_cases:
            with self.subTest(msg=test_case["test_name"]):
                with self.assertRaises(ValidationError):
                    BenchConfig(**test_case["data"])

    def test_handshake_config(self):
        config = BenchConfig(seed=11, key_count_override=15, key_id_encoding="text")
        handshake = config.handshake_config(mode="QKD", iteration=2)
        self.assertEqual(handshake.seed, 13)
        self.assertEqual(handshake.key_count_override, 15)
        self.assertEqual(handshake.key_id_encoding, "text")
        self.assertIsNone(BenchConfig().handshake_config(mode="DH_PSK", iteration=5).seed)


class TestPhaseStats(unittest.TestCase):

    def test_against_statistics(self):
        rng = random.Random(3)
        test_cases = [
            {"test_name": "Test-Odd", "samples": [rng.uniform(1, 10) for _ in range(11)]},
            {"test_name": "Test-Even", "samples": [rng.uniform(1, 10) for _ in range(20)]},
            {"test_name": "Test-Two", "samples": [4.0, 6.0]},
        ]
        for test_case in test_cases:
            with self.subTest(msg=test_case["test_name"]):
                samples = test_case["samples"]
                result = phase_stats(mode="QKD", phase="INIT", samples=samples)
                q1, median, q3 = statistics.quantiles(samples, n=4, method="inclusive")
                self.assertEqual(result.count, len(samples))
                self.assertAlmostEqual(result.mean_ms, statistics.mean(samples))
                self.assertAlmostEqual(result.std_ms, statistics.stdev(samples))
                self.assertAlmostEqual(result.q1_ms, q1)
                self.assertAlmostEqual(result.median_ms, median)
                self.assertAlmostEqual(result.q3_ms, q3)
                self.assertEqual(result.min_ms, min(samples))
                self.assertEqual(result.max_ms, max(samples))

    def test_outliers(self):
        result = phase_stats(mode="DH_PSK", phase="AUTH", samples=[1.0, 2.0, 3.0, 4.0, 100.0])
        self.assertEqual(result.q1_ms, 2.0)
        self.assertEqual(result.q3_ms, 4.0)
        self.assertEqual(result.iqr_ms, 2.0)
        self.assertEqual(result.outliers, [100.0])

    def test_single_sample(self):
        result = phase_stats(mode="QKD", phase="CHILD_SA", samples=[2.5])
        self.assertEqual(result.std_ms, 0.0)
        self.assertEqual(result.median_ms, 2.5)
        self.assertEqual(result.outliers, [])

    def test_no_samples(self):
        with self.assertRaises(ValueError):
            phase_stats(mode="QKD", phase="INIT", samples=[])

    def test_unordered_quartiles_rejected(self):
        with self.assertRaises(ValidationError):
            PhaseStats(
                mode="QKD", phase="INIT", count=3, mean_ms=2.0, std_ms=1.0, min_ms=1.0, q1_ms=2.5, median_ms=2.0,
                q3_ms=2.8, max_ms=3.0
            )


class TestSamples(unittest.TestCase):

    def test_failed_runs_are_excluded(self):
        results = [
            HandshakeResult(mode="QKD", success=True, phase_durations_ms={"INIT": 1.0, "AUTH": 2.0, "CHILD_SA": 3.0}),
            HandshakeResult(mode="QKD", success=False, status="KMS_UNAVAILABLE", failed_phase="INIT", phase_durations_ms={}),
            HandshakeResult(mode="QKD", success=True, phase_durations_ms={"INIT": 3.0, "AUTH": 4.0, "CHILD_SA": 5.0}),
        ]
        frame = samples_frame(results)
        self.assertEqual(list(frame["status"]), ["OK", "KMS_UNAVAILABLE", "OK"])
        self.assertEqual(list(frame["total_ms"]), [6.0, 0.0, 12.0])
        stats = mode_stats(mode="QKD", frame=frame)
        self.assertEqual([s.phase for s in stats], ["INIT", "AUTH", "CHILD_SA"])
        self.assertTrue(all(s.count == 2 for s in stats))
        self.assertEqual(stats[0].mean_ms, 2.0)

    def test_no_success(self):
        frame = samples_frame([HandshakeResult(mode="QKD", success=False, status="TIMEOUT")])
        self.assertEqual(mode_stats(mode="QKD", frame=frame), [])


class TestTables(unittest.TestCase):

    def test_total_is_sum_of_means(self):
        stats = [make_stats("QKD", "INIT", 10.0), make_stats("QKD", "AUTH", 20.0), make_stats("QKD", "CHILD_SA", 30.0)]
        self.assertEqual(total_means(stats), {"QKD": 60.0})
        self.assertIn("| TOTAL | 60.000 ms |", time_markdown(stats))

    def test_time_table_cells(self):
        stats = [make_stats("DH_PSK", "INIT", 1.5), make_stats("QKD", "INIT", 0.25)]
        markdown = time_markdown(stats)
        self.assertIn("| Phase | DH_PSK | QKD |", markdown)
        self.assertIn("M: 1.500 ms, SD: 0.000 ms", markdown)
        self.assertIn("| AUTH | - | - |", markdown)

    def test_label_order(self):
        expected = [
            "IKE_SA_INIT MID=00 I", "IKE_SA_INIT MID=00 R", "IKE_AUTH MID=01 I", "IKE_AUTH MID=01 R",
            "IKE_AUTH MID=10 I", "CREATE_CHILD_SA MID=11 I", "CREATE_CHILD_SA MID=11 R", "unlabelled"
        ]
        shuffled = list(reversed(expected))
        self.assertEqual(sorted(shuffled, key=label_sort_key), expected)

    def test_stats_csv_round_trip(self):
        stats = [
            phase_stats(mode="DH_PSK", phase="INIT", samples=[1.0 / 3, 2.0, 3.0, 4.0, 100.0]),
            phase_stats(mode="QKD", phase="INIT", samples=[0.1, 0.2]),
        ]
        _, csv_files = render_tables(stats=stats)
        self.assertEqual(read_stats_csv(io.StringIO(csv_files["phase_stats.csv"])), stats)
        self.assertNotIn("overhead.csv", csv_files)

    def test_empty(self):
        with self.assertRaises(ValueError):
            render_tables(stats=[])

    def test_overhead_table(self):
        results = {mode: run_full_handshake(config=BenchConfig(seed=1).handshake_config(mode)) for mode in ["DH_PSK", "QKD"]}
        table = overhead_table(results=results, framing_bytes=42)
        self.assertEqual(table.totals, {"DH_PSK": 4696, "QKD": 4337})
        self.assertEqual(table.labels[0], "IKE_SA_INIT MID=00 I")
        self.assertEqual(table.labels[-1], "CREATE_CHILD_SA MID=06 R")
        self.assertEqual(table.size("IKE_SA_INIT MID=00 I", "QKD"), 224)
        again = overhead_table(results=results, framing_bytes=42)
        self.assertEqual(table, again)
        markdown, csv_files = render_tables(stats=[make_stats("QKD", "INIT", 1.0)], overhead=table)
        self.assertIn("| TOTAL | 4696 | 4337 |", markdown)
        self.assertTrue(csv_files["overhead.csv"].strip().endswith("TOTAL,4696,4337"))


class TestDhCost(unittest.TestCase):

    def test_toy_group_is_cheaper(self):
        toy = bench_dh_cost(group=TOY_GROUP, iterations=10, rng=random.Random(1))
        modp = bench_dh_cost(group=MODP_2048, iterations=10, rng=random.Random(1))
        self.assertEqual(modp.group_id, 14)
        self.assertLess(toy.predicted_init_gap_ms, modp.predicted_init_gap_ms)
        self.assertAlmostEqual(modp.predicted_init_gap_ms, 2 * (modp.keypair_mean_ms + modp.shared_secret_mean_ms))

    def test_too_few_iterations(self):
        with self.assertRaises(ValueError):
            bench_dh_cost(group=TOY_GROUP, iterations=9)


class TestRepeatedHandshakes(unittest.TestCase):
    """One hundred group 14 handshakes per mode, shared by the checks below."""

    ITERATIONS = 100

    @classmethod
    def setUpClass(cls):
        cls.config = BenchConfig(iterations=cls.ITERATIONS, seed=21, kms=KmsConfig(initial_keys=200))
        pair = KmePair(config=cls.config.kms)
        cls.results = {mode: run_mode(config=cls.config, mode=mode, pair=pair) for mode in cls.config.modes}
        cls.init_means = {
            mode: next(s.mean_ms for s in mode_stats(mode=mode, frame=samples_frame(results)) if s.phase == "INIT")
            for mode, results in cls.results.items()
        }

    def test_every_handshake_succeeds(self):
        for mode, results in self.results.items():
            with self.subTest(msg=f"Test-{mode}"):
                self.assertEqual(len(results), self.ITERATIONS)
                for result in results:
                    self.assertTrue(result.success, result.error)
                    self.assertTrue(result.keys_agree)
                    self.assertTrue(result.seal_check_ok)
                    self.assertEqual(result.message_ids, list(range(7)))

    def test_qkd_init_is_faster(self):
        for mode in ["DH_PSK", "DH_CERT"]:
            with self.subTest(msg=f"Test-{mode}"):
                self.assertLess(self.init_means["QKD"], self.init_means[mode])

    def test_init_gap_matches_dh_cost(self):
        predicted = bench_dh_cost(group=MODP_2048, iterations=self.ITERATIONS).predicted_init_gap_ms
        measured = self.init_means["DH_PSK"] - self.init_means["QKD"]
        self.assertLess(abs(measured - predicted), 0.3 * predicted, f"measured {measured:.3f} ms, predicted {predicted:.3f} ms")


class TestRunBench(unittest.TestCase):

    def test_small_bench(self):
        config = BenchConfig(
            modes=["DH_PSK", "QKD"], iterations=3, dh_iterations=10, seed=5, kms=KmsConfig(initial_keys=20, seed=1)
        )
        with tempfile.TemporaryDirectory() as output_dir:
            report = run_bench(config=config, output_dir=pathlib.Path(output_dir))
            names = sorted(pathlib.Path(path).name for path in report.output_files)
            self.assertEqual(names, ["overhead.csv", "phase_stats.csv", "report.md", "samples_DH_PSK.csv", "samples_QKD.csv"])
            self.assertTrue(all(pathlib.Path(path).is_file() for path in report.output_files))
            text = pathlib.Path(output_dir).joinpath("report.md").read_text()
            self.assertIn("## Connection establishment time", text)
            self.assertIn("## DH cost", text)
            self.assertEqual(len(read_stats_csv(pathlib.Path(output_dir).joinpath("phase_stats.csv"))), 6)
        self.assertTrue(report.success)
        self.assertEqual(report.failures, {"DH_PSK": 0, "QKD": 0})
        self.assertEqual(len(report.stats), 6)
        self.assertEqual(report.stats_for("QKD", "INIT").count, 3)
        self.assertEqual(report.overhead.totals, {"DH_PSK": 4696, "QKD": 4337})
        self.assertIsNotNone(report.dh_cost)
        self.assertEqual(list(report.measured_init_gap_ms.keys()), ["DH_PSK"])

    def test_failures_reported(self):
        config = BenchConfig(modes=["QKD"], iterations=2, eap={"fail_at_round": 2})
        with tempfile.TemporaryDirectory() as output_dir:
            report = run_bench(config=config, output_dir=output_dir)
            text = pathlib.Path(output_dir).joinpath("report.md").read_text()
        self.assertFalse(report.success)
        self.assertEqual(report.failure_statuses, {"QKD": ["EAP_FAILURE", "EAP_FAILURE"]})
        self.assertEqual(report.stats, [])
        self.assertIsNone(report.overhead)
        self.assertIn("* QKD: 2 failed (EAP_FAILURE)", text)


class TestCli(unittest.TestCase):

    def test_dh_cost(self):
        self.assertEqual(main(["dh-cost", "-n", "10", "--group", "0"]), EXIT_OK)

    def test_handshake(self):
        self.assertEqual(main(["handshake", "-m", "QKD", "--seed", "1", "--format", "json"]), EXIT_OK)

    def test_bench(self):
        with tempfile.TemporaryDirectory() as output_dir:
            code = main(["bench", "--modes", "QKD", "-n", "2", "-o", output_dir, "--no-framing"])
            self.assertEqual(code, EXIT_OK)
            self.assertTrue(pathlib.Path(output_dir).joinpath("report.md").is_file())

    def test_missing_config(self):
        self.assertEqual(main(["-c", "does-not-exist.yml", "bench"]), EXIT_USAGE)

    def test_invalid_override(self):
        self.assertEqual(main(["bench", "-n", "0"]), EXIT_USAGE)

    def test_serving_pair_sized_for_bench(self):
        test_cases = [
            {"test_name": "Test-Default", "data": {}, "stored": 1300},
            {"test_name": "Test-Fifteen-Keys", "data": {"key_count_override": 15}, "stored": 1500},
            {"test_name": "Test-Few-Iterations", "data": {"iterations": 5}, "stored": 1000},
            {"test_name": "Test-No-Qkd", "data": {"modes": ["DH_PSK"]}, "stored": 1000},
            {"test_name": "Test-Capped", "data": {"kms": {"capacity": 1200}}, "stored": 1200},
        ]
        for test_case in test_cases:
            with self.subTest(msg=test_case["test_name"]):
                pair = serving_pair(config=BenchConfig(**test_case["data"]))
                self.assertEqual(pair.kme_a.store.stored_key_count, test_case["stored"])
                self.assertEqual(pair.kme_b.store.stored_key_count, test_case["stored"])

    def test_served_pool_lasts_a_bench_run(self):
        config = BenchConfig(modes=["QKD"], iterations=5, kms=KmsConfig(initial_keys=0))
        pair = serving_pair(config=config)
        for iteration in range(config.iterations):
            result = run_full_handshake(config=config.handshake_config(mode="QKD", iteration=iteration), pair=pair)
            self.assertTrue(result.success, result.error)
        self.assertEqual(pair.kme_a.store.stored_key_count, 0)


if __name__ == '__main__':
    unittest.main()
