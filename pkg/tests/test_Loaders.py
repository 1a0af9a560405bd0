import json
import pathlib
import tempfile
import unittest

from pydantic import ValidationError

from qkd_ike.loaders import BaseLoader, ConfigLoader
from qkd_ike.models.bench import BenchConfig


class TestBaseLoader(unittest.TestCase):

    TEST_CLASS = BaseLoader

    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()
        self.tmp_path = pathlib.Path(self.tmp.name)

    def tearDown(self):
        self.tmp.cleanup()

    def test_missing_file(self):
        with self.assertRaises(FileNotFoundError):
            self.TEST_CLASS().resolve_path(self.tmp_path.joinpath("missing.yml"))

    def test_directory(self):
        with self.assertRaises(FileNotFoundError):
            self.TEST_CLASS().resolve_path(self.tmp_path)

    def test_load_document(self):
        test_cases = [
            {"test_name": "Test-Yaml", "name": "config.yml", "text": "iterations: 5\nmodes: [QKD]\n", "result": {"iterations": 5, "modes": ["QKD"]}},
            {"test_name": "Test-Json", "name": "config.json", "text": json.dumps({"iterations": 7}), "result": {"iterations": 7}},
            {"test_name": "Test-Empty", "name": "empty.yml", "text": "", "result": {}},
        ]
        for test_case in test_cases:
            with self.subTest(msg=test_case["test_name"]):
                path = self.tmp_path.joinpath(test_case["name"])
                path.write_text(test_case["text"])
                self.assertEqual(self.TEST_CLASS().load_document(path), test_case["result"])

    def test_not_a_mapping(self):
        path = self.tmp_path.joinpath("list.yml")
        path.write_text("- QKD\n- DH_PSK\n")
        with self.assertRaises(ValueError):
            self.TEST_CLASS().load_document(path)


class TestConfigLoader(unittest.TestCase):

    RESOURCE_PATH = pathlib.Path(__file__).resolve().parent.joinpath("resources", "bench", "data")

    def test_defaults_without_file(self):
        config = ConfigLoader().load()
        self.assertEqual(config, BenchConfig())

    def test_resource_file(self):
        config = ConfigLoader(input_file=self.RESOURCE_PATH.joinpath("TestBenchConfig-01.yml")).load()
        self.assertEqual(config.modes, ["DH_PSK", "QKD"])
        self.assertEqual(config.key_count_override, 15)
        self.assertEqual(config.seed, 11)

    def test_overrides(self):
        loader = ConfigLoader(input_file=self.RESOURCE_PATH.joinpath("TestBenchConfig-01.yml"))
        config = loader.load(overrides={
            "iterations": 3,
            "transport.kind": "udp",
            "transport.latency_ms": 2.5,
            "sa_plan.child_sa_count": 3,
            "kms_latency_ms": None,
            "seed": None
        })
        self.assertEqual(config.iterations, 3)
        self.assertEqual(config.transport.kind, "udp")
        self.assertEqual(config.transport.latency_ms, 2.5)
        self.assertEqual(config.sa_plan.child_sa_count, 3)
        self.assertEqual(config.eap.round_count, 4)
        self.assertEqual(config.seed, 11)

    def test_apply_overrides_copies(self):
        data = {"transport": {"kind": "memory"}}
        result = ConfigLoader().apply_overrides(data=data, overrides={"transport.kind": "udp", "kms.seed": 4})
        self.assertEqual(result, {"transport": {"kind": "udp"}, "kms": {"seed": 4}})
        self.assertEqual(data, {"transport": {"kind": "memory"}})

    def test_override_through_scalar(self):
        with self.assertRaises(ValueError):
            ConfigLoader().apply_overrides(data={"transport": "memory"}, overrides={"transport.kind": "udp"})

    def test_invalid_config(self):
        with tempfile.TemporaryDirectory() as tmp:
            path = pathlib.Path(tmp).joinpath("bad.json")
            path.write_text(json.dumps({"modes": ["QKD", "QKD"]}))
            with self.assertRaises(ValidationError):
                ConfigLoader(input_file=path).load()

    def test_missing_file(self):
        with self.assertRaises(FileNotFoundError):
            ConfigLoader(input_file="does-not-exist.yml")


if __name__ == '__main__':
    unittest.main()
