import unittest

import yaml
from pydantic import ValidationError

from qkd_ike.constants import EapCode
from qkd_ike.exceptions import ProtocolError
from qkd_ike.handshake import HandshakeRunner, Initiator, Responder, run_full_handshake, message_label, failure_status
from qkd_ike.handshake.EapStub import EapServer, EapPeer, build_request, build_success, parse, eap_msk
from qkd_ike.kms import KmePair
from qkd_ike.models.handshake import HandshakeConfig, EapRoundPlan
from qkd_ike.models.kms import KmsConfig
from qkd_ike.models.transport import TransportConfig
from qkd_ike.transport import InMemoryTransport

from tests.BaseTestClass import TestModelBase

FRAMING = 42

COMMON_AUTH_SIZES = {
    "IKE_AUTH MID=01 I": 234,
    "IKE_AUTH MID=01 R": 1578,
    "IKE_AUTH MID=02 I": 186,
    "IKE_AUTH MID=02 R": 170,
    "IKE_AUTH MID=03 I": 154,
    "IKE_AUTH MID=03 R": 154,
    "IKE_AUTH MID=04 I": 186,
    "IKE_AUTH MID=04 R": 122,
    "IKE_AUTH MID=05 I": 154,
    "IKE_AUTH MID=05 R": 266,
}

PSK_SIZES = dict(
    {"IKE_SA_INIT MID=00 I": 496, "IKE_SA_INIT MID=00 R": 496},
    **COMMON_AUTH_SIZES,
    **{"CREATE_CHILD_SA MID=06 I": 250, "CREATE_CHILD_SA MID=06 R": 250}
)

QKD_SIZES = dict(
    {"IKE_SA_INIT MID=00 I": 224, "IKE_SA_INIT MID=00 R": 505},
    **COMMON_AUTH_SIZES,
    **{"CREATE_CHILD_SA MID=06 I": 202, "CREATE_CHILD_SA MID=06 R": 202}
)


class ScriptedRandom(object):
    """Loss decisions in send order, every send past the script is delivered."""

    def __init__(self, values):
        self.values = list(values)

    def random(self) -> float:
        return self.values.pop(0) if self.values else 0.99


class TestHandshakeConfig(TestModelBase):

    TEST_CLASS = HandshakeConfig
    RESOURCE_DIR = TestModelBase.RESOURCE_DIR.joinpath("handshake")

    def test_psk_from_text(self):
        config = HandshakeConfig(mode="DH_PSK", psk="lab-secret")
        self.assertEqual(config.psk, b"lab-secret")

    def test_default_plan(self):
        plan = HandshakeConfig(mode="QKD").assignment_plan()
        self.assertEqual(plan.slot_count, 13)
        self.assertEqual(plan.reserve_count, 0)

    def test_key_count_override(self):
        test_cases = [
            {"test_name": "Test-Exact", "override": 13, "slots": 13},
            {"test_name": "Test-Reserve", "override": 20, "slots": 20},
        ]
        for test_case in test_cases:
            with self.subTest(msg=test_case["test_name"]):
                config = HandshakeConfig(mode="QKD", key_count_override=test_case["override"])
                self.assertEqual(config.assignment_plan().slot_count, test_case["slots"])

    def test_invalid(self):
        test_cases = [
            {"test_name": "Test-Unknown-Mode", "data": {"mode": "PQC"}},
            {"test_name": "Test-Override-Below-Plan", "data": {"mode": "QKD", "key_count_override": 12}},
            {"test_name": "Test-Override-Below-Larger-Plan", "data": {"mode": "QKD", "sa_plan": {"child_sa_count": 3}, "key_count_override": 13}},
            {"test_name": "Test-Short-Nonce", "data": {"mode": "DH_PSK", "nonce_length": 8}},
            {"test_name": "Test-Zero-Child-Sas", "data": {"mode": "DH_PSK", "sa_plan": {"child_sa_count": 0}}},
        ]
        for test_case in test_cases:
            with self.subTest(msg=test_case["test_name"]):
                with self.assertRaises(ValidationError):
                    HandshakeConfig(**test_case["data"])


class TestEapRoundPlan(TestModelBase):

    TEST_CLASS = EapRoundPlan
    RESOURCE_DIR = TestModelBase.RESOURCE_DIR.joinpath("handshake")

    def test_lengths_repeat_last(self):
        plan = EapRoundPlan(request_lengths=[100, 50], response_lengths=[40])
        self.assertEqual([plan.request_length(n) for n in range(1, 5)], [100, 50, 50, 50])
        self.assertEqual([plan.response_length(n) for n in range(1, 4)], [40, 40, 40])

    def test_auth_message_ids(self):
        self.assertEqual(EapRoundPlan().auth_message_ids, [1, 2, 3, 4, 5])
        self.assertEqual(EapRoundPlan(round_count=1).auth_message_ids, [1, 2])

    def test_fail_round_beyond_rounds(self):
        with self.assertRaises(ValidationError):
            EapRoundPlan(round_count=3, fail_at_round=4)

    def test_length_below_header(self):
        with self.assertRaises(ValidationError):
            EapRoundPlan(request_lengths=[8])


class TestEapStub(unittest.TestCase):

    def test_request_framing(self):
        packet = parse(build_request(identifier=1, length=48))
        self.assertEqual(packet.code, EapCode.REQUEST)
        self.assertEqual(packet.length, 48)
        self.assertEqual(len(packet.body), 48 - 14)

    def test_success(self):
        packet = parse(build_success(identifier=4))
        self.assertTrue(packet.is_success)
        self.assertEqual(packet.identifier, 4)

    def test_malformed(self):
        test_cases = [
            {"test_name": "Test-Truncated", "data": b"\x01\x01"},
            {"test_name": "Test-Length-Mismatch", "data": build_request(identifier=1, length=48)[:-1]},
            {"test_name": "Test-Not-Expanded", "data": bytes([1, 1, 0, 20, 4]) + bytes(15)},
        ]
        for test_case in test_cases:
            with self.subTest(msg=test_case["test_name"]):
                with self.assertRaises(ProtocolError):
                    parse(test_case["data"])

    def test_rounds(self):
        plan = EapRoundPlan()
        server, peer = EapServer(plan=plan), EapPeer(plan=plan)
        codes = []
        while not server.finished:
            message = server.next_message()
            packet = parse(message)
            codes.append(packet.code)
            if packet.code == EapCode.REQUEST:
                server.check_response(peer.answer(packet))
        self.assertEqual(codes, [EapCode.REQUEST, EapCode.REQUEST, EapCode.REQUEST, EapCode.SUCCESS])

    def test_failure_round(self):
        server = EapServer(plan=EapRoundPlan(fail_at_round=2))
        server.next_message()
        self.assertTrue(parse(server.next_message()).is_failure)

    def test_out_of_round_response(self):
        plan = EapRoundPlan()
        server, peer = EapServer(plan=plan), EapPeer(plan=plan)
        server.next_message()
        stale = peer.answer(parse(build_request(identifier=7, length=32)))
        with self.assertRaises(ProtocolError):
            server.check_response(stale)

    def test_msk_depends_on_nonces(self):
        self.assertNotEqual(eap_msk(b"d" * 32, b"i" * 32, b"r" * 32), eap_msk(b"d" * 32, b"r" * 32, b"i" * 32))


class TestHandshakeModes(unittest.TestCase):

    def run_mode(self, mode: str, **kwargs):
        params = {"mode": mode, "seed": 11}
        params.update(kwargs)
        return run_full_handshake(config=HandshakeConfig(**params))

    def test_modes_succeed(self):
        for mode in ["DH_PSK", "DH_CERT", "QKD"]:
            with self.subTest(msg=f"Test-{mode}"):
                result = self.run_mode(mode)
                self.assertTrue(result.success, result.error)
                self.assertEqual(result.status, "OK")
                self.assertTrue(result.keys_agree)
                self.assertTrue(result.seal_check_ok)
                self.assertEqual(result.message_count, 14)
                self.assertEqual(result.message_ids, [0, 1, 2, 3, 4, 5, 6])
                self.assertEqual(sorted(result.phase_durations_ms.keys()), ["AUTH", "CHILD_SA", "INIT"])
                self.assertEqual(set(result.initiator_fingerprints.keys()), {"ike", "child1", "child2"})

    def test_counters(self):
        test_cases = [
            {"test_name": "Test-DH-PSK", "mode": "DH_PSK", "modexp": 4, "kms_calls": 0},
            {"test_name": "Test-DH-CERT", "mode": "DH_CERT", "modexp": 4, "kms_calls": 0},
            {"test_name": "Test-QKD", "mode": "QKD", "modexp": 0, "kms_calls": 2},
        ]
        for test_case in test_cases:
            with self.subTest(msg=test_case["test_name"]):
                counters = self.run_mode(test_case["mode"]).counters
                self.assertEqual(counters.modexp, test_case["modexp"])
                self.assertEqual(counters.kms_calls, test_case["kms_calls"])
                if test_case["mode"] == "QKD":
                    self.assertEqual(counters.prf_plus, 0)
                else:
                    self.assertGreater(counters.prf_plus, 0)

    def test_message_sizes(self):
        test_cases = [
            {"test_name": "Test-DH-PSK", "mode": "DH_PSK", "sizes": PSK_SIZES, "total": 4696},
            {"test_name": "Test-QKD", "mode": "QKD", "sizes": QKD_SIZES, "total": 4337},
        ]
        for test_case in test_cases:
            with self.subTest(msg=test_case["test_name"]):
                result = self.run_mode(test_case["mode"])
                self.assertEqual(result.bytes_by_label(framing_bytes=FRAMING), test_case["sizes"])
                self.assertEqual(result.total_bytes(framing_bytes=FRAMING), test_case["total"])
                self.assertEqual(result.total_bytes(), test_case["total"] - 14 * FRAMING)

    def test_size_ordering(self):
        results = {mode: self.run_mode(mode) for mode in ["DH_PSK", "DH_CERT", "QKD"]}
        totals = {mode: result.total_bytes(framing_bytes=FRAMING) for mode, result in results.items()}
        self.assertLess(totals["QKD"], totals["DH_PSK"])
        self.assertLess(totals["DH_PSK"], totals["DH_CERT"])
        psk, qkd = results["DH_PSK"].bytes_by_label(), results["QKD"].bytes_by_label()
        self.assertLess(qkd["IKE_SA_INIT MID=00 I"], psk["IKE_SA_INIT MID=00 I"])
        self.assertGreater(qkd["IKE_SA_INIT MID=00 R"], psk["IKE_SA_INIT MID=00 R"])
        for mode, reference in {"DH_PSK": 5388, "DH_CERT": 6604, "QKD": 4991}.items():
            self.assertLess(abs(totals[mode] - reference) / reference, 0.15)

    def test_trace_alternates(self):
        result = self.run_mode("QKD")
        self.assertEqual([r.direction for r in result.trace], ["I->R", "R->I"] * 7)
        self.assertEqual(result.trace[0].label, "IKE_SA_INIT MID=00 I")
        self.assertEqual(result.trace[-1].label, "CREATE_CHILD_SA MID=06 R")

    def test_yaml_output(self):
        result = self.run_mode("QKD")
        text = result.yaml(exclude_none=True)
        self.assertTrue(text.startswith("mode: QKD\nstatus: OK\nsuccess: true\n"))
        self.assertIn("message_ids: [0, 1, 2, 3, 4, 5, 6]", text)
        self.assertEqual(yaml.safe_load(text)["initiator_counters"]["kms_calls"], 1)

    def test_seeded_keys_repeat(self):
        first = self.run_mode("DH_PSK")
        second = self.run_mode("DH_PSK")
        self.assertEqual(first.initiator_fingerprints, second.initiator_fingerprints)
        third = self.run_mode("DH_PSK", seed=12)
        self.assertNotEqual(first.initiator_fingerprints["ike"], third.initiator_fingerprints["ike"])

    def test_text_key_ids(self):
        resource = TestHandshakeConfig.RESOURCE_DIR.joinpath("data", "TestHandshakeConfig-01.yml")
        config = HandshakeConfig.parse_obj(yaml.safe_load(resource.read_text()))
        self.assertEqual(config.key_id_encoding, "text")
        result = run_full_handshake(config=config)
        self.assertTrue(result.success, result.error)
        self.assertTrue(result.keys_agree)
        raw = self.run_mode("QKD")
        self.assertGreater(result.bytes_by_label()["IKE_SA_INIT MID=00 R"], raw.bytes_by_label()["IKE_SA_INIT MID=00 R"])

    def test_more_child_sas(self):
        result = self.run_mode("QKD", sa_plan={"child_sa_count": 3})
        self.assertTrue(result.success, result.error)
        self.assertEqual(result.message_ids, [0, 1, 2, 3, 4, 5, 6, 7])
        self.assertEqual(len(result.initiator_fingerprints), 4)

    def test_single_child_sa(self):
        result = self.run_mode("DH_PSK", sa_plan={"child_sa_count": 1})
        self.assertTrue(result.success, result.error)
        self.assertEqual(result.message_count, 12)
        self.assertNotIn("CREATE_CHILD_SA MID=06 I", result.bytes_by_label())

    def test_shared_kme_pair(self):
        pair = KmePair(config=KmsConfig(initial_keys=100, seed=2))
        config = HandshakeConfig(mode="QKD")
        for _ in range(3):
            self.assertTrue(run_full_handshake(config=config, pair=pair).success)
        self.assertEqual(pair.kme_a.store.stored_key_count, 100 - 3 * 13)


class TestHandshakeFailures(unittest.TestCase):

    def test_no_proposal_chosen(self):
        runner = HandshakeRunner(config=HandshakeConfig(mode="QKD", seed=1))
        runner.responder = Responder(config=HandshakeConfig(mode="DH_PSK", seed=1))
        result = runner.run()
        self.assertFalse(result.success)
        self.assertEqual(result.status, "NO_PROPOSAL_CHOSEN")
        self.assertEqual(result.failed_phase, "INIT")
        self.assertEqual(result.message_count, 2)

    def test_kms_unavailable(self):
        config = HandshakeConfig(mode="QKD", kms=KmsConfig(initial_keys=5, seed=1))
        result = run_full_handshake(config=config)
        self.assertFalse(result.success)
        self.assertEqual(result.status, "KMS_UNAVAILABLE")
        self.assertEqual(result.failed_phase, "INIT")
        self.assertFalse(result.keys_agree)

    def test_eap_failure(self):
        test_cases = [
            {"test_name": "Test-First-Round", "fail_at_round": 1, "messages": 4},
            {"test_name": "Test-Second-Round", "fail_at_round": 2, "messages": 6},
        ]
        for test_case in test_cases:
            with self.subTest(msg=test_case["test_name"]):
                config = HandshakeConfig(mode="DH_PSK", seed=1, eap={"fail_at_round": test_case["fail_at_round"]})
                result = run_full_handshake(config=config)
                self.assertEqual(result.status, "EAP_FAILURE")
                self.assertEqual(result.failed_phase, "AUTH")
                self.assertEqual(result.message_count, test_case["messages"])

    def test_tampered_transcript(self):
        test_cases = [
            {"test_name": "Test-DH-PSK", "mode": "DH_PSK", "last_label": "IKE_AUTH MID=05 R"},
            {"test_name": "Test-DH-CERT", "mode": "DH_CERT", "last_label": "IKE_AUTH MID=01 R"},
            {"test_name": "Test-QKD", "mode": "QKD", "last_label": "IKE_AUTH MID=05 R"},
        ]
        for test_case in test_cases:
            with self.subTest(msg=test_case["test_name"]):
                runner = HandshakeRunner(config=HandshakeConfig(mode=test_case["mode"], seed=4))
                run_init = runner.run_init

                def tampered_init():
                    run_init()
                    altered = bytearray(runner.initiator.init_request)
                    altered[-1] ^= 0xFF
                    runner.initiator.init_request = bytes(altered)

                runner.run_init = tampered_init
                result = runner.run()
                self.assertFalse(result.success)
                self.assertEqual(result.status, "AUTHENTICATION_FAILED")
                self.assertEqual(result.failed_phase, "AUTH")
                self.assertEqual(result.trace[-1].label, test_case["last_label"])

    def test_key_count_mismatch(self):
        config = HandshakeConfig(mode="QKD", seed=1)
        runner = HandshakeRunner(config=config)
        runner.responder = Responder(
            config=HandshakeConfig(mode="QKD", seed=1, key_count_override=14), kms_client=runner.responder.kms_client
        )
        result = runner.run()
        self.assertEqual(result.status, "PROTOCOL_ERROR")
        self.assertEqual(result.failed_phase, "INIT")

    def test_timeout(self):
        transport = TransportConfig(loss_probability=1.0, retransmit_timeout_ms=5, retransmit_tries=2)
        result = run_full_handshake(config=HandshakeConfig(mode="QKD", transport=transport))
        self.assertEqual(result.status, "TIMEOUT")
        self.assertEqual(result.failed_phase, "INIT")
        self.assertEqual(len(result.trace), 2)
        self.assertEqual(result.message_count, 0)

    def test_failure_status_mapping(self):
        self.assertEqual(failure_status(ProtocolError("x")), "PROTOCOL_ERROR")
        self.assertEqual(failure_status(RuntimeError("x")), "PROTOCOL_ERROR")


class TestRetransmission(unittest.TestCase):

    def run_with_losses(self, losses):
        transport = TransportConfig(loss_probability=0.5, retransmit_timeout_ms=20, retransmit_tries=3)
        config = HandshakeConfig(mode="DH_PSK", seed=9, transport=transport)
        ends = InMemoryTransport.create_pair(config=transport)
        scripted = ScriptedRandom(losses)
        for end in ends:
            end.loss_rng = scripted
        return HandshakeRunner(config=config, transports=ends).run()

    def test_lost_request(self):
        result = self.run_with_losses([0.0])
        self.assertTrue(result.success, result.error)
        self.assertEqual(len(result.trace), 15)
        self.assertFalse(result.trace[0].delivered)
        self.assertEqual(result.message_count, 14)
        self.assertEqual(result.total_bytes(), sum(result.bytes_by_label().values()) + result.trace[0].bytes_on_wire)

    def test_lost_response_answered_from_cache(self):
        result = self.run_with_losses([0.99, 0.0])
        self.assertTrue(result.success, result.error)
        self.assertEqual(len(result.trace), 16)
        self.assertEqual([r.label for r in result.trace[:4]], ["IKE_SA_INIT MID=00 I", "IKE_SA_INIT MID=00 R"] * 2)
        self.assertEqual(result.trace[1].bytes_on_wire, result.trace[3].bytes_on_wire)
        self.assertEqual(result.responder_counters.modexp, 2)
        self.assertEqual(result.counters.modexp, 4)

    def test_no_loss(self):
        result = self.run_with_losses([])
        self.assertEqual(len(result.trace), 14)
        self.assertEqual(result.total_bytes(), sum(result.bytes_by_label().values()))

    def test_latency_above_retransmit_timeout(self):
        test_cases = [
            {"test_name": "Test-DH-PSK", "mode": "DH_PSK"},
            {"test_name": "Test-QKD", "mode": "QKD"},
        ]
        for test_case in test_cases:
            with self.subTest(msg=test_case["test_name"]):
                transport = TransportConfig(latency_ms=60, retransmit_timeout_ms=40, retransmit_tries=6)
                result = run_full_handshake(config=HandshakeConfig(mode=test_case["mode"], seed=1, transport=transport))
                self.assertTrue(result.success, result.error)
                self.assertTrue(result.keys_agree)
                self.assertTrue(result.seal_check_ok)
                self.assertEqual(result.message_ids, list(range(7)))
                self.assertGreater(len(result.trace), 14)
                self.assertEqual(len(result.bytes_by_label()), 14)

    def test_duplicates_from_earlier_exchange_dropped(self):
        runner = HandshakeRunner(config=HandshakeConfig(mode="QKD", seed=4))
        run_init = runner.run_init

        def run_init_with_duplicates():
            run_init()
            request = runner.initiator.init_request
            runner.initiator_end.send(request, label=message_label(request))
            response = runner.responder.response_cache[0]
            runner.responder_end.send(response, label=message_label(response))

        runner.run_init = run_init_with_duplicates
        result = runner.run()
        self.assertTrue(result.success, result.error)
        # duplicate request, its cached answer and the injected duplicate response
        self.assertEqual(len(result.trace), 17)
        self.assertEqual([r.label for r in result.trace].count("IKE_SA_INIT MID=00 R"), 3)
        self.assertEqual(result.responder_counters.kms_calls, 1)
        self.assertEqual(result.message_ids, list(range(7)))


class TestMessageLabel(unittest.TestCase):

    def test_init_request(self):
        data = Initiator(config=HandshakeConfig(mode="QKD", seed=1)).start()
        self.assertEqual(message_label(data), "IKE_SA_INIT MID=00 I")


if __name__ == '__main__':
    unittest.main()
