"""
Drives one UE <-> N3IWF connection establishment over a transport pair.

Both peers run in the calling thread. A request is sent, the responder is polled, and the
response is read back. Phases are timed back to back so INIT, AUTH and CHILD_SA cover the whole
handshake: INIT ends when the initiator processed the IKE_SA_INIT response, AUTH when it installed
the first Child SA and CHILD_SA when the last planned Child SA is installed.
"""
# Standard Libraries
import os
import time
# Third party packages
from pydantic.typing import Optional, Tuple
# Local package
from qkd_ike.codec import seal, unseal, peek_header
from qkd_ike.config import LOGGER_HANDSHAKE
from qkd_ike.exceptions import HandshakeError, TransportTimeout, IkeIntegrityError, IkeCodecError
from qkd_ike.kms import KmePair, KmsClient, LocalKmsClient, HttpKmsClient
from qkd_ike.models.handshake import HandshakeConfig, HandshakeResult, RESULT_PHASES
from qkd_ike.models.ike import IkeWireHeader
from qkd_ike.transport import BaseTransport, WireTrace, create_transport_pair
# Local module
from .Initiator import Initiator
from .Responder import Responder
from .Session import Session, message_label

LOGGER = LOGGER_HANDSHAKE

SEAL_CHECK_PAYLOAD = b"NWu user-plane check"


def create_kms_clients(config: HandshakeConfig, pair: KmePair = None) -> Tuple[Optional[KmsClient], Optional[KmsClient], Optional[KmePair]]:
    """KMS clients of the UE and the N3IWF. Classical modes get none."""
    if not config.is_qkd:
        return None, None, pair
    if config.kms_endpoint == "http":
        header = config.kms.sae_id_header
        initiator_kms = HttpKmsClient(base_url=config.kms.kme_b.base_url, sae_id=config.initiator_sae_id, sae_id_header=header)
        responder_kms = HttpKmsClient(base_url=config.kms.kme_a.base_url, sae_id=config.responder_sae_id, sae_id_header=header)
        return initiator_kms, responder_kms, pair
    pair = pair or KmePair(config=config.kms)
    initiator_kms = LocalKmsClient(
        kme=pair.kme_for(config.initiator_sae_id), sae_id=config.initiator_sae_id, latency_ms=config.kms_latency_ms
    )
    responder_kms = LocalKmsClient(
        kme=pair.kme_for(config.responder_sae_id), sae_id=config.responder_sae_id, latency_ms=config.kms_latency_ms
    )
    return initiator_kms, responder_kms, pair


class HandshakeRunner(object):

    def __init__(self, config: HandshakeConfig, pair: KmePair = None, initiator_kms: KmsClient = None,
                 responder_kms: KmsClient = None, transports: Tuple[BaseTransport, BaseTransport] = None):
        self.config = config
        if initiator_kms is None and responder_kms is None:
            initiator_kms, responder_kms, pair = create_kms_clients(config=config, pair=pair)
        self.pair = pair
        self.initiator = Initiator(config=config, kms_client=initiator_kms)
        self.responder = Responder(config=config, kms_client=responder_kms)
        if transports is None:
            self.trace = WireTrace()
            transports = create_transport_pair(config=config.transport, trace=self.trace)
        else:
            self.trace = transports[0].trace
        self.initiator_end, self.responder_end = transports
        self.bounds_ns = []
        self.current_phase = "INIT"

    def exchange(self, request: bytes) -> bytes:
        """
        Request/response round trip with retransmission.

        The request is resent after retransmit_timeout_ms without an answer, at most
        retransmit_tries sends in total. Late duplicates of earlier requests still reach the
        responder, and responses that do not answer this request are dropped.
        """
        transport = self.config.transport
        label = message_label(request)
        expected = peek_header(request)
        for attempt in range(1, transport.retransmit_tries + 1):
            if attempt > 1:
                LOGGER.warning(f"Retransmitting '{label}', attempt {attempt}")
            self.initiator_end.send(request, label=label)
            if not self._serve_responder(message_id=expected.message_id):
                continue
            response = self._await_response(expected=expected)
            if response is not None:
                return response
        raise HandshakeError(
            f"No response to '{label}' after {transport.retransmit_tries} attempts", status="TIMEOUT",
            phase=self.current_phase
        )

    def _serve_responder(self, message_id: int) -> bool:
        """Feeds queued requests to the responder until one with message_id was handled."""
        while True:
            try:
                received = self.responder_end.recv(timeout_ms=self.config.transport.retransmit_timeout_ms)
            except TransportTimeout:
                return False
            response = self.responder.handle(received)
            if response is not None:
                self.responder_end.send(response, label=message_label(response))
            try:
                if peek_header(received).message_id == message_id:
                    return True
            except IkeCodecError:
                pass

    def _await_response(self, expected: IkeWireHeader) -> Optional[bytes]:
        """First response matching the request's exchange and message ID within one retransmit timeout."""
        deadline = time.monotonic_ns() + int(self.config.transport.retransmit_timeout_ms * 1_000_000)
        while True:
            remaining_ms = (deadline - time.monotonic_ns()) / 1_000_000
            if remaining_ms <= 0:
                return None
            try:
                data = self.initiator_end.recv(timeout_ms=remaining_ms)
            except TransportTimeout:
                return None
            try:
                header = peek_header(data)
            except IkeCodecError as e:
                LOGGER.warning(f"Dropped undecodable response: {e}")
                continue
            if header.response and header.message_id == expected.message_id and header.exchange_type == expected.exchange_type:
                return data
            LOGGER.warning(f"Dropped stale '{message_label(data)}' while waiting for MID={expected.message_id:02d}")

    def _mark(self, phase: str = None):
        self.bounds_ns.append(time.monotonic_ns())
        if phase is not None:
            self.current_phase = phase

    def run_init(self):
        self._mark("INIT")
        response = self.exchange(self.initiator.start())
        self.initiator.handle_init_response(response)

    def run_auth_phase(self):
        """IKE_AUTH MID 1 up to the final AUTH exchange, ends with the control-plane Child SA."""
        self._mark("AUTH")
        done = False
        while not done:
            response = self.exchange(self.initiator.auth_request())
            done = self.initiator.handle_auth_response(response)

    def run_child_sa_phase(self):
        """One CREATE_CHILD_SA exchange per remaining planned Child SA."""
        self._mark("CHILD_SA")
        while self.initiator.needs_child_sa:
            response = self.exchange(self.initiator.child_sa_request())
            self.initiator.handle_child_sa_response(response)
        if self.initiator.state.phase == "ChildSa":
            self.initiator.state.advance("Established")

    def seal_check(self) -> bool:
        """Seals a payload on every SA in both directions and opens it at the other peer."""
        sa_pairs = [(self.initiator.state.ike_keys, self.responder.state.ike_keys)]
        sa_pairs.extend(zip(self.initiator.state.child_sas, self.responder.state.child_sas))
        if len(sa_pairs) != 1 + self.config.sa_plan.child_sa_count:
            return False
        try:
            for initiator_keys, responder_keys in sa_pairs:
                for sender, receiver, role in ((initiator_keys, responder_keys, "initiator"),
                                               (responder_keys, initiator_keys, "responder")):
                    peer_role = "responder" if role == "initiator" else "initiator"
                    sealed = seal(plaintext=SEAL_CHECK_PAYLOAD, keys=sender.outbound(role), iv=os.urandom(16))
                    if unseal(sk=sealed, keys=receiver.inbound(peer_role)) != SEAL_CHECK_PAYLOAD:
                        return False
        except IkeIntegrityError:
            return False
        return True

    def run(self) -> HandshakeResult:
        """Runs every phase and returns the result, failures included."""
        success, status, error, failed_phase = True, "OK", None, None
        try:
            self.run_init()
            self.run_auth_phase()
            self.run_child_sa_phase()
            self._mark()
        except Exception as e:
            e = Session.wrap_unexpected(e, phase=self.current_phase)
            success, failed_phase, error = False, self.current_phase, str(e)
            status = self.initiator.fail(e, phase=failed_phase)
            if not self.responder.state.is_terminal:
                self.responder.fail(e, phase=failed_phase)
        finally:
            self.initiator_end.close()
            self.responder_end.close()
        return self._result(success=success, status=status, error=error, failed_phase=failed_phase)

    def _result(self, success: bool, status: str, error: Optional[str], failed_phase: Optional[str]) -> HandshakeResult:
        durations = {}
        for index, phase in enumerate(RESULT_PHASES):
            if index + 1 < len(self.bounds_ns):
                durations[phase] = (self.bounds_ns[index + 1] - self.bounds_ns[index]) / 1e6
        initiator_prints = self.initiator.fingerprints()
        responder_prints = self.responder.fingerprints()
        result = HandshakeResult(
            mode=self.config.mode,
            success=success,
            status=status,
            failed_phase=failed_phase,
            error=error,
            phase_durations_ms=durations,
            phase_bounds_ns=self.bounds_ns,
            trace=self.trace.records,
            initiator_fingerprints=initiator_prints,
            responder_fingerprints=responder_prints,
            keys_agree=bool(initiator_prints) and initiator_prints == responder_prints,
            seal_check_ok=success and self.seal_check(),
            initiator_counters=self.initiator.counters,
            responder_counters=self.responder.counters,
            message_ids=self.initiator.sent_message_ids
        )
        if success:
            LOGGER.info(
                f"{self.config.mode} handshake done in {result.total_ms:.2f} ms, "
                f"{result.message_count} messages, {result.total_bytes()} bytes"
            )
        return result


def run_full_handshake(config: HandshakeConfig, pair: KmePair = None) -> HandshakeResult:
    """Single handshake with fresh peers and transports. A KME pair can be shared across calls."""
    return HandshakeRunner(config=config, pair=pair).run()
