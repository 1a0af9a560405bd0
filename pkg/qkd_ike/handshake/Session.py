# Standard Libraries
import hashlib
import random
import secrets
# Third party packages
from pydantic.typing import List, Optional, Tuple, Union
# Local package
from qkd_ike.codec import encode, decode, peek_header, encode_protected, decode_protected
from qkd_ike.config import LOGGER_HANDSHAKE
from qkd_ike.constants import (
    ExchangeType, TransformType, ProtocolId, NotifyType, HashAlgorithm, IdType, TRANSFORMS, ENCR_KEY_LENGTH_BITS
)
from qkd_ike.exceptions import (
    QkdIkeError, HandshakeError, NoProposalChosenError, ProtocolError, PeerErrorNotify, AuthenticationError,
    IkeCodecError, KeyPlanError, DhWeakValueError, KmsError, KmsUnavailableError
)
from qkd_ike.keys import MODP_2048, signed_octets
from qkd_ike.kms import KmsClient
from qkd_ike.models.handshake import HandshakeConfig, SessionState
from qkd_ike.models.ike import (
    IkeHeader, IkeMessage, Transform, Proposal, SaPayload, IdPayload, NotifyPayload, TrafficSelector, TsPayload
)
from qkd_ike.models.keys import CryptoCounters, AuthSecret, ChildSaKeys
# Local module

LOGGER = LOGGER_HANDSHAKE

PHASE_OF_EXCHANGE = {
    ExchangeType.IKE_SA_INIT: "INIT",
    ExchangeType.IKE_AUTH: "AUTH",
    ExchangeType.CREATE_CHILD_SA: "CHILD_SA",
}

# Status of a local failure -> notify sent to the peer
ERROR_NOTIFIES = {
    "NO_PROPOSAL_CHOSEN": NotifyType.NO_PROPOSAL_CHOSEN,
    "AUTHENTICATION_FAILED": NotifyType.AUTHENTICATION_FAILED,
    "KMS_UNAVAILABLE": NotifyType.KMS_UNAVAILABLE,
    "KMS_ERROR": NotifyType.KMS_UNAVAILABLE,
    "KEY_CONFIRMATION_FAILED": NotifyType.KEY_CONFIRMATION_FAILED,
    "INVALID_KE_PAYLOAD": NotifyType.INVALID_KE_PAYLOAD,
}


def failure_status(exc: Exception) -> str:
    """Result status for an exception raised while processing a handshake message."""
    if isinstance(exc, HandshakeError):
        return exc.status
    if isinstance(exc, AuthenticationError):
        return "AUTHENTICATION_FAILED"
    if isinstance(exc, DhWeakValueError):
        return "INVALID_KE_PAYLOAD"
    if isinstance(exc, KmsUnavailableError):
        return "KMS_UNAVAILABLE"
    if isinstance(exc, KmsError):
        return "KMS_ERROR"
    if isinstance(exc, KeyPlanError):
        return "KEY_PLAN_ERROR"
    if isinstance(exc, IkeCodecError):
        return "INVALID_SYNTAX"
    return "PROTOCOL_ERROR"


def message_label(data: bytes) -> str:
    """Label of an encoded message, e.g. 'IKE_AUTH MID=01 R'."""
    header = peek_header(data)
    return f"{header.exchange_name} MID={header.message_id:02d} {'I' if header.initiator else 'R'}"


def id_body(payload: IdPayload) -> bytes:
    return bytes([payload.id_type]) + bytes(3) + payload.value


class Session(object):
    """
    State shared by both ends of one handshake.

    A session owns its random source, counters and keys. Nothing is shared between sessions
    except the KMS behind kms_client.
    """

    role = None

    def __init__(self, config: HandshakeConfig, kms_client: Optional[KmsClient] = None, rng: Union[random.Random, secrets.SystemRandom] = None):
        self.config = config
        self.kms_client = kms_client
        if rng is None:
            rng = secrets.SystemRandom() if config.seed is None else random.Random(f"{config.seed}-{self.role}")
        self.rng = rng
        self.group = MODP_2048
        self.counters = CryptoCounters()
        self.state = SessionState(role=self.role, mode=config.mode)
        self.plan = config.assignment_plan()
        self.init_request: Optional[bytes] = None
        self.init_response: Optional[bytes] = None
        self.auth_secret: Optional[AuthSecret] = None
        self.child_spis: List[Tuple[bytes, bytes]] = []
        self.sent_message_ids: List[int] = []

    def __repr__(self):
        return f"{self.__class__.__name__}({self.config.mode}, {self.state.phase})"

    @property
    def is_initiator(self) -> bool:
        return self.role == "initiator"

    @property
    def phase(self) -> str:
        return self.state.phase

    def random_bytes(self, length: int) -> bytes:
        return bytes(self.rng.getrandbits(8) for _ in range(length))

    def fail(self, exc: Exception, phase: str = None) -> str:
        status = failure_status(exc)
        if not self.state.is_terminal:
            self.state.advance("Failed")
        self.state.failure_status = status
        LOGGER.error(f"{self.role} failed in {phase or self.state.phase}: {status} ({exc})")
        return status

    # Message construction

    def header(self, exchange_type: int, message_id: int, response: bool) -> IkeHeader:
        return IkeHeader(
            initiator_spi=self.state.spi_i,
            responder_spi=self.state.spi_r or bytes(8),
            exchange_type=int(exchange_type),
            initiator=self.is_initiator,
            response=response,
            message_id=message_id
        )

    def encode_plain(self, header: IkeHeader, payloads: list) -> bytes:
        return encode(IkeMessage(header=header, payloads=payloads))

    def encode_sealed(self, header: IkeHeader, payloads: list) -> bytes:
        keys = self.state.ike_keys.outbound(self.role)
        return encode_protected(header=header, payloads=payloads, keys=keys, iv=self.random_bytes(16))

    def decode_sealed(self, data: bytes) -> Tuple[IkeMessage, list]:
        return decode_protected(data=data, keys=self.state.ike_keys.inbound(self.role))

    def decode_plain(self, data: bytes) -> IkeMessage:
        return decode(data)

    # Proposals

    def ike_proposal(self) -> Proposal:
        names = ["ENCR_AES_CBC", "PRF_HMAC_SHA2_256", "AUTH_HMAC_SHA2_256_128"]
        if not self.config.is_qkd:
            names.append("DH_GROUP_14")
        return Proposal(protocol=ProtocolId.IKE.value, transforms=[self._transform(n) for n in names])

    def esp_proposal(self, spi: bytes) -> Proposal:
        names = ["ENCR_AES_CBC", "AUTH_HMAC_SHA2_256_128", "NO_ESN"]
        return Proposal(protocol=ProtocolId.ESP.value, spi=spi, transforms=[self._transform(n) for n in names])

    @staticmethod
    def _transform(name: str) -> Transform:
        transform_type, transform_id = TRANSFORMS[name]
        key_length = ENCR_KEY_LENGTH_BITS if transform_type == TransformType.ENCR else None
        return Transform(transform_type=transform_type.value, transform_id=transform_id, key_length=key_length)

    def _matches(self, proposal: Proposal, expected: Proposal) -> bool:
        if proposal.protocol != expected.protocol:
            return False
        mine = sorted((t.transform_type, t.transform_id, t.key_length) for t in expected.transforms)
        theirs = sorted((t.transform_type, t.transform_id, t.key_length) for t in proposal.transforms)
        return mine == theirs

    def select_ike_proposal(self, sa: Optional[SaPayload]) -> Proposal:
        """
        Picks the first proposal equal to our own suite.

        In QKD mode a proposal with a DH transform never matches, in classical modes one without it never does.
        """
        expected = self.ike_proposal()
        for proposal in (sa.proposals if sa is not None else []):
            if self._matches(proposal=proposal, expected=expected):
                return proposal
        raise NoProposalChosenError(f"No acceptable IKE proposal for mode {self.config.mode}", phase="INIT")

    def select_esp_proposal(self, sa: Optional[SaPayload], phase: str) -> Proposal:
        for proposal in (sa.proposals if sa is not None else []):
            if len(proposal.spi) == 4 and self._matches(proposal=proposal, expected=self.esp_proposal(spi=proposal.spi)):
                return proposal
        raise NoProposalChosenError("No acceptable ESP proposal", phase=phase)

    # Status notifies

    def nat_detection_notifies(self, spi_r: bytes) -> List[NotifyPayload]:
        config = self.config
        if self.is_initiator:
            source, destination = config.initiator_address, config.responder_address
        else:
            source, destination = config.responder_address, config.initiator_address
        port = config.ike_port.to_bytes(2, "big")

        def digest(address) -> bytes:
            return hashlib.sha1(self.state.spi_i + spi_r + address.packed + port).digest()

        return [
            NotifyPayload(notify_type=NotifyType.NAT_DETECTION_SOURCE_IP.value, data=digest(source)),
            NotifyPayload(notify_type=NotifyType.NAT_DETECTION_DESTINATION_IP.value, data=digest(destination)),
        ]

    def extra_notifies(self, spi_r: bytes) -> List[NotifyPayload]:
        if not self.config.extra_notifies:
            return []
        hashes = b"".join(h.to_bytes(2, "big") for h in HashAlgorithm)
        return self.nat_detection_notifies(spi_r=spi_r) + [
            NotifyPayload(notify_type=NotifyType.IKEV2_FRAGMENTATION_SUPPORTED.value),
            NotifyPayload(notify_type=NotifyType.SIGNATURE_HASH_ALGORITHMS.value, data=hashes),
        ]

    @staticmethod
    def error_notify(status: str) -> NotifyPayload:
        return NotifyPayload(notify_type=ERROR_NOTIFIES.get(status, NotifyType.INVALID_SYNTAX).value)

    @staticmethod
    def raise_on_error_notifies(payloads: list, phase: str):
        for payload in payloads:
            if isinstance(payload, NotifyPayload) and payload.is_error:
                msg = f"Peer answered with error notify {payload.type_name}"
                LOGGER.error(msg)
                raise PeerErrorNotify(msg, status=payload.type_name, notify_type=payload.notify_type, phase=phase)

    # Checks

    def check_header(self, data: bytes, exchange_type: int, message_id: int, response: bool, phase: str) -> IkeHeader:
        header = peek_header(data)
        if header.exchange_type != exchange_type or header.message_id != message_id or header.response != response:
            msg = (
                f"Expected {ExchangeType(exchange_type).name} MID={message_id} "
                f"{'response' if response else 'request'}, got {header.exchange_name} MID={header.message_id}"
            )
            LOGGER.error(msg)
            raise ProtocolError(msg, phase=phase)
        if header.initiator == self.is_initiator:
            raise ProtocolError("Message carries our own initiator flag", phase=phase)
        if self.state.spi_i is not None and header.initiator_spi != self.state.spi_i:
            raise ProtocolError("Initiator SPI does not belong to this session", phase=phase)
        return header

    # Identities and AUTH

    def own_id(self) -> IdPayload:
        if self.is_initiator:
            return IdPayload(payload_type=35, id_type=IdType.FQDN.value, value=self.config.initiator_id.encode())
        return IdPayload(payload_type=36, id_type=IdType.FQDN.value, value=self.config.responder_id.encode())

    def peer_id_value(self) -> bytes:
        return (self.config.responder_id if self.is_initiator else self.config.initiator_id).encode()

    def id_prf_key(self, role: str) -> bytes:
        """SK_pi/SK_pr in classical modes, the QKD authentication key otherwise."""
        keys = self.state.ike_keys
        if keys.is_classical:
            return keys.sk_pi if role == "initiator" else keys.sk_pr
        return self.auth_secret.material

    def auth_octets(self, role: str, id_payload: IdPayload) -> bytes:
        """Octets the AUTH of role binds: that role's IKE_SA_INIT message, the other nonce and its ID."""
        if role == "initiator":
            message, nonce = self.init_request, self.state.nonce_r
        else:
            message, nonce = self.init_response, self.state.nonce_i
        return signed_octets(
            message=message, peer_nonce=nonce, id_body=id_body(id_payload), sk_p=self.id_prf_key(role),
            counters=self.counters
        )

    # Child SAs

    def install_child_sa(self, keys: ChildSaKeys, spis: Tuple[bytes, bytes]):
        self.state.child_sas.append(keys)
        self.child_spis.append(spis)
        LOGGER.debug(f"{self.role} installed Child SA #{len(self.state.child_sas)} {keys.fingerprint()}")

    def fingerprints(self) -> dict:
        if self.state.ike_keys is None:
            return {}
        prints = {"ike": self.state.ike_keys.fingerprint()}
        for index, child in enumerate(self.state.child_sas, start=1):
            prints[f"child{index}"] = child.fingerprint()
        return prints

    @staticmethod
    def traffic_selectors(initiator_selector: TrafficSelector = None) -> List[TsPayload]:
        return [
            TsPayload(payload_type=44, selectors=[initiator_selector or TrafficSelector()]),
            TsPayload(payload_type=45, selectors=[TrafficSelector()]),
        ]

    @staticmethod
    def wrap_unexpected(exc: Exception, phase: str) -> QkdIkeError:
        if isinstance(exc, QkdIkeError):
            return exc
        return ProtocolError(f"{type(exc).__name__}: {exc}", phase=phase)
