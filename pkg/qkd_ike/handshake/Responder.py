# Standard Libraries
# Third party packages
from pydantic.typing import Optional, Dict
# Local package
from qkd_ike.config import LOGGER_HANDSHAKE
from qkd_ike.constants import ExchangeType, AuthMethod, CfgType, CfgAttribute, PayloadType, EapCode
from qkd_ike.exceptions import (
    QkdIkeError, HandshakeError, ProtocolError, KmsUnavailableHandshakeError, KmsError, KmsUnavailableError,
    AuthenticationError
)
from qkd_ike.keys import (
    dh_keypair, dh_shared_secret, public_to_bytes, public_from_bytes, prf, derive_classical_ike_keys,
    derive_classical_child_keys, assign_qkd_keys, compute_auth, verify_auth, cached_identity
)
from qkd_ike.models.ike import (
    SaPayload, KePayload, NoncePayload, IdPayload, CertPayload, AuthPayload, CpPayload, CpAttribute, EapPayload,
    TsPayload, TrafficSelector, QkdKeyIdsNotify, QkdKeyContextNotify
)
from qkd_ike.models.keys import AuthSecret
from qkd_ike.codec import peek_header
# Local module
from .EapStub import EapServer, eap_msk
from .Initiator import KEY_CONFIRMATION_LABEL
from .Session import Session, PHASE_OF_EXCHANGE

LOGGER = LOGGER_HANDSHAKE


class Responder(Session):
    """
    N3IWF side.

    handle() takes any request and returns the encoded response, or None for messages that are
    dropped. Responses are cached per message ID so retransmitted requests get the same bytes back
    without being processed again.
    """

    role = "responder"

    def __init__(self, *args, **kwargs):
        super(Responder, self).__init__(*args, **kwargs)
        self.eap = EapServer(plan=self.config.eap)
        self.response_cache: Dict[int, bytes] = {}
        self.peer_esp_spi: Optional[bytes] = None
        self.id_i: Optional[IdPayload] = None
        self.qkd_child_keys = []
        self.eap_succeeded = False
        self.state.last_peer_request_id = None

    @property
    def expected_message_id(self) -> int:
        last = self.state.last_peer_request_id
        return 0 if last is None else last + 1

    def handle(self, data: bytes) -> Optional[bytes]:
        try:
            header = peek_header(data)
        except QkdIkeError as e:
            LOGGER.warning(f"Dropped undecodable message: {e}")
            return None
        if header.response or header.initiator is False:
            LOGGER.warning("Dropped a message that is not an initiator request")
            return None
        if header.message_id in self.response_cache and header.message_id == self.state.last_peer_request_id:
            LOGGER.warning(f"Retransmitted request MID={header.message_id}, answering from cache")
            return self.response_cache[header.message_id]
        if header.message_id < self.expected_message_id:
            LOGGER.warning(f"Dropped stale request MID={header.message_id}, expecting MID={self.expected_message_id}")
            return None
        if header.message_id != self.expected_message_id or self.state.is_terminal:
            LOGGER.error(f"Dropped request MID={header.message_id}, expecting MID={self.expected_message_id}")
            return None
        phase = PHASE_OF_EXCHANGE.get(header.exchange_type, "AUTH")
        handlers = {
            ExchangeType.IKE_SA_INIT: self.handle_init,
            ExchangeType.IKE_AUTH: self.handle_auth,
            ExchangeType.CREATE_CHILD_SA: self.handle_create_child_sa,
        }
        handler = handlers.get(header.exchange_type)
        if handler is None:
            LOGGER.error(f"No handler for exchange {header.exchange_name}")
            return None
        try:
            response = handler(data)
        except Exception as e:
            exc = self.wrap_unexpected(e, phase=phase)
            status = self.fail(exc, phase=phase)
            response = self.error_response(header.exchange_type, header.message_id, status)
        self.state.last_peer_request_id = header.message_id
        self.response_cache[header.message_id] = response
        return response

    def error_response(self, exchange_type: int, message_id: int, status: str) -> bytes:
        header = self.header(exchange_type, message_id, response=True)
        notify = self.error_notify(status)
        if exchange_type == ExchangeType.IKE_SA_INIT or self.state.ike_keys is None:
            return self.encode_plain(header=header, payloads=[notify])
        return self.encode_sealed(header=header, payloads=[notify])

    # IKE_SA_INIT

    def handle_init(self, data: bytes) -> bytes:
        """IKE_SA_INIT response. In QKD mode this is where the single get_keys call happens."""
        header = peek_header(data)
        self.state.spi_i = header.initiator_spi
        message = self.decode_plain(data)
        self.check_header(data, ExchangeType.IKE_SA_INIT, 0, response=False, phase="INIT")
        proposal = self.select_ike_proposal(message.find(SaPayload))
        nonce = message.find(NoncePayload)
        if nonce is None:
            raise ProtocolError("IKE_SA_INIT request without nonce", phase="INIT")
        self.init_request = bytes(data)
        self.state.nonce_i = nonce.nonce
        self.state.spi_r = self.random_bytes(8)
        self.state.nonce_r = self.random_bytes(self.config.nonce_length)
        payloads = [SaPayload(proposals=[proposal])]
        if self.config.is_qkd:
            payloads.append(NoncePayload(nonce=self.state.nonce_r))
            payloads.extend(self._reserve_qkd_keys())
        else:
            ke = message.find(KePayload)
            if ke is None or ke.dh_group != self.group.group_id:
                raise HandshakeError("IKE_SA_INIT request without a group 14 KE payload", status="INVALID_KE_PAYLOAD", phase="INIT")
            peer_public = public_from_bytes(ke.public_value, self.group)
            private, public = dh_keypair(group=self.group, rng=self.rng, counters=self.counters)
            shared = dh_shared_secret(private=private, peer_public=peer_public, group=self.group, counters=self.counters)
            self.state.ike_keys = derive_classical_ike_keys(
                shared_secret=shared, nonce_i=self.state.nonce_i, nonce_r=self.state.nonce_r, spi_i=self.state.spi_i,
                spi_r=self.state.spi_r, counters=self.counters
            )
            if self.config.mode == "DH_PSK":
                self.auth_secret = AuthSecret(material=self.config.psk, source="psk")
            payloads.append(KePayload(dh_group=self.group.group_id, public_value=public_to_bytes(public, self.group)))
            payloads.append(NoncePayload(nonce=self.state.nonce_r))
        payloads.extend(self.extra_notifies(spi_r=self.state.spi_r))
        self.init_response = self.encode_plain(header=self.header(ExchangeType.IKE_SA_INIT, 0, response=True), payloads=payloads)
        self.state.advance("Auth")
        LOGGER.info(f"Responder IKE SA ready {self.state.ike_keys.fingerprint()}")
        return self.init_response

    def _reserve_qkd_keys(self) -> list:
        plan = self.plan
        self.counters.kms_calls += 1
        try:
            container = self.kms_client.get_keys(
                slave_sae=self.config.initiator_sae_id, number=plan.slot_count, size_bits=self.config.kms.key_size_bits
            )
        except KmsUnavailableError as e:
            raise KmsUnavailableHandshakeError(str(e), phase="INIT")
        except KmsError as e:
            raise HandshakeError(str(e), status="KMS_ERROR", phase="INIT")
        self.state.key_container = container
        self.state.ike_keys, self.qkd_child_keys, self.auth_secret = assign_qkd_keys(container=container, plan=plan)
        key_ids = QkdKeyIdsNotify(key_ids=container.key_ids, encoding=self.config.key_id_encoding)
        tag = prf(key=self.auth_secret.material, data=KEY_CONFIRMATION_LABEL + key_ids.octets(), counters=self.counters)
        context = QkdKeyContextNotify(
            text_key_ids=self.config.key_id_encoding == "text",
            key_size_bits=self.config.kms.key_size_bits,
            key_count=len(container),
            master_sae_id=self.config.responder_sae_id,
            slave_sae_id=self.config.initiator_sae_id,
            confirmation_tag=tag
        )
        LOGGER.debug(f"Reserved {len(container)} QKD keys for {self.config.initiator_sae_id}")
        return [key_ids.to_notify(), context.to_notify()]

    # IKE_AUTH

    def handle_auth(self, data: bytes) -> bytes:
        header = self.check_header(data, ExchangeType.IKE_AUTH, self.expected_message_id, response=False, phase="AUTH")
        if self.state.phase != "Auth":
            raise ProtocolError(f"IKE_AUTH request in phase {self.state.phase}", phase="AUTH")
        _, payloads = self.decode_sealed(data)
        response_header = self.header(ExchangeType.IKE_AUTH, header.message_id, response=True)
        if header.message_id == 1:
            return self.encode_sealed(header=response_header, payloads=self._first_auth(payloads))
        if self.eap_succeeded:
            return self.encode_sealed(header=response_header, payloads=self._final_auth(payloads))
        eap = next((p for p in payloads if isinstance(p, EapPayload)), None)
        if eap is None:
            raise ProtocolError(f"IKE_AUTH MID={header.message_id} request without EAP payload", phase="AUTH")
        self.eap.check_response(eap.data)
        return self.encode_sealed(header=response_header, payloads=[self._next_eap()])

    def _first_auth(self, payloads: list) -> list:
        id_i = next((p for p in payloads if isinstance(p, IdPayload) and p.payload_type == PayloadType.IDi), None)
        if id_i is None or id_i.value != self.peer_id_value():
            raise AuthenticationError(f"Unknown initiator identity {id_i.value if id_i else None}")
        self.id_i = id_i
        if self.config.mode == "DH_CERT":
            cert = next((p for p in payloads if isinstance(p, CertPayload)), None)
            auth = next((p for p in payloads if isinstance(p, AuthPayload)), None)
            if cert is None or auth is None or auth.auth_method != AuthMethod.RSA_SIGNATURE:
                raise AuthenticationError("Certificate mode needs CERT and a signature AUTH in IKE_AUTH MID=01")
            verify_auth(
                method=AuthMethod.RSA_SIGNATURE, octets=self.auth_octets("initiator", id_i), auth_data=auth.data,
                identity=cached_identity(self.config.initiator_id), certificate_der=cert.data, counters=self.counters
            )
        proposal = self.select_esp_proposal(next((p for p in payloads if isinstance(p, SaPayload)), None), phase="AUTH")
        self.peer_esp_spi = proposal.spi
        if next((p for p in payloads if isinstance(p, CpPayload)), None) is None:
            raise ProtocolError("IKE_AUTH MID=01 without CFG_REQUEST", phase="AUTH")
        return [self.own_id(), self._next_eap()]

    def _next_eap(self) -> EapPayload:
        message = self.eap.next_message()
        code = message[0]
        if code == EapCode.FAILURE:
            # EAP-Failure ends the session once the response is out
            self.fail(HandshakeError("EAP-5G stub failure injected", status="EAP_FAILURE", phase="AUTH"), phase="AUTH")
        elif code == EapCode.SUCCESS:
            self.eap_succeeded = True
            if self.config.mode == "DH_CERT":
                self.auth_secret = AuthSecret(
                    material=eap_msk(self.state.ike_keys.sk_d, self.state.nonce_i, self.state.nonce_r, self.counters),
                    source="eap_msk"
                )
        return EapPayload(data=message)

    def _final_auth(self, payloads: list) -> list:
        auth = next((p for p in payloads if isinstance(p, AuthPayload)), None)
        if auth is None:
            raise AuthenticationError("Final IKE_AUTH request without AUTH")
        verify_auth(
            method=auth.auth_method, octets=self.auth_octets("initiator", self.id_i), auth_data=auth.data,
            secret=self.auth_secret, counters=self.counters
        )
        own_auth = compute_auth(
            method=AuthMethod.SHARED_KEY, octets=self.auth_octets("responder", self.own_id()), secret=self.auth_secret,
            counters=self.counters
        )
        own_spi = self.random_bytes(4)
        self.install_child_sa(keys=self._child_keys(1, self.state.nonce_i, self.state.nonce_r),
                              spis=(self.peer_esp_spi, own_spi))
        self.state.advance("ChildSa")
        if len(self.state.child_sas) == self.config.sa_plan.child_sa_count:
            self.state.advance("Established")
        LOGGER.info(f"Responder authenticated {self.config.initiator_id}, assigned {self.config.inner_address}")
        cp = CpPayload(cfg_type=CfgType.CFG_REPLY.value, attributes=[
            CpAttribute(attribute_type=CfgAttribute.INTERNAL_IP4_ADDRESS.value, value=self.config.inner_address.packed),
            CpAttribute(attribute_type=CfgAttribute.INTERNAL_IP4_NETMASK.value, value=self.config.inner_netmask.packed),
        ])
        inner = TrafficSelector(start_address=self.config.inner_address, end_address=self.config.inner_address)
        return [
            AuthPayload(auth_method=AuthMethod.SHARED_KEY.value, data=own_auth),
            cp,
            SaPayload(proposals=[self.esp_proposal(spi=own_spi)]),
        ] + self.traffic_selectors(initiator_selector=inner)

    def _child_keys(self, index: int, nonce_i: bytes, nonce_r: bytes):
        if self.config.is_qkd:
            return self.qkd_child_keys[index - 1]
        return derive_classical_child_keys(
            sk_d=self.state.ike_keys.sk_d, nonce_i=nonce_i, nonce_r=nonce_r, counters=self.counters
        )

    # CREATE_CHILD_SA

    def handle_create_child_sa(self, data: bytes) -> bytes:
        header = self.check_header(data, ExchangeType.CREATE_CHILD_SA, self.expected_message_id, response=False, phase="CHILD_SA")
        if self.state.phase != "ChildSa":
            raise ProtocolError(f"CREATE_CHILD_SA request in phase {self.state.phase}", phase="CHILD_SA")
        _, payloads = self.decode_sealed(data)
        proposal = self.select_esp_proposal(next((p for p in payloads if isinstance(p, SaPayload)), None), phase="CHILD_SA")
        if len([p for p in payloads if isinstance(p, TsPayload)]) != 2:
            raise ProtocolError("CREATE_CHILD_SA request needs TSi and TSr", phase="CHILD_SA")
        own_spi = self.random_bytes(4)
        response = [SaPayload(proposals=[self.esp_proposal(spi=own_spi)])]
        nonce_i = nonce_r = None
        if not self.config.is_qkd:
            nonce = next((p for p in payloads if isinstance(p, NoncePayload)), None)
            if nonce is None:
                raise ProtocolError("CREATE_CHILD_SA request without nonce", phase="CHILD_SA")
            nonce_i, nonce_r = nonce.nonce, self.random_bytes(self.config.nonce_length)
            response.append(NoncePayload(nonce=nonce_r))
        response.extend(self.traffic_selectors())
        index = len(self.state.child_sas) + 1
        self.install_child_sa(keys=self._child_keys(index, nonce_i, nonce_r), spis=(proposal.spi, own_spi))
        if len(self.state.child_sas) == self.config.sa_plan.child_sa_count:
            self.state.advance("Established")
            LOGGER.info(f"Responder established {index} Child SAs")
        return self.encode_sealed(header=self.header(ExchangeType.CREATE_CHILD_SA, header.message_id, response=True), payloads=response)
