# Standard Libraries
import ipaddress
# Third party packages
from pydantic.typing import Optional
# Local package
from qkd_ike.config import LOGGER_HANDSHAKE
from qkd_ike.constants import ExchangeType, AuthMethod, CfgType, CfgAttribute, NotifyType, EapCode
from qkd_ike.exceptions import (
    HandshakeError, ProtocolError, KeyConfirmationError, KmsUnavailableHandshakeError, KmsError, KmsUnavailableError
)
from qkd_ike.keys import (
    dh_keypair, dh_shared_secret, public_to_bytes, public_from_bytes, prf, derive_classical_ike_keys,
    derive_classical_child_keys, assign_qkd_keys, compute_auth, verify_auth, cached_identity
)
from qkd_ike.models.ike import (
    SaPayload, KePayload, NoncePayload, IdPayload, CertPayload, AuthPayload, CpPayload, CpAttribute, EapPayload,
    TsPayload, QkdKeyIdsNotify, QkdKeyContextNotify
)
from qkd_ike.models.keys import AuthSecret
# Local module
from .EapStub import EapPeer, parse as parse_eap, eap_msk
from .Session import Session

LOGGER = LOGGER_HANDSHAKE

KEY_CONFIRMATION_LABEL = b"QKD key confirmation"


class Initiator(Session):
    """UE side: starts IKE_SA_INIT, drives the EAP rounds and requests the second Child SA."""

    role = "initiator"

    def __init__(self, *args, **kwargs):
        super(Initiator, self).__init__(*args, **kwargs)
        self.eap = EapPeer(plan=self.config.eap)
        self.dh_private: Optional[int] = None
        self.last_eap = None
        self.eap_succeeded = False
        self.inner_address: Optional[ipaddress.IPv4Address] = None
        self.pending_esp_spi: Optional[bytes] = None
        self.child_nonce: Optional[bytes] = None
        self.id_r: Optional[IdPayload] = None
        self.qkd_child_keys = []

    def _next_message_id(self) -> int:
        message_id = self.state.next_request_id
        self.state.next_request_id += 1
        self.sent_message_ids.append(message_id)
        return message_id

    # IKE_SA_INIT

    def start(self) -> bytes:
        """IKE_SA_INIT request. QKD mode sends neither a DH transform nor a KE payload."""
        self.state.spi_i = self.random_bytes(8)
        self.state.nonce_i = self.random_bytes(self.config.nonce_length)
        payloads = [SaPayload(proposals=[self.ike_proposal()])]
        if not self.config.is_qkd:
            self.dh_private, public = dh_keypair(group=self.group, rng=self.rng, counters=self.counters)
            payloads.append(KePayload(dh_group=self.group.group_id, public_value=public_to_bytes(public, self.group)))
        payloads.append(NoncePayload(nonce=self.state.nonce_i))
        payloads.extend(self.extra_notifies(spi_r=bytes(8)))
        header = self.header(ExchangeType.IKE_SA_INIT, self._next_message_id(), response=False)
        self.init_request = self.encode_plain(header=header, payloads=payloads)
        LOGGER.debug(f"IKE_SA_INIT request {len(self.init_request)} bytes, mode {self.config.mode}")
        return self.init_request

    def handle_init_response(self, data: bytes):
        """Establishes the IKE SA keys from the responder's KE or from the announced QKD keys."""
        header = self.check_header(data, ExchangeType.IKE_SA_INIT, 0, response=True, phase="INIT")
        message = self.decode_plain(data)
        self.raise_on_error_notifies(message.payloads, phase="INIT")
        self.select_ike_proposal(message.find(SaPayload))
        nonce = message.find(NoncePayload)
        if nonce is None:
            raise ProtocolError("IKE_SA_INIT response without nonce", phase="INIT")
        self.state.spi_r = header.responder_spi
        self.state.nonce_r = nonce.nonce
        self.init_response = bytes(data)
        if self.config.is_qkd:
            self._take_qkd_keys(message)
        else:
            ke = message.find(KePayload)
            if ke is None or ke.dh_group != self.group.group_id:
                raise ProtocolError("IKE_SA_INIT response without a group 14 KE payload", phase="INIT")
            shared = dh_shared_secret(
                private=self.dh_private, peer_public=public_from_bytes(ke.public_value, self.group), group=self.group,
                counters=self.counters
            )
            self.state.ike_keys = derive_classical_ike_keys(
                shared_secret=shared, nonce_i=self.state.nonce_i, nonce_r=self.state.nonce_r, spi_i=self.state.spi_i,
                spi_r=self.state.spi_r, counters=self.counters
            )
            self.dh_private = None
            if self.config.mode == "DH_PSK":
                self.auth_secret = AuthSecret(material=self.config.psk, source="psk")
        self.state.advance("Auth")
        LOGGER.info(f"Initiator IKE SA ready {self.state.ike_keys.fingerprint()}")

    def _take_qkd_keys(self, message):
        ids_notify = message.notifies(NotifyType.QKD_KEY_IDS.value)
        context_notify = message.notifies(NotifyType.QKD_KEY_CONTEXT.value)
        if not ids_notify or not context_notify:
            raise ProtocolError("QKD IKE_SA_INIT response lacks the key ID or key context notify", phase="INIT")
        try:
            key_ids = QkdKeyIdsNotify.from_notify(ids_notify[0], encoding=self.config.key_id_encoding)
            context = QkdKeyContextNotify.from_notify(context_notify[0])
        except (ValueError, AssertionError) as e:
            raise ProtocolError(f"Malformed QKD notify: {e}", phase="INIT")
        expected = self.plan.slot_count
        if key_ids.count != expected or context.key_count != expected:
            raise ProtocolError(
                f"Responder announced {key_ids.count} keys (context {context.key_count}), the plan needs {expected}",
                phase="INIT"
            )
        if context.key_size_bits != self.config.kms.key_size_bits:
            raise ProtocolError(f"Announced key size {context.key_size_bits} bits is not configured", phase="INIT")
        if context.slave_sae_id != self.config.initiator_sae_id:
            raise ProtocolError(f"Keys were reserved for SAE '{context.slave_sae_id}'", phase="INIT")
        self.counters.kms_calls += 1
        try:
            container = self.kms_client.get_keys_by_id(master_sae=context.master_sae_id, key_ids=key_ids.key_ids)
        except KmsUnavailableError as e:
            raise KmsUnavailableHandshakeError(str(e), phase="INIT")
        except KmsError as e:
            raise HandshakeError(str(e), status="KMS_ERROR", phase="INIT")
        if container.key_ids != key_ids.key_ids:
            raise ProtocolError("KMS returned keys out of the requested order", phase="INIT")
        self.state.key_container = container
        ike_keys, child_keys, auth_secret = assign_qkd_keys(container=container, plan=self.plan)
        tag = prf(key=auth_secret.material, data=KEY_CONFIRMATION_LABEL + key_ids.octets(), counters=self.counters)
        if tag != context.confirmation_tag:
            raise KeyConfirmationError("QKD key confirmation tag does not match the fetched keys", phase="INIT")
        self.state.ike_keys = ike_keys
        self.qkd_child_keys = child_keys
        self.auth_secret = auth_secret

    # IKE_AUTH

    def auth_request(self) -> bytes:
        """Next IKE_AUTH request: the opening message, an EAP response or the final AUTH."""
        message_id = self._next_message_id()
        header = self.header(ExchangeType.IKE_AUTH, message_id, response=False)
        if message_id == 1:
            return self.encode_sealed(header=header, payloads=self._first_auth_payloads())
        if self.eap_succeeded:
            return self.encode_sealed(header=header, payloads=[self._final_auth_payload()])
        response = self.eap.answer(self.last_eap)
        return self.encode_sealed(header=header, payloads=[EapPayload(data=response)])

    def _first_auth_payloads(self) -> list:
        id_payload = self.own_id()
        payloads = [id_payload]
        if self.config.mode == "DH_CERT":
            identity = cached_identity(self.config.initiator_id)
            signature = compute_auth(
                method=AuthMethod.RSA_SIGNATURE, octets=self.auth_octets("initiator", id_payload), identity=identity,
                counters=self.counters
            )
            payloads.append(CertPayload(data=identity.certificate_der))
            payloads.append(AuthPayload(auth_method=AuthMethod.RSA_SIGNATURE.value, data=signature))
        self.pending_esp_spi = self.random_bytes(4)
        payloads.append(CpPayload(cfg_type=CfgType.CFG_REQUEST.value, attributes=[
            CpAttribute(attribute_type=CfgAttribute.INTERNAL_IP4_ADDRESS.value),
            CpAttribute(attribute_type=CfgAttribute.INTERNAL_IP4_NETMASK.value),
        ]))
        payloads.append(SaPayload(proposals=[self.esp_proposal(spi=self.pending_esp_spi)]))
        payloads.extend(self.traffic_selectors())
        return payloads

    def _final_auth_payload(self) -> AuthPayload:
        data = compute_auth(
            method=AuthMethod.SHARED_KEY, octets=self.auth_octets("initiator", self.own_id()),
            secret=self.auth_secret, counters=self.counters
        )
        return AuthPayload(auth_method=AuthMethod.SHARED_KEY.value, data=data)

    def handle_auth_response(self, data: bytes) -> bool:
        """
        Processes one IKE_AUTH response.

        Returns: True once the final AUTH verified and the first Child SA is installed.
        """
        message_id = self.state.next_request_id - 1
        self.check_header(data, ExchangeType.IKE_AUTH, message_id, response=True, phase="AUTH")
        _, payloads = self.decode_sealed(data)
        self.raise_on_error_notifies(payloads, phase="AUTH")
        if self.eap_succeeded:
            self._finish_auth(payloads)
            return True
        if message_id == 1:
            id_r = next((p for p in payloads if isinstance(p, IdPayload)), None)
            if id_r is None or id_r.value != self.peer_id_value():
                raise ProtocolError("IKE_AUTH response does not identify the expected responder", phase="AUTH")
            self.id_r = id_r
        eap = next((p for p in payloads if isinstance(p, EapPayload)), None)
        if eap is None:
            raise ProtocolError(f"IKE_AUTH MID={message_id} response without EAP payload", phase="AUTH")
        packet = parse_eap(eap.data)
        if packet.is_failure:
            raise HandshakeError("N3IWF sent EAP-Failure", status="EAP_FAILURE", phase="AUTH")
        if packet.is_success:
            self.eap_succeeded = True
            if self.config.mode == "DH_CERT":
                self.auth_secret = AuthSecret(
                    material=eap_msk(self.state.ike_keys.sk_d, self.state.nonce_i, self.state.nonce_r, self.counters),
                    source="eap_msk"
                )
        elif packet.code == EapCode.REQUEST:
            self.last_eap = packet
        else:
            raise ProtocolError(f"Unexpected EAP code {packet.code} from N3IWF", phase="AUTH")
        return False

    def _finish_auth(self, payloads: list):
        auth = next((p for p in payloads if isinstance(p, AuthPayload)), None)
        if auth is None:
            raise ProtocolError("Final IKE_AUTH response without AUTH", phase="AUTH")
        verify_auth(
            method=auth.auth_method, octets=self.auth_octets("responder", self.id_r), auth_data=auth.data,
            secret=self.auth_secret, counters=self.counters
        )
        cp = next((p for p in payloads if isinstance(p, CpPayload)), None)
        if cp is None or cp.cfg_type != CfgType.CFG_REPLY:
            raise ProtocolError("Final IKE_AUTH response without CFG_REPLY", phase="AUTH")
        for attribute in cp.attributes:
            if attribute.attribute_type == CfgAttribute.INTERNAL_IP4_ADDRESS and len(attribute.value) == 4:
                self.inner_address = ipaddress.IPv4Address(attribute.value)
        proposal = self.select_esp_proposal(next((p for p in payloads if isinstance(p, SaPayload)), None), phase="AUTH")
        if len([p for p in payloads if isinstance(p, TsPayload)]) != 2:
            raise ProtocolError("Final IKE_AUTH response needs TSi and TSr", phase="AUTH")
        self.install_child_sa(keys=self._child_keys(1, self.state.nonce_i, self.state.nonce_r),
                              spis=(self.pending_esp_spi, proposal.spi))
        self.state.advance("ChildSa")
        LOGGER.info(f"Initiator authenticated, inner address {self.inner_address}")

    def _child_keys(self, index: int, nonce_i: bytes, nonce_r: bytes):
        if self.config.is_qkd:
            return self.qkd_child_keys[index - 1]
        return derive_classical_child_keys(
            sk_d=self.state.ike_keys.sk_d, nonce_i=nonce_i, nonce_r=nonce_r, counters=self.counters
        )

    # CREATE_CHILD_SA

    def child_sa_request(self) -> bytes:
        """CREATE_CHILD_SA request for the next Child SA, with a fresh nonce in classical modes only."""
        if len(self.state.child_sas) >= self.config.sa_plan.child_sa_count:
            raise ProtocolError("Every planned Child SA is already established", phase="CHILD_SA")
        self.pending_esp_spi = self.random_bytes(4)
        payloads = [SaPayload(proposals=[self.esp_proposal(spi=self.pending_esp_spi)])]
        if not self.config.is_qkd:
            self.child_nonce = self.random_bytes(self.config.nonce_length)
            payloads.append(NoncePayload(nonce=self.child_nonce))
        payloads.extend(self.traffic_selectors())
        header = self.header(ExchangeType.CREATE_CHILD_SA, self._next_message_id(), response=False)
        return self.encode_sealed(header=header, payloads=payloads)

    def handle_child_sa_response(self, data: bytes):
        message_id = self.state.next_request_id - 1
        self.check_header(data, ExchangeType.CREATE_CHILD_SA, message_id, response=True, phase="CHILD_SA")
        _, payloads = self.decode_sealed(data)
        self.raise_on_error_notifies(payloads, phase="CHILD_SA")
        proposal = self.select_esp_proposal(next((p for p in payloads if isinstance(p, SaPayload)), None), phase="CHILD_SA")
        nonce_r = None
        if not self.config.is_qkd:
            nonce = next((p for p in payloads if isinstance(p, NoncePayload)), None)
            if nonce is None:
                raise ProtocolError("CREATE_CHILD_SA response without nonce", phase="CHILD_SA")
            nonce_r = nonce.nonce
        index = len(self.state.child_sas) + 1
        self.install_child_sa(keys=self._child_keys(index, self.child_nonce, nonce_r),
                              spis=(self.pending_esp_spi, proposal.spi))
        if len(self.state.child_sas) == self.config.sa_plan.child_sa_count:
            self.state.advance("Established")
            LOGGER.info(f"Initiator established {index} Child SAs")

    @property
    def needs_child_sa(self) -> bool:
        return len(self.state.child_sas) < self.config.sa_plan.child_sa_count
