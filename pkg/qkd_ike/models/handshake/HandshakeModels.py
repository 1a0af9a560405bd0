# Standard Libraries
import ipaddress
# Third party packages
from pydantic import root_validator, validator, Field, conint, conlist
from pydantic.typing import List, Optional, Literal, Dict
# Local package
from qkd_ike.fields import (
    MODE, PHASE, ROLE, KEY_ID_ENCODING, KEY_MATERIAL, POSITIVE_INT, GENERIC_OBJECT_NAME, MESSAGE_ID, IKE_SPI
)
from qkd_ike.models.BaseModels import BaseIkeModel
from qkd_ike.models.kms import KmsConfig, KeyContainer
from qkd_ike.models.keys import IkeSaKeys, ChildSaKeys, KeyAssignmentPlan, CryptoCounters
from qkd_ike.models.transport import TransportConfig, WireRecord
# Local module

__all__ = [
    'Mode', 'SESSION_PHASES', 'RESULT_PHASES', 'SaPlan', 'EapRoundPlan', 'SessionState', 'HandshakeConfig', 'HandshakeResult'
]

Mode = MODE
SESSION_PHASE = Literal["Init", "Auth", "ChildSa", "Established", "Failed"]
SESSION_PHASES = ["Init", "Auth", "ChildSa", "Established"]
RESULT_PHASES = ["INIT", "AUTH", "CHILD_SA"]
# Smallest EAP-5G packet: expanded type header plus Message-Id and Spare
EAP_5G_MIN_LENGTH = 14


class SaPlan(BaseIkeModel):

    child_sa_count: POSITIVE_INT = 2


class EapRoundPlan(BaseIkeModel):
    """
    Sizing of the EAP-5G stub carried in IKE_AUTH.

    round_count is the number of EAP messages sent by the N3IWF, the last one being EAP-Success.
    Every earlier round is answered by an EAP response of the UE, the EAP-Success by the UE AUTH.
    Lengths are total EAP packet lengths, the last entry repeats when there are more rounds.
    """

    round_count: POSITIVE_INT = 4
    request_lengths: conlist(conint(ge=EAP_5G_MIN_LENGTH, le=8192), min_items=1) = [1450, 48, 32]
    response_lengths: conlist(conint(ge=EAP_5G_MIN_LENGTH, le=8192), min_items=1) = [64, 32, 64]
    fail_at_round: Optional[POSITIVE_INT] = Field(default=None, description="Send EAP-Failure at this round")

    @root_validator(allow_reuse=True)
    def validate_fail_round(cls, values):
        fail_at, rounds = values.get("fail_at_round"), values.get("round_count")
        if fail_at is not None and rounds is not None and fail_at > rounds:
            raise AssertionError(f"fail_at_round {fail_at} is beyond round_count {rounds}")
        return values

    def request_length(self, round_number: int) -> int:
        return self.request_lengths[min(round_number, len(self.request_lengths)) - 1]

    def response_length(self, round_number: int) -> int:
        return self.response_lengths[min(round_number, len(self.response_lengths)) - 1]

    @property
    def auth_message_ids(self) -> List[int]:
        return list(range(1, self.round_count + 2))


class SessionState(BaseIkeModel):

    role: ROLE
    mode: MODE
    phase: SESSION_PHASE = "Init"
    spi_i: Optional[IKE_SPI]
    spi_r: Optional[IKE_SPI]
    nonce_i: Optional[bytes]
    nonce_r: Optional[bytes]
    next_request_id: MESSAGE_ID = 0
    last_peer_request_id: Optional[MESSAGE_ID]
    key_container: Optional[KeyContainer]
    ike_keys: Optional[IkeSaKeys]
    child_sas: List[ChildSaKeys] = []
    failure_status: Optional[str]

    class Config:
        validate_assignment = False

    @property
    def is_terminal(self) -> bool:
        return self.phase in ("Established", "Failed")

    def advance(self, phase: str):
        if self.is_terminal:
            raise AssertionError(f"Session in terminal phase {self.phase} cannot move to {phase}")
        if phase != "Failed":
            current = SESSION_PHASES.index(self.phase)
            if SESSION_PHASES.index(phase) != current + 1:
                raise AssertionError(f"Invalid phase transition {self.phase} -> {phase}")
        self.phase = phase


class HandshakeConfig(BaseIkeModel):

    mode: MODE
    sa_plan: SaPlan = SaPlan()
    eap: EapRoundPlan = EapRoundPlan()
    transport: TransportConfig = TransportConfig()
    kms: KmsConfig = KmsConfig()
    kms_endpoint: Literal["local", "http"] = "local"
    kms_latency_ms: float = Field(default=0.0, ge=0, description="Client side delay added to every KMS call")
    key_count_override: Optional[POSITIVE_INT] = Field(default=None, description="Keys requested in QKD mode")
    key_id_encoding: KEY_ID_ENCODING = "raw"
    psk: KEY_MATERIAL = b"nwu-lab-preshared-key"
    initiator_id: GENERIC_OBJECT_NAME = "UE-001"
    responder_id: GENERIC_OBJECT_NAME = "N3IWF-001"
    initiator_address: ipaddress.IPv4Address = ipaddress.IPv4Address("192.168.10.2")
    responder_address: ipaddress.IPv4Address = ipaddress.IPv4Address("192.168.10.1")
    ike_port: conint(ge=1, le=65535) = 500
    inner_address: ipaddress.IPv4Address = ipaddress.IPv4Address("10.60.0.2")
    inner_netmask: ipaddress.IPv4Address = ipaddress.IPv4Address("255.255.255.0")
    nonce_length: conint(ge=16, le=256) = 32
    extra_notifies: bool = Field(default=True, description="NAT detection, fragmentation and hash algorithm notifies")
    seed: Optional[int] = Field(default=None, description="Deterministic SPIs, nonces and DH exponents")

    @validator("psk", allow_reuse=True, pre=True)
    def encode_psk(cls, value):
        if isinstance(value, str):
            return value.encode("utf-8")
        return value

    @root_validator(allow_reuse=True)
    def validate_key_count_override(cls, values):
        override, sa_plan = values.get("key_count_override"), values.get("sa_plan")
        if override is not None and sa_plan is not None:
            required = KeyAssignmentPlan(child_sa_count=sa_plan.child_sa_count).required_count
            if override < required:
                raise AssertionError(f"key_count_override {override} is below the {required} keys the plan needs")
        return values

    @property
    def is_qkd(self) -> bool:
        return self.mode == "QKD"

    @property
    def initiator_sae_id(self) -> str:
        return self.kms.kme_b.sae_ids[0]

    @property
    def responder_sae_id(self) -> str:
        return self.kms.kme_a.sae_ids[0]

    def assignment_plan(self) -> KeyAssignmentPlan:
        plan = KeyAssignmentPlan(child_sa_count=self.sa_plan.child_sa_count, include_auth_key=True)
        if self.key_count_override is not None:
            plan.reserve_count = self.key_count_override - plan.required_count
        return plan


class HandshakeResult(BaseIkeModel):

    mode: MODE
    success: bool
    status: str = "OK"
    failed_phase: Optional[PHASE]
    error: Optional[str]
    phase_durations_ms: Dict[PHASE, float] = {}
    phase_bounds_ns: List[int] = []
    trace: List[WireRecord] = []
    initiator_fingerprints: Dict[str, str] = {}
    responder_fingerprints: Dict[str, str] = {}
    keys_agree: bool = False
    seal_check_ok: bool = False
    initiator_counters: CryptoCounters = CryptoCounters()
    responder_counters: CryptoCounters = CryptoCounters()
    message_ids: List[int] = []

    @property
    def counters(self) -> CryptoCounters:
        return self.initiator_counters.merged(self.responder_counters)

    @property
    def total_ms(self) -> float:
        return sum(self.phase_durations_ms.values())

    @property
    def message_count(self) -> int:
        return len([r for r in self.trace if r.delivered])

    def total_bytes(self, framing_bytes: int = 0) -> int:
        return sum(r.bytes_on_wire + framing_bytes for r in self.trace)

    def bytes_by_label(self, framing_bytes: int = 0) -> Dict[str, int]:
        """First transmission of every message. Retransmissions are not counted twice."""
        sizes = {}
        for record in self.trace:
            if record.label not in sizes:
                sizes[record.label] = record.bytes_on_wire + framing_bytes
        return sizes
