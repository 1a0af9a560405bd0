# Standard Libraries
# Third party packages
from pydantic import root_validator, Field, conint
from pydantic.typing import Optional, Literal
# Local package
from qkd_ike.fields import GENERIC_OBJECT_NAME, PORT, MILLISECONDS, PROBABILITY, TRANSPORT_KIND, POSITIVE_INT
from qkd_ike.models.BaseModels import BaseIkeModel
# Local module

__all__ = ['Endpoint', 'WireRecord', 'TransportConfig']


class Endpoint(BaseIkeModel):
    """Address of one peer: an in-memory channel id or a UDP host/port."""

    name: GENERIC_OBJECT_NAME
    host: Optional[str]
    port: Optional[PORT]

    @property
    def address(self) -> str:
        if self.host is None:
            return f"memory://{self.name}"
        return f"udp://{self.host}:{self.port}"


class WireRecord(BaseIkeModel):

    direction: Literal["I->R", "R->I"]
    label: str
    bytes_on_wire: conint(ge=0)
    timestamp_ns: conint(ge=0)
    delivered: bool = True


class TransportConfig(BaseIkeModel):

    kind: TRANSPORT_KIND = "memory"
    latency_ms: MILLISECONDS = 0.0
    loss_probability: PROBABILITY = 0.0
    seed: Optional[int] = Field(default=None, description="Seeds the loss decisions")
    initiator_host: str = "127.0.0.1"
    initiator_port: PORT = Field(default=0, description="0 picks an ephemeral port")
    responder_host: str = "127.0.0.1"
    responder_port: PORT = 0
    retransmit_timeout_ms: MILLISECONDS = 500.0
    retransmit_tries: POSITIVE_INT = 3

    @root_validator(allow_reuse=True)
    def validate_distinct_ports(cls, values):
        if values.get("kind") == "udp":
            i_port, r_port = values.get("initiator_port"), values.get("responder_port")
            same_host = values.get("initiator_host") == values.get("responder_host")
            if same_host and i_port and r_port and i_port == r_port:
                raise AssertionError(f"Initiator and responder cannot share port {i_port} on one host")
        return values
