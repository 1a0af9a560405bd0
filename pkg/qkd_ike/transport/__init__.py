# Standard Libraries
# Third party packages
from pydantic.typing import Tuple
# Local package
from qkd_ike.models.transport import TransportConfig
# Local module
from .BaseTransport import BaseTransport, WireTrace
from .InMemoryTransport import InMemoryTransport
from .UdpTransport import UdpTransport

TRANSPORTS = {
    "memory": InMemoryTransport,
    "udp": UdpTransport
}


def create_transport_pair(config: TransportConfig, trace: WireTrace = None) -> Tuple[BaseTransport, BaseTransport]:
    return TRANSPORTS[config.kind].create_pair(config=config, trace=trace)
