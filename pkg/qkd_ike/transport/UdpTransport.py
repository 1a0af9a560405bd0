# Standard Libraries
import random
import socket
import time
# Third party packages
from pydantic.typing import Tuple
# Local package
from qkd_ike.config import LOGGER_TRANSPORT
from qkd_ike.constants import MAX_DATAGRAM_LENGTH
from qkd_ike.exceptions import TransportError, TransportTimeout
from qkd_ike.models.transport import Endpoint, TransportConfig
# Local module
from .BaseTransport import BaseTransport, WireTrace

LOGGER = LOGGER_TRANSPORT


class UdpTransport(BaseTransport):
    """
    One UDP socket per peer, every message is one datagram.

    Synthetic latency is spent by the sender before the datagram leaves. Datagrams from anyone
    but the peer are dropped.
    """

    def __init__(self, *args, sock: socket.socket = None, **kwargs):
        super(UdpTransport, self).__init__(*args, **kwargs)
        self.sock = sock or self._bind(self.endpoint)
        host, port = self.sock.getsockname()[:2]
        self.endpoint = Endpoint(name=self.endpoint.name, host=host, port=port)

    @staticmethod
    def _bind(endpoint: Endpoint) -> socket.socket:
        sock = socket.socket(socket.AF_INET, socket.SOCK_DGRAM)
        try:
            sock.bind((endpoint.host, endpoint.port or 0))
        except OSError as e:
            sock.close()
            msg = f"Cannot bind {endpoint.address}: {repr(e)}"
            LOGGER.error(msg)
            raise TransportError(msg)
        return sock

    @property
    def peer_address(self) -> Tuple[str, int]:
        return self.peer.endpoint.host, self.peer.endpoint.port

    def _deliver(self, data: bytes, sent_ns: int):
        if self.latency_ns:
            time.sleep(self.latency_ns / 1e9)
        try:
            self.sock.sendto(data, self.peer_address)
        except OSError as e:
            msg = f"Sending {len(data)} bytes to {self.peer.endpoint.address} failed: {repr(e)}"
            LOGGER.error(msg)
            raise TransportError(msg)

    def _receive(self, timeout_ms: float = None) -> bytes:
        deadline = None if timeout_ms is None else time.monotonic() + timeout_ms / 1000.0
        while True:
            remaining = None if deadline is None else deadline - time.monotonic()
            if remaining is not None and remaining <= 0:
                raise TransportTimeout(f"Nothing received on {self.endpoint.address} within {timeout_ms} ms")
            self.sock.settimeout(remaining)
            try:
                data, address = self.sock.recvfrom(MAX_DATAGRAM_LENGTH)
            except socket.timeout:
                raise TransportTimeout(f"Nothing received on {self.endpoint.address} within {timeout_ms} ms")
            except OSError as e:
                msg = f"Receiving on {self.endpoint.address} failed: {repr(e)}"
                LOGGER.error(msg)
                raise TransportError(msg)
            if address[:2] == self.peer_address:
                return data
            LOGGER.warning(f"Dropped datagram from unexpected source {address[0]}:{address[1]}")

    def close(self):
        if not self.closed:
            self.sock.close()
        super(UdpTransport, self).close()

    @classmethod
    def create_pair(cls, config: TransportConfig, trace: WireTrace = None) -> Tuple["UdpTransport", "UdpTransport"]:
        """Binds both ends on the configured addresses, port 0 picks a free ephemeral port."""
        trace = trace if trace is not None else WireTrace()
        loss_rng = random.Random(config.seed)
        initiator = cls(
            endpoint=Endpoint(name="initiator", host=config.initiator_host, port=config.initiator_port),
            direction="I->R", config=config, trace=trace, loss_rng=loss_rng
        )
        try:
            responder = cls(
                endpoint=Endpoint(name="responder", host=config.responder_host, port=config.responder_port),
                direction="R->I", config=config, trace=trace, loss_rng=loss_rng
            )
        except TransportError:
            initiator.close()
            raise
        initiator.peer, responder.peer = responder, initiator
        LOGGER.debug(f"Created UDP pair {initiator.endpoint.address} <-> {responder.endpoint.address}")
        return initiator, responder
