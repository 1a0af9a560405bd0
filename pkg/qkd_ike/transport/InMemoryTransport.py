# Standard Libraries
import queue
import random
import time
# Third party packages
from pydantic.typing import Tuple
# Local package
from qkd_ike.config import LOGGER_TRANSPORT
from qkd_ike.exceptions import TransportTimeout
from qkd_ike.models.transport import Endpoint, TransportConfig
# Local module
from .BaseTransport import BaseTransport, WireTrace

LOGGER = LOGGER_TRANSPORT


class InMemoryTransport(BaseTransport):
    """Queue backed channel. Delivery is FIFO and a message becomes visible latency_ms after its send."""

    def __init__(self, *args, **kwargs):
        super(InMemoryTransport, self).__init__(*args, **kwargs)
        self.inbox: "queue.Queue[Tuple[int, bytes]]" = queue.Queue()

    def _deliver(self, data: bytes, sent_ns: int):
        self.peer.inbox.put((sent_ns + self.latency_ns, data))

    def _receive(self, timeout_ms: float = None) -> bytes:
        started = time.monotonic_ns()
        timeout = None if timeout_ms is None else timeout_ms / 1000.0
        try:
            deliver_at, data = self.inbox.get(timeout=timeout)
        except queue.Empty:
            raise TransportTimeout(f"Nothing received on {self.endpoint.address} within {timeout_ms} ms")
        now = time.monotonic_ns()
        if deliver_at > now:
            if timeout_ms is not None and deliver_at > started + int(timeout_ms * 1_000_000):
                # Still in flight when the timer fires, put it back at the head
                with self.inbox.mutex:
                    self.inbox.queue.appendleft((deliver_at, data))
                time.sleep(max(0, started + int(timeout_ms * 1_000_000) - now) / 1e9)
                raise TransportTimeout(f"Nothing received on {self.endpoint.address} within {timeout_ms} ms")
            time.sleep((deliver_at - now) / 1e9)
        return data

    @classmethod
    def create_pair(cls, config: TransportConfig, trace: WireTrace = None) -> Tuple["InMemoryTransport", "InMemoryTransport"]:
        """Initiator and responder ends sharing one trace and one seeded loss generator."""
        trace = trace if trace is not None else WireTrace()
        loss_rng = random.Random(config.seed)
        initiator = cls(
            endpoint=Endpoint(name="initiator"), direction="I->R", config=config, trace=trace, loss_rng=loss_rng
        )
        responder = cls(
            endpoint=Endpoint(name="responder"), direction="R->I", config=config, trace=trace, loss_rng=loss_rng
        )
        initiator.peer, responder.peer = responder, initiator
        LOGGER.debug(f"Created in-memory pair {initiator.endpoint.address} <-> {responder.endpoint.address}")
        return initiator, responder
