# Standard Libraries
import random
import threading
import time
# Third party packages
from pydantic.typing import List, Optional
# Local package
from qkd_ike.config import LOGGER_TRANSPORT
from qkd_ike.constants import MAX_DATAGRAM_LENGTH
from qkd_ike.exceptions import TransportError, TransportClosedError
from qkd_ike.models.transport import Endpoint, WireRecord, TransportConfig
# Local module

LOGGER = LOGGER_TRANSPORT


class WireTrace(object):
    """Send-ordered record of every message put on the wire by both ends of a transport pair."""

    def __init__(self):
        self._records: List[WireRecord] = []
        self._lock = threading.Lock()

    def append(self, record: WireRecord):
        with self._lock:
            self._records.append(record)

    @property
    def records(self) -> List[WireRecord]:
        with self._lock:
            return list(self._records)

    def clear(self):
        with self._lock:
            self._records.clear()

    def total_bytes(self) -> int:
        return sum(r.bytes_on_wire for r in self.records)

    def __len__(self):
        with self._lock:
            return len(self._records)


class BaseTransport(object):
    """
    One end of a point-to-point message channel.

    Subclasses implement _deliver and _receive. Size and lifecycle checks, loss decisions and
    trace accounting are done here for every transport kind.
    """

    def __init__(self, endpoint: Endpoint, direction: str, config: TransportConfig, trace: WireTrace,
                 loss_rng: random.Random = None):
        self.endpoint = endpoint
        self.direction = direction
        self.config = config
        self.trace = trace
        self.loss_rng = loss_rng or random.Random(config.seed)
        self.closed = False
        self.peer: Optional["BaseTransport"] = None

    def __repr__(self):
        return f"{self.__class__.__name__}({self.endpoint.address})"

    @property
    def latency_ns(self) -> int:
        return int(self.config.latency_ms * 1_000_000)

    def _check_open(self):
        if self.closed:
            msg = f"Transport {self.endpoint.address} is closed"
            LOGGER.error(msg)
            raise TransportClosedError(msg)

    def _is_lost(self) -> bool:
        return self.config.loss_probability > 0 and self.loss_rng.random() < self.config.loss_probability

    def send(self, data: bytes, label: str) -> WireRecord:
        """
        Sends one message to the peer end and appends its WireRecord to the shared trace.

        Raises TransportError for oversize datagrams and TransportClosedError on a closed end.
        """
        self._check_open()
        if len(data) > MAX_DATAGRAM_LENGTH:
            msg = f"Message '{label}' of {len(data)} bytes exceeds the {MAX_DATAGRAM_LENGTH} byte datagram limit"
            LOGGER.error(msg)
            raise TransportError(msg)
        delivered = not self._is_lost()
        record = WireRecord(
            direction=self.direction, label=label, bytes_on_wire=len(data),
            timestamp_ns=time.monotonic_ns(), delivered=delivered
        )
        self.trace.append(record)
        if delivered:
            self._deliver(data=bytes(data), sent_ns=record.timestamp_ns)
            LOGGER.debug(f"{self.direction} '{label}' {len(data)} bytes")
        else:
            LOGGER.debug(f"{self.direction} '{label}' {len(data)} bytes dropped")
        return record

    def recv(self, timeout_ms: float = None) -> bytes:
        """Blocks until a message arrives. Raises TransportTimeout once timeout_ms elapsed."""
        self._check_open()
        return self._receive(timeout_ms=timeout_ms)

    def _deliver(self, data: bytes, sent_ns: int):
        raise NotImplementedError

    def _receive(self, timeout_ms: float = None) -> bytes:
        raise NotImplementedError

    def close(self):
        self.closed = True

    def __enter__(self):
        return self

    def __exit__(self, exc_type, exc_val, exc_tb):
        self.close()
