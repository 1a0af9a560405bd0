# Standard Libraries
import itertools
import random
import secrets
import time
import uuid
from collections import OrderedDict
# Third party packages
from pydantic.typing import Dict, List, Optional
# Local package
from qkd_ike.config import LOGGER_KMS
from qkd_ike.exceptions import KmsCapacityError, KmsNotFoundError, KmsAuthorizationError, KmsUnavailableError
from qkd_ike.models.kms import QkdKey, KeyReservation
# Local module

LOGGER = LOGGER_KMS


class KeySource(object):
    """Key material generator of the simulated QKD link."""

    def __init__(self, key_size_bits: int, seed: Optional[int] = None):
        self.key_size_bytes = key_size_bits // 8
        self.seed = seed
        self._rng = random.Random(seed) if seed is not None else None

    def next_key(self) -> QkdKey:
        if self._rng is None:
            return QkdKey(key_id=uuid.uuid4(), material=secrets.token_bytes(self.key_size_bytes))
        key_id = uuid.UUID(bytes=self._rng.randbytes(16), version=4)
        return QkdKey(key_id=key_id, material=self._rng.randbytes(self.key_size_bytes))

    def generate(self, count: int) -> List[QkdKey]:
        return [self.next_key() for _ in range(count)]


class KeyStore(object):
    """
    One KME's view of the pool shared over the link.

    Keys move pending -> reserved -> consumed. Reservations nobody fetches stay until
    expire_reservations() discards them. Only the last consumed_history retired key IDs are
    remembered, older ones are reported as unknown. Callers hold the pair lock.
    """

    def __init__(self, kme_id: str, capacity: int, consumed_history: int = 10000):
        self.kme_id = kme_id
        self.capacity = capacity
        self.consumed_history = consumed_history
        self.pending: "OrderedDict[uuid.UUID, QkdKey]" = OrderedDict()
        self.reserved: Dict[uuid.UUID, KeyReservation] = {}
        self.consumed: "OrderedDict[uuid.UUID, None]" = OrderedDict()

    @property
    def stored_key_count(self) -> int:
        return len(self.pending)

    def append(self, keys: List[QkdKey]) -> int:
        if len(self.pending) + len(keys) > self.capacity:
            msg = f"KME {self.kme_id}: cannot store {len(keys)} keys, {len(self.pending)}/{self.capacity} used"
            LOGGER.error(msg)
            raise KmsCapacityError(msg)
        for key in keys:
            self.pending[key.key_id] = key
        return len(self.pending)

    def take_pending(self, number: int) -> List[QkdKey]:
        if number > len(self.pending):
            msg = f"KME {self.kme_id}: {number} keys requested, {len(self.pending)} available"
            LOGGER.warning(msg)
            raise KmsUnavailableError(msg)
        return [self.pending[key_id] for key_id in itertools.islice(self.pending, number)]

    def reserve(self, key_ids: List[uuid.UUID], master_sae_id: str, slave_sae_id: str) -> List[QkdKey]:
        keys = []
        for key_id in key_ids:
            key = self.pending.pop(key_id)
            self.reserved[key_id] = KeyReservation(
                key=key, master_sae_id=master_sae_id, slave_sae_id=slave_sae_id, reserved_ns=time.monotonic_ns()
            )
            keys.append(key)
        return keys

    def check_reserved(self, key_ids: List[uuid.UUID], master_sae_id: str, slave_sae_id: str):
        """Validates every ID before any is consumed so a bad request leaves the store untouched."""
        for key_id in key_ids:
            reservation = self.reserved.get(key_id)
            if reservation is None:
                state = "already consumed or expired" if key_id in self.consumed else "not found"
                msg = f"KME {self.kme_id}: key {key_id} {state}"
                LOGGER.error(msg)
                raise KmsNotFoundError(msg)
            if (reservation.master_sae_id, reservation.slave_sae_id) != (master_sae_id, slave_sae_id):
                msg = f"KME {self.kme_id}: key {key_id} is not reserved for ({master_sae_id}, {slave_sae_id})"
                LOGGER.error(msg)
                raise KmsAuthorizationError(msg)

    def consume(self, key_ids: List[uuid.UUID]) -> List[QkdKey]:
        keys = [self.reserved[key_id].key for key_id in key_ids]
        self.retire(key_ids)
        return keys

    def retire(self, key_ids: List[uuid.UUID]):
        """Drops reservations and records the IDs as used, trimming the history to consumed_history."""
        for key_id in key_ids:
            self.reserved.pop(key_id, None)
            self.consumed[key_id] = None
        while len(self.consumed) > self.consumed_history:
            self.consumed.popitem(last=False)

    def expired_reservations(self, max_age_ns: int, now_ns: int) -> List[uuid.UUID]:
        return [key_id for key_id, r in self.reserved.items() if now_ns - r.reserved_ns >= max_age_ns]
