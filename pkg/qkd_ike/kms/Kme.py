# Standard Libraries
import threading
import time
import uuid
# Third party packages
from pydantic.typing import List, Optional, Union
# Local package
from qkd_ike.config import LOGGER_KMS
from qkd_ike.exceptions import KmsAuthorizationError, KmsRequestError, KmsNotFoundError
from qkd_ike.models.kms import KmsConfig, KmeConfig, KmeStatus, KeyContainer
# Local module
from .KeyStore import KeySource, KeyStore
from .ReplicationChannel import ReplicationChannel, LocalReplicationChannel

LOGGER = LOGGER_KMS


class Kme(object):
    """Key Management Entity exposing the ETSI GS QKD 014 operations to its registered SAEs."""

    def __init__(self, config: KmeConfig, pair: "KmePair", store: KeyStore):
        self.config = config
        self.pair = pair
        self.store = store
        self.channel: Optional[ReplicationChannel] = None
        self.peer: Optional["Kme"] = None

    @property
    def kme_id(self) -> str:
        return self.config.kme_id

    def __repr__(self):
        return f"Kme({self.kme_id})"

    def _check_local_sae(self, sae_id: str):
        if sae_id not in self.config.sae_ids:
            msg = f"SAE '{sae_id}' is not registered at {self.kme_id}"
            LOGGER.error(msg)
            raise KmsAuthorizationError(msg)

    def _check_peer_sae(self, sae_id: str):
        if sae_id not in self.peer.config.sae_ids:
            msg = f"SAE '{sae_id}' is not reachable through {self.kme_id}"
            LOGGER.error(msg)
            raise KmsAuthorizationError(msg)

    def _simulate_latency(self):
        if self.pair.config.request_latency_ms > 0:
            time.sleep(self.pair.config.request_latency_ms / 1000.0)

    def get_status(self, requester: str, slave_sae: str) -> KmeStatus:
        self._check_local_sae(requester)
        self._check_peer_sae(slave_sae)
        with self.pair.lock:
            stored = self.store.stored_key_count
        return KmeStatus(
            source_kme_id=self.kme_id,
            target_kme_id=self.peer.kme_id,
            master_sae_id=requester,
            slave_sae_id=slave_sae,
            key_size_bits=self.pair.config.key_size_bits,
            stored_key_count=stored,
            max_key_count=self.pair.config.capacity,
            max_key_per_request=self.pair.config.max_key_per_request
        )

    def get_keys(self, requester: str, slave_sae: str, number: int, size_bits: int = None) -> KeyContainer:
        self._simulate_latency()
        self._check_local_sae(requester)
        self._check_peer_sae(slave_sae)
        size_bits = self.pair.config.key_size_bits if size_bits is None else size_bits
        if not isinstance(number, int) or number < 1:
            msg = f"Invalid number of keys requested: {number}"
            LOGGER.error(msg)
            raise KmsRequestError(msg)
        if number > self.pair.config.max_key_per_request:
            msg = f"{number} keys requested, max_key_per_request is {self.pair.config.max_key_per_request}"
            LOGGER.error(msg)
            raise KmsRequestError(msg)
        if size_bits != self.pair.config.key_size_bits:
            msg = f"Key size {size_bits} not served, pool key size is {self.pair.config.key_size_bits}"
            LOGGER.error(msg)
            raise KmsRequestError(msg)
        if self.pair.config.reservation_ttl_s is not None:
            self.pair.expire_reservations(max_age_s=self.pair.config.reservation_ttl_s)
        with self.pair.lock:
            key_ids = [k.key_id for k in self.store.take_pending(number)]
            keys = self.store.reserve(key_ids=key_ids, master_sae_id=requester, slave_sae_id=slave_sae)
            self.channel.replicate_reservation(key_ids=key_ids, master_sae_id=requester, slave_sae_id=slave_sae)
        LOGGER.debug(f"{self.kme_id}: reserved {number} keys for ({requester} -> {slave_sae})")
        return KeyContainer(keys=keys)

    def get_keys_by_id(self, requester: str, master_sae: str, key_ids: List[Union[uuid.UUID, str]]) -> KeyContainer:
        self._simulate_latency()
        self._check_local_sae(requester)
        self._check_peer_sae(master_sae)
        try:
            key_ids = [x if isinstance(x, uuid.UUID) else uuid.UUID(str(x)) for x in key_ids]
        except ValueError as e:
            msg = f"Malformed key ID in request: {repr(e)}"
            LOGGER.error(msg)
            raise KmsNotFoundError(msg)
        if len(set(key_ids)) != len(key_ids):
            msg = "Duplicate key IDs in request"
            LOGGER.error(msg)
            raise KmsRequestError(msg)
        with self.pair.lock:
            self.store.check_reserved(key_ids=key_ids, master_sae_id=master_sae, slave_sae_id=requester)
            keys = self.store.consume(key_ids=key_ids)
            self.channel.replicate_consumption(key_ids=key_ids)
        LOGGER.debug(f"{self.kme_id}: delivered {len(keys)} keys to {requester} (master {master_sae})")
        return KeyContainer(keys=keys)

    def replenish(self, count: int) -> int:
        return self.pair.replenish(count=count)


class KmePair(object):
    """Two KMEs joined by a simulated QKD link. All pool mutations run under one lock."""

    def __init__(self, config: KmsConfig = None):
        self.config = config or KmsConfig()
        self.lock = threading.RLock()
        self.source = KeySource(key_size_bits=self.config.key_size_bits, seed=self.config.seed)
        store_a = KeyStore(
            kme_id=self.config.kme_a.kme_id, capacity=self.config.capacity, consumed_history=self.config.consumed_history
        )
        store_b = KeyStore(
            kme_id=self.config.kme_b.kme_id, capacity=self.config.capacity, consumed_history=self.config.consumed_history
        )
        self.kme_a = Kme(config=self.config.kme_a, pair=self, store=store_a)
        self.kme_b = Kme(config=self.config.kme_b, pair=self, store=store_b)
        self.kme_a.peer, self.kme_b.peer = self.kme_b, self.kme_a
        self.kme_a.channel = LocalReplicationChannel(peer_store=store_b)
        self.kme_b.channel = LocalReplicationChannel(peer_store=store_a)
        self._generator: Optional[threading.Thread] = None
        self._stop = threading.Event()
        if self.config.initial_keys:
            self.replenish(count=self.config.initial_keys)

    def kme_for(self, sae_id: str) -> Kme:
        for kme in (self.kme_a, self.kme_b):
            if sae_id in kme.config.sae_ids:
                return kme
        msg = f"SAE '{sae_id}' is not registered at any KME of the pair"
        LOGGER.error(msg)
        raise KmsAuthorizationError(msg)

    def replenish(self, count: int) -> int:
        if not isinstance(count, int) or count < 1:
            msg = f"Invalid replenish count: {count}"
            LOGGER.error(msg)
            raise KmsRequestError(msg)
        with self.lock:
            keys = self.source.generate(count)
            stored = self.kme_a.store.append(keys)
            self.kme_a.channel.replicate_keys(keys)
        LOGGER.debug(f"Link delivered {count} keys, {stored} pending")
        return stored

    def expire_reservations(self, max_age_s: float) -> List[uuid.UUID]:
        """Discards reservations older than max_age_s on both KMEs. Their keys are not returned to the pool."""
        with self.lock:
            expired = self.kme_a.store.expired_reservations(max_age_ns=int(max_age_s * 1e9), now_ns=time.monotonic_ns())
            if expired:
                self.kme_a.store.retire(expired)
                self.kme_b.store.retire(expired)
        if expired:
            LOGGER.warning(f"Discarded {len(expired)} reservations older than {max_age_s}s")
        return expired

    def start_generation(self):
        """Runs the constant-rate key generator until stop_generation()."""
        if self.config.generation_rate <= 0 or self._generator is not None:
            return
        self._stop.clear()

        def run():
            interval = 1.0 / self.config.generation_rate
            while not self._stop.wait(interval):
                try:
                    self.replenish(1)
                except Exception as e:
                    LOGGER.warning(f"Key generation paused: {repr(e)}")

        self._generator = threading.Thread(target=run, name="QkdLink", daemon=True)
        self._generator.start()

    def stop_generation(self):
        self._stop.set()
        if self._generator is not None:
            self._generator.join()
            self._generator = None
