"""
KMS clients used by the handshake peers.

Both clients count their calls so handshakes can assert how many KMS round
trips they made.
"""
# Standard Libraries
import threading
import time
import uuid
# Third party packages
import requests
from pydantic.typing import List
# Local package
from qkd_ike.config import LOGGER_KMS
from qkd_ike.exceptions import KmsError, KmsUnavailableError, KMS_ERRORS_BY_STATUS
from qkd_ike.models.kms import KeyContainer, KmeStatus
# Local module
from .Kme import Kme

LOGGER = LOGGER_KMS


class KmsClient(object):
    """Interface of a local application (SAE) towards its KME."""

    def __init__(self, sae_id: str):
        self.sae_id = sae_id
        self.call_count = 0
        self.calls: List[str] = []
        self._lock = threading.Lock()

    def _count(self, name: str):
        with self._lock:
            self.call_count += 1
            self.calls.append(name)

    def get_status(self, slave_sae: str) -> KmeStatus:
        raise NotImplementedError

    def get_keys(self, slave_sae: str, number: int, size_bits: int = 256) -> KeyContainer:
        raise NotImplementedError

    def get_keys_by_id(self, master_sae: str, key_ids: List[uuid.UUID]) -> KeyContainer:
        raise NotImplementedError


class LocalKmsClient(KmsClient):
    """Calls an in-process KME, optionally adding a fixed round-trip delay."""

    def __init__(self, kme: Kme, sae_id: str, latency_ms: float = 0.0):
        super(LocalKmsClient, self).__init__(sae_id=sae_id)
        self.kme = kme
        self.latency_ms = latency_ms

    def _delay(self):
        if self.latency_ms > 0:
            time.sleep(self.latency_ms / 1000.0)

    def get_status(self, slave_sae: str) -> KmeStatus:
        self._count("get_status")
        self._delay()
        return self.kme.get_status(requester=self.sae_id, slave_sae=slave_sae)

    def get_keys(self, slave_sae: str, number: int, size_bits: int = 256) -> KeyContainer:
        self._count("get_keys")
        self._delay()
        return self.kme.get_keys(requester=self.sae_id, slave_sae=slave_sae, number=number, size_bits=size_bits)

    def get_keys_by_id(self, master_sae: str, key_ids: List[uuid.UUID]) -> KeyContainer:
        self._count("get_keys_by_id")
        self._delay()
        return self.kme.get_keys_by_id(requester=self.sae_id, master_sae=master_sae, key_ids=key_ids)


class HttpKmsClient(KmsClient):
    """ETSI GS QKD 014 REST client."""

    def __init__(self, base_url: str, sae_id: str, sae_id_header: str = "X-SAE-ID", timeout: float = 10.0, session=None):
        super(HttpKmsClient, self).__init__(sae_id=sae_id)
        self.base_url = base_url.rstrip("/")
        self.sae_id_header = sae_id_header
        self.timeout = timeout
        self.session = session or requests.Session()
        self.session.headers.update({self.sae_id_header: self.sae_id})

    def _raise_for_status(self, response):
        if response.status_code < 400:
            return
        try:
            message = response.json().get("message", response.text)
        except ValueError:
            message = response.text
        exc_class = KMS_ERRORS_BY_STATUS.get(response.status_code, KmsError)
        msg = f"KMS {self.base_url} answered {response.status_code}: {message}"
        if exc_class is KmsUnavailableError:
            LOGGER.warning(msg)
        else:
            LOGGER.error(msg)
        raise exc_class(msg)

    def _request(self, method: str, path: str, **kwargs):
        try:
            response = self.session.request(method, f"{self.base_url}{path}", timeout=self.timeout, **kwargs)
        except requests.RequestException as e:
            msg = f"KMS {self.base_url} unreachable: {repr(e)}"
            LOGGER.error(msg)
            raise KmsUnavailableError(msg)
        self._raise_for_status(response)
        return response.json()

    def get_status(self, slave_sae: str) -> KmeStatus:
        self._count("get_status")
        return KmeStatus.from_etsi(self._request("GET", f"/api/v1/keys/{slave_sae}/status"))

    def get_keys(self, slave_sae: str, number: int, size_bits: int = 256) -> KeyContainer:
        self._count("get_keys")
        data = self._request("POST", f"/api/v1/keys/{slave_sae}/enc_keys", json={"number": number, "size": size_bits})
        return KeyContainer.from_etsi(data)

    def get_keys_by_id(self, master_sae: str, key_ids: List[uuid.UUID]) -> KeyContainer:
        self._count("get_keys_by_id")
        body = {"key_IDs": [{"key_ID": str(x)} for x in key_ids]}
        data = self._request("POST", f"/api/v1/keys/{master_sae}/dec_keys", json=body)
        return KeyContainer.from_etsi(data)
