# Standard Libraries
import uuid
# Third party packages
from pydantic.typing import List
# Local package
from qkd_ike.models.kms import QkdKey
# Local module
from .KeyStore import KeyStore


class ReplicationChannel(object):
    """
    Keeps the peer KME's store in step with the local one.

    The in-process channel applies operations directly. A two-process
    deployment implements the same three calls over its own link.
    """

    def replicate_keys(self, keys: List[QkdKey]):
        raise NotImplementedError

    def replicate_reservation(self, key_ids: List[uuid.UUID], master_sae_id: str, slave_sae_id: str):
        raise NotImplementedError

    def replicate_consumption(self, key_ids: List[uuid.UUID]):
        raise NotImplementedError


class LocalReplicationChannel(ReplicationChannel):

    def __init__(self, peer_store: KeyStore):
        self.peer_store = peer_store

    def replicate_keys(self, keys: List[QkdKey]):
        self.peer_store.append(keys)

    def replicate_reservation(self, key_ids: List[uuid.UUID], master_sae_id: str, slave_sae_id: str):
        self.peer_store.reserve(key_ids=key_ids, master_sae_id=master_sae_id, slave_sae_id=slave_sae_id)

    def replicate_consumption(self, key_ids: List[uuid.UUID]):
        # The serving side already handed these keys out once; the peer only
        # forgets them.
        self.peer_store.retire(key_ids)
