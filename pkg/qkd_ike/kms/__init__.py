from .KeyStore import KeySource, KeyStore
from .ReplicationChannel import ReplicationChannel, LocalReplicationChannel
from .Kme import Kme, KmePair
from .client import KmsClient, LocalKmsClient, HttpKmsClient
