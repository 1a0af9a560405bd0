from .EapStub import EapServer, EapPeer, eap_msk
from .Session import Session, message_label, failure_status
from .Initiator import Initiator
from .Responder import Responder
from .HandshakeRunner import HandshakeRunner, create_kms_clients, run_full_handshake
