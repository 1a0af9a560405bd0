"""Exception hierarchy shared by all qkd_ike sub-packages."""


class QkdIkeError(Exception):
    """Base class of every error raised by qkd_ike."""

    pass


# KMS

class KmsError(QkdIkeError):

    http_status = 500
    retryable = False


class KmsRequestError(KmsError):

    http_status = 400


class KmsAuthorizationError(KmsError):

    http_status = 401


class KmsNotFoundError(KmsError):

    http_status = 404


class KmsUnavailableError(KmsError):
    """Not enough keys in the pool. The request may succeed after replenish."""

    http_status = 503
    retryable = True


class KmsCapacityError(KmsError):

    http_status = 507


KMS_ERRORS_BY_STATUS = {
    400: KmsRequestError,
    401: KmsAuthorizationError,
    404: KmsNotFoundError,
    503: KmsUnavailableError,
    507: KmsCapacityError,
}


# Codec

class IkeCodecError(QkdIkeError, ValueError):

    pass


class IkeEncodeError(IkeCodecError):

    pass


class IkeParseError(IkeCodecError):
    """Structured decode failure. payload_index is None for header level problems."""

    def __init__(self, msg: str, offset: int = 0, payload_index: int = None):
        self.reason = msg
        self.offset = offset
        self.payload_index = payload_index
        super().__init__(msg)

    def __str__(self):
        return f"{self.reason} (offset={self.offset}, payload_index={self.payload_index})"


class IkeIntegrityError(IkeCodecError):

    pass


# Key schedule

class KeyScheduleError(QkdIkeError):

    pass


class DhWeakValueError(KeyScheduleError, ValueError):

    pass


class PrfParameterError(KeyScheduleError, ValueError):

    pass


class KeyPlanError(KeyScheduleError):

    pass


class AuthenticationError(KeyScheduleError):

    pass


# Handshake

class HandshakeError(QkdIkeError):

    def __init__(self, msg: str, status: str = "PROTOCOL_ERROR", phase: str = None):
        self.status = status
        self.phase = phase
        super().__init__(msg)


class ProtocolError(HandshakeError):

    def __init__(self, msg: str, phase: str = None):
        super().__init__(msg, status="PROTOCOL_ERROR", phase=phase)


class NoProposalChosenError(HandshakeError):

    def __init__(self, msg: str, phase: str = None):
        super().__init__(msg, status="NO_PROPOSAL_CHOSEN", phase=phase)


class KmsUnavailableHandshakeError(HandshakeError):

    def __init__(self, msg: str, phase: str = None):
        super().__init__(msg, status="KMS_UNAVAILABLE", phase=phase)


class KeyConfirmationError(HandshakeError):
    """The keys fetched by ID do not match the confirmation tag sent by the responder."""

    def __init__(self, msg: str, phase: str = None):
        super().__init__(msg, status="KEY_CONFIRMATION_FAILED", phase=phase)


class PeerErrorNotify(HandshakeError):
    """The peer answered with an error notify, status is the notify name."""

    def __init__(self, msg: str, status: str, notify_type: int, phase: str = None):
        self.notify_type = notify_type
        super().__init__(msg, status=status, phase=phase)


# Transport

class TransportError(QkdIkeError):

    pass


class TransportClosedError(TransportError):

    pass


class TransportTimeout(TransportError):

    pass
