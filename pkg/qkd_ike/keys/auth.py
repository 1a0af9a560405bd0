# Standard Libraries
import datetime
import functools
import hmac
# Third party packages
from cryptography import x509
from cryptography.exceptions import InvalidSignature
from cryptography.hazmat.primitives import hashes, serialization
from cryptography.hazmat.primitives.asymmetric import rsa, padding
from cryptography.x509.oid import NameOID
from pydantic.typing import Optional
# Local package
from qkd_ike.config import LOGGER_KEYS
from qkd_ike.constants import AuthMethod
from qkd_ike.exceptions import AuthenticationError
from qkd_ike.models.keys import AuthSecret, CryptoCounters
# Local module
from .prf import prf

LOGGER = LOGGER_KEYS

KEY_PAD = b"Key Pad for IKEv2"
RSA_KEY_SIZE = 3072


class SigningIdentity(object):
    """RSA key pair with its self-signed certificate."""

    def __init__(self, private_key: rsa.RSAPrivateKey, certificate: x509.Certificate):
        self.private_key = private_key
        self.certificate = certificate
        self.certificate_der = certificate.public_bytes(serialization.Encoding.DER)

    @property
    def public_key(self) -> rsa.RSAPublicKey:
        return self.private_key.public_key()

    def matches(self, certificate_der: bytes) -> bool:
        return hmac.compare_digest(self.certificate_der, certificate_der)


def generate_self_signed(common_name: str, key_size: int = RSA_KEY_SIZE) -> SigningIdentity:
    private_key = rsa.generate_private_key(public_exponent=65537, key_size=key_size)
    name = x509.Name([x509.NameAttribute(NameOID.COMMON_NAME, common_name)])
    now = datetime.datetime.now(datetime.timezone.utc)
    certificate = (
        x509.CertificateBuilder()
        .subject_name(name)
        .issuer_name(name)
        .public_key(private_key.public_key())
        .serial_number(x509.random_serial_number())
        .not_valid_before(now - datetime.timedelta(days=1))
        .not_valid_after(now + datetime.timedelta(days=365))
        .sign(private_key, hashes.SHA256())
    )
    LOGGER.debug(f"Generated {key_size}-bit self-signed certificate for '{common_name}'")
    return SigningIdentity(private_key=private_key, certificate=certificate)


@functools.lru_cache(maxsize=8)
def cached_identity(common_name: str, key_size: int = RSA_KEY_SIZE) -> SigningIdentity:
    """One identity per name and key size for the lifetime of the process."""
    return generate_self_signed(common_name=common_name, key_size=key_size)


def signed_octets(message: bytes, peer_nonce: bytes, id_body: bytes, sk_p: bytes,
                  counters: Optional[CryptoCounters] = None) -> bytes:
    """Octets bound by AUTH: the sender's IKE_SA_INIT message, the peer nonce and prf(SK_p, ID body)."""
    return message + peer_nonce + prf(key=sk_p, data=id_body, counters=counters)


def compute_auth(method: int, octets: bytes, secret: AuthSecret = None, identity: SigningIdentity = None,
                 counters: Optional[CryptoCounters] = None) -> bytes:
    if method == AuthMethod.SHARED_KEY:
        if secret is None:
            raise AuthenticationError("Shared key authentication needs a secret")
        key_pad = prf(key=secret.material, data=KEY_PAD, counters=counters)
        return prf(key=key_pad, data=octets, counters=counters)
    if method == AuthMethod.RSA_SIGNATURE:
        if identity is None:
            raise AuthenticationError("Signature authentication needs a signing identity")
        return identity.private_key.sign(octets, padding.PKCS1v15(), hashes.SHA256())
    msg = f"Unsupported authentication method {method}"
    LOGGER.error(msg)
    raise AuthenticationError(msg)


def verify_auth(method: int, octets: bytes, auth_data: bytes, secret: AuthSecret = None,
                identity: SigningIdentity = None, certificate_der: bytes = None,
                counters: Optional[CryptoCounters] = None) -> bool:
    """
    Checks received AUTH data. Signatures are verified against the pinned identity, whose
    certificate must also match the received one byte for byte.

    Raises AuthenticationError on any mismatch.
    """
    if method == AuthMethod.SHARED_KEY:
        expected = compute_auth(method=method, octets=octets, secret=secret, counters=counters)
        if not hmac.compare_digest(expected, auth_data):
            msg = f"Shared key AUTH mismatch ({secret.source})"
            LOGGER.error(msg)
            raise AuthenticationError(msg)
        return True
    if method == AuthMethod.RSA_SIGNATURE:
        if identity is None or certificate_der is None or not identity.matches(certificate_der):
            msg = "Certificate does not match the pinned self-signed certificate"
            LOGGER.error(msg)
            raise AuthenticationError(msg)
        try:
            identity.public_key.verify(auth_data, octets, padding.PKCS1v15(), hashes.SHA256())
        except InvalidSignature:
            msg = "Signature AUTH verification failed"
            LOGGER.error(msg)
            raise AuthenticationError(msg)
        return True
    msg = f"Unsupported authentication method {method}"
    LOGGER.error(msg)
    raise AuthenticationError(msg)
