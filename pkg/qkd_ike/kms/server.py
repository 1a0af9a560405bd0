# Standard Libraries
import threading
# Third party packages
import uvicorn
from fastapi import FastAPI, Request
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse
from pydantic.typing import List
# Local package
from qkd_ike.config import LOGGER_KMS
from qkd_ike.exceptions import KmsError, KmsAuthorizationError, KmsRequestError
from qkd_ike.models.kms import KeyRequest, KeyIdsRequest
# Local module
from .Kme import Kme, KmePair

LOGGER = LOGGER_KMS


def create_app(kme: Kme, sae_id_header: str = "X-SAE-ID") -> FastAPI:
    """ETSI GS QKD 014 REST surface of a single KME."""
    app = FastAPI(title=f"QKD KME {kme.kme_id}")
    app.state.kme = kme

    def requester_of(request: Request) -> str:
        requester = request.headers.get(sae_id_header)
        if not requester:
            raise KmsAuthorizationError(f"Missing '{sae_id_header}' header")
        return requester

    @app.exception_handler(KmsError)
    async def kms_error_handler(request: Request, exc: KmsError):
        return JSONResponse(status_code=exc.http_status, content={"message": str(exc)})

    @app.exception_handler(RequestValidationError)
    async def request_error_handler(request: Request, exc: RequestValidationError):
        LOGGER.error(f"Malformed request to {request.url.path}: {exc.errors()}")
        return JSONResponse(status_code=KmsRequestError.http_status, content={"message": str(exc)})

    @app.get("/api/v1/keys/{slave_sae_id}/status")
    def get_status(slave_sae_id: str, request: Request):
        return kme.get_status(requester=requester_of(request), slave_sae=slave_sae_id).to_etsi()

    @app.post("/api/v1/keys/{slave_sae_id}/enc_keys")
    def get_keys(slave_sae_id: str, body: KeyRequest, request: Request):
        container = kme.get_keys(requester=requester_of(request), slave_sae=slave_sae_id, number=body.number, size_bits=body.size)
        return container.to_etsi()

    @app.post("/api/v1/keys/{master_sae_id}/dec_keys")
    def get_keys_by_id(master_sae_id: str, body: KeyIdsRequest, request: Request):
        key_ids = [entry.key_ID for entry in body.key_IDs]
        container = kme.get_keys_by_id(requester=requester_of(request), master_sae=master_sae_id, key_ids=key_ids)
        return container.to_etsi()

    return app


def serve_pair(pair: KmePair, log_level: str = "warning") -> List[threading.Thread]:
    """Starts one uvicorn server per KME of the pair in background threads."""
    servers = []
    threads = []
    for kme in (pair.kme_a, pair.kme_b):
        app = create_app(kme=kme, sae_id_header=pair.config.sae_id_header)
        config = uvicorn.Config(app=app, host=kme.config.host, port=kme.config.port, log_level=log_level)
        server = uvicorn.Server(config=config)
        thread = threading.Thread(target=server.run, name=f"KME-{kme.kme_id}", daemon=True)
        thread.start()
        LOGGER.info(f"KME {kme.kme_id} serving SAEs {kme.config.sae_ids} on {kme.config.base_url}")
        servers.append(server)
        threads.append(thread)
    pair.servers = servers
    return threads


def stop_pair(pair: KmePair):
    for server in getattr(pair, "servers", []):
        server.should_exit = True
    pair.stop_generation()
