"""HTTP sidecar serving per-token embeddings behind a fixed wire contract.

POST /v1/embed  {"model": str, "sentences": [[token, ...], ...]}
    -> {"model": str, "dim": int, "vectors": [[[float x dim] per token] per sentence]}
GET /v1/models  -> {"models": [{"name": str, "dim": int, "layer": str}, ...]}
GET /v1/health  -> {"status": "ok"}

Errors: 400 malformed request, 404 unknown model (body carries the
advertised model list), 503 while a model is still loading.
"""

__version__ = "0.1.0"
