"""Thin HTTP client for the shrinkerlab service.

By default the client mounts the service in-process through an ASGI
transport, so batch runs need no server; pointing ``base_url`` at a running
instance uses the network instead.  Either way every request crosses the
HTTP layer and the pydantic request/response models.
"""

import asyncio

import httpx

from .errors import ShrinkerlabError

__all__ = ["ServiceClient", "ServiceError"]


class ServiceError(ShrinkerlabError):
    """Structured error returned by the service."""

    def __init__(self, kind, type_name, message, status_code):
        super().__init__(message)
        self.kind = kind
        self.type_name = type_name
        self.status_code = status_code


class _InProcessTransport(httpx.BaseTransport):
    """Synchronous facade over the async ASGI transport."""

    def __init__(self, app):
        self._async = httpx.ASGITransport(app=app)

    def handle_request(self, request):
        async def _go():
            areq = httpx.Request(request.method, request.url,
                                 headers=request.headers,
                                 content=request.content)
            resp = await self._async.handle_async_request(areq)
            await resp.aread()
            return resp

        resp = asyncio.run(_go())
        return httpx.Response(resp.status_code, headers=resp.headers,
                              content=resp.content)

    def close(self):
        asyncio.run(self._async.aclose())


class ServiceClient:
    def __init__(self, base_url=None, timeout=3600.0):
        if base_url is None:
            from .service import app
            self._client = httpx.Client(
                transport=_InProcessTransport(app),
                base_url="http://shrinkerlab.local", timeout=timeout)
        else:
            self._client = httpx.Client(base_url=base_url, timeout=timeout)

    def close(self):
        self._client.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()

    def _raise_for(self, response):
        try:
            body = response.json()
        except Exception:
            body = {}
        if "error" in body:
            err = body["error"]
            raise ServiceError(err.get("kind", "internal"),
                               err.get("type", "ShrinkerlabError"),
                               err.get("message", response.text),
                               response.status_code)
        if response.status_code == 422:
            raise ServiceError("usage", "ValidationError",
                               str(body.get("detail", response.text)),
                               response.status_code)
        response.raise_for_status()

    def health(self):
        r = self._client.get("/health")
        if r.status_code != 200:
            self._raise_for(r)
        return r.json()

    def defaults(self):
        r = self._client.get("/config/defaults")
        if r.status_code != 200:
            self._raise_for(r)
        return r.json()

    def run(self, name, config=None):
        """Run an experiment; returns {experiment, summary, artifacts}."""
        payload = {"config": config or {}}
        r = self._client.post(f"/experiments/{name}", json=payload)
        if r.status_code != 200:
            self._raise_for(r)
        return r.json()
