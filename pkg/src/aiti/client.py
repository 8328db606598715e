"""HTTP client for pushing and pulling intelligence against a sharing server."""

from dataclasses import dataclass
from typing import Optional

import requests

from aiti.server.app import MEDIA_TYPE


class ClientError(RuntimeError):
    """Base class for client-side failures."""


class NetworkError(ClientError):
    """The server could not be reached."""


class AuthError(ClientError):
    """The server rejected the bearer token or its scopes (401/403)."""


class ServerError(ClientError):
    def __init__(self, status: int, title: str):
        super().__init__(f"server returned {status}: {title}")
        self.status = status
        self.title = title


@dataclass
class SharingClient:
    server_url: str
    token: str
    timeout: float = 30.0

    def _request(self, method: str, path: str, **kwargs) -> requests.Response:
        url = self.server_url.rstrip("/") + path
        headers = {"Authorization": f"Bearer {self.token}", "Accept": MEDIA_TYPE}
        if method == "POST":
            headers["Content-Type"] = MEDIA_TYPE
        try:
            response = requests.request(method, url, headers=headers, timeout=self.timeout, **kwargs)
        except requests.RequestException as exc:
            raise NetworkError(f"cannot reach {url}: {exc}") from exc
        if response.status_code in (401, 403):
            raise AuthError(f"{response.status_code} from {url}: {_title(response)}")
        if response.status_code >= 400:
            raise ServerError(response.status_code, _title(response))
        return response

    def discovery(self) -> dict:
        return self._request("GET", "/taxii2/").json()

    def list_collections(self, root: str) -> list:
        return self._request("GET", f"/{root}/collections/").json()["collections"]

    def push(self, root: str, collection: str, objects: list) -> dict:
        """POST an envelope of raw object documents; returns the status resource."""
        return self._request(
            "POST", f"/{root}/collections/{collection}/objects/", json={"objects": objects}
        ).json()

    def pull(
        self,
        root: str,
        collection: str,
        match_type: Optional[str] = None,
        match_id: Optional[str] = None,
        added_after: Optional[str] = None,
        page_limit: Optional[int] = None,
    ) -> list:
        """GET objects, following `next` cursors until the envelope is exhausted."""
        params = {}
        if match_type:
            params["match[type]"] = match_type
        if match_id:
            params["match[id]"] = match_id
        if added_after:
            params["added_after"] = added_after
        if page_limit:
            params["limit"] = str(page_limit)
        objects = []
        while True:
            envelope = self._request(
                "GET", f"/{root}/collections/{collection}/objects/", params=params
            ).json()
            objects.extend(envelope.get("objects", []))
            if not envelope.get("more"):
                return objects
            params["next"] = envelope["next"]

    def get_object(self, root: str, collection: str, object_id: str) -> list:
        return self._request(
            "GET", f"/{root}/collections/{collection}/objects/{object_id}/"
        ).json()["objects"]


def _title(response: requests.Response) -> str:
    try:
        return response.json().get("title", response.text)
    except ValueError:
        return response.text
