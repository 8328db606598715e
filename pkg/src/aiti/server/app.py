"""REST endpoints for exchanging threat-intelligence objects.

Implements the TAXII-2.1 subset the sharing workflow needs: discovery, API
roots, collections, paginated object retrieval with filters, object push with
per-object status, and object-by-id lookup.  Bodies use the TAXII JSON media
type; auth is static bearer tokens with read/write scopes.

Ingestion is synchronous, so a returned status resource is always complete
and every success is already durable on disk.
"""

import json
import uuid
from typing import Optional

from fastapi import FastAPI, Request
from fastapi.exceptions import RequestValidationError
from fastapi.responses import Response
from starlette.exceptions import HTTPException as StarletteHTTPException

from aiti.objects import AitiParseError, Bundle, object_from_dict, object_to_dict
from aiti.server.config import ServerConfig
from aiti.server.store import ObjectStore
from aiti.timestamps import format_timestamp, parse_timestamp
from aiti.validation import validate

MEDIA_TYPE = "application/taxii+json;version=2.1"
MAX_CONTENT_LENGTH = 104857600


class ApiError(Exception):
    def __init__(self, status: int, title: str):
        self.status = status
        self.title = title


def _taxii_json(payload: dict, status: int = 200, headers: Optional[dict] = None) -> Response:
    return Response(
        json.dumps(payload, ensure_ascii=False),
        status_code=status,
        media_type=MEDIA_TYPE,
        headers=headers,
    )


def _error_response(status: int, title: str) -> Response:
    return _taxii_json({"title": title, "http_status": str(status)}, status=status)


def create_app(config: ServerConfig, store: Optional[ObjectStore] = None) -> FastAPI:
    app = FastAPI(title=config.title, docs_url=None, redoc_url=None, openapi_url=None)
    app.state.store = store if store is not None else ObjectStore(config.log_file)
    app.state.config = config

    roots = {root.name: root for root in config.api_roots}
    collections = {}  # (root name, id or alias) -> CollectionConfig
    for root in config.api_roots:
        for coll in root.collections:
            collections[(root.name, coll.id)] = coll
            if coll.alias:
                collections[(root.name, coll.alias)] = coll
    tokens = {token.token: token for token in config.tokens}

    # -- plumbing -----------------------------------------------------------

    @app.exception_handler(ApiError)
    async def _api_error(_request, exc: ApiError):
        return _error_response(exc.status, exc.title)

    @app.exception_handler(StarletteHTTPException)
    async def _http_error(_request, exc: StarletteHTTPException):
        return _error_response(exc.status_code, str(exc.detail))

    @app.exception_handler(RequestValidationError)
    async def _validation_error(_request, exc: RequestValidationError):
        return _error_response(422, "malformed request body")

    def authenticate(request: Request):
        header = request.headers.get("authorization", "")
        scheme, _, credential = header.partition(" ")
        token = tokens.get(credential.strip()) if scheme.lower() == "bearer" else None
        if token is None:
            raise ApiError(401, "missing or invalid bearer token")
        return token

    def find_root(root: str):
        found = roots.get(root)
        if found is None:
            raise ApiError(404, f"unknown API root {root!r}")
        return found

    def find_collection(root: str, collection_id: str):
        find_root(root)
        coll = collections.get((root, collection_id))
        if coll is None:
            raise ApiError(404, f"unknown collection {collection_id!r}")
        return coll

    def collection_resource(coll) -> dict:
        doc = {"id": coll.id, "title": coll.title}
        if coll.description:
            doc["description"] = coll.description
        if coll.alias:
            doc["alias"] = coll.alias
        doc["can_read"] = coll.can_read
        doc["can_write"] = coll.can_write
        doc["media_types"] = [MEDIA_TYPE]
        return doc

    def page_headers(records) -> dict:
        if not records:
            return {}
        return {
            "X-TAXII-Date-Added-First": format_timestamp(records[0].date_added),
            "X-TAXII-Date-Added-Last": format_timestamp(records[-1].date_added),
        }

    # -- endpoints ----------------------------------------------------------

    @app.get("/taxii2/")
    def discovery():
        doc = {"title": config.title}
        if config.description:
            doc["description"] = config.description
        if config.default_root:
            doc["default"] = f"/{config.default_root}/"
        doc["api_roots"] = [f"/{root.name}/" for root in config.api_roots]
        return _taxii_json(doc)

    @app.get("/{root}/")
    def api_root(root: str, request: Request):
        authenticate(request)
        found = find_root(root)
        doc = {"title": found.title}
        if found.description:
            doc["description"] = found.description
        doc["versions"] = [MEDIA_TYPE]
        doc["max_content_length"] = MAX_CONTENT_LENGTH
        return _taxii_json(doc)

    @app.get("/{root}/collections/")
    def list_collections(root: str, request: Request):
        authenticate(request)
        found = find_root(root)
        return _taxii_json(
            {"collections": [collection_resource(c) for c in found.collections]}
        )

    @app.get("/{root}/collections/{collection_id}/")
    def get_collection(root: str, collection_id: str, request: Request):
        authenticate(request)
        return _taxii_json(collection_resource(find_collection(root, collection_id)))

    def _read_filters(request: Request):
        params = request.query_params
        added_after = None
        if "added_after" in params:
            try:
                added_after = parse_timestamp(params["added_after"])
            except ValueError as exc:
                raise ApiError(400, f"invalid added_after: {exc}") from exc
        limit = None
        if "limit" in params:
            try:
                limit = int(params["limit"])
            except ValueError as exc:
                raise ApiError(400, "limit must be an integer") from exc
            if limit < 1:
                raise ApiError(400, "limit must be positive")
        cursor = None
        if "next" in params:
            try:
                cursor = int(params["next"])
            except ValueError as exc:
                raise ApiError(400, "invalid pagination cursor") from exc
            if cursor < 0:
                raise ApiError(400, "invalid pagination cursor")
        def split(name: str):
            return [v for v in params.get(name, "").split(",") if v] or None

        return added_after, limit, cursor, split("match[type]"), split("match[id]")

    @app.get("/{root}/collections/{collection_id}/objects/")
    def get_objects(root: str, collection_id: str, request: Request):
        token = authenticate(request)
        coll = find_collection(root, collection_id)
        if not (coll.can_read and token.can_read):
            raise ApiError(403, "collection is not readable with this token")
        added_after, limit, cursor, match_type, match_id = _read_filters(request)

        records = app.state.store.query(
            coll.id, added_after=added_after, match_type=match_type, match_id=match_id
        )
        if cursor is not None:
            records = [r for r in records if r.seq > cursor]
        page = records if limit is None else records[:limit]
        envelope = {"more": len(page) < len(records)}
        if envelope["more"]:
            envelope["next"] = str(page[-1].seq)
        envelope["objects"] = [object_to_dict(r.obj, "canonical") for r in page]
        return _taxii_json(envelope, headers=page_headers(page))

    @app.get("/{root}/collections/{collection_id}/objects/{object_id}/")
    def get_object_by_id(root: str, collection_id: str, object_id: str, request: Request):
        token = authenticate(request)
        coll = find_collection(root, collection_id)
        if not (coll.can_read and token.can_read):
            raise ApiError(403, "collection is not readable with this token")
        records = app.state.store.query(coll.id, match_id=[object_id])
        if not records:
            raise ApiError(404, f"no object {object_id!r} in collection")
        # Echo the originally received spelling.
        envelope = {"more": False, "objects": [r.raw for r in records]}
        return _taxii_json(envelope, headers=page_headers(records))

    @app.post("/{root}/collections/{collection_id}/objects/")
    async def add_objects(root: str, collection_id: str, request: Request):
        token = authenticate(request)
        coll = find_collection(root, collection_id)
        if not (coll.can_write and token.can_write):
            raise ApiError(403, "collection is not writable with this token")
        try:
            envelope = json.loads(await request.body())
        except (ValueError, UnicodeDecodeError) as exc:
            raise ApiError(422, f"malformed envelope: {exc}") from exc
        if not isinstance(envelope, dict) or not isinstance(envelope.get("objects"), list):
            raise ApiError(422, "envelope must be an object with an 'objects' list")

        failures = []
        accepted = []
        for i, raw in enumerate(envelope["objects"]):
            label = raw.get("id", f"(object {i})") if isinstance(raw, dict) else f"(object {i})"
            try:
                obj = object_from_dict(raw, "paper-compat", path="")
            except AitiParseError as exc:
                failures.append({"id": label, "message": f"{exc.path or '/'}: {exc.message}"})
                continue
            problems = [
                d
                for d in validate(Bundle(id="bundle--ingest", objects=(obj,)), "lenient")
                if d.severity == "error"
            ]
            if problems:
                first = problems[0]
                failures.append({"id": obj.id, "message": f"{first.path}: {first.message}"})
                continue
            accepted.append((raw, obj))

        stored = app.state.store.append(coll.id, accepted)
        success_count = len(stored)  # duplicates are idempotent successes
        status = {
            "id": str(uuid.uuid4()),
            "status": "complete",
            "total_count": len(envelope["objects"]),
            "success_count": success_count,
            "failure_count": len(failures),
            "pending_count": 0,
            "failures": failures,
        }
        return _taxii_json(status)

    return app
