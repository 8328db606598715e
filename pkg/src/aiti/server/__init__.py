"""TAXII-2.1-style sharing service: collections, envelopes, durable store."""

from aiti.server.config import (
    ApiRootConfig,
    CollectionConfig,
    ServerConfig,
    TokenConfig,
    load_server_config,
    server_config_from_dict,
)
from aiti.server.store import ObjectStore, StoreCorruptError, StoredObject
from aiti.server.app import MEDIA_TYPE, create_app

__all__ = [
    "MEDIA_TYPE",
    "ApiRootConfig",
    "CollectionConfig",
    "ObjectStore",
    "ServerConfig",
    "StoreCorruptError",
    "StoredObject",
    "TokenConfig",
    "create_app",
    "load_server_config",
    "server_config_from_dict",
]
