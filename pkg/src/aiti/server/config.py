"""Server configuration: bind address, API roots, collections, bearer tokens."""

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Optional


@dataclass(frozen=True)
class CollectionConfig:
    id: str
    title: str
    description: Optional[str] = None
    alias: Optional[str] = None
    can_read: bool = True
    can_write: bool = True


@dataclass(frozen=True)
class ApiRootConfig:
    name: str
    title: str
    description: Optional[str] = None
    collections: tuple = ()


@dataclass(frozen=True)
class TokenConfig:
    token: str
    can_read: bool = True
    can_write: bool = True


@dataclass(frozen=True)
class ServerConfig:
    host: str = "127.0.0.1"
    port: int = 0
    title: str = "AI threat intelligence exchange"
    description: Optional[str] = None
    default_root: Optional[str] = None
    api_roots: tuple = ()
    tokens: tuple = ()
    log_file: str = "objects.jsonl"

    def __post_init__(self):
        names = [root.name for root in self.api_roots]
        if len(set(names)) != len(names):
            raise ValueError("api root names must be unique")
        ids = [c.id for root in self.api_roots for c in root.collections]
        if len(set(ids)) != len(ids):
            raise ValueError("collection ids must be unique across the server")
        aliases = [c.alias for root in self.api_roots for c in root.collections if c.alias]
        if len(set(aliases)) != len(aliases):
            raise ValueError("collection aliases must be unique")
        if self.default_root is not None and self.default_root not in names:
            raise ValueError(f"default_root {self.default_root!r} is not a configured root")


def server_config_from_dict(doc: dict, base_dir: Optional[Path] = None) -> ServerConfig:
    roots = tuple(
        ApiRootConfig(
            name=r["name"],
            title=r.get("title", r["name"]),
            description=r.get("description"),
            collections=tuple(
                CollectionConfig(
                    id=c["id"],
                    title=c["title"],
                    description=c.get("description"),
                    alias=c.get("alias"),
                    can_read=bool(c.get("can_read", True)),
                    can_write=bool(c.get("can_write", True)),
                )
                for c in r.get("collections", ())
            ),
        )
        for r in doc.get("api_roots", ())
    )
    tokens = tuple(
        TokenConfig(
            token=t["token"],
            can_read=bool(t.get("can_read", True)),
            can_write=bool(t.get("can_write", True)),
        )
        for t in doc.get("tokens", ())
    )
    log_file = doc.get("log_file", "objects.jsonl")
    if base_dir is not None and not Path(log_file).is_absolute():
        log_file = str(base_dir / log_file)
    return ServerConfig(
        host=doc.get("host", "127.0.0.1"),
        port=int(doc.get("port", 0)),
        title=doc.get("title", "AI threat intelligence exchange"),
        description=doc.get("description"),
        default_root=doc.get("default_root"),
        api_roots=roots,
        tokens=tokens,
        log_file=log_file,
    )


def load_server_config(path) -> ServerConfig:
    """Load config JSON; a relative log_file resolves against the config dir."""
    path = Path(path)
    doc = json.loads(path.read_text(encoding="utf-8"))
    return server_config_from_dict(doc, base_dir=path.parent)
