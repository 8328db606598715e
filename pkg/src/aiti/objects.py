"""The AITI object model: STIX-adapted threat-intelligence objects for AI attacks.

Two wire spellings are supported for the same semantic objects:

* canonical  — STIX-2.1-style: hyphenated `type` (``ai-attack``), RFC 3339 UTC
  timestamps, `attack_category` as its own property.
* paper-compat — the legacy exported spelling: `type` of the form
  ``AI Attack-Evasion``, the space-containing key ``AI Attack Pattern``,
  zone-less second-precision timestamps, free-form ids.

Parsing in paper-compat mode accepts both spellings; canonical mode is strict.
Unrecognized keys are preserved verbatim in ``custom_properties`` so foreign
extensions survive a round-trip.
"""

import json
import re
import uuid
from dataclasses import dataclass, field
from datetime import datetime
from typing import Callable, Optional

from aiti.timestamps import format_timestamp, parse_timestamp

MODES = ("canonical", "paper-compat")

# ---------------------------------------------------------------------------
# Vocabularies
# ---------------------------------------------------------------------------

# Closed: an AiAttack must use one of these categories.
ATTACK_CATEGORIES = (
    "evasion",
    "poisoning",
    "model-replication",
    "exploiting-traditional-software-flaws",
)

# Open vocabularies: seeded values; anything else is legal but warned about.
PERSONAS_SEED = ("average-user", "security-researcher", "ai-ml-researcher")
PARADIGMS_SEED = ("cloud-hosted", "public-server-hosted", "edge")
USE_CASES_SEED = ("security-sensitive", "non-security-sensitive")
SOPHISTICATION_SEED = (
    "none",
    "minimal",
    "intermediate",
    "advanced",
    "expert",
    "innovator",
    "strategic",
)
RESOURCE_LEVELS_SEED = ("individual", "club", "contest", "team", "organization", "government")
MOTIVATIONS_SEED = (
    "accidental",
    "coercion",
    "dominance",
    "ideology",
    "notoriety",
    "organizational-gain",
    "personal-gain",
    "personal-satisfaction",
    "revenge",
    "unpredictable",
)

# ---------------------------------------------------------------------------
# Kind schemas: declared field order drives both serialization and validation
# ---------------------------------------------------------------------------

TEXT = "text"
TEXT_LIST = "text-list"
REF = "ref"
REF_LIST = "ref-list"
TIMESTAMP = "timestamp"
COUNT = "count"


@dataclass(frozen=True)
class FieldSpec:
    name: str
    value_kind: str
    required: bool = False


_INHERITED_BODY = (
    FieldSpec("name", TEXT, required=True),
    FieldSpec("description", TEXT),
    FieldSpec("object_refs", REF_LIST),
)

KIND_SCHEMAS = {
    "ai-attack": (
        FieldSpec("attack_category", TEXT, required=True),
        FieldSpec("ai_attack_pattern", TEXT),
        FieldSpec("description", TEXT),
        FieldSpec("sophistication", TEXT),
        FieldSpec("resource_level", TEXT),
        FieldSpec("primary_motivation", TEXT),
    ),
    "ai-attack-pattern": (
        FieldSpec("name", TEXT, required=True),
        FieldSpec("description", TEXT),
        FieldSpec("procedure", TEXT),
    ),
    "affected-user-personas": (FieldSpec("personas", TEXT_LIST, required=True),),
    "ai-paradigm-under-threat": (FieldSpec("paradigms", TEXT_LIST, required=True),),
    "ai-use-case": (
        FieldSpec("use_case", TEXT, required=True),
        FieldSpec("description", TEXT),
    ),
    "course-of-action": _INHERITED_BODY,
    "identity": _INHERITED_BODY,
    "indicator": _INHERITED_BODY,
    "observed-data": _INHERITED_BODY,
    "threat-actor": _INHERITED_BODY,
    "report": _INHERITED_BODY,
    "vulnerability": _INHERITED_BODY,
    "relationship": (
        FieldSpec("relationship_type", TEXT, required=True),
        FieldSpec("source_ref", REF, required=True),
        FieldSpec("target_ref", REF, required=True),
    ),
    "sighting": (
        FieldSpec("sighting_of_ref", REF, required=True),
        FieldSpec("count", COUNT),
        FieldSpec("first_seen", TIMESTAMP),
        FieldSpec("last_seen", TIMESTAMP),
    ),
}

_COMPAT_ATTACK_PREFIX = "AI Attack-"
_COMPAT_PATTERN_KEY = "AI Attack Pattern"
_HEAD_KEYS = ("type", "id", "created", "modified")


# ---------------------------------------------------------------------------
# Identifiers
# ---------------------------------------------------------------------------

_CANONICAL_ID_RE = re.compile(
    r"^[a-z][a-z0-9-]*--[0-9a-f]{8}-[0-9a-f]{4}-[0-9a-f]{4}-[0-9a-f]{4}-[0-9a-f]{12}$"
)


def is_canonical_id(identifier: str) -> bool:
    return bool(_CANONICAL_ID_RE.match(identifier))


def is_valid_identifier(identifier) -> bool:
    """Any nonempty text without control characters is a legal identifier."""
    if not isinstance(identifier, str) or not identifier:
        return False
    return not any(ord(ch) < 0x20 or ord(ch) == 0x7F for ch in identifier)


def new_id(kind: str, uuid_source: Optional[Callable[[], uuid.UUID]] = None) -> str:
    """Canonical `<kind>--<uuid>` identifier from an injectable uuid source."""
    if kind not in KIND_SCHEMAS and kind != "bundle":
        raise ValueError(f"unknown object kind {kind!r}")
    source = uuid_source if uuid_source is not None else uuid.uuid4
    return f"{kind}--{source()}"


def seeded_uuid_source(seed: int) -> Callable[[], uuid.UUID]:
    """Deterministic uuid-v4 generator for reproducible ids in tests."""
    import random

    rng = random.Random(seed)

    def source() -> uuid.UUID:
        return uuid.UUID(int=rng.getrandbits(128), version=4)

    return source


# Fixed namespace for content-derived ids; never change or bundles stop
# reproducing byte-identically.
_CONTENT_NAMESPACE = uuid.UUID("b0e27a94-7f3e-4f5a-9df2-2e30c4a7c2bd")


def content_id(kind: str, content: str) -> str:
    """Name-based (uuid-v5) identifier derived from serialized content."""
    return f"{kind}--{uuid.uuid5(_CONTENT_NAMESPACE, f'{kind}:{content}')}"


# ---------------------------------------------------------------------------
# Objects and bundles
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=True)
class AitiObject:
    kind: str
    id: str
    created: datetime
    modified: Optional[datetime] = None
    properties: dict = field(default_factory=dict)
    custom_properties: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in KIND_SCHEMAS:
            raise ValueError(f"unknown object kind {self.kind!r}")

    def prop(self, name: str, default=None):
        return self.properties.get(name, default)

    @property
    def version(self) -> datetime:
        """The object's modified-or-created timestamp."""
        return self.modified if self.modified is not None else self.created


@dataclass(frozen=True, eq=True)
class Bundle:
    id: str
    objects: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "objects", tuple(self.objects))


class AitiParseError(ValueError):
    """A document could not be mapped onto the object model."""

    def __init__(self, code: str, path: str, message: str):
        super().__init__(f"{path}: {message}")
        self.code = code
        self.path = path
        self.message = message


def _compat_type_to_category(type_text: str) -> str:
    category = type_text[len(_COMPAT_ATTACK_PREFIX) :]
    return category.strip().lower().replace(" ", "-")


def _category_to_compat_type(category: str) -> str:
    words = [w.capitalize() for w in category.split("-")]
    return _COMPAT_ATTACK_PREFIX + " ".join(words)


def _coerce_value(spec: FieldSpec, value, path: str):
    vk = spec.value_kind
    if vk in (TEXT, REF):
        if not isinstance(value, str):
            raise AitiParseError("field-type", path, f"{spec.name} must be a string")
        return value
    if vk in (TEXT_LIST, REF_LIST):
        if not isinstance(value, list) or not all(isinstance(v, str) for v in value):
            raise AitiParseError("field-type", path, f"{spec.name} must be a list of strings")
        return list(value)
    if vk == TIMESTAMP:
        try:
            return parse_timestamp(value)
        except ValueError as exc:
            raise AitiParseError("field-type", path, str(exc)) from exc
    if vk == COUNT:
        if isinstance(value, bool) or not isinstance(value, int):
            raise AitiParseError("field-type", path, f"{spec.name} must be an integer")
        return value
    raise AssertionError(f"unhandled value kind {vk}")


def object_from_dict(doc: dict, mode: str = "canonical", path: str = "") -> AitiObject:
    """Map one JSON object onto the model; `path` prefixes error locators."""
    if mode not in MODES:
        raise ValueError(f"mode must be one of {MODES}")
    if not isinstance(doc, dict):
        raise AitiParseError("not-an-object", path or "/", "expected a JSON object")

    for required in ("type", "id", "created"):
        if required not in doc:
            raise AitiParseError("required-field", f"{path}/{required}", f"missing {required}")

    raw_type = doc["type"]
    if not isinstance(raw_type, str):
        raise AitiParseError("field-type", f"{path}/type", "type must be a string")

    compat_category = None
    if mode == "paper-compat" and raw_type.startswith(_COMPAT_ATTACK_PREFIX):
        kind = "ai-attack"
        compat_category = _compat_type_to_category(raw_type)
    elif raw_type in KIND_SCHEMAS:
        kind = raw_type
    else:
        raise AitiParseError("unknown-type", f"{path}/type", f"unknown object type {raw_type!r}")

    identifier = doc["id"]
    if not is_valid_identifier(identifier):
        raise AitiParseError("id-format", f"{path}/id", "id must be nonempty printable text")

    try:
        created = parse_timestamp(doc["created"])
    except ValueError as exc:
        raise AitiParseError("field-type", f"{path}/created", str(exc)) from exc
    modified = None
    if "modified" in doc:
        try:
            modified = parse_timestamp(doc["modified"])
        except ValueError as exc:
            raise AitiParseError("field-type", f"{path}/modified", str(exc)) from exc

    schema = KIND_SCHEMAS[kind]
    by_name = {spec.name: spec for spec in schema}
    properties = {}
    custom = {}
    if compat_category is not None:
        properties["attack_category"] = compat_category
    for key, value in doc.items():
        if key in _HEAD_KEYS:
            continue
        name = key
        if mode == "paper-compat" and kind == "ai-attack" and key == _COMPAT_PATTERN_KEY:
            name = "ai_attack_pattern"
        spec = by_name.get(name)
        if spec is None:
            custom[key] = value
        else:
            properties[name] = _coerce_value(spec, value, f"{path}/{key}")
    return AitiObject(
        kind=kind,
        id=identifier,
        created=created,
        modified=modified,
        properties=properties,
        custom_properties=custom,
    )


def parse_object(text, mode: str = "canonical") -> AitiObject:
    """Parse a JSON document (text or bytes) into an AitiObject."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise AitiParseError("malformed-json", "/", f"malformed JSON: {exc}") from exc
    return object_from_dict(doc, mode)


def object_to_dict(obj: AitiObject, mode: str = "canonical") -> dict:
    """Wire dict with deterministic key order: schema order, then customs."""
    if mode not in MODES:
        raise ValueError(f"mode must be one of {MODES}")
    compat = mode == "paper-compat"
    compat_attack = compat and obj.kind == "ai-attack"

    if compat_attack:
        type_text = _category_to_compat_type(str(obj.prop("attack_category", "")))
    else:
        type_text = obj.kind
    doc = {"type": type_text, "id": obj.id, "created": format_timestamp(obj.created, compat)}
    if obj.modified is not None:
        doc["modified"] = format_timestamp(obj.modified, compat)

    for spec in KIND_SCHEMAS[obj.kind]:
        if spec.name not in obj.properties:
            continue
        if compat_attack and spec.name == "attack_category":
            continue  # folded into the type spelling
        value = obj.properties[spec.name]
        if spec.value_kind == TIMESTAMP:
            value = format_timestamp(value, compat)
        key = spec.name
        if compat_attack and spec.name == "ai_attack_pattern":
            key = _COMPAT_PATTERN_KEY
        doc[key] = value
    for key in sorted(obj.custom_properties):
        doc[key] = obj.custom_properties[key]
    return doc


def serialize_object(obj: AitiObject, mode: str = "canonical") -> str:
    """Single-line JSON with the deterministic key order of object_to_dict."""
    return json.dumps(object_to_dict(obj, mode), ensure_ascii=False, separators=(", ", ": "))


def bundle_to_dict(bundle: Bundle, mode: str = "canonical") -> dict:
    return {
        "type": "bundle",
        "id": bundle.id,
        "objects": [object_to_dict(obj, mode) for obj in bundle.objects],
    }


def serialize_bundle(bundle: Bundle, mode: str = "canonical") -> str:
    return json.dumps(bundle_to_dict(bundle, mode), ensure_ascii=False, indent=2) + "\n"


def bundle_from_dict(doc: dict, mode: str = "canonical") -> Bundle:
    if not isinstance(doc, dict):
        raise AitiParseError("not-an-object", "/", "expected a JSON object")
    if "id" not in doc:
        raise AitiParseError("required-field", "/id", "missing id")
    objects = doc.get("objects", [])
    if not isinstance(objects, list):
        raise AitiParseError("field-type", "/objects", "objects must be a list")
    parsed = tuple(
        object_from_dict(item, mode, path=f"/objects/{i}") for i, item in enumerate(objects)
    )
    return Bundle(id=doc["id"], objects=parsed)


def parse_bundle(text, mode: str = "canonical") -> Bundle:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise AitiParseError("malformed-json", "/", f"malformed JSON: {exc}") from exc
    return bundle_from_dict(doc, mode)
