"""Bundle validation with structured diagnostics.

Problems are returned, never raised.  Errors fail a bundle at the level that
produced them; warnings never fail lenient validation.  The only check whose
severity depends on the level is reference resolution: a dangling ref is an
error under strict validation and a warning under lenient.
"""

from dataclasses import dataclass

from aiti.objects import (
    ATTACK_CATEGORIES,
    KIND_SCHEMAS,
    MOTIVATIONS_SEED,
    PARADIGMS_SEED,
    PERSONAS_SEED,
    RESOURCE_LEVELS_SEED,
    SOPHISTICATION_SEED,
    TEXT_LIST,
    USE_CASES_SEED,
    AitiObject,
    Bundle,
    is_valid_identifier,
)

LEVELS = ("strict", "lenient")

ERROR = "error"
WARNING = "warning"


@dataclass(frozen=True)
class Diagnostic:
    severity: str
    code: str
    path: str
    message: str


def has_errors(diagnostics) -> bool:
    return any(d.severity == ERROR for d in diagnostics)


_OPEN_VOCABS = {
    "sophistication": SOPHISTICATION_SEED,
    "resource_level": RESOURCE_LEVELS_SEED,
    "primary_motivation": MOTIVATIONS_SEED,
    "use_case": USE_CASES_SEED,
}
_OPEN_VOCAB_LISTS = {
    "personas": PERSONAS_SEED,
    "paradigms": PARADIGMS_SEED,
}
_REF_FIELDS = ("source_ref", "target_ref", "sighting_of_ref")


def _check_object(obj: AitiObject, path: str, out: list) -> None:
    if not is_valid_identifier(obj.id):
        out.append(
            Diagnostic(ERROR, "id-format", f"{path}/id", "id must be nonempty printable text")
        )

    for spec in KIND_SCHEMAS[obj.kind]:
        if spec.required and spec.name not in obj.properties:
            out.append(
                Diagnostic(
                    ERROR,
                    "required-field",
                    f"{path}/{spec.name}",
                    f"{obj.kind} requires {spec.name}",
                )
            )
        elif spec.value_kind == TEXT_LIST and obj.properties.get(spec.name) == []:
            out.append(
                Diagnostic(
                    ERROR, "empty-list", f"{path}/{spec.name}", f"{spec.name} must be nonempty"
                )
            )

    if obj.modified is not None and obj.modified < obj.created:
        out.append(
            Diagnostic(
                ERROR, "timestamp-order", f"{path}/modified", "modified precedes created"
            )
        )

    if obj.kind == "ai-attack":
        category = obj.prop("attack_category")
        if category is not None and category not in ATTACK_CATEGORIES:
            out.append(
                Diagnostic(
                    ERROR,
                    "attack-category",
                    f"{path}/attack_category",
                    f"attack_category {category!r} is not one of {', '.join(ATTACK_CATEGORIES)}",
                )
            )

    for name, seed in _OPEN_VOCABS.items():
        value = obj.prop(name)
        if value is not None and value not in seed:
            out.append(
                Diagnostic(
                    WARNING,
                    "open-vocab",
                    f"{path}/{name}",
                    f"{name} {value!r} is outside the seeded vocabulary",
                )
            )
    for name, seed in _OPEN_VOCAB_LISTS.items():
        values = obj.prop(name) or []
        for j, value in enumerate(values):
            if value not in seed:
                out.append(
                    Diagnostic(
                        WARNING,
                        "open-vocab",
                        f"{path}/{name}/{j}",
                        f"{name} entry {value!r} is outside the seeded vocabulary",
                    )
                )

    if obj.kind == "relationship":
        source = obj.prop("source_ref")
        target = obj.prop("target_ref")
        if source is not None and source == target:
            out.append(
                Diagnostic(
                    ERROR,
                    "self-reference",
                    f"{path}/target_ref",
                    "relationship source_ref equals target_ref",
                )
            )

    if obj.kind == "sighting":
        count = obj.prop("count")
        if count is not None and count < 1:
            out.append(
                Diagnostic(ERROR, "count-positive", f"{path}/count", "count must be positive")
            )


def _object_refs(obj: AitiObject):
    for name in _REF_FIELDS:
        value = obj.prop(name)
        if value is not None:
            yield name, value
    for j, ref in enumerate(obj.prop("object_refs") or []):
        yield f"object_refs/{j}", ref


def validate(bundle: Bundle, level: str = "strict") -> list:
    """All diagnostics for a bundle, ordered by (path, code)."""
    if level not in LEVELS:
        raise ValueError(f"level must be one of {LEVELS}")
    out = []
    known_ids = set()
    for i, obj in enumerate(bundle.objects):
        path = f"/objects/{i}"
        if obj.id in known_ids:
            out.append(
                Diagnostic(
                    ERROR, "duplicate-id", f"{path}/id", f"duplicate object id {obj.id!r}"
                )
            )
        known_ids.add(obj.id)
        _check_object(obj, path, out)

    ref_severity = ERROR if level == "strict" else WARNING
    for i, obj in enumerate(bundle.objects):
        for field_name, ref in _object_refs(obj):
            if ref not in known_ids:
                out.append(
                    Diagnostic(
                        ref_severity,
                        "dangling-ref",
                        f"/objects/{i}/{field_name}",
                        f"reference {ref!r} does not resolve within the bundle",
                    )
                )

    out.sort(key=lambda d: (d.path, d.code, d.severity, d.message))
    return out
