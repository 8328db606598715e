"""Encode a VulnerabilityReport into a threat-intelligence bundle.

The core output is one AiAttack object describing the measured attack; options
add an AiAttackPattern with a "uses" relationship, a Sighting carrying the
sample count, and an Identity for the producing party.

Passthrough keys on the report's hyperparameter map are copied verbatim when
present: ``sophistication``, ``resource_level``, ``primary_motivation``, and
``task`` (a qualifier such as "object recognition" for the description
sentence; non-image models simply read "AI model").
"""

import json
from dataclasses import dataclass
from datetime import datetime
from typing import Callable, Optional

from aiti.objects import AitiObject, Bundle, content_id, new_id
from aiti.redteam.attack import VulnerabilityReport, report_to_dict
from aiti.timestamps import utc_now

ID_STRATEGIES = ("canonical-random", "deterministic-from-content", "verbatim")

# Hyperparameter keys that configure the attack run rather than tune the
# attack itself; everything else counts as an attack knob.
_NON_KNOB_KEYS = frozenset(
    {"norm", "targeted", "clip_range", "sophistication", "resource_level",
     "primary_motivation", "task"}
)


@dataclass(frozen=True)
class EncoderOptions:
    id_strategy: str = "canonical-random"
    verbatim_id: Optional[str] = None
    clock: Optional[Callable[[], datetime]] = None
    emit_pattern_object: bool = False
    emit_sighting: bool = False
    producer_identity: Optional[str] = None

    def __post_init__(self):
        if self.id_strategy not in ID_STRATEGIES:
            raise ValueError(f"id_strategy must be one of {ID_STRATEGIES}")
        if self.id_strategy == "verbatim" and not self.verbatim_id:
            raise ValueError("verbatim id strategy requires a nonempty id")


def _format_number(value) -> str:
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _default_sophistication(hyper: dict) -> str:
    knobs = {k for k in hyper if k not in _NON_KNOB_KEYS}
    return "easy" if knobs == {"epsilon"} else "unknown"


def _describe(report: VulnerabilityReport) -> str:
    task = report.hyperparameters.get("task")
    qualifier = f"{task} " if task else ""
    return (
        f"An {report.attack_name} attack is possible against an {qualifier}AI model "
        f"trained using the {report.dataset_name} dataset based on the "
        f"{report.model_name} architecture."
    )


def encode(report: VulnerabilityReport, opts: EncoderOptions) -> Bundle:
    """Build the bundle for one report.

    Deterministic whenever the id strategy is not canonical-random and the
    clock is fixed; the deterministic-from-content strategy derives every id
    from the report's canonical serialization.
    """
    clock = opts.clock if opts.clock is not None else utc_now
    created = clock()
    report_key = json.dumps(report_to_dict(report), sort_keys=True, separators=(",", ":"))

    def make_id(kind: str, role: str) -> str:
        if opts.id_strategy == "canonical-random":
            return new_id(kind)
        return content_id(kind, f"{role}:{report_key}")

    hyper = report.hyperparameters
    epsilon = hyper.get("epsilon")
    pattern_text = f"{report.attack_name} attack, hyperparameter: epsilon = {_format_number(epsilon)}"

    attack_id = opts.verbatim_id if opts.id_strategy == "verbatim" else make_id("ai-attack", "attack")
    attack = AitiObject(
        kind="ai-attack",
        id=attack_id,
        created=created,
        properties={
            "attack_category": report.attack_category,
            "ai_attack_pattern": pattern_text,
            "description": _describe(report),
            "sophistication": hyper.get("sophistication", _default_sophistication(hyper)),
            "resource_level": hyper.get("resource_level", "individual"),
            "primary_motivation": hyper.get("primary_motivation", "unknown"),
        },
    )

    objects = [attack]
    if opts.emit_pattern_object:
        pattern = AitiObject(
            kind="ai-attack-pattern",
            id=make_id("ai-attack-pattern", "pattern"),
            created=created,
            properties={
                "name": report.attack_name,
                "description": (
                    f"TTP for mounting the {report.attack_name} attack against the "
                    f"{report.model_name} architecture."
                ),
                "procedure": pattern_text,
            },
        )
        uses = AitiObject(
            kind="relationship",
            id=make_id("relationship", "uses"),
            created=created,
            properties={
                "relationship_type": "uses",
                "source_ref": attack.id,
                "target_ref": pattern.id,
            },
        )
        objects += [pattern, uses]
    if opts.emit_sighting:
        objects.append(
            AitiObject(
                kind="sighting",
                id=make_id("sighting", "sighting"),
                created=created,
                properties={"sighting_of_ref": attack.id, "count": report.sample_count},
            )
        )
    if opts.producer_identity:
        objects.append(
            AitiObject(
                kind="identity",
                id=make_id("identity", "producer"),
                created=created,
                properties={"name": opts.producer_identity},
            )
        )

    bundle_id = make_id("bundle", "bundle") if opts.id_strategy != "canonical-random" else new_id("bundle")
    return Bundle(id=bundle_id, objects=tuple(objects))
