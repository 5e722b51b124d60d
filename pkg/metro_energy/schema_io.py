import json
import math
import os
from dataclasses import dataclass
from typing import Any, Dict, Iterable, List
import logging
import jsonschema
from metro_energy.errors import DocumentParseError, MetroModelError, Violation
from metro_energy.model import (
    Accessibility, FunctionalGroup, LayerKind, LayerNetwork, Link, Metadata, Model, ModelParts,
    NetworkElement, ReferencePoint, RPKind, Segment, Site, SpaceClass, build_model
)

SCHEMA_VERSION = "1"
MODEL_EXTENSION = ".metromodel.json"
COLLECTIONS = ("layers", "sites", "elements", "links", "reference_points", "segments")

path_schema = os.path.join(os.path.dirname(__file__), "schemas", "metromodel.schema.json")
with open(path_schema) as f:
    SCHEMA = json.load(f)
VALIDATOR = jsonschema.Draft7Validator(SCHEMA)


@dataclass(frozen=True)
class ModelDocument():
    """Shape-checked model document. Semantics are checked by build_model."""
    schema_version: str
    parts: ModelParts

    def to_model(self) -> Model:
        return document_to_model(self)


def _format_path(path: Iterable[Any]) -> str:
    """Renders a jsonschema path as elements[3].power_draw_w"""
    text = ""
    for step in path:
        if isinstance(step, int):
            text += f"[{step}]"
        else:
            text += f".{step}" if text else str(step)
    return text


def _join(path: str, key: str) -> str:
    return f"{path}.{key}" if path else key


def _shape_errors(document: dict) -> List[Violation]:
    """Translates jsonschema errors into E-MISSING-FIELD / E-UNKNOWN-KEY / E-BAD-VALUE violations."""
    errors = []
    for error in VALIDATOR.iter_errors(document):
        path = _format_path(error.absolute_path)
        if error.validator == "required":
            for key in error.validator_value:
                if isinstance(error.instance, dict) and key not in error.instance:
                    errors.append(Violation("E-MISSING-FIELD", _join(path, key), "required field is missing"))
        elif error.validator == "additionalProperties":
            known = error.schema.get("properties", {})
            for key in sorted(error.instance):
                if key not in known:
                    errors.append(Violation("E-UNKNOWN-KEY", _join(path, key), "not part of the closed schema"))
        else:
            errors.append(Violation("E-BAD-VALUE", path, error.message))
    return errors


def parts_from_document(document: dict) -> ModelParts:
    """Turns a shape-checked JSON document into typed, unchecked ModelParts.

    Args:
        document (dict): Document that passed the closed schema

    Returns:
        ModelParts: Input for build_model
    """
    return ModelParts(
        layers=[
            LayerNetwork(
                id=d["id"],
                name=d["name"],
                kind=LayerKind(d["kind"]),
                characteristic_info=d["characteristic_info"],
                server_layers=tuple(d["server_layers"])
            )
            for d in document["layers"]
        ],
        sites=[
            Site(
                id=d["id"],
                name=d["name"],
                location_label=d["location_label"],
                space_class=SpaceClass(d["space_class"]),
                has_power=d["has_power"],
                power_headroom_w=d["power_headroom_w"],
                has_ethernet_uplink=d["has_ethernet_uplink"],
                space_rank=d.get("space_rank")
            )
            for d in document["sites"]
        ],
        elements=[
            NetworkElement(
                id=d["id"],
                name=d["name"],
                site_id=d["site_id"],
                operator_id=d["operator_id"],
                functional_groups=tuple(FunctionalGroup(g) for g in d["functional_groups"]),
                powered=d["powered"],
                power_draw_w=d["power_draw_w"],
                present_at_layers=tuple(d["present_at_layers"]),
                transparent_at_layers=tuple(d.get("transparent_at_layers", []))
            )
            for d in document["elements"]
        ],
        links=[
            Link(
                id=d["id"],
                layer_id=d["layer_id"],
                endpoint_a=d["endpoint_a"],
                endpoint_b=d["endpoint_b"],
                server_trail=tuple(d.get("server_trail", [])),
                server_layer_id=d.get("server_layer_id")
            )
            for d in document["links"]
        ],
        reference_points=[
            ReferencePoint(
                id=d["id"],
                designator=d["designator"],
                kind=RPKind(d["kind"]),
                layer_id=d["layer_id"],
                upstream_element=d["upstream_element"],
                downstream_element=d["downstream_element"],
                accessibility=Accessibility(d["accessibility"]),
                subsuming_element=d.get("subsuming_element")
            )
            for d in document["reference_points"]
        ],
        segments=[
            Segment(
                id=d["id"],
                name=d["name"],
                operator_id=d["operator_id"],
                bounding_rp_ids=tuple(d["bounding_rp_ids"])
            )
            for d in document["segments"]
        ],
        metadata=Metadata(
            name=document["metadata"]["name"],
            author=document["metadata"]["author"],
            date=document["metadata"]["date"],
            notes=tuple(document["metadata"].get("notes", []))
        )
    )


def document_from_dict(document: Any) -> ModelDocument:
    """Checks the shape of an already decoded document.

    Args:
        document (Any): Decoded JSON value

    Raises:
        DocumentParseError: E-BAD-VERSION, E-MISSING-FIELD, E-UNKNOWN-KEY or E-BAD-VALUE, all of them at once

    Returns:
        ModelDocument: Shape-checked document
    """
    if not isinstance(document, dict):
        raise DocumentParseError([Violation("E-BAD-VALUE", "", "a model document is a JSON object")])
    errors = []
    if document.get("schema_version") != SCHEMA_VERSION:
        found = document.get("schema_version", "<missing>")
        errors.append(Violation("E-BAD-VERSION", "schema_version", f"unsupported schema_version {found!r}, expected {SCHEMA_VERSION!r}"))
    # The version error already covers whatever the schema says about schema_version
    errors += [error for error in _shape_errors(document) if not (errors and error.subject == "schema_version")]
    if errors:
        raise DocumentParseError(errors)
    return ModelDocument(schema_version=SCHEMA_VERSION, parts=parts_from_document(document))


def _reject_constant(token: str) -> None:
    raise ValueError(token)


def _finite_float(token: str) -> float:
    value = float(token)
    if not math.isfinite(value):
        raise ValueError(token)
    return value


def parse_model(text: bytes) -> ModelDocument:
    """Parses model document bytes. Shape only: semantics are checked by build_model.

    Args:
        text (bytes): UTF-8 JSON document

    Raises:
        DocumentParseError: E-SYNTAX(line,col) or every shape error with its document path

    Returns:
        ModelDocument: Shape-checked document
    """
    try:
        decoded = text.decode("utf-8") if isinstance(text, (bytes, bytearray)) else text
        document = json.loads(decoded, parse_constant=_reject_constant, parse_float=_finite_float)
    except UnicodeDecodeError as err:
        raise DocumentParseError([Violation("E-SYNTAX", "1,1", f"not UTF-8: {err.reason}")])
    except json.JSONDecodeError as err:
        raise DocumentParseError([Violation("E-SYNTAX", f"{err.lineno},{err.colno}", err.msg)])
    except ValueError as err:
        raise DocumentParseError([Violation("E-BAD-VALUE", str(err), "not a finite JSON number")])
    return document_from_dict(document)


def _optional_list(values: Iterable[str]) -> List[str]:
    return [str(v) for v in values]


def model_to_document(model: Model) -> Dict[str, Any]:
    """Canonical dict form of a model: fixed key order, collections sorted by id, nothing omitted."""
    return {
        "schema_version": SCHEMA_VERSION,
        "layers": [
            {
                "id": layer.id,
                "name": layer.name,
                "kind": LayerKind(layer.kind).value,
                "characteristic_info": layer.characteristic_info,
                "server_layers": _optional_list(layer.server_layers)
            }
            for layer in model.layers.values()
        ],
        "sites": [
            {
                "id": site.id,
                "name": site.name,
                "location_label": site.location_label,
                "space_class": SpaceClass(site.space_class).value,
                "has_power": site.has_power,
                "power_headroom_w": site.power_headroom_w,
                "has_ethernet_uplink": site.has_ethernet_uplink,
                "space_rank": site.space_rank
            }
            for site in model.sites.values()
        ],
        "elements": [
            {
                "id": element.id,
                "name": element.name,
                "site_id": element.site_id,
                "operator_id": element.operator_id,
                "functional_groups": [FunctionalGroup(g).value for g in element.functional_groups],
                "powered": element.powered,
                "power_draw_w": element.power_draw_w,
                "present_at_layers": _optional_list(element.present_at_layers),
                "transparent_at_layers": _optional_list(element.transparent_at_layers)
            }
            for element in model.elements.values()
        ],
        "links": [
            {
                "id": link.id,
                "layer_id": link.layer_id,
                "endpoint_a": link.endpoint_a,
                "endpoint_b": link.endpoint_b,
                "server_trail": _optional_list(link.server_trail),
                "server_layer_id": link.server_layer_id
            }
            for link in model.links.values()
        ],
        "reference_points": [
            {
                "id": rp.id,
                "designator": rp.designator,
                "kind": RPKind(rp.kind).value,
                "layer_id": rp.layer_id,
                "upstream_element": rp.upstream_element,
                "downstream_element": rp.downstream_element,
                "accessibility": Accessibility(rp.accessibility).value,
                "subsuming_element": rp.subsuming_element
            }
            for rp in model.reference_points.values()
        ],
        "segments": [
            {
                "id": segment.id,
                "name": segment.name,
                "operator_id": segment.operator_id,
                "bounding_rp_ids": _optional_list(segment.bounding_rp_ids)
            }
            for segment in model.segments.values()
        ],
        "metadata": {
            "name": model.metadata.name,
            "author": model.metadata.author,
            "date": model.metadata.date,
            "notes": _optional_list(model.metadata.notes)
        }
    }


def serialize_model(model: Model) -> bytes:
    """Canonical bytes of a model: UTF-8 JSON, 2-space indent, newline-terminated.

    Args:
        model (Model): Valid model

    Returns:
        bytes: Canonical document; byte-identical for models differing only in input order
    """
    return (json.dumps(model_to_document(model), indent=2, ensure_ascii=False, allow_nan=False) + "\n").encode("utf-8")


def document_to_model(document: ModelDocument) -> Model:
    return build_model(document.parts)


def load_model(path: str) -> Model:
    """Reads, parses and builds a model document.

    Args:
        path (str): Path to a .metromodel.json file

    Raises:
        MetroModelError: E-IO when the file cannot be read; parse and build errors are propagated

    Returns:
        Model: Built model
    """
    try:
        with open(path, "rb") as f:
            text = f.read()
    except OSError as err:
        raise MetroModelError("E-IO", path, err.strerror or str(err))
    logging.debug(f"[DEBUG] Parsing model document {path}")
    return parse_model(text).to_model()


def save_model(model: Model, path: str) -> None:
    try:
        with open(path, "wb") as f:
            f.write(serialize_model(model))
    except OSError as err:
        raise MetroModelError("E-IO", path, err.strerror or str(err))
