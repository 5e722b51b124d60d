"""Domain types of a layered metro network and their structural construction.

A Model is assembled once by build_model from loose parts and is immutable afterwards.
Every collection in a Model is a dict keyed by id and ordered by id.
"""
import dataclasses
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, List, Optional, Set, Tuple
import logging
import networkx as nx
from metro_energy.errors import MetroModelError, ModelBuildError, Violation
from metro_energy.engine import regex

Regex = regex.Regex()


class LayerKind(str, Enum):
    TRANSMISSION_MEDIA = "transmission-media"
    PATH = "path"


class SpaceClass(str, Enum):
    CABINET = "cabinet"
    PEDESTAL = "pedestal"
    VAULT = "vault"
    SERVICE_ROOM = "service-room"
    CENTRAL_OFFICE = "central-office"
    HEADEND = "headend"
    CUSTOMER_PREMISES = "customer-premises"
    STREET_NODE = "street-node"
    OTHER = "other"


class FunctionalGroup(str, Enum):
    NT1 = "NT1"
    NT2 = "NT2"
    AF = "AF"
    RG = "RG"
    TE = "TE"
    ONU = "ONU"
    OLT = "OLT"
    MSAN = "MSAN"
    DSLAM = "DSLAM"
    CM = "CM"
    CMTS = "CMTS"
    RU = "RU"
    DU = "DU"
    CSR = "CSR"
    OM_OD = "OM-OD"
    POWER_SPLITTER = "power-splitter"
    P_ROUTER = "P-router"
    PE_ROUTER = "PE-router"
    CE_ROUTER = "CE-router"
    OPTICAL_AMPLIFIER = "optical-amplifier"
    ETHERNET_SWITCH = "ethernet-switch"
    OTHER = "other"


class RPKind(str, Enum):
    RPI_N = "RPI-N"
    RPI_S = "RPI-S"
    IRDI = "IrDI"
    IADI = "IaDI"
    ACCESS_POINT = "AccessPoint"


class Accessibility(str, Enum):
    EXTERNAL = "external"
    SUBSUMED = "subsumed"


DESIGNATORS = ("S", "T", "U", "U1", "PAI", "DI", "V", "W", "R-S", "CMCI", "A-ephemeral", "UNI-legacy")
SEGMENT_NAMES = ("customer", "access", "aggregation", "metro-core", "fronthaul", "midhaul", "backhaul")
LABEL = r"[A-Za-z0-9 ._-]+"
DESIGNATOR_PATTERN = r"(?P<fixed>{fixed})|custom\((?P<label>{label})\)".format(
    fixed="|".join(d.replace("-", r"\-") for d in DESIGNATORS), label=LABEL
)
SEGMENT_NAME_PATTERN = r"(?P<fixed>{fixed})|other\((?P<label>{label})\)".format(
    fixed="|".join(n.replace("-", r"\-") for n in SEGMENT_NAMES), label=LABEL
)


def is_designator(designator: str) -> bool:
    return Regex.fullmatch(DESIGNATOR_PATTERN, designator, strict=False) is not None


def is_segment_name(name: str) -> bool:
    return Regex.fullmatch(SEGMENT_NAME_PATTERN, name, strict=False) is not None


@dataclass(frozen=True)
class LayerNetwork():
    id: str
    name: str
    kind: LayerKind
    characteristic_info: str
    server_layers: Tuple[str, ...] = ()


@dataclass(frozen=True)
class Site():
    id: str
    name: str
    location_label: str
    space_class: SpaceClass
    has_power: bool
    power_headroom_w: float
    has_ethernet_uplink: bool
    space_rank: Optional[int] = None  # explicit declaration, overrides the space class ordering


@dataclass(frozen=True)
class NetworkElement():
    id: str
    name: str
    site_id: str
    operator_id: str
    functional_groups: Tuple[FunctionalGroup, ...]
    powered: bool
    power_draw_w: float
    present_at_layers: Tuple[str, ...]
    transparent_at_layers: Tuple[str, ...] = ()


@dataclass(frozen=True)
class Link():
    id: str
    layer_id: str
    endpoint_a: str
    endpoint_b: str
    server_trail: Tuple[str, ...] = ()
    server_layer_id: Optional[str] = None


@dataclass(frozen=True)
class ReferencePoint():
    """Typed demarcation point.

    For a subsumed RP, upstream_element and downstream_element name functional groups of the
    subsuming element instead of element ids.
    """
    id: str
    designator: str
    kind: RPKind
    layer_id: str
    upstream_element: str
    downstream_element: str
    accessibility: Accessibility = Accessibility.EXTERNAL
    subsuming_element: Optional[str] = None

    @property
    def subsumed(self) -> bool:
        return self.accessibility == Accessibility.SUBSUMED


@dataclass(frozen=True)
class Segment():
    id: str
    name: str
    operator_id: str
    bounding_rp_ids: Tuple[str, ...]


@dataclass(frozen=True)
class Metadata():
    name: str = ""
    author: str = ""
    date: str = ""
    notes: Tuple[str, ...] = ()


@dataclass
class ModelParts():
    """Loose, unchecked collections handed to build_model."""
    layers: List[LayerNetwork] = field(default_factory=list)
    sites: List[Site] = field(default_factory=list)
    elements: List[NetworkElement] = field(default_factory=list)
    links: List[Link] = field(default_factory=list)
    reference_points: List[ReferencePoint] = field(default_factory=list)
    segments: List[Segment] = field(default_factory=list)
    metadata: Metadata = field(default_factory=Metadata)


@dataclass(frozen=True)
class Model():
    layers: Dict[str, LayerNetwork]
    sites: Dict[str, Site]
    elements: Dict[str, NetworkElement]
    links: Dict[str, Link]
    reference_points: Dict[str, ReferencePoint]
    segments: Dict[str, Segment]
    metadata: Metadata

    def is_media(self, layer_id: str) -> bool:
        return self.layers[layer_id].kind == LayerKind.TRANSMISSION_MEDIA

    def powered_elements(self) -> List[str]:
        return [element_id for element_id, element in self.elements.items() if element.powered]

    def elements_at_site(self, site_id: str) -> List[NetworkElement]:
        return [element for element in self.elements.values() if element.site_id == site_id]

    def links_at_layer(self, layer_id: str) -> List[Link]:
        return [link for link in self.links.values() if link.layer_id == layer_id]

    def segment_layer(self, segment_id: str) -> str:
        """Layer shared by the bounding RPs of a segment (guaranteed unique by build_model)."""
        first_rp = self.segments[segment_id].bounding_rp_ids[0]
        return self.reference_points[first_rp].layer_id


def _as_group(group: str):
    return FunctionalGroup(group) if group in FunctionalGroup._value2member_map_ else group


def _normalize(parts: ModelParts) -> ModelParts:
    """Sorts the set-like fields so that equal parts given in any order yield equal Models."""
    return ModelParts(
        layers=[dataclasses.replace(layer, server_layers=tuple(sorted(set(layer.server_layers)))) for layer in parts.layers],
        sites=list(parts.sites),
        elements=[
            dataclasses.replace(
                element,
                functional_groups=tuple(sorted(set(_as_group(g) for g in element.functional_groups))),
                present_at_layers=tuple(sorted(set(element.present_at_layers))),
                transparent_at_layers=tuple(sorted(set(element.transparent_at_layers)))
            )
            for element in parts.elements
        ],
        links=[dataclasses.replace(link, server_trail=tuple(link.server_trail)) for link in parts.links],
        reference_points=list(parts.reference_points),
        segments=[dataclasses.replace(segment, bounding_rp_ids=tuple(sorted(set(segment.bounding_rp_ids)))) for segment in parts.segments],
        metadata=dataclasses.replace(parts.metadata, notes=tuple(parts.metadata.notes))
    )


class _StructureChecker():
    """Collects every structural violation of a set of parts. Never raises on malformed input."""

    def __init__(self, parts: ModelParts) -> None:
        self.parts = parts
        self.violations: List[Violation] = []
        self.layers = self._index("layers", parts.layers)
        self.sites = self._index("sites", parts.sites)
        self.elements = self._index("elements", parts.elements)
        self.links = self._index("links", parts.links)
        self.reference_points = self._index("reference_points", parts.reference_points)
        self.segments = self._index("segments", parts.segments)
        self.resolved_server_layers: Dict[str, str] = {}

    def _add(self, code: str, subject: str, detail: str = "") -> None:
        self.violations.append(Violation(code, subject, detail))

    def _index(self, collection: str, items: list) -> dict:
        index = {}
        for item in items:
            if item.id in index:
                self._add("E-DUP-ID", item.id, f"duplicated in {collection}")
            else:
                index[item.id] = item
        return index

    def _dangling(self, ref: Optional[str], table: dict, path: str) -> bool:
        """Returns True (and records E-DANGLING-REF) when ref does not resolve in table."""
        if ref in table:
            return False
        self._add("E-DANGLING-REF", str(ref), path)
        return True

    def run(self) -> List[Violation]:
        dag = self._check_layers()
        self._check_sites()
        self._check_elements(dag)
        self._check_links()
        self._check_reference_points()
        self._check_segments()
        return sorted(set(self.violations))

    def _check_layers(self) -> nx.DiGraph:
        if not any(layer.kind == LayerKind.TRANSMISSION_MEDIA for layer in self.layers.values()):
            self._add("E-NO-MEDIA-LAYER", "", "at least one transmission-media layer is required")
        dag = nx.DiGraph()
        dag.add_nodes_from(self.layers)
        for layer in self.layers.values():
            is_media = layer.kind == LayerKind.TRANSMISSION_MEDIA
            if is_media and layer.server_layers:
                self._add("E-LAYER-SERVERS", layer.id, "a transmission-media layer has no server layers")
            if not is_media and not layer.server_layers:
                self._add("E-LAYER-SERVERS", layer.id, "a path layer needs at least one server layer")
            for server in layer.server_layers:
                if not self._dangling(server, self.layers, f"layers[{layer.id}].server_layers"):
                    dag.add_edge(layer.id, server)  # client -> server
        for component in nx.strongly_connected_components(dag):
            if len(component) > 1 or any(dag.has_edge(n, n) for n in component):
                self._add("E-LAYER-CYCLE", ",".join(sorted(component)), "client/server relation must be acyclic")
        return dag

    def _check_sites(self) -> None:
        for site in self.sites.values():
            if not math.isfinite(site.power_headroom_w) or site.power_headroom_w < 0:
                self._add("E-BAD-SITE", site.id, "power_headroom_w must be a finite non-negative number")
            if not site.has_power and site.power_headroom_w != 0:
                self._add("E-BAD-SITE", site.id, "a site without power has no headroom")
            if site.space_rank is not None and site.space_rank < 0:
                self._add("E-BAD-SITE", site.id, "space_rank must be non-negative")

    def _check_elements(self, dag: nx.DiGraph) -> None:
        acyclic = nx.is_directed_acyclic_graph(dag)
        for element in self.elements.values():
            self._dangling(element.site_id, self.sites, f"elements[{element.id}].site_id")
            for layer_id in element.present_at_layers:
                self._dangling(layer_id, self.layers, f"elements[{element.id}].present_at_layers")
            for layer_id in element.transparent_at_layers:
                self._dangling(layer_id, self.layers, f"elements[{element.id}].transparent_at_layers")
            if not math.isfinite(element.power_draw_w) or element.power_draw_w < 0:
                self._add("E-BAD-ELEMENT", element.id, "power_draw_w must be a finite non-negative number")
            if not element.powered and element.power_draw_w != 0:
                self._add("E-BAD-ELEMENT", element.id, "an unpowered element draws 0 W")
            unknown = [g for g in element.functional_groups if not isinstance(g, FunctionalGroup)]
            if unknown:
                self._add("E-BAD-ELEMENT", element.id, f"unknown functional groups {unknown}")
            if set(element.present_at_layers) & set(element.transparent_at_layers):
                self._add("E-BAD-ELEMENT", element.id, "present_at_layers and transparent_at_layers overlap")
            if not acyclic:
                continue
            for layer_id in element.transparent_at_layers:
                if layer_id not in dag:
                    continue
                servers = nx.descendants(dag, layer_id)
                if not servers & set(element.present_at_layers):
                    self._add("E-BAD-ELEMENT", element.id, f"transparent at {layer_id} without being present at one of its server layers")

    def _linked(self, layer_id: str, a: str, b: str) -> bool:
        return any(
            link.layer_id == layer_id and {link.endpoint_a, link.endpoint_b} == {a, b}
            for link in self.links.values()
        )

    def _check_links(self) -> None:
        for link in self.links.values():
            if self._dangling(link.layer_id, self.layers, f"links[{link.id}].layer_id"):
                continue
            layer = self.layers[link.layer_id]
            endpoints_ok = True
            for attribute in ("endpoint_a", "endpoint_b"):
                endpoint = getattr(link, attribute)
                if self._dangling(endpoint, self.elements, f"links[{link.id}].{attribute}"):
                    endpoints_ok = False
                elif link.layer_id not in self.elements[endpoint].present_at_layers:
                    self._add("E-LINK-ENDPOINT", link.id, f"{endpoint} is not present at {link.layer_id}")
            if link.endpoint_a == link.endpoint_b:
                self._add("E-LINK-ENDPOINT", link.id, "a link joins two distinct elements")
            if layer.kind == LayerKind.TRANSMISSION_MEDIA:
                if link.server_trail or link.server_layer_id is not None:
                    self._add("E-SERVER-TRAIL", link.id, "a transmission-media link has no server trail")
                continue
            if not endpoints_ok:
                continue
            self._check_server_trail(link, layer)

    def _check_server_trail(self, link: Link, layer: LayerNetwork) -> None:
        server_layer = link.server_layer_id
        if server_layer is None:
            if len(layer.server_layers) != 1:
                self._add("E-SERVER-TRAIL", link.id, "server_layer_id is required when the layer has several server layers")
                return
            server_layer = layer.server_layers[0]
        elif server_layer not in layer.server_layers:
            self._add("E-SERVER-TRAIL", link.id, f"{server_layer} is not a server layer of {layer.id}")
            return
        if server_layer not in self.layers:
            return
        self.resolved_server_layers[link.id] = server_layer
        trail = list(link.server_trail)
        if len(trail) < 2 or trail[0] != link.endpoint_a or trail[-1] != link.endpoint_b:
            self._add("E-SERVER-TRAIL", link.id, "a server trail runs from endpoint_a to endpoint_b")
            return
        for position, element_id in enumerate(trail):
            if self._dangling(element_id, self.elements, f"links[{link.id}].server_trail[{position}]"):
                return
            element = self.elements[element_id]
            if server_layer not in element.present_at_layers + element.transparent_at_layers:
                self._add("E-SERVER-TRAIL", link.id, f"{element_id} is not present at server layer {server_layer}")
        for a, b in zip(trail, trail[1:]):
            if not self._linked(server_layer, a, b):
                self._add("E-SERVER-TRAIL", link.id, f"no {server_layer} link joins {a} and {b}")

    def _check_reference_points(self) -> None:
        for rp in self.reference_points.values():
            if not is_designator(rp.designator):
                self._add("E-BAD-DESIGNATOR", rp.id, f"unknown designator '{rp.designator}'")
            if self._dangling(rp.layer_id, self.layers, f"reference_points[{rp.id}].layer_id"):
                continue
            if rp.subsuming_element is not None:
                self._dangling(rp.subsuming_element, self.elements, f"reference_points[{rp.id}].subsuming_element")
            if rp.accessibility == Accessibility.SUBSUMED:
                # Endpoints name functional groups; their consistency with the subsuming element is a placement rule
                for attribute in ("upstream_element", "downstream_element"):
                    value = getattr(rp, attribute)
                    if value not in FunctionalGroup._value2member_map_:
                        self._add("E-DANGLING-REF", value, f"reference_points[{rp.id}].{attribute}")
                if rp.kind == RPKind.RPI_N:
                    self._add("E-RPIN-NOT-ADJACENT", rp.id, "a subsumed reference point has no physical adjacency")
                continue
            missing = False
            for attribute in ("upstream_element", "downstream_element"):
                missing |= self._dangling(getattr(rp, attribute), self.elements, f"reference_points[{rp.id}].{attribute}")
            if missing:
                continue
            if rp.kind == RPKind.ACCESS_POINT:
                node = self.elements[rp.upstream_element]
                if rp.upstream_element != rp.downstream_element:
                    self._add("E-ACCESS-POINT", rp.id, "an access point sits at a single node")
                elif rp.layer_id not in node.present_at_layers or len(node.present_at_layers) < 2:
                    self._add("E-ACCESS-POINT", rp.id, f"{node.id} must join {rp.layer_id} to another layer")
            elif rp.kind == RPKind.RPI_N:
                media = self.layers[rp.layer_id].kind == LayerKind.TRANSMISSION_MEDIA
                if not media or not self._linked(rp.layer_id, rp.upstream_element, rp.downstream_element):
                    self._add("E-RPIN-NOT-ADJACENT", rp.id, "no transmission-media link joins the endpoints")

    def _check_segments(self) -> None:
        for segment in self.segments.values():
            if not is_segment_name(segment.name):
                self._add("E-BAD-SEGMENT", segment.id, f"unknown segment name '{segment.name}'")
            if not segment.bounding_rp_ids:
                self._add("E-BAD-SEGMENT", segment.id, "a segment needs at least one bounding reference point")
                continue
            layers = set()
            for rp_id in segment.bounding_rp_ids:
                if not self._dangling(rp_id, self.reference_points, f"segments[{segment.id}].bounding_rp_ids"):
                    layers.add(self.reference_points[rp_id].layer_id)
            if len(layers) > 1:
                self._add("E-BAD-SEGMENT", segment.id, f"bounding reference points span layers {sorted(layers)}")


def structural_violations(parts: ModelParts) -> List[Violation]:
    """Lists every structural violation of the parts, sorted by (code, subject).

    Args:
        parts (ModelParts): Unchecked collections

    Returns:
        List[Violation]: Empty iff build_model would succeed
    """
    return _StructureChecker(_normalize(parts)).run()


def build_model(parts: ModelParts) -> Model:
    """Validates the structural invariants of the parts and freezes them into a Model.

    Args:
        parts (ModelParts): Unchecked collections

    Raises:
        ModelBuildError: Carries the full, sorted list of structural violations

    Returns:
        Model: Immutable model with collections keyed and ordered by id
    """
    normalized = _normalize(parts)
    checker = _StructureChecker(normalized)
    violations = checker.run()
    if violations:
        logging.debug(f"[DEBUG] build_model rejected the parts with {len(violations)} violation(s)")
        raise ModelBuildError(violations)
    links = [
        dataclasses.replace(link, server_layer_id=checker.resolved_server_layers.get(link.id, link.server_layer_id))
        for link in normalized.links
    ]

    def by_id(items: list) -> dict:
        return {item.id: item for item in sorted(items, key=lambda item: item.id)}

    return Model(
        layers=by_id(normalized.layers),
        sites=by_id(normalized.sites),
        elements=by_id(normalized.elements),
        links=by_id(links),
        reference_points=by_id(normalized.reference_points),
        segments=by_id(normalized.segments),
        metadata=normalized.metadata
    )


def layer_dag(model: Model) -> nx.DiGraph:
    """Server -> client graph of the layer networks."""
    dag = nx.DiGraph()
    dag.add_nodes_from(model.layers)
    for layer in model.layers.values():
        for server in layer.server_layers:
            dag.add_edge(server, layer.id)
    return dag


def layer_order(model: Model) -> List[str]:
    """Bottom-up order of the layer networks.

    Args:
        model (Model): Valid model

    Returns:
        List[str]: Topological order, transmission-media layers first, ties broken by id
    """
    return list(nx.lexicographical_topological_sort(
        layer_dag(model),
        key=lambda layer_id: (not model.is_media(layer_id), layer_id)
    ))


def server_trail(model: Model, link_id: str) -> List[str]:
    """Declared server trail of a path-layer link, from endpoint_a to endpoint_b.

    Args:
        model (Model): Valid model
        link_id (str): Link to look up

    Raises:
        MetroModelError: E-NO-SUCH-LINK or E-MEDIA-HAS-NO-SERVER

    Returns:
        List[str]: Element ids at the server layer, transparent elements included
    """
    if link_id not in model.links:
        raise MetroModelError("E-NO-SUCH-LINK", link_id, "unknown link")
    link = model.links[link_id]
    if model.is_media(link.layer_id):
        raise MetroModelError("E-MEDIA-HAS-NO-SERVER", link_id, f"{link.layer_id} is a transmission-media layer")
    return list(link.server_trail)


def rp_sides(model: Model, rp: ReferencePoint) -> Tuple[Set[str], Set[str]]:
    """Functional groups found on the upstream and downstream side of a reference point.

    Args:
        model (Model): Valid model
        rp (ReferencePoint): Reference point of the model

    Returns:
        Tuple[Set[str], Set[str]]: (upstream groups, downstream groups)
    """
    if rp.subsumed:
        return {rp.upstream_element}, {rp.downstream_element}
    upstream = model.elements[rp.upstream_element].functional_groups
    downstream = model.elements[rp.downstream_element].functional_groups
    return {g.value for g in upstream}, {g.value for g in downstream}
