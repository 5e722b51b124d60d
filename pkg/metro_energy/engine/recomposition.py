"""Serial recomposition of a layered model and expansion of paths down to the transmission media.

Recomposition walks the layer networks bottom-up. At every layer, each segment claims the part of
the layer graph lying between its bounding reference points, without crossing any reference point,
and the powered elements found there that were not captured at a lower layer are assigned to it.
Path-layer links are laid along their server trails, so the elements they ride over are enclosed
too. Powered elements beyond every segment are reported uncaptured.
"""
from collections import defaultdict
from dataclasses import dataclass, field
from typing import Dict, FrozenSet, Iterable, List, Optional, Set, Tuple
import logging
import networkx as nx
from metro_energy.errors import MetroModelError
from metro_energy.model import Link, Model, ReferencePoint, RPKind, layer_order

# A graph node is an element id plus a half marker. Elements subsuming a cut reference point are
# split into their upstream and downstream halves; every other element stays whole.
WHOLE = ""
UPSTREAM_HALF = "-"
DOWNSTREAM_HALF = "+"
Node = Tuple[str, str]
Component = FrozenSet[Node]


@dataclass(frozen=True)
class CoverageResult():
    """Outcome of serial recomposition.

    Args:
        assignment (Dict[str, str]): powered element id -> segment id
        uncaptured (List[str]): powered element ids no segment encloses, sorted
        rp_trace (Dict[str, List[str]]): segment id -> bounding reference points touching its interior
        straddling (Dict[str, Tuple[str, str, str]]): element id -> (subsumed rp id, upstream segment, downstream segment)
        warnings (List[str]): Analyst-facing findings (ambiguous interiors, overlapping claims)
    """
    assignment: Dict[str, str]
    uncaptured: List[str]
    rp_trace: Dict[str, List[str]]
    straddling: Dict[str, Tuple[str, str, str]] = field(default_factory=dict)
    warnings: List[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "assignment": dict(sorted(self.assignment.items())),
            "uncaptured": list(self.uncaptured),
            "rp_trace": {segment_id: list(rps) for segment_id, rps in sorted(self.rp_trace.items())},
            "straddling": {
                element_id: {"rp_id": rp_id, "upstream_segment": upstream, "downstream_segment": downstream}
                for element_id, (rp_id, upstream, downstream) in sorted(self.straddling.items())
            },
            "warnings": list(self.warnings)
        }


@dataclass(frozen=True)
class PathTrace():
    """A path expanded down to a transmission-media layer.

    Args:
        layer_id (str): Transmission-media layer of the expansion
        elements (List[str]): Element ids in path order, endpoints preserved
        visible_at_request_layer (List[bool]): Per element, True when it was named in the requested path
        hops (List[Tuple[str, str]]): (layer id, server layer id) of every link substituted, in order
    """
    layer_id: str
    elements: List[str]
    visible_at_request_layer: List[bool]
    hops: List[Tuple[str, str]] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "layer_id": self.layer_id,
            "elements": [
                {"id": element_id, "visible_at_request_layer": visible}
                for element_id, visible in zip(self.elements, self.visible_at_request_layer)
            ],
            "hops": [{"layer_id": layer_id, "server_layer_id": server} for layer_id, server in self.hops]
        }


def layer_graph(model: Model, layer_id: str) -> nx.MultiGraph:
    """Graph of one layer network, every link laid along its route down to the transmission media.

    Edges are keyed by the id of the link they belong to, so that elements transparent at the layer
    appear on the links riding over them.
    """
    graph = nx.MultiGraph()
    graph.add_nodes_from(element.id for element in model.elements.values() if layer_id in element.present_at_layers)
    for link in model.links_at_layer(layer_id):
        route = _route(model, link)
        for a, b in zip(route, route[1:]):
            graph.add_edge(a, b, key=link.id)
    return graph


def _footprint(nodes: Iterable[Node]) -> Set[Node]:
    """Every node overlapping the given ones: a whole element overlaps both of its halves."""
    footprint = set()
    for element_id, half in nodes:
        if half == WHOLE:
            footprint |= {(element_id, WHOLE), (element_id, UPSTREAM_HALF), (element_id, DOWNSTREAM_HALF)}
        else:
            footprint |= {(element_id, half), (element_id, WHOLE)}
    return footprint


class _CutGraph():
    """Layer graph of the segments of one layer, the elements subsuming their reference points split in halves.

    components() cuts a set of reference points out of it.
    """

    def __init__(self, model: Model, layer_id: str, bounding: List[ReferencePoint]) -> None:
        self.model = model
        self.layer_id = layer_id
        base = layer_graph(model, layer_id)
        self.split = {rp.subsuming_element for rp in bounding if rp.subsumed and rp.subsuming_element in base}
        # Orientation hints: a link from a split element towards the downstream element of one of its
        # external reference points attaches to the downstream half.
        self.downstream_neighbors = defaultdict(set)
        for rp in model.reference_points.values():
            if rp.layer_id == layer_id and not rp.subsumed and rp.kind != RPKind.ACCESS_POINT and rp.upstream_element in self.split:
                self.downstream_neighbors[rp.upstream_element].add(rp.downstream_element)

        self.graph = nx.MultiGraph()
        for element_id in base.nodes:
            self.graph.add_nodes_from(self.nodes_of(element_id))
        for link in model.links_at_layer(layer_id):
            route = _route(model, link)
            last = len(route) - 1
            for position, (a, b) in enumerate(zip(route, route[1:])):
                u = self.node_of(a, link.endpoint_b if position == 0 else b)
                v = self.node_of(b, link.endpoint_a if position + 1 == last else a)
                self.graph.add_edge(u, v, key=link.id)

    def node_of(self, element_id: str, neighbor_id: str) -> Node:
        if element_id not in self.split:
            return (element_id, WHOLE)
        if neighbor_id in self.downstream_neighbors[element_id]:
            return (element_id, DOWNSTREAM_HALF)
        return (element_id, UPSTREAM_HALF)

    def nodes_of(self, element_id: str) -> List[Node]:
        if element_id in self.split:
            return [(element_id, UPSTREAM_HALF), (element_id, DOWNSTREAM_HALF)]
        return [(element_id, WHOLE)]

    def endpoint_nodes(self, rp: ReferencePoint) -> Tuple[List[Node], List[Node]]:
        """(upstream nodes, downstream nodes) of a reference point in this graph."""
        if rp.subsumed:
            element_id = rp.subsuming_element
            if element_id in self.split:
                return [(element_id, UPSTREAM_HALF)], [(element_id, DOWNSTREAM_HALF)]
            return [(element_id, WHOLE)], [(element_id, WHOLE)]
        if rp.kind == RPKind.ACCESS_POINT:
            return self.nodes_of(rp.upstream_element), []
        return (
            [self.node_of(rp.upstream_element, rp.downstream_element)],
            [self.node_of(rp.downstream_element, rp.upstream_element)]
        )

    def ends(self, rp: ReferencePoint) -> List[Node]:
        upstream, downstream = self.endpoint_nodes(rp)
        return upstream + downstream

    def components(self, cut: Iterable[ReferencePoint]) -> Dict[Node, Component]:
        """Connected components once the links joining the endpoints of every cut reference point are removed."""
        cut_links = set()
        for rp in cut:
            if rp.subsumed or rp.kind == RPKind.ACCESS_POINT:
                continue
            ends = {rp.upstream_element, rp.downstream_element}
            cut_links.update(link.id for link in self.model.links_at_layer(self.layer_id) if {link.endpoint_a, link.endpoint_b} == ends)
        graph = nx.MultiGraph()
        graph.add_nodes_from(self.graph.nodes)
        graph.add_edges_from((u, v, key) for u, v, key in self.graph.edges(keys=True) if key not in cut_links)
        components: Dict[Node, Component] = {}
        for component in nx.connected_components(graph):
            frozen = frozenset(component)
            for node in component:
                components[node] = frozen
        return components


class SerialRecomposition():
    def __init__(self, model: Model) -> None:
        self.model = model
        self.warnings: List[str] = []

    def _warn(self, message: str) -> None:
        logging.warning(message)
        self.warnings.append(message)

    def _bounding_rps(self, segment_id: str) -> List[ReferencePoint]:
        return [self.model.reference_points[rp_id] for rp_id in self.model.segments[segment_id].bounding_rp_ids]

    def _candidates(self, segment_id: str, graph: _CutGraph, enclosed: Dict[Node, Component]) -> Set[FrozenSet[Node]]:
        """Possible interiors of a segment.

        The segment's own reference points alone delimit regions of the layer graph: the regions
        touching every one of them, or each region touching one of them when none is common.
        Within a region, the interior is what its bounding RP endpoints reach without crossing
        any reference point (enclosed).
        """
        rps = self._bounding_rps(segment_id)
        regions = graph.components(rps)
        sides = []
        for rp in rps:
            rp_sides = {regions[node] for node in graph.ends(rp) if node in regions}
            if rp_sides:
                sides.append(rp_sides)
        if not sides:
            return set()
        common = set.intersection(*sides)
        candidates = set()
        for region in (common if common else set.union(*sides)):
            inner = [node for rp in rps for node in graph.ends(rp) if node in region]
            candidates.add(frozenset().union(*(enclosed[node] for node in inner)))
        return candidates

    def _interiors(self, layer_id: str, segment_ids: List[str]) -> Tuple[Dict[str, Set[Node]], _CutGraph]:
        bounding = sorted({rp for segment_id in segment_ids for rp in self._bounding_rps(segment_id)}, key=lambda rp: rp.id)
        graph = _CutGraph(self.model, layer_id, bounding)
        enclosed = graph.components(bounding)
        candidates = {segment_id: self._candidates(segment_id, graph, enclosed) for segment_id in segment_ids}
        resolved: Dict[str, Set[Node]] = {}
        changed = True
        while changed:
            changed = False
            for segment_id in segment_ids:
                if segment_id not in resolved and len(candidates[segment_id]) <= 1:
                    resolved[segment_id] = set().union(*candidates[segment_id])
                    changed = True
            for segment_id in segment_ids:
                if segment_id in resolved:
                    continue
                claimed = _footprint(node for other, nodes in resolved.items() if other != segment_id for node in nodes)
                remaining = {candidate for candidate in candidates[segment_id] if not claimed & candidate}
                if remaining and remaining != candidates[segment_id]:
                    candidates[segment_id] = remaining
                    changed = True

        for segment_id in segment_ids:
            if segment_id in resolved:
                continue
            downstream = set()
            for rp in self._bounding_rps(segment_id):
                downstream.update(graph.endpoint_nodes(rp)[1])
            preferred = {candidate for candidate in candidates[segment_id] if candidate & downstream}
            chosen = preferred if preferred else candidates[segment_id]
            self._warn(f"segment {segment_id} has an ambiguous interior at layer {layer_id}, kept the downstream side of its reference points")
            resolved[segment_id] = set().union(*chosen)
        return resolved, graph

    def _straddle(self, element_id: str, claims: List[Tuple[str, str]]) -> Optional[Tuple[str, str, str]]:
        upstream = sorted({segment_id for segment_id, half in claims if half == UPSTREAM_HALF})
        downstream = sorted({segment_id for segment_id, half in claims if half == DOWNSTREAM_HALF})
        for rp in self.model.reference_points.values():
            if not rp.subsumed or rp.subsuming_element != element_id:
                continue
            for a in upstream:
                for b in downstream:
                    bounds = (self.model.segments[a].bounding_rp_ids, self.model.segments[b].bounding_rp_ids)
                    if a != b and all(rp.id in rps for rps in bounds):
                        return (rp.id, a, b)
        return None

    def _nearest(self, layer_id: str, element_id: str, segment_ids: List[str]) -> str:
        """Segment whose bounding RP endpoints are the fewest hops away, ties broken by segment id."""
        graph = layer_graph(self.model, layer_id)
        ranking = []
        for segment_id in segment_ids:
            sources = set()
            for rp_id in self.model.segments[segment_id].bounding_rp_ids:
                rp = self.model.reference_points[rp_id]
                sources |= {rp.subsuming_element} if rp.subsumed else {rp.upstream_element, rp.downstream_element}
            sources &= set(graph.nodes)
            distances = nx.multi_source_dijkstra_path_length(graph, sources) if sources else {}
            ranking.append((distances.get(element_id, float("inf")), segment_id))
        ranking.sort()
        best_distance, best = ranking[0]
        if len(ranking) > 1 and ranking[1][0] == best_distance:
            self._warn(f"{element_id} is claimed by {', '.join(segment_ids)} at equal distance, assigned to {best}")
        else:
            self._warn(f"{element_id} is claimed by {', '.join(segment_ids)}, assigned to the nearest segment {best}")
        return best

    def run(self) -> CoverageResult:
        powered = set(self.model.powered_elements())
        by_layer = defaultdict(list)
        for segment_id, segment in self.model.segments.items():
            if segment.bounding_rp_ids:
                by_layer[self.model.segment_layer(segment_id)].append(segment_id)
        assignment: Dict[str, str] = {}
        straddling: Dict[str, Tuple[str, str, str]] = {}
        rp_trace: Dict[str, List[str]] = {segment_id: [] for segment_id in self.model.segments}

        for layer_id in layer_order(self.model):
            segment_ids = sorted(by_layer.get(layer_id, []))
            if not segment_ids:
                continue
            interiors, graph = self._interiors(layer_id, segment_ids)
            claims = defaultdict(list)
            for segment_id in segment_ids:
                for element_id, half in interiors[segment_id]:
                    claims[element_id].append((segment_id, half))
                rp_trace[segment_id] = sorted(
                    rp.id for rp in self._bounding_rps(segment_id) if set(graph.ends(rp)) & interiors[segment_id]
                )

            captured = 0
            for element_id in sorted(claims):
                if element_id not in powered or element_id in assignment:
                    continue
                segments = sorted({segment_id for segment_id, _ in claims[element_id]})
                if len(segments) == 1:
                    assignment[element_id] = segments[0]
                else:
                    straddle = self._straddle(element_id, claims[element_id])
                    if straddle:
                        straddling[element_id] = straddle
                        assignment[element_id] = straddle[1]
                    else:
                        assignment[element_id] = self._nearest(layer_id, element_id, segments)
                captured += 1
            logging.debug(f"[DEBUG] Layer {layer_id}: {captured} powered element(s) captured by {len(segment_ids)} segment(s)")

        uncaptured = sorted(powered - set(assignment))
        if uncaptured:
            logging.debug(f"[DEBUG] Uncaptured powered elements: {uncaptured}")
        return CoverageResult(
            assignment=dict(sorted(assignment.items())),
            uncaptured=uncaptured,
            rp_trace=rp_trace,
            straddling=straddling,
            warnings=list(self.warnings)
        )


def serial_recomposition(model: Model) -> CoverageResult:
    """Captures every powered element into the segment enclosing it, working up the layer networks.

    Args:
        model (Model): Valid model

    Returns:
        CoverageResult: assignment and uncaptured partition the powered elements
    """
    return SerialRecomposition(model).run()


def _hop_link(model: Model, layer_id: str, a: str, b: str) -> Optional[Link]:
    joining = [link for link in model.links_at_layer(layer_id) if {link.endpoint_a, link.endpoint_b} == {a, b}]
    return min(joining, key=lambda link: link.id) if joining else None


def _media_layer_of(model: Model, element_id: str) -> str:
    for layer_id in layer_order(model):
        if model.is_media(layer_id) and layer_id in model.elements[element_id].present_at_layers:
            return layer_id
    return layer_order(model)[0]


def _substitute(model: Model, layer_id: str, path: List[str], hops: List[Tuple[str, str]]) -> Tuple[List[str], Optional[str]]:
    """Replaces every hop of a valid path by its server trail, recursively."""
    if model.is_media(layer_id):
        return list(path), layer_id
    expanded, media = [path[0]], None
    for a, b in zip(path, path[1:]):
        link = _hop_link(model, layer_id, a, b)
        trail = list(link.server_trail) if link.endpoint_a == a else list(reversed(link.server_trail))
        hops.append((link.layer_id, link.server_layer_id))
        sub_path, sub_media = _substitute(model, link.server_layer_id, trail, hops)
        expanded.extend(sub_path[1:])
        media = media or sub_media
    return expanded, media


def _route(model: Model, link: Link) -> List[str]:
    """Elements a link traverses down to the transmission media, endpoints included."""
    if model.is_media(link.layer_id):
        return [link.endpoint_a, link.endpoint_b]
    return _substitute(model, link.server_layer_id, list(link.server_trail), [])[0]


def expand_path(model: Model, layer_id: str, path: List[str]) -> PathTrace:
    """Expands a path at some layer into the elements it traverses at the transmission media.

    Args:
        model (Model): Valid model
        layer_id (str): Layer of the requested path
        path (List[str]): Element ids, consecutive ones joined by a link at layer_id

    Raises:
        MetroModelError: E-NO-SUCH-LAYER, or E-NOT-A-PATH with the position where the path breaks

    Returns:
        PathTrace: Media-layer trace, order and endpoints preserved
    """
    if layer_id not in model.layers:
        raise MetroModelError("E-NO-SUCH-LAYER", layer_id, "unknown layer")
    if not path:
        raise MetroModelError("E-NOT-A-PATH", "0", "a path names at least one element")
    for position, element_id in enumerate(path):
        if element_id not in model.elements:
            raise MetroModelError("E-NOT-A-PATH", str(position), f"unknown element {element_id}")
    for position, (a, b) in enumerate(zip(path, path[1:])):
        if _hop_link(model, layer_id, a, b) is None:
            raise MetroModelError("E-NOT-A-PATH", str(position), f"no {layer_id} link joins {a} and {b}")
    hops: List[Tuple[str, str]] = []
    elements, media = _substitute(model, layer_id, list(path), hops)
    visible = set(path)
    return PathTrace(
        layer_id=media if media else _media_layer_of(model, path[0]),
        elements=elements,
        visible_at_request_layer=[element_id in visible for element_id in elements],
        hops=hops
    )


def detect_hidden_consumers(model: Model, layer_id: str, path: List[str]) -> List[str]:
    """Powered elements a path traverses without being visible at the requested layer.

    Args:
        model (Model): Valid model
        layer_id (str): Layer of the requested path
        path (List[str]): Element ids at layer_id

    Raises:
        MetroModelError: As expand_path

    Returns:
        List[str]: Sorted powered element ids hidden by the layering
    """
    trace = expand_path(model, layer_id, path)
    powered = set(model.powered_elements())
    return sorted({element_id for element_id in trace.elements if element_id in powered} - set(path))
