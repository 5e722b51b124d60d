"""Shared sample loaders and hypothesis strategies of the test suite."""
import functools
import os
import random
from typing import Callable, Dict, List, Tuple
from hypothesis import HealthCheck, settings
from hypothesis import strategies as st
from metro_energy import catalog
from metro_energy.model import (
    FunctionalGroup, LayerKind, LayerNetwork, Link, Metadata, Model, ModelParts, NetworkElement,
    ReferencePoint, RPKind, Segment, Site, SpaceClass, build_model
)
from metro_energy.schema_io import document_from_dict, load_model, model_to_document

PATH_SAMPLES = os.path.join(os.path.dirname(__file__), "samples")

PROPERTY_SETTINGS = settings(
    max_examples=1000,
    deadline=None,
    suppress_health_check=[HealthCheck.too_slow]
)


def path_sample(name: str) -> str:
    return os.path.join(PATH_SAMPLES, name)


def load_sample(name: str) -> Model:
    return load_model(path_sample(name))


@functools.lru_cache(maxsize=None)
def template_model(template_id: str, integrated_cpe: bool = False) -> Model:
    params = catalog.TemplateParams(integrated_cpe=integrated_cpe)
    return catalog.instantiate_template(template_id, params).to_model()


def mutate(model: Model, change: Callable[[dict], None]) -> Model:
    """Rebuilds a model after editing its canonical document in place."""
    document = model_to_document(model)
    change(document)
    return document_from_dict(document).to_model()


def find(document: dict, collection: str, item_id: str) -> dict:
    return next(item for item in document[collection] if item["id"] == item_id)


def shuffled_parts(parts: ModelParts, rng: random.Random) -> ModelParts:
    """Same parts, every collection in another order."""
    def reorder(items: list) -> list:
        items = list(items)
        rng.shuffle(items)
        return items

    return ModelParts(
        layers=reorder(parts.layers),
        sites=reorder(parts.sites),
        elements=reorder(parts.elements),
        links=reorder(parts.links),
        reference_points=reorder(parts.reference_points),
        segments=reorder(parts.segments),
        metadata=parts.metadata
    )


@st.composite
def chain_parts(draw: Callable) -> Tuple[ModelParts, Dict[str, str]]:
    """A media-layer chain cut into consecutive segments.

    The first and last edges carry a head and a tail reference point, the inner edges the cuts.
    Returns the parts and the expected element -> segment assignment of the powered elements. The
    end elements lie beyond the head and the tail, so they are expected uncaptured.
    """
    size = draw(st.integers(min_value=4, max_value=12))
    element_ids = [f"n{i:02d}" for i in range(size)]
    powered = draw(st.lists(st.booleans(), min_size=size, max_size=size))
    draws = draw(st.lists(st.integers(min_value=0, max_value=500), min_size=size, max_size=size))
    cuts = sorted(draw(st.sets(st.integers(min_value=1, max_value=size - 3))))

    def rp(rp_id: str, edge: int) -> ReferencePoint:
        return ReferencePoint(rp_id, "custom(edge)", RPKind.RPI_N, "media", element_ids[edge], element_ids[edge + 1])

    boundaries = [rp("rp-head", 0)] + [rp(f"rp-cut-{edge:02d}", edge) for edge in cuts] + [rp("rp-tail", size - 2)]
    operators = draw(st.lists(st.sampled_from(["op-a", "op-b"]), min_size=len(cuts) + 1, max_size=len(cuts) + 1))
    segments = [
        Segment(f"seg-{k:02d}", "other(chain)", operators[k], (boundaries[k].id, boundaries[k + 1].id))
        for k in range(len(cuts) + 1)
    ]
    parts = ModelParts(
        layers=[LayerNetwork("media", "Transmission media", LayerKind.TRANSMISSION_MEDIA, "fibre")],
        sites=[Site("site", "Site", "anywhere", SpaceClass.CABINET, True, 1000, True)],
        elements=[
            NetworkElement(
                element_id, element_id, "site", "op-a", (FunctionalGroup.OTHER,),
                powered[i], draws[i] if powered[i] else 0, ("media",)
            )
            for i, element_id in enumerate(element_ids)
        ],
        links=[Link(f"l-{i:02d}", "media", element_ids[i], element_ids[i + 1]) for i in range(size - 1)],
        reference_points=boundaries,
        segments=segments,
        metadata=Metadata(name="chain")
    )
    expected = {
        element_id: f"seg-{sum(1 for edge in cuts if edge < i):02d}"
        for i, element_id in enumerate(element_ids) if powered[i] and 0 < i < size - 1
    }
    return parts, expected


@st.composite
def chain_models(draw: Callable) -> Tuple[Model, Dict[str, str]]:
    parts, expected = draw(chain_parts())
    return build_model(parts), expected


TEMPLATE_CASES: List[Tuple[str, bool]] = [
    (template_id.value, integrated) for template_id in catalog.TemplateId for integrated in (False, True)
]


@st.composite
def stacked_paths(draw: Callable) -> Tuple[Model, str, List[str], List[str]]:
    """A chain of elements carried by up to four stacked layers, each one keeping a subset of the elements below.

    Returns the model, a requested layer, a path at that layer and the stretch of the media chain
    the path runs over.
    """
    size = draw(st.integers(min_value=2, max_value=12))
    element_ids = [f"n{i:02d}" for i in range(size)]
    depth = draw(st.integers(min_value=1, max_value=4))
    visible = [list(range(size))]
    for _ in range(1, depth):
        below = visible[-1]
        kept = draw(st.sets(st.sampled_from(below[1:-1]))) if len(below) > 2 else set()
        visible.append([below[0]] + [i for i in below[1:-1] if i in kept] + [below[-1]])
    powered = draw(st.lists(st.booleans(), min_size=size, max_size=size))

    links = []
    for k, indexes in enumerate(visible):
        for a, b in zip(indexes, indexes[1:]):
            trail = tuple(element_ids[i] for i in visible[k - 1] if a <= i <= b) if k else ()
            links.append(Link(f"l{k}-{a:02d}-{b:02d}", f"l{k}", element_ids[a], element_ids[b], trail))
    parts = ModelParts(
        layers=[LayerNetwork("l0", "Transmission media", LayerKind.TRANSMISSION_MEDIA, "fibre")] + [
            LayerNetwork(f"l{k}", f"Layer {k}", LayerKind.PATH, "frames", (f"l{k - 1}",)) for k in range(1, depth)
        ],
        sites=[Site("site", "Site", "anywhere", SpaceClass.CABINET, True, 1000, True)],
        elements=[
            NetworkElement(
                element_id, element_id, "site", "op-a", (FunctionalGroup.OTHER,), powered[i], 10 if powered[i] else 0,
                tuple(f"l{k}" for k in range(depth) if i in visible[k]),
                tuple(f"l{k}" for k in range(depth) if i not in visible[k])
            )
            for i, element_id in enumerate(element_ids)
        ],
        links=links,
        metadata=Metadata(name="stack")
    )

    layer = draw(st.integers(min_value=0, max_value=depth - 1))
    first = draw(st.integers(min_value=0, max_value=len(visible[layer]) - 1))
    last = draw(st.integers(min_value=first, max_value=len(visible[layer]) - 1))
    path = [element_ids[i] for i in visible[layer][first:last + 1]]
    media = element_ids[visible[layer][first]:visible[layer][last] + 1]
    if draw(st.booleans()):
        path, media = path[::-1], media[::-1]
    return build_model(parts), f"l{layer}", path, media
