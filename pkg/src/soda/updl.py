"""Profile knowledge graphs with a canonical wire form and graded disclosure.

A profile is a small typed graph: attribute nodes (a dotted field path, an
ontology class, a value) joined by labelled edges.  Two design rules shape
everything here:

* **Canonical bytes.**  ``serialize`` must produce identical bytes for
  identical graph content no matter the insertion order, so the output is a
  single JSON document with lexicographically sorted keys, sorted node and
  edge lists, and no insignificant whitespace.  A top-level ``@context``
  block names the governing ontology version, linked-data style.
* **Graded disclosure.**  Every node carries a granularity level.  Level 0
  is the full value; higher levels are progressively lossier renderings
  (bucketed, category-only, placeholder).  ``coarsen`` only ever moves a
  node up the ladder — there is no way back to precision from a coarsened
  node, which is the property the disclosure gate relies on.

Node ids are content-derived: a fixed-length hex digest of the field path.
Documents therefore cannot smuggle in an id that disagrees with the path it
claims to name.
"""

from __future__ import annotations

import hashlib
import json
import math
import re
from dataclasses import dataclass, replace
from typing import Iterable, Mapping, Sequence, Union

SCHEMA_VERSION = 1
FILE_EXTENSION = ".updl"
DEFAULT_ONTOLOGY_ID = "soda-core/1"

# Granularity ladder.  Order matters: coarsen() is monotone over these.
FULL = 0        # exact value
BUCKETED = 1    # order-of-magnitude bucket / initials
CATEGORY = 2    # ontology class label only
REDACTED = 3    # fixed placeholder token

REDACTED_PLACEHOLDER = "[REDACTED]"

_NODE_ID_BYTES = 8  # rendered as 16 hex chars
_FIELD_PATH_RE = re.compile(r"^[a-z][a-z0-9_]*(\.[a-z][a-z0-9_]*)*$")
_PREDICATE_RE = re.compile(r"^[a-z][a-z0-9_]*$")


class UpdlError(Exception):
    """Base class for every profile-graph failure."""


class MalformedDocumentError(UpdlError):
    """The byte stream is not a structurally valid profile document."""


class UnsupportedVersionError(UpdlError):
    """The document declares a schema_version this build does not speak."""


class IntegrityError(UpdlError):
    """Graph-level violation: duplicate ids, dangling edges, forged ids."""


class SchemaError(UpdlError):
    """A field path or ontology class the governing ontology does not know."""


class GranularityError(UpdlError):
    """Granularity outside 0..3 or an attempt to refine a coarsened node."""


@dataclass(frozen=True)
class NodeRef:
    """A value that points at another node instead of carrying data."""

    target: str


Scalar = Union[str, int, float, bool]
Value = Union[Scalar, tuple, NodeRef]


def node_id(field_path: str) -> str:
    """Stable content-derived id for ``field_path`` (16 hex chars)."""
    digest = hashlib.blake2b(field_path.encode("utf-8"), digest_size=_NODE_ID_BYTES)
    return digest.hexdigest()


def _check_scalar(value: object) -> None:
    if not isinstance(value, (str, int, float, bool)):
        raise MalformedDocumentError(f"unsupported scalar type {type(value).__name__}")
    if isinstance(value, float) and not math.isfinite(value):
        raise MalformedDocumentError("non-finite numbers are not representable")


def _freeze_value(value: object) -> Value:
    """Validate and normalize a node value (lists become tuples)."""
    if isinstance(value, NodeRef):
        return value
    if isinstance(value, (list, tuple)):
        items = tuple(value)
        for item in items:
            _check_scalar(item)
        return items
    _check_scalar(value)
    return value  # type: ignore[return-value]


@dataclass(frozen=True)
class ProfileNode:
    """One attribute of a profile.

    Attributes:
        id: content-derived hex id; must equal ``node_id(field_path)``.
        field_path: dotted lowercase path, e.g. ``assets.portfolio``.
        ontology_class: key into the governing sensitivity ontology.
        value: scalar, tuple of scalars, or :class:`NodeRef`.
        granularity: disclosure level 0..3 (see module docstring).
        created_at: seconds since the epoch, UTC.
    """

    id: str
    field_path: str
    ontology_class: str
    value: Value
    granularity: int = FULL
    created_at: float = 0.0

    def __post_init__(self) -> None:
        if not _FIELD_PATH_RE.match(self.field_path):
            raise SchemaError(f"malformed field path {self.field_path!r}")
        if self.id != node_id(self.field_path):
            raise IntegrityError(f"node id {self.id!r} is not derived from {self.field_path!r}")
        if not isinstance(self.granularity, int) or not FULL <= self.granularity <= REDACTED:
            raise GranularityError(f"granularity {self.granularity!r} outside 0..3")
        object.__setattr__(self, "value", _freeze_value(self.value))


def make_node(
    field_path: str,
    ontology_class: str,
    value: object,
    *,
    granularity: int = FULL,
    created_at: float = 0.0,
) -> ProfileNode:
    """Build a node with its id derived from the path."""
    return ProfileNode(
        id=node_id(field_path),
        field_path=field_path,
        ontology_class=ontology_class,
        value=value,  # type: ignore[arg-type]
        granularity=granularity,
        created_at=created_at,
    )


@dataclass(frozen=True)
class ProfileEdge:
    """A labelled directed edge between two node ids."""

    subject: str
    predicate: str
    object: str

    def __post_init__(self) -> None:
        if not _PREDICATE_RE.match(self.predicate):
            raise SchemaError(f"malformed predicate {self.predicate!r}")


@dataclass(frozen=True)
class ProfileGraph:
    """An immutable profile graph, normalized to a canonical ordering."""

    nodes: tuple[ProfileNode, ...]
    edges: tuple[ProfileEdge, ...] = ()
    schema_version: int = SCHEMA_VERSION

    def __post_init__(self) -> None:
        nodes = tuple(sorted(self.nodes, key=lambda n: n.id))
        edges = tuple(sorted(self.edges, key=lambda e: (e.subject, e.predicate, e.object)))
        ids = [n.id for n in nodes]
        if len(set(ids)) != len(ids):
            raise IntegrityError("duplicate node ids")
        if len(set(edges)) != len(edges):
            raise IntegrityError("duplicate edges")
        known = set(ids)
        for edge in edges:
            if edge.subject not in known or edge.object not in known:
                raise IntegrityError(f"edge {edge} references a missing node")
        for node in nodes:
            if isinstance(node.value, NodeRef) and node.value.target not in known:
                raise IntegrityError(f"node {node.field_path} references missing id {node.value.target}")
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "edges", edges)

    def node(self, node_id_: str) -> ProfileNode:
        for candidate in self.nodes:
            if candidate.id == node_id_:
                return candidate
        raise KeyError(node_id_)

    def node_for_path(self, field_path: str) -> ProfileNode | None:
        wanted = node_id(field_path)
        for candidate in self.nodes:
            if candidate.id == wanted:
                return candidate
        return None

    def outgoing(self, subject_id: str, predicate: str) -> tuple[ProfileNode, ...]:
        return tuple(
            self.node(edge.object)
            for edge in self.edges
            if edge.subject == subject_id and edge.predicate == predicate
        )


@dataclass
class SensitivityOntology:
    """Maps ontology classes to sensitivity levels and redaction behavior.

    ``levels`` assigns each class an integer 0..10; ``classify`` resolves a
    field path to its class by exact match first, then by walking up dotted
    prefixes, so ``assets.portfolio.bonds`` inherits from
    ``assets.portfolio`` unless it has its own entry.
    """

    name: str
    levels: dict[str, int]

    def __post_init__(self) -> None:
        for cls, level in self.levels.items():
            if not isinstance(level, int) or not 0 <= level <= 10:
                raise SchemaError(f"sensitivity level {level!r} for {cls!r} outside 0..10")

    def classify(self, field_path: str) -> str:
        if field_path in self.levels:
            return field_path
        parts = field_path.split(".")
        while len(parts) > 1:
            parts = parts[:-1]
            prefix = ".".join(parts)
            if prefix in self.levels:
                return prefix
        raise SchemaError(f"no ontology class covers field path {field_path!r}")

    def level_for(self, field_path: str) -> int:
        return self.levels[self.classify(field_path)]


#: Shipped default.  Levels calibrated so a portfolio request scores 9, a
#: full-profile scrape 8, and a public-interests request 2.
DEFAULT_ONTOLOGY = SensitivityOntology(
    name=DEFAULT_ONTOLOGY_ID,
    levels={
        "credentials.api_key": 10,
        "assets.portfolio": 9,
        "identity.full_profile": 8,
        "identity.legal_name": 7,
        "identity.contact": 6,
        "identity.status": 4,
        "research.focus": 3,
        "research.publications": 3,
        "preferences.hobbies": 2,
        "preferences.public_interests": 2,
    },
)


def classify_sensitivity(field_path: str, ontology: SensitivityOntology) -> int:
    """Sensitivity level 0..10 for one field path.

    Raises SchemaError when no ontology class covers the path.
    """
    return ontology.level_for(field_path)


def to_plain(value: Value) -> object:
    """Node value in JSON-native form: tuples become lists, refs objects.

    Disclosure payloads cross process boundaries, so they carry this form
    rather than the frozen in-graph representation.
    """
    if isinstance(value, NodeRef):
        return {"@id": value.target}
    if isinstance(value, tuple):
        return [to_plain(item) for item in value]
    return value


def _initials(text: str) -> str:
    words = re.findall(r"[A-Za-z0-9]+", text)
    return " ".join(f"{w[0].upper()}." for w in words)


def _bucket_scalar(value: Scalar) -> Scalar:
    # bool is an int subtype; test it first so True does not bucket as 1.
    if isinstance(value, bool):
        return _initials(str(value).lower())
    if isinstance(value, (int, float)):
        if value == 0:
            return "0"
        magnitude = math.floor(math.log10(abs(value)))
        sign = "-" if value < 0 else ""
        return f"{sign}10^{magnitude}..{sign}10^{magnitude + 1}"
    return _initials(value)


def _bucket_value(value: Value) -> Value:
    if isinstance(value, NodeRef):
        return value
    if isinstance(value, tuple):
        return tuple(_bucket_scalar(item) for item in value)
    return _bucket_scalar(value)


def coarsen(node: ProfileNode, target_granularity: int, ontology: SensitivityOntology) -> ProfileNode:
    """Render ``node`` at a strictly-equal-or-lossier granularity.

    Level 1 buckets numbers to order-of-magnitude ranges and strings to
    initials; level 2 keeps only the ontology class label; level 3 is a
    fixed placeholder.  Refining (target below current) raises
    GranularityError; coarsening to the current level is the identity, so
    the operation is idempotent and composes monotonically.
    """
    if not isinstance(target_granularity, int) or not FULL <= target_granularity <= REDACTED:
        raise GranularityError(f"granularity {target_granularity!r} outside 0..3")
    if target_granularity < node.granularity:
        raise GranularityError(
            f"cannot refine {node.field_path} from {node.granularity} to {target_granularity}"
        )
    if target_granularity == node.granularity:
        return node
    # Sanity: the node's class must still be known to the governing ontology.
    if node.ontology_class not in ontology.levels:
        raise SchemaError(f"unknown ontology class {node.ontology_class!r}")
    if target_granularity == BUCKETED:
        value: Value = _bucket_value(node.value)
    elif target_granularity == CATEGORY:
        value = node.ontology_class
    else:
        value = REDACTED_PLACEHOLDER
    return replace(node, value=value, granularity=target_granularity)


def _encode_value(value: Value) -> object:
    if isinstance(value, NodeRef):
        return {"@id": value.target}
    if isinstance(value, tuple):
        return list(value)
    return value


def _decode_value(raw: object) -> Value:
    if isinstance(raw, dict):
        if set(raw) != {"@id"} or not isinstance(raw["@id"], str):
            raise MalformedDocumentError(f"unrecognized value object {raw!r}")
        return NodeRef(target=raw["@id"])
    if isinstance(raw, list):
        for item in raw:
            if isinstance(item, (dict, list)):
                raise MalformedDocumentError("nested collections are not representable")
        return tuple(raw)
    return raw  # type: ignore[return-value]


def serialize(graph: ProfileGraph, *, ontology_id: str = DEFAULT_ONTOLOGY_ID) -> bytes:
    """Canonical UTF-8 bytes for ``graph``: sorted keys, no extra whitespace."""
    doc = {
        "@context": {"ontology": ontology_id},
        "schema_version": graph.schema_version,
        "nodes": [
            {
                "class": node.ontology_class,
                "created_at": node.created_at,
                "granularity": node.granularity,
                "id": node.id,
                "path": node.field_path,
                "value": _encode_value(node.value),
            }
            for node in graph.nodes
        ],
        "edges": [
            {"object": edge.object, "predicate": edge.predicate, "subject": edge.subject}
            for edge in graph.edges
        ],
    }
    return json.dumps(doc, sort_keys=True, separators=(",", ":"), ensure_ascii=False).encode("utf-8")


_DOC_KEYS = {"@context", "schema_version", "nodes", "edges"}
_NODE_KEYS = {"class", "created_at", "granularity", "id", "path", "value"}
_EDGE_KEYS = {"object", "predicate", "subject"}


def parse(data: bytes | str, *, ontology: SensitivityOntology | None = None) -> ProfileGraph:
    """Parse canonical bytes back into a graph, validating as it goes.

    Raises MalformedDocumentError, UnsupportedVersionError, IntegrityError,
    or SchemaError — each failure class stays distinguishable.
    """
    governing = DEFAULT_ONTOLOGY if ontology is None else ontology
    if isinstance(data, bytes):
        try:
            text = data.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise MalformedDocumentError("document is not valid UTF-8") from exc
    else:
        text = data
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise MalformedDocumentError(f"document is not valid JSON: {exc}") from exc
    if not isinstance(doc, dict) or set(doc) != _DOC_KEYS:
        raise MalformedDocumentError("top level must carry exactly @context/schema_version/nodes/edges")
    context = doc["@context"]
    if not isinstance(context, dict) or not isinstance(context.get("ontology"), str):
        raise MalformedDocumentError("@context must name the governing ontology")
    version = doc["schema_version"]
    if not isinstance(version, int) or isinstance(version, bool):
        raise MalformedDocumentError("schema_version must be an integer")
    if version != SCHEMA_VERSION:
        raise UnsupportedVersionError(f"schema_version {version} is not supported")
    if not isinstance(doc["nodes"], list) or not isinstance(doc["edges"], list):
        raise MalformedDocumentError("nodes and edges must be lists")

    nodes = []
    for raw in doc["nodes"]:
        if not isinstance(raw, dict) or set(raw) != _NODE_KEYS:
            raise MalformedDocumentError(f"node object with unexpected shape: {raw!r}")
        if not isinstance(raw["id"], str) or not isinstance(raw["path"], str):
            raise MalformedDocumentError("node id and path must be strings")
        if not isinstance(raw["class"], str):
            raise MalformedDocumentError("node class must be a string")
        if not isinstance(raw["created_at"], (int, float)) or isinstance(raw["created_at"], bool):
            raise MalformedDocumentError("created_at must be a number")
        if not isinstance(raw["granularity"], int) or isinstance(raw["granularity"], bool):
            raise MalformedDocumentError("granularity must be an integer")
        nodes.append(
            ProfileNode(
                id=raw["id"],
                field_path=raw["path"],
                ontology_class=raw["class"],
                value=_decode_value(raw["value"]),
                granularity=raw["granularity"],
                created_at=float(raw["created_at"]),
            )
        )
    edges = []
    for raw in doc["edges"]:
        if not isinstance(raw, dict) or set(raw) != _EDGE_KEYS:
            raise MalformedDocumentError(f"edge object with unexpected shape: {raw!r}")
        if not all(isinstance(raw[k], str) for k in ("subject", "predicate", "object")):
            raise MalformedDocumentError("edge endpoints and predicate must be strings")
        edges.append(ProfileEdge(subject=raw["subject"], predicate=raw["predicate"], object=raw["object"]))

    graph = ProfileGraph(nodes=tuple(nodes), edges=tuple(edges), schema_version=version)
    for node in graph.nodes:
        if node.ontology_class not in governing.levels:
            raise SchemaError(f"ontology class {node.ontology_class!r} unknown to {governing.name}")
    return graph


def build_profile_graph(
    attributes: Iterable[tuple[str, str, object]],
    relations: Iterable[tuple[str, str, str]] = (),
    *,
    ontology: SensitivityOntology | None = None,
    created_at: float = 0.0,
) -> ProfileGraph:
    """Assemble a graph from (field_path, ontology_class, value) triples.

    ``relations`` name nodes by field path: (subject_path, predicate,
    object_path).  Duplicate paths and dangling relation endpoints raise
    IntegrityError; unknown ontology classes raise SchemaError.
    """
    governing = DEFAULT_ONTOLOGY if ontology is None else ontology
    nodes: dict[str, ProfileNode] = {}
    for field_path, ontology_class, value in attributes:
        if field_path in nodes:
            raise IntegrityError(f"duplicate field path {field_path!r}")
        if ontology_class not in governing.levels:
            raise SchemaError(f"ontology class {ontology_class!r} unknown to {governing.name}")
        nodes[field_path] = make_node(
            field_path, ontology_class, value, created_at=created_at
        )
    edges = []
    for subject_path, predicate, object_path in relations:
        if subject_path not in nodes or object_path not in nodes:
            raise IntegrityError(f"relation {subject_path}-{predicate}->{object_path} names a missing node")
        edges.append(
            ProfileEdge(
                subject=nodes[subject_path].id,
                predicate=predicate,
                object=nodes[object_path].id,
            )
        )
    return ProfileGraph(nodes=tuple(nodes.values()), edges=tuple(edges))
