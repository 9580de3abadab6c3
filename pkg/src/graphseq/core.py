"""Heterogeneous attributed multigraph model with node-link JSON I/O.

Graphs are directed multigraphs whose nodes and edges carry types from a
schema and fixed-arity string attribute slots. Edge order is significant:
the token codec emits edges in a chosen order, and the official equality
notion (`canonical_equal`) compares token encodings under the default
ordering policy.

All types are immutable after construction and safe to share across threads.
"""

from __future__ import annotations

import heapq
import json
from dataclasses import dataclass, field

from .errors import FormatError, OrderingError, SchemaError
from .rules import AttributeRule, builtin_rules

POLICIES = ("timestamp", "topological", "as-given")

# Policy used by canonical_equal, novelty hashing, and CLI defaults. The
# codec must re-encode a decoded graph to the identical sequence; only the
# input edge order survives decoding (timestamps are not emitted as tokens),
# so the canonical policy preserves it.
DEFAULT_POLICY = "as-given"


@dataclass(frozen=True)
class GraphSchema:
    """Declares node/edge types, their attribute slots, and edge legality.

    Slot lists are ordered; their position defines the attribute layout used
    by the codec. ``legal_triples`` lists the allowed
    (source type, edge type, destination type) combinations.
    """

    node_types: tuple[str, ...]
    edge_types: tuple[str, ...]
    node_attr_slots: dict[str, tuple[tuple[str, str], ...]]
    edge_attr_slots: dict[str, tuple[tuple[str, str], ...]]
    legal_triples: frozenset[tuple[str, str, str]]
    validators: dict[str, AttributeRule]

    def __post_init__(self):
        if len(set(self.node_types)) != len(self.node_types):
            raise SchemaError("duplicate node type names")
        if len(set(self.edge_types)) != len(self.edge_types):
            raise SchemaError("duplicate edge type names")
        for tname in self.node_attr_slots:
            if tname not in self.node_types:
                raise SchemaError(f"node_attr_slots references undeclared type {tname!r}")
        for tname in self.edge_attr_slots:
            if tname not in self.edge_types:
                raise SchemaError(f"edge_attr_slots references undeclared type {tname!r}")
        for slots in list(self.node_attr_slots.values()) + list(self.edge_attr_slots.values()):
            for slot_name, kind in slots:
                if kind not in self.validators:
                    raise SchemaError(f"attribute kind {kind!r} (slot {slot_name!r}) has no validator")
        for src, rel, dst in self.legal_triples:
            if src not in self.node_types or dst not in self.node_types:
                raise SchemaError(f"legal triple ({src}, {rel}, {dst}) references undeclared node type")
            if rel not in self.edge_types:
                raise SchemaError(f"legal triple ({src}, {rel}, {dst}) references undeclared edge type")
        object.__setattr__(self, "_ntype_index", {t: i for i, t in enumerate(self.node_types)})
        object.__setattr__(self, "_etype_index", {t: i for i, t in enumerate(self.edge_types)})
        object.__setattr__(
            self,
            "_node_slots",
            tuple(tuple(self.node_attr_slots.get(t, ())) for t in self.node_types),
        )
        object.__setattr__(
            self,
            "_edge_slots",
            tuple(tuple(self.edge_attr_slots.get(t, ())) for t in self.edge_types),
        )
        object.__setattr__(
            self,
            "_legal_idx",
            frozenset(
                (self._ntype_index[s], self._etype_index[r], self._ntype_index[d])
                for s, r, d in self.legal_triples
            ),
        )

    # index helpers -------------------------------------------------------
    def node_type_index(self, name: str) -> int:
        try:
            return self._ntype_index[name]
        except KeyError:
            raise SchemaError(f"unknown node type {name!r}") from None

    def edge_type_index(self, name: str) -> int:
        try:
            return self._etype_index[name]
        except KeyError:
            raise SchemaError(f"unknown edge type {name!r}") from None

    def node_slots(self, type_index: int) -> tuple[tuple[str, str], ...]:
        return self._node_slots[type_index]

    def edge_slots(self, type_index: int) -> tuple[tuple[str, str], ...]:
        return self._edge_slots[type_index]

    def legal_index_triples(self) -> frozenset[tuple[int, int, int]]:
        return self._legal_idx

    def rule_for_kind(self, kind: str) -> AttributeRule:
        return self.validators[kind]


@dataclass(frozen=True)
class NodeData:
    type_index: int
    attrs: tuple[str, ...]


@dataclass(frozen=True)
class EdgeData:
    src: str
    dst: str
    type_index: int
    attrs: tuple[str, ...] = ()
    ts: int | None = None


@dataclass(frozen=True)
class Graph:
    """Directed heterogeneous multigraph; parallel edges and self-loops allowed.

    ``nodes`` preserves insertion order (it determines the indexing of
    isolated nodes); ``edges`` preserves input order. Attribute tuples have
    exactly the arity the schema declares, with missing values as "".
    """

    schema: GraphSchema
    nodes: dict[str, NodeData]
    edges: tuple[EdgeData, ...]

    def __post_init__(self):
        n_ntypes = len(self.schema.node_types)
        for node_id, data in self.nodes.items():
            if not 0 <= data.type_index < n_ntypes:
                raise SchemaError(f"node {node_id!r} has invalid type index {data.type_index}")
            arity = len(self.schema.node_slots(data.type_index))
            if len(data.attrs) != arity:
                raise SchemaError(
                    f"node {node_id!r} has {len(data.attrs)} attribute values, schema declares {arity}"
                )
        n_etypes = len(self.schema.edge_types)
        for pos, edge in enumerate(self.edges):
            if edge.src not in self.nodes:
                raise SchemaError(f"edge #{pos} references unknown source node {edge.src!r}")
            if edge.dst not in self.nodes:
                raise SchemaError(f"edge #{pos} references unknown target node {edge.dst!r}")
            if not 0 <= edge.type_index < n_etypes:
                raise SchemaError(f"edge #{pos} has invalid type index {edge.type_index}")
            arity = len(self.schema.edge_slots(edge.type_index))
            if len(edge.attrs) != arity:
                raise SchemaError(
                    f"edge #{pos} has {len(edge.attrs)} attribute values, schema declares {arity}"
                )

    @property
    def n_nodes(self) -> int:
        return len(self.nodes)

    @property
    def n_edges(self) -> int:
        return len(self.edges)

    def is_empty(self) -> bool:
        return not self.nodes and not self.edges


def make_graph(schema: GraphSchema, nodes, edges) -> Graph:
    """Build a Graph from name-based parts.

    ``nodes``: iterable of (node_id, type_name, attrs) where attrs is a
    mapping of slot name to value (missing slots become ""), or a sequence
    aligned with the schema slots. ``edges``: iterable of
    (src, dst, type_name[, attrs[, ts]]).
    """
    node_map: dict[str, NodeData] = {}
    for node_id, type_name, attrs in nodes:
        ti = schema.node_type_index(type_name)
        slots = schema.node_slots(ti)
        if isinstance(attrs, dict):
            values = tuple(str(attrs.get(slot, "")) for slot, _ in slots)
        else:
            values = tuple(str(v) for v in attrs)
        node_map[str(node_id)] = NodeData(ti, values)
    edge_list = []
    for spec in edges:
        src, dst, type_name = spec[0], spec[1], spec[2]
        attrs = spec[3] if len(spec) > 3 else ()
        ts = spec[4] if len(spec) > 4 else None
        ei = schema.edge_type_index(type_name)
        slots = schema.edge_slots(ei)
        if isinstance(attrs, dict):
            values = tuple(str(attrs.get(slot, "")) for slot, _ in slots)
        else:
            values = tuple(str(v) for v in attrs)
        edge_list.append(EdgeData(str(src), str(dst), ei, values, ts))
    return Graph(schema, node_map, tuple(edge_list))


# ---------------------------------------------------------------------------
# Node-link JSON I/O


def load_node_link(data: bytes | str, schema: GraphSchema) -> Graph:
    """Parse a node-link JSON document against ``schema``.

    Raises FormatError for malformed documents and SchemaError for unknown
    type names or attribute layout violations, naming the offending node or
    edge.
    """
    if isinstance(data, bytes):
        try:
            data = data.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise FormatError(f"document is not UTF-8: {exc}") from exc
    try:
        doc = json.loads(data)
    except json.JSONDecodeError as exc:
        raise FormatError(f"invalid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise FormatError("top-level value must be an object")
    for key in ("nodes", "links"):
        if key not in doc or not isinstance(doc[key], list):
            raise FormatError(f"missing or invalid {key!r} list")

    nodes: dict[str, NodeData] = {}
    for i, entry in enumerate(doc["nodes"]):
        if not isinstance(entry, dict) or "id" not in entry or "type" not in entry:
            raise FormatError(f"nodes[{i}] must be an object with 'id' and 'type'")
        node_id = entry["id"]
        if not isinstance(node_id, str):
            raise FormatError(f"nodes[{i}] id must be a string")
        if node_id in nodes:
            raise FormatError(f"duplicate node id {node_id!r}")
        type_name = entry["type"]
        if type_name not in schema.node_types:
            raise SchemaError(f"node {node_id!r} has undeclared type {type_name!r}")
        ti = schema.node_type_index(type_name)
        slots = schema.node_slots(ti)
        attrs = entry.get("attrs", {})
        if not isinstance(attrs, dict):
            raise FormatError(f"node {node_id!r} attrs must be an object")
        slot_names = {slot for slot, _ in slots}
        for key, value in attrs.items():
            if key not in slot_names:
                raise SchemaError(f"node {node_id!r} has undeclared attribute slot {key!r}")
            if not isinstance(value, str):
                raise FormatError(f"node {node_id!r} attribute {key!r} must be a string")
        nodes[node_id] = NodeData(ti, tuple(attrs.get(slot, "") for slot, _ in slots))

    edges = []
    for i, entry in enumerate(doc["links"]):
        if not isinstance(entry, dict):
            raise FormatError(f"links[{i}] must be an object")
        for key in ("source", "target", "type"):
            if key not in entry:
                raise FormatError(f"links[{i}] missing {key!r}")
        src, dst = entry["source"], entry["target"]
        if src not in nodes:
            raise SchemaError(f"links[{i}] references unknown source node {src!r}")
        if dst not in nodes:
            raise SchemaError(f"links[{i}] references unknown target node {dst!r}")
        type_name = entry["type"]
        if type_name not in schema.edge_types:
            raise SchemaError(f"links[{i}] ({src!r} -> {dst!r}) has undeclared type {type_name!r}")
        ei = schema.edge_type_index(type_name)
        slots = schema.edge_slots(ei)
        attrs = entry.get("attrs", {})
        if not isinstance(attrs, dict):
            raise FormatError(f"links[{i}] attrs must be an object")
        slot_names = {slot for slot, _ in slots}
        for key, value in attrs.items():
            if key not in slot_names:
                raise SchemaError(f"links[{i}] has undeclared attribute slot {key!r}")
            if not isinstance(value, str):
                raise FormatError(f"links[{i}] attribute {key!r} must be a string")
        ts = entry.get("ts")
        if ts is not None and (isinstance(ts, bool) or not isinstance(ts, int)):
            raise FormatError(f"links[{i}] ts must be an integer (nanoseconds)")
        edges.append(EdgeData(src, dst, ei, tuple(attrs.get(slot, "") for slot, _ in slots), ts))

    return Graph(schema, nodes, tuple(edges))


def save_node_link(graph: Graph) -> bytes:
    """Serialize to node-link JSON with a fixed key order (byte-deterministic)."""
    schema = graph.schema
    doc = {
        "directed": True,
        "multigraph": True,
        "nodes": [
            {
                "id": node_id,
                "type": schema.node_types[data.type_index],
                "attrs": {
                    slot: value
                    for (slot, _), value in zip(schema.node_slots(data.type_index), data.attrs)
                },
            }
            for node_id, data in graph.nodes.items()
        ],
        "links": [],
    }
    for edge in graph.edges:
        entry = {
            "source": edge.src,
            "target": edge.dst,
            "type": schema.edge_types[edge.type_index],
        }
        if edge.ts is not None:
            entry["ts"] = edge.ts
        entry["attrs"] = {
            slot: value
            for (slot, _), value in zip(schema.edge_slots(edge.type_index), edge.attrs)
        }
        doc["links"].append(entry)
    return (json.dumps(doc, indent=2, ensure_ascii=True) + "\n").encode("utf-8")


# ---------------------------------------------------------------------------
# Edge ordering and canonical node indexing


@dataclass(frozen=True)
class EdgeOrder:
    policy: str
    permutation: tuple[int, ...]


@dataclass(frozen=True)
class CanonicalIndexing:
    """Dense node numbering by first appearance in the edge order."""

    node_index: dict[str, int]
    order: tuple[str, ...]


def order_edges(graph: Graph, policy: str = DEFAULT_POLICY) -> EdgeOrder:
    """Compute a deterministic edge visiting order.

    timestamp: stable sort by (ts, input index); every edge must carry a ts.
    topological: nodes sorted by Kahn's algorithm (ties and cycle stalls
    broken by lowest node input index), edges sorted by
    (src rank, dst rank, edge type index, input index).
    as-given: identity.
    """
    if policy not in POLICIES:
        raise ValueError(f"unknown ordering policy {policy!r}")
    n = len(graph.edges)
    if policy == "as-given":
        return EdgeOrder(policy, tuple(range(n)))
    if policy == "timestamp":
        for i, edge in enumerate(graph.edges):
            if edge.ts is None:
                raise OrderingError(f"edge #{i} ({edge.src!r} -> {edge.dst!r}) has no timestamp")
        perm = sorted(range(n), key=lambda i: (graph.edges[i].ts, i))
        return EdgeOrder(policy, tuple(perm))

    # topological
    input_index = {node_id: i for i, node_id in enumerate(graph.nodes)}
    indegree = {node_id: 0 for node_id in graph.nodes}
    successors: dict[str, list[str]] = {node_id: [] for node_id in graph.nodes}
    for edge in graph.edges:
        if edge.src == edge.dst:
            continue  # self-loops cannot constrain the node order
        indegree[edge.dst] += 1
        successors[edge.src].append(edge.dst)
    ready = [input_index[v] for v, deg in indegree.items() if deg == 0]
    heapq.heapify(ready)
    node_ids = list(graph.nodes)
    placed: dict[str, int] = {}
    remaining = set(graph.nodes)
    while remaining:
        if ready:
            idx = heapq.heappop(ready)
            v = node_ids[idx]
            if v not in remaining:
                continue
        else:
            # cycle: emit the stalled node with the lowest input index and go on
            v = min(remaining, key=lambda u: input_index[u])
        placed[v] = len(placed)
        remaining.discard(v)
        for w in successors[v]:
            if w in remaining:
                indegree[w] -= 1
                if indegree[w] == 0:
                    heapq.heappush(ready, input_index[w])
    perm = sorted(
        range(n),
        key=lambda i: (
            placed[graph.edges[i].src],
            placed[graph.edges[i].dst],
            graph.edges[i].type_index,
            i,
        ),
    )
    return EdgeOrder(policy, tuple(perm))


def canonical_index(graph: Graph, edge_order: EdgeOrder) -> CanonicalIndexing:
    """Number nodes by first appearance along the edge order (source first);
    nodes untouched by edges follow in input order."""
    if sorted(edge_order.permutation) != list(range(len(graph.edges))):
        raise ValueError("edge_order is not a permutation of the graph's edges")
    index: dict[str, int] = {}
    for i in edge_order.permutation:
        edge = graph.edges[i]
        if edge.src not in index:
            index[edge.src] = len(index)
        if edge.dst not in index:
            index[edge.dst] = len(index)
    for node_id in graph.nodes:
        if node_id not in index:
            index[node_id] = len(index)
    order = tuple(sorted(index, key=index.__getitem__))
    return CanonicalIndexing(index, order)


def canonical_equal(g1: Graph, g2: Graph) -> bool:
    """True iff both graphs encode to the identical token sequence under the
    default ordering policy. This is the repository's graph equality notion;
    it is independent of node id strings."""
    if g1.schema != g2.schema:
        raise SchemaError("canonical_equal requires graphs sharing a schema")
    from .encoder import encode  # deferred: encoder depends on this module
    from .vocab import build_vocab

    budget = max(g1.n_nodes, g2.n_nodes, 1)
    vocab = build_vocab(g1.schema, budget)
    return encode(g1, vocab, policy=DEFAULT_POLICY).ids == encode(g2, vocab, policy=DEFAULT_POLICY).ids


# ---------------------------------------------------------------------------
# Schema files


def save_schema(schema: GraphSchema) -> bytes:
    doc = {
        "node_types": list(schema.node_types),
        "edge_types": list(schema.edge_types),
        "node_attr_slots": {
            t: [list(slot) for slot in schema.node_attr_slots.get(t, ())] for t in schema.node_types
        },
        "edge_attr_slots": {
            t: [list(slot) for slot in schema.edge_attr_slots.get(t, ())] for t in schema.edge_types
        },
        "legal_triples": sorted(list(t) for t in schema.legal_triples),
        "validators": {
            kind: {"pattern": rule.pattern, "semantic": rule.semantic, "default": rule.default}
            for kind, rule in sorted(schema.validators.items())
        },
    }
    return (json.dumps(doc, indent=2, ensure_ascii=True) + "\n").encode("utf-8")


def load_schema(data: bytes | str) -> GraphSchema:
    """Load a schema document. A missing legal_triples key means "no
    restriction" and expands to the full type product; an explicit empty list
    is taken literally."""
    if isinstance(data, bytes):
        data = data.decode("utf-8")
    try:
        doc = json.loads(data)
    except json.JSONDecodeError as exc:
        raise FormatError(f"invalid schema JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise FormatError("schema document must be an object")
    try:
        node_types = tuple(doc["node_types"])
        edge_types = tuple(doc["edge_types"])
    except KeyError as exc:
        raise FormatError(f"schema document missing {exc}") from exc
    validators = {
        kind: AttributeRule(kind, spec["pattern"], spec.get("semantic", "none"), spec.get("default", ""))
        for kind, spec in doc.get("validators", {}).items()
    }
    if "legal_triples" in doc:
        legal = frozenset(tuple(t) for t in doc["legal_triples"])
    else:
        legal = frozenset((s, r, d) for s in node_types for r in edge_types for d in node_types)
    return GraphSchema(
        node_types=node_types,
        edge_types=edge_types,
        node_attr_slots={
            t: tuple((str(s), str(k)) for s, k in slots)
            for t, slots in doc.get("node_attr_slots", {}).items()
        },
        edge_attr_slots={
            t: tuple((str(s), str(k)) for s, k in slots)
            for t, slots in doc.get("edge_attr_slots", {}).items()
        },
        legal_triples=legal,
        validators=validators,
    )


def provenance_schema() -> GraphSchema:
    """The shipped system-activity preset: Process/File/Socket nodes and the
    six syscall-style relations, with Process as the acting source."""
    rules = builtin_rules()
    return GraphSchema(
        node_types=("Process", "File", "Socket"),
        edge_types=("READ", "WRITE", "CREATE", "EXECUTE", "SEND", "RECEIVE"),
        node_attr_slots={
            "Process": (("image", "windows_exe"), ("cmd", "free_text")),
            "File": (("path", "windows_path"),),
            "Socket": (("endpoint", "ip_port"),),
        },
        edge_attr_slots={t: () for t in ("READ", "WRITE", "CREATE", "EXECUTE", "SEND", "RECEIVE")},
        legal_triples=frozenset(
            {
                ("Process", "READ", "File"),
                ("Process", "WRITE", "File"),
                ("Process", "CREATE", "File"),
                ("Process", "CREATE", "Process"),
                ("Process", "EXECUTE", "File"),
                ("Process", "SEND", "Socket"),
                ("Process", "RECEIVE", "Socket"),
            }
        ),
        validators={
            kind: rules[kind]
            for kind in ("windows_exe", "windows_path", "ip_port", "free_text")
        },
    )
