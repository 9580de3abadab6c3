"""Graph repair and corpus-level rate metrics.

Repair applies, in order: removal of edges whose (source type, edge type,
destination type) is not legal; replacement of attribute values failing
either validation tier by the rule defaults; retention of the largest
weakly-connected component (ties broken by lowest canonical node index).
Repair is idempotent and never adds edges.

Corpus rates compare a generated corpus against a reference corpus:
validity (pluggable predicate), novelty (canonical-encoding hash not seen
in the reference), emptiness, and per-attribute-kind valid rates.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass

from .core import (
    DEFAULT_POLICY,
    Graph,
    GraphSchema,
    canonical_equal,
    canonical_index,
    order_edges,
)
from .rules import AttributeCheck, AttributeRule, validate_attribute  # re-exported
from .vocab import DEFAULT_NODE_BUDGET, build_vocab

__all__ = [
    "AttributeCheck",
    "AttributeRule",
    "CorpusRates",
    "corpus_rates",
    "canonical_hash",
    "load_rules",
    "repair_graph",
    "save_rules",
    "validate_attribute",
    "VALIDITY_PREDICATES",
]


def _weak_components(graph: Graph) -> list[set[str]]:
    neighbors: dict[str, set[str]] = {node_id: set() for node_id in graph.nodes}
    for edge in graph.edges:
        neighbors[edge.src].add(edge.dst)
        neighbors[edge.dst].add(edge.src)
    seen: set[str] = set()
    components = []
    for start in graph.nodes:
        if start in seen:
            continue
        stack = [start]
        comp = set()
        while stack:
            v = stack.pop()
            if v in comp:
                continue
            comp.add(v)
            stack.extend(neighbors[v] - comp)
        seen |= comp
        components.append(comp)
    return components


def is_weakly_connected(graph: Graph) -> bool:
    return len(_weak_components(graph)) <= 1


def repair_graph(graph: Graph, schema: GraphSchema | None = None) -> Graph:
    schema = schema or graph.schema
    legal = schema.legal_index_triples()

    edges = tuple(
        e
        for e in graph.edges
        if (graph.nodes[e.src].type_index, e.type_index, graph.nodes[e.dst].type_index) in legal
    )

    def fix_values(slots, values):
        fixed = []
        for (slot, kind), value in zip(slots, values):
            rule = schema.rule_for_kind(kind)
            fixed.append(value if rule.validate(value).ok else rule.default)
        return tuple(fixed)

    nodes = {
        node_id: type(data)(data.type_index, fix_values(schema.node_slots(data.type_index), data.attrs))
        for node_id, data in graph.nodes.items()
    }
    edges = tuple(
        type(e)(e.src, e.dst, e.type_index, fix_values(schema.edge_slots(e.type_index), e.attrs), e.ts)
        for e in edges
    )

    stage2 = Graph(schema, nodes, edges)
    components = _weak_components(stage2)
    if len(components) <= 1:
        return stage2
    indexing = canonical_index(stage2, order_edges(stage2, "as-given"))
    keep = min(components, key=lambda c: (-len(c), min(indexing.node_index[v] for v in c)))
    kept_nodes = {node_id: data for node_id, data in stage2.nodes.items() if node_id in keep}
    kept_edges = tuple(e for e in stage2.edges if e.src in keep and e.dst in keep)
    return Graph(schema, kept_nodes, kept_edges)


# ---------------------------------------------------------------------------
# Validity predicates (pluggable; benchmark datasets carry their own logic)


def _repair_stable_and_nonempty(graph: Graph) -> bool:
    return not graph.is_empty() and canonical_equal(repair_graph(graph), graph)


def _legality_and_attributes(graph: Graph) -> bool:
    schema = graph.schema
    legal = schema.legal_index_triples()
    for e in graph.edges:
        if (graph.nodes[e.src].type_index, e.type_index, graph.nodes[e.dst].type_index) not in legal:
            return False
        for (slot, kind), value in zip(schema.edge_slots(e.type_index), e.attrs):
            if not schema.rule_for_kind(kind).validate(value).ok:
                return False
    for data in graph.nodes.values():
        for (slot, kind), value in zip(schema.node_slots(data.type_index), data.attrs):
            if not schema.rule_for_kind(kind).validate(value).ok:
                return False
    return True


def _nonempty_connected(graph: Graph) -> bool:
    return bool(graph.nodes) and is_weakly_connected(graph)


VALIDITY_PREDICATES = {
    "repair-stable": _repair_stable_and_nonempty,
    "legality-and-attributes": _legality_and_attributes,
    "nonempty-connected": _nonempty_connected,
}


# ---------------------------------------------------------------------------
# Corpus rates


@dataclass(frozen=True)
class CorpusRates:
    pct_valid: float
    pct_novel: float
    pct_novel_and_valid: float
    pct_empty: float
    attribute_valid: dict[str, float]
    n_generated: int
    n_reference: int

    def to_json(self) -> dict:
        return {
            "pct_valid": self.pct_valid,
            "pct_novel_and_valid": self.pct_novel_and_valid,
            "pct_novel": self.pct_novel,
            "pct_empty": self.pct_empty,
            "attribute_valid": dict(self.attribute_valid),
            "n_generated": self.n_generated,
            "n_reference": self.n_reference,
        }

    def to_table(self) -> str:
        headers = ["% Valid Graphs", "% Novel & Valid Graphs", "% Novel Graphs", "% Empty Graphs"]
        values = [self.pct_valid, self.pct_novel_and_valid, self.pct_novel, self.pct_empty]
        cells = [f"{v:.2f}" for v in values]
        widths = [max(len(h), len(c)) for h, c in zip(headers, cells)]
        head = "  ".join(h.rjust(w) for h, w in zip(headers, widths))
        row = "  ".join(c.rjust(w) for c, w in zip(cells, widths))
        return head + "\n" + row


def canonical_hash(graph: Graph, vocab) -> str:
    """Hash of the canonical encoding (node-id independent; edge order kept)."""
    from .encoder import encode

    seq = encode(graph, vocab, policy=DEFAULT_POLICY)
    return hashlib.sha256(vocab.to_text_dump(seq.ids).encode("ascii")).hexdigest()


def corpus_rates(
    generated: list[Graph],
    reference: list[Graph],
    validity_predicate=None,
) -> CorpusRates:
    """Rates over a generated corpus versus a reference corpus.

    valid: per the predicate (default: survives repair unchanged and is
    nonempty). novel: canonical-encoding hash absent from the reference.
    empty: zero nodes and zero edges. Percentages are computed as
    100 * count / total so planted integer ratios reproduce exactly.
    """
    if validity_predicate is None:
        validity_predicate = VALIDITY_PREDICATES["repair-stable"]
    elif isinstance(validity_predicate, str):
        validity_predicate = VALIDITY_PREDICATES[validity_predicate]
    n = len(generated)
    if n == 0:
        return CorpusRates(0.0, 0.0, 0.0, 0.0, {}, 0, len(reference))

    budget = max(
        [DEFAULT_NODE_BUDGET]
        + [g.n_nodes for g in generated]
        + [g.n_nodes for g in reference]
    )
    schema = generated[0].schema
    vocab = build_vocab(schema, budget)
    reference_hashes = {canonical_hash(g, vocab) for g in reference}

    n_valid = n_novel = n_both = n_empty = 0
    for g in generated:
        valid = bool(validity_predicate(g))
        novel = canonical_hash(g, vocab) not in reference_hashes
        n_valid += valid
        n_novel += novel
        n_both += valid and novel
        n_empty += g.is_empty()

    attr_totals: dict[str, int] = {}
    attr_passes: dict[str, int] = {}
    for g in generated:
        for data in g.nodes.values():
            for (slot, kind), value in zip(schema.node_slots(data.type_index), data.attrs):
                attr_totals[kind] = attr_totals.get(kind, 0) + 1
                attr_passes[kind] = attr_passes.get(kind, 0) + schema.rule_for_kind(kind).validate(value).ok
        for e in g.edges:
            for (slot, kind), value in zip(schema.edge_slots(e.type_index), e.attrs):
                attr_totals[kind] = attr_totals.get(kind, 0) + 1
                attr_passes[kind] = attr_passes.get(kind, 0) + schema.rule_for_kind(kind).validate(value).ok

    return CorpusRates(
        pct_valid=100.0 * n_valid / n,
        pct_novel=100.0 * n_novel / n,
        pct_novel_and_valid=100.0 * n_both / n,
        pct_empty=100.0 * n_empty / n,
        attribute_valid={k: 100.0 * attr_passes[k] / attr_totals[k] for k in sorted(attr_totals)},
        n_generated=n,
        n_reference=len(reference),
    )


# ---------------------------------------------------------------------------
# Rules files


def save_rules(rules: dict[str, AttributeRule] | list[AttributeRule]) -> bytes:
    items = rules.values() if isinstance(rules, dict) else rules
    doc = [
        {"kind": r.kind, "pattern": r.pattern, "semantic": r.semantic, "default": r.default}
        for r in items
    ]
    return (json.dumps(doc, indent=2, ensure_ascii=True) + "\n").encode("utf-8")


def load_rules(data: bytes | str) -> dict[str, AttributeRule]:
    if isinstance(data, bytes):
        data = data.decode("utf-8")
    doc = json.loads(data)
    rules = [
        AttributeRule(item["kind"], item["pattern"], item.get("semantic", "none"), item.get("default", ""))
        for item in doc
    ]
    return {r.kind: r for r in rules}
