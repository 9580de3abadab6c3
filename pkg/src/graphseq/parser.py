"""Token sequences back to graphs, strictly or with error recovery.

The strict parser accepts exactly the structural grammar (legality
filtering off, unbounded spans) and fails on the first violation. The
recovering parser never fails: disallowed tokens are skipped, except that
the anchors <boe>, <bon> and <bof> force a state transition (a new edge, a
new node declaration, or an attribute span), discarding whatever partial
construct was open. <eog> finalizes at any point, and a missing <eog> is
tolerated. Nodes referenced by committed edges but never declared are
materialized with type index 0 and empty attributes.

Recovery bookkeeping rules (deterministic, exercised by the corruption
harness): a stray <eof>/<eon> is skipped and counted; a <bof> with no
construct open to receive attributes is skipped; a <bof> inside an open
span restarts that span, discarding its accumulated text; re-declaring a
node overwrites its attributes and counts one resync; tokens after <eog>
are skipped (Done is absorbing).
"""

from __future__ import annotations

from dataclasses import dataclass

from .core import EdgeData, Graph, GraphSchema, NodeData
from .errors import Rejection
from .grammar import (
    Grammar,
    PHASE_NAMES,
    PH_DECL_NODE,
    PH_DECL_OR_NEXT,
    PH_DONE,
    PH_DST,
    PH_EDGE_ATTR_OPEN,
    PH_EDGE_OR_END,
    PH_ETYPE,
    PH_IN_EDGE_ATTR,
    PH_IN_NODE_ATTR,
    PH_NODE_ATTR_OR_END,
    PH_NTYPE,
    PH_SRC,
    PH_START,
)
from .rules import SEPARATOR
from .vocab import BOE, BOF, BOG, BON, EOF, EOG, EON, Vocabulary


@dataclass(frozen=True)
class RecoveryReport:
    skipped_positions: tuple[int, ...]
    anchor_resyncs: tuple[tuple[int, str], ...]
    dropped_fragments: int

    @property
    def skipped_tokens(self) -> int:
        return len(self.skipped_positions)

    @property
    def strict(self) -> bool:
        return not self.skipped_positions and not self.anchor_resyncs and self.dropped_fragments == 0

    def to_json(self) -> dict:
        return {
            "strict": self.strict,
            "skipped_tokens": self.skipped_tokens,
            "skipped_positions": list(self.skipped_positions),
            "anchor_resyncs": [[pos, kind] for pos, kind in self.anchor_resyncs],
            "dropped_fragments": self.dropped_fragments,
        }


def _node_id(index: int) -> str:
    return f"n{index}"


def _split_edge_attrs(text: str, arity: int, *, strict: bool) -> tuple[str, ...] | None:
    """Recover edge attribute slots from a single span joined on 0x1F.

    Strict mode returns None on an arity mismatch; lenient mode pads with
    empty strings or folds overflow into the last slot, losing nothing.
    """
    if arity == 0:
        if text:
            return None if strict else ()
        return ()
    parts = text.split(SEPARATOR)
    if len(parts) == arity:
        return tuple(parts)
    if strict:
        return None
    if len(parts) < arity:
        return tuple(parts) + ("",) * (arity - len(parts))
    return tuple(parts[: arity - 1]) + (SEPARATOR.join(parts[arity - 1 :]),)


def parse_strict(tokens, vocab: Vocabulary, schema: GraphSchema | None = None) -> Graph:
    """Decode a grammar-exact sequence; raises Rejection (with position,
    offending token, and the expected id set) on the first violation."""
    schema = schema or vocab.schema
    grammar = Grammar(vocab, legality=False, max_span=None)
    state = grammar.init_state()
    text_base = vocab.text_base

    nodes: dict[str, NodeData] = {}
    edges: list[tuple[int, int, int, tuple[str, ...]]] = []
    span = bytearray()
    node_attrs: list[str] = []
    src = dst = etype = 0
    decl_index = -1
    decl_type = -1
    ids = tokens.ids if hasattr(tokens, "ids") else tokens

    for pos, tok in enumerate(ids):
        phase = state.phase
        try:
            state = grammar.advance(state, tok)
        except Rejection as exc:
            raise Rejection(
                f"token {tok} rejected at position {pos} in phase {PHASE_NAMES[phase]}",
                tok,
                exc.expected,
                position=pos,
            ) from None
        if phase == PH_SRC:
            src = tok - vocab.node_base
        elif phase == PH_DST:
            dst = tok - vocab.node_base
        elif phase == PH_ETYPE:
            etype = tok - vocab.etype_base
        elif phase == PH_EDGE_ATTR_OPEN:
            span = bytearray()
        elif phase == PH_IN_EDGE_ATTR:
            if tok == EOF:
                arity = len(schema.edge_slots(etype))
                attrs = _split_edge_attrs(span.decode("utf-8", "surrogateescape"), arity, strict=True)
                if attrs is None:
                    raise Rejection(
                        f"edge attribute span at position {pos} does not split into {arity} slots",
                        tok,
                        frozenset(),
                        position=pos,
                    )
                edges.append((src, dst, etype, attrs))
            else:
                span.append(tok - text_base)
        elif phase == PH_DECL_NODE:
            decl_index = tok - vocab.node_base
            node_attrs = []
        elif phase == PH_NTYPE:
            decl_type = tok - vocab.ntype_base
        elif phase == PH_NODE_ATTR_OR_END:
            if tok == BOF:
                span = bytearray()
            else:  # EON
                nodes[_node_id(decl_index)] = NodeData(decl_type, tuple(node_attrs))
        elif phase == PH_IN_NODE_ATTR:
            if tok == EOF:
                node_attrs.append(span.decode("utf-8", "surrogateescape"))
            else:
                span.append(tok - text_base)

    if not grammar.is_terminal(state):
        raise Rejection(
            f"sequence ended in phase {state.phase_name}, not terminal",
            -1,
            grammar.allowed_next(state),
            position=len(ids),
        )
    edge_data = tuple(
        EdgeData(_node_id(s), _node_id(d), et, attrs) for s, d, et, attrs in edges
    )
    return Graph(schema, nodes, edge_data)


def parse_recovering(
    tokens,
    vocab: Vocabulary,
    schema: GraphSchema | None = None,
    *,
    max_span: int | None = None,
) -> tuple[Graph, RecoveryReport]:
    """Total decoding: always returns a schema-valid graph plus a report of
    skips, anchor resyncs, and dropped partial constructs."""
    schema = schema or vocab.schema
    node_base = vocab.node_base
    ntype_base = vocab.ntype_base
    etype_base = vocab.etype_base
    text_base = vocab.text_base
    size = vocab.size
    n_ntypes = len(schema.node_types)
    n_etypes = len(schema.edge_types)

    skipped: list[int] = []
    resyncs: list[tuple[int, str]] = []
    fragments = 0

    nodes: dict[int, NodeData] = {}
    node_order: list[int] = []
    edges: list[tuple[int, int, int, tuple[str, ...]]] = []
    pending: list[int] = []  # referenced by committed edges, not yet declared
    pending_set: set[int] = set()

    phase = PH_START
    src = dst = etype = -1
    decl_index = decl_type = -1
    slots_left = 0
    span: bytearray | None = None
    node_attrs: list[str] = []
    throwaway_span = False

    def construct_open() -> bool:
        return phase in (
            PH_SRC,
            PH_DST,
            PH_ETYPE,
            PH_EDGE_ATTR_OPEN,
            PH_IN_EDGE_ATTR,
            PH_DECL_NODE,
            PH_NTYPE,
            PH_NODE_ATTR_OR_END,
            PH_IN_NODE_ATTR,
        )

    def commit_edge() -> None:
        nonlocal span
        arity = len(schema.edge_slots(etype))
        attrs = _split_edge_attrs(bytes(span).decode("utf-8", "surrogateescape"), arity, strict=False)
        edges.append((src, dst, etype, attrs))
        for endpoint in (src, dst):
            if endpoint not in nodes and endpoint not in pending_set:
                pending.append(endpoint)
                pending_set.add(endpoint)
        span = None

    def commit_node() -> None:
        nodes[decl_index] = NodeData(decl_type, tuple(node_attrs))
        if decl_index not in node_order:
            node_order.append(decl_index)
        if decl_index in pending_set:
            pending_set.discard(decl_index)
            pending.remove(decl_index)

    def after_construct() -> int:
        return PH_DECL_OR_NEXT if pending else PH_EDGE_OR_END

    ids = tokens.ids if hasattr(tokens, "ids") else tokens
    for pos, tok in enumerate(ids):
        tok = int(tok)
        if not 0 <= tok < size:
            skipped.append(pos)
            continue
        if phase == PH_DONE:
            skipped.append(pos)
            continue

        # tokens valid in the current phase ------------------------------
        if phase == PH_START and tok == BOG:
            phase = PH_EDGE_OR_END
            continue
        if phase == PH_EDGE_OR_END and tok == BOE:
            phase, src, dst, etype = PH_SRC, -1, -1, -1
            continue
        if phase == PH_EDGE_OR_END and tok == BON:
            phase = PH_DECL_NODE
            continue
        if phase == PH_EDGE_OR_END and tok == EOG:
            phase = PH_DONE
            continue
        if phase == PH_SRC and node_base <= tok < ntype_base:
            src = tok - node_base
            phase = PH_DST
            continue
        if phase == PH_DST and node_base <= tok < ntype_base:
            dst = tok - node_base
            phase = PH_ETYPE
            continue
        if phase == PH_ETYPE and etype_base <= tok < text_base and tok - etype_base < n_etypes:
            etype = tok - etype_base
            phase = PH_EDGE_ATTR_OPEN
            continue
        if phase == PH_EDGE_ATTR_OPEN and tok == BOF:
            span = bytearray()
            phase = PH_IN_EDGE_ATTR
            continue
        if phase == PH_IN_EDGE_ATTR and tok >= text_base:
            if max_span is not None and len(span) >= max_span:
                # runaway span: drop the construct and resync at the next anchor
                fragments += 1
                span = None
                phase = PH_EDGE_OR_END
                skipped.append(pos)
                continue
            span.append(tok - text_base)
            continue
        if phase == PH_IN_EDGE_ATTR and tok == EOF:
            commit_edge()
            phase = after_construct()
            continue
        if phase == PH_DECL_OR_NEXT and tok == BON:
            phase = PH_DECL_NODE
            continue
        if phase == PH_DECL_NODE and node_base <= tok < ntype_base:
            decl_index = tok - node_base
            node_attrs = []
            if decl_index in nodes:
                resyncs.append((pos, "<bon>"))  # re-declaration overwrites
            phase = PH_NTYPE
            continue
        if phase == PH_NTYPE and ntype_base <= tok < etype_base and tok - ntype_base < n_ntypes:
            decl_type = tok - ntype_base
            slots_left = len(schema.node_slots(decl_type))
            phase = PH_NODE_ATTR_OR_END
            continue
        if phase == PH_NODE_ATTR_OR_END and tok == BOF and slots_left > 0:
            span = bytearray()
            throwaway_span = False
            phase = PH_IN_NODE_ATTR
            continue
        if phase == PH_NODE_ATTR_OR_END and tok == EON and slots_left == 0:
            commit_node()
            phase = after_construct()
            continue
        if phase == PH_IN_NODE_ATTR and tok >= text_base:
            if max_span is not None and len(span) >= max_span:
                fragments += 1
                span = None
                phase = PH_EDGE_OR_END
                skipped.append(pos)
                continue
            span.append(tok - text_base)
            continue
        if phase == PH_IN_NODE_ATTR and tok == EOF:
            if not throwaway_span:
                node_attrs.append(bytes(span).decode("utf-8", "surrogateescape"))
                slots_left -= 1
            span = None
            throwaway_span = False
            phase = PH_NODE_ATTR_OR_END
            continue

        # recovery -------------------------------------------------------
        if tok == BOE:
            if construct_open():
                fragments += 1
            resyncs.append((pos, "<boe>"))
            span = None
            phase, src, dst, etype = PH_SRC, -1, -1, -1
            continue
        if tok == BON:
            if construct_open():
                fragments += 1
            resyncs.append((pos, "<bon>"))
            span = None
            phase = PH_DECL_NODE
            continue
        if tok == BOF:
            if phase == PH_IN_NODE_ATTR or phase == PH_IN_EDGE_ATTR:
                # restart the open span, discarding accumulated text
                resyncs.append((pos, "<bof>"))
                span = bytearray()
                continue
            if phase == PH_NODE_ATTR_OR_END:
                # extra span beyond the declared arity: parse and discard
                resyncs.append((pos, "<bof>"))
                span = bytearray()
                throwaway_span = slots_left == 0
                phase = PH_IN_NODE_ATTR
                continue
            skipped.append(pos)
            continue
        if tok == EOG:
            if construct_open():
                fragments += 1
            span = None
            phase = PH_DONE
            continue
        skipped.append(pos)

    if construct_open():
        fragments += 1

    # materialize referenced-but-undeclared nodes with defaults
    default_arity = len(schema.node_slots(0)) if schema.node_types else 0
    for idx in pending:
        nodes[idx] = NodeData(0, ("",) * default_arity)
        node_order.append(idx)

    node_map = {_node_id(i): nodes[i] for i in node_order}
    edge_data = tuple(
        EdgeData(_node_id(s), _node_id(d), et, attrs) for s, d, et, attrs in edges
    )
    graph = Graph(schema, node_map, edge_data)
    report = RecoveryReport(tuple(skipped), tuple(resyncs), fragments)
    return graph, report


def decode_or_default(tokens, vocab: Vocabulary, schema: GraphSchema | None = None) -> Graph:
    """Recovering parse followed by graph repair (attribute defaults, edge
    legality, largest component)."""
    from .validator import repair_graph

    graph, _report = parse_recovering(tokens, vocab, schema)
    return repair_graph(graph)
