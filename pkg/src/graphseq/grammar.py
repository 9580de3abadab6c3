"""Constrained-decoding automaton for graph token sequences.

Given any prefix, the automaton reports exactly which token ids may come
next, so a sampler can mask logits and never emit a structurally invalid
sequence. `advance` is pure: it returns a fresh state and raises Rejection
for disallowed tokens, so many decode streams can run in parallel.

Node references follow a fresh-node discipline: a NODE token may name any
index already referenced plus exactly one fresh index (the lowest unused).
This keeps node numbering dense by first appearance, so every accepted
sequence has the same canonical indexing the encoder produces.

Optional schema-legality filtering additionally restricts edge/node type
tokens so that no (source type, edge type, destination type) combination
outside the schema's legal set can be generated. Masks look one step ahead
(a token is offered only if some completion exists), which is what makes an
empty mask before <eog> impossible. Parsers run with legality off: illegal
combinations still parse and are left to the repair pass.

Phases: Start, AwaitEdgeOrEnd, AwaitSrcNode, AwaitDstNode, AwaitEdgeType,
AwaitEdgeAttrOpen, InEdgeAttr, AwaitDeclOrNext, AwaitDeclNode,
AwaitNodeType, AwaitNodeAttrOpenOrEnd, InNodeAttr, Done (absorbing).
"""

from __future__ import annotations

from .errors import Rejection
from .vocab import BOE, BOF, BOG, BON, EOF, EOG, EON, Vocabulary

(
    PH_START,
    PH_EDGE_OR_END,
    PH_SRC,
    PH_DST,
    PH_ETYPE,
    PH_EDGE_ATTR_OPEN,
    PH_IN_EDGE_ATTR,
    PH_DECL_OR_NEXT,
    PH_DECL_NODE,
    PH_NTYPE,
    PH_NODE_ATTR_OR_END,
    PH_IN_NODE_ATTR,
    PH_DONE,
) = range(13)

PHASE_NAMES = (
    "Start",
    "AwaitEdgeOrEnd",
    "AwaitSrcNode",
    "AwaitDstNode",
    "AwaitEdgeType",
    "AwaitEdgeAttrOpen",
    "InEdgeAttr",
    "AwaitDeclOrNext",
    "AwaitDeclNode",
    "AwaitNodeType",
    "AwaitNodeAttrOpenOrEnd",
    "InNodeAttr",
    "Done",
)

DEFAULT_MAX_SPAN = 4096


class GrammarState:
    """Immutable-by-convention automaton state (advance returns a new one).

    referenced counts distinct node indices seen so far (they are dense, so
    the set is range(referenced)); types holds the node types declared so
    far, indexed by node index. Nodes referenced but not yet declared are
    exactly range(len(types), referenced), awaiting declaration in order.
    seps_left tracks the 0x1F field separators still required inside the
    current edge-attribute span (its slots share one span), so accepted
    spans always split into the declared arity.
    """

    __slots__ = (
        "phase",
        "referenced",
        "types",
        "src",
        "dst",
        "etype",
        "slots_left",
        "span_len",
        "edge_arity",
        "seps_left",
    )

    def __init__(self, phase, referenced, types, src, dst, etype, slots_left, span_len,
                 edge_arity=0, seps_left=0):
        self.phase = phase
        self.referenced = referenced
        self.types = types
        self.src = src
        self.dst = dst
        self.etype = etype
        self.slots_left = slots_left
        self.span_len = span_len
        self.edge_arity = edge_arity
        self.seps_left = seps_left

    @property
    def phase_name(self) -> str:
        return PHASE_NAMES[self.phase]

    @property
    def seen_nodes(self) -> frozenset[int]:
        return frozenset(range(len(self.types)))

    @property
    def pending_declarations(self) -> tuple[int, ...]:
        return tuple(range(len(self.types), self.referenced))

    def __repr__(self):
        return (
            f"GrammarState({self.phase_name}, referenced={self.referenced}, "
            f"declared={len(self.types)})"
        )


class Grammar:
    def __init__(
        self,
        vocab: Vocabulary,
        *,
        legality: bool | None = None,
        max_span: int | None = DEFAULT_MAX_SPAN,
        allow_isolated: bool = True,
    ):
        self.vocab = vocab
        schema = vocab.schema
        self.budget = vocab.n_nodes
        self.node_base = vocab.node_base
        self.ntype_base = vocab.ntype_base
        self.etype_base = vocab.etype_base
        self.text_base = vocab.text_base
        self.size = vocab.size
        self.n_ntypes = len(schema.node_types)
        self.n_etypes = len(schema.edge_types)
        self.node_slot_counts = tuple(len(schema.node_slots(t)) for t in range(self.n_ntypes))
        self.edge_slot_counts = tuple(len(schema.edge_slots(t)) for t in range(self.n_etypes))
        self.separator_id = self.text_base + 0x1F
        self.legal = tuple(sorted(schema.legal_index_triples()))
        if legality is None:
            legality = bool(self.legal)
        self.legality = legality and bool(self.legal)
        self.max_span = max_span
        self.allow_isolated = allow_isolated
        # Slot separators inside edge-attribute spans are identifiable only
        # under the byte-level payload alphabet; with a custom text tokenizer
        # the span content is left unconstrained.
        self.enforce_edge_seps = getattr(vocab.text_tokenizer, "name", "") == "byte"

    # ------------------------------------------------------------------
    def init_state(self) -> GrammarState:
        return GrammarState(PH_START, 0, (), -1, -1, -1, 0, 0)

    def is_terminal(self, state: GrammarState) -> bool:
        return state.phase == PH_DONE

    # legality predicates ------------------------------------------------
    def _feasible(self, state: GrammarState, idx: int) -> int | None:
        """Declared type of node idx, or None when still unconstrained."""
        return state.types[idx] if 0 <= idx < len(state.types) else None

    def _edge_possible(self, state: GrammarState) -> bool:
        if not self.legality:
            return True
        declared = set(state.types)
        fresh_ok = state.referenced < self.budget
        fresh2_ok = state.referenced + 1 < self.budget
        for ts, _r, td in self.legal:
            if ts in declared and (td in declared or fresh_ok):
                return True
            if fresh_ok and (td in declared or td == ts or fresh2_ok):
                return True
        return False

    def _src_allowed(self, state: GrammarState, i: int) -> bool:
        if not self.legality:
            return True
        declared = set(state.types)
        if i < len(state.types):
            ti = state.types[i]
            fresh_ok = state.referenced < self.budget
            return any(ts == ti and (td in declared or fresh_ok) for ts, _r, td in self.legal)
        # fresh source: the destination may be declared, the source itself
        # (self-loop), or a second fresh node if the budget allows
        fresh2_ok = state.referenced + 1 < self.budget
        return any(td in declared or td == ts or fresh2_ok for ts, _r, td in self.legal)

    def _dst_allowed(self, state: GrammarState, j: int) -> bool:
        if not self.legality:
            return True
        ts_fixed = self._feasible(state, state.src)
        if j < len(state.types):
            tj = state.types[j]
            if j == state.src:
                # self-loop on a declared node: its single type must satisfy (t, r, t)
                return any(r_ts == r_td == tj for r_ts, _r, r_td in self.legal)
            return any(
                (ts_fixed is None or r_ts == ts_fixed) and r_td == tj for r_ts, _r, r_td in self.legal
            )
        if j == state.src:
            # self-loop on an undeclared source
            return any(
                r_ts == r_td and (ts_fixed is None or r_ts == ts_fixed)
                for r_ts, _r, r_td in self.legal
            )
        # fresh destination, any type still reachable
        return any(ts_fixed is None or r_ts == ts_fixed for r_ts, _r, r_td in self.legal)

    def _etype_allowed(self, state: GrammarState, r: int) -> bool:
        if not self.legality:
            return True
        ts_fixed = self._feasible(state, state.src)
        td_fixed = self._feasible(state, state.dst)
        same = state.src == state.dst
        for r_ts, r_r, r_td in self.legal:
            if r_r != r:
                continue
            if ts_fixed is not None and r_ts != ts_fixed:
                continue
            if td_fixed is not None and r_td != td_fixed:
                continue
            if same and r_ts != r_td:
                continue
            return True
        return False

    def _ntype_allowed(self, state: GrammarState, t: int) -> bool:
        if not self.legality or state.etype < 0:
            return True
        q = len(state.types)
        r = state.etype
        if q == state.src and q == state.dst:
            return any(r_ts == t and r_td == t and r_r == r for r_ts, r_r, r_td in self.legal)
        if q == state.src:
            td_fixed = self._feasible(state, state.dst)
            return any(
                r_ts == t and r_r == r and (td_fixed is None or r_td == td_fixed)
                for r_ts, r_r, r_td in self.legal
            )
        if q == state.dst:
            ts_fixed = self._feasible(state, state.src)
            return any(
                r_td == t and r_r == r and (ts_fixed is None or r_ts == ts_fixed)
                for r_ts, r_r, r_td in self.legal
            )
        return True

    # masks ----------------------------------------------------------------
    def _node_candidates(self, state: GrammarState) -> range:
        return range(min(state.referenced + 1, self.budget))

    def allowed_next(self, state: GrammarState) -> frozenset[int]:
        """The exact set of token ids advance would accept."""
        phase = state.phase
        nb = self.node_base
        if phase == PH_START:
            return frozenset((BOG,))
        if phase == PH_EDGE_OR_END:
            out = {EOG}
            if self._edge_possible(state):
                out.add(BOE)
            if self.allow_isolated and state.referenced < self.budget:
                out.add(BON)
            return frozenset(out)
        if phase == PH_SRC:
            return frozenset(
                nb + i for i in self._node_candidates(state) if self._src_allowed(state, i)
            )
        if phase == PH_DST:
            return frozenset(
                nb + j for j in self._node_candidates(state) if self._dst_allowed(state, j)
            )
        if phase == PH_ETYPE:
            return frozenset(
                self.etype_base + r for r in range(self.n_etypes) if self._etype_allowed(state, r)
            )
        if phase == PH_EDGE_ATTR_OPEN:
            return frozenset((BOF,))
        if phase == PH_IN_EDGE_ATTR:
            if self.enforce_edge_seps:
                if state.edge_arity == 0:
                    return frozenset((EOF,))
                if self.max_span is not None and state.span_len >= self.max_span:
                    return frozenset((self.separator_id,)) if state.seps_left else frozenset((EOF,))
                out = set(range(self.text_base, self.size))
                if state.seps_left:
                    return frozenset(out)
                out.discard(self.separator_id)
                out.add(EOF)
                return frozenset(out)
            if self.max_span is not None and state.span_len >= self.max_span:
                return frozenset((EOF,))
            return frozenset(range(self.text_base, self.size)) | {EOF}
        if phase == PH_IN_NODE_ATTR:
            if self.max_span is not None and state.span_len >= self.max_span:
                return frozenset((EOF,))
            return frozenset(range(self.text_base, self.size)) | {EOF}
        if phase == PH_DECL_OR_NEXT:
            return frozenset((BON,))
        if phase == PH_DECL_NODE:
            return frozenset((nb + len(state.types),))
        if phase == PH_NTYPE:
            return frozenset(
                self.ntype_base + t for t in range(self.n_ntypes) if self._ntype_allowed(state, t)
            )
        if phase == PH_NODE_ATTR_OR_END:
            return frozenset((BOF,)) if state.slots_left > 0 else frozenset((EON,))
        return frozenset()  # Done is absorbing

    def allowed_compact(self, state: GrammarState) -> list[tuple[int, int]]:
        """allowed_next as a list of half-open id ranges (samplers iterate
        these instead of materializing large sets for text spans)."""
        phase = state.phase
        if phase == PH_IN_EDGE_ATTR:
            if self.enforce_edge_seps:
                if state.edge_arity == 0:
                    return [(EOF, EOF + 1)]
                if self.max_span is not None and state.span_len >= self.max_span:
                    sep = self.separator_id
                    return [(sep, sep + 1)] if state.seps_left else [(EOF, EOF + 1)]
                if state.seps_left:
                    return [(self.text_base, self.size)]
                sep = self.separator_id
                return [(EOF, EOF + 1), (self.text_base, sep), (sep + 1, self.size)]
            if self.max_span is not None and state.span_len >= self.max_span:
                return [(EOF, EOF + 1)]
            return [(EOF, EOF + 1), (self.text_base, self.size)]
        if phase == PH_IN_NODE_ATTR:
            if self.max_span is not None and state.span_len >= self.max_span:
                return [(EOF, EOF + 1)]
            return [(EOF, EOF + 1), (self.text_base, self.size)]
        if phase == PH_SRC and not self.legality:
            hi = min(state.referenced + 1, self.budget)
            return [(self.node_base, self.node_base + hi)]
        if phase == PH_DST and not self.legality:
            hi = min(state.referenced + 1, self.budget)
            return [(self.node_base, self.node_base + hi)]
        ids = sorted(self.allowed_next(state))
        ranges: list[tuple[int, int]] = []
        for t in ids:
            if ranges and ranges[-1][1] == t:
                ranges[-1] = (ranges[-1][0], t + 1)
            else:
                ranges.append((t, t + 1))
        return ranges

    # transition -------------------------------------------------------------
    def advance(self, state: GrammarState, token: int) -> GrammarState:
        """Deterministic transition; raises Rejection when token is not in
        allowed_next(state)."""
        phase = state.phase
        if 0 <= token < self.size:
            if phase == PH_START:
                if token == BOG:
                    return GrammarState(PH_EDGE_OR_END, 0, (), -1, -1, -1, 0, 0)
            elif phase == PH_EDGE_OR_END:
                if token == BOE and self._edge_possible(state):
                    return GrammarState(
                        PH_SRC, state.referenced, state.types, -1, -1, -1, 0, 0
                    )
                if token == BON and self.allow_isolated and state.referenced < self.budget:
                    return GrammarState(
                        PH_DECL_NODE, state.referenced, state.types, -1, -1, -1, 0, 0
                    )
                if token == EOG:
                    return GrammarState(
                        PH_DONE, state.referenced, state.types, -1, -1, -1, 0, 0
                    )
            elif phase == PH_SRC:
                i = token - self.node_base
                if 0 <= i < min(state.referenced + 1, self.budget) and self._src_allowed(state, i):
                    return GrammarState(
                        PH_DST,
                        state.referenced + (1 if i == state.referenced else 0),
                        state.types,
                        i,
                        -1,
                        -1,
                        0,
                        0,
                    )
            elif phase == PH_DST:
                j = token - self.node_base
                if 0 <= j < min(state.referenced + 1, self.budget) and self._dst_allowed(state, j):
                    return GrammarState(
                        PH_ETYPE,
                        state.referenced + (1 if j == state.referenced else 0),
                        state.types,
                        state.src,
                        j,
                        -1,
                        0,
                        0,
                    )
            elif phase == PH_ETYPE:
                r = token - self.etype_base
                if 0 <= r < self.n_etypes and self._etype_allowed(state, r):
                    arity = self.edge_slot_counts[r]
                    return GrammarState(
                        PH_EDGE_ATTR_OPEN, state.referenced, state.types, state.src, state.dst, r,
                        0, 0, arity, max(arity - 1, 0),
                    )
            elif phase == PH_EDGE_ATTR_OPEN:
                if token == BOF:
                    return GrammarState(
                        PH_IN_EDGE_ATTR, state.referenced, state.types, state.src, state.dst, state.etype,
                        0, 0, state.edge_arity, state.seps_left,
                    )
            elif phase == PH_IN_EDGE_ATTR:
                if token >= self.text_base:
                    is_sep = token == self.separator_id
                    if self.enforce_edge_seps:
                        if state.edge_arity == 0:
                            ok = False
                        elif is_sep:
                            ok = state.seps_left > 0
                        else:
                            ok = self.max_span is None or state.span_len < self.max_span
                        if ok:
                            return GrammarState(
                                PH_IN_EDGE_ATTR,
                                state.referenced,
                                state.types,
                                state.src,
                                state.dst,
                                state.etype,
                                0,
                                state.span_len + 1,
                                state.edge_arity,
                                state.seps_left - (1 if is_sep else 0),
                            )
                    elif self.max_span is None or state.span_len < self.max_span:
                        return GrammarState(
                            PH_IN_EDGE_ATTR,
                            state.referenced,
                            state.types,
                            state.src,
                            state.dst,
                            state.etype,
                            0,
                            state.span_len + 1,
                            state.edge_arity,
                            state.seps_left,
                        )
                if token == EOF and (not self.enforce_edge_seps or state.seps_left == 0):
                    nxt = PH_DECL_OR_NEXT if len(state.types) < state.referenced else PH_EDGE_OR_END
                    return GrammarState(
                        nxt, state.referenced, state.types, state.src, state.dst, state.etype, 0, 0
                    )
            elif phase == PH_DECL_OR_NEXT:
                if token == BON:
                    return GrammarState(
                        PH_DECL_NODE, state.referenced, state.types, state.src, state.dst, state.etype, 0, 0
                    )
            elif phase == PH_DECL_NODE:
                q = len(state.types)
                if token == self.node_base + q:
                    return GrammarState(
                        PH_NTYPE,
                        state.referenced + (1 if q == state.referenced else 0),
                        state.types,
                        state.src,
                        state.dst,
                        state.etype,
                        0,
                        0,
                    )
            elif phase == PH_NTYPE:
                t = token - self.ntype_base
                if 0 <= t < self.n_ntypes and self._ntype_allowed(state, t):
                    return GrammarState(
                        PH_NODE_ATTR_OR_END,
                        state.referenced,
                        state.types + (t,),
                        state.src,
                        state.dst,
                        state.etype,
                        self.node_slot_counts[t],
                        0,
                    )
            elif phase == PH_NODE_ATTR_OR_END:
                if token == BOF and state.slots_left > 0:
                    return GrammarState(
                        PH_IN_NODE_ATTR,
                        state.referenced,
                        state.types,
                        state.src,
                        state.dst,
                        state.etype,
                        state.slots_left,
                        0,
                    )
                if token == EON and state.slots_left == 0:
                    if len(state.types) < state.referenced:
                        nxt = PH_DECL_OR_NEXT
                    else:
                        nxt = PH_EDGE_OR_END
                    return GrammarState(
                        nxt, state.referenced, state.types, state.src, state.dst, state.etype, 0, 0
                    )
            elif phase == PH_IN_NODE_ATTR:
                if token >= self.text_base and (
                    self.max_span is None or state.span_len < self.max_span
                ):
                    return GrammarState(
                        PH_IN_NODE_ATTR,
                        state.referenced,
                        state.types,
                        state.src,
                        state.dst,
                        state.etype,
                        state.slots_left,
                        state.span_len + 1,
                    )
                if token == EOF:
                    return GrammarState(
                        PH_NODE_ATTR_OR_END,
                        state.referenced,
                        state.types,
                        state.src,
                        state.dst,
                        state.etype,
                        state.slots_left - 1,
                        0,
                    )
        raise Rejection(
            f"token {token} not allowed in phase {state.phase_name}",
            token,
            self.allowed_next(state),
        )


def init_state(vocab: Vocabulary, **kwargs) -> GrammarState:
    return Grammar(vocab, **kwargs).init_state()
