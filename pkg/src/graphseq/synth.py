"""Seeded synthetic graph generators.

Real system-activity corpora cannot be redistributed, so fuzz corpora and
the two structural families used by the end-to-end experiments are produced
here. All generators are deterministic functions of the supplied
random.Random instance.
"""

from __future__ import annotations

import random

from .core import Graph, GraphSchema, make_graph, provenance_schema

_UNICODE_POOL = (
    "abcdefghijklmnopqrstuvwxyz"
    "ABCDEFGHIJKLMNOPQRSTUVWXYZ0123456789"
    " .,;#$%&()[]{}=+-*'\"`~^"
    "\\/|<>?:!@"
    "\t\n\r"
    "äöüßéèçñπλΩμ帝国漢字支配者様"
    "\u00a0\u2028\u2603\U0001f600\U0001f4a9"
)


def random_text(rng: random.Random, max_len: int = 12, allow_separator: bool = False) -> str:
    pool = _UNICODE_POOL + ("\x1f" if allow_separator else "")
    return "".join(rng.choice(pool) for _ in range(rng.randint(0, max_len)))


_PATH_WORDS = ("Users", "Temp", "data", "logs", "bin", "srv", "cache", "app", "etc")
_FILE_WORDS = ("report", "index", "config", "session", "trace", "dump", "notes")
_EXE_WORDS = ("svchost", "updater", "runner", "helper", "agent", "monitor")
_CMD_WORDS = ("-run", "-quiet", "--level 3", "--once", "-bg", "--sync")


def valid_attr_value(rng: random.Random, kind: str) -> str:
    """A value passing both validation tiers for the built-in kinds."""
    if kind == "windows_exe":
        return "C:\\" + rng.choice(_PATH_WORDS) + "\\" + rng.choice(_EXE_WORDS) + ".exe"
    if kind == "windows_path":
        return (
            "C:\\"
            + rng.choice(_PATH_WORDS)
            + "\\"
            + rng.choice(_FILE_WORDS)
            + rng.choice((".txt", ".log", ".dat"))
        )
    if kind in ("linux_exe", "linux_path"):
        return "/" + rng.choice(_PATH_WORDS).lower() + "/" + rng.choice(_FILE_WORDS)
    if kind == "ip_port":
        return "%d.%d.%d.%d|%d" % (
            rng.randint(1, 223),
            rng.randint(0, 255),
            rng.randint(0, 255),
            rng.randint(1, 254),
            rng.randint(1, 65535),
        )
    return " ".join(rng.sample(_CMD_WORDS, rng.randint(1, 2)))


def random_graph(
    schema: GraphSchema,
    rng: random.Random,
    *,
    n_nodes: int,
    n_edges: int,
    legal_only: bool = True,
    valid_attrs: bool = False,
    with_timestamps: bool = False,
    attr_max_len: int = 12,
) -> Graph:
    """A schema-conformant random multigraph.

    legal_only restricts edges to the schema's legal triples (requires a
    nonempty legal set). valid_attrs draws attribute values that pass the
    validators instead of arbitrary Unicode.
    """

    def value(kind: str) -> str:
        if valid_attrs:
            return valid_attr_value(rng, kind)
        return random_text(rng, attr_max_len)

    node_specs = []
    legal = sorted(schema.legal_triples)
    for i in range(n_nodes):
        if legal_only and legal and i == 0 and n_edges > 0:
            type_name = legal[0][0]  # guarantee one legal source exists
        else:
            type_name = rng.choice(schema.node_types)
        ti = schema.node_type_index(type_name)
        attrs = tuple(value(kind) for _slot, kind in schema.node_slots(ti))
        node_specs.append((f"v{i}", type_name, attrs))
    by_type: dict[str, list[str]] = {}
    for node_id, type_name, _attrs in node_specs:
        by_type.setdefault(type_name, []).append(node_id)

    edge_specs = []
    ts = 0
    attempts = 0
    while len(edge_specs) < n_edges and attempts < n_edges * 8 + 16:
        attempts += 1
        if legal_only and legal:
            src_t, rel, dst_t = rng.choice(legal)
            if not by_type.get(src_t) or not by_type.get(dst_t):
                continue
            src = rng.choice(by_type[src_t])
            dst = rng.choice(by_type[dst_t])
        else:
            if not node_specs:
                break
            src = rng.choice(node_specs)[0]
            dst = rng.choice(node_specs)[0]
            rel = rng.choice(schema.edge_types)
        ei = schema.edge_type_index(rel)
        attrs = tuple(
            value(kind).replace("\x1f", "") for _slot, kind in schema.edge_slots(ei)
        )
        ts += rng.choice((0, 1, 1, 2, 5))
        edge_specs.append((src, dst, rel, attrs, ts if with_timestamps else None))
    return make_graph(schema, node_specs, edge_specs)


def random_provenance_graph(
    rng: random.Random,
    *,
    max_nodes: int = 200,
    max_edges: int = 400,
    valid_attrs: bool = False,
    with_timestamps: bool = False,
) -> Graph:
    """Fuzz-scale system-activity graph; sizes are drawn with a bias toward
    small graphs so large corpora stay fast, up to the given caps."""
    schema = provenance_schema()
    scale = rng.choice((6, 6, 12, 25, 50, max_edges))
    n_edges = min(max_edges, rng.randint(0, scale))
    n_nodes = min(max_nodes, max(1, rng.randint(1, max(2, n_edges + rng.randint(0, 4)))))
    return random_graph(
        schema,
        rng,
        n_nodes=n_nodes,
        n_edges=n_edges,
        legal_only=True,
        valid_attrs=valid_attrs,
        with_timestamps=with_timestamps,
    )


# ---------------------------------------------------------------------------
# Structural families for the end-to-end synthesis experiments.
#
# The attribute pools are closed under n-gram crossover: values of one kind
# share no leading 3-byte context with values of another kind (exe paths use
# the E: drive, file paths the C: drive), so an order-4 model cannot wander
# from one kind's format into another's and break validity.

_STAR_HUB_EXE = ("E:\\sv\\hub.exe", "E:\\sv\\core.exe")
_STAR_CMD = ("spin", "serve")
_STAR_LEAF = ("C:\\dt\\log1.txt", "C:\\dt\\log2.txt", "C:\\dt\\log3.txt", "C:\\dt\\log4.txt")

_CHAIN_EXE = ("E:\\op\\step.exe", "E:\\op\\next.exe")
_CHAIN_CMD = ("fwd", "hop")


def star_graph(rng: random.Random, min_leaves: int = 4, max_leaves: int = 9) -> Graph:
    """One Process hub writing k distinct Files."""
    schema = provenance_schema()
    k = rng.randint(min_leaves, max_leaves)
    nodes = [("p0", "Process", (rng.choice(_STAR_HUB_EXE), rng.choice(_STAR_CMD)))]
    edges = []
    for i in range(k):
        nodes.append((f"f{i}", "File", (rng.choice(_STAR_LEAF),)))
        edges.append(("p0", f"f{i}", "WRITE"))
    return make_graph(schema, nodes, edges)


def chain_graph(rng: random.Random, min_len: int = 5, max_len: int = 10) -> Graph:
    """A Process spawn chain: p0 creates p1 creates p2 ..."""
    schema = provenance_schema()
    k = rng.randint(min_len, max_len)
    nodes = [(f"p{i}", "Process", (rng.choice(_CHAIN_EXE), rng.choice(_CHAIN_CMD))) for i in range(k)]
    edges = [(f"p{i}", f"p{i + 1}", "CREATE") for i in range(k - 1)]
    return make_graph(schema, nodes, edges)


FAMILY_GENERATORS = {"star": star_graph, "chain": chain_graph}


def family_corpus(family: str, n_graphs: int, seed: int) -> list[Graph]:
    rng = random.Random(seed)
    gen = FAMILY_GENERATORS[family]
    return [gen(rng) for _ in range(n_graphs)]
