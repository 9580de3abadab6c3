"""Structural fidelity statistics, MMD distances, and corpus reports.

All six statistics are computed on the undirected simple projection of a
graph (parallel edges collapsed, direction dropped, self-loops removed):

    degree       degree multiset, normalized histogram over [0, max degree]
    clustering   local clustering coefficients, histogram over [0, 1]
    betweenness  exact shortest-path betweenness (Brandes), normalized
    closeness    per-component-scaled closeness (Wasserman-Faust variant)
    katz         Katz centrality, linear solve with spectral-radius guard
    spectral     eigenvalues of the symmetric normalized Laplacian,
                 histogram over [0, 2]

MMD uses the biased V-statistic with a Gaussian kernel on total-variation
normalized, zero-padded histograms; the bandwidth defaults to the median
heuristic over the pooled samples. All of these choices are surfaced as
parameters in the report.
"""

from __future__ import annotations

import math
import random
from collections import Counter
from dataclasses import dataclass, field

import numpy as np

from .core import DEFAULT_POLICY, Graph, canonical_index, order_edges

STAT_NAMES = ("degree", "clustering", "betweenness", "closeness", "katz", "spectral")
STAT_DISPLAY = ("Degree", "Clustering", "Bet. Cen.", "Cls. Cen.", "Katz Cen.", "Spectral")


@dataclass(frozen=True)
class StatParams:
    clustering_bins: int = 100
    centrality_bins: int = 100
    spectral_bins: int = 200
    katz_alpha: float = 0.01
    sigma: float | None = None  # None selects the median heuristic


def simple_projection(graph: Graph) -> list[set[int]]:
    """Undirected simple projection as adjacency sets over canonical indices."""
    indexing = canonical_index(graph, order_edges(graph, "as-given"))
    idx = indexing.node_index
    adj: list[set[int]] = [set() for _ in range(len(idx))]
    for e in graph.edges:
        u, v = idx[e.src], idx[e.dst]
        if u == v:
            continue
        adj[u].add(v)
        adj[v].add(u)
    return adj


# ---------------------------------------------------------------------------
# raw per-node statistic values


def degree_values(adj: list[set[int]]) -> np.ndarray:
    return np.array([len(nbrs) for nbrs in adj], dtype=float)


def clustering_values(adj: list[set[int]]) -> np.ndarray:
    out = np.zeros(len(adj))
    for v, nbrs in enumerate(adj):
        k = len(nbrs)
        if k < 2:
            continue
        links = sum(len(adj[u] & nbrs) for u in nbrs)  # each triangle edge twice
        out[v] = links / (k * (k - 1))
    return out


def betweenness_values(adj: list[set[int]]) -> np.ndarray:
    """Brandes' exact algorithm; normalized by 1/((n-1)(n-2)) over ordered pairs."""
    n = len(adj)
    bc = np.zeros(n)
    for s in range(n):
        stack: list[int] = []
        preds: list[list[int]] = [[] for _ in range(n)]
        sigma = [0] * n
        sigma[s] = 1
        dist = [-1] * n
        dist[s] = 0
        queue = [s]
        head = 0
        while head < len(queue):
            v = queue[head]
            head += 1
            stack.append(v)
            for w in adj[v]:
                if dist[w] < 0:
                    dist[w] = dist[v] + 1
                    queue.append(w)
                if dist[w] == dist[v] + 1:
                    sigma[w] += sigma[v]
                    preds[w].append(v)
        delta = [0.0] * n
        while stack:
            w = stack.pop()
            coeff = (1.0 + delta[w]) / sigma[w]
            for v in preds[w]:
                delta[v] += sigma[v] * coeff
            if w != s:
                bc[w] += delta[w]
    if n > 2:
        bc /= (n - 1) * (n - 2)
    return bc


def closeness_values(adj: list[set[int]]) -> np.ndarray:
    """(r / sum of distances) * (r / (n-1)), with r the count of nodes
    reachable from v (excluding v); disconnected graphs get the usual
    component scaling."""
    n = len(adj)
    out = np.zeros(n)
    for s in range(n):
        dist = {s: 0}
        queue = [s]
        head = 0
        total = 0
        while head < len(queue):
            v = queue[head]
            head += 1
            for w in adj[v]:
                if w not in dist:
                    dist[w] = dist[v] + 1
                    total += dist[w]
                    queue.append(w)
        r = len(dist) - 1
        if r > 0 and n > 1:
            out[s] = (r / total) * (r / (n - 1))
    return out


def katz_values(adj: list[set[int]], alpha: float = 0.01) -> tuple[np.ndarray, float]:
    """L2-normalized solution of (I - alpha A) x = 1. When alpha is not below
    the inverse spectral radius it is halved until it is; the alpha actually
    used is returned alongside the values."""
    n = len(adj)
    a = np.zeros((n, n))
    for v, nbrs in enumerate(adj):
        for u in nbrs:
            a[v, u] = 1.0
    if n:
        radius = float(np.max(np.abs(np.linalg.eigvalsh(a)))) if a.any() else 0.0
    else:
        radius = 0.0
    used = alpha
    while radius > 0 and used >= 1.0 / radius:
        used /= 2.0
    x = np.linalg.solve(np.eye(n) - used * a, np.ones(n)) if n else np.zeros(0)
    norm = float(np.linalg.norm(x))
    if norm > 0:
        x = x / norm
    return x, used


def spectral_values(adj: list[set[int]]) -> np.ndarray:
    """Eigenvalues of I - D^(-1/2) A D^(-1/2); isolated nodes contribute 0."""
    n = len(adj)
    if n == 0:
        return np.zeros(0)
    deg = np.array([len(nbrs) for nbrs in adj], dtype=float)
    lap = np.zeros((n, n))
    inv_sqrt = np.where(deg > 0, 1.0 / np.sqrt(np.where(deg > 0, deg, 1.0)), 0.0)
    for v, nbrs in enumerate(adj):
        if deg[v] > 0:
            lap[v, v] = 1.0
        for u in nbrs:
            lap[v, u] = -inv_sqrt[v] * inv_sqrt[u]
    return np.sort(np.linalg.eigvalsh(lap))


# ---------------------------------------------------------------------------
# MMD-ready distribution vectors


def stat_vector(graph: Graph, statistic: str, params: StatParams | None = None) -> np.ndarray:
    """Distribution vector (histogram) for one statistic; empty graphs yield
    an empty vector. Histograms are normalized to sum to 1."""
    params = params or StatParams()
    adj = simple_projection(graph)
    if not adj:
        return np.zeros(0)
    if statistic == "degree":
        degs = degree_values(adj).astype(int)
        hist = np.bincount(degs).astype(float)
    elif statistic == "clustering":
        hist = np.histogram(clustering_values(adj), bins=params.clustering_bins, range=(0.0, 1.0))[
            0
        ].astype(float)
    elif statistic == "betweenness":
        hist = np.histogram(
            betweenness_values(adj), bins=params.centrality_bins, range=(0.0, 1.0)
        )[0].astype(float)
    elif statistic == "closeness":
        hist = np.histogram(
            closeness_values(adj), bins=params.centrality_bins, range=(0.0, 1.0)
        )[0].astype(float)
    elif statistic == "katz":
        values, _used = katz_values(adj, params.katz_alpha)
        hist = np.histogram(values, bins=params.centrality_bins, range=(0.0, 1.0))[0].astype(float)
    elif statistic == "spectral":
        values = np.clip(spectral_values(adj), 0.0, 2.0)
        hist = np.histogram(values, bins=params.spectral_bins, range=(0.0, 2.0))[0].astype(float)
    else:
        raise ValueError(f"unknown statistic {statistic!r}")
    total = hist.sum()
    return hist / total if total > 0 else hist


def _pad_and_normalize(samples: list[np.ndarray]) -> np.ndarray:
    width = max((len(s) for s in samples), default=0)
    mat = np.zeros((len(samples), width))
    for i, s in enumerate(samples):
        mat[i, : len(s)] = s
    sums = mat.sum(axis=1, keepdims=True)
    np.divide(mat, sums, out=mat, where=sums > 0)
    return mat


def median_bandwidth(samples_a: list[np.ndarray], samples_b: list[np.ndarray]) -> float:
    """Median pairwise Euclidean distance over the pooled samples; 1.0 when
    degenerate (fewer than two samples or all-identical)."""
    pooled = _pad_and_normalize(list(samples_a) + list(samples_b))
    m = len(pooled)
    if m < 2:
        return 1.0
    sq = np.sum(pooled**2, axis=1)
    d2 = np.maximum(sq[:, None] + sq[None, :] - 2.0 * pooled @ pooled.T, 0.0)
    dists = np.sqrt(d2[np.triu_indices(m, k=1)])
    med = float(np.median(dists))
    return med if med > 0 else 1.0


def mmd(
    samples_a: list[np.ndarray],
    samples_b: list[np.ndarray],
    kernel: str = "gaussian",
    sigma: float | None = None,
) -> float:
    """Biased V-statistic MMD estimate (square root of the squared form).

    Vectors are zero-padded to a common length and total-variation
    normalized; the Gaussian bandwidth defaults to the median heuristic.
    A callable kernel(x, y) -> float may be supplied instead of "gaussian".
    """
    if not samples_a or not samples_b:
        raise ValueError("mmd requires nonempty sample lists")
    samples_a = [np.asarray(s, dtype=float) for s in samples_a]
    samples_b = [np.asarray(s, dtype=float) for s in samples_b]
    both = _pad_and_normalize(samples_a + samples_b)
    a = both[: len(samples_a)]
    b = both[len(samples_a) :]
    if callable(kernel):
        kaa = np.array([[kernel(x, y) for y in a] for x in a])
        kbb = np.array([[kernel(x, y) for y in b] for x in b])
        kab = np.array([[kernel(x, y) for y in b] for x in a])
    elif kernel == "gaussian":
        if sigma is None:
            sigma = median_bandwidth(samples_a, samples_b)

        def gram(x, y):
            sqx = np.sum(x**2, axis=1)
            sqy = np.sum(y**2, axis=1)
            d2 = np.maximum(sqx[:, None] + sqy[None, :] - 2.0 * x @ y.T, 0.0)
            return np.exp(-d2 / (2.0 * sigma**2))

        kaa, kbb, kab = gram(a, a), gram(b, b), gram(a, b)
    else:
        raise ValueError(f"unknown kernel {kernel!r}")
    value = float(kaa.mean() + kbb.mean() - 2.0 * kab.mean())
    return math.sqrt(max(value, 0.0))


@dataclass(frozen=True)
class MetricReport:
    mmd_values: dict[str, float]
    n_real: int
    n_synth: int
    params: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        return {
            "mmd": dict(self.mmd_values),
            "n_real": self.n_real,
            "n_synth": self.n_synth,
            "params": dict(self.params),
        }

    def to_table(self) -> str:
        cells = [f"{self.mmd_values[name]:.4f}" for name in STAT_NAMES]
        widths = [max(len(h), len(c)) for h, c in zip(STAT_DISPLAY, cells)]
        head = "  ".join(h.rjust(w) for h, w in zip(STAT_DISPLAY, widths))
        row = "  ".join(c.rjust(w) for c, w in zip(cells, widths))
        return head + "\n" + row


def structure_report(
    real_corpus: list[Graph], synth_corpus: list[Graph], params: StatParams | None = None
) -> MetricReport:
    """Six MMD distances between the corpora, one per statistic. Graphs with
    no nodes are excluded from the samples (they have no distributions)."""
    if not real_corpus or not synth_corpus:
        raise ValueError("both corpora must be nonempty")
    params = params or StatParams()
    values: dict[str, float] = {}
    sigmas: dict[str, float] = {}
    for name in STAT_NAMES:
        real = [stat_vector(g, name, params) for g in real_corpus if g.n_nodes > 0]
        synth = [stat_vector(g, name, params) for g in synth_corpus if g.n_nodes > 0]
        if not real or not synth:
            raise ValueError("corpus contains no nonempty graphs")
        sigma = params.sigma if params.sigma is not None else median_bandwidth(real, synth)
        sigmas[name] = sigma
        values[name] = mmd(real, synth, "gaussian", sigma=sigma)
    return MetricReport(
        mmd_values=values,
        n_real=len(real_corpus),
        n_synth=len(synth_corpus),
        params={
            "kernel": "gaussian",
            "estimator": "biased-v",
            "sigma": sigmas,
            "clustering_bins": params.clustering_bins,
            "centrality_bins": params.centrality_bins,
            "spectral_bins": params.spectral_bins,
            "katz_alpha": params.katz_alpha,
        },
    )


# ---------------------------------------------------------------------------
# random-walk documents and the bag-of-tokens proxy


def walk_document(graph: Graph, n_walks: int = 100, max_len: int = 10, rng_seed: int = 0) -> list[str]:
    """Log of n_walks random walks of exactly max_len node visits each.

    Every visit appends the node's type name and attribute values; every
    traversed edge appends its type name. Dead ends jump to a uniformly
    random node (without emitting an edge) so documents have stable length.
    Deterministic for a fixed seed.
    """
    if graph.n_nodes == 0:
        raise ValueError("walk_document requires a nonempty graph")
    rng = random.Random(rng_seed)
    schema = graph.schema
    node_ids = list(graph.nodes)
    out_edges: dict[str, list] = {node_id: [] for node_id in node_ids}
    for e in graph.edges:
        out_edges[e.src].append(e)
    doc: list[str] = []

    def visit(node_id: str) -> None:
        data = graph.nodes[node_id]
        doc.append(schema.node_types[data.type_index])
        doc.extend(data.attrs)

    for _ in range(n_walks):
        current = rng.choice(node_ids)
        visit(current)
        for _step in range(max_len - 1):
            choices = out_edges[current]
            if choices:
                edge = rng.choice(choices)
                doc.append(schema.edge_types[edge.type_index])
                current = edge.dst
            else:
                current = rng.choice(node_ids)
            visit(current)
    return doc


def bow_cosine(doc_a: list[str], doc_b: list[str]) -> float:
    """Cosine of term-frequency vectors over the union vocabulary."""
    if not doc_a or not doc_b:
        raise ValueError("bow_cosine requires nonempty documents")
    ca, cb = Counter(doc_a), Counter(doc_b)
    dot = sum(ca[t] * cb[t] for t in ca.keys() & cb.keys())
    na = sum(c * c for c in ca.values())
    nb = sum(c * c for c in cb.values())
    return dot / math.sqrt(na * nb)


def dataset_stats(corpus: list[Graph], vocab) -> dict:
    """Corpus histograms: node counts, encoded token counts, node types."""
    from .encoder import encode

    node_counts = Counter(g.n_nodes for g in corpus)
    token_counts = Counter(len(encode(g, vocab, policy=DEFAULT_POLICY)) for g in corpus)
    type_counts: Counter[str] = Counter()
    for g in corpus:
        for data in g.nodes.values():
            type_counts[g.schema.node_types[data.type_index]] += 1
    return {
        "node_count_hist": sorted([v, c] for v, c in node_counts.items()),
        "token_count_hist": sorted([v, c] for v, c in token_counts.items()),
        "node_type_dist": [[t, type_counts.get(t, 0)] for t in (corpus[0].schema.node_types if corpus else ())],
    }
