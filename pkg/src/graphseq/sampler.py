"""Grammar-masked n-gram sampling and the logit-mask protocol server.

The n-gram model is a stand-in sequence model at desk scale: conditional
counts with add-k smoothing and backoff to shorter contexts, down to a
uniform distribution over the grammar mask. Because every step is masked by
the automaton, any model (including an external one speaking the JSON-lines
protocol) produces only structurally valid sequences.

Conditioning uses a reserved per-class token that acts as never-expiring
context: counts are keyed by (tag, context window), so differently tagged
training sequences never share counts. Untagged lookups use a pooled table.
"""

from __future__ import annotations

import json
import sys
from dataclasses import dataclass

import numpy as np

from .encoder import TokenSequence
from .errors import FormatError, Rejection
from .grammar import Grammar
from .vocab import Vocabulary


class NGramModel:
    def __init__(self, order: int, k: float, vocab_size: int):
        if order < 1:
            raise ValueError("order must be >= 1")
        self.order = order
        self.k = k
        self.vocab_size = vocab_size
        # (tag, context tuple) -> {next token id: count}; tag None pools all
        self.counts: dict[tuple, dict[int, int]] = {}
        self.tags: set[str] = set()

    def _bump(self, key: tuple, token: int) -> None:
        bucket = self.counts.get(key)
        if bucket is None:
            bucket = {}
            self.counts[key] = bucket
        bucket[token] = bucket.get(token, 0) + 1

    def add_sequence(self, ids, tag: str | None = None) -> None:
        if tag is not None:
            self.tags.add(tag)
        n = self.order
        for pos, token in enumerate(ids):
            lo = max(0, pos - (n - 1))
            for start in range(lo, pos + 1):
                ctx = tuple(ids[start:pos])
                self._bump((None, ctx), token)
                if tag is not None:
                    self._bump((tag, ctx), token)

    def weights(self, tag: str | None, history, candidates) -> np.ndarray:
        """Smoothed weights over the candidate ids, backing off from the
        longest matching context down to uniform."""
        history = tuple(history)
        for m in range(min(self.order - 1, len(history)), -1, -1):
            ctx = history[len(history) - m :]
            bucket = self.counts.get((tag, ctx))
            if bucket is None:
                continue
            w = np.array([bucket.get(c, 0) + self.k for c in candidates], dtype=float)
            if w.sum() > 0:
                return w
        return np.ones(len(candidates), dtype=float)

    # persistence ----------------------------------------------------------
    def to_json(self) -> dict:
        entries = []
        for (tag, ctx), bucket in self.counts.items():
            entries.append([tag, list(ctx), sorted(bucket.items())])
        return {
            "format": "graphseq-ngram",
            "version": 1,
            "order": self.order,
            "k": self.k,
            "vocab_size": self.vocab_size,
            "tags": sorted(self.tags),
            "counts": entries,
        }

    @classmethod
    def from_json(cls, doc: dict) -> "NGramModel":
        if doc.get("format") != "graphseq-ngram" or doc.get("version") != 1:
            raise FormatError("not a graphseq-ngram v1 model file")
        model = cls(doc["order"], doc["k"], doc["vocab_size"])
        model.tags = set(doc.get("tags", ()))
        for tag, ctx, items in doc["counts"]:
            model.counts[(tag, tuple(ctx))] = {int(t): int(c) for t, c in items}
        return model


def train_ngram(corpus, order: int, k: float = 0.0001, tags=None) -> NGramModel:
    """Exact history tallies over the corpus; deterministic. ``tags`` is an
    optional per-sequence list of condition labels."""
    corpus = list(corpus)
    if not corpus:
        raise ValueError("training corpus is empty")
    if tags is None:
        tags = [None] * len(corpus)
    if len(tags) != len(corpus):
        raise ValueError("tags must align with the corpus")
    first = corpus[0]
    vocab_size = first.vocab.size if isinstance(first, TokenSequence) else 0
    model = NGramModel(order, k, vocab_size)
    for seq, tag in zip(corpus, tags):
        ids = seq.ids if isinstance(seq, TokenSequence) else tuple(seq)
        model.add_sequence(ids, tag)
    return model


@dataclass(frozen=True)
class GenerationConfig:
    max_tokens: int = 4096
    temperature: float = 1.0
    seed: int = 0
    condition_tag: str | None = None

    def __post_init__(self):
        if self.max_tokens < 2:
            raise ValueError("max_tokens must be >= 2")
        if self.temperature <= 0:
            raise ValueError("temperature must be > 0")


def sample(model: NGramModel, grammar: Grammar, config: GenerationConfig) -> TokenSequence:
    """Draw one masked sequence; deterministic for a fixed config.

    Stops at <eog> or max_tokens; a truncated sequence is returned with
    terminal=False. The output always passes the grammar up to its length.
    """
    rng = np.random.default_rng(config.seed)
    vocab = grammar.vocab
    state = grammar.init_state()
    out: list[int] = []
    tag = config.condition_tag
    greedy = config.temperature < 1e-4
    inv_t = 1.0 / config.temperature
    while not grammar.is_terminal(state) and len(out) < config.max_tokens:
        ranges = grammar.allowed_compact(state)
        if not ranges:
            raise AssertionError("empty grammar mask before terminal state")
        candidates = np.concatenate([np.arange(lo, hi) for lo, hi in ranges])
        history = out[-(model.order - 1) :] if model.order > 1 else []
        w = model.weights(tag, history, candidates)
        if greedy:
            token = int(candidates[int(np.argmax(w))])
        else:
            if config.temperature != 1.0:
                w = w**inv_t
            p = w / w.sum()
            token = int(rng.choice(candidates, p=p))
        state = grammar.advance(state, token)
        out.append(token)
    return TokenSequence(vocab, tuple(out), terminal=grammar.is_terminal(state))


# ---------------------------------------------------------------------------
# JSON-lines mask protocol for external samplers


def serve_mask_protocol(grammar: Grammar, in_stream=None, out_stream=None) -> None:
    """Serve one automaton over JSON lines until the input stream ends.

    Requests: {"op":"reset"} | {"op":"advance","token":id} | {"op":"mask"}.
    Replies: {"state":"ok"|"rejected","allowed":[ids...],"terminal":bool};
    malformed requests get {"state":"error","error":...} and leave the
    automaton untouched.
    """
    in_stream = in_stream if in_stream is not None else sys.stdin
    out_stream = out_stream if out_stream is not None else sys.stdout
    state = grammar.init_state()

    def reply(status: str) -> dict:
        return {
            "state": status,
            "allowed": sorted(grammar.allowed_next(state)),
            "terminal": grammar.is_terminal(state),
        }

    for line in in_stream:
        line = line.strip()
        if not line:
            continue
        try:
            request = json.loads(line)
            op = request["op"]
        except (json.JSONDecodeError, KeyError, TypeError):
            out_stream.write(json.dumps({"state": "error", "error": "malformed request"}) + "\n")
            out_stream.flush()
            continue
        if op == "reset":
            state = grammar.init_state()
            answer = reply("ok")
        elif op == "mask":
            answer = reply("ok")
        elif op == "advance":
            token = request.get("token")
            if not isinstance(token, int) or isinstance(token, bool):
                answer = {"state": "error", "error": "advance requires an integer token"}
            else:
                try:
                    state = grammar.advance(state, token)
                    answer = reply("ok")
                except Rejection:
                    answer = reply("rejected")
        else:
            answer = {"state": "error", "error": f"unknown op {op!r}"}
        out_stream.write(json.dumps(answer) + "\n")
        out_stream.flush()


def save_model(model: NGramModel, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(model.to_json(), fh)
        fh.write("\n")


def load_model(path) -> NGramModel:
    with open(path, "r", encoding="utf-8") as fh:
        return NGramModel.from_json(json.load(fh))
