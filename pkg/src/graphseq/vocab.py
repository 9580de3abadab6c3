"""Closed token vocabulary for the graph codec.

Dense id layout (fixed, documented for external samplers):

    0..6                     <bog> <eog> <bon> <eon> <boe> <bof> <eof>
    7 .. 7+N-1               <node_0> .. <node_{N-1}>
    then one id per node type     <ntype_0> ..
    then one id per edge type     <etype_0> ..
    then the text payload alphabet (byte-level by default, 256 ids)

Attribute text is carried by payload tokens from a pluggable, lossless text
tokenizer. The default maps one token to one UTF-8 byte. In the plain-text
dump format, payload tokens are escaped as %XX so they can never collide
with structural surfaces.
"""

from __future__ import annotations

from dataclasses import dataclass

from .core import GraphSchema
from .errors import FormatError, VocabError

BOG, EOG, BON, EON, BOE, BOF, EOF = range(7)
FIXED_SURFACES = ("<bog>", "<eog>", "<bon>", "<eon>", "<boe>", "<bof>", "<eof>")
N_FIXED = len(FIXED_SURFACES)
DEFAULT_NODE_BUDGET = 512


class ByteTextTokenizer:
    """One payload token per UTF-8 byte; trivially lossless.

    surrogateescape keeps arbitrary byte runs (as produced by unconstrained
    samplers) decodable and re-encodable without loss.
    """

    size = 256
    name = "byte"

    def encode(self, text: str) -> list[int]:
        return list(text.encode("utf-8", "surrogateescape"))

    def decode(self, payload_ids: list[int]) -> str:
        return bytes(payload_ids).decode("utf-8", "surrogateescape")


@dataclass(frozen=True)
class Token:
    """A classified token: kind plus an index for node/type/text kinds."""

    kind: str
    index: int | None = None

    @property
    def surface(self) -> str:
        if self.kind in ("bog", "eog", "bon", "eon", "boe", "bof", "eof"):
            return f"<{self.kind}>"
        if self.kind == "node":
            return f"<node_{self.index}>"
        if self.kind == "ntype":
            return f"<ntype_{self.index}>"
        if self.kind == "etype":
            return f"<etype_{self.index}>"
        return "%%%02X" % self.index


class Vocabulary:
    """Bijection between tokens and dense integer ids for one schema."""

    def __init__(self, schema: GraphSchema, n_nodes: int, text_tokenizer=None):
        if n_nodes <= 0:
            raise VocabError(f"node budget must be >= 1, got {n_nodes}")
        self.schema = schema
        self.n_nodes = n_nodes
        self.text_tokenizer = text_tokenizer if text_tokenizer is not None else ByteTextTokenizer()
        self.node_base = N_FIXED
        self.ntype_base = self.node_base + n_nodes
        self.etype_base = self.ntype_base + len(schema.node_types)
        self.text_base = self.etype_base + len(schema.edge_types)
        self.size = self.text_base + self.text_tokenizer.size
        self._surface_to_id = {s: i for i, s in enumerate(FIXED_SURFACES)}
        for i in range(n_nodes):
            self._surface_to_id[f"<node_{i}>"] = self.node_base + i
        for j in range(len(schema.node_types)):
            self._surface_to_id[f"<ntype_{j}>"] = self.ntype_base + j
        for k in range(len(schema.edge_types)):
            self._surface_to_id[f"<etype_{k}>"] = self.etype_base + k

    @property
    def structural_size(self) -> int:
        return self.text_base

    def classify(self, token_id: int) -> Token:
        if not 0 <= token_id < self.size:
            raise VocabError(f"token id {token_id} outside vocabulary of size {self.size}")
        if token_id < N_FIXED:
            return Token(FIXED_SURFACES[token_id][1:-1])
        if token_id < self.ntype_base:
            return Token("node", token_id - self.node_base)
        if token_id < self.etype_base:
            return Token("ntype", token_id - self.ntype_base)
        if token_id < self.text_base:
            return Token("etype", token_id - self.etype_base)
        return Token("text", token_id - self.text_base)

    def id_of(self, token: Token) -> int:
        if token.kind == "text":
            if not 0 <= token.index < self.text_tokenizer.size:
                raise VocabError(f"payload index {token.index} out of range")
            return self.text_base + token.index
        try:
            return self._surface_to_id[token.surface]
        except KeyError:
            raise VocabError(f"token {token} not in vocabulary") from None

    def surface(self, token_id: int) -> str:
        return self.classify(token_id).surface

    def is_text(self, token_id: int) -> bool:
        return self.text_base <= token_id < self.size

    # text payloads ---------------------------------------------------------
    def tokenize_text(self, text: str) -> list[int]:
        base = self.text_base
        return [base + p for p in self.text_tokenizer.encode(text)]

    def detokenize_text(self, token_ids) -> str:
        base = self.text_base
        payload = []
        for t in token_ids:
            if not base <= t < self.size:
                raise VocabError(f"token id {t} is not a text payload token")
            payload.append(t - base)
        return self.text_tokenizer.decode(payload)

    # external formats ------------------------------------------------------
    def manifest(self) -> dict:
        """Complete ordered id -> surface listing for external samplers."""
        return {
            "version": 1,
            "node_budget": self.n_nodes,
            "structural_size": self.structural_size,
            "size": self.size,
            "text_tokenizer": getattr(self.text_tokenizer, "name", "custom"),
            "tokens": [{"id": i, "surface": self.surface(i)} for i in range(self.size)],
        }

    def to_text_dump(self, token_ids) -> str:
        """Whitespace-separated surfaces; payload tokens escaped as %XX."""
        return " ".join(self.surface(t) for t in token_ids)

    def from_text_dump(self, dump: str) -> list[int]:
        ids = []
        for word in dump.split():
            if word.startswith("%"):
                try:
                    payload = int(word[1:], 16)
                except ValueError:
                    raise FormatError(f"bad payload escape {word!r}") from None
                if not 0 <= payload < self.text_tokenizer.size:
                    raise FormatError(f"payload escape {word!r} out of range")
                ids.append(self.text_base + payload)
            else:
                try:
                    ids.append(self._surface_to_id[word])
                except KeyError:
                    raise FormatError(f"unknown token surface {word!r}") from None
        return ids


def build_vocab(schema: GraphSchema, n_nodes: int = DEFAULT_NODE_BUDGET, text_tokenizer=None) -> Vocabulary:
    return Vocabulary(schema, n_nodes, text_tokenizer)


def classify(token_id: int, vocab: Vocabulary) -> Token:
    return vocab.classify(token_id)


def tokenize_text(text: str, vocab: Vocabulary) -> list[int]:
    return vocab.tokenize_text(text)


def detokenize_text(token_ids, vocab: Vocabulary) -> str:
    return vocab.detokenize_text(token_ids)
