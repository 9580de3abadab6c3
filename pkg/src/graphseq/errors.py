"""Exception types shared across the package."""

from __future__ import annotations


class GraphSeqError(Exception):
    """Base class for all graphseq errors."""


class SchemaError(GraphSeqError):
    """A graph, file, or rule does not conform to its schema."""


class FormatError(GraphSeqError):
    """Malformed input document (node-link JSON, token dump, model file)."""


class OrderingError(GraphSeqError):
    """An edge ordering policy cannot be applied (e.g. missing timestamps)."""


class EncodeError(GraphSeqError):
    """A graph cannot be serialized (node budget, reserved bytes)."""


class VocabError(GraphSeqError):
    """Invalid vocabulary construction or token lookup."""


class Rejection(GraphSeqError):
    """A token was not allowed by the decoding automaton.

    Carries the offending token id, the set of ids that would have been
    accepted, and (when raised by a parser) the 0-based stream position.
    """

    def __init__(self, message: str, token: int, expected: frozenset[int], position: int | None = None):
        super().__init__(message)
        self.token = token
        self.expected = expected
        self.position = position

    def to_json(self) -> dict:
        return {
            "error": str(self),
            "token": self.token,
            "position": self.position,
            "expected": sorted(self.expected),
        }
