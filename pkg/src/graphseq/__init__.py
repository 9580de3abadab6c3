"""graphseq: lossless graph <-> token sequence codec with grammar-masked
sampling, validation/repair, and distribution-fidelity metrics."""

from .core import (
    CanonicalIndexing,
    DEFAULT_POLICY,
    EdgeData,
    EdgeOrder,
    Graph,
    GraphSchema,
    NodeData,
    canonical_equal,
    canonical_index,
    load_node_link,
    load_schema,
    make_graph,
    order_edges,
    provenance_schema,
    save_node_link,
    save_schema,
)
from .encoder import TokenSequence, compression_report, encode
from .errors import (
    EncodeError,
    FormatError,
    GraphSeqError,
    OrderingError,
    Rejection,
    SchemaError,
    VocabError,
)
from .grammar import Grammar, GrammarState
from .parser import RecoveryReport, decode_or_default, parse_recovering, parse_strict
from .rules import AttributeCheck, AttributeRule, builtin_rules, validate_attribute
from .sampler import GenerationConfig, NGramModel, sample, serve_mask_protocol, train_ngram
from .validator import CorpusRates, corpus_rates, repair_graph
from .vocab import Token, Vocabulary, build_vocab

__version__ = "0.1.0"
