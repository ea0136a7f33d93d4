"""Python bindings for the largegt C++ core."""

from ._core import (
    ContractViolation,
    FormatError,
    Graph,
    LargeGtError,
    ParseError,
    BoundsError,
    StateError,
    ValidationError,
    __version__,
    build_token_batch,
    evaluate,
    generate_sbm,
    precompute_context,
    sample_local_nodes,
    train,
)

__all__ = [
    "ContractViolation",
    "FormatError",
    "Graph",
    "LargeGtError",
    "ParseError",
    "BoundsError",
    "StateError",
    "ValidationError",
    "__version__",
    "build_token_batch",
    "evaluate",
    "generate_sbm",
    "precompute_context",
    "sample_local_nodes",
    "train",
]
