from ._canonical import (
    DIGEST_ALGORITHM,
    CanonicalizationError,
    NonFiniteNumber,
    canonical_bytes,
    canonical_hash,
    canonical_json,
    canonicalize,
    format_number,
    loads_canonical,
)
from ._tool_spec import (
    MalformedSchema,
    ToolRef,
    ToolSpec,
    TypeMismatch,
    ValidationReport,
    json_type,
    parse_tool_spec,
    validate_args,
)

__all__ = [
    "DIGEST_ALGORITHM",
    "CanonicalizationError",
    "NonFiniteNumber",
    "canonical_bytes",
    "canonical_hash",
    "canonical_json",
    "canonicalize",
    "format_number",
    "loads_canonical",
    "MalformedSchema",
    "ToolRef",
    "ToolSpec",
    "TypeMismatch",
    "ValidationReport",
    "json_type",
    "parse_tool_spec",
    "validate_args",
]
