from ._backend import (
    PROTOCOL_VERSION,
    BackendError,
    CallResult,
    McpHttpBackend,
    ToolBackend,
    decode_content,
    error_payload,
)
from ._dag import DAGS_KIND, CallDag, CallNode, DagReport, load_dags, save_dags, validate_dag
from ._explore import (
    DEFAULT_BUDGET,
    DEFAULT_FRONTIER,
    BackendUnavailable,
    BudgetInvalid,
    NoStartCall,
    PlannedCall,
    explore,
    explorer_prompt,
    plan_calls,
)

__all__ = [
    "PROTOCOL_VERSION",
    "BackendError",
    "CallResult",
    "McpHttpBackend",
    "ToolBackend",
    "decode_content",
    "error_payload",
    "DAGS_KIND",
    "CallDag",
    "CallNode",
    "DagReport",
    "load_dags",
    "save_dags",
    "validate_dag",
    "DEFAULT_BUDGET",
    "DEFAULT_FRONTIER",
    "BackendUnavailable",
    "BudgetInvalid",
    "NoStartCall",
    "PlannedCall",
    "explore",
    "explorer_prompt",
    "plan_calls",
]
