from ._index import (
    CASSETTE_KIND,
    DEFAULT_TOP_K,
    CallIndex,
    ToolCallRecord,
    arg_features,
    build_index,
    call_digest,
    jaccard,
    load_cassette,
    rank_similar,
    save_cassette,
    scored_similar,
)
from ._server import (
    INVALID_PARAMS,
    INVALID_REQUEST,
    METHOD_NOT_FOUND,
    PARSE_ERROR,
    PROVENANCE_META,
    SESSION_HEADER,
    SET_TASK_CONTEXT,
    TASK_ID_META,
    TIER_META,
    McpServer,
    Session,
    http_app,
    serve_http,
    serve_stdio,
)
from ._simulator import (
    OVERLAY_KIND,
    SimResponse,
    Simulator,
    SimulatorBackend,
    TaskContext,
    Tier,
    TierCounters,
    fuzzy_prompt,
    no_data_payload,
)

__all__ = [
    "CASSETTE_KIND",
    "DEFAULT_TOP_K",
    "CallIndex",
    "ToolCallRecord",
    "arg_features",
    "build_index",
    "call_digest",
    "jaccard",
    "load_cassette",
    "rank_similar",
    "save_cassette",
    "scored_similar",
    "INVALID_PARAMS",
    "INVALID_REQUEST",
    "METHOD_NOT_FOUND",
    "PARSE_ERROR",
    "PROVENANCE_META",
    "SESSION_HEADER",
    "SET_TASK_CONTEXT",
    "TASK_ID_META",
    "TIER_META",
    "McpServer",
    "Session",
    "http_app",
    "serve_http",
    "serve_stdio",
    "OVERLAY_KIND",
    "SimResponse",
    "Simulator",
    "SimulatorBackend",
    "TaskContext",
    "Tier",
    "TierCounters",
    "fuzzy_prompt",
    "no_data_payload",
]
