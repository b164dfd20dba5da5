from ._graph import (
    GRAPH_KIND,
    Confidence,
    GraphEdge,
    ToolGraph,
    build_graph,
    edge_prompt,
    eligible_start_tools,
    judge_edge,
    load_graph,
    prefilter_pair,
    save_graph,
    successor_frontier,
)

__all__ = [
    "GRAPH_KIND",
    "Confidence",
    "GraphEdge",
    "ToolGraph",
    "build_graph",
    "edge_prompt",
    "eligible_start_tools",
    "judge_edge",
    "load_graph",
    "prefilter_pair",
    "save_graph",
    "successor_frontier",
]
