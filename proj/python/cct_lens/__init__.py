"""Calling context trees, hot spots and component utilization from enter/exit traces."""

from ._core import (  # noqa: F401
    CctNode,
    TraceError,
    TraceEvent,
    apply_filter,
    avg_per_invocation,
    build_cct,
    build_merged_cct,
    classify,
    component_utilization,
    deserialize_cct,
    diff_snapshots,
    folded_stacks,
    format_ms,
    format_trace_event,
    hotspots,
    parse_trace_line,
    project_call_graph,
    read_trace,
    self_time,
    serialize_cct,
    simulate_preset,
    simulate_spec,
    take_snapshot,
    total_time_table,
    validate_trace,
)
