#pragma once

#include <cstdint>
#include <istream>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "cctlens/cct.hpp"
#include "cctlens/components.hpp"
#include "cctlens/filters.hpp"
#include "cctlens/metrics.hpp"
#include "cctlens/trace.hpp"

namespace cctlens {

struct AnalysisOptions {
    ParseMode mode = ParseMode::Strict;
    FilterSet filters;
    FilterMode filter_mode = FilterMode::AttributeToParent;
    ComponentCatalog catalog = default_hr_catalog();
    std::optional<std::size_t> max_depth;
};

/// Result of streaming one trace through parse -> build -> filter.
struct Analysis {
    CctForest forest;  ///< per-tid roots and the merged tree, all filtered
    std::string trace_digest;  ///< SHA-256 over the trace lines, each terminated by '\n'
    std::size_t event_count = 0;
};

/// Streams the trace; memory grows with distinct calling contexts, not events.
/// Strict mode throws TraceError on any defect. Lenient-mode repairs are
/// reported through `warn`.
Analysis analyze_trace(std::istream& trace, const AnalysisOptions& options, WarningSink warn = {});
Analysis analyze_trace_file(const std::string& path, const AnalysisOptions& options, WarningSink warn = {});

struct Snapshot {
    std::string label;
    std::uint64_t user_count = 0;
    std::vector<HotSpotRow> hotspots;
    std::vector<ComponentUtilizationRow> components;
    std::string source_trace_digest;

    bool operator==(const Snapshot&) const = default;
};

inline constexpr std::string_view kSnapshotSchema = "cct-lens.snapshot/1";

Snapshot make_snapshot(std::string label, std::uint64_t user_count, const Analysis& analysis,
                       const ComponentCatalog& catalog);
/// Full pipeline over the merged view.
Snapshot take_snapshot(std::string label, std::uint64_t user_count, std::istream& trace,
                       const AnalysisOptions& options = {}, WarningSink warn = {});

std::string serialize_snapshot(const Snapshot& s);
/// Throws std::runtime_error on malformed documents or a foreign schema.
Snapshot deserialize_snapshot(std::string_view document);
Snapshot load_snapshot(const std::string& path);

enum class DiffStatus { Shared, Added, Removed };
std::string_view to_string(DiffStatus status) noexcept;

struct SnapshotDiffRow {
    std::string method;
    DiffStatus status = DiffStatus::Shared;
    std::optional<Rational> avg_a;  ///< ns per invocation
    std::optional<Rational> avg_b;
    /// avg_b / avg_a. Absent for added/removed rows, and for shared rows
    /// where avg_a is zero but avg_b is not.
    std::optional<Rational> ratio;
    std::uint64_t invocations_a = 0;
    std::uint64_t invocations_b = 0;

    bool operator==(const SnapshotDiffRow&) const = default;
};

/// Joins on method. Shared rows come first ordered by |ratio - 1| descending
/// (an undefined ratio sorts as the largest deviation), then added rows,
/// then removed rows; ties by method name.
std::vector<SnapshotDiffRow> diff(const Snapshot& a, const Snapshot& b);

}  // namespace cctlens
