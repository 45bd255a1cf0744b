#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "cctlens/cct.hpp"
#include "cctlens/components.hpp"
#include "cctlens/metrics.hpp"
#include "cctlens/rational.hpp"
#include "cctlens/snapshot.hpp"

namespace cctlens {

enum class ReportFormat { Text, Csv, Json };
/// Throws std::invalid_argument for anything but text, csv or json.
ReportFormat parse_report_format(std::string_view name);

/// Milliseconds with three significant digits and trailing zeros dropped;
/// integer digits are never rounded away (`1267 ms`, `85.8 ms`, `0.856 ms`).
std::string format_ms(const Rational& nanos);
std::string format_ms(Nanos nanos);
/// Fraction rendered as a percentage with one decimal (`0.414` -> `41.4%`).
std::string format_pct(double fraction);

/// Tables of one analyzed tree.
struct AnalysisTables {
    std::string title;  ///< section heading, e.g. "merged" or "tid 3"
    std::vector<HotSpotRow> hotspots;
    std::vector<TotalTimeRow> totals;
    std::vector<ComponentUtilizationRow> components;
};

AnalysisTables tabulate(std::string title, const CctNode& root, const ComponentCatalog& catalog);

std::string render_hotspots_text(const std::vector<HotSpotRow>& rows);
std::string render_analysis(const std::vector<AnalysisTables>& sections, ReportFormat format);
std::string render_diff(const std::vector<SnapshotDiffRow>& rows, const Snapshot& a, const Snapshot& b,
                        ReportFormat format);
/// Tab-separated `caller callee calls callee_total_ns` rows under a `#` header.
std::string render_edges(const std::vector<CallGraphEdge>& edges);

}  // namespace cctlens
