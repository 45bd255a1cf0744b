#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "cctlens/cct.hpp"
#include "cctlens/rational.hpp"

namespace cctlens {

/// Per-method aggregate across all contexts.
struct HotSpotRow {
    std::string method;
    Nanos self_time = 0;
    double self_pct = 0.0;  ///< self_time / table sum of self_time
    std::uint64_t invocations = 0;

    /// Exact self_time / invocations in nanoseconds.
    Rational avg_per_invocation() const;

    bool operator==(const HotSpotRow&) const = default;
};

struct TotalTimeRow {
    std::string method;
    Nanos total_time = 0;  ///< inclusive, summed over contexts
    std::uint64_t calls = 0;

    bool operator==(const TotalTimeRow&) const = default;
};

/// Self time and invocations per method. The synthetic root is left out unless
/// filtering has left self time on it (time of removed top-level frames).
/// Sorted by self_time descending, then method ascending.
std::vector<HotSpotRow> hotspots(const CctNode& root);

/// Throws std::invalid_argument when invocations is 0.
Rational avg_per_invocation(Nanos self_time, std::uint64_t invocations);

/// Sorted by total_time descending, then method ascending.
///
/// Recursive chains add every depth's inclusive time, so a method that calls
/// itself is counted once per level.
std::vector<TotalTimeRow> total_time_table(const CctNode& root);

/// Sum of self_time over rows.
Nanos total_self_time(const std::vector<HotSpotRow>& rows) noexcept;

}  // namespace cctlens
