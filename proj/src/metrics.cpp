#include "cctlens/metrics.hpp"

#include <algorithm>
#include <map>
#include <stdexcept>

namespace cctlens {

namespace {

struct Accum {
    Nanos time = 0;
    std::uint64_t invocations = 0;
};

template <typename Fn>
void for_each_descendant(const CctNode& root, Fn&& fn) {
    std::vector<const CctNode*> todo;
    for (const auto& c : root.children) {
        todo.push_back(&c);
    }
    while (!todo.empty()) {
        const CctNode* n = todo.back();
        todo.pop_back();
        fn(*n);
        for (const auto& c : n->children) {
            todo.push_back(&c);
        }
    }
}

}  // namespace

Rational HotSpotRow::avg_per_invocation() const {
    return cctlens::avg_per_invocation(self_time, invocations);
}

Rational avg_per_invocation(Nanos self_time, std::uint64_t invocations) {
    if (invocations == 0) {
        throw std::invalid_argument("average per invocation needs at least one invocation");
    }
    return Rational(self_time, static_cast<std::int64_t>(invocations));
}

std::vector<HotSpotRow> hotspots(const CctNode& root) {
    std::map<std::string, Accum, std::less<>> by_method;
    for_each_descendant(root, [&](const CctNode& n) {
        auto& a = by_method[n.method];
        a.time += self_time(n);
        a.invocations += n.invocations;
    });
    // Time of filtered-out top-level frames stays on the root; keep it visible
    // so the table still accounts for every nanosecond.
    if (const Nanos orphaned = self_time(root); orphaned != 0) {
        auto& a = by_method[root.method];
        a.time += orphaned;
        a.invocations += root.invocations;
    }

    std::vector<HotSpotRow> rows;
    rows.reserve(by_method.size());
    Nanos sum = 0;
    for (const auto& [method, a] : by_method) {
        rows.push_back(HotSpotRow{method, a.time, 0.0, a.invocations});
        sum += a.time;
    }
    for (auto& r : rows) {
        r.self_pct = sum == 0 ? 0.0 : static_cast<double>(r.self_time) / static_cast<double>(sum);
    }
    std::stable_sort(rows.begin(), rows.end(), [](const HotSpotRow& a, const HotSpotRow& b) {
        return a.self_time > b.self_time;
    });
    return rows;
}

std::vector<TotalTimeRow> total_time_table(const CctNode& root) {
    std::map<std::string, Accum, std::less<>> by_method;
    for_each_descendant(root, [&](const CctNode& n) {
        auto& a = by_method[n.method];
        a.time += n.total_time;
        a.invocations += n.invocations;
    });
    std::vector<TotalTimeRow> rows;
    rows.reserve(by_method.size());
    for (const auto& [method, a] : by_method) {
        rows.push_back(TotalTimeRow{method, a.time, a.invocations});
    }
    std::stable_sort(rows.begin(), rows.end(), [](const TotalTimeRow& a, const TotalTimeRow& b) {
        return a.total_time > b.total_time;
    });
    return rows;
}

Nanos total_self_time(const std::vector<HotSpotRow>& rows) noexcept {
    Nanos sum = 0;
    for (const auto& r : rows) {
        sum += r.self_time;
    }
    return sum;
}

}  // namespace cctlens
