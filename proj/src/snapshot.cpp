#include "cctlens/snapshot.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "cctlens/digest.hpp"

namespace cctlens {

namespace {

using ordered_json = nlohmann::ordered_json;

Rational abs_deviation(const Rational& r) {
    Rational d = r - Rational(1);
    return d.num() < 0 ? Rational(0) - d : d;
}

}  // namespace

Analysis analyze_trace(std::istream& trace, const AnalysisOptions& options, WarningSink warn) {
    TraceReader reader(trace, options.mode, warn);
    Sha256 digest;
    reader.on_raw_line([&digest](std::string_view line) {
        digest.update(line);
        digest.update("\n");
    });

    const BuildOptions build{options.mode == ParseMode::Strict ? BuildMode::Strict : BuildMode::Lenient,
                             options.max_depth};
    std::map<ThreadId, CctBuilder> builders;
    Analysis out;
    TraceEvent ev;
    while (reader.next(ev)) {
        ++out.event_count;
        auto it = builders.find(ev.tid);
        if (it == builders.end()) {
            it = builders.emplace(ev.tid, CctBuilder(ev.tid, build)).first;
        }
        it->second.add(ev, reader.line());
    }
    out.trace_digest = digest.hex();

    for (auto& [tid, builder] : builders) {
        CctNode root = builder.finish();
        if (warn && builder.dropped_exits() != 0) {
            warn("warning: tid " + std::to_string(tid) + ": dropped " + std::to_string(builder.dropped_exits()) +
                 " orphan exit(s)");
        }
        if (warn && builder.truncated_frames() != 0) {
            warn("warning: tid " + std::to_string(tid) + ": closed " + std::to_string(builder.truncated_frames()) +
                 " open frame(s) at end of stream");
        }
        out.forest.roots.push_back(std::move(root));
    }
    CctNode merged = merge_ccts(out.forest);
    if (!options.filters.is_identity()) {
        for (auto& root : out.forest.roots) {
            root = apply_filter(root, options.filters, options.filter_mode);
        }
        merged = apply_filter(merged, options.filters, options.filter_mode);
    }
    out.forest.merged = std::move(merged);
    return out;
}

Analysis analyze_trace_file(const std::string& path, const AnalysisOptions& options, WarningSink warn) {
    std::ifstream in(path);
    if (!in) {
        throw TraceError(0, "cannot open trace file '" + path + "'");
    }
    return analyze_trace(in, options, std::move(warn));
}

Snapshot make_snapshot(std::string label, std::uint64_t user_count, const Analysis& analysis,
                       const ComponentCatalog& catalog) {
    Snapshot s;
    s.label = std::move(label);
    s.user_count = user_count;
    if (analysis.forest.merged) {
        s.hotspots = hotspots(*analysis.forest.merged);
    }
    s.components = component_utilization(s.hotspots, catalog);
    s.source_trace_digest = analysis.trace_digest;
    return s;
}

Snapshot take_snapshot(std::string label, std::uint64_t user_count, std::istream& trace,
                       const AnalysisOptions& options, WarningSink warn) {
    Analysis a = analyze_trace(trace, options, std::move(warn));
    return make_snapshot(std::move(label), user_count, a, options.catalog);
}

std::string serialize_snapshot(const Snapshot& s) {
    ordered_json doc;
    doc["schema"] = kSnapshotSchema;
    doc["label"] = s.label;
    doc["user_count"] = s.user_count;
    doc["source_trace_digest"] = s.source_trace_digest;
    auto hs = ordered_json::array();
    for (const auto& r : s.hotspots) {
        ordered_json j;
        j["method"] = r.method;
        j["self_time_ns"] = r.self_time;
        j["self_pct"] = r.self_pct;
        j["invocations"] = r.invocations;
        hs.push_back(std::move(j));
    }
    doc["hotspots"] = std::move(hs);
    auto cs = ordered_json::array();
    for (const auto& r : s.components) {
        ordered_json j;
        j["component"] = r.component;
        j["tier"] = to_string(r.tier);
        j["self_time_ns"] = r.self_time;
        j["utilization_pct"] = r.utilization_pct;
        j["invocations"] = r.invocations;
        cs.push_back(std::move(j));
    }
    doc["components"] = std::move(cs);
    return doc.dump(2) + "\n";
}

Snapshot deserialize_snapshot(std::string_view document) {
    nlohmann::json doc = nlohmann::json::parse(document.begin(), document.end(), nullptr, false);
    if (doc.is_discarded() || !doc.is_object()) {
        throw std::runtime_error("snapshot: not a JSON object");
    }
    if (!doc.contains("schema") || !doc["schema"].is_string()) {
        throw std::runtime_error("snapshot: missing schema tag");
    }
    if (doc["schema"] != kSnapshotSchema) {
        throw std::runtime_error("snapshot: schema mismatch (expected " + std::string(kSnapshotSchema) + ", got " +
                                 doc["schema"].get<std::string>() + ")");
    }
    Snapshot s;
    try {
        s.label = doc.at("label").get<std::string>();
        s.user_count = doc.at("user_count").get<std::uint64_t>();
        s.source_trace_digest = doc.at("source_trace_digest").get<std::string>();
        for (const auto& j : doc.at("hotspots")) {
            s.hotspots.push_back(HotSpotRow{j.at("method").get<std::string>(), j.at("self_time_ns").get<Nanos>(),
                                            j.at("self_pct").get<double>(), j.at("invocations").get<std::uint64_t>()});
        }
        for (const auto& j : doc.at("components")) {
            s.components.push_back(ComponentUtilizationRow{
                j.at("component").get<std::string>(), parse_tier(j.at("tier").get<std::string>()),
                j.at("self_time_ns").get<Nanos>(), j.at("utilization_pct").get<double>(),
                j.at("invocations").get<std::uint64_t>()});
        }
    } catch (const nlohmann::json::exception& e) {
        throw std::runtime_error(std::string("snapshot: ") + e.what());
    } catch (const std::invalid_argument& e) {
        throw std::runtime_error(std::string("snapshot: ") + e.what());
    }
    return s;
}

Snapshot load_snapshot(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw std::runtime_error("cannot open snapshot file '" + path + "'");
    }
    std::stringstream ss;
    ss << in.rdbuf();
    return deserialize_snapshot(ss.str());
}

std::string_view to_string(DiffStatus status) noexcept {
    switch (status) {
        case DiffStatus::Shared: return "shared";
        case DiffStatus::Added: return "added";
        case DiffStatus::Removed: return "removed";
    }
    return "shared";
}

std::vector<SnapshotDiffRow> diff(const Snapshot& a, const Snapshot& b) {
    std::map<std::string, const HotSpotRow*, std::less<>> in_a;
    std::map<std::string, const HotSpotRow*, std::less<>> in_b;
    for (const auto& r : a.hotspots) {
        in_a[r.method] = &r;
    }
    for (const auto& r : b.hotspots) {
        in_b[r.method] = &r;
    }

    std::vector<SnapshotDiffRow> rows;
    for (const auto& [method, ra] : in_a) {
        SnapshotDiffRow row;
        row.method = method;
        row.invocations_a = ra->invocations;
        if (ra->invocations > 0) {
            row.avg_a = ra->avg_per_invocation();
        }
        auto it = in_b.find(method);
        if (it == in_b.end()) {
            row.status = DiffStatus::Removed;
        } else {
            const HotSpotRow* rb = it->second;
            row.invocations_b = rb->invocations;
            if (rb->invocations > 0) {
                row.avg_b = rb->avg_per_invocation();
            }
            if (row.avg_a && row.avg_b) {
                if (row.avg_a->num() != 0) {
                    row.ratio = *row.avg_b / *row.avg_a;
                } else if (row.avg_b->num() == 0) {
                    row.ratio = Rational(1);
                }
            } else {
                row.status = !row.avg_a ? DiffStatus::Added : DiffStatus::Removed;
            }
        }
        rows.push_back(std::move(row));
    }
    for (const auto& [method, rb] : in_b) {
        if (in_a.count(method) != 0) {
            continue;
        }
        SnapshotDiffRow row;
        row.method = method;
        row.status = DiffStatus::Added;
        row.invocations_b = rb->invocations;
        if (rb->invocations > 0) {
            row.avg_b = rb->avg_per_invocation();
        }
        rows.push_back(std::move(row));
    }

    auto rank = [](const SnapshotDiffRow& r) { return static_cast<int>(r.status); };
    std::sort(rows.begin(), rows.end(), [&](const SnapshotDiffRow& x, const SnapshotDiffRow& y) {
        if (rank(x) != rank(y)) {
            return rank(x) < rank(y);
        }
        if (x.status == DiffStatus::Shared) {
            if (x.ratio.has_value() != y.ratio.has_value()) {
                return !x.ratio.has_value();
            }
            if (x.ratio) {
                const auto dx = abs_deviation(*x.ratio);
                const auto dy = abs_deviation(*y.ratio);
                if (dx != dy) {
                    return dx > dy;
                }
            }
        }
        return x.method < y.method;
    });
    return rows;
}

}  // namespace cctlens
