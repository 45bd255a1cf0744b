#include "cctlens/report.hpp"

#include <algorithm>
#include <cstdio>
#include <stdexcept>

#include <json.hpp>

namespace cctlens {

namespace {

using ordered_json = nlohmann::ordered_json;

std::string fixed_decimal(__int128 scaled, int decimals) {
    const bool neg = scaled < 0;
    if (neg) {
        scaled = -scaled;
    }
    std::string digits;
    do {
        digits.insert(digits.begin(), static_cast<char>('0' + static_cast<int>(scaled % 10)));
        scaled /= 10;
    } while (scaled != 0);
    if (decimals > 0) {
        while (static_cast<int>(digits.size()) <= decimals) {
            digits.insert(digits.begin(), '0');
        }
        digits.insert(digits.end() - decimals, '.');
        while (digits.back() == '0') {
            digits.pop_back();
        }
        if (digits.back() == '.') {
            digits.pop_back();
        }
    }
    if (neg && digits != "0") {
        digits.insert(digits.begin(), '-');
    }
    return digits;
}

std::string csv_field(std::string_view s) {
    if (s.find_first_of(",\"\n") == std::string_view::npos) {
        return std::string(s);
    }
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') {
            out += '"';
        }
        out += c;
    }
    out += '"';
    return out;
}

std::string fmt_double(double v, const char* spec) {
    char buf[64];
    std::snprintf(buf, sizeof buf, spec, v);
    return buf;
}

std::string ratio_text(const SnapshotDiffRow& r) {
    if (r.ratio) {
        return fmt_double(r.ratio->to_double(), "%.2f");
    }
    return r.status == DiffStatus::Shared ? "inf" : "-";
}

/// Aligned columns; the first column is left-aligned, the rest right-aligned.
std::string align(const std::vector<std::vector<std::string>>& table) {
    if (table.empty()) {
        return {};
    }
    std::vector<std::size_t> width(table.front().size(), 0);
    for (const auto& row : table) {
        for (std::size_t i = 0; i < row.size(); ++i) {
            width[i] = std::max(width[i], row[i].size());
        }
    }
    std::string out;
    for (const auto& row : table) {
        std::string line;
        for (std::size_t i = 0; i < row.size(); ++i) {
            if (i == 0) {
                line += row[i];
                line.append(width[i] - row[i].size(), ' ');
            } else {
                line += " | ";
                line.append(width[i] - row[i].size(), ' ');
                line += row[i];
            }
        }
        while (!line.empty() && line.back() == ' ') {
            line.pop_back();
        }
        out += line;
        out += '\n';
    }
    return out;
}

ordered_json rational_json(const Rational& r) {
    ordered_json j;
    j["num"] = r.num();
    j["den"] = r.den();
    return j;
}

std::string render_text_section(const AnalysisTables& t) {
    std::string out;
    out += "== Hot spots (" + t.title + ") ==\n";
    out += render_hotspots_text(t.hotspots);
    out += "\n== Total time (" + t.title + ") ==\n";
    std::vector<std::vector<std::string>> totals{{"Method", "Total time", "Calls"}};
    for (const auto& r : t.totals) {
        totals.push_back({r.method, format_ms(r.total_time), std::to_string(r.calls)});
    }
    out += align(totals);
    out += "\n== Component utilization (" + t.title + ") ==\n";
    std::vector<std::vector<std::string>> comps{{"Component", "Tier", "Self time", "Utilization", "Invocations"}};
    for (const auto& r : t.components) {
        comps.push_back({r.component, std::string(to_string(r.tier)), format_ms(r.self_time),
                         format_pct(r.utilization_pct), std::to_string(r.invocations)});
    }
    out += align(comps);
    return out;
}

std::string render_csv_section(const AnalysisTables& t) {
    std::string out;
    out += "table,view,name,tier,self_time_ns,total_time_ns,pct,invocations,avg_per_invocation_ns\n";
    const std::string view = csv_field(t.title);
    for (const auto& r : t.hotspots) {
        out += "hotspot," + view + "," + csv_field(r.method) + ",," + std::to_string(r.self_time) + ",," +
               fmt_double(r.self_pct, "%.9f") + "," + std::to_string(r.invocations) + "," +
               fmt_double(r.avg_per_invocation().to_double(), "%.3f") + "\n";
    }
    for (const auto& r : t.totals) {
        out += "total," + view + "," + csv_field(r.method) + ",,," + std::to_string(r.total_time) + ",," +
               std::to_string(r.calls) + ",\n";
    }
    for (const auto& r : t.components) {
        out += "component," + view + "," + csv_field(r.component) + "," + std::string(to_string(r.tier)) + "," +
               std::to_string(r.self_time) + ",," + fmt_double(r.utilization_pct, "%.9f") + "," +
               std::to_string(r.invocations) + ",\n";
    }
    return out;
}

ordered_json section_json(const AnalysisTables& t) {
    ordered_json j;
    j["view"] = t.title;
    auto hs = ordered_json::array();
    for (const auto& r : t.hotspots) {
        ordered_json row;
        row["method"] = r.method;
        row["self_time_ns"] = r.self_time;
        row["self_pct"] = r.self_pct;
        row["invocations"] = r.invocations;
        row["avg_per_invocation_ns"] = rational_json(r.avg_per_invocation());
        hs.push_back(std::move(row));
    }
    j["hotspots"] = std::move(hs);
    auto ts = ordered_json::array();
    for (const auto& r : t.totals) {
        ordered_json row;
        row["method"] = r.method;
        row["total_time_ns"] = r.total_time;
        row["calls"] = r.calls;
        ts.push_back(std::move(row));
    }
    j["total_time"] = std::move(ts);
    auto cs = ordered_json::array();
    for (const auto& r : t.components) {
        ordered_json row;
        row["component"] = r.component;
        row["tier"] = to_string(r.tier);
        row["self_time_ns"] = r.self_time;
        row["utilization_pct"] = r.utilization_pct;
        row["invocations"] = r.invocations;
        cs.push_back(std::move(row));
    }
    j["components"] = std::move(cs);
    return j;
}

}  // namespace

ReportFormat parse_report_format(std::string_view name) {
    if (name == "text") return ReportFormat::Text;
    if (name == "csv") return ReportFormat::Csv;
    if (name == "json") return ReportFormat::Json;
    throw std::invalid_argument("unknown format '" + std::string(name) + "' (expected text, csv or json)");
}

std::string format_ms(const Rational& nanos) {
    const __int128 num = nanos.num() < 0 ? -static_cast<__int128>(nanos.num()) : nanos.num();
    const __int128 den = nanos.den();
    constexpr __int128 kMs = 1'000'000;

    int decimals;
    if (num >= 100 * kMs * den) {
        decimals = 0;
    } else if (num >= 10 * kMs * den) {
        decimals = 1;
    } else if (num >= kMs * den) {
        decimals = 2;
    } else {
        decimals = 3;
        __int128 threshold = kMs / 10;
        while (decimals < 9 && num < threshold * den) {
            ++decimals;
            threshold /= 10;
        }
    }
    __int128 pow10 = 1;
    for (int i = 0; i < decimals; ++i) {
        pow10 *= 10;
    }
    // round half away from zero of num * 10^decimals / (den * 10^6)
    const __int128 q_den = den * kMs;
    __int128 scaled = (num * pow10 * 2 + q_den) / (2 * q_den);
    if (nanos.num() < 0) {
        scaled = -scaled;
    }
    return fixed_decimal(scaled, decimals) + " ms";
}

std::string format_ms(Nanos nanos) {
    return format_ms(Rational(nanos));
}

std::string format_pct(double fraction) {
    return fmt_double(fraction * 100.0, "%.1f") + "%";
}

AnalysisTables tabulate(std::string title, const CctNode& root, const ComponentCatalog& catalog) {
    AnalysisTables t;
    t.title = std::move(title);
    t.hotspots = hotspots(root);
    t.totals = total_time_table(root);
    t.components = component_utilization(t.hotspots, catalog);
    return t;
}

std::string render_hotspots_text(const std::vector<HotSpotRow>& rows) {
    std::vector<std::vector<std::string>> table{
        {"Hot Spots - Method", "Self time (%)", "Self time", "Invocations", "Avg / invocation"}};
    for (const auto& r : rows) {
        table.push_back({r.method, format_pct(r.self_pct), format_ms(r.self_time), std::to_string(r.invocations),
                         format_ms(r.avg_per_invocation())});
    }
    return align(table);
}

std::string render_analysis(const std::vector<AnalysisTables>& sections, ReportFormat format) {
    switch (format) {
        case ReportFormat::Text: {
            std::string out;
            for (std::size_t i = 0; i < sections.size(); ++i) {
                if (i != 0) {
                    out += '\n';
                }
                out += render_text_section(sections[i]);
            }
            return out;
        }
        case ReportFormat::Csv: {
            std::string out;
            for (std::size_t i = 0; i < sections.size(); ++i) {
                std::string s = render_csv_section(sections[i]);
                out += i == 0 ? s : s.substr(s.find('\n') + 1);
            }
            return out;
        }
        case ReportFormat::Json: {
            ordered_json doc;
            auto arr = ordered_json::array();
            for (const auto& s : sections) {
                arr.push_back(section_json(s));
            }
            doc["sections"] = std::move(arr);
            return doc.dump(2) + "\n";
        }
    }
    return {};
}

std::string render_diff(const std::vector<SnapshotDiffRow>& rows, const Snapshot& a, const Snapshot& b,
                        ReportFormat format) {
    switch (format) {
        case ReportFormat::Text: {
            std::string out = "Snapshot diff: " + a.label + " (" + std::to_string(a.user_count) + " users) -> " +
                              b.label + " (" + std::to_string(b.user_count) + " users)\n";
            std::vector<std::vector<std::string>> table{
                {"Method", "Avg A", "Avg B", "Ratio", "Invocations A", "Invocations B", "Status"}};
            for (const auto& r : rows) {
                table.push_back({r.method, r.avg_a ? format_ms(*r.avg_a) : "-", r.avg_b ? format_ms(*r.avg_b) : "-",
                                 ratio_text(r), std::to_string(r.invocations_a), std::to_string(r.invocations_b),
                                 std::string(to_string(r.status))});
            }
            return out + align(table);
        }
        case ReportFormat::Csv: {
            std::string out = "method,status,avg_a_ns,avg_b_ns,ratio,invocations_a,invocations_b\n";
            for (const auto& r : rows) {
                out += csv_field(r.method) + "," + std::string(to_string(r.status)) + "," +
                       (r.avg_a ? fmt_double(r.avg_a->to_double(), "%.3f") : "") + "," +
                       (r.avg_b ? fmt_double(r.avg_b->to_double(), "%.3f") : "") + "," +
                       (r.ratio ? fmt_double(r.ratio->to_double(), "%.6f") : "") + "," +
                       std::to_string(r.invocations_a) + "," + std::to_string(r.invocations_b) + "\n";
            }
            return out;
        }
        case ReportFormat::Json: {
            ordered_json doc;
            doc["a"] = {{"label", a.label}, {"user_count", a.user_count}, {"digest", a.source_trace_digest}};
            doc["b"] = {{"label", b.label}, {"user_count", b.user_count}, {"digest", b.source_trace_digest}};
            auto arr = ordered_json::array();
            for (const auto& r : rows) {
                ordered_json j;
                j["method"] = r.method;
                j["status"] = to_string(r.status);
                j["avg_a_ns"] = r.avg_a ? rational_json(*r.avg_a) : ordered_json(nullptr);
                j["avg_b_ns"] = r.avg_b ? rational_json(*r.avg_b) : ordered_json(nullptr);
                j["ratio"] = r.ratio ? rational_json(*r.ratio) : ordered_json(nullptr);
                j["invocations_a"] = r.invocations_a;
                j["invocations_b"] = r.invocations_b;
                arr.push_back(std::move(j));
            }
            doc["rows"] = std::move(arr);
            return doc.dump(2) + "\n";
        }
    }
    return {};
}

std::string render_edges(const std::vector<CallGraphEdge>& edges) {
    std::string out = "# caller\tcallee\tcalls\tcallee_total_ns\n";
    for (const auto& e : edges) {
        out += e.caller + '\t' + e.callee + '\t' + std::to_string(e.calls) + '\t' +
               std::to_string(e.callee_total_time) + '\n';
    }
    return out;
}

}  // namespace cctlens
