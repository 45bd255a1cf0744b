#include "cctlens/trace.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <sstream>
#include <vector>

#include <json.hpp>

namespace cctlens {

namespace {

std::string at_line(std::size_t line_no, const std::string& what) {
    if (line_no == 0) {
        return what;
    }
    return "line " + std::to_string(line_no) + ": " + what;
}

template <typename Int>
bool parse_int(std::string_view field, Int& out) {
    if (field.empty()) {
        return false;
    }
    const char* first = field.data();
    const char* last = field.data() + field.size();
    auto [ptr, ec] = std::from_chars(first, last, out);
    return ec == std::errc() && ptr == last;
}

std::string_view strip_cr(std::string_view line) {
    if (!line.empty() && line.back() == '\r') {
        line.remove_suffix(1);
    }
    return line;
}

bool is_skippable(std::string_view line) {
    if (line.empty() || line.front() == '#') {
        return true;
    }
    return std::all_of(line.begin(), line.end(), [](char c) { return c == ' ' || c == '\t'; });
}

EventKind parse_kind(std::string_view field, std::size_t line_no) {
    if (field == "E") {
        return EventKind::Enter;
    }
    if (field == "X") {
        return EventKind::Exit;
    }
    throw TraceError(line_no, at_line(line_no, "unknown event kind '" + std::string(field) + "'"));
}

}  // namespace

TraceError::TraceError(std::size_t line, const std::string& message)
    : std::runtime_error(message), line_(line) {}

bool is_valid_method_name(std::string_view name) noexcept {
    if (name.empty()) {
        return false;
    }
    return name.find_first_of(" \t\r\n") == std::string_view::npos;
}

std::optional<TraceEvent> parse_trace_line(std::string_view line, std::size_t line_no) {
    line = strip_cr(line);
    if (is_skippable(line)) {
        return std::nullopt;
    }

    std::string_view fields[4];
    std::size_t count = 0;
    std::size_t start = 0;
    while (true) {
        const auto tab = line.find('\t', start);
        const auto piece = line.substr(start, tab == std::string_view::npos ? std::string_view::npos : tab - start);
        if (count == 4) {
            throw TraceError(line_no, at_line(line_no, "expected 4 tab-separated fields, got more"));
        }
        fields[count++] = piece;
        if (tab == std::string_view::npos) {
            break;
        }
        start = tab + 1;
    }
    if (count != 4) {
        throw TraceError(line_no, at_line(line_no, "expected 4 tab-separated fields, got " + std::to_string(count)));
    }

    TraceEvent ev;
    if (!parse_int(fields[0], ev.ts)) {
        throw TraceError(line_no, at_line(line_no, "timestamp is not an integer: '" + std::string(fields[0]) + "'"));
    }
    if (!parse_int(fields[1], ev.tid)) {
        throw TraceError(line_no, at_line(line_no, "thread id is not a non-negative integer: '" + std::string(fields[1]) + "'"));
    }
    ev.kind = parse_kind(fields[2], line_no);
    if (!is_valid_method_name(fields[3])) {
        throw TraceError(line_no, at_line(line_no, "method name is empty or contains whitespace"));
    }
    ev.method = std::string(fields[3]);
    return ev;
}

std::optional<TraceEvent> parse_jsonl_line(std::string_view line, std::size_t line_no) {
    line = strip_cr(line);
    if (is_skippable(line)) {
        return std::nullopt;
    }
    nlohmann::json j = nlohmann::json::parse(line.begin(), line.end(), nullptr, false);
    if (j.is_discarded() || !j.is_object()) {
        throw TraceError(line_no, at_line(line_no, "malformed JSON record"));
    }
    for (const char* key : {"ts", "tid", "ev", "m"}) {
        if (!j.contains(key)) {
            throw TraceError(line_no, at_line(line_no, std::string("JSON record lacks field '") + key + "'"));
        }
    }
    if (j.size() != 4) {
        throw TraceError(line_no, at_line(line_no, "JSON record must have exactly the fields ts, tid, ev, m"));
    }
    TraceEvent ev;
    if (!j["ts"].is_number_integer()) {
        throw TraceError(line_no, at_line(line_no, "timestamp is not an integer"));
    }
    ev.ts = j["ts"].get<Nanos>();
    if (!j["tid"].is_number_unsigned()) {
        throw TraceError(line_no, at_line(line_no, "thread id is not a non-negative integer"));
    }
    ev.tid = j["tid"].get<ThreadId>();
    if (!j["ev"].is_string()) {
        throw TraceError(line_no, at_line(line_no, "unknown event kind"));
    }
    ev.kind = parse_kind(j["ev"].get_ref<const std::string&>(), line_no);
    if (!j["m"].is_string() || !is_valid_method_name(j["m"].get_ref<const std::string&>())) {
        throw TraceError(line_no, at_line(line_no, "method name is empty or contains whitespace"));
    }
    ev.method = j["m"].get<std::string>();
    return ev;
}

std::string format_trace_event(const TraceEvent& ev) {
    std::string out;
    out.reserve(ev.method.size() + 32);
    out += std::to_string(ev.ts);
    out += '\t';
    out += std::to_string(ev.tid);
    out += '\t';
    out += ev.kind == EventKind::Enter ? 'E' : 'X';
    out += '\t';
    out += ev.method;
    return out;
}

std::string format_jsonl_event(const TraceEvent& ev) {
    nlohmann::ordered_json j;
    j["ts"] = ev.ts;
    j["tid"] = ev.tid;
    j["ev"] = ev.kind == EventKind::Enter ? "E" : "X";
    j["m"] = ev.method;
    return j.dump();
}

TraceReader::TraceReader(std::istream& in, ParseMode mode, WarningSink warn)
    : in_(in), mode_(mode), warn_(std::move(warn)) {}

bool TraceReader::next(TraceEvent& out) {
    while (std::getline(in_, buf_)) {
        ++line_no_;
        if (raw_line_) {
            raw_line_(buf_);
        }
        std::string_view line = strip_cr(buf_);
        std::optional<TraceEvent> ev;
        const auto first = line.find_first_not_of(" \t");
        if (first != std::string_view::npos && line[first] == '{') {
            ev = parse_jsonl_line(line, line_no_);
        } else {
            ev = parse_trace_line(line, line_no_);
        }
        if (!ev) {
            continue;
        }

        auto [it, inserted] = last_ts_.try_emplace(ev->tid, ev->ts);
        if (!inserted) {
            if (ev->ts < it->second) {
                ++ordering_violations_;
                std::string msg = at_line(line_no_, "timestamp regression on tid " + std::to_string(ev->tid) + " (" +
                                                        std::to_string(ev->ts) + " < " + std::to_string(it->second) + ")");
                if (mode_ == ParseMode::Strict) {
                    throw TraceError(line_no_, msg);
                }
                if (warn_) {
                    warn_("warning: " + msg);
                }
            } else {
                it->second = ev->ts;
            }
        }
        out = std::move(*ev);
        return true;
    }
    return false;
}

std::size_t Trace::event_count() const noexcept {
    std::size_t n = 0;
    for (const auto& t : threads) {
        n += t.events.size();
    }
    return n;
}

Trace read_trace(std::istream& in, ParseMode mode, WarningSink warn) {
    TraceReader reader(in, mode, std::move(warn));
    std::map<ThreadId, std::vector<TraceEvent>> groups;
    TraceEvent ev;
    while (reader.next(ev)) {
        groups[ev.tid].push_back(std::move(ev));
    }
    Trace trace;
    trace.threads.reserve(groups.size());
    for (auto& [tid, events] : groups) {
        trace.threads.push_back(ThreadTrace{tid, std::move(events)});
    }
    return trace;
}

Trace read_trace_text(std::string_view text, ParseMode mode, WarningSink warn) {
    std::istringstream in{std::string(text)};
    return read_trace(in, mode, std::move(warn));
}

Trace read_trace_file(const std::string& path, ParseMode mode, WarningSink warn) {
    std::ifstream in(path);
    if (!in) {
        throw TraceError(0, "cannot open trace file '" + path + "'");
    }
    return read_trace(in, mode, std::move(warn));
}

bool TraceValidationReport::well_formed() const noexcept {
    auto zero = [](const std::map<ThreadId, std::size_t>& m) {
        return std::all_of(m.begin(), m.end(), [](const auto& kv) { return kv.second == 0; });
    };
    return zero(unmatched_enters) && zero(orphan_exits) && ordering_violations == 0;
}

TraceValidationReport validate_trace(const Trace& trace) {
    TraceValidationReport report;
    report.thread_count = trace.threads.size();
    std::vector<const std::string*> stack;
    for (const auto& thread : trace.threads) {
        stack.clear();
        std::size_t orphans = 0;
        bool have_last = false;
        Nanos last = 0;
        for (const auto& ev : thread.events) {
            ++report.event_count;
            if (have_last && ev.ts < last) {
                ++report.ordering_violations;
            } else {
                last = ev.ts;
                have_last = true;
            }
            if (ev.kind == EventKind::Enter) {
                stack.push_back(&ev.method);
            } else if (!stack.empty() && *stack.back() == ev.method) {
                stack.pop_back();
            } else {
                ++orphans;
            }
        }
        if (orphans != 0) {
            report.orphan_exits[thread.tid] = orphans;
        }
        if (!stack.empty()) {
            report.unmatched_enters[thread.tid] = stack.size();
        }
    }
    return report;
}

}  // namespace cctlens
