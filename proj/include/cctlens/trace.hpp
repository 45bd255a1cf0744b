#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <istream>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace cctlens {

/// Integer nanoseconds. All time arithmetic in the toolkit is exact.
using Nanos = std::int64_t;
using ThreadId = std::uint64_t;

enum class EventKind : std::uint8_t { Enter, Exit };

/// One timestamped method enter/exit record on one thread.
struct TraceEvent {
    Nanos ts = 0;
    ThreadId tid = 0;
    EventKind kind = EventKind::Enter;
    std::string method;

    bool operator==(const TraceEvent&) const = default;
};

/// Raised for malformed input. `line()` is 1-based, 0 when not tied to a line.
class TraceError : public std::runtime_error {
  public:
    TraceError(std::size_t line, const std::string& message);
    std::size_t line() const noexcept { return line_; }

  private:
    std::size_t line_;
};

enum class ParseMode { Strict, Lenient };

/// Non-empty and free of space, tab, CR and LF.
bool is_valid_method_name(std::string_view name) noexcept;

/// Decodes one canonical `<ts>\t<tid>\t<E|X>\t<method>` record.
/// Returns nullopt for blank and `#` comment lines; throws TraceError otherwise.
std::optional<TraceEvent> parse_trace_line(std::string_view line, std::size_t line_no = 0);

/// Same contract for the JSON-lines form `{"ts":..,"tid":..,"ev":"E","m":".."}`.
std::optional<TraceEvent> parse_jsonl_line(std::string_view line, std::size_t line_no = 0);

/// Canonical record without the trailing newline.
std::string format_trace_event(const TraceEvent& ev);
std::string format_jsonl_event(const TraceEvent& ev);

using WarningSink = std::function<void(const std::string&)>;

/// Streaming reader over canonical (or JSON-lines) trace text.
///
/// The record format is detected per line: records starting with `{` are
/// JSON-lines, everything else is the tab-separated form. Per-thread timestamp
/// regressions throw in strict mode; in lenient mode they are reported through
/// the warning sink and the event is passed on unchanged.
class TraceReader {
  public:
    TraceReader(std::istream& in, ParseMode mode, WarningSink warn = {});

    /// Reads the next event. Returns false at end of stream.
    bool next(TraceEvent& out);

    /// Line number of the most recently returned event.
    std::size_t line() const noexcept { return line_no_; }
    std::size_t ordering_violations() const noexcept { return ordering_violations_; }

    /// Called with every raw line (without newline) as it is consumed.
    void on_raw_line(std::function<void(std::string_view)> fn) { raw_line_ = std::move(fn); }

  private:
    std::istream& in_;
    ParseMode mode_;
    WarningSink warn_;
    std::function<void(std::string_view)> raw_line_;
    std::string buf_;
    std::size_t line_no_ = 0;
    std::size_t ordering_violations_ = 0;
    std::map<ThreadId, Nanos> last_ts_;
};

/// One thread's events in original file order.
struct ThreadTrace {
    ThreadId tid = 0;
    std::vector<TraceEvent> events;
};

/// Events partitioned by tid, ascending tid order.
struct Trace {
    std::vector<ThreadTrace> threads;

    std::size_t event_count() const noexcept;
};

Trace read_trace(std::istream& in, ParseMode mode = ParseMode::Strict, WarningSink warn = {});
Trace read_trace_text(std::string_view text, ParseMode mode = ParseMode::Strict, WarningSink warn = {});
Trace read_trace_file(const std::string& path, ParseMode mode = ParseMode::Strict, WarningSink warn = {});

struct TraceValidationReport {
    std::size_t event_count = 0;
    std::size_t thread_count = 0;
    std::map<ThreadId, std::size_t> unmatched_enters;
    std::map<ThreadId, std::size_t> orphan_exits;
    std::size_t ordering_violations = 0;

    bool well_formed() const noexcept;
    bool operator==(const TraceValidationReport&) const = default;
};

/// Replays a LIFO stack per tid and counts defects. Never throws.
TraceValidationReport validate_trace(const Trace& trace);

}  // namespace cctlens
