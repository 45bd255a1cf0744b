#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "cctlens/trace.hpp"

namespace cctlens {

/// One calling context. Children are kept in first-encounter order and hold
/// at most one node per method.
struct CctNode {
    std::string method;
    std::uint64_t invocations = 0;
    Nanos total_time = 0;  ///< inclusive, summed over all invocations here
    bool truncated = false;
    std::vector<CctNode> children;

    CctNode* find_child(std::string_view m) noexcept;
    const CctNode* find_child(std::string_view m) const noexcept;
    /// Find-or-append.
    CctNode& child(std::string_view m);

    bool operator==(const CctNode&) const = default;
};

/// Label used for the synthetic per-thread root, e.g. `<root:3>`.
std::string root_label(ThreadId tid);
/// Label of the root produced by merge_ccts.
inline constexpr std::string_view kMergedRootLabel = "<root:all>";

enum class BuildMode { Strict, Lenient };

struct BuildOptions {
    BuildMode mode = BuildMode::Strict;
    /// Frames deeper than this are folded into their deepest recorded ancestor.
    std::optional<std::size_t> max_depth;
};

/// Incremental cursor-stack CCT construction for a single thread.
///
/// Enter: find-or-create the cursor's child for the method, bump invocations,
/// push it with the enter timestamp. Exit: pop and add the elapsed time.
/// Recursion produces a chain of nodes, one per depth.
///
/// Strict mode throws TraceError on an orphan exit or on frames still open at
/// finish(). Lenient mode drops orphan exits, clamps timestamp regressions and
/// closes open frames at the last observed timestamp, flagging them truncated.
class CctBuilder {
  public:
    explicit CctBuilder(ThreadId tid, BuildOptions options = {});
    CctBuilder(CctBuilder&&) noexcept = default;
    CctBuilder& operator=(CctBuilder&&) noexcept = default;

    void add(const TraceEvent& ev, std::size_t line = 0);
    /// Closes the tree and returns the thread's synthetic root.
    CctNode finish();

    ThreadId tid() const noexcept { return tid_; }
    std::size_t dropped_exits() const noexcept { return dropped_exits_; }
    std::size_t truncated_frames() const noexcept { return truncated_frames_; }

  private:
    struct Frame {
        CctNode* node;  // null when past max_depth
        Nanos enter_ts;
        std::size_t line;
        std::string capped_method;
    };

    const std::string& frame_method(const Frame& f) const;

    ThreadId tid_;
    BuildOptions options_;
    std::unique_ptr<CctNode> root_;
    std::vector<Frame> stack_;
    std::size_t depth_ = 0;  // recorded depth, excludes capped frames
    bool seen_ = false;
    Nanos last_ts_ = 0;
    std::size_t dropped_exits_ = 0;
    std::size_t truncated_frames_ = 0;
};

/// Builds one thread's tree from its ordered events.
CctNode build_cct(std::span<const TraceEvent> events, BuildOptions options = {});
CctNode build_cct(const ThreadTrace& thread, BuildOptions options = {});

/// total_time minus the children's total_time.
Nanos self_time(const CctNode& node) noexcept;

struct CctForest {
    std::vector<CctNode> roots;  ///< one per tid, ascending tid
    std::optional<CctNode> merged;
};

CctForest build_forest(const Trace& trace, BuildOptions options = {});

/// Adds `src` (same method) into `dst`: invocations and times sum, truncated
/// flags OR, children coalesce by method recursively.
void merge_into(CctNode& dst, const CctNode& src);

/// Structural merge of every root under a single `<root:all>` node.
CctNode merge_ccts(const CctForest& forest);

struct CallGraphEdge {
    std::string caller;
    std::string callee;
    std::uint64_t calls = 0;
    Nanos callee_total_time = 0;

    bool operator==(const CallGraphEdge&) const = default;
};

/// Collapses contexts: one edge per (caller, callee) pair, ordered by first
/// pre-order encounter. Links from the synthetic root are included.
std::vector<CallGraphEdge> project_call_graph(const CctNode& root);

/// `a;b;c <self_ns>` for every non-root node, in pre-order.
std::vector<std::string> folded_stacks(const CctNode& root);

/// JSON document `{"schema": ..., "roots": [node...]}`.
std::string serialize_cct(std::span<const CctNode> roots);
std::string serialize_cct(const CctNode& root);
/// Throws std::runtime_error on malformed input or a foreign schema.
std::vector<CctNode> deserialize_cct(std::string_view document);

inline constexpr std::string_view kCctSchema = "cct-lens.cct/1";

}  // namespace cctlens
