#pragma once

#include <cstdint>
#include <map>
#include <ostream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "cctlens/trace.hpp"

namespace cctlens {

class WorkloadError : public std::invalid_argument {
  public:
    using std::invalid_argument::invalid_argument;
};

/// One frame of a call-chain template and the frames it calls, in order.
struct FrameTemplate {
    std::string method;
    std::vector<FrameTemplate> calls;
};

/// A use case as the ordered top-level requests it issues. Most use cases are
/// one request; login is a form fetch followed by the POST.
struct CallChain {
    std::string name;
    std::vector<FrameTemplate> requests;

    /// Number of frames, counting every nested call.
    std::size_t frame_count() const noexcept;
};

/// Per-method self durations with optional seeded multiplicative jitter.
struct LatencyModel {
    std::map<std::string, Nanos, std::less<>> base;
    Nanos default_base = 0;
    /// Half-width of the uniform multiplier `[1 - jitter, 1 + jitter]`.
    double jitter = 0.0;

    Nanos base_for(std::string_view method) const;
    /// `u` in [0, 1) selects the multiplier; jitter 0 returns the base exactly.
    Nanos realize(std::string_view method, double u) const;
};

struct WorkloadSpec {
    /// Use case -> execution count, in the order executions are laid out.
    std::vector<std::pair<std::string, std::uint64_t>> executions;
    std::uint64_t seed = 0;
    LatencyModel latency;
    std::uint32_t thread_count = 1;
};

/// Register, Login, AddInterviewResult, Recruit and ViewResult, keyed
/// `register`, `login`, `add_interview_result`, `recruit`, `view_result`.
std::map<std::string, CallChain> hr_scenarios();

/// Page traffic and container start-up that appear in the 20-user hot-spot
/// table without belonging to a modelled use case: `add_candidate_page`,
/// `hr_process_page`, `welcome_page`, `view_profile_page`, `container_startup`.
std::map<std::string, CallChain> page_traffic_scenarios();

/// Union of both maps; simulate() resolves use-case names against this.
std::map<std::string, CallChain> scenario_catalog();

/// Self durations calibrated so each method's aggregate self time in the
/// 20-user table is reproduced (row total / row invocations, nearest ns).
std::map<std::string, Nanos, std::less<>> figure8_base_durations();

/// 20 registrations, 10 logins plus the page traffic; jitter 0, one thread.
WorkloadSpec figure8_preset();

/// `users` executions of every HR use case, one thread per user, with the
/// calibrated latencies (unlisted methods 1 ms). Latency does not depend on load.
WorkloadSpec load_preset(std::uint64_t users, double jitter = 0.0, std::uint64_t seed = 1);

/// Uniform [0, 1) value keyed by (seed, use case, execution index, frame index).
double keyed_uniform(std::uint64_t seed, std::string_view use_case, std::uint64_t execution, std::uint64_t frame) noexcept;

struct SimulationSummary {
    std::size_t event_count = 0;
    std::string digest;  ///< SHA-256 of the bytes written
};

/// Writes the canonical trace for `spec`. Output is sorted by ts, then tid,
/// then per-thread order, and is byte-identical for identical specs.
/// Throws WorkloadError for unknown use cases or invalid parameters.
SimulationSummary simulate(const WorkloadSpec& spec, std::ostream& out);
std::string simulate(const WorkloadSpec& spec);

/// Structured-text (JSON) workload spec:
/// `{"executions": {"register": 20}, "seed": 1, "jitter": 0.0, "threads": 1,
///   "base_preset": "figure8", "default_base_ns": 0, "base_ns": {"m": 1000}}`.
/// Every key is optional; execution order follows the document.
WorkloadSpec parse_workload_spec(std::string_view document);
WorkloadSpec load_workload_spec(const std::string& path);
std::string workload_spec_to_json(const WorkloadSpec& spec);

}  // namespace cctlens
