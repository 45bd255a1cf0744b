// cct-lens: calling-context-tree analysis of method enter/exit traces.

#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "cctlens/cct.hpp"
#include "cctlens/components.hpp"
#include "cctlens/filters.hpp"
#include "cctlens/metrics.hpp"
#include "cctlens/report.hpp"
#include "cctlens/snapshot.hpp"
#include "cctlens/trace.hpp"
#include "cctlens/workload.hpp"

namespace {

using namespace cctlens;

struct CommonOptions {
    std::vector<std::string> includes;
    std::vector<std::string> excludes;
    std::string filter_mode = "attribute";
    std::string catalog_path;
    bool per_thread = false;
    bool lenient = false;
    std::optional<std::size_t> max_depth;
};

void add_common(CLI::App* cmd, CommonOptions& o) {
    cmd->add_option("--include", o.includes, "Keep only methods matching a pattern (repeatable)");
    cmd->add_option("--exclude", o.excludes, "Drop methods matching a pattern (repeatable)");
    cmd->add_option("--filter-mode", o.filter_mode, "attribute: fold into caller self time; drop: discard time")
        ->check(CLI::IsMember({"attribute", "drop"}));
    cmd->add_option("--catalog", o.catalog_path, "Component catalog file (default: built-in HR Portal rules)");
    cmd->add_flag("--per-thread", o.per_thread, "Report each thread separately instead of the merged view");
    cmd->add_flag("--lenient", o.lenient, "Repair truncated traces instead of failing");
    cmd->add_option("--max-depth", o.max_depth, "Fold frames deeper than this into their ancestor");
}

AnalysisOptions to_analysis_options(const CommonOptions& o) {
    AnalysisOptions a;
    a.mode = o.lenient ? ParseMode::Lenient : ParseMode::Strict;
    for (const auto& p : o.includes) {
        a.filters.includes.emplace_back(p);
    }
    for (const auto& p : o.excludes) {
        a.filters.excludes.emplace_back(p);
    }
    a.filter_mode = o.filter_mode == "drop" ? FilterMode::DropSubtree : FilterMode::AttributeToParent;
    if (!o.catalog_path.empty()) {
        a.catalog = ComponentCatalog::load(o.catalog_path);
    }
    a.max_depth = o.max_depth;
    return a;
}

WarningSink stderr_sink() {
    return [](const std::string& msg) { std::cerr << msg << '\n'; };
}

void write_output(const std::string& path, const std::string& content) {
    if (path.empty() || path == "-") {
        std::cout << content;
        return;
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw std::runtime_error("cannot write '" + path + "'");
    }
    out << content;
}

/// Views in report order: the merged tree, or one per thread.
std::vector<std::pair<std::string, const CctNode*>> views(const Analysis& a, bool per_thread) {
    std::vector<std::pair<std::string, const CctNode*>> out;
    if (per_thread) {
        for (const auto& root : a.forest.roots) {
            out.emplace_back("tid " + root.method.substr(6, root.method.size() - 7), &root);
        }
    } else {
        out.emplace_back("merged", &*a.forest.merged);
    }
    return out;
}

int run_simulate(const std::string& preset, const std::string& spec_path, std::optional<std::uint64_t> seed,
                 std::optional<double> jitter, std::optional<std::uint32_t> threads, std::uint64_t users,
                 const std::string& out_path) {
    WorkloadSpec spec;
    if (!spec_path.empty()) {
        spec = load_workload_spec(spec_path);
    } else if (preset == "figure8") {
        spec = figure8_preset();
    } else if (preset == "load") {
        spec = load_preset(users);
    } else {
        std::cerr << "error: unknown preset '" << preset << "' (expected figure8 or load)\n";
        return 1;
    }
    if (seed) {
        spec.seed = *seed;
    }
    if (jitter) {
        spec.latency.jitter = *jitter;
    }
    if (threads) {
        spec.thread_count = *threads;
    }

    SimulationSummary summary;
    if (out_path.empty() || out_path == "-") {
        summary = simulate(spec, std::cout);
        std::cerr << "events: " << summary.event_count << "\ndigest: sha256:" << summary.digest << '\n';
        return 0;
    }
    std::ofstream out(out_path, std::ios::binary);
    if (!out) {
        throw std::runtime_error("cannot write '" + out_path + "'");
    }
    summary = simulate(spec, out);
    out.close();
    std::cout << "events: " << summary.event_count << "\ndigest: sha256:" << summary.digest << '\n';
    return 0;
}

int run_analyze(const std::string& trace, const CommonOptions& common, const std::string& format,
                const std::string& snapshot_out, const std::string& label, std::uint64_t users) {
    const AnalysisOptions options = to_analysis_options(common);
    const ReportFormat fmt = parse_report_format(format);
    const Analysis a = analyze_trace_file(trace, options, stderr_sink());

    std::vector<AnalysisTables> sections;
    for (const auto& [title, root] : views(a, common.per_thread)) {
        sections.push_back(tabulate(title, *root, options.catalog));
    }
    std::cout << render_analysis(sections, fmt);

    if (!snapshot_out.empty()) {
        const Snapshot s = make_snapshot(label.empty() ? std::to_string(users) + "-user" : label, users, a,
                                         options.catalog);
        write_output(snapshot_out, serialize_snapshot(s));
    }
    return 0;
}

int run_diff(const std::string& a_path, const std::string& b_path, const std::string& format) {
    const ReportFormat fmt = parse_report_format(format);
    const Snapshot a = load_snapshot(a_path);
    const Snapshot b = load_snapshot(b_path);
    std::cout << render_diff(diff(a, b), a, b, fmt);
    return 0;
}

int run_callgraph(const std::string& trace, const CommonOptions& common, const std::string& format) {
    const AnalysisOptions options = to_analysis_options(common);
    const Analysis a = analyze_trace_file(trace, options, stderr_sink());
    const auto vs = views(a, common.per_thread);
    for (const auto& [title, root] : vs) {
        if (common.per_thread) {
            std::cout << "## " << title << '\n';
        }
        if (format == "edges") {
            std::cout << render_edges(project_call_graph(*root));
        } else {
            for (const auto& line : folded_stacks(*root)) {
                std::cout << line << '\n';
            }
        }
    }
    return 0;
}

int run_export(const std::string& trace, const CommonOptions& common, const std::string& format,
               const std::string& out_path) {
    if (format == "tsv" || format == "jsonl") {
        const Trace t = read_trace_file(trace, common.lenient ? ParseMode::Lenient : ParseMode::Strict, stderr_sink());
        // cross-thread interleaving is not meaningful; threads are written in tid order
        std::string content;
        if (format == "tsv") {
            content = "# cct-lens trace v1\n";
        }
        for (const auto& th : t.threads) {
            for (const auto& ev : th.events) {
                content += format == "tsv" ? format_trace_event(ev) : format_jsonl_event(ev);
                content += '\n';
            }
        }
        write_output(out_path, content);
        return 0;
    }
    const AnalysisOptions options = to_analysis_options(common);
    const Analysis a = analyze_trace_file(trace, options, stderr_sink());
    if (format == "folded") {
        std::string content;
        for (const auto& [title, root] : views(a, common.per_thread)) {
            for (const auto& line : folded_stacks(*root)) {
                content += line + '\n';
            }
        }
        write_output(out_path, content);
    } else if (common.per_thread) {
        write_output(out_path, serialize_cct(a.forest.roots));
    } else {
        write_output(out_path, serialize_cct(*a.forest.merged));
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"cct-lens: calling context trees, hot spots and component utilization from enter/exit traces"};
    app.require_subcommand(1);

    std::string preset;
    std::string spec_path;
    std::optional<std::uint64_t> seed;
    std::optional<double> jitter;
    std::optional<std::uint32_t> threads;
    std::uint64_t users = 20;
    std::string out_path;
    auto* sim = app.add_subcommand("simulate", "Generate a deterministic synthetic trace");
    auto* preset_opt = sim->add_option("--preset", preset, "figure8 | load");
    auto* spec_opt = sim->add_option("--spec", spec_path, "Workload spec file (JSON)")->check(CLI::ExistingFile);
    preset_opt->excludes(spec_opt);
    sim->add_option("--seed", seed, "Override the seed");
    sim->add_option("--jitter", jitter, "Override the latency jitter half-width");
    sim->add_option("--threads", threads, "Override the thread count");
    sim->add_option("--users", users, "User count for the load preset")->capture_default_str();
    sim->add_option("-o,--output", out_path, "Trace file (default: standard output)");

    CommonOptions common;
    std::string trace_path;
    std::string format = "text";
    std::string snapshot_out;
    std::string label;
    std::uint64_t snapshot_users = 0;
    auto* analyze = app.add_subcommand("analyze", "Hot-spot, total-time and component tables for a trace");
    analyze->add_option("trace", trace_path, "Trace file")->required();
    analyze->add_option("--format", format, "text | csv | json")->check(CLI::IsMember({"text", "csv", "json"}));
    analyze->add_option("--snapshot-out", snapshot_out, "Persist a snapshot document");
    analyze->add_option("--label", label, "Snapshot label (default: <users>-user)");
    analyze->add_option("--users", snapshot_users, "User count recorded in the snapshot");
    add_common(analyze, common);

    std::string snap_a;
    std::string snap_b;
    std::string diff_format = "text";
    auto* diff_cmd = app.add_subcommand("diff", "Compare two snapshots by average time per invocation");
    diff_cmd->add_option("a", snap_a, "Baseline snapshot")->required();
    diff_cmd->add_option("b", snap_b, "Comparison snapshot")->required();
    diff_cmd->add_option("--format", diff_format, "text | csv | json")->check(CLI::IsMember({"text", "csv", "json"}));

    CommonOptions cg_common;
    std::string cg_trace;
    std::string cg_format = "edges";
    auto* callgraph = app.add_subcommand("callgraph", "Caller/callee edges or folded stacks");
    callgraph->add_option("trace", cg_trace, "Trace file")->required();
    callgraph->add_option("--format", cg_format, "edges | folded")->check(CLI::IsMember({"edges", "folded"}));
    add_common(callgraph, cg_common);

    CommonOptions ex_common;
    std::string ex_trace;
    std::string ex_format = "cct";
    std::string ex_out;
    auto* exp = app.add_subcommand("export", "Write the CCT document, folded stacks, or the trace as TSV/JSON-lines");
    exp->add_option("trace", ex_trace, "Trace file")->required();
    exp->add_option("--format", ex_format, "cct | folded | tsv | jsonl")
        ->check(CLI::IsMember({"cct", "folded", "tsv", "jsonl"}));
    exp->add_option("-o,--output", ex_out, "Output file (default: standard output)");
    add_common(exp, ex_common);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }

    try {
        if (sim->parsed()) {
            if (preset.empty() && spec_path.empty()) {
                std::cerr << "error: simulate needs --preset or --spec\n";
                return 1;
            }
            return run_simulate(preset, spec_path, seed, jitter, threads, users, out_path);
        }
        if (analyze->parsed()) {
            return run_analyze(trace_path, common, format, snapshot_out, label, snapshot_users);
        }
        if (diff_cmd->parsed()) {
            return run_diff(snap_a, snap_b, diff_format);
        }
        if (callgraph->parsed()) {
            return run_callgraph(cg_trace, cg_common, cg_format);
        }
        if (exp->parsed()) {
            return run_export(ex_trace, ex_common, ex_format, ex_out);
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 1;
}
