#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "cctlens/cct.hpp"
#include "cctlens/components.hpp"
#include "cctlens/filters.hpp"
#include "cctlens/metrics.hpp"
#include "cctlens/report.hpp"
#include "cctlens/snapshot.hpp"
#include "cctlens/trace.hpp"
#include "cctlens/workload.hpp"

namespace py = pybind11;
using namespace cctlens;

namespace {

FilterSet make_filters(const std::vector<std::string>& include, const std::vector<std::string>& exclude) {
    FilterSet fs;
    for (const auto& p : include) {
        fs.includes.emplace_back(p);
    }
    for (const auto& p : exclude) {
        fs.excludes.emplace_back(p);
    }
    return fs;
}

FilterMode parse_mode(const std::string& mode) {
    if (mode == "attribute") {
        return FilterMode::AttributeToParent;
    }
    if (mode == "drop") {
        return FilterMode::DropSubtree;
    }
    throw std::invalid_argument("filter mode must be 'attribute' or 'drop'");
}

py::tuple rational(const Rational& r) {
    return py::make_tuple(r.num(), r.den());
}

py::list hotspot_list(const std::vector<HotSpotRow>& rows) {
    py::list out;
    for (const auto& r : rows) {
        py::dict d;
        d["method"] = r.method;
        d["self_time"] = r.self_time;
        d["self_pct"] = r.self_pct;
        d["invocations"] = r.invocations;
        d["avg_per_invocation"] = rational(r.avg_per_invocation());
        out.append(d);
    }
    return out;
}

py::list component_list(const std::vector<ComponentUtilizationRow>& rows) {
    py::list out;
    for (const auto& r : rows) {
        py::dict d;
        d["component"] = r.component;
        d["tier"] = std::string(to_string(r.tier));
        d["self_time"] = r.self_time;
        d["utilization_pct"] = r.utilization_pct;
        d["invocations"] = r.invocations;
        out.append(d);
    }
    return out;
}

WorkloadSpec preset_spec(const std::string& name, std::uint64_t users, double jitter, std::uint64_t seed) {
    if (name == "figure8") {
        return figure8_preset();
    }
    if (name == "load") {
        return load_preset(users, jitter, seed);
    }
    throw std::invalid_argument("unknown preset '" + name + "'");
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Calling context trees, hot spots and component utilization from enter/exit traces";

    py::register_exception<TraceError>(m, "TraceError", PyExc_ValueError);

    py::class_<TraceEvent>(m, "TraceEvent")
        .def(py::init([](Nanos ts, ThreadId tid, const std::string& kind, const std::string& method) {
                 if (kind != "E" && kind != "X") {
                     throw std::invalid_argument("kind must be 'E' or 'X'");
                 }
                 return TraceEvent{ts, tid, kind == "E" ? EventKind::Enter : EventKind::Exit, method};
             }),
             py::arg("ts"), py::arg("tid"), py::arg("kind"), py::arg("method"))
        .def_readonly("ts", &TraceEvent::ts)
        .def_readonly("tid", &TraceEvent::tid)
        .def_property_readonly("kind", [](const TraceEvent& e) { return e.kind == EventKind::Enter ? "E" : "X"; })
        .def_readonly("method", &TraceEvent::method)
        .def("__eq__", [](const TraceEvent& a, const TraceEvent& b) { return a == b; })
        .def("__repr__", [](const TraceEvent& e) { return "TraceEvent(" + format_trace_event(e) + ")"; });

    m.def("parse_trace_line", &parse_trace_line, py::arg("line"), py::arg("line_no") = 0,
          "Decode one canonical trace record; None for comments and blank lines.");
    m.def("format_trace_event", &format_trace_event);

    m.def(
        "read_trace",
        [](const std::string& text, bool lenient) {
            Trace t = read_trace_text(text, lenient ? ParseMode::Lenient : ParseMode::Strict);
            py::dict out;
            for (auto& th : t.threads) {
                out[py::int_(th.tid)] = th.events;
            }
            return out;
        },
        py::arg("text"), py::arg("lenient") = false, "Events grouped by thread id.");

    m.def(
        "validate_trace",
        [](const std::string& text) {
            TraceValidationReport r = validate_trace(read_trace_text(text, ParseMode::Lenient));
            py::dict d;
            d["event_count"] = r.event_count;
            d["thread_count"] = r.thread_count;
            d["unmatched_enters"] = r.unmatched_enters;
            d["orphan_exits"] = r.orphan_exits;
            d["ordering_violations"] = r.ordering_violations;
            d["well_formed"] = r.well_formed();
            return d;
        },
        py::arg("text"));

    py::class_<CctNode>(m, "CctNode")
        .def_readonly("method", &CctNode::method)
        .def_readonly("invocations", &CctNode::invocations)
        .def_readonly("total_time", &CctNode::total_time)
        .def_readonly("truncated", &CctNode::truncated)
        .def_readonly("children", &CctNode::children)
        .def_property_readonly("self_time", [](const CctNode& n) { return self_time(n); })
        .def("__eq__", [](const CctNode& a, const CctNode& b) { return a == b; });

    m.def(
        "build_cct",
        [](const std::vector<TraceEvent>& events, bool lenient) {
            return build_cct(events, BuildOptions{lenient ? BuildMode::Lenient : BuildMode::Strict, std::nullopt});
        },
        py::arg("events"), py::arg("lenient") = false);
    m.def(
        "build_merged_cct",
        [](const std::string& text, bool lenient) {
            const auto mode = lenient ? ParseMode::Lenient : ParseMode::Strict;
            CctForest forest = build_forest(read_trace_text(text, mode),
                                            BuildOptions{lenient ? BuildMode::Lenient : BuildMode::Strict, std::nullopt});
            return merge_ccts(forest);
        },
        py::arg("text"), py::arg("lenient") = false);
    m.def("self_time", &self_time);
    m.def(
        "project_call_graph",
        [](const CctNode& root) {
            py::list out;
            for (const auto& e : project_call_graph(root)) {
                py::dict d;
                d["caller"] = e.caller;
                d["callee"] = e.callee;
                d["calls"] = e.calls;
                d["callee_total_time"] = e.callee_total_time;
                out.append(d);
            }
            return out;
        },
        py::arg("root"));
    m.def("folded_stacks", &folded_stacks);
    m.def("serialize_cct", py::overload_cast<const CctNode&>(&serialize_cct));
    m.def("deserialize_cct", &deserialize_cct);

    m.def(
        "apply_filter",
        [](const CctNode& root, const std::vector<std::string>& include, const std::vector<std::string>& exclude,
           const std::string& mode) { return apply_filter(root, make_filters(include, exclude), parse_mode(mode)); },
        py::arg("root"), py::arg("include") = std::vector<std::string>{},
        py::arg("exclude") = std::vector<std::string>{}, py::arg("mode") = "attribute");

    m.def("hotspots", [](const CctNode& root) { return hotspot_list(hotspots(root)); }, py::arg("root"));
    m.def(
        "total_time_table",
        [](const CctNode& root) {
            py::list out;
            for (const auto& r : total_time_table(root)) {
                out.append(py::make_tuple(r.method, r.total_time, r.calls));
            }
            return out;
        },
        py::arg("root"));
    m.def(
        "avg_per_invocation",
        [](Nanos self, std::uint64_t invocations) { return rational(avg_per_invocation(self, invocations)); },
        py::arg("self_time"), py::arg("invocations"), "Exact (numerator, denominator) in nanoseconds.");
    m.def("format_ms", py::overload_cast<Nanos>(&format_ms));

    m.def(
        "classify",
        [](const std::string& method) {
            auto c = default_hr_catalog().classify(method);
            return py::make_tuple(c.component, std::string(to_string(c.tier)));
        },
        py::arg("method"));
    m.def(
        "component_utilization",
        [](const CctNode& root) { return component_list(component_utilization(hotspots(root), default_hr_catalog())); },
        py::arg("root"));

    m.def(
        "simulate_preset",
        [](const std::string& name, std::uint64_t users, double jitter, std::uint64_t seed) {
            return simulate(preset_spec(name, users, jitter, seed));
        },
        py::arg("name") = "figure8", py::arg("users") = 20, py::arg("jitter") = 0.0, py::arg("seed") = 1);
    m.def(
        "simulate_spec", [](const std::string& document) { return simulate(parse_workload_spec(document)); },
        py::arg("document"));

    m.def(
        "take_snapshot",
        [](const std::string& label, std::uint64_t users, const std::string& trace,
           const std::vector<std::string>& include, const std::vector<std::string>& exclude, const std::string& mode,
           bool lenient) {
            AnalysisOptions opts;
            opts.mode = lenient ? ParseMode::Lenient : ParseMode::Strict;
            opts.filters = make_filters(include, exclude);
            opts.filter_mode = parse_mode(mode);
            std::istringstream in(trace);
            return serialize_snapshot(take_snapshot(label, users, in, opts));
        },
        py::arg("label"), py::arg("users"), py::arg("trace"), py::arg("include") = std::vector<std::string>{},
        py::arg("exclude") = std::vector<std::string>{}, py::arg("mode") = "attribute", py::arg("lenient") = false,
        "Snapshot document (JSON text).");
    m.def(
        "diff_snapshots",
        [](const std::string& a_doc, const std::string& b_doc) {
            py::list out;
            for (const auto& r : diff(deserialize_snapshot(a_doc), deserialize_snapshot(b_doc))) {
                py::dict d;
                d["method"] = r.method;
                d["status"] = std::string(to_string(r.status));
                d["ratio"] = r.ratio ? py::object(rational(*r.ratio)) : py::none();
                d["invocations_a"] = r.invocations_a;
                d["invocations_b"] = r.invocations_b;
                out.append(d);
            }
            return out;
        },
        py::arg("a"), py::arg("b"));
}
