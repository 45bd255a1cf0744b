#include <doctest.h>

#include <functional>
#include <map>
#include <random>
#include <set>

#include "cctlens/cct.hpp"
#include "oracles.hpp"

using namespace cctlens;

namespace {

std::vector<TraceEvent> events(std::initializer_list<std::tuple<char, Nanos, const char*>> list, ThreadId tid = 1) {
    std::vector<TraceEvent> out;
    for (const auto& [k, ts, m] : list) {
        out.push_back(TraceEvent{ts, tid, k == 'E' ? EventKind::Enter : EventKind::Exit, m});
    }
    return out;
}

Nanos sum_self(const CctNode& n) {
    Nanos s = self_time(n);
    for (const auto& c : n.children) {
        s += sum_self(c);
    }
    return s;
}

void visit_paths(const CctNode& n, std::vector<std::string>& path,
                 const std::function<void(const std::vector<std::string>&, const CctNode&)>& fn) {
    for (const auto& c : n.children) {
        path.push_back(c.method);
        fn(path, c);
        visit_paths(c, path, fn);
        path.pop_back();
    }
}

std::map<std::vector<std::string>, CctNode> by_path(const CctNode& root) {
    std::map<std::vector<std::string>, CctNode> out;
    std::vector<std::string> path;
    visit_paths(root, path, [&](const auto& p, const CctNode& n) { out[p] = n; });
    return out;
}

CctNode tree_from(std::uint64_t seed) {
    Trace t = testing::random_trace(seed);
    return merge_ccts(build_forest(t));
}

}  // namespace

TEST_CASE("build_cct: nested call") {
    const auto root = build_cct(events({{'E', 0, "a"}, {'E', 10, "b"}, {'X', 30, "b"}, {'X', 40, "a"}}));
    CHECK(root.method == "<root:1>");
    CHECK(root.invocations == 1);
    REQUIRE(root.children.size() == 1);
    const CctNode& a = root.children[0];
    CHECK(a.method == "a");
    CHECK(a.invocations == 1);
    CHECK(a.total_time == 40);
    REQUIRE(a.children.size() == 1);
    CHECK(a.children[0].method == "b");
    CHECK(a.children[0].invocations == 1);
    CHECK(a.children[0].total_time == 20);
    CHECK(self_time(a) == 20);
    CHECK(self_time(a.children[0]) == 20);
}

TEST_CASE("build_cct: same-parent contexts merge") {
    const auto root = build_cct(events({{'E', 0, "a"}, {'X', 5, "a"}, {'E', 5, "a"}, {'X', 9, "a"}}));
    REQUIRE(root.children.size() == 1);
    CHECK(root.children[0].invocations == 2);
    CHECK(root.children[0].total_time == 9);
}

TEST_CASE("build_cct: recursion builds a chain") {
    const auto root = build_cct(events({{'E', 0, "a"}, {'E', 3, "a"}, {'X', 7, "a"}, {'X', 10, "a"}}));
    REQUIRE(root.children.size() == 1);
    const CctNode& outer = root.children[0];
    CHECK(outer.invocations == 1);
    CHECK(outer.total_time == 10);
    REQUIRE(outer.children.size() == 1);
    CHECK(outer.children[0].method == "a");
    CHECK(outer.children[0].invocations == 1);
    CHECK(outer.children[0].total_time == 4);
}

TEST_CASE("self_time edge cases") {
    CctNode leaf{"x", 1, 17, false, {}};
    CHECK(self_time(leaf) == 17);
    CctNode full{"p", 1, 10, false, {CctNode{"c", 1, 4, false, {}}, CctNode{"d", 1, 6, false, {}}}};
    CHECK(self_time(full) == 0);
}

TEST_CASE("children keep first-encounter order") {
    const auto root = build_cct(events({{'E', 0, "z"}, {'X', 1, "z"}, {'E', 1, "a"}, {'X', 2, "a"}, {'E', 2, "z"},
                                        {'X', 3, "z"}}));
    REQUIRE(root.children.size() == 2);
    CHECK(root.children[0].method == "z");
    CHECK(root.children[1].method == "a");
}

TEST_CASE("strict mode rejects orphan exits and unmatched enters") {
    CHECK_THROWS_AS(build_cct(events({{'E', 0, "a"}, {'X', 1, "b"}})), TraceError);
    CHECK_THROWS_AS(build_cct(events({{'X', 1, "b"}})), TraceError);
    CHECK_THROWS_AS(build_cct(events({{'E', 0, "a"}})), TraceError);
    CHECK_THROWS_AS(build_cct(events({{'E', 5, "a"}, {'X', 4, "a"}})), TraceError);
}

TEST_CASE("lenient mode drops orphans and closes open frames at the last ts") {
    const BuildOptions lenient{BuildMode::Lenient, std::nullopt};
    CctBuilder b(3, lenient);
    for (const auto& ev : events({{'X', 0, "zz"}, {'E', 2, "a"}, {'E', 4, "b"}, {'X', 6, "b"}, {'E', 7, "c"}, {'X', 8, "q"}},
                                 3)) {
        b.add(ev);
    }
    const CctNode root = b.finish();
    CHECK(b.dropped_exits() == 2);
    CHECK(b.truncated_frames() == 2);
    REQUIRE(root.children.size() == 1);
    const CctNode& a = root.children[0];
    CHECK(a.truncated);
    CHECK(a.total_time == 6);  // closed at ts 8
    REQUIRE(a.children.size() == 2);
    CHECK_FALSE(a.children[0].truncated);
    CHECK(a.children[0].total_time == 2);
    CHECK(a.children[1].truncated);
    CHECK(a.children[1].total_time == 1);
    CHECK(root.total_time == 6);
}

TEST_CASE("lenient mode clamps timestamp regressions") {
    const auto root = build_cct(events({{'E', 10, "a"}, {'E', 12, "b"}, {'X', 11, "b"}, {'X', 20, "a"}}),
                                BuildOptions{BuildMode::Lenient, std::nullopt});
    CHECK(root.children[0].children[0].total_time == 0);
    CHECK(root.children[0].total_time == 10);
}

TEST_CASE("max_depth folds deeper frames into the deepest recorded one") {
    const auto evs = events({{'E', 0, "a"}, {'E', 1, "b"}, {'E', 2, "c"}, {'X', 5, "c"}, {'X', 6, "b"}, {'X', 9, "a"}});
    const auto root = build_cct(evs, BuildOptions{BuildMode::Strict, 2});
    REQUIRE(root.children.size() == 1);
    const CctNode& b = root.children[0].children.at(0);
    CHECK(b.method == "b");
    CHECK(b.children.empty());
    CHECK(b.total_time == 5);
    CHECK(self_time(b) == 5);
}

TEST_CASE("merge_ccts examples") {
    CctForest same;
    same.roots.push_back(build_cct(events({{'E', 0, "a"}, {'X', 10, "a"}}, 1)));
    same.roots.push_back(build_cct(events({{'E', 3, "a"}, {'X', 13, "a"}}, 2)));
    auto merged = merge_ccts(same);
    CHECK(merged.method == kMergedRootLabel);
    CHECK(merged.invocations == 1);
    REQUIRE(merged.children.size() == 1);
    CHECK(merged.children[0].invocations == 2);
    CHECK(merged.children[0].total_time == 20);

    CctForest disjoint;
    disjoint.roots.push_back(build_cct(events({{'E', 0, "a"}, {'X', 1, "a"}}, 1)));
    disjoint.roots.push_back(build_cct(events({{'E', 0, "b"}, {'X', 2, "b"}}, 2)));
    merged = merge_ccts(disjoint);
    REQUIRE(merged.children.size() == 2);
    CHECK(merged.children[0] == disjoint.roots[0].children[0]);
    CHECK(merged.children[1] == disjoint.roots[1].children[0]);

    CctForest single;
    single.roots.push_back(build_cct(events({{'E', 0, "a"}, {'E', 1, "b"}, {'X', 2, "b"}, {'X', 4, "a"}}, 7)));
    merged = merge_ccts(single);
    CctNode relabeled = single.roots[0];
    relabeled.method = std::string(kMergedRootLabel);
    CHECK(merged == relabeled);
}

TEST_CASE("merge ORs truncated flags") {
    CctForest f;
    f.roots.push_back(CctNode{"<root:1>", 1, 5, false, {CctNode{"a", 1, 5, true, {}}}});
    f.roots.push_back(CctNode{"<root:2>", 1, 3, false, {CctNode{"a", 1, 3, false, {}}}});
    CHECK(merge_ccts(f).children[0].truncated);
}

TEST_CASE("project_call_graph collapses contexts") {
    // root -> a -> b (2 calls), root -> c -> b (3 calls), counted by brute force over the events
    auto evs = events({{'E', 0, "a"}, {'E', 0, "b"}, {'X', 1, "b"}, {'E', 1, "b"}, {'X', 3, "b"}, {'X', 4, "a"},
                       {'E', 4, "c"}, {'E', 4, "b"}, {'X', 5, "b"}, {'E', 5, "b"}, {'X', 6, "b"}, {'E', 6, "b"},
                       {'X', 9, "b"}, {'X', 10, "c"}});
    const auto root = build_cct(evs);
    const auto edges = project_call_graph(root);
    std::map<std::pair<std::string, std::string>, CallGraphEdge> by_pair;
    for (const auto& e : edges) {
        CHECK(by_pair.count({e.caller, e.callee}) == 0);
        by_pair[{e.caller, e.callee}] = e;
    }
    CHECK(by_pair.at({"a", "b"}).calls == 2);
    CHECK(by_pair.at({"a", "b"}).callee_total_time == 3);
    CHECK(by_pair.at({"c", "b"}).calls == 3);
    CHECK(by_pair.at({"c", "b"}).callee_total_time == 5);
    CHECK(by_pair.at({"<root:1>", "a"}).calls == 1);

    const auto rec = build_cct(events({{'E', 0, "a"}, {'E', 3, "a"}, {'X', 7, "a"}, {'X', 10, "a"}}));
    const auto rec_edges = project_call_graph(rec);
    REQUIRE(rec_edges.size() == 2);
    CHECK(rec_edges[1] == CallGraphEdge{"a", "a", 1, 4});
}

TEST_CASE("call graph conserves calls and per-method totals") {
    for (std::uint64_t seed = 0; seed < 200; ++seed) {
        const CctNode root = tree_from(seed);
        std::uint64_t node_invocations = 0;
        std::map<std::string, Nanos> node_totals;
        std::vector<std::string> path;
        visit_paths(root, path, [&](const auto&, const CctNode& n) {
            node_invocations += n.invocations;
            node_totals[n.method] += n.total_time;
        });
        std::uint64_t edge_calls = 0;
        std::map<std::string, Nanos> edge_totals;
        for (const auto& e : project_call_graph(root)) {
            edge_calls += e.calls;
            edge_totals[e.callee] += e.callee_total_time;
        }
        CHECK(edge_calls == node_invocations);
        CHECK(edge_totals == node_totals);
    }
}

TEST_CASE("folded stacks: one line per root path") {
    const auto root = build_cct(events({{'E', 0, "a"}, {'E', 10, "b"}, {'X', 30, "b"}, {'X', 40, "a"}}));
    const auto lines = folded_stacks(root);
    REQUIRE(lines.size() == 2);
    CHECK(lines[0] == "a 20");
    CHECK(lines[1] == "a;b 20");

    for (std::uint64_t seed = 0; seed < 50; ++seed) {
        const CctNode t = tree_from(seed);
        CHECK(folded_stacks(t).size() == by_path(t).size());
    }
}

TEST_CASE("serialization round-trips") {
    const CctNode single{"<root:1>", 1, 0, false, {}};
    const auto doc = serialize_cct(single);
    const auto back = deserialize_cct(doc);
    REQUIRE(back.size() == 1);
    CHECK(back[0] == single);

    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        CctNode t = tree_from(seed);
        if (!t.children.empty()) {
            t.children.back().truncated = seed % 2 == 0;
        }
        const auto again = deserialize_cct(serialize_cct(t));
        REQUIRE(again.size() == 1);
        CHECK(again[0] == t);
    }

    const auto empty = serialize_cct(std::span<const CctNode>{});
    CHECK(deserialize_cct(empty).empty());
    CHECK_THROWS(deserialize_cct(""));
    CHECK_THROWS(deserialize_cct(R"({"schema":"other","roots":[]})"));
}

TEST_CASE("conservation and oracle equivalence on random traces") {
    for (std::uint64_t seed = 0; seed < 300; ++seed) {
        const Trace trace = testing::random_trace(seed);
        const CctForest forest = build_forest(trace);
        for (const auto& root : forest.roots) {
            CHECK(sum_self(root) == root.total_time);
        }
        const CctNode merged = merge_ccts(forest);
        CHECK(sum_self(merged) == merged.total_time);

        std::map<std::string, testing::MethodTotals> from_tree;
        std::vector<std::string> path;
        visit_paths(merged, path, [&](const auto&, const CctNode& n) {
            from_tree[n.method].self += self_time(n);
            from_tree[n.method].invocations += n.invocations;
        });
        CHECK(from_tree == testing::stack_replay(trace));
    }
}

TEST_CASE("determinism: identical input serializes identically") {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const std::string text = testing::to_text(testing::random_trace(seed));
        const auto a = merge_ccts(build_forest(read_trace_text(text)));
        const auto b = merge_ccts(build_forest(read_trace_text(text)));
        CHECK(serialize_cct(a) == serialize_cct(b));
    }
}

TEST_CASE("monotonicity: inserting a balanced pair inside a frame") {
    std::mt19937_64 rng(5);
    for (std::uint64_t seed = 0; seed < 200; ++seed) {
        Trace trace = testing::random_trace(seed);
        if (trace.threads.empty()) {
            continue;
        }
        auto& th = trace.threads[rng() % trace.threads.size()];
        std::vector<std::size_t> enters;
        for (std::size_t i = 0; i < th.events.size(); ++i) {
            if (th.events[i].kind == EventKind::Enter) {
                enters.push_back(i);
            }
        }
        const std::size_t at = enters[rng() % enters.size()];
        // context path of the frame receiving the insertion
        std::vector<std::string> frame_path;
        for (std::size_t i = 0; i <= at; ++i) {
            if (th.events[i].kind == EventKind::Enter) {
                frame_path.push_back(th.events[i].method);
            } else {
                frame_path.pop_back();
            }
        }

        const CctNode before = build_cct(th);
        const Nanos d = 1 + static_cast<Nanos>(rng() % 50);
        const Nanos ts = th.events[at].ts;
        for (std::size_t i = at + 1; i < th.events.size(); ++i) {
            th.events[i].ts += d;
        }
        th.events.insert(th.events.begin() + static_cast<std::ptrdiff_t>(at + 1),
                         {TraceEvent{ts, th.tid, EventKind::Enter, "fresh()"},
                          TraceEvent{ts + d, th.tid, EventKind::Exit, "fresh()"}});
        const CctNode after = build_cct(th);

        const auto old_nodes = by_path(before);
        const auto new_nodes = by_path(after);
        for (const auto& [path, node] : old_nodes) {
            REQUIRE(new_nodes.count(path) == 1);
            const CctNode& now = new_nodes.at(path);
            const bool ancestor = path.size() <= frame_path.size() &&
                                  std::equal(path.begin(), path.end(), frame_path.begin());
            if (ancestor) {
                CHECK(now.total_time == node.total_time + d);
            } else {
                CHECK(now.total_time == node.total_time);
                CHECK(now.invocations == node.invocations);
            }
        }
        auto fresh_path = frame_path;
        fresh_path.push_back("fresh()");
        CHECK(new_nodes.at(fresh_path).total_time >= d);
    }
}
