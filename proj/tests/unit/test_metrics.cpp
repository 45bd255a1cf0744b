#include <doctest.h>

#include <algorithm>
#include <numeric>

#include "cctlens/metrics.hpp"
#include "oracles.hpp"

using namespace cctlens;

namespace {

constexpr Nanos kMs = 1'000'000;

CctNode node(std::string m, Nanos total, std::vector<CctNode> kids = {}, std::uint64_t inv = 1) {
    return CctNode{std::move(m), inv, total, false, std::move(kids)};
}

}  // namespace

TEST_CASE("avg_per_invocation is exact") {
    CHECK(avg_per_invocation(15'200'000, 10) == Rational(1'520'000));
    CHECK(avg_per_invocation(946 * kMs, 20) == Rational(47'300'000));
    CHECK(avg_per_invocation(1267 * kMs, 50) == Rational(25'340'000));
    CHECK(avg_per_invocation(10, 3) == Rational(10, 3));
    CHECK(avg_per_invocation(10, 3) * Rational(3) == Rational(10));
    CHECK_THROWS_AS(avg_per_invocation(5, 0), std::invalid_argument);
}

TEST_CASE("hotspots aggregate across contexts and skip the root") {
    const CctNode root = node("<root:all>", 40, {node("a", 40, {node("b", 20)})});
    const auto rows = hotspots(root);
    REQUIRE(rows.size() == 2);
    CHECK(rows[0].method == "a");
    CHECK(rows[1].method == "b");
    CHECK(rows[0].self_time == 20);
    CHECK(rows[0].self_pct == doctest::Approx(0.5));

    const auto one = hotspots(node("<root:1>", 20, {node("x", 20)}));
    REQUIRE(one.size() == 1);
    CHECK(one[0].self_pct == 1.0);

    CHECK(hotspots(node("<root:1>", 0)).empty());
}

TEST_CASE("hotspots break self-time ties by name") {
    const auto rows = hotspots(node("<root:1>", 15, {node("z", 5), node("b", 5), node("m", 5)}));
    REQUIRE(rows.size() == 3);
    CHECK(rows[0].method == "b");
    CHECK(rows[1].method == "m");
    CHECK(rows[2].method == "z");
}

TEST_CASE("total_time_table examples") {
    const auto t = total_time_table(node("<root:1>", 40, {node("a", 40, {node("b", 20)})}));
    REQUIRE(t.size() == 2);
    CHECK(t[0] == TotalTimeRow{"a", 40, 1});
    CHECK(t[1] == TotalTimeRow{"b", 20, 1});

    const CctNode two_contexts = node("<root:1>", 30, {node("p", 10, {node("m", 5)}), node("q", 20, {node("m", 7, {}, 2)})});
    const auto rows = total_time_table(two_contexts);
    const auto it = std::find_if(rows.begin(), rows.end(), [](const auto& r) { return r.method == "m"; });
    REQUIRE(it != rows.end());
    CHECK(it->total_time == 12);
    CHECK(it->calls == 3);

    const CctNode leaves = node("<root:1>", 9, {node("x", 4), node("y", 5)});
    const auto totals = total_time_table(leaves);
    const auto hs = hotspots(leaves);
    REQUIRE(totals.size() == hs.size());
    for (std::size_t i = 0; i < hs.size(); ++i) {
        CHECK(totals[i].method == hs[i].method);
        CHECK(totals[i].total_time == hs[i].self_time);
    }
}

TEST_CASE("table properties over random traces") {
    for (std::uint64_t seed = 0; seed < 300; ++seed) {
        const Trace trace = testing::random_trace(seed);
        const CctNode t = merge_ccts(build_forest(trace));
        const auto rows = hotspots(t);
        CHECK(total_self_time(rows) == t.total_time);
        if (!rows.empty() && t.total_time > 0) {
            const double pct = std::accumulate(rows.begin(), rows.end(), 0.0,
                                               [](double s, const HotSpotRow& r) { return s + r.self_pct; });
            CHECK(pct == doctest::Approx(1.0).epsilon(1e-9));
        }
        for (const auto& r : rows) {
            if (r.invocations > 0) {
                CHECK(r.avg_per_invocation() * Rational(static_cast<std::int64_t>(r.invocations)) == Rational(r.self_time));
            }
        }
        const auto inclusive = testing::inclusive_replay(trace);
        for (const auto& row : total_time_table(t)) {
            CHECK(row.total_time == inclusive.at(row.method));
            const auto hs = std::find_if(rows.begin(), rows.end(), [&](const auto& h) { return h.method == row.method; });
            REQUIRE(hs != rows.end());
            CHECK(row.total_time >= hs->self_time);
        }
    }
}
