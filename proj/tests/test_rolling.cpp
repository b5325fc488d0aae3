#include <catch_amalgamated.hpp>

#include <algorithm>
#include <random>

#include "psps/metrics.hpp"
#include "psps/report.hpp"
#include "psps/rolling.hpp"
#include "support/enumerate.hpp"
#include "support/fixtures.hpp"

using namespace psps;
using Catch::Matchers::WithinAbs;

namespace {

SolverConfig tight() {
    SolverConfig c;
    c.relative_mip_gap = 1e-6;
    return c;
}

ScenarioConfig scenario(int days, std::size_t hours, std::optional<FairnessMethod> method = std::nullopt) {
    ScenarioConfig c;
    c.days = days;
    c.hours = hours;
    c.method = method;
    c.solver = tight();
    return c;
}

DayInputs day_of(int day, std::vector<double> risk, const DemandProfile& demand, double alpha) {
    DayInputs in;
    in.day = day;
    in.risk = std::move(risk);
    in.forecast = demand;
    in.actual = demand;
    in.alpha = alpha;
    return in;
}

// Generator at bus 1 feeding two identical radial loads of 1.0; capacity 1.5
// means half a unit is shed whenever both feeders are closed.
Network fork_grid() {
    std::vector<Bus> buses{{1, "gen", 0.0, 0.0}, {2, "left", -1.0, 1.0}, {3, "right", 1.0, 1.0}};
    std::vector<Generator> gens{{1, 1, 0.0, 1.5}};
    std::vector<Line> lines;
    for (int to : {2, 3}) {
        Line l;
        l.id = to - 1;
        l.from_bus = 1;
        l.to_bus = to;
        l.x = 0.1;
        l.f_max = 1.0;
        l.path = {{0.0, 0.0}, {buses[static_cast<std::size_t>(to - 1)].lon, 1.0}};
        lines.push_back(l);
    }
    return Network(buses, gens, lines);
}

DemandProfile fork_demand() {
    DemandProfile d(3, 1);
    d.values[1][0] = 1.0;
    d.values[2][0] = 1.0;
    return d;
}

}  // namespace

TEST_CASE("baseline on the triangle at the extremes of alpha", "[rolling]") {
    const Network tri = testing::triangle();
    const auto d = testing::triangle_demand();

    SECTION("alpha = 1 without risk serves everything") {
        const auto res = run_baseline(tri, {day_of(1, {0, 0, 0}, d, 1.0)}, scenario(1, 1));
        REQUIRE(res.days.size() == 1);
        CHECK_THAT(res.days[0].shed_actual_total(), WithinAbs(0.0, 1e-9));
        CHECK_THAT(res.days[0].shed_pred_total(), WithinAbs(0.0, 1e-9));
        // every switching plan is free here, so closing all lines must also be optimal
        PspsModel closed = build_opt_psps(tri, d, std::vector<double>(3, 0.0), ObjectiveContext::make(1.0, d, std::vector<double>(3, 0.0)));
        fix_switching(closed, {1, 1, 1});
        CHECK_THAT(solve(closed, tight()).objective, WithinAbs(res.days[0].objective_base, 1e-9));
        CHECK(realtime_operate(tri, {1, 1, 1}, d).total_shed() < 1e-9);
    }
    SECTION("alpha = 0 opens every line and sheds all demand") {
        const auto res = run_baseline(tri, {day_of(1, {3, 1, 2}, d, 0.0)}, scenario(1, 1));
        CHECK(res.days[0].z == std::vector<int>{0, 0, 0});
        CHECK_THAT(res.days[0].shed_actual_total(), WithinAbs(d.total(), 1e-9));
        CHECK_THAT(res.cumulative_actual[1], WithinAbs(1.0, 1e-9));
        CHECK_THAT(res.cumulative_actual[2], WithinAbs(0.5, 1e-9));
    }
}

TEST_CASE("baseline carries no state between identical days", "[rolling]") {
    const Network tri = testing::triangle();
    const auto d = testing::triangle_demand(2);
    std::vector<DayInputs> days;
    for (int j = 1; j <= 3; ++j) days.push_back(day_of(j, {4, 1, 2}, d, 0.45));
    const auto res = run_baseline(tri, days, scenario(3, 2));
    REQUIRE(res.days.size() == 3);
    for (const auto& rec : res.days) {
        CHECK(rec.z == res.days[0].z);
        CHECK_THAT(rec.shed_actual_total(), WithinAbs(res.days[0].shed_actual_total(), 1e-8));
    }
}

TEST_CASE("permuting identical days keeps the multiset of decisions", "[rolling]") {
    std::mt19937_64 rng(21);
    const auto inst = testing::random_instance(rng, 5, 6, 2);
    std::vector<DayInputs> days;
    std::vector<double> other = inst.risk;
    std::reverse(other.begin(), other.end());
    days.push_back(day_of(1, inst.risk, inst.demand, 0.4));
    days.push_back(day_of(2, other, inst.demand, 0.4));
    days.push_back(day_of(3, inst.risk, inst.demand, 0.4));
    auto forward = run_baseline(inst.net, days, scenario(3, 2));
    std::swap(days[0], days[1]);
    auto swapped = run_baseline(inst.net, days, scenario(3, 2));
    std::vector<std::vector<int>> a, b;
    for (const auto& r : forward.days) a.push_back(r.z);
    for (const auto& r : swapped.days) b.push_back(r.z);
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    CHECK(a == b);
}

TEST_CASE("real-time operation", "[rolling]") {
    const Network tri = testing::triangle();
    const auto d = testing::triangle_demand(2);

    SECTION("all lines open sheds the whole demand") {
        const auto rt = realtime_operate(tri, {0, 0, 0}, d);
        for (std::size_t n = 0; n < 3; ++n) {
            for (std::size_t t = 0; t < 2; ++t) CHECK_THAT(rt.s[n][t], WithinAbs(d(n, t), 1e-9));
        }
    }
    SECTION("re-running the planned switching on the forecast reproduces its shed") {
        std::mt19937_64 rng(4);
        for (int k = 0; k < 8; ++k) {
            const auto inst = testing::random_instance(rng, 4, 5, 2);
            const auto plan = solve(build_opt_psps(inst.net, inst.demand, inst.risk,
                                                   ObjectiveContext::make(0.5, inst.demand, inst.risk)), tight());
            const auto rt = realtime_operate(inst.net, plan.z, inst.demand);
            CHECK_THAT(rt.total_shed(), WithinAbs(plan.total_shed(), 1e-6));
            CHECK(verify_solution(inst.net, inst.demand, rt).pass());
        }
    }
    SECTION("ties are broken away from buses with a history of shedding") {
        const Network f = fork_grid();
        const auto fd = fork_demand();
        const ShedTally left_burdened{2, 0.9, {0.0, 1.0, 0.0}};
        const ShedTally right_burdened{2, 0.9, {0.0, 0.0, 1.0}};
        const auto a = realtime_operate(f, {1, 1}, fd, &left_burdened);
        const auto b = realtime_operate(f, {1, 1}, fd, &right_burdened);
        CHECK_THAT(a.total_shed(), WithinAbs(0.5, 1e-8));
        CHECK_THAT(a.s[1][0], WithinAbs(0.0, 1e-8));
        CHECK_THAT(a.s[2][0], WithinAbs(0.5, 1e-8));
        CHECK_THAT(b.s[1][0], WithinAbs(0.5, 1e-8));
        CHECK(verify_solution(f, fd, a).pass());
    }
}

TEST_CASE("least shed under the risk cap", "[rolling]") {
    const Network tri = testing::triangle();
    const auto d = testing::triangle_demand();
    const std::vector<double> risk{3, 1, 2};

    SECTION("a loose cap gives the unconstrained minimum") {
        const auto b = min_shed_bound(tri, d, risk, {0, 1, 0}, 1e9, tight());
        CHECK_THAT(b.total_shed(), WithinAbs(0.0, 1e-9));
    }
    SECTION("zero slack around an all-open plan forces full shedding") {
        const auto b = min_shed_bound(tri, d, risk, {0, 0, 0}, 0.0, tight());
        CHECK(b.z == std::vector<int>{0, 0, 0});
        CHECK_THAT(b.total_shed(), WithinAbs(d.total(), 1e-9));
    }
    SECTION("a cap admitting every line gives zero") {
        CHECK_THAT(min_shed_bound(tri, d, risk, {1, 1, 1}, 0.05, tight()).total_shed(), WithinAbs(0.0, 1e-9));
    }
    SECTION("matches enumeration on random instances") {
        std::mt19937_64 rng(12);
        for (int k = 0; k < 8; ++k) {
            const auto inst = testing::random_instance(rng, 4, 5, 2);
            std::vector<int> zhat(inst.net.num_lines());
            for (auto& z : zhat) z = static_cast<int>(rng() % 2);
            const auto b = min_shed_bound(inst.net, inst.demand, inst.risk, zhat, 0.05, tight());
            PspsModel plain = build_psps_constraints(inst.net, inst.demand);
            add_shed_objective(plain, 1.0);
            add_risk_cap(plain, inst.risk, zhat, 0.05);
            CHECK_THAT(b.total_shed(), WithinAbs(testing::enumerate_binaries(plain.lp).objective, 1e-6));
        }
    }
}

TEST_CASE("fair run at beta = 1 tracks the least-shed bound", "[rolling]") {
    std::mt19937_64 rng(33);
    for (int k = 0; k < 6; ++k) {
        const auto inst = testing::random_instance(rng, 5, 6, 2);
        std::vector<DayInputs> days{day_of(1, inst.risk, inst.demand, 0.35)};
        for (auto method : {FairnessMethod::min_max_shed, FairnessMethod::weighted_penalty, FairnessMethod::shed_range}) {
            auto cfg = scenario(1, 2, method);
            cfg.beta = 1.0;
            const auto res = run_fair(inst.net, days, cfg);
            const auto& rec = res.days[0];
            CHECK(rec.risk_energized <= 1.05 * rec.risk_energized_base + 1e-6);
            REQUIRE(rec.bound_pred);
            CHECK_THAT(rec.shed_pred_total(), WithinAbs(*rec.bound_pred, 1e-6));
            const auto base = run_baseline(inst.net, days, cfg);
            CHECK(rec.shed_pred_total() <= base.days[0].shed_pred_total() + 1e-6);
        }
    }
}

TEST_CASE("weighted penalty on a single day behaves like beta = 1", "[rolling]") {
    std::mt19937_64 rng(35);
    for (int k = 0; k < 6; ++k) {
        const auto inst = testing::random_instance(rng, 5, 6, 2);
        std::vector<DayInputs> days{day_of(1, inst.risk, inst.demand, 0.35)};
        auto cfg = scenario(1, 2, FairnessMethod::weighted_penalty);
        cfg.beta = 0.2;
        const auto low = run_fair(inst.net, days, cfg);
        cfg.beta = 1.0;
        const auto one = run_fair(inst.net, days, cfg);
        CHECK_THAT(low.days[0].shed_pred_total(), WithinAbs(one.days[0].shed_pred_total(), 1e-6));
        CHECK_THAT(*low.days[0].fairness, WithinAbs(0.0, 0.0));
    }
}

TEST_CASE("weighted penalty steers shed away from a burdened bus", "[rolling]") {
    const Network f = fork_grid();
    const auto d = fork_demand();
    // Day 1: the left feeder is the riskiest asset and gets opened.
    // Day 2: equal risk, both feeders stay closed, half a unit must go.
    std::vector<DayInputs> days{day_of(1, {100.0, 1.0}, d, 0.3), day_of(2, {1.0, 1.0}, d, 0.9)};
    auto cfg = scenario(2, 1, FairnessMethod::weighted_penalty);
    cfg.beta = 0.1;
    const auto res = run_fair(f, days, cfg);
    REQUIRE(res.days.size() == 2);
    CHECK(res.days[0].z == std::vector<int>{0, 1});
    CHECK_THAT(res.days[0].shed_actual[1][0], WithinAbs(1.0, 1e-9));
    const auto& day2 = res.days[1];
    CHECK(day2.shed_pred[1][0] <= day2.shed_pred[2][0] + 1e-9);
    CHECK(day2.shed_actual[1][0] <= day2.shed_actual[2][0] + 1e-9);
    CHECK_THAT(day2.shed_actual_total(), WithinAbs(0.5, 1e-8));
}

TEST_CASE("the feed withholds actual demand until switching is committed", "[rolling]") {
    const auto d = testing::triangle_demand();
    std::vector<DayInputs> days{day_of(1, {1, 1, 1}, d, 0.4), day_of(2, {1, 1, 1}, d, 0.4)};
    DayFeed feed(days);
    CHECK_THROWS_AS(feed.realise({1, 1, 1}), std::logic_error);
    const auto ahead = feed.open();
    CHECK(ahead.day == 1);
    CHECK_THROWS_AS(feed.open(), std::logic_error);
    CHECK_THROWS_AS(feed.realise({1, 1}), std::logic_error);
    CHECK(&feed.realise({1, 1, 1}) == &days[0].actual);
    CHECK(feed.open().day == 2);
    feed.realise({0, 0, 0});
    CHECK(feed.exhausted());
    CHECK_THROWS_AS(feed.open(), std::logic_error);
}

TEST_CASE("forecasts, alphas and determinism of prepared seasons", "[rolling]") {
    const Network tri = testing::triangle();
    Season season;
    for (double scale : {1.0, 0.8, 0.9}) {
        DemandProfile d = testing::triangle_demand(2);
        for (auto& row : d.values) {
            for (double& v : row) v *= scale;
        }
        season.actual.push_back(d);
    }
    season.risk = {{1, 1, 1}, {5, 5, 5}, {3, 3, 3}};
    auto cfg = scenario(3, 2);
    const auto days = prepare_days(tri, season, cfg);
    REQUIRE(days.size() == 3);
    CHECK(days[0].alpha == 0.6);
    CHECK(days[1].alpha == 0.3);
    CHECK_THAT(days[2].alpha, WithinAbs(0.45, 1e-12));
    for (const auto& day : days) {
        CHECK(day.forecast.values[0] == std::vector<double>{0.0, 0.0});
        for (std::size_t n = 0; n < 3; ++n) {
            for (std::size_t t = 0; t < 2; ++t) {
                CHECK(std::abs(day.forecast(n, t) - day.actual(n, t)) <= 0.02 * day.actual(n, t) + 1e-15);
            }
        }
    }
    CHECK(days[0].forecast != days[1].forecast);
    CHECK(prepare_days(tri, season, cfg)[1].forecast == days[1].forecast);

    cfg.method = FairnessMethod::min_max_shed;
    cfg.beta = 0.5;
    const auto a = run_fair(tri, days, cfg);
    const auto b = run_fair(tri, days, cfg);
    CHECK(to_json(a).dump() == to_json(b).dump());

    season.risk.pop_back();
    CHECK_THROWS_AS(prepare_days(tri, season, cfg), InputError);
}

TEST_CASE("every solve of a fair season passes the residual check", "[rolling]") {
    std::mt19937_64 rng(40);
    const auto inst = testing::random_instance(rng, 6, 6, 3);
    Season season;
    std::uniform_real_distribution<double> u(0.0, 10.0);
    for (int j = 0; j < 4; ++j) {
        std::vector<double> r(inst.net.num_lines());
        for (double& v : r) v = u(rng);
        season.risk.push_back(r);
        season.actual.push_back(inst.demand);
    }
    auto cfg = scenario(4, 3, FairnessMethod::shed_range);
    cfg.beta = 0.4;
    cfg.solver.relative_mip_gap = 0.01;
    int seen = 0;
    const auto res = run_fair(inst.net, prepare_days(inst.net, season, cfg), cfg, nullptr, [&](const SolveEvent& e) {
        ++seen;
        CHECK(verify_solution(inst.net, *e.demand, *e.solution).worst() <= 1e-6);
    });
    CHECK(seen == 4 * 5);
    for (const auto& rec : res.days) CHECK(rec.risk_energized <= 1.05 * rec.risk_energized_base + 1e-6);
}
