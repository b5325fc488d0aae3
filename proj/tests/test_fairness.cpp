#include <catch_amalgamated.hpp>

#include <random>

#include "psps/fairness.hpp"
#include "support/enumerate.hpp"
#include "support/fixtures.hpp"

using namespace psps;
using Catch::Matchers::WithinAbs;

namespace {

DemandProfile single_hour(std::vector<double> per_bus) {
    DemandProfile d(per_bus.size(), 1);
    for (std::size_t n = 0; n < per_bus.size(); ++n) d.values[n][0] = per_bus[n];
    return d;
}

ShedTally tally_of(std::vector<double> s, int day = 2, double eta = 0.9) { return ShedTally{day, eta, std::move(s)}; }

// Direct evaluation of the discounted sum over completed days.
std::vector<double> direct_tally(const std::vector<std::vector<double>>& sheds, double eta) {
    const std::size_t j = sheds.size() + 1;
    std::vector<double> out(sheds.empty() ? 0 : sheds[0].size(), 0.0);
    for (std::size_t m = 1; m < j; ++m) {
        for (std::size_t n = 0; n < out.size(); ++n) out[n] += std::pow(eta, double(j - m)) * sheds[m - 1][n];
    }
    return out;
}

}  // namespace

TEST_CASE("tally starts at zero and discounts completed days", "[fairness]") {
    const ShedTally t1 = ShedTally::initial(2, 0.9);
    CHECK(t1.day == 1);
    CHECK(t1.value == std::vector<double>{0.0, 0.0});

    const ShedTally t2 = update_tally(t1, std::vector<double>{1.0, 0.0});
    CHECK(t2.day == 2);
    CHECK_THAT(t2.value[0], WithinAbs(0.9, 1e-15));
    const ShedTally t3 = update_tally(t2, std::vector<double>{0.5, 0.0});
    CHECK_THAT(t3.value[0], WithinAbs(0.81 + 0.45, 1e-15));

    const ShedTally quiet = update_tally(t3, std::vector<double>{0.0, 0.0});
    CHECK_THAT(quiet.value[0], WithinAbs(0.9 * t3.value[0], 1e-15));

    CHECK_THROWS_AS(update_tally(t1, std::vector<double>{-0.1, 0.0}), std::invalid_argument);
    CHECK_THROWS_AS(update_tally(t1, std::vector<double>{0.0}), std::invalid_argument);
}

TEST_CASE("incremental tally equals the direct discounted sum", "[fairness]") {
    std::mt19937_64 rng(8);
    std::uniform_real_distribution<double> u(0.0, 5.0);
    for (double eta : {0.0, 0.5, 0.9, 1.0}) {
        ShedTally t = ShedTally::initial(4, eta);
        std::vector<std::vector<double>> history;
        for (int day = 0; day < 12; ++day) {
            std::vector<double> shed(4);
            for (double& v : shed) v = u(rng) < 1.5 ? 0.0 : u(rng);
            history.push_back(shed);
            t = update_tally(t, shed);
            const auto want = direct_tally(history, eta);
            for (std::size_t n = 0; n < 4; ++n) CHECK_THAT(t.value[n], WithinAbs(want[n], 1e-12));
        }
    }
}

TEST_CASE("min-max fairness function", "[fairness]") {
    const DemandProfile d = single_hour({1.0, 1.0});
    const MinMaxTerms first = minmax_bounds_and_F(ShedTally::initial(2, 0.9), d);
    CHECK(first.evaluate(0.0) == 0.0);
    CHECK(first.evaluate(1.0) == 1.0);

    const MinMaxTerms mm = minmax_bounds_and_F(tally_of({2.0, 0.0}), d);
    CHECK(mm.max_tally == 2.0);
    CHECK(mm.max_reach == 3.0);
    CHECK(mm.evaluate(2.0) == 0.0);
    CHECK(fairness_value(FairnessMethod::min_max_shed, tally_of({2.0, 0.0}), d, {{0.0}, {0.0}}) == 0.0);
    CHECK(fairness_value(FairnessMethod::min_max_shed, tally_of({2.0, 0.0}), d, {{1.0}, {0.0}}) == 1.0);

    // the most burdened bus carries no load, so nothing can move S_max
    const MinMaxTerms flat = minmax_bounds_and_F(tally_of({5.0, 0.0}), single_hour({0.0, 1.0}));
    CHECK(flat.denominator() == 0.0);
    CHECK(flat.evaluate(5.0) == 0.0);
}

TEST_CASE("weighted-penalty fairness function", "[fairness]") {
    const DemandProfile d = single_hour({1.0, 1.0});
    const WeightedTerms day1 = weighted_F(ShedTally::initial(2, 0.9), d);
    CHECK(day1.evaluate({{1.0}, {1.0}}) == 0.0);

    const WeightedTerms w = weighted_F(tally_of({2.0, 0.0}), d);
    CHECK_THAT(w.evaluate({{0.5}, {1.0}}), WithinAbs(0.5, 1e-15));
    CHECK_THAT(w.evaluate(d.values), WithinAbs(1.0, 1e-15));

    const WeightedTerms idle = weighted_F(tally_of({0.0, 0.0}, 4), d);
    CHECK(idle.evaluate(d.values) == 0.0);
}

TEST_CASE("range fairness function", "[fairness]") {
    const DemandProfile d = single_hour({1.0, 1.0});
    const RangeTerms first = range_bounds_and_F(ShedTally::initial(2, 0.9), d);
    CHECK(first.w_max == 1.0);
    CHECK(first.w_min == 0.0);
    CHECK(first.evaluate(0.3, 0.3) == 0.0);

    const RangeTerms r = range_bounds_and_F(tally_of({5.0, 0.0}), d);
    CHECK(r.w_min == 4.0);
    CHECK(r.w_max == 6.0);

    const RangeTerms lone = range_bounds_and_F(ShedTally::initial(2, 0.9), single_hour({0.0, 1.0}));
    CHECK(lone.demand_buses == std::vector<std::size_t>{1});
    CHECK_THROWS_AS(range_bounds_and_F(tally_of({0.0, 0.0}), single_hour({0.0, 0.0})), std::invalid_argument);

    // any bus with load in every hour keeps the range window open
    const RangeTerms open = range_bounds_and_F(tally_of({3.0, 2.0}), single_hour({0.0, 1.0}));
    CHECK(open.w_max > open.w_min);
    RangeTerms closed = open;
    closed.w_min = closed.w_max;
    CHECK(closed.evaluate(3.0, 2.0) == 0.0);
}

TEST_CASE("fair model structure per method", "[fairness]") {
    const Network tri = testing::triangle();
    const auto d = testing::triangle_demand(2);
    const std::vector<double> risk{10, 20, 30};
    const auto base = build_opt_psps(tri, d, risk, ObjectiveContext::make(0.5, d, risk));
    FairContext ctx{0.6, 0.05, {1, 0, 1}, ShedTally::initial(3, 0.9)};

    SECTION("weighted on day one keeps only the shed term") {
        const auto m = build_opt_psps_fair(tri, d, risk, ctx, FairnessMethod::weighted_penalty);
        CHECK(m.lp.num_variables() == base.lp.num_variables());
        CHECK(m.lp.count_rows("risk_cap") == 1);
        for (std::size_t n = 0; n < 3; ++n) CHECK_THAT(m.lp.objective()[m.index.s(n, 1)], WithinAbs(0.6 / 3.0, 1e-15));
        for (std::size_t l = 0; l < 3; ++l) CHECK(m.lp.objective()[m.index.z(l)] == 0.0);
        const auto& cap = m.lp.rows().back();
        CHECK(cap.tag == "risk_cap");
        CHECK_THAT(cap.upper, WithinAbs(1.05 * 40.0, 1e-12));
    }
    SECTION("min-max adds one variable and one row per bus") {
        const auto m = build_opt_psps_fair(tri, d, risk, ctx, FairnessMethod::min_max_shed);
        CHECK(m.lp.num_variables() == base.lp.num_variables() + 1);
        CHECK(m.lp.count(lp::VarKind::continuous) == base.lp.count(lp::VarKind::continuous) + 1);
        CHECK(m.lp.count_rows("minmax") == 3);
        CHECK(m.lp.num_rows() == base.lp.num_rows() + 3 + 1);
        REQUIRE(m.index.s_max);
    }
    SECTION("range adds two variables and rows for both extremes") {
        const auto m = build_opt_psps_fair(tri, d, risk, ctx, FairnessMethod::shed_range);
        CHECK(m.lp.num_variables() == base.lp.num_variables() + 2);
        CHECK(m.lp.count_rows("minmax") == 3);
        CHECK(m.lp.count_rows("range") == 2);  // bus 1 carries no load
        REQUIRE(m.index.s_min);
    }
    SECTION("missing baseline decisions") {
        ctx.baseline_z.clear();
        CHECK_THROWS_AS(build_opt_psps_fair(tri, d, risk, ctx, FairnessMethod::min_max_shed), std::invalid_argument);
    }
}

TEST_CASE("every fair model stays linear", "[fairness]") {
    std::mt19937_64 rng(31);
    for (auto method : {FairnessMethod::min_max_shed, FairnessMethod::weighted_penalty, FairnessMethod::shed_range}) {
        const auto inst = testing::random_instance(rng, 5, 6, 2);
        std::vector<double> s(5, 0.0);
        for (double& v : s) v = 3.0 * std::uniform_real_distribution<double>(0, 1)(rng);
        DemandProfile dem = inst.demand;
        for (auto& row : dem.values) row.assign(2, 0.4);
        const FairContext ctx{0.3, 0.05, std::vector<int>(inst.net.num_lines(), 1), ShedTally{3, 0.9, s}};
        const auto m = build_opt_psps_fair(inst.net, dem, inst.risk, ctx, method);
        // A LinearModel can only hold linear rows; check each row names a variable once.
        for (const auto& row : m.lp.rows()) {
            std::vector<std::size_t> vars;
            for (const auto& t : row.terms) vars.push_back(t.var);
            std::sort(vars.begin(), vars.end());
            CHECK(std::adjacent_find(vars.begin(), vars.end()) == vars.end());
        }
        for (double c : m.lp.objective()) CHECK(std::isfinite(c));
    }
}

TEST_CASE("F stays within [0,1] over random feasible points", "[fairness]") {
    std::mt19937_64 rng(404);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int k = 0; k < 2000; ++k) {
        const std::size_t N = 2 + k % 5, T = 1 + k % 3;
        DemandProfile d(N, T);
        for (auto& row : d.values) {
            for (double& v : row) v = u(rng) < 0.2 ? 0.0 : 2.0 * u(rng);
        }
        if (d.demand_buses().empty()) d.values[0].assign(T, 1.0);
        ShedTally tally{1 + k % 4, 0.9, std::vector<double>(N, 0.0)};
        if (tally.day > 1) {
            for (double& v : tally.value) v = u(rng) < 0.3 ? 0.0 : 6.0 * u(rng);
        }
        DispatchSolution::Matrix s(N, std::vector<double>(T));
        for (std::size_t n = 0; n < N; ++n) {
            for (std::size_t t = 0; t < T; ++t) s[n][t] = d(n, t) * (u(rng) < 0.3 ? (u(rng) < 0.5 ? 0.0 : 1.0) : u(rng));
        }
        for (auto method : {FairnessMethod::min_max_shed, FairnessMethod::weighted_penalty, FairnessMethod::shed_range}) {
            const double f = fairness_value(method, tally, d, s);
            CHECK(f >= 0.0);
            CHECK(f <= 1.0 + 1e-9);
        }
        // auxiliaries anywhere within their model bounds, not just at the tight values
        const RangeTerms r = range_bounds_and_F(tally, d);
        double tight_max = 0.0, tight_min = lp::kInf;
        for (std::size_t n = 0; n < N; ++n) {
            double sum = tally.value[n];
            for (double x : s[n]) sum += x;
            tight_max = std::max(tight_max, sum);
            if (std::find(r.demand_buses.begin(), r.demand_buses.end(), n) != r.demand_buses.end()) {
                tight_min = std::min(tight_min, sum);
            }
        }
        const double smax = tight_max + u(rng) * (r.max_reach - tight_max);
        const double smin = r.min_tally + u(rng) * (tight_min - r.min_tally);
        const double fm = minmax_bounds_and_F(tally, d).evaluate(smax);
        const double fr = r.evaluate(smax, smin);
        CHECK(fm >= -1e-12);
        CHECK(fm <= 1.0 + 1e-9);
        CHECK(fr >= -1e-12);
        CHECK(fr <= 1.0 + 1e-9);
    }
}

TEST_CASE("fair solves respect the risk cap and match enumeration", "[fairness][oracle]") {
    std::mt19937_64 rng(55);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    SolverConfig cfg;
    cfg.relative_mip_gap = 1e-6;
    int k = 0;
    for (auto method : {FairnessMethod::min_max_shed, FairnessMethod::weighted_penalty, FairnessMethod::shed_range}) {
        for (int rep = 0; rep < 5; ++rep, ++k) {
            auto inst = testing::random_instance(rng, 3 + k % 3, 5, 1 + k % 2);
            for (auto& row : inst.demand.values) {
                for (double& v : row) v = 0.2 + u(rng);
            }
            const auto ctx0 = ObjectiveContext::make(0.4, inst.demand, inst.risk);
            const auto base = solve(build_opt_psps(inst.net, inst.demand, inst.risk, ctx0), cfg);
            ShedTally tally{2, 0.9, std::vector<double>(inst.net.num_buses())};
            for (double& v : tally.value) v = 2.0 * u(rng);
            const FairContext ctx{0.2 + 0.6 * u(rng), 0.05, base.z, tally};
            const auto m = build_opt_psps_fair(inst.net, inst.demand, inst.risk, ctx, method);
            const auto sol = solve(m, cfg);
            const auto oracle = testing::enumerate_binaries(m.lp);
            REQUIRE(sol.status == SolveStatus::optimal);
            CHECK(energized_risk(sol.z, inst.risk) <= 1.05 * energized_risk(base.z, inst.risk) + 1e-6);
            CHECK_THAT(sol.objective, WithinAbs(oracle.objective, 1e-6 * (1.0 + std::abs(oracle.objective))));
            CHECK(verify_solution(inst.net, inst.demand, sol).pass());
        }
    }
}

TEST_CASE("beta = 1 minimises shed under the risk cap alone", "[fairness]") {
    std::mt19937_64 rng(6);
    SolverConfig cfg;
    cfg.relative_mip_gap = 1e-6;
    for (int k = 0; k < 10; ++k) {
        const auto inst = testing::random_instance(rng, 4, 5, 2);
        const auto base = solve(build_opt_psps(inst.net, inst.demand, inst.risk,
                                               ObjectiveContext::make(0.35, inst.demand, inst.risk)), cfg);
        ShedTally tally{3, 0.9, std::vector<double>(4, 1.0)};
        for (auto method : {FairnessMethod::min_max_shed, FairnessMethod::weighted_penalty}) {
            const FairContext ctx{1.0, 0.05, base.z, tally};
            const auto fair = solve(build_opt_psps_fair(inst.net, inst.demand, inst.risk, ctx, method), cfg);
            // oracle: min total shed subject to the cap, by enumeration
            PspsModel plain = build_psps_constraints(inst.net, inst.demand);
            add_shed_objective(plain, 1.0);
            add_risk_cap(plain, inst.risk, base.z, 0.05);
            const auto oracle = testing::enumerate_binaries(plain.lp);
            CHECK_THAT(fair.total_shed(), WithinAbs(oracle.objective, 1e-6));
        }
    }
}
