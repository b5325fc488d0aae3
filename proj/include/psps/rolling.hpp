#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "psps/fairness.hpp"
#include "psps/ingest.hpp"
#include "psps/network.hpp"
#include "psps/opt_psps.hpp"

namespace psps {

class SimulationError : public std::runtime_error {
public:
    SimulationError(int day, const std::string& what)
        : std::runtime_error("day " + std::to_string(day) + ": " + what), day_(day) {}
    [[nodiscard]] int day() const { return day_; }

private:
    int day_;
};

enum class RealtimeObjective { min_shed, fair };

struct ScenarioConfig {
    int days = 10;
    std::size_t hours = 24;
    double alpha_lo = 0.3;
    double alpha_hi = 0.6;
    std::optional<double> hist_risk_min;  ///< defaults to the season minimum
    std::optional<double> hist_risk_max;  ///< defaults to the season maximum
    double beta = 0.95;
    double zeta = 0.05;
    double eta = 0.9;
    std::optional<FairnessMethod> method;
    std::uint64_t seed = 1;
    double forecast_spread = 0.02;
    SolverConfig solver;
    RealtimeObjective realtime = RealtimeObjective::min_shed;
    bool compute_bounds = true;

    void validate() const {
        if (days < 1) throw std::invalid_argument("days must be at least 1");
        if (hours < 1) throw std::invalid_argument("hours must be at least 1");
        if (!(alpha_lo >= 0.0 && alpha_lo < alpha_hi && alpha_hi <= 1.0)) {
            throw std::invalid_argument("alpha range must satisfy 0 <= alpha_lo < alpha_hi <= 1");
        }
        if (hist_risk_min && hist_risk_max && !(*hist_risk_min < *hist_risk_max)) {
            throw std::invalid_argument("hist_risk_min must be below hist_risk_max");
        }
        if (!(beta >= 0.0 && beta <= 1.0)) throw std::invalid_argument("beta must lie in [0,1]");
        if (!(zeta >= 0.0)) throw std::invalid_argument("zeta must be non-negative");
        if (!(eta >= 0.0 && eta <= 1.0)) throw std::invalid_argument("eta must lie in [0,1]");
        if (!(forecast_spread >= 0.0 && forecast_spread < 1.0)) throw std::invalid_argument("forecast spread must lie in [0,1)");
        solver.validate();
    }
};

/// Realised inputs for a season: per-day line risks and actual demand.
struct Season {
    std::vector<std::vector<double>> risk;
    std::vector<DemandProfile> actual;

    [[nodiscard]] int days() const { return static_cast<int>(actual.size()); }
};

/// Seed of the forecast error for one day.
inline std::uint64_t day_seed(std::uint64_t seed, int day) {
    std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * static_cast<std::uint64_t>(day);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

/// Attaches forecasts and scheduled alphas to the first `cfg.days` days.
inline std::vector<DayInputs> prepare_days(const Network& net, const Season& season, const ScenarioConfig& cfg) {
    cfg.validate();
    if (season.days() < cfg.days || static_cast<int>(season.risk.size()) < cfg.days) {
        throw InputError("season covers " + std::to_string(std::min<std::size_t>(season.actual.size(), season.risk.size())) +
                         " days, scenario needs " + std::to_string(cfg.days));
    }
    std::vector<double> totals;
    for (int j = 0; j < cfg.days; ++j) {
        const auto& r = season.risk[static_cast<std::size_t>(j)];
        const auto& d = season.actual[static_cast<std::size_t>(j)];
        if (r.size() != net.num_lines()) throw InputError("day " + std::to_string(j + 1) + ": risk does not cover every line");
        if (d.num_buses() != net.num_buses() || d.hours != cfg.hours) {
            throw InputError("day " + std::to_string(j + 1) + ": demand shape does not match the scenario");
        }
        d.validate();
        double t = 0.0;
        for (double v : r) t += v;
        totals.push_back(t);
    }
    AlphaSchedule sched{cfg.alpha_lo, cfg.alpha_hi, cfg.hist_risk_min.value_or(*std::min_element(totals.begin(), totals.end())),
                        cfg.hist_risk_max.value_or(*std::max_element(totals.begin(), totals.end()))};
    const bool flat = !(sched.hist_risk_min < sched.hist_risk_max);

    std::vector<DayInputs> out;
    for (int j = 0; j < cfg.days; ++j) {
        DayInputs in;
        in.day = j + 1;
        in.risk = season.risk[static_cast<std::size_t>(j)];
        in.actual = season.actual[static_cast<std::size_t>(j)];
        in.forecast = perturb_demand(in.actual, day_seed(cfg.seed, in.day), cfg.forecast_spread);
        in.alpha = flat ? 0.5 * (cfg.alpha_lo + cfg.alpha_hi) : schedule_alpha(totals[static_cast<std::size_t>(j)], sched);
        out.push_back(std::move(in));
    }
    return out;
}

/// What the operator sees before committing a day's switching.
struct DayAhead {
    int day = 1;
    const std::vector<double>* risk = nullptr;
    const DemandProfile* forecast = nullptr;
    double alpha = 0.5;
};

/// Releases one day at a time. Actual demand only becomes readable after the
/// switching decision for that day has been handed over.
class DayFeed {
public:
    explicit DayFeed(const std::vector<DayInputs>& days) : days_(&days) {}

    [[nodiscard]] bool exhausted() const { return cursor_ >= days_->size(); }

    DayAhead open() {
        if (exhausted()) throw std::logic_error("day feed exhausted");
        if (opened_) throw std::logic_error("day " + std::to_string(current().day) + " is already open");
        opened_ = true;
        const auto& d = current();
        return {d.day, &d.risk, &d.forecast, d.alpha};
    }

    const DemandProfile& realise(const std::vector<int>& committed_z) {
        if (!opened_) throw std::logic_error("realise called before open");
        if (committed_z.size() != current().risk.size()) throw std::logic_error("committed switching has the wrong length");
        opened_ = false;
        return (*days_)[cursor_++].actual;
    }

private:
    [[nodiscard]] const DayInputs& current() const { return (*days_)[cursor_]; }

    const std::vector<DayInputs>* days_;
    std::size_t cursor_ = 0;
    bool opened_ = false;
};

// ---------------------------------------------------------------------------
// Per-day solves

/// A finished solve, reported to an optional observer.
struct SolveEvent {
    int day = 0;
    const char* kind = "";  ///< baseline, fair, realtime, bound_forecast, bound_actual
    const DemandProfile* demand = nullptr;
    const DispatchSolution* solution = nullptr;
};
using SolveObserver = std::function<void(const SolveEvent&)>;

/// Continuous dispatch with z fixed: minimise total shed, then among those
/// optima minimise tally-weighted shed.
inline DispatchSolution realtime_operate(const Network& net, const std::vector<int>& z, const DemandProfile& actual,
                                         const ShedTally* tally = nullptr, const SolverConfig& cfg = {}) {
    PspsModel m = build_psps_constraints(net, actual);
    fix_switching(m, z);
    add_shed_objective(m, 1.0);
    DispatchSolution sol = solve(m, cfg);
    if (!sol.feasible()) {
        // Shedding everything is always feasible; only numerical trouble lands here.
        sol = DispatchSolution{};
        sol.g.assign(net.num_generators(), std::vector<double>(actual.hours, 0.0));
        sol.theta.assign(net.num_buses(), std::vector<double>(actual.hours, 0.0));
        sol.f.assign(net.num_lines(), std::vector<double>(actual.hours, 0.0));
        sol.s = actual.values;
        sol.z = z;
        sol.objective = actual.total();
        sol.status = SolveStatus::time_limit;
        return sol;
    }
    if (tally == nullptr || tally->max() <= 0.0) return sol;

    const double best = sol.total_shed();
    std::vector<lp::Term> all;
    for (std::size_t n = 0; n < m.index.N; ++n) {
        for (std::size_t t = 0; t < m.index.T; ++t) all.push_back({m.index.s(n, t), 1.0});
    }
    m.lp.add_row("lexicographic", "total_shed", std::move(all), -lp::kInf, best + 1e-9 * std::max(1.0, best));
    for (std::size_t j = 0; j < m.lp.num_variables(); ++j) m.lp.set_objective(j, 0.0);
    for (std::size_t n = 0; n < m.index.N; ++n) {
        if (tally->value[n] == 0.0) continue;
        for (std::size_t t = 0; t < m.index.T; ++t) m.lp.set_objective(m.index.s(n, t), tally->value[n]);
    }
    DispatchSolution second = solve(m, cfg);
    if (!second.feasible()) return sol;
    second.objective = second.total_shed();
    return second;
}

/// Least total shed achievable under the risk cap relative to `baseline_z`.
inline DispatchSolution min_shed_bound(const Network& net, const DemandProfile& demand, const std::vector<double>& risk,
                                       const std::vector<int>& baseline_z, double zeta, const SolverConfig& cfg = {}) {
    PspsModel m = build_psps_constraints(net, demand);
    add_risk_cap(m, risk, baseline_z, zeta);
    const double D = demand.total();
    add_shed_objective(m, D > 0.0 ? 1.0 / D : 1.0);
    return solve(m, start_from_switching(m, baseline_z, cfg));
}

// ---------------------------------------------------------------------------
// Records

struct DayRecord {
    using Matrix = DispatchSolution::Matrix;

    int day = 1;
    double alpha = 0.5;
    double risk_total = 0.0;
    std::vector<int> z_base;
    std::vector<int> z;  ///< implemented switching
    Matrix shed_pred;    ///< shed of the implemented plan on forecast demand
    Matrix shed_actual;  ///< realised shed per bus-hour
    std::vector<double> demand_actual;  ///< per-bus totals
    double demand_forecast_total = 0.0;
    double risk_energized_base = 0.0;
    double risk_energized = 0.0;
    double objective_base = 0.0;
    std::optional<double> objective_fair;
    std::optional<double> fairness;  ///< F at the implemented plan
    SolveStatus status_base = SolveStatus::optimal;
    std::optional<SolveStatus> status_fair;
    std::optional<double> bound_pred;    ///< least forecast shed under the cap
    std::optional<double> bound_actual;  ///< least actual shed under the cap
    std::vector<double> bound_actual_bus;

    [[nodiscard]] static double sum(const Matrix& m) {
        double v = 0.0;
        for (const auto& row : m) {
            for (double x : row) v += x;
        }
        return v;
    }
    [[nodiscard]] double shed_pred_total() const { return sum(shed_pred); }
    [[nodiscard]] double shed_actual_total() const { return sum(shed_actual); }
    [[nodiscard]] double demand_actual_total() const {
        double v = 0.0;
        for (double x : demand_actual) v += x;
        return v;
    }
    [[nodiscard]] std::vector<double> shed_actual_bus() const {
        std::vector<double> out;
        for (const auto& row : shed_actual) {
            double v = 0.0;
            for (double x : row) v += x;
            out.push_back(v);
        }
        return out;
    }
    [[nodiscard]] int hamming() const {
        int h = 0;
        for (std::size_t l = 0; l < z.size(); ++l) h += z[l] != z_base[l];
        return h;
    }
};

struct SimulationResult {
    std::string label;  ///< "baseline" or the fairness method
    double beta = 1.0;
    std::vector<int> bus_ids;
    std::vector<int> line_ids;
    std::vector<DayRecord> days;
    ShedTally tally;
    std::vector<double> cumulative_actual;  ///< undiscounted per-bus actual shed
};

/// Baseline-side work for one day. It depends only on that day's inputs, so a
/// sweep computes it once and shares it across every beta.
struct BaselineDay {
    DispatchSolution plan;
    std::optional<DispatchSolution> bound_pred;
    std::optional<DispatchSolution> bound_actual;
};
using BaselineCache = std::vector<BaselineDay>;

namespace detail {

inline DispatchSolution solve_or_throw(const PspsModel& m, const SolverConfig& cfg, int day, const char* what) {
    DispatchSolution sol = solve(m, cfg);
    if (sol.status == SolveStatus::infeasible) {
        throw SimulationError(day, std::string(what) + " model is infeasible");
    }
    if (sol.z.empty() && m.index.L > 0) {
        throw SimulationError(day, std::string(what) + " solve hit its limit without a solution");
    }
    return sol;
}

inline void notify(const SolveObserver& obs, int day, const char* kind, const DemandProfile& d, const DispatchSolution& s) {
    if (obs) obs(SolveEvent{day, kind, &d, &s});
}

}  // namespace detail

/// Rolling simulation. With `cfg.method` unset this is the baseline loop;
/// otherwise each day adds the fair solve and the tally feedback.
inline SimulationResult simulate(const Network& net, const std::vector<DayInputs>& inputs, const ScenarioConfig& cfg,
                                 const BaselineCache* cache = nullptr, const SolveObserver& observer = {},
                                 BaselineCache* cache_out = nullptr) {
    cfg.validate();
    if (static_cast<int>(inputs.size()) < cfg.days) throw InputError("inputs cover fewer days than the scenario");
    if (cache && static_cast<int>(cache->size()) < cfg.days) throw std::invalid_argument("baseline cache is too short");
    const std::vector<DayInputs> window(inputs.begin(), inputs.begin() + cfg.days);

    SimulationResult res;
    res.label = cfg.method ? to_string(*cfg.method) : "baseline";
    res.beta = cfg.method ? cfg.beta : 1.0;
    for (const auto& b : net.buses()) res.bus_ids.push_back(b.id);
    for (const auto& l : net.lines()) res.line_ids.push_back(l.id);
    res.tally = ShedTally::initial(net.num_buses(), cfg.eta);
    res.cumulative_actual.assign(net.num_buses(), 0.0);

    DayFeed feed(window);
    std::size_t index = 0;
    while (!feed.exhausted()) {
        const DayAhead ahead = feed.open();
        const auto& risk = *ahead.risk;
        const DemandProfile& forecast = *ahead.forecast;
        DayRecord rec;
        rec.day = ahead.day;
        rec.alpha = ahead.alpha;
        for (double r : risk) rec.risk_total += r;
        rec.demand_forecast_total = forecast.total();

        // The bounds need the actual demand, which the feed withholds until
        // the plan is committed; they are filled in after realise().
        BaselineDay base;
        if (cache) {
            base = (*cache)[index];
        } else {
            const auto ctx = ObjectiveContext::make(ahead.alpha, forecast, risk);
            base.plan = detail::solve_or_throw(build_opt_psps(net, forecast, risk, ctx), cfg.solver, ahead.day, "baseline");
            detail::notify(observer, ahead.day, "baseline", forecast, base.plan);
        }
        rec.z_base = base.plan.z;
        rec.objective_base = base.plan.objective;
        rec.status_base = base.plan.status;
        rec.risk_energized_base = energized_risk(base.plan.z, risk);
        if (cache) detail::notify(observer, ahead.day, "baseline", forecast, base.plan);

        const DispatchSolution* implemented = &base.plan;
        DispatchSolution fair;
        if (cfg.method) {
            FairContext fc{cfg.beta, cfg.zeta, base.plan.z, res.tally};
            const PspsModel fm = build_opt_psps_fair(net, forecast, risk, fc, *cfg.method);
            fair = detail::solve_or_throw(fm, start_from_switching(fm, base.plan.z, cfg.solver), ahead.day, "fair");
            detail::notify(observer, ahead.day, "fair", forecast, fair);
            rec.objective_fair = fair.objective;
            rec.status_fair = fair.status;
            rec.fairness = fairness_value(*cfg.method, res.tally, forecast, fair.s);
            implemented = &fair;
        }
        rec.z = implemented->z;
        rec.shed_pred = implemented->s;
        rec.risk_energized = energized_risk(rec.z, risk);

        const DemandProfile& actual = feed.realise(rec.z);
        rec.demand_actual.clear();
        for (std::size_t n = 0; n < actual.num_buses(); ++n) rec.demand_actual.push_back(actual.bus_total(n));

        DispatchSolution rt;
        if (cfg.realtime == RealtimeObjective::fair && cfg.method) {
            FairContext fc{cfg.beta, cfg.zeta, rec.z, res.tally};
            PspsModel m = build_opt_psps_fair(net, actual, risk, fc, *cfg.method);
            fix_switching(m, rec.z);
            rt = detail::solve_or_throw(m, cfg.solver, ahead.day, "realtime");
        } else {
            rt = realtime_operate(net, rec.z, actual, &res.tally, cfg.solver);
        }
        detail::notify(observer, ahead.day, "realtime", actual, rt);
        rec.shed_actual = rt.s;

        if (cfg.compute_bounds) {
            if (!cache) {
                base.bound_pred = min_shed_bound(net, forecast, risk, base.plan.z, cfg.zeta, cfg.solver);
                detail::notify(observer, ahead.day, "bound_forecast", forecast, *base.bound_pred);
                base.bound_actual = min_shed_bound(net, actual, risk, base.plan.z, cfg.zeta, cfg.solver);
                detail::notify(observer, ahead.day, "bound_actual", actual, *base.bound_actual);
            }
            if (base.bound_pred && base.bound_pred->feasible()) rec.bound_pred = base.bound_pred->total_shed();
            if (base.bound_actual && base.bound_actual->feasible()) {
                rec.bound_actual = base.bound_actual->total_shed();
                rec.bound_actual_bus = base.bound_actual->bus_shed();
            }
        }

        const auto bus_shed = rec.shed_actual_bus();
        res.tally = update_tally(res.tally, bus_shed);
        for (std::size_t n = 0; n < bus_shed.size(); ++n) res.cumulative_actual[n] += bus_shed[n];
        if (cache_out) cache_out->push_back(std::move(base));
        res.days.push_back(std::move(rec));
        ++index;
    }
    return res;
}

inline SimulationResult run_baseline(const Network& net, const std::vector<DayInputs>& inputs, ScenarioConfig cfg,
                                     const SolveObserver& observer = {}, BaselineCache* cache_out = nullptr) {
    cfg.method.reset();
    return simulate(net, inputs, cfg, nullptr, observer, cache_out);
}

inline SimulationResult run_fair(const Network& net, const std::vector<DayInputs>& inputs, const ScenarioConfig& cfg,
                                 const BaselineCache* cache = nullptr, const SolveObserver& observer = {}) {
    if (!cfg.method) throw std::invalid_argument("run_fair needs a fairness method");
    return simulate(net, inputs, cfg, cache, observer);
}

}  // namespace psps
