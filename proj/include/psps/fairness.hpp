#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "psps/ingest.hpp"
#include "psps/opt_psps.hpp"

namespace psps {

enum class FairnessMethod { min_max_shed, weighted_penalty, shed_range };

inline const char* to_string(FairnessMethod m) {
    switch (m) {
        case FairnessMethod::min_max_shed: return "minmax";
        case FairnessMethod::weighted_penalty: return "weighted";
        case FairnessMethod::shed_range: return "range";
    }
    return "?";
}

/// Accepts "minmax", "weighted", "range"; "none" yields an empty optional.
inline std::optional<FairnessMethod> parse_method(const std::string& s) {
    if (s == "none") return std::nullopt;
    if (s == "minmax") return FairnessMethod::min_max_shed;
    if (s == "weighted") return FairnessMethod::weighted_penalty;
    if (s == "range") return FairnessMethod::shed_range;
    throw std::invalid_argument("unknown fairness method '" + s + "' (expected none, minmax, weighted or range)");
}

/// Discounted cumulative actual shed per bus, as known before deciding `day`.
struct ShedTally {
    int day = 1;
    double eta = 0.9;
    std::vector<double> value;

    static ShedTally initial(std::size_t buses, double eta) {
        if (!(eta >= 0.0 && eta <= 1.0)) throw std::invalid_argument("forgetting factor must lie in [0,1]");
        return ShedTally{1, eta, std::vector<double>(buses, 0.0)};
    }

    [[nodiscard]] double max() const { return value.empty() ? 0.0 : *std::max_element(value.begin(), value.end()); }
    bool operator==(const ShedTally&) const = default;
};

/// Folds one realised day into the tally: S_{j+1} = eta * (S_j + shed_j).
/// Round-off negatives down to -1e-9 are treated as zero.
inline ShedTally update_tally(const ShedTally& tally, std::span<const double> shed_day) {
    if (shed_day.size() != tally.value.size()) throw std::invalid_argument("update_tally: bus count mismatch");
    ShedTally next = tally;
    ++next.day;
    for (std::size_t n = 0; n < shed_day.size(); ++n) {
        if (!(shed_day[n] >= -1e-9)) throw std::invalid_argument("update_tally: negative shed at bus position " +
                                                                 std::to_string(n));
        next.value[n] = tally.eta * (tally.value[n] + std::max(0.0, shed_day[n]));
    }
    return next;
}

// ---------------------------------------------------------------------------
// Fairness functions

/// F = (S_max - max S) / (max(S + D) - max S); zero when the denominator is.
struct MinMaxTerms {
    double max_tally = 0.0;
    double max_reach = 0.0;  ///< max over buses of S_n + D_n
    [[nodiscard]] double denominator() const { return max_reach - max_tally; }
    [[nodiscard]] double evaluate(double s_max) const {
        return denominator() > 0.0 ? (s_max - max_tally) / denominator() : 0.0;
    }
};

inline MinMaxTerms minmax_bounds_and_F(const ShedTally& tally, const DemandProfile& demand) {
    MinMaxTerms t;
    t.max_tally = tally.max();
    t.max_reach = -std::numeric_limits<double>::infinity();
    for (std::size_t n = 0; n < demand.num_buses(); ++n) {
        t.max_reach = std::max(t.max_reach, tally.value[n] + demand.bus_total(n));
    }
    if (demand.num_buses() == 0) t.max_reach = 0.0;
    return t;
}

/// F = sum_n coef_n * sum_t s_nt with coef_n = S_n / sum_m S_m D_m.
struct WeightedTerms {
    std::vector<double> coef;
    [[nodiscard]] double evaluate(const DispatchSolution::Matrix& s) const {
        double v = 0.0;
        for (std::size_t n = 0; n < coef.size(); ++n) {
            for (double x : s[n]) v += coef[n] * x;
        }
        return v;
    }
};

inline WeightedTerms weighted_F(const ShedTally& tally, const DemandProfile& demand) {
    WeightedTerms w;
    w.coef.assign(demand.num_buses(), 0.0);
    if (tally.day <= 1) return w;
    double den = 0.0;
    for (std::size_t n = 0; n < demand.num_buses(); ++n) den += tally.value[n] * demand.bus_total(n);
    if (!(den > 0.0)) return w;
    for (std::size_t n = 0; n < demand.num_buses(); ++n) w.coef[n] = tally.value[n] / den;
    return w;
}

/// F = ((S_max - S_min) - w_min) / (w_max - w_min); zero when w_max == w_min.
struct RangeTerms {
    double w_max = 0.0;
    double w_min = 0.0;
    double max_tally = 0.0;      ///< lower bound of S_max
    double max_reach = 0.0;      ///< upper bound of S_max
    double min_tally = 0.0;      ///< lower bound of S_min, over demand buses
    double min_reach = 0.0;      ///< upper bound of S_min, over demand buses
    std::vector<std::size_t> demand_buses;

    [[nodiscard]] double evaluate(double s_max, double s_min) const {
        const double den = w_max - w_min;
        return den > 0.0 ? ((s_max - s_min) - w_min) / den : 0.0;
    }
};

inline RangeTerms range_bounds_and_F(const ShedTally& tally, const DemandProfile& demand) {
    RangeTerms r;
    r.demand_buses = demand.demand_buses();
    if (r.demand_buses.empty()) {
        throw std::invalid_argument("range method needs at least one bus with demand in every hour");
    }
    const MinMaxTerms mm = minmax_bounds_and_F(tally, demand);
    r.max_tally = mm.max_tally;
    r.max_reach = mm.max_reach;
    r.min_tally = std::numeric_limits<double>::infinity();
    r.min_reach = std::numeric_limits<double>::infinity();
    for (std::size_t n : r.demand_buses) {
        r.min_tally = std::min(r.min_tally, tally.value[n]);
        r.min_reach = std::min(r.min_reach, tally.value[n] + demand.bus_total(n));
    }
    r.w_max = r.max_reach - r.min_tally;
    r.w_min = std::max(0.0, r.max_tally - r.min_reach);
    return r;
}

/// F evaluated at the tightest auxiliaries implied by the shed schedule `s`.
inline double fairness_value(FairnessMethod method, const ShedTally& tally, const DemandProfile& demand,
                             const DispatchSolution::Matrix& s) {
    std::vector<double> reach(demand.num_buses());
    for (std::size_t n = 0; n < reach.size(); ++n) {
        double sum = 0.0;
        for (double x : s[n]) sum += x;
        reach[n] = tally.value[n] + sum;
    }
    switch (method) {
        case FairnessMethod::min_max_shed:
            return minmax_bounds_and_F(tally, demand).evaluate(*std::max_element(reach.begin(), reach.end()));
        case FairnessMethod::weighted_penalty: return weighted_F(tally, demand).evaluate(s);
        case FairnessMethod::shed_range: {
            const RangeTerms r = range_bounds_and_F(tally, demand);
            double lo = std::numeric_limits<double>::infinity();
            for (std::size_t n : r.demand_buses) lo = std::min(lo, reach[n]);
            return r.evaluate(*std::max_element(reach.begin(), reach.end()), lo);
        }
    }
    return 0.0;
}

// ---------------------------------------------------------------------------
// Fair model

struct FairContext {
    double beta = 0.95;
    double zeta = 0.05;
    std::vector<int> baseline_z;
    ShedTally tally;

    void validate(std::size_t lines, std::size_t buses) const {
        if (!(beta >= 0.0 && beta <= 1.0)) throw std::invalid_argument("beta must lie in [0,1]");
        if (!(zeta >= 0.0)) throw std::invalid_argument("zeta must be non-negative");
        if (baseline_z.size() != lines) throw std::invalid_argument("baseline switching decisions are missing");
        for (int z : baseline_z) {
            if (z != 0 && z != 1) throw std::invalid_argument("baseline switching decisions must be binary");
        }
        if (tally.value.size() != buses) throw std::invalid_argument("tally does not cover every bus");
    }
};

/// Adds sum_l r_l z_l <= (1 + zeta) * sum_l r_l zhat_l.
inline void add_risk_cap(PspsModel& m, std::span<const double> risk, const std::vector<int>& baseline_z, double zeta) {
    std::vector<lp::Term> terms;
    double cap = 0.0;
    for (std::size_t l = 0; l < m.index.L; ++l) {
        if (risk[l] != 0.0) terms.push_back({m.index.z(l), risk[l]});
        cap += risk[l] * baseline_z[l];
    }
    m.lp.add_row("risk_cap", "risk_cap", std::move(terms), -lp::kInf, (1.0 + zeta) * cap);
}

namespace detail {

inline void add_smax(PspsModel& m, const Network& net, const ShedTally& tally, double lo, double hi) {
    auto& ix = m.index;
    ix.s_max = m.lp.add_variable("S_max", lo, std::max(lo, hi));
    for (std::size_t n = 0; n < ix.N; ++n) {
        std::vector<lp::Term> terms{{*ix.s_max, 1.0}};
        for (std::size_t t = 0; t < ix.T; ++t) terms.push_back({ix.s(n, t), -1.0});
        m.lp.add_row("minmax", "smax_" + std::to_string(net.buses()[n].id), std::move(terms), tally.value[n], lp::kInf);
    }
}

}  // namespace detail

/// Baseline constraints plus the risk cap, the method's auxiliaries, and the
/// objective (beta / D) * sum(s) + (1 - beta) * F.
///
/// S_max and S_min carry the bounds [max S, max(S + D)] and
/// [min S, min(S + D)] (minima over demand buses). Every optimum already lies
/// inside them, and with them every feasible point keeps F within [0, 1].
inline PspsModel build_opt_psps_fair(const Network& net, const DemandProfile& demand, std::span<const double> risk,
                                     const FairContext& ctx, FairnessMethod method) {
    detail::check_shapes(net, demand, risk);
    ctx.validate(net.num_lines(), net.num_buses());
    const double D = demand.total();
    if (!(D > 0.0)) throw std::invalid_argument("total demand D must be positive");

    PspsModel m = build_psps_constraints(net, demand);
    add_shed_objective(m, ctx.beta / D);
    add_risk_cap(m, risk, ctx.baseline_z, ctx.zeta);
    const double wf = 1.0 - ctx.beta;
    auto& ix = m.index;

    switch (method) {
        case FairnessMethod::min_max_shed: {
            const MinMaxTerms mm = minmax_bounds_and_F(ctx.tally, demand);
            detail::add_smax(m, net, ctx.tally, mm.max_tally, mm.max_reach);
            if (mm.denominator() > 0.0 && wf > 0.0) {
                m.lp.add_objective(*ix.s_max, wf / mm.denominator());
                m.lp.add_objective_offset(-wf * mm.max_tally / mm.denominator());
            }
            break;
        }
        case FairnessMethod::weighted_penalty: {
            const WeightedTerms w = weighted_F(ctx.tally, demand);
            if (wf > 0.0) {
                for (std::size_t n = 0; n < ix.N; ++n) {
                    if (w.coef[n] == 0.0) continue;
                    for (std::size_t t = 0; t < ix.T; ++t) m.lp.add_objective(ix.s(n, t), wf * w.coef[n]);
                }
            }
            break;
        }
        case FairnessMethod::shed_range: {
            const RangeTerms r = range_bounds_and_F(ctx.tally, demand);
            detail::add_smax(m, net, ctx.tally, r.max_tally, r.max_reach);
            ix.s_min = m.lp.add_variable("S_min", r.min_tally, std::max(r.min_tally, r.min_reach));
            for (std::size_t n : r.demand_buses) {
                std::vector<lp::Term> terms{{*ix.s_min, 1.0}};
                for (std::size_t t = 0; t < ix.T; ++t) terms.push_back({ix.s(n, t), -1.0});
                m.lp.add_row("range", "smin_" + std::to_string(net.buses()[n].id), std::move(terms), -lp::kInf, ctx.tally.value[n]);
            }
            const double den = r.w_max - r.w_min;
            if (den > 0.0 && wf > 0.0) {
                m.lp.add_objective(*ix.s_max, wf / den);
                m.lp.add_objective(*ix.s_min, -wf / den);
                m.lp.add_objective_offset(-wf * r.w_min / den);
            }
            break;
        }
    }
    return m;
}

}  // namespace psps
