#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "psps/ingest.hpp"
#include "psps/lp/linear_model.hpp"
#include "psps/network.hpp"
#include "psps/solver.hpp"

namespace psps {

/// Weights of the baseline objective.
struct ObjectiveContext {
    double alpha = 0.5;
    double total_demand = 1.0;  ///< D
    double total_risk = 0.0;    ///< R

    static ObjectiveContext make(double alpha, const DemandProfile& demand, std::span<const double> risk) {
        ObjectiveContext c;
        c.alpha = alpha;
        c.total_demand = demand.total();
        c.total_risk = 0.0;
        for (double r : risk) c.total_risk += r;
        return c;
    }

    void validate() const {
        if (!(alpha >= 0.0 && alpha <= 1.0)) throw std::invalid_argument("alpha must lie in [0,1]");
        if (!(total_demand > 0.0)) throw std::invalid_argument("total demand D must be positive");
        if (!(total_risk >= 0.0)) throw std::invalid_argument("total risk R must be non-negative");
    }
};

/// Column layout of a PSPS model: g, theta, f, s blocks (entity-major, hour
/// minor) followed by the z block and any fairness auxiliaries.
struct PspsIndex {
    std::size_t G = 0, N = 0, L = 0, T = 0;
    std::size_t g0 = 0, theta0 = 0, f0 = 0, s0 = 0, z0 = 0;
    std::optional<std::size_t> s_max, s_min;

    [[nodiscard]] std::size_t g(std::size_t i, std::size_t t) const { return g0 + i * T + t; }
    [[nodiscard]] std::size_t theta(std::size_t n, std::size_t t) const { return theta0 + n * T + t; }
    [[nodiscard]] std::size_t f(std::size_t l, std::size_t t) const { return f0 + l * T + t; }
    [[nodiscard]] std::size_t s(std::size_t n, std::size_t t) const { return s0 + n * T + t; }
    [[nodiscard]] std::size_t z(std::size_t l) const { return z0 + l; }
};

struct PspsModel {
    lp::LinearModel lp;
    PspsIndex index;
};

namespace detail {

inline std::string hour_name(const char* prefix, int id, std::size_t t) {
    return std::string(prefix) + "_" + std::to_string(id) + "_" + std::to_string(t + 1);
}

inline void check_shapes(const Network& net, const DemandProfile& demand, std::span<const double> risk) {
    if (demand.num_buses() != net.num_buses()) {
        throw std::invalid_argument("demand covers " + std::to_string(demand.num_buses()) + " buses, network has " +
                                    std::to_string(net.num_buses()));
    }
    for (const auto& row : demand.values) {
        if (row.size() != demand.hours) throw std::invalid_argument("demand horizon mismatch");
    }
    if (risk.size() != net.num_lines()) {
        throw std::invalid_argument("risk has " + std::to_string(risk.size()) + " entries, network has " +
                                    std::to_string(net.num_lines()) + " lines");
    }
}

}  // namespace detail

/// Variables and the network constraints (generation and shed limits as
/// column bounds; switched flow limits, angle limits, DC flow and balance as
/// tagged rows). The objective is left empty.
inline PspsModel build_psps_constraints(const Network& net, const DemandProfile& demand) {
    PspsModel m;
    auto& lp = m.lp;
    auto& ix = m.index;
    ix.G = net.num_generators();
    ix.N = net.num_buses();
    ix.L = net.num_lines();
    ix.T = demand.hours;
    const std::size_t T = ix.T;

    ix.g0 = lp.num_variables();
    for (const auto& gen : net.generators()) {
        for (std::size_t t = 0; t < T; ++t) lp.add_variable(detail::hour_name("g", gen.id, t), gen.g_min, gen.g_max);
    }
    ix.theta0 = lp.num_variables();
    for (const auto& bus : net.buses()) {
        for (std::size_t t = 0; t < T; ++t) lp.add_variable(detail::hour_name("theta", bus.id, t), -lp::kInf, lp::kInf);
    }
    ix.f0 = lp.num_variables();
    for (const auto& line : net.lines()) {
        for (std::size_t t = 0; t < T; ++t) {
            lp.add_variable(detail::hour_name("f", line.id, t), -line.f_max, line.f_max);
        }
    }
    ix.s0 = lp.num_variables();
    for (std::size_t n = 0; n < ix.N; ++n) {
        for (std::size_t t = 0; t < T; ++t) {
            lp.add_variable(detail::hour_name("s", net.buses()[n].id, t), 0.0, demand(n, t));
        }
    }
    ix.z0 = lp.num_variables();
    for (const auto& line : net.lines()) {
        lp.add_variable("z_" + std::to_string(line.id), 0.0, 1.0, lp::VarKind::binary);
    }

    const BigM bm = compute_big_m(net);
    for (std::size_t l = 0; l < ix.L; ++l) {
        const Line& line = net.lines()[l];
        const std::size_t fr = net.bus_index(line.from_bus);
        const std::size_t to = net.bus_index(line.to_bus);
        const double b = line.susceptance();
        const double ab = std::abs(b);
        const std::size_t z = ix.z(l);
        for (std::size_t t = 0; t < T; ++t) {
            const std::size_t f = ix.f(l, t);
            const std::size_t th_fr = ix.theta(fr, t);
            const std::size_t th_to = ix.theta(to, t);
            const std::string sfx = std::to_string(line.id) + "_" + std::to_string(t + 1);

            // -f_max z <= f <= f_max z
            lp.add_row("flow_limits", "flowhi_" + sfx, {{f, 1.0}, {z, -line.f_max}}, -lp::kInf, 0.0);
            lp.add_row("flow_limits", "flowlo_" + sfx, {{f, 1.0}, {z, line.f_max}}, 0.0, lp::kInf);

            // delta_lo z + M_lo (1 - z) <= dtheta <= delta_hi z + M_hi (1 - z)
            lp.add_row("angle", "anglo_" + sfx, {{th_fr, 1.0}, {th_to, -1.0}, {z, bm.lower - line.delta_min}}, bm.lower,
                       lp::kInf);
            lp.add_row("angle", "anghi_" + sfx, {{th_fr, 1.0}, {th_to, -1.0}, {z, bm.upper - line.delta_max}}, -lp::kInf,
                       bm.upper);

            // -b dtheta + |b| M_lo (1 - z) <= f <= -b dtheta + |b| M_hi (1 - z)
            lp.add_row("dcflow", "dclo_" + sfx, {{f, 1.0}, {th_fr, b}, {th_to, -b}, {z, ab * bm.lower}}, ab * bm.lower,
                       lp::kInf);
            lp.add_row("dcflow", "dchi_" + sfx, {{f, 1.0}, {th_fr, b}, {th_to, -b}, {z, ab * bm.upper}}, -lp::kInf,
                       ab * bm.upper);
        }
    }

    const auto inc = incidence(net);
    for (std::size_t n = 0; n < ix.N; ++n) {
        for (std::size_t t = 0; t < T; ++t) {
            std::vector<lp::Term> terms;
            for (std::size_t l : inc[n].lines_from) terms.push_back({ix.f(l, t), 1.0});
            for (std::size_t l : inc[n].lines_to) terms.push_back({ix.f(l, t), -1.0});
            terms.push_back({ix.s(n, t), -1.0});
            for (std::size_t i : inc[n].generators) terms.push_back({ix.g(i, t), -1.0});
            // sum f_fr - sum f_to = s - d + sum g
            lp.add_row("balance", detail::hour_name("bal", net.buses()[n].id, t), std::move(terms), -demand(n, t),
                       -demand(n, t));
        }
    }
    return m;
}

/// Adds `weight` to the objective coefficient of every shed variable.
inline void add_shed_objective(PspsModel& m, double weight) {
    for (std::size_t n = 0; n < m.index.N; ++n) {
        for (std::size_t t = 0; t < m.index.T; ++t) m.lp.add_objective(m.index.s(n, t), weight);
    }
}

inline PspsModel build_opt_psps(const Network& net, const DemandProfile& demand, std::span<const double> risk,
                                const ObjectiveContext& ctx) {
    detail::check_shapes(net, demand, risk);
    ctx.validate();
    PspsModel m = build_psps_constraints(net, demand);
    add_shed_objective(m, ctx.alpha / ctx.total_demand);
    if (ctx.total_risk > 0.0) {
        for (std::size_t l = 0; l < m.index.L; ++l) {
            m.lp.add_objective(m.index.z(l), (1.0 - ctx.alpha) * risk[l] / ctx.total_risk);
        }
    }
    return m;
}

/// Pins every switching variable to the given decision.
inline void fix_switching(PspsModel& m, const std::vector<int>& z) {
    if (z.size() != m.index.L) throw std::invalid_argument("switching vector has the wrong length");
    for (std::size_t l = 0; l < m.index.L; ++l) {
        auto& v = m.lp.variable(m.index.z(l));
        v.lower = v.upper = z[l] ? 1.0 : 0.0;
    }
}

/// Solver settings that start the search from switching decision `z`.
inline SolverConfig start_from_switching(const PspsModel& m, const std::vector<int>& z, SolverConfig cfg) {
    if (z.size() != m.index.L) throw std::invalid_argument("switching vector has the wrong length");
    cfg.start.assign(m.lp.num_variables(), 0.0);
    for (std::size_t l = 0; l < m.index.L; ++l) cfg.start[m.index.z(l)] = z[l] ? 1.0 : 0.0;
    return cfg;
}

// ---------------------------------------------------------------------------
// Solutions

struct DispatchSolution {
    using Matrix = std::vector<std::vector<double>>;  ///< [entity][hour]

    Matrix g, theta, f, s;
    std::vector<int> z;
    double objective = 0.0;
    double best_bound = 0.0;
    SolveStatus status = SolveStatus::infeasible;

    [[nodiscard]] bool feasible() const { return status != SolveStatus::infeasible; }
    [[nodiscard]] double total_shed() const {
        double v = 0.0;
        for (const auto& row : s) {
            for (double x : row) v += x;
        }
        return v;
    }
    [[nodiscard]] std::vector<double> bus_shed() const {
        std::vector<double> out;
        for (const auto& row : s) {
            double v = 0.0;
            for (double x : row) v += x;
            out.push_back(v);
        }
        return out;
    }
};

inline DispatchSolution extract_solution(const PspsIndex& ix, const SolveResult& r) {
    DispatchSolution sol;
    sol.status = r.status;
    sol.objective = r.objective;
    sol.best_bound = r.best_bound;
    if (!r.has_solution()) return sol;
    auto block = [&](std::size_t count, auto at) {
        DispatchSolution::Matrix out(count, std::vector<double>(ix.T));
        for (std::size_t e = 0; e < count; ++e) {
            for (std::size_t t = 0; t < ix.T; ++t) out[e][t] = r.x[at(e, t)];
        }
        return out;
    };
    sol.g = block(ix.G, [&](auto e, auto t) { return ix.g(e, t); });
    sol.theta = block(ix.N, [&](auto e, auto t) { return ix.theta(e, t); });
    sol.f = block(ix.L, [&](auto e, auto t) { return ix.f(e, t); });
    sol.s = block(ix.N, [&](auto e, auto t) { return ix.s(e, t); });
    for (std::size_t l = 0; l < ix.L; ++l) sol.z.push_back(r.x[ix.z(l)] >= 0.5 ? 1 : 0);
    return sol;
}

inline DispatchSolution solve(const PspsModel& m, const SolverConfig& cfg, const MilpSolver& solver) {
    return extract_solution(m.index, solver.solve(m.lp, cfg));
}

inline DispatchSolution solve(const PspsModel& m, const SolverConfig& cfg = {}) {
    return solve(m, cfg, *default_solver());
}

/// Objective value of the baseline model for given shed and switching.
inline double evaluate_objective(const DispatchSolution::Matrix& s, const std::vector<int>& z,
                                 const ObjectiveContext& ctx, std::span<const double> risk) {
    double shed = 0.0;
    for (const auto& row : s) {
        for (double v : row) shed += v;
    }
    double val = ctx.alpha * shed / ctx.total_demand;
    if (ctx.total_risk > 0.0) {
        double rz = 0.0;
        for (std::size_t l = 0; l < z.size(); ++l) rz += risk[l] * z[l];
        val += (1.0 - ctx.alpha) * rz / ctx.total_risk;
    }
    return val;
}

inline double energized_risk(const std::vector<int>& z, std::span<const double> risk) {
    double v = 0.0;
    for (std::size_t l = 0; l < z.size(); ++l) v += risk[l] * z[l];
    return v;
}

// ---------------------------------------------------------------------------
// Independent residual check

struct ResidualReport {
    std::map<std::string, double> max_violation;
    double tol = 1e-6;

    [[nodiscard]] double worst() const {
        double w = 0.0;
        for (const auto& [k, v] : max_violation) w = std::max(w, v);
        return w;
    }
    [[nodiscard]] bool pass() const { return worst() <= tol; }
};

/// Re-evaluates every constraint family directly from the network data.
/// Shapes must match the network and demand horizon.
inline ResidualReport verify_solution(const Network& net, const DemandProfile& demand, const DispatchSolution& sol,
                                      double tol = 1e-6) {
    ResidualReport rep;
    rep.tol = tol;
    for (const char* fam : {"gen_limits", "shed_limits", "flow_limits", "angle", "dcflow", "balance", "binary"}) {
        rep.max_violation[fam] = 0.0;
    }
    auto bump = [&](const char* fam, double v) {
        double& slot = rep.max_violation[fam];
        if (!(v <= slot)) slot = std::isnan(v) ? lp::kInf : v;
    };
    const std::size_t T = demand.hours;
    if (sol.g.size() != net.num_generators() || sol.theta.size() != net.num_buses() ||
        sol.f.size() != net.num_lines() || sol.s.size() != net.num_buses() || sol.z.size() != net.num_lines()) {
        throw std::invalid_argument("verify_solution: solution shape does not match the network");
    }
    const BigM bm = compute_big_m(net);

    for (std::size_t i = 0; i < net.num_generators(); ++i) {
        const auto& gen = net.generators()[i];
        for (std::size_t t = 0; t < T; ++t) {
            bump("gen_limits", gen.g_min - sol.g[i][t]);
            bump("gen_limits", sol.g[i][t] - gen.g_max);
        }
    }
    for (std::size_t n = 0; n < net.num_buses(); ++n) {
        for (std::size_t t = 0; t < T; ++t) {
            bump("shed_limits", -sol.s[n][t]);
            bump("shed_limits", sol.s[n][t] - demand(n, t));
        }
    }
    for (std::size_t l = 0; l < net.num_lines(); ++l) {
        const auto& line = net.lines()[l];
        const int zl = sol.z[l];
        if (zl != 0 && zl != 1) bump("binary", 1.0);
        const double z = zl;
        const std::size_t fr = net.bus_index(line.from_bus);
        const std::size_t to = net.bus_index(line.to_bus);
        const double b = line.susceptance();
        for (std::size_t t = 0; t < T; ++t) {
            const double f = sol.f[l][t];
            const double dth = sol.theta[fr][t] - sol.theta[to][t];
            bump("flow_limits", std::abs(f) - line.f_max * z);
            bump("angle", (line.delta_min * z + bm.lower * (1 - z)) - dth);
            bump("angle", dth - (line.delta_max * z + bm.upper * (1 - z)));
            bump("dcflow", (-b * dth + std::abs(b) * bm.lower * (1 - z)) - f);
            bump("dcflow", f - (-b * dth + std::abs(b) * bm.upper * (1 - z)));
        }
    }
    for (std::size_t t = 0; t < T; ++t) {
        std::vector<double> net_out(net.num_buses(), 0.0);
        for (std::size_t l = 0; l < net.num_lines(); ++l) {
            net_out[net.bus_index(net.lines()[l].from_bus)] += sol.f[l][t];
            net_out[net.bus_index(net.lines()[l].to_bus)] -= sol.f[l][t];
        }
        std::vector<double> rhs(net.num_buses(), 0.0);
        for (std::size_t n = 0; n < net.num_buses(); ++n) rhs[n] = sol.s[n][t] - demand(n, t);
        for (std::size_t i = 0; i < net.num_generators(); ++i) {
            rhs[net.bus_index(net.generators()[i].bus)] += sol.g[i][t];
        }
        for (std::size_t n = 0; n < net.num_buses(); ++n) bump("balance", std::abs(net_out[n] - rhs[n]));
    }
    return rep;
}

}  // namespace psps
