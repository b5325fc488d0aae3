#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <limits>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "psps/lp/linear_model.hpp"
#include "psps/lp/simplex.hpp"

namespace psps {

struct SolverConfig {
    double relative_mip_gap = 0.01;
    double time_limit_s = 600.0;
    std::uint64_t seed = 0;
    long node_limit = 5'000'000;
    double absolute_gap = 1e-9;
    double integrality_tol = 1e-6;
    /// Optional starting point, one value per model variable. Only the
    /// binaries are read; the continuous part is re-optimised.
    std::vector<double> start;

    void validate() const {
        if (!(relative_mip_gap > 0.0 && relative_mip_gap < 1.0)) {
            throw std::invalid_argument("relative_mip_gap must lie in (0,1)");
        }
        if (!(time_limit_s > 0.0)) throw std::invalid_argument("time_limit must be positive");
    }
};

enum class SolveStatus { optimal, time_limit, infeasible };

inline const char* to_string(SolveStatus s) {
    switch (s) {
        case SolveStatus::optimal: return "optimal-within-gap";
        case SolveStatus::time_limit: return "time-limit";
        case SolveStatus::infeasible: return "infeasible";
    }
    return "?";
}

struct SolveResult {
    SolveStatus status = SolveStatus::infeasible;
    std::vector<double> x;
    double objective = std::numeric_limits<double>::infinity();
    double best_bound = -std::numeric_limits<double>::infinity();
    long nodes = 0;
    long lp_iterations = 0;
    bool found = false;  ///< an incumbent exists (x may be empty for a model without variables)

    [[nodiscard]] bool has_solution() const { return found; }
};

class SolverError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Backend-neutral MILP contract. `optimal` means
/// objective - best_bound <= max(relative_mip_gap * |objective|, absolute_gap).
class MilpSolver {
public:
    virtual ~MilpSolver() = default;
    [[nodiscard]] virtual SolveResult solve(const lp::LinearModel& model, const SolverConfig& cfg) const = 0;
    [[nodiscard]] virtual std::string name() const = 0;
};

/// Best-first branch and bound over the dual-simplex LP relaxation.
///
/// Each node is a short warm-started dual simplex re-solve. The search dives
/// from every selected node until it is pruned, then jumps to the open node
/// with the lowest bound. Branching uses pseudocosts that are seeded by
/// iteration-limited strong branching until each direction has a few samples.
/// Reduced costs fix binaries whose flip cannot beat the incumbent, and every
/// new incumbent is polished by a one-flip local search.
class BranchAndBoundSolver final : public MilpSolver {
public:
    [[nodiscard]] std::string name() const override { return "builtin-bnb"; }

    [[nodiscard]] SolveResult solve(const lp::LinearModel& model, const SolverConfig& cfg) const override {
        cfg.validate();
        using Clock = std::chrono::steady_clock;
        constexpr double kInf = std::numeric_limits<double>::infinity();
        const auto started = Clock::now();
        auto elapsed = [&] { return std::chrono::duration<double>(Clock::now() - started).count(); };

        lp::SimplexOptions so;
        so.seed = cfg.seed;
        lp::SimplexSolver lp(lp::LpProblem::from_model(model), so);
        const double offset = model.objective_offset();
        const long strong_iterations = 60 + lp.num_rows() / 8;

        std::vector<int> bins;
        std::vector<double> bin_lo, bin_hi;
        for (std::size_t j = 0; j < model.num_variables(); ++j) {
            if (model.variable(j).kind == lp::VarKind::binary) {
                bins.push_back(static_cast<int>(j));
                bin_lo.push_back(std::ceil(model.variable(j).lower - cfg.integrality_tol));
                bin_hi.push_back(std::floor(model.variable(j).upper + cfg.integrality_tol));
            }
        }
        const std::size_t nb = bins.size();

        SolveResult res;
        double incumbent = kInf;
        auto cutoff = [&] {
            if (!std::isfinite(incumbent)) return incumbent;
            return incumbent - std::max(cfg.relative_mip_gap * std::abs(incumbent), cfg.absolute_gap);
        };

        // Root reduced costs give fixings that hold for the whole tree.
        double root_obj = kInf;
        std::vector<double> root_rc(nb, 0.0), root_x(nb, 0.0);
        auto global_fix = [&](std::size_t k) -> int {
            if (!std::isfinite(incumbent) || !std::isfinite(root_obj)) return -1;
            const double c = cutoff();
            if (root_x[k] <= bin_lo[k] + 1e-9 && root_obj + root_rc[k] >= c) return static_cast<int>(bin_lo[k]);
            if (root_x[k] >= bin_hi[k] - 1e-9 && root_obj - root_rc[k] >= c) return static_cast<int>(bin_hi[k]);
            return -1;
        };

        using Fix = std::vector<std::int8_t>;
        auto apply_fix = [&](const Fix& fix) {
            for (std::size_t k = 0; k < nb; ++k) {
                double lo = bin_lo[k], hi = bin_hi[k];
                int f = fix[k];
                if (f < 0) f = global_fix(k);
                if (f == 0) lo = hi = 0.0;
                if (f == 1) lo = hi = 1.0;
                if (lp.column_lower(bins[k]) != lo || lp.column_upper(bins[k]) != hi) {
                    lp.set_column_bounds(bins[k], lo, hi);
                }
            }
        };

        // Solves the continuous restriction with every binary pinned.
        auto evaluate = [&](const Fix& fix) {
            for (std::size_t k = 0; k < nb; ++k) {
                const double v = fix[k];
                if (lp.column_lower(bins[k]) != v || lp.column_upper(bins[k]) != v) lp.set_column_bounds(bins[k], v, v);
            }
            if (lp.solve() != lp::LpStatus::optimal) return kInf;
            return lp.objective() + offset;
        };
        auto accept = [&](const Fix& fix, double obj) {
            incumbent = obj;
            res.found = true;
            res.x = lp.column_values();
            for (std::size_t k = 0; k < nb; ++k) res.x[bins[k]] = fix[k];
        };
        auto try_assignment = [&](const std::vector<double>& values) {
            Fix fix(nb);
            for (std::size_t k = 0; k < nb; ++k) {
                const double v = std::clamp(values[k], bin_lo[k], bin_hi[k]);
                fix[k] = static_cast<std::int8_t>(v >= 0.5 ? 1 : 0);
            }
            double obj = evaluate(fix);
            if (!(obj < incumbent)) return;
            accept(fix, obj);
            // one-flip descent
            for (int pass = 0; pass < 3; ++pass) {
                bool improved = false;
                for (std::size_t k = 0; k < nb; ++k) {
                    if (bin_lo[k] == bin_hi[k] || elapsed() > cfg.time_limit_s) continue;
                    fix[k] = static_cast<std::int8_t>(1 - fix[k]);
                    const double o = evaluate(fix);
                    if (o < incumbent - 1e-12 * (1.0 + std::abs(incumbent))) {
                        accept(fix, o);
                        improved = true;
                    } else {
                        fix[k] = static_cast<std::int8_t>(1 - fix[k]);
                    }
                }
                if (!improved) break;
            }
        };

        struct Pseudocost {
            double sum[2] = {0.0, 0.0};
            int count[2] = {0, 0};
        };
        std::vector<Pseudocost> pc(nb);
        double pc_sum[2] = {0.0, 0.0};
        int pc_count[2] = {0, 0};
        auto record_gain = [&](std::size_t k, int dir, double gain) {
            gain = std::max(gain, 0.0);
            pc[k].sum[dir] += gain;
            ++pc[k].count[dir];
            pc_sum[dir] += gain;
            ++pc_count[dir];
        };
        auto unit_gain = [&](std::size_t k, int dir) {
            if (pc[k].count[dir] > 0) return pc[k].sum[dir] / pc[k].count[dir];
            return pc_count[dir] > 0 ? pc_sum[dir] / pc_count[dir] : 1.0;
        };
        auto score = [](double dn, double up) { return std::max(dn, 1e-9) * std::max(up, 1e-9); };

        struct Node {
            Fix fix;
            double bound;
            std::shared_ptr<const lp::Basis> basis;
            long seq = 0;
            int branched = -1;  ///< binary fixed last, for the pseudocost update
            int dir = 0;
            double parent_obj = 0.0;
            double distance = 0.0;
        };
        auto later = [](const Node& a, const Node& b) {
            return a.bound > b.bound || (a.bound == b.bound && a.seq > b.seq);
        };
        std::vector<Node> open;
        long seq = 0;
        auto push = [&](Node n) {
            n.seq = seq++;
            if (open.size() > 20000) n.basis = nullptr;
            open.push_back(std::move(n));
            std::push_heap(open.begin(), open.end(), later);
        };

        if (!cfg.start.empty()) {
            if (cfg.start.size() != model.num_variables()) throw SolverError("start vector has the wrong length");
            std::vector<double> given(nb);
            for (std::size_t k = 0; k < nb; ++k) given[k] = cfg.start[static_cast<std::size_t>(bins[k])];
            try_assignment(given);
        }

        std::optional<Node> next = Node{Fix(nb, -1), -kInf, nullptr};
        double lost_bound = kInf;
        bool limited = false;

        while (true) {
            if (!next) {
                if (open.empty() || open.front().bound >= cutoff()) break;
                std::pop_heap(open.begin(), open.end(), later);
                next = std::move(open.back());
                open.pop_back();
            }
            Node node = std::move(*next);
            next.reset();

            if (node.bound >= cutoff()) {
                if (node.bound < incumbent) push(std::move(node));
                continue;
            }
            if (res.nodes >= cfg.node_limit || elapsed() > cfg.time_limit_s) {
                push(std::move(node));
                limited = true;
                break;
            }

            apply_fix(node.fix);
            if (node.basis) lp.load_basis(*node.basis);
            lp::LpStatus st = lp.solve();
            if (st == lp::LpStatus::numerical_failure) {
                lp.reset_basis();
                st = lp.solve();
            }
            ++res.nodes;
            if (st == lp::LpStatus::infeasible) continue;
            if (st != lp::LpStatus::optimal) {
                if (res.nodes == 1 && st == lp::LpStatus::unbounded) throw SolverError("LP relaxation is unbounded");
                lost_bound = std::min(lost_bound, node.bound);
                continue;
            }
            double obj = lp.objective() + offset;
            if (node.branched >= 0 && node.distance > 0.0) {
                record_gain(static_cast<std::size_t>(node.branched), node.dir, (obj - node.parent_obj) / node.distance);
            }

            bool pruned = false;
            std::vector<double> bvals(nb);
            std::vector<std::size_t> frac;
            std::shared_ptr<const lp::Basis> snap;
            // Strong branching can settle some binaries; the node is then re-solved.
            for (int round = 0;; ++round) {
                if (obj >= cutoff()) {
                    if (obj < incumbent) push(Node{node.fix, obj, nullptr});
                    pruned = true;
                    break;
                }
                const std::vector<double> x = lp.column_values();
                frac.clear();
                for (std::size_t k = 0; k < nb; ++k) {
                    bvals[k] = x[bins[k]];
                    const double f = bvals[k] - std::floor(bvals[k]);
                    if (std::min(f, 1.0 - f) > cfg.integrality_tol) frac.push_back(k);
                }
                if (res.nodes == 1 && round == 0) {
                    root_obj = obj;
                    for (std::size_t k = 0; k < nb; ++k) {
                        root_rc[k] = lp.reduced_cost(bins[k]);
                        root_x[k] = bvals[k];
                    }
                }
                if (frac.empty()) {
                    try_assignment(bvals);
                    pruned = true;
                    break;
                }
                if (std::isfinite(incumbent)) {
                    const double c = cutoff();
                    for (std::size_t k = 0; k < nb; ++k) {
                        if (node.fix[k] >= 0 || bin_lo[k] == bin_hi[k]) continue;
                        const double rc = lp.reduced_cost(bins[k]);
                        if (bvals[k] <= cfg.integrality_tol && obj + rc >= c) node.fix[k] = 0;
                        if (bvals[k] >= 1.0 - cfg.integrality_tol && obj - rc >= c) node.fix[k] = 1;
                    }
                }
                snap = std::make_shared<const lp::Basis>(lp.basis());
                if (res.nodes == 1 || res.nodes % 100 == 0) {
                    try_assignment(bvals);
                    std::vector<double> keep_any(nb);
                    for (std::size_t k = 0; k < nb; ++k) keep_any[k] = bvals[k] > cfg.integrality_tol ? 1.0 : 0.0;
                    try_assignment(keep_any);
                    apply_fix(node.fix);
                    lp.load_basis(*snap);
                    if (obj >= cutoff()) continue;
                }
                if (round >= 4) break;

                std::sort(frac.begin(), frac.end(), [&](std::size_t a, std::size_t b) {
                    const double fa = bvals[a], fb = bvals[b];
                    return score(unit_gain(a, 0) * fa, unit_gain(a, 1) * (1 - fa)) >
                           score(unit_gain(b, 0) * fb, unit_gain(b, 1) * (1 - fb));
                });
                bool forced = false;
                int probes = 0;
                for (std::size_t k : frac) {
                    if (probes >= 8) break;
                    if (std::min(pc[k].count[0], pc[k].count[1]) >= 4) continue;
                    ++probes;
                    const double f = bvals[k];
                    double child[2];
                    for (int dir = 0; dir < 2; ++dir) {
                        const double v = dir;
                        lp.set_column_bounds(bins[k], v, v);
                        lp.set_iteration_limit(strong_iterations);
                        const lp::LpStatus cs = lp.solve();
                        lp.set_iteration_limit(-1);
                        child[dir] = kInf;
                        if (cs == lp::LpStatus::optimal || cs == lp::LpStatus::iteration_limit) {
                            child[dir] = std::max(obj, lp.objective() + offset);
                            record_gain(k, dir, (child[dir] - obj) / (dir ? 1.0 - f : f));
                            if (cs == lp::LpStatus::iteration_limit) child[dir] = -kInf;  // not a proven bound
                        } else if (cs == lp::LpStatus::infeasible) {
                            const double reach = std::isfinite(incumbent) ? cutoff() - obj : std::abs(obj) + 1.0;
                            record_gain(k, dir, reach / (dir ? 1.0 - f : f));
                        } else {
                            child[dir] = -kInf;
                        }
                        lp.set_column_bounds(bins[k], bin_lo[k], bin_hi[k]);
                        lp.load_basis(*snap);
                    }
                    const double c = cutoff();
                    for (int dir = 0; dir < 2; ++dir) {
                        if (child[dir] >= c && child[1 - dir] < c) {
                            if (std::isfinite(child[dir]) && child[dir] < incumbent) {
                                Node side{node.fix, child[dir], nullptr};
                                side.fix[k] = static_cast<std::int8_t>(dir);
                                push(std::move(side));
                            }
                            node.fix[k] = static_cast<std::int8_t>(1 - dir);
                            forced = true;
                        }
                    }
                    if (child[0] >= c && child[1] >= c) {
                        const double b = std::min(child[0], child[1]);
                        if (std::isfinite(b) && b < incumbent) push(Node{node.fix, b, nullptr});
                        pruned = true;
                        break;
                    }
                    if (forced) break;
                }
                if (pruned || !forced) break;
                apply_fix(node.fix);
                lp.load_basis(*snap);
                st = lp.solve();
                ++res.nodes;
                if (st != lp::LpStatus::optimal) {
                    if (st != lp::LpStatus::infeasible) lost_bound = std::min(lost_bound, obj);
                    pruned = true;
                    break;
                }
                obj = lp.objective() + offset;
            }
            if (pruned) continue;

            std::size_t branch = frac.front();
            double best = -1.0;
            for (std::size_t k : frac) {
                const double s = score(unit_gain(k, 0) * bvals[k], unit_gain(k, 1) * (1.0 - bvals[k]));
                if (s > best) {
                    best = s;
                    branch = k;
                }
            }
            const double f = bvals[branch];
            Node down{node.fix, obj, snap};
            Node up{std::move(node.fix), obj, snap};
            down.fix[branch] = 0;
            up.fix[branch] = 1;
            down.branched = up.branched = static_cast<int>(branch);
            down.dir = 0;
            up.dir = 1;
            down.parent_obj = up.parent_obj = obj;
            down.distance = f;
            up.distance = 1.0 - f;
            const bool up_first = unit_gain(branch, 1) * (1.0 - f) <= unit_gain(branch, 0) * f;
            Node& first = up_first ? up : down;
            Node& second = up_first ? down : up;
            first.basis = nullptr;  // the solver already holds this node's basis
            push(std::move(second));
            next = std::move(first);
        }

        res.lp_iterations = lp.iterations();
        if (!res.has_solution()) {
            res.status = limited ? SolveStatus::time_limit : SolveStatus::infeasible;
            return res;
        }
        res.objective = incumbent;
        double bound = std::min(incumbent, lost_bound);
        for (const auto& n : open) bound = std::min(bound, n.bound);
        res.best_bound = bound;
        // A node lost to numerical trouble can leave the gap unproven.
        const bool proven = incumbent - bound <= std::max(cfg.relative_mip_gap * std::abs(incumbent), cfg.absolute_gap) * (1.0 + 1e-9);
        res.status = limited || !proven ? SolveStatus::time_limit : SolveStatus::optimal;
        return res;
    }
};

inline std::shared_ptr<const MilpSolver> default_solver() {
    static const auto solver = std::make_shared<const BranchAndBoundSolver>();
    return solver;
}

}  // namespace psps
