#pragma once

// Bounded revised simplex (dual phase with primal clean-up) over a sparse LU
// of the basis and a product-form eta file between refactorisations.
//
// Internal form: structural columns x_0..x_{n-1} and one logical r_i per row,
// with A x - r = 0 and bounds on every variable (row bounds become logical
// bounds). Dual feasibility at the start of a solve is obtained by placing
// nonbasic variables at the bound matching their reduced-cost sign; a missing
// bound is replaced by an artificial box of +-kArtificialBound.

#include <Eigen/Sparse>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "psps/lp/basis_factor.hpp"
#include "psps/lp/linear_model.hpp"

namespace psps::lp {

struct LpProblem {
    int num_rows = 0;
    int num_cols = 0;
    // CSC
    std::vector<int> col_start{0};
    std::vector<int> row_index;
    std::vector<double> value;
    std::vector<double> cost;
    std::vector<double> col_lower, col_upper;
    std::vector<double> row_lower, row_upper;

    static LpProblem from_model(const LinearModel& m) {
        LpProblem p;
        p.num_rows = static_cast<int>(m.num_rows());
        p.num_cols = static_cast<int>(m.num_variables());
        std::vector<std::vector<std::pair<int, double>>> cols(m.num_variables());
        for (std::size_t i = 0; i < m.num_rows(); ++i) {
            const auto& row = m.rows()[i];
            for (const auto& t : row.terms) {
                if (t.coef != 0.0) cols[t.var].emplace_back(static_cast<int>(i), t.coef);
            }
            p.row_lower.push_back(row.lower);
            p.row_upper.push_back(row.upper);
        }
        for (std::size_t j = 0; j < m.num_variables(); ++j) {
            auto& c = cols[j];
            std::sort(c.begin(), c.end());
            // merge duplicate entries of the same row
            for (std::size_t k = 0; k < c.size(); ++k) {
                if (!p.row_index.empty() && static_cast<int>(p.row_index.size()) > p.col_start.back() &&
                    p.row_index.back() == c[k].first) {
                    p.value.back() += c[k].second;
                } else {
                    p.row_index.push_back(c[k].first);
                    p.value.push_back(c[k].second);
                }
            }
            p.col_start.push_back(static_cast<int>(p.row_index.size()));
            p.cost.push_back(m.objective()[j]);
            p.col_lower.push_back(m.variable(j).lower);
            p.col_upper.push_back(m.variable(j).upper);
        }
        return p;
    }
};

enum class LpStatus { optimal, infeasible, unbounded, iteration_limit, numerical_failure };

inline const char* to_string(LpStatus s) {
    switch (s) {
        case LpStatus::optimal: return "optimal";
        case LpStatus::infeasible: return "infeasible";
        case LpStatus::unbounded: return "unbounded";
        case LpStatus::iteration_limit: return "iteration_limit";
        case LpStatus::numerical_failure: return "numerical_failure";
    }
    return "?";
}

enum class VarState : std::uint8_t { basic, at_lower, at_upper, at_zero, fixed };

struct Basis {
    std::vector<int> header;
    std::vector<VarState> state;
    std::vector<double> weights;  ///< dual steepest-edge weights; empty resets them
};

struct SimplexOptions {
    double primal_tol = 1e-9;
    double dual_tol = 1e-9;
    double pivot_tol = 1e-7;
    int refactor_interval = 80;
    long iteration_limit = -1;  // < 0: derived from problem size
    std::uint64_t seed = 0;
    bool perturb_costs = true;
};

class SimplexSolver {
public:
    static constexpr double kArtificialBound = 1e6;

    explicit SimplexSolver(LpProblem prob, SimplexOptions opts = {})
        : p_(std::move(prob)), opt_(opts), m_(p_.num_rows), n_(p_.num_cols), rng_(opts.seed) {
        const int total = n_ + m_;
        lo_.resize(total);
        hi_.resize(total);
        cost_.assign(total, 0.0);
        for (int j = 0; j < n_; ++j) {
            lo_[j] = p_.col_lower[j];
            hi_[j] = p_.col_upper[j];
            cost_[j] = p_.cost[j];
        }
        for (int i = 0; i < m_; ++i) {
            lo_[n_ + i] = p_.row_lower[i];
            hi_[n_ + i] = p_.row_upper[i];
        }
        build_row_copy();
        x_.assign(total, 0.0);
        d_.assign(total, 0.0);
        artificial_.assign(total, 0);
        set_slack_basis();
    }

    [[nodiscard]] int num_rows() const { return m_; }
    [[nodiscard]] int num_cols() const { return n_; }

    void set_column_bounds(int j, double lo, double hi) {
        lo_[j] = lo;
        hi_[j] = hi;
        if (state_[j] != VarState::basic) place_nonbasic(j);
        primal_dirty_ = true;
    }
    [[nodiscard]] double column_lower(int j) const { return lo_[j]; }
    [[nodiscard]] double column_upper(int j) const { return hi_[j]; }

    void set_cost(int j, double c) {
        cost_[j] = c;
        p_.cost[j] = c;
    }

    /// Adds nothing structurally; only bounds of an existing row may change.
    void set_row_bounds(int i, double lo, double hi) { set_column_bounds(n_ + i, lo, hi); }

    [[nodiscard]] Basis basis() const { return {header_, state_, dse_}; }

    /// Drops the current basis in favour of the all-slack one.
    void reset_basis() {
        set_slack_basis();
        factor_valid_ = false;
        primal_dirty_ = true;
    }

    void load_basis(const Basis& b) {
        header_ = b.header;
        state_ = b.state;
        pos_.assign(n_ + m_, -1);
        for (int r = 0; r < m_; ++r) pos_[header_[r]] = r;
        for (int j = 0; j < n_ + m_; ++j) {
            if (state_[j] != VarState::basic) place_nonbasic(j);
        }
        factor_valid_ = false;
        primal_dirty_ = true;
        if (b.weights.size() == static_cast<std::size_t>(m_)) {
            dse_ = b.weights;
        } else {
            dse_.assign(m_, 1.0);
        }
    }

    LpStatus solve() {
        iterations_this_solve_ = 0;
        const long limit = opt_.iteration_limit >= 0 ? opt_.iteration_limit : 50000 + 40L * (m_ + n_);
        for (int attempt = 0; attempt < 4; ++attempt) {
            if (!factor_valid_ && !refactor()) {
                set_slack_basis();
                refactor();
            }
            work_cost_ = cost_;
            std::fill(artificial_.begin(), artificial_.end(), 0);
            recompute_dual();
            prepare_dual_start();
            recompute_primal();
            if (opt_.perturb_costs) perturb_costs();

            LpStatus st = dual_loop(limit);
            if (st == LpStatus::numerical_failure) {
                set_slack_basis();
                continue;
            }
            if (st != LpStatus::optimal) {
                status_ = st;
                return st;
            }
            work_cost_ = cost_;
            if (etas_.size() > static_cast<std::size_t>(opt_.refactor_interval / 2)) refactor_or_reset();
            recompute_primal();
            recompute_dual();
            clear_artificial_if_basic();
            st = primal_loop(limit);
            if (st == LpStatus::numerical_failure) {
                set_slack_basis();
                continue;
            }
            if (st == LpStatus::optimal) {
                for (int j = 0; j < n_ + m_; ++j) {
                    if (artificial_[j] && state_[j] != VarState::basic) {
                        status_ = LpStatus::unbounded;
                        return status_;
                    }
                }
                if (max_primal_infeasibility() > 1e3 * opt_.primal_tol) {
                    // Clean-up drifted off the feasible region; restart from a fresh factor.
                    factor_valid_ = false;
                    continue;
                }
            }
            status_ = st;
            return st;
        }
        status_ = LpStatus::numerical_failure;
        return status_;
    }

    [[nodiscard]] std::vector<double> column_values() const { return {x_.begin(), x_.begin() + n_}; }
    [[nodiscard]] double column_value(int j) const { return x_[j]; }
    [[nodiscard]] double objective() const {
        double v = 0.0;
        for (int j = 0; j < n_; ++j) v += cost_[j] * x_[j];
        return v;
    }
    /// Reduced cost of column `j` at the last optimal basis.
    [[nodiscard]] double reduced_cost(int j) const { return d_[j]; }
    [[nodiscard]] long iterations() const { return iterations_; }
    /// Caps the pivots of each later solve(); negative restores the size-based default.
    void set_iteration_limit(long limit) { opt_.iteration_limit = limit; }
    [[nodiscard]] LpStatus status() const { return status_; }

    [[nodiscard]] double max_primal_infeasibility() const {
        double worst = 0.0;
        for (int j = 0; j < n_ + m_; ++j) worst = std::max({worst, lo_[j] - x_[j], x_[j] - hi_[j]});
        return worst;
    }

private:
    using SpMat = Eigen::SparseMatrix<double, Eigen::ColMajor, int>;
    using Vec = Eigen::VectorXd;

    struct Eta {
        int row;
        double pivot;
        std::vector<int> idx;
        std::vector<double> val;
    };

    // ---- basis bookkeeping -------------------------------------------------

    void set_slack_basis() {
        const int total = n_ + m_;
        header_.resize(m_);
        state_.assign(total, VarState::at_lower);
        pos_.assign(total, -1);
        for (int i = 0; i < m_; ++i) {
            header_[i] = n_ + i;
            state_[n_ + i] = VarState::basic;
            pos_[n_ + i] = i;
        }
        for (int j = 0; j < n_; ++j) {
            d_[j] = cost_[j];
            place_nonbasic(j);
        }
        factor_valid_ = false;
        primal_dirty_ = true;
        dse_.assign(m_, 1.0);
    }

    // Chooses a bound for a nonbasic variable consistent with its current
    // reduced cost where possible.
    void place_nonbasic(int j) {
        artificial_[j] = 0;
        if (lo_[j] == hi_[j]) {
            state_[j] = VarState::fixed;
            x_[j] = lo_[j];
            return;
        }
        const bool lo_f = std::isfinite(lo_[j]);
        const bool hi_f = std::isfinite(hi_[j]);
        VarState s = state_[j];
        if (s == VarState::at_lower && lo_f) {
            x_[j] = lo_[j];
            return;
        }
        if (s == VarState::at_upper && hi_f) {
            x_[j] = hi_[j];
            return;
        }
        if (lo_f && (d_[j] >= 0.0 || !hi_f)) {
            state_[j] = VarState::at_lower;
            x_[j] = lo_[j];
        } else if (hi_f) {
            state_[j] = VarState::at_upper;
            x_[j] = hi_[j];
        } else {
            state_[j] = VarState::at_zero;
            x_[j] = 0.0;
        }
    }

    void prepare_dual_start() {
        const double tol = opt_.dual_tol;
        for (int j = 0; j < n_ + m_; ++j) {
            if (state_[j] == VarState::basic) continue;
            artificial_[j] = 0;
            if (lo_[j] == hi_[j]) {
                state_[j] = VarState::fixed;
                x_[j] = lo_[j];
                continue;
            }
            const bool lo_f = std::isfinite(lo_[j]);
            const bool hi_f = std::isfinite(hi_[j]);
            if (d_[j] > tol) {
                state_[j] = VarState::at_lower;
                if (lo_f) {
                    x_[j] = lo_[j];
                } else {
                    x_[j] = std::min(-kArtificialBound, hi_[j] - kArtificialBound);
                    artificial_[j] = 1;
                }
            } else if (d_[j] < -tol) {
                state_[j] = VarState::at_upper;
                if (hi_f) {
                    x_[j] = hi_[j];
                } else {
                    x_[j] = std::max(kArtificialBound, lo_[j] + kArtificialBound);
                    artificial_[j] = 1;
                }
            } else if (state_[j] == VarState::at_lower && lo_f) {
                x_[j] = lo_[j];
            } else if (state_[j] == VarState::at_upper && hi_f) {
                x_[j] = hi_[j];
            } else if (lo_f) {
                state_[j] = VarState::at_lower;
                x_[j] = lo_[j];
            } else if (hi_f) {
                state_[j] = VarState::at_upper;
                x_[j] = hi_[j];
            } else {
                state_[j] = VarState::at_zero;
                x_[j] = 0.0;
            }
        }
        primal_dirty_ = true;
    }

    void clear_artificial_if_basic() {
        for (int j = 0; j < n_ + m_; ++j) {
            if (state_[j] == VarState::basic) artificial_[j] = 0;
        }
    }

    void perturb_costs() {
        std::uniform_real_distribution<double> u(1.0, 2.0);
        for (int j = 0; j < n_; ++j) {
            if (state_[j] == VarState::basic || state_[j] == VarState::fixed || state_[j] == VarState::at_zero) {
                continue;
            }
            const double delta = (1e-7 + 1e-6 * std::abs(cost_[j])) * u(rng_);
            const double signed_delta = state_[j] == VarState::at_lower ? delta : -delta;
            work_cost_[j] += signed_delta;
            d_[j] += signed_delta;
        }
    }

    // ---- linear algebra ----------------------------------------------------

    void build_row_copy() {
        row_start_.assign(m_ + 1, 0);
        for (int k : p_.row_index) ++row_start_[k + 1];
        for (int i = 0; i < m_; ++i) row_start_[i + 1] += row_start_[i];
        row_col_.resize(p_.row_index.size());
        row_val_.resize(p_.row_index.size());
        std::vector<int> fill(row_start_.begin(), row_start_.end() - 1);
        for (int j = 0; j < n_; ++j) {
            for (int k = p_.col_start[j]; k < p_.col_start[j + 1]; ++k) {
                const int i = p_.row_index[k];
                row_col_[fill[i]] = j;
                row_val_[fill[i]] = p_.value[k];
                ++fill[i];
            }
        }
        row_work_.assign(n_, 0.0);
    }

    bool refactor() {
        etas_.clear();
        if (m_ == 0) {
            factor_valid_ = true;
            return true;
        }
        std::vector<BasisFactor::Column> cols(m_);
        for (int r = 0; r < m_; ++r) {
            const int j = header_[r];
            auto& c = cols[r];
            if (j < n_) {
                c.row.assign(p_.row_index.begin() + p_.col_start[j], p_.row_index.begin() + p_.col_start[j + 1]);
                c.val.assign(p_.value.begin() + p_.col_start[j], p_.value.begin() + p_.col_start[j + 1]);
            } else {
                c.row.push_back(j - n_);
                c.val.push_back(-1.0);
            }
        }
        factor_valid_ = lu_.factorize(std::move(cols));
        if (factor_valid_) {
            Vec sol = Vec::Ones(m_);
            lu_.ftran(sol);
            if (!sol.allFinite() || sol.cwiseAbs().maxCoeff() > 1e14) factor_valid_ = false;
        }
        return factor_valid_;
    }

    void refactor_or_reset() {
        if (!refactor()) {
            set_slack_basis();
            refactor();
            prepare_dual_start();
        }
        primal_dirty_ = true;
    }

    // B^{-1} v
    void ftran(Vec& v) const {
        if (m_ == 0) return;
        lu_.ftran(v);
        for (const auto& e : etas_) {
            const double yr = v[e.row] / e.pivot;
            v[e.row] = yr;
            if (yr == 0.0) continue;
            for (std::size_t k = 0; k < e.idx.size(); ++k) v[e.idx[k]] -= e.val[k] * yr;
        }
    }

    // B^{-T} v
    void btran(Vec& v) const {
        if (m_ == 0) return;
        for (auto it = etas_.rbegin(); it != etas_.rend(); ++it) {
            double s = v[it->row];
            for (std::size_t k = 0; k < it->idx.size(); ++k) s -= it->val[k] * v[it->idx[k]];
            v[it->row] = s / it->pivot;
        }
        lu_.btran(v);
    }

    void column(int j, Vec& out) const {
        out.setZero(m_);
        if (j < n_) {
            for (int k = p_.col_start[j]; k < p_.col_start[j + 1]; ++k) out[p_.row_index[k]] = p_.value[k];
        } else {
            out[j - n_] = -1.0;
        }
    }

    [[nodiscard]] double dot_column(int j, const Vec& y) const {
        if (j >= n_) return -y[j - n_];
        double s = 0.0;
        for (int k = p_.col_start[j]; k < p_.col_start[j + 1]; ++k) s += p_.value[k] * y[p_.row_index[k]];
        return s;
    }

    void recompute_primal() {
        Vec rhs = Vec::Zero(m_);
        for (int j = 0; j < n_ + m_; ++j) {
            if (state_[j] == VarState::basic || x_[j] == 0.0) continue;
            if (j < n_) {
                for (int k = p_.col_start[j]; k < p_.col_start[j + 1]; ++k) rhs[p_.row_index[k]] -= p_.value[k] * x_[j];
            } else {
                rhs[j - n_] += x_[j];
            }
        }
        ftran(rhs);
        for (int r = 0; r < m_; ++r) x_[header_[r]] = rhs[r];
        primal_dirty_ = false;
    }

    void recompute_dual() {
        Vec y(m_);
        for (int r = 0; r < m_; ++r) y[r] = work_cost_.empty() ? cost_[header_[r]] : work_cost_[header_[r]];
        btran(y);
        const auto& c = work_cost_.empty() ? cost_ : work_cost_;
        for (int j = 0; j < n_ + m_; ++j) {
            d_[j] = state_[j] == VarState::basic ? 0.0 : c[j] - dot_column(j, y);
        }
    }

    // alpha_r = rho^T [A  -I] restricted to nonbasic columns
    void compute_row(const Vec& rho, std::vector<double>& alpha) {
        alpha.assign(n_ + m_, 0.0);
        int nnz = 0;
        for (int i = 0; i < m_; ++i) nnz += (rho[i] != 0.0);
        if (nnz < m_ / 4) {
            for (int i = 0; i < m_; ++i) {
                const double ri = rho[i];
                if (ri == 0.0) continue;
                for (int k = row_start_[i]; k < row_start_[i + 1]; ++k) alpha[row_col_[k]] += ri * row_val_[k];
            }
            for (int j = 0; j < n_; ++j) {
                if (state_[j] == VarState::basic) alpha[j] = 0.0;
            }
        } else {
            for (int j = 0; j < n_; ++j) {
                if (state_[j] != VarState::basic) alpha[j] = dot_column(j, rho);
            }
        }
        for (int i = 0; i < m_; ++i) {
            if (state_[n_ + i] != VarState::basic) alpha[n_ + i] = -rho[i];
        }
    }

    void push_eta(int r, const Vec& col) {
        Eta e{r, col[r], {}, {}};
        for (int i = 0; i < m_; ++i) {
            if (i != r && std::abs(col[i]) > 1e-14) {
                e.idx.push_back(i);
                e.val.push_back(col[i]);
            }
        }
        etas_.push_back(std::move(e));
    }

    void change_basis(int r, int q, int p, VarState leaving_state) {
        header_[r] = q;
        pos_[q] = r;
        pos_[p] = -1;
        state_[q] = VarState::basic;
        state_[p] = leaving_state;
        artificial_[q] = 0;
    }

    // ---- dual simplex ------------------------------------------------------

    LpStatus dual_loop(long limit) {
        Vec rho(m_), col(m_), tau(m_), tmp(m_);
        std::vector<double> alpha;
        bool fresh = true;
        while (true) {
            if (iterations_this_solve_ >= limit) return LpStatus::iteration_limit;
            if (static_cast<int>(etas_.size()) >= opt_.refactor_interval) {
                if (!refactor()) return LpStatus::numerical_failure;
                recompute_primal();
                recompute_dual();
                fresh = true;
            }
            // leaving row: dual steepest edge pricing
            int r = -1;
            double best = 0.0;
            for (int i = 0; i < m_; ++i) {
                const int p = header_[i];
                double inf = 0.0;
                if (x_[p] < lo_[p] - opt_.primal_tol) {
                    inf = lo_[p] - x_[p];
                } else if (x_[p] > hi_[p] + opt_.primal_tol) {
                    inf = x_[p] - hi_[p];
                }
                if (inf <= 0.0) continue;
                const double score = inf * inf / dse_[i];
                if (score > best) {
                    best = score;
                    r = i;
                }
            }
            if (r < 0) return LpStatus::optimal;
            const int p = header_[r];
            const bool to_lower = x_[p] < lo_[p];
            const double s = to_lower ? 1.0 : -1.0;

            rho.setZero(m_);
            rho[r] = 1.0;
            btran(rho);
            compute_row(rho, alpha);

            // Harris two-pass ratio test on the dual step
            const double tol_d = opt_.dual_tol;
            double t_max = kInf;
            for (int j = 0; j < n_ + m_; ++j) {
                const VarState st = state_[j];
                if (st == VarState::basic || st == VarState::fixed) continue;
                const double a = s * alpha[j];
                if (std::abs(a) <= opt_.pivot_tol) continue;
                if (a < 0.0 && (st == VarState::at_lower || st == VarState::at_zero)) {
                    t_max = std::min(t_max, (std::max(d_[j], 0.0) + tol_d) / -a);
                } else if (a > 0.0 && (st == VarState::at_upper || st == VarState::at_zero)) {
                    t_max = std::min(t_max, (tol_d - std::min(d_[j], 0.0)) / a);
                }
            }
            int q = -1;
            double best_a = 0.0;
            if (t_max < kInf) {
                for (int j = 0; j < n_ + m_; ++j) {
                    const VarState st = state_[j];
                    if (st == VarState::basic || st == VarState::fixed) continue;
                    const double a = s * alpha[j];
                    if (std::abs(a) <= opt_.pivot_tol) continue;
                    double ratio;
                    if (a < 0.0 && (st == VarState::at_lower || st == VarState::at_zero)) {
                        ratio = std::max(d_[j], 0.0) / -a;
                    } else if (a > 0.0 && (st == VarState::at_upper || st == VarState::at_zero)) {
                        ratio = -std::min(d_[j], 0.0) / a;
                    } else {
                        continue;
                    }
                    if (ratio <= t_max && std::abs(a) > best_a) {
                        best_a = std::abs(a);
                        q = j;
                    }
                }
            }
            if (q < 0) {
                if (!fresh) {
                    if (!refactor()) return LpStatus::numerical_failure;
                    recompute_primal();
                    recompute_dual();
                    fresh = true;
                    continue;
                }
                return LpStatus::infeasible;
            }

            column(q, col);
            ftran(col);
            const double pivot = col[r];
            if (std::abs(pivot - alpha[q]) > 1e-7 * (1.0 + std::abs(pivot)) || std::abs(pivot) < 1e-11) {
                if (fresh) return LpStatus::numerical_failure;
                if (!refactor()) return LpStatus::numerical_failure;
                recompute_primal();
                recompute_dual();
                fresh = true;
                continue;
            }

            // dual update
            const double theta_d = d_[q] / pivot;
            for (int j = 0; j < n_ + m_; ++j) {
                if (state_[j] != VarState::basic && alpha[j] != 0.0) d_[j] -= theta_d * alpha[j];
            }
            d_[q] = 0.0;
            d_[p] = -theta_d;

            // primal update
            const double target = to_lower ? lo_[p] : hi_[p];
            const double theta_p = (x_[p] - target) / pivot;
            for (int i = 0; i < m_; ++i) {
                if (col[i] != 0.0) x_[header_[i]] -= theta_p * col[i];
            }
            x_[q] += theta_p;
            x_[p] = target;

            // steepest-edge weights
            tau = rho;
            ftran(tau);
            const double wr = dse_[r];
            for (int i = 0; i < m_; ++i) {
                if (i == r || col[i] == 0.0) continue;
                const double ratio = col[i] / pivot;
                dse_[i] = std::max(dse_[i] + ratio * (ratio * wr - 2.0 * tau[i]), 1e-8);
            }
            dse_[r] = std::max(wr / (pivot * pivot), 1e-8);

            VarState leaving = lo_[p] == hi_[p] ? VarState::fixed : (to_lower ? VarState::at_lower : VarState::at_upper);
            change_basis(r, q, p, leaving);
            push_eta(r, col);
            ++iterations_;
            ++iterations_this_solve_;
            fresh = false;

            // restore dual feasibility lost within the Harris tolerance
            bool flipped = false;
            tmp.setZero(m_);
            for (int j = 0; j < n_ + m_; ++j) {
                const VarState st = state_[j];
                if (st == VarState::basic || st == VarState::fixed) continue;
                const bool wrong = (st == VarState::at_lower && d_[j] < -tol_d) ||
                                   (st == VarState::at_upper && d_[j] > tol_d) ||
                                   (st == VarState::at_zero && std::abs(d_[j]) > tol_d);
                if (!wrong) continue;
                const bool boxed = std::isfinite(lo_[j]) && std::isfinite(hi_[j]) && !artificial_[j];
                if (boxed && st != VarState::at_zero) {
                    const double old = x_[j];
                    if (st == VarState::at_lower) {
                        state_[j] = VarState::at_upper;
                        x_[j] = hi_[j];
                    } else {
                        state_[j] = VarState::at_lower;
                        x_[j] = lo_[j];
                    }
                    const double delta = x_[j] - old;
                    if (j < n_) {
                        for (int k = p_.col_start[j]; k < p_.col_start[j + 1]; ++k) tmp[p_.row_index[k]] += p_.value[k] * delta;
                    } else {
                        tmp[j - n_] -= delta;
                    }
                    flipped = true;
                } else {
                    work_cost_[j] -= d_[j];
                    d_[j] = 0.0;
                }
            }
            if (flipped) {
                ftran(tmp);
                for (int i = 0; i < m_; ++i) x_[header_[i]] -= tmp[i];
            }
        }
    }

    // ---- primal simplex (phase 2) -----------------------------------------

    LpStatus primal_loop(long limit) {
        Vec rho(m_), col(m_);
        std::vector<double> alpha;
        const double tol_p = opt_.primal_tol;
        const double tol_d = opt_.dual_tol;
        bool fresh = true;
        while (true) {
            if (iterations_this_solve_ >= limit) return LpStatus::iteration_limit;
            if (static_cast<int>(etas_.size()) >= opt_.refactor_interval) {
                if (!refactor()) return LpStatus::numerical_failure;
                recompute_primal();
                recompute_dual();
                fresh = true;
            }
            int q = -1;
            double best = 0.0;
            for (int j = 0; j < n_ + m_; ++j) {
                const VarState st = state_[j];
                if (st == VarState::basic || st == VarState::fixed) continue;
                double inf = 0.0;
                if ((st == VarState::at_lower || st == VarState::at_zero) && d_[j] < -tol_d) inf = -d_[j];
                if ((st == VarState::at_upper || st == VarState::at_zero) && d_[j] > tol_d) inf = d_[j];
                if (inf > best) {
                    best = inf;
                    q = j;
                }
            }
            if (q < 0) return LpStatus::optimal;
            const double dir = d_[q] < 0.0 ? 1.0 : -1.0;
            column(q, col);
            ftran(col);

            double t_max = kInf;
            for (int i = 0; i < m_; ++i) {
                const double a = dir * col[i];
                const int b = header_[i];
                if (a > opt_.pivot_tol && std::isfinite(lo_[b])) {
                    t_max = std::min(t_max, (x_[b] - lo_[b] + tol_p) / a);
                } else if (a < -opt_.pivot_tol && std::isfinite(hi_[b])) {
                    t_max = std::min(t_max, (hi_[b] - x_[b] + tol_p) / -a);
                }
            }
            double range = kInf;
            if (state_[q] != VarState::at_zero && std::isfinite(lo_[q]) && std::isfinite(hi_[q]) && !artificial_[q]) {
                range = hi_[q] - lo_[q];
            }
            if (artificial_[q]) {
                // Moving off an artificial bound toward the real (infinite) side is unbounded
                // unless a basic variable blocks; the box is released here.
                artificial_[q] = 0;
            }
            if (range <= t_max) {
                for (int i = 0; i < m_; ++i) x_[header_[i]] -= dir * range * col[i];
                x_[q] += dir * range;
                state_[q] = state_[q] == VarState::at_lower ? VarState::at_upper : VarState::at_lower;
                x_[q] = state_[q] == VarState::at_lower ? lo_[q] : hi_[q];
                continue;
            }
            if (!std::isfinite(t_max)) return LpStatus::unbounded;
            int r = -1;
            double best_a = 0.0, t = 0.0;
            for (int i = 0; i < m_; ++i) {
                const double a = dir * col[i];
                const int b = header_[i];
                double ratio;
                if (a > opt_.pivot_tol && std::isfinite(lo_[b])) {
                    ratio = std::max(x_[b] - lo_[b], 0.0) / a;
                } else if (a < -opt_.pivot_tol && std::isfinite(hi_[b])) {
                    ratio = std::max(hi_[b] - x_[b], 0.0) / -a;
                } else {
                    continue;
                }
                if (ratio <= t_max && std::abs(a) > best_a) {
                    best_a = std::abs(a);
                    r = i;
                    t = ratio;
                }
            }
            if (r < 0) return LpStatus::unbounded;
            const int p = header_[r];
            rho.setZero(m_);
            rho[r] = 1.0;
            btran(rho);
            compute_row(rho, alpha);
            const double pivot = col[r];
            if (std::abs(pivot - alpha[q]) > 1e-7 * (1.0 + std::abs(pivot))) {
                if (fresh) return LpStatus::numerical_failure;
                if (!refactor()) return LpStatus::numerical_failure;
                recompute_primal();
                recompute_dual();
                fresh = true;
                continue;
            }
            for (int i = 0; i < m_; ++i) {
                if (col[i] != 0.0) x_[header_[i]] -= dir * t * col[i];
            }
            x_[q] += dir * t;
            const bool leaves_lower = dir * col[r] > 0.0;
            x_[p] = leaves_lower ? lo_[p] : hi_[p];

            const double theta_d = d_[q] / pivot;
            for (int j = 0; j < n_ + m_; ++j) {
                if (state_[j] != VarState::basic && alpha[j] != 0.0) d_[j] -= theta_d * alpha[j];
            }
            d_[q] = 0.0;
            d_[p] = -theta_d;
            VarState leaving = lo_[p] == hi_[p] ? VarState::fixed : (leaves_lower ? VarState::at_lower : VarState::at_upper);
            change_basis(r, q, p, leaving);
            push_eta(r, col);
            ++iterations_;
            ++iterations_this_solve_;
            fresh = false;
            std::fill(dse_.begin(), dse_.end(), 1.0);
        }
    }

    LpProblem p_;
    SimplexOptions opt_;
    int m_, n_;
    std::mt19937_64 rng_;

    std::vector<double> lo_, hi_, cost_, work_cost_;
    std::vector<double> x_, d_, dse_;
    std::vector<int> header_, pos_;
    std::vector<VarState> state_;
    std::vector<std::uint8_t> artificial_;

    std::vector<int> row_start_, row_col_;
    std::vector<double> row_val_, row_work_;

    BasisFactor lu_;
    std::vector<Eta> etas_;
    bool factor_valid_ = false;
    bool primal_dirty_ = true;
    long iterations_ = 0;
    long iterations_this_solve_ = 0;
    LpStatus status_ = LpStatus::numerical_failure;
};

}  // namespace psps::lp
