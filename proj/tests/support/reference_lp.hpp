#pragma once

// Textbook dense two-phase tableau simplex with Bland's rule. Slow, but shares
// no code with the production solver; used only as a test oracle.

#include <cmath>
#include <limits>
#include <optional>
#include <vector>

#include "psps/lp/linear_model.hpp"

namespace psps::testing {

struct ReferenceLpResult {
    bool feasible = false;
    double objective = 0.0;
    std::vector<double> x;
};

namespace detail {

// max c^T y s.t. T y = b (b >= 0), y >= 0 over a dense tableau.
class Tableau {
public:
    Tableau(std::vector<std::vector<double>> a, std::vector<double> b, std::vector<double> c)
        : a_(std::move(a)), b_(std::move(b)), c_(std::move(c)) {}

    // Returns nullopt if infeasible; minimises c^T y.
    std::optional<std::vector<double>> solve() {
        const std::size_t m = a_.size();
        const std::size_t n = c_.size();
        // phase 1: artificial per row
        const std::size_t w = n + m;
        t_.assign(m + 1, std::vector<double>(w + 1, 0.0));
        basis_.assign(m, 0);
        for (std::size_t i = 0; i < m; ++i) {
            for (std::size_t j = 0; j < n; ++j) t_[i][j] = a_[i][j];
            t_[i][n + i] = 1.0;
            t_[i][w] = b_[i];
            basis_[i] = n + i;
        }
        // objective row holds reduced costs of sum(artificials)
        for (std::size_t j = 0; j <= w; ++j) {
            double s = 0.0;
            for (std::size_t i = 0; i < m; ++i) s += t_[i][j];
            t_[m][j] = (j >= n && j < w) ? 0.0 : -s;
        }
        run(w);
        if (-t_[m][w] > 1e-7 * (1.0 + max_b())) return std::nullopt;
        // drive artificials out of the basis where possible
        for (std::size_t i = 0; i < m; ++i) {
            if (basis_[i] < n) continue;
            for (std::size_t j = 0; j < n; ++j) {
                if (std::abs(t_[i][j]) > 1e-9) {
                    pivot(i, j, w);
                    break;
                }
            }
        }
        // phase 2 on original columns only
        for (std::size_t j = 0; j <= w; ++j) t_[m][j] = 0.0;
        for (std::size_t j = 0; j < n; ++j) t_[m][j] = c_[j];
        for (std::size_t i = 0; i < m; ++i) {
            const std::size_t bj = basis_[i];
            const double cb = bj < n ? c_[bj] : 0.0;
            if (cb == 0.0) continue;
            for (std::size_t j = 0; j <= w; ++j) t_[m][j] -= cb * t_[i][j];
        }
        limit_ = n;
        run(w);
        std::vector<double> y(n, 0.0);
        for (std::size_t i = 0; i < m; ++i) {
            if (basis_[i] < n) y[basis_[i]] = t_[i][w];
        }
        return y;
    }

private:
    double max_b() const {
        double v = 0.0;
        for (double x : b_) v = std::max(v, std::abs(x));
        return v;
    }

    void pivot(std::size_t r, std::size_t q, std::size_t w) {
        const double p = t_[r][q];
        for (std::size_t j = 0; j <= w; ++j) t_[r][j] /= p;
        for (std::size_t i = 0; i < t_.size(); ++i) {
            if (i == r) continue;
            const double f = t_[i][q];
            if (f == 0.0) continue;
            for (std::size_t j = 0; j <= w; ++j) t_[i][j] -= f * t_[r][j];
        }
        basis_[r] = q;
    }

    void run(std::size_t w) {
        const std::size_t m = a_.size();
        const std::size_t cols = limit_ ? limit_ : w;
        for (int it = 0; it < 200000; ++it) {
            std::size_t q = cols;
            for (std::size_t j = 0; j < cols; ++j) {
                if (t_[m][j] < -1e-10) {
                    q = j;
                    break;
                }
            }
            if (q == cols) return;
            std::size_t r = m;
            double best = std::numeric_limits<double>::infinity();
            for (std::size_t i = 0; i < m; ++i) {
                if (t_[i][q] > 1e-10) {
                    const double ratio = t_[i][w] / t_[i][q];
                    if (ratio < best - 1e-12 || (r < m && std::abs(ratio - best) <= 1e-12 && basis_[i] < basis_[r])) {
                        best = ratio;
                        r = i;
                    }
                }
            }
            if (r == m) return;  // unbounded; callers only pass bounded problems
            pivot(r, q, w);
        }
    }

    std::vector<std::vector<double>> a_;
    std::vector<double> b_, c_;
    std::vector<std::vector<double>> t_;
    std::vector<std::size_t> basis_;
    std::size_t limit_ = 0;
};

}  // namespace detail

/// Solves the continuous relaxation of `m`, with optional overriding bounds
/// (lower/upper per variable), by reduction to standard form.
inline ReferenceLpResult reference_lp(const lp::LinearModel& m, std::vector<double> lower = {},
                                      std::vector<double> upper = {}) {
    const std::size_t nv = m.num_variables();
    if (lower.empty()) {
        for (const auto& v : m.variables()) lower.push_back(v.lower);
    }
    if (upper.empty()) {
        for (const auto& v : m.variables()) upper.push_back(v.upper);
    }
    // x_j = shift_j + sign_j * y_pos - (free ? y_neg : 0)
    struct Map {
        double shift;
        double sign;
        std::size_t pos;
        long neg;
    };
    std::vector<Map> map(nv);
    std::size_t ny = 0;
    for (std::size_t j = 0; j < nv; ++j) {
        if (std::isfinite(lower[j])) {
            map[j] = {lower[j], 1.0, ny++, -1};
        } else if (std::isfinite(upper[j])) {
            map[j] = {upper[j], -1.0, ny++, -1};
        } else {
            map[j] = {0.0, 1.0, ny, static_cast<long>(ny + 1)};
            ny += 2;
        }
    }
    struct Con {
        std::vector<double> coef;
        double rhs;
        int sense;  // -1: <=, 0: =, +1: >=
    };
    std::vector<Con> cons;
    auto expand = [&](const std::vector<lp::Term>& terms, double& shift) {
        std::vector<double> c(ny, 0.0);
        shift = 0.0;
        for (const auto& t : terms) {
            const auto& mp = map[t.var];
            shift += t.coef * mp.shift;
            c[mp.pos] += t.coef * mp.sign;
            if (mp.neg >= 0) c[static_cast<std::size_t>(mp.neg)] -= t.coef;
        }
        return c;
    };
    for (std::size_t j = 0; j < nv; ++j) {
        if (std::isfinite(lower[j]) && std::isfinite(upper[j])) {
            std::vector<double> c(ny, 0.0);
            c[map[j].pos] = 1.0;
            cons.push_back({c, upper[j] - lower[j], lower[j] == upper[j] ? 0 : -1});
        }
    }
    for (const auto& row : m.rows()) {
        double shift = 0.0;
        auto c = expand(row.terms, shift);
        if (std::isfinite(row.lower) && std::isfinite(row.upper) && row.lower == row.upper) {
            cons.push_back({c, row.lower - shift, 0});
            continue;
        }
        if (std::isfinite(row.lower)) cons.push_back({c, row.lower - shift, +1});
        if (std::isfinite(row.upper)) cons.push_back({c, row.upper - shift, -1});
    }
    std::size_t nslack = 0;
    for (const auto& c : cons) nslack += (c.sense != 0);
    const std::size_t ncols = ny + nslack;
    std::vector<std::vector<double>> a;
    std::vector<double> b;
    std::size_t s = ny;
    for (const auto& c : cons) {
        std::vector<double> row(ncols, 0.0);
        std::copy(c.coef.begin(), c.coef.end(), row.begin());
        if (c.sense == -1) row[s++] = 1.0;
        if (c.sense == +1) row[s++] = -1.0;
        double rhs = c.rhs;
        if (rhs < 0) {
            for (double& v : row) v = -v;
            rhs = -rhs;
        }
        a.push_back(std::move(row));
        b.push_back(rhs);
    }
    std::vector<double> cost(ncols, 0.0);
    double cshift = 0.0;
    std::vector<lp::Term> obj_terms;
    for (std::size_t j = 0; j < nv; ++j) obj_terms.push_back({j, m.objective()[j]});
    auto oc = expand(obj_terms, cshift);
    std::copy(oc.begin(), oc.end(), cost.begin());

    detail::Tableau tab(std::move(a), std::move(b), cost);
    auto y = tab.solve();
    ReferenceLpResult res;
    if (!y) return res;
    res.feasible = true;
    res.x.assign(nv, 0.0);
    for (std::size_t j = 0; j < nv; ++j) {
        const auto& mp = map[j];
        double v = mp.shift + mp.sign * (*y)[mp.pos];
        if (mp.neg >= 0) v -= (*y)[static_cast<std::size_t>(mp.neg)];
        res.x[j] = v;
    }
    res.objective = m.evaluate_objective(res.x);
    return res;
}

}  // namespace psps::testing
