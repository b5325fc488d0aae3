#pragma once

#include <Eigen/Dense>
#include <Eigen/SparseLU>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

namespace psps::lp {

/// LU factorisation of a simplex basis.
///
/// Column singletons are peeled off first, then row singletons; what remains
/// (the kernel) is small for network-structured bases and gets a dense LU.
/// After permutation the basis is block upper triangular:
///
///         C1   C2   C3
///   R1  [ U1   *    *  ]
///   R2  [ 0    K    *  ]
///   R3  [ 0    0    L3 ]
///
/// Kernels above `max_dense` fall back to a sparse LU of the whole basis.
class BasisFactor {
public:
    using Vec = Eigen::VectorXd;

    struct Column {
        std::vector<int> row;
        std::vector<double> val;
    };

    std::size_t max_dense = 600;
    double pivot_tol = 1e-9;

    /// `cols[r]` is basis column r. Returns false for a singular basis.
    bool factorize(std::vector<Column> cols) {
        cols_ = std::move(cols);
        m_ = static_cast<int>(cols_.size());
        upper_.clear();
        lower_.clear();
        kernel_rows_.clear();
        kernel_cols_.clear();
        sparse_ = false;
        if (m_ == 0) return true;

        std::vector<int> row_start(m_ + 1, 0);
        for (const auto& c : cols_) {
            for (int i : c.row) ++row_start[i + 1];
        }
        for (int i = 0; i < m_; ++i) row_start[i + 1] += row_start[i];
        std::vector<int> row_cols(row_start[m_]);
        {
            std::vector<int> fill(row_start.begin(), row_start.end() - 1);
            for (int c = 0; c < m_; ++c) {
                for (int i : cols_[c].row) row_cols[fill[i]++] = c;
            }
        }
        std::vector<char> row_live(m_, 1), col_live(m_, 1);
        std::vector<int> col_count(m_), row_count(m_);
        for (int c = 0; c < m_; ++c) col_count[c] = static_cast<int>(cols_[c].row.size());
        for (int i = 0; i < m_; ++i) row_count[i] = row_start[i + 1] - row_start[i];

        auto entry = [&](int c, int i) {
            const auto& col = cols_[c];
            for (std::size_t k = 0; k < col.row.size(); ++k) {
                if (col.row[k] == i) return col.val[k];
            }
            return 0.0;
        };

        // column singletons
        std::vector<int> queue;
        for (int c = 0; c < m_; ++c) {
            if (col_count[c] == 0) return false;
            if (col_count[c] == 1) queue.push_back(c);
        }
        while (!queue.empty()) {
            const int c = queue.back();
            queue.pop_back();
            if (!col_live[c] || col_count[c] != 1) continue;
            int i = -1;
            for (int r : cols_[c].row) {
                if (row_live[r]) i = r;
            }
            const double v = entry(c, i);
            if (std::abs(v) < pivot_tol) continue;
            upper_.push_back({i, c, v});
            col_live[c] = 0;
            row_live[i] = 0;
            for (int r : cols_[c].row) --row_count[r];
            for (int k = row_start[i]; k < row_start[i + 1]; ++k) {
                const int cc = row_cols[k];
                if (!col_live[cc]) continue;
                if (--col_count[cc] == 1) queue.push_back(cc);
                if (col_count[cc] == 0) return false;
            }
        }
        // row singletons
        for (int i = 0; i < m_; ++i) {
            if (row_live[i] && row_count[i] == 1) queue.push_back(i);
            if (row_live[i] && row_count[i] == 0) return false;
        }
        while (!queue.empty()) {
            const int i = queue.back();
            queue.pop_back();
            if (!row_live[i] || row_count[i] != 1) continue;
            int c = -1;
            for (int k = row_start[i]; k < row_start[i + 1]; ++k) {
                if (col_live[row_cols[k]]) c = row_cols[k];
            }
            const double v = entry(c, i);
            if (std::abs(v) < pivot_tol) continue;
            lower_.push_back({i, c, v});
            col_live[c] = 0;
            row_live[i] = 0;
            for (int r : cols_[c].row) {
                if (!row_live[r]) continue;
                if (--row_count[r] == 1) queue.push_back(r);
                if (row_count[r] == 0) return false;
            }
        }

        for (int i = 0; i < m_; ++i) {
            if (row_live[i]) kernel_rows_.push_back(i);
        }
        for (int c = 0; c < m_; ++c) {
            if (col_live[c]) kernel_cols_.push_back(c);
        }
        if (kernel_rows_.size() != kernel_cols_.size()) return false;
        const auto k = static_cast<int>(kernel_rows_.size());
        if (static_cast<std::size_t>(k) > max_dense) return factorize_sparse();
        if (k > 0) {
            std::vector<int> pos(m_, -1);
            for (int a = 0; a < k; ++a) pos[kernel_rows_[a]] = a;
            Eigen::MatrixXd K = Eigen::MatrixXd::Zero(k, k);
            for (int b = 0; b < k; ++b) {
                const auto& col = cols_[kernel_cols_[b]];
                for (std::size_t e = 0; e < col.row.size(); ++e) {
                    if (pos[col.row[e]] >= 0) K(pos[col.row[e]], b) = col.val[e];
                }
            }
            const double scale = K.cwiseAbs().maxCoeff();
            dense_.compute(K);
            const auto& lu = dense_.matrixLU();
            double smallest = std::abs(lu(0, 0));
            for (int a = 1; a < k; ++a) smallest = std::min(smallest, std::abs(lu(a, a)));
            if (!(smallest > 1e-12 * std::max(1.0, scale))) return false;
        }
        return true;
    }

    /// B x = v; rows in, basis positions out.
    void ftran(Vec& v) const {
        if (m_ == 0) return;
        if (sparse_) {
            v = sparse_lu_.solve(v);
            return;
        }
        Vec x = Vec::Zero(m_);
        auto eliminate = [&](int c, double xc) {
            const auto& col = cols_[c];
            for (std::size_t e = 0; e < col.row.size(); ++e) v[col.row[e]] -= col.val[e] * xc;
        };
        for (const auto& p : lower_) {
            const double xc = v[p.row] / p.val;
            x[p.col] = xc;
            if (xc != 0.0) eliminate(p.col, xc);
        }
        const auto k = static_cast<int>(kernel_rows_.size());
        if (k > 0) {
            Vec rhs(k);
            for (int a = 0; a < k; ++a) rhs[a] = v[kernel_rows_[a]];
            const Vec xk = dense_.solve(rhs);
            for (int b = 0; b < k; ++b) {
                x[kernel_cols_[b]] = xk[b];
                if (xk[b] != 0.0) eliminate(kernel_cols_[b], xk[b]);
            }
        }
        for (auto it = upper_.rbegin(); it != upper_.rend(); ++it) {
            const double xc = v[it->row] / it->val;
            x[it->col] = xc;
            if (xc != 0.0) eliminate(it->col, xc);
        }
        v = std::move(x);
    }

    /// B^T y = v; basis positions in, rows out.
    void btran(Vec& v) const {
        if (m_ == 0) return;
        if (sparse_) {
            v = sparse_lu_.transpose().solve(v);
            return;
        }
        Vec y = Vec::Zero(m_);
        auto residual = [&](int c) {
            const auto& col = cols_[c];
            double s = v[c];
            for (std::size_t e = 0; e < col.row.size(); ++e) s -= col.val[e] * y[col.row[e]];
            return s;
        };
        for (const auto& p : upper_) y[p.row] = residual(p.col) / p.val;
        const auto k = static_cast<int>(kernel_rows_.size());
        if (k > 0) {
            Vec rhs(k);
            for (int b = 0; b < k; ++b) rhs[b] = residual(kernel_cols_[b]);
            const Vec yk = dense_.transpose().solve(rhs);
            for (int a = 0; a < k; ++a) y[kernel_rows_[a]] = yk[a];
        }
        for (auto it = lower_.rbegin(); it != lower_.rend(); ++it) y[it->row] = residual(it->col) / it->val;
        v = std::move(y);
    }

    [[nodiscard]] std::size_t kernel_size() const { return kernel_rows_.size(); }

private:
    struct Pivot {
        int row;
        int col;
        double val;
    };

    bool factorize_sparse() {
        using SpMat = Eigen::SparseMatrix<double, Eigen::ColMajor, int>;
        std::vector<Eigen::Triplet<double, int>> trip;
        for (int c = 0; c < m_; ++c) {
            for (std::size_t e = 0; e < cols_[c].row.size(); ++e) trip.emplace_back(cols_[c].row[e], c, cols_[c].val[e]);
        }
        SpMat b(m_, m_);
        b.setFromTriplets(trip.begin(), trip.end());
        b.makeCompressed();
        sparse_lu_.analyzePattern(b);
        sparse_lu_.factorize(b);
        sparse_ = sparse_lu_.info() == Eigen::Success;
        return sparse_;
    }

    std::vector<Column> cols_;
    int m_ = 0;
    std::vector<Pivot> upper_;  ///< column singletons, in elimination order
    std::vector<Pivot> lower_;  ///< row singletons, in elimination order
    std::vector<int> kernel_rows_, kernel_cols_;
    Eigen::PartialPivLU<Eigen::MatrixXd> dense_;
    bool sparse_ = false;
    mutable Eigen::SparseLU<Eigen::SparseMatrix<double, Eigen::ColMajor, int>, Eigen::COLAMDOrdering<int>> sparse_lu_;
};

}  // namespace psps::lp
