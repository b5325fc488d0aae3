#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <ostream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace psps::lp {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

enum class VarKind { continuous, binary };

struct Variable {
    std::string name;
    double lower = 0.0;
    double upper = kInf;
    VarKind kind = VarKind::continuous;
};

struct Term {
    std::size_t var;
    double coef;
};

/// One linear row `lower <= sum(coef * x) <= upper`. `tag` names the constraint
/// family (e.g. "balance") and is shared by every row of that family.
struct Row {
    std::string tag;
    std::string name;
    std::vector<Term> terms;
    double lower = -kInf;
    double upper = kInf;
};

class ModelError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A mixed-binary linear program in row form. Minimisation only.
class LinearModel {
public:
    std::size_t add_variable(std::string name, double lower, double upper,
                             VarKind kind = VarKind::continuous) {
        if (kind == VarKind::binary) {
            lower = std::max(lower, 0.0);
            upper = std::min(upper, 1.0);
        }
        variables_.push_back({std::move(name), lower, upper, kind});
        objective_.push_back(0.0);
        return variables_.size() - 1;
    }

    std::size_t add_row(std::string tag, std::string name, std::vector<Term> terms,
                        double lower, double upper) {
        for (const auto& t : terms) {
            if (t.var >= variables_.size()) {
                throw ModelError("row '" + name + "' references undeclared variable " +
                                 std::to_string(t.var));
            }
            if (!std::isfinite(t.coef)) {
                throw ModelError("row '" + name + "' has a non-finite coefficient");
            }
        }
        rows_.push_back({std::move(tag), std::move(name), std::move(terms), lower, upper});
        return rows_.size() - 1;
    }

    void set_objective(std::size_t var, double coef) {
        if (!std::isfinite(coef)) throw ModelError("non-finite objective coefficient");
        objective_.at(var) = coef;
    }
    void add_objective(std::size_t var, double coef) { set_objective(var, objective_.at(var) + coef); }
    void set_objective_offset(double c) { offset_ = c; }
    void add_objective_offset(double c) { offset_ += c; }

    Variable& variable(std::size_t j) { return variables_.at(j); }
    [[nodiscard]] const Variable& variable(std::size_t j) const { return variables_.at(j); }
    [[nodiscard]] const std::vector<Variable>& variables() const { return variables_; }
    [[nodiscard]] const std::vector<Row>& rows() const { return rows_; }
    [[nodiscard]] const std::vector<double>& objective() const { return objective_; }
    [[nodiscard]] double objective_offset() const { return offset_; }

    [[nodiscard]] std::size_t num_variables() const { return variables_.size(); }
    [[nodiscard]] std::size_t num_rows() const { return rows_.size(); }

    [[nodiscard]] std::size_t count(VarKind kind) const {
        std::size_t n = 0;
        for (const auto& v : variables_) n += (v.kind == kind);
        return n;
    }

    [[nodiscard]] std::size_t count_rows(const std::string& tag) const {
        std::size_t n = 0;
        for (const auto& r : rows_) n += (r.tag == tag);
        return n;
    }

    [[nodiscard]] double evaluate_objective(const std::vector<double>& x) const {
        double v = offset_;
        for (std::size_t j = 0; j < objective_.size(); ++j) v += objective_[j] * x.at(j);
        return v;
    }

    [[nodiscard]] double row_activity(std::size_t i, const std::vector<double>& x) const {
        double a = 0.0;
        for (const auto& t : rows_.at(i).terms) a += t.coef * x.at(t.var);
        return a;
    }

    /// Largest bound or row violation of `x`; integrality is not checked.
    [[nodiscard]] double max_violation(const std::vector<double>& x) const {
        double worst = 0.0;
        for (std::size_t j = 0; j < variables_.size(); ++j) {
            worst = std::max({worst, variables_[j].lower - x[j], x[j] - variables_[j].upper});
        }
        for (std::size_t i = 0; i < rows_.size(); ++i) {
            const double a = row_activity(i, x);
            worst = std::max({worst, rows_[i].lower - a, a - rows_[i].upper});
        }
        return worst;
    }

private:
    std::vector<Variable> variables_;
    std::vector<Row> rows_;
    std::vector<double> objective_;
    double offset_ = 0.0;
};

namespace detail {
inline void write_lp_number(std::ostream& os, double v) {
    os.precision(17);
    os << v;
}

inline void write_lp_expression(std::ostream& os, const LinearModel& m, const std::vector<Term>& terms) {
    bool first = true;
    int on_line = 0;
    for (const auto& t : terms) {
        if (t.coef == 0.0) continue;
        if (on_line == 6) {
            os << "\n   ";
            on_line = 0;
        }
        os << (t.coef < 0 ? (first ? "-" : " - ") : (first ? "" : " + "));
        if (std::abs(t.coef) != 1.0) {
            write_lp_number(os, std::abs(t.coef));
            os << ' ';
        }
        os << m.variable(t.var).name;
        first = false;
        ++on_line;
    }
    if (first) os << "0 " << (m.num_variables() ? m.variable(0).name : std::string("x"));
}
}  // namespace detail

/// Writes the model in the CPLEX LP text format. Ranged rows are split into
/// `<name>_lo` / `<name>_hi`.
inline void write_lp(std::ostream& os, const LinearModel& m) {
    os << "\\ PSPS model: " << m.num_variables() << " variables, " << m.num_rows() << " rows\n";
    os << "Minimize\n obj: ";
    std::vector<Term> obj;
    for (std::size_t j = 0; j < m.num_variables(); ++j) {
        if (m.objective()[j] != 0.0) obj.push_back({j, m.objective()[j]});
    }
    detail::write_lp_expression(os, m, obj);
    if (m.objective_offset() != 0.0) {
        os << (m.objective_offset() < 0 ? " - " : " + ");
        detail::write_lp_number(os, std::abs(m.objective_offset()));
    }
    os << "\nSubject To\n";
    for (const auto& r : m.rows()) {
        auto emit = [&](const std::string& name, const char* sense, double rhs) {
            os << ' ' << name << ": ";
            detail::write_lp_expression(os, m, r.terms);
            os << ' ' << sense << ' ';
            detail::write_lp_number(os, rhs);
            os << '\n';
        };
        const bool has_lo = std::isfinite(r.lower);
        const bool has_hi = std::isfinite(r.upper);
        if (has_lo && has_hi && r.lower == r.upper) {
            emit(r.name, "=", r.lower);
        } else if (has_lo && has_hi) {
            emit(r.name + "_lo", ">=", r.lower);
            emit(r.name + "_hi", "<=", r.upper);
        } else if (has_lo) {
            emit(r.name, ">=", r.lower);
        } else if (has_hi) {
            emit(r.name, "<=", r.upper);
        }
    }
    os << "Bounds\n";
    for (const auto& v : m.variables()) {
        if (v.kind == VarKind::binary) continue;
        const bool lo_inf = !std::isfinite(v.lower);
        const bool hi_inf = !std::isfinite(v.upper);
        if (lo_inf && hi_inf) {
            os << ' ' << v.name << " free\n";
        } else if (v.lower == v.upper) {
            os << ' ' << v.name << " = ";
            detail::write_lp_number(os, v.lower);
            os << '\n';
        } else {
            os << ' ';
            if (lo_inf) {
                os << "-inf";
            } else {
                detail::write_lp_number(os, v.lower);
            }
            os << " <= " << v.name << " <= ";
            if (hi_inf) {
                os << "+inf";
            } else {
                detail::write_lp_number(os, v.upper);
            }
            os << '\n';
        }
    }
    bool any_binary = false;
    for (const auto& v : m.variables()) {
        if (v.kind != VarKind::binary) continue;
        if (!any_binary) os << "Binaries\n";
        any_binary = true;
        os << ' ' << v.name << '\n';
    }
    os << "End\n";
}

}  // namespace psps::lp
