#pragma once

#include <cmath>
#include <cstdio>
#include <future>
#include <limits>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "psps/rolling.hpp"

namespace psps {

inline int hamming(const std::vector<int>& a, const std::vector<int>& b) {
    if (a.size() != b.size()) {
        throw std::invalid_argument("hamming: lengths differ (" + std::to_string(a.size()) + " vs " +
                                   std::to_string(b.size()) + ")");
    }
    int h = 0;
    for (std::size_t i = 0; i < a.size(); ++i) h += (a[i] != 0) != (b[i] != 0);
    return h;
}

inline double total_actual_demand(const SimulationResult& r) {
    double d = 0.0;
    for (const auto& day : r.days) d += day.demand_actual_total();
    return d;
}

inline double cumulative_shed_percent(const std::vector<double>& bus_shed, double total_demand) {
    if (!(total_demand > 0.0)) throw std::invalid_argument("cumulative shed: total demand is zero");
    double s = 0.0;
    for (double v : bus_shed) s += v;
    return 100.0 * s / total_demand;
}

/// Mean absolute deviation of per-bus cumulative shed over its mean; 0 when
/// nothing was shed.
inline double mad_fairness(const std::vector<double>& c) {
    if (c.empty()) return 0.0;
    double mean = 0.0;
    for (double v : c) mean += v;
    mean /= static_cast<double>(c.size());
    if (!(mean > 0.0)) return 0.0;
    double dev = 0.0;
    for (double v : c) dev += std::abs(v - mean);
    return dev / static_cast<double>(c.size()) / mean;
}

inline double max_shed_percent(const std::vector<double>& c, double total_demand) {
    if (!(total_demand > 0.0)) throw std::invalid_argument("max shed: total demand is zero");
    double m = 0.0;
    for (double v : c) m = std::max(m, v);
    return 100.0 * m / total_demand;
}

inline double cumulative_shed_percent(const SimulationResult& r) {
    if (r.days.empty()) throw std::invalid_argument("cumulative shed: empty result");
    return cumulative_shed_percent(r.cumulative_actual, total_actual_demand(r));
}
inline double mad_fairness(const SimulationResult& r) { return mad_fairness(r.cumulative_actual); }
inline double max_shed_metric(const SimulationResult& r) { return max_shed_percent(r.cumulative_actual, total_actual_demand(r)); }

/// Daily Hamming distance between baseline and implemented switching,
/// averaged over every day.
inline double mean_hamming(const SimulationResult& r) {
    if (r.days.empty()) return 0.0;
    double h = 0.0;
    for (const auto& d : r.days) h += hamming(d.z_base, d.z);
    return h / static_cast<double>(r.days.size());
}

// ---------------------------------------------------------------------------
// Sweeps

struct MetricsRow {
    std::string label;  ///< star, triangle, or the fairness method
    std::optional<double> beta;
    double cumulative_shed_pct = 0.0;
    double mad = 0.0;
    double max_shed_pct = 0.0;
    std::optional<double> mean_hamming;
    bool outlier = false;
};

constexpr double kOutlierShedPct = 40.0;

inline MetricsRow metrics_row(const SimulationResult& r, std::string label, std::optional<double> beta) {
    MetricsRow row;
    row.label = std::move(label);
    row.beta = beta;
    row.cumulative_shed_pct = cumulative_shed_percent(r);
    row.mad = mad_fairness(r);
    row.max_shed_pct = max_shed_metric(r);
    row.mean_hamming = mean_hamming(r);
    row.outlier = row.cumulative_shed_pct > kOutlierShedPct;
    return row;
}

/// Reference row built from the per-day least achievable actual shed.
inline std::optional<MetricsRow> triangle_row(const SimulationResult& baseline) {
    std::vector<double> c(baseline.bus_ids.size(), 0.0);
    for (const auto& d : baseline.days) {
        if (!d.bound_actual || d.bound_actual_bus.size() != c.size()) return std::nullopt;
        for (std::size_t n = 0; n < c.size(); ++n) c[n] += d.bound_actual_bus[n];
    }
    const double demand = total_actual_demand(baseline);
    MetricsRow row;
    row.label = "triangle";
    row.cumulative_shed_pct = cumulative_shed_percent(c, demand);
    row.mad = mad_fairness(c);
    row.max_shed_pct = max_shed_percent(c, demand);
    row.outlier = row.cumulative_shed_pct > kOutlierShedPct;
    return row;
}

struct SweepReport {
    std::vector<MetricsRow> rows;  ///< star, triangle (if bounds were computed), then one per beta
    SimulationResult baseline;
    std::vector<SimulationResult> runs;
};

class SweepError : public std::runtime_error {
public:
    SweepError(double beta, const std::string& what)
        : std::runtime_error("beta " + std::to_string(beta) + ": " + what), beta_(beta) {}
    [[nodiscard]] double beta() const { return beta_; }

private:
    double beta_;
};

/// Runs the baseline once and one fair simulation per beta. Every fair run
/// reuses the baseline's per-day plans and bounds. `jobs > 1` runs betas
/// concurrently; results do not depend on it.
inline SweepReport beta_sweep(const Network& net, const std::vector<DayInputs>& inputs, const ScenarioConfig& tmpl,
                              const std::vector<double>& betas, unsigned jobs = 1) {
    if (!tmpl.method) throw std::invalid_argument("beta_sweep needs a fairness method");
    for (double b : betas) {
        if (!(b > 0.0 && b < 1.0)) throw std::invalid_argument("sweep betas must lie in (0,1)");
    }
    SweepReport rep;
    BaselineCache cache;
    rep.baseline = run_baseline(net, inputs, tmpl, {}, &cache);
    rep.rows.push_back(metrics_row(rep.baseline, "star", std::nullopt));
    if (auto tri = triangle_row(rep.baseline)) rep.rows.push_back(*tri);

    auto one = [&](double beta) {
        ScenarioConfig cfg = tmpl;
        cfg.beta = beta;
        try {
            return run_fair(net, inputs, cfg, &cache);
        } catch (const std::exception& e) {
            throw SweepError(beta, e.what());
        }
    };
    rep.runs.resize(betas.size());
    if (jobs <= 1) {
        for (std::size_t i = 0; i < betas.size(); ++i) rep.runs[i] = one(betas[i]);
    } else {
        for (std::size_t start = 0; start < betas.size(); start += jobs) {
            std::vector<std::future<SimulationResult>> pending;
            const std::size_t stop = std::min(betas.size(), start + jobs);
            for (std::size_t i = start; i < stop; ++i) pending.push_back(std::async(std::launch::async, one, betas[i]));
            for (std::size_t i = start; i < stop; ++i) rep.runs[i] = pending[i - start].get();
        }
    }
    for (std::size_t i = 0; i < betas.size(); ++i) {
        rep.rows.push_back(metrics_row(rep.runs[i], to_string(*tmpl.method), betas[i]));
    }
    return rep;
}

/// "lo:hi:step" or a comma-separated list.
inline std::vector<double> parse_betas(const std::string& spec) {
    auto number = [&](const std::string& s) {
        std::size_t used = 0;
        double v = 0.0;
        try {
            v = std::stod(s, &used);
        } catch (const std::exception&) {
            used = 0;
        }
        if (used == 0 || used != s.size() || !std::isfinite(v)) throw std::invalid_argument("bad beta list '" + spec + "'");
        return v;
    };
    std::vector<double> out;
    if (spec.find(':') != std::string::npos) {
        const auto a = spec.find(':');
        const auto b = spec.find(':', a + 1);
        if (b == std::string::npos || spec.find(':', b + 1) != std::string::npos) {
            throw std::invalid_argument("bad beta range '" + spec + "' (expected lo:hi:step)");
        }
        const double lo = number(spec.substr(0, a));
        const double hi = number(spec.substr(a + 1, b - a - 1));
        const double step = number(spec.substr(b + 1));
        if (!(step > 0.0) || hi < lo) throw std::invalid_argument("bad beta range '" + spec + "'");
        const auto n = static_cast<long>(std::floor((hi - lo) / step + 1e-9));
        for (long k = 0; k <= n; ++k) out.push_back(std::round((lo + static_cast<double>(k) * step) * 1e12) / 1e12);
    } else {
        std::size_t pos = 0;
        while (pos <= spec.size()) {
            const auto comma = spec.find(',', pos);
            out.push_back(number(spec.substr(pos, comma == std::string::npos ? std::string::npos : comma - pos)));
            if (comma == std::string::npos) break;
            pos = comma + 1;
        }
    }
    return out;
}

inline void write_sweep_csv(std::ostream& os, const std::vector<MetricsRow>& rows) {
    os << "label,beta,cumulative_shed_pct,mad,max_shed_pct,mean_hamming,outlier\n";
    char buf[256];
    for (const auto& r : rows) {
        os << r.label << ',';
        if (r.beta) {
            std::snprintf(buf, sizeof buf, "%.4f", *r.beta);
            os << buf;
        }
        std::snprintf(buf, sizeof buf, ",%.6f,%.6f,%.6f,", r.cumulative_shed_pct, r.mad, r.max_shed_pct);
        os << buf;
        if (r.mean_hamming) {
            std::snprintf(buf, sizeof buf, "%.4f", *r.mean_hamming);
            os << buf;
        }
        os << ',' << (r.outlier ? 1 : 0) << '\n';
    }
}

}  // namespace psps
