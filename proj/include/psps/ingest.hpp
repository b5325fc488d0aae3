#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <istream>
#include <map>
#include <random>
#include <set>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "psps/network.hpp"

namespace psps {

class InputError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// Wildfire risk

/// WFPI grid. Row r covers latitudes [origin.lat + r*cell, origin.lat + (r+1)*cell),
/// column c covers longitudes [origin.lon + c*cell, ...). Values are row-major.
struct RiskRaster {
    Point origin;
    double cell_size = 1.0;
    int n_rows = 0;
    int n_cols = 0;
    std::vector<double> values;

    [[nodiscard]] double at(int row, int col) const {
        return values[static_cast<std::size_t>(row) * static_cast<std::size_t>(n_cols) + static_cast<std::size_t>(col)];
    }

    /// Value of the cell containing (lon, lat); zero outside the grid.
    [[nodiscard]] double sample(double lon, double lat) const {
        const double u = (lon - origin.lon) / cell_size;
        const double v = (lat - origin.lat) / cell_size;
        if (!(u >= 0.0 && v >= 0.0)) return 0.0;
        const auto col = static_cast<long>(std::floor(u));
        const auto row = static_cast<long>(std::floor(v));
        if (col >= n_cols || row >= n_rows) return 0.0;
        return at(static_cast<int>(row), static_cast<int>(col));
    }

    void validate() const {
        if (!(cell_size > 0.0)) throw InputError("raster: cell_size must be positive");
        if (n_rows < 1 || n_cols < 1) throw InputError("raster: n_rows and n_cols must be at least 1");
        if (values.size() != static_cast<std::size_t>(n_rows) * static_cast<std::size_t>(n_cols)) {
            throw InputError("raster: values do not match n_rows x n_cols");
        }
        for (double v : values) {
            if (!(v >= 0.0 && v <= 150.0)) throw InputError("raster: value outside [0,150]");
        }
    }
};

inline RiskRaster parse_raster(const nlohmann::json& doc) {
    RiskRaster r;
    try {
        const auto& o = doc.at("origin");
        if (!o.is_array() || o.size() != 2) throw InputError("raster.origin: expected [lon,lat]");
        r.origin = {o[0].get<double>(), o[1].get<double>()};
        r.cell_size = doc.at("cell_size").get<double>();
        r.n_rows = doc.at("n_rows").get<int>();
        r.n_cols = doc.at("n_cols").get<int>();
        const auto& rows = doc.at("values");
        if (!rows.is_array() || rows.size() != static_cast<std::size_t>(r.n_rows)) {
            throw InputError("raster.values: expected n_rows rows");
        }
        for (std::size_t i = 0; i < rows.size(); ++i) {
            if (!rows[i].is_array() || rows[i].size() != static_cast<std::size_t>(r.n_cols)) {
                throw InputError("raster.values[" + std::to_string(i) + "]: expected n_cols values");
            }
            for (const auto& v : rows[i]) r.values.push_back(v.get<double>());
        }
    } catch (const nlohmann::json::exception& e) {
        throw InputError(std::string("raster: ") + e.what());
    }
    r.validate();
    return r;
}

inline RiskRaster load_raster(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open raster file " + path);
    try {
        return parse_raster(nlohmann::json::parse(in));
    } catch (const nlohmann::json::parse_error& e) {
        throw InputError("raster " + path + ": " + e.what());
    }
}

/// Path integral of the raster along a polyline. Each polyline segment is cut
/// into equal pieces no longer than `step` (in cell units); every piece
/// contributes its midpoint value times its length.
inline double integrate_line_risk(const RiskRaster& raster, std::span<const Point> path, double step) {
    if (path.empty()) throw InputError("integrate_line_risk: empty path");
    if (!(step > 0.0)) throw InputError("integrate_line_risk: step must be positive");
    double total = 0.0;
    for (std::size_t k = 0; k + 1 < path.size(); ++k) {
        const double du = (path[k + 1].lon - path[k].lon) / raster.cell_size;
        const double dv = (path[k + 1].lat - path[k].lat) / raster.cell_size;
        const double len = std::hypot(du, dv);
        if (len == 0.0) continue;
        const auto pieces = static_cast<long>(std::ceil(len / step - 1e-12));
        const double ds = len / static_cast<double>(pieces);
        for (long i = 0; i < pieces; ++i) {
            const double t = (static_cast<double>(i) + 0.5) / static_cast<double>(pieces);
            const double lon = path[k].lon + t * (path[k + 1].lon - path[k].lon);
            const double lat = path[k].lat + t * (path[k + 1].lat - path[k].lat);
            total += raster.sample(lon, lat) * ds;
        }
    }
    return total;
}

inline std::vector<double> line_risks(const Network& net, const RiskRaster& raster, double step = 0.1) {
    std::vector<double> r;
    r.reserve(net.num_lines());
    for (const auto& l : net.lines()) r.push_back(integrate_line_risk(raster, l.path, step));
    return r;
}

// ---------------------------------------------------------------------------
// Demand

/// Hourly demand d[n][t] in p.u., indexed by bus position.
struct DemandProfile {
    std::size_t hours = 24;
    std::vector<std::vector<double>> values;

    DemandProfile() = default;
    DemandProfile(std::size_t buses, std::size_t horizon)
        : hours(horizon), values(buses, std::vector<double>(horizon, 0.0)) {}

    [[nodiscard]] std::size_t num_buses() const { return values.size(); }
    [[nodiscard]] double operator()(std::size_t n, std::size_t t) const { return values[n][t]; }
    [[nodiscard]] double bus_total(std::size_t n) const {
        double s = 0.0;
        for (double v : values[n]) s += v;
        return s;
    }
    [[nodiscard]] double total() const {
        double s = 0.0;
        for (std::size_t n = 0; n < values.size(); ++n) s += bus_total(n);
        return s;
    }
    /// Buses with strictly positive demand in every hour.
    [[nodiscard]] std::vector<std::size_t> demand_buses() const {
        std::vector<std::size_t> out;
        for (std::size_t n = 0; n < values.size(); ++n) {
            if (std::all_of(values[n].begin(), values[n].end(), [](double v) { return v > 0.0; })) out.push_back(n);
        }
        return out;
    }
    void validate() const {
        if (hours < 1) throw InputError("demand: horizon must be at least 1 hour");
        for (const auto& row : values) {
            if (row.size() != hours) throw InputError("demand: ragged horizon");
            for (double v : row) {
                if (!(v >= 0.0) || !std::isfinite(v)) throw InputError("demand: negative or non-finite value");
            }
        }
    }
    bool operator==(const DemandProfile&) const = default;
};

inline DemandProfile scale_demand(std::span<const double> nominal, std::span<const double> system_profile,
                                  std::size_t hours) {
    if (system_profile.size() != hours) {
        throw InputError("scale_demand: profile has " + std::to_string(system_profile.size()) + " hours, expected " +
                         std::to_string(hours));
    }
    for (double f : system_profile) {
        if (!(f > 0.0 && f <= 1.0)) throw InputError("scale_demand: profile fractions must lie in (0,1]");
    }
    DemandProfile d(nominal.size(), hours);
    for (std::size_t n = 0; n < nominal.size(); ++n) {
        for (std::size_t t = 0; t < hours; ++t) d.values[n][t] = nominal[n] * system_profile[t];
    }
    return d;
}

inline DemandProfile scale_demand(std::span<const double> nominal, std::span<const double> system_profile) {
    return scale_demand(nominal, system_profile, system_profile.size());
}

/// Multiplies each bus-hour by an independent U[1-spread, 1+spread] factor.
inline DemandProfile perturb_demand(const DemandProfile& profile, std::uint64_t seed, double spread = 0.02) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> factor(1.0 - spread, 1.0 + spread);
    DemandProfile out = profile;
    for (auto& row : out.values) {
        for (double& v : row) v *= factor(rng);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Alpha schedule

struct AlphaSchedule {
    double alpha_lo = 0.3;
    double alpha_hi = 0.6;
    double hist_risk_min = 0.0;
    double hist_risk_max = 1.0;

    void validate() const {
        if (!(alpha_lo < alpha_hi)) throw InputError("alpha schedule: alpha_lo must be below alpha_hi");
        if (!(hist_risk_min < hist_risk_max)) throw InputError("alpha schedule: hist_risk_min must be below hist_risk_max");
    }
};

inline double schedule_alpha(double day_total_risk, const AlphaSchedule& s) {
    s.validate();
    if (day_total_risk >= s.hist_risk_max) return s.alpha_lo;
    if (day_total_risk <= s.hist_risk_min) return s.alpha_hi;
    const double u = (day_total_risk - s.hist_risk_min) / (s.hist_risk_max - s.hist_risk_min);
    return s.alpha_hi - (s.alpha_hi - s.alpha_lo) * u;
}

/// Everything the operator knows, or will learn, about one day.
struct DayInputs {
    int day = 1;
    std::vector<double> risk;  ///< per line position
    DemandProfile forecast;
    DemandProfile actual;
    double alpha = 0.45;

    [[nodiscard]] double total_risk() const {
        double s = 0.0;
        for (double r : risk) s += r;
        return s;
    }
};

// ---------------------------------------------------------------------------
// CSV readers

namespace detail {

inline std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

/// Reads a headed CSV whose columns must match `header` exactly; returns rows
/// of parsed numbers. Blank lines and lines starting with '#' are skipped.
inline std::vector<std::vector<double>> read_numeric_csv(std::istream& in, const std::vector<std::string>& header,
                                                         const std::string& what) {
    std::string line;
    std::size_t lineno = 0;
    bool have_header = false;
    std::vector<std::vector<double>> rows;
    while (std::getline(in, line)) {
        ++lineno;
        line = trim(line);
        if (line.empty() || line[0] == '#') continue;
        std::vector<std::string> cells;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) cells.push_back(trim(cell));
        if (!have_header) {
            if (cells != header) {
                std::string want;
                for (const auto& h : header) want += (want.empty() ? "" : ",") + h;
                throw InputError(what + ": expected header '" + want + "'");
            }
            have_header = true;
            continue;
        }
        if (cells.size() != header.size()) {
            throw InputError(what + " line " + std::to_string(lineno) + ": expected " +
                             std::to_string(header.size()) + " fields");
        }
        std::vector<double> row;
        for (const auto& c : cells) {
            try {
                std::size_t used = 0;
                row.push_back(std::stod(c, &used));
                if (used != c.size()) throw std::invalid_argument(c);
            } catch (const std::exception&) {
                throw InputError(what + " line " + std::to_string(lineno) + ": not a number: '" + c + "'");
            }
        }
        rows.push_back(std::move(row));
    }
    if (!have_header) throw InputError(what + ": empty file");
    return rows;
}

inline std::ifstream open_or_throw(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open " + path);
    return in;
}

inline int as_int(double v, const std::string& what) {
    if (v != std::floor(v)) throw InputError(what + ": expected an integer, got " + std::to_string(v));
    return static_cast<int>(v);
}

}  // namespace detail

/// `bus_id,hour,value_pu` with hours 1..T; omitted bus-hours are zero. With
/// `skip_later_hours` rows past T are ignored instead of rejected.
inline DemandProfile read_demand_csv(std::istream& in, const Network& net, std::size_t hours,
                                     bool skip_later_hours = false) {
    DemandProfile d(net.num_buses(), hours);
    std::set<std::pair<int, int>> seen;
    for (const auto& row : detail::read_numeric_csv(in, {"bus_id", "hour", "value_pu"}, "demand csv")) {
        const int bus = detail::as_int(row[0], "demand csv bus_id");
        const int hour = detail::as_int(row[1], "demand csv hour");
        if (!net.has_bus(bus)) throw InputError("demand csv: unknown bus " + std::to_string(bus));
        if (skip_later_hours && hour > 0 && static_cast<std::size_t>(hour) > hours) continue;
        if (hour < 1 || static_cast<std::size_t>(hour) > hours) {
            throw InputError("demand csv: hour " + std::to_string(hour) + " outside 1.." + std::to_string(hours));
        }
        if (!seen.emplace(bus, hour).second) {
            throw InputError("demand csv: duplicate entry for bus " + std::to_string(bus) + " hour " +
                             std::to_string(hour));
        }
        d.values[net.bus_index(bus)][static_cast<std::size_t>(hour - 1)] = row[2];
    }
    d.validate();
    return d;
}

inline DemandProfile read_demand_csv(const std::string& path, const Network& net, std::size_t hours,
                                     bool skip_later_hours = false) {
    auto in = detail::open_or_throw(path);
    return read_demand_csv(in, net, hours, skip_later_hours);
}

/// `bus_id,value_pu` nominal (peak) loads; omitted buses are zero.
inline std::vector<double> read_nominal_csv(std::istream& in, const Network& net) {
    std::vector<double> nominal(net.num_buses(), 0.0);
    for (const auto& row : detail::read_numeric_csv(in, {"bus_id", "value_pu"}, "nominal csv")) {
        const int bus = detail::as_int(row[0], "nominal csv bus_id");
        if (!net.has_bus(bus)) throw InputError("nominal csv: unknown bus " + std::to_string(bus));
        if (!(row[1] >= 0.0)) throw InputError("nominal csv: negative load at bus " + std::to_string(bus));
        nominal[net.bus_index(bus)] = row[1];
    }
    return nominal;
}

inline std::vector<double> read_nominal_csv(const std::string& path, const Network& net) {
    auto in = detail::open_or_throw(path);
    return read_nominal_csv(in, net);
}

/// `hour,fraction` with every hour 1..T present exactly once.
inline std::vector<double> read_profile_csv(std::istream& in) {
    std::map<int, double> byhour;
    for (const auto& row : detail::read_numeric_csv(in, {"hour", "fraction"}, "profile csv")) {
        const int h = detail::as_int(row[0], "profile csv hour");
        if (!byhour.emplace(h, row[1]).second) throw InputError("profile csv: duplicate hour " + std::to_string(h));
    }
    std::vector<double> out;
    int expect = 1;
    for (const auto& [h, f] : byhour) {
        if (h != expect++) throw InputError("profile csv: hours must be 1..T without gaps");
        out.push_back(f);
    }
    if (out.empty()) throw InputError("profile csv: no rows");
    return out;
}

inline std::vector<double> read_profile_csv(const std::string& path) {
    auto in = detail::open_or_throw(path);
    return read_profile_csv(in);
}

/// `day,line_id,risk`; returns day -> per-line risks. Every line must be
/// present for every listed day.
inline std::map<int, std::vector<double>> read_risk_csv(std::istream& in, const Network& net) {
    std::map<int, std::vector<double>> out;
    std::map<int, std::vector<char>> have;
    for (const auto& row : detail::read_numeric_csv(in, {"day", "line_id", "risk"}, "risk csv")) {
        const int day = detail::as_int(row[0], "risk csv day");
        const int line = detail::as_int(row[1], "risk csv line_id");
        if (!(row[2] >= 0.0)) throw InputError("risk csv: negative risk for line " + std::to_string(line));
        const std::size_t l = [&] {
            try {
                return net.line_index(line);
            } catch (const CaseError&) {
                throw InputError("risk csv: unknown line " + std::to_string(line));
            }
        }();
        auto& vals = out[day];
        auto& flags = have[day];
        if (vals.empty()) {
            vals.assign(net.num_lines(), 0.0);
            flags.assign(net.num_lines(), 0);
        }
        if (flags[l]) throw InputError("risk csv: duplicate entry for day " + std::to_string(day) + " line " +
                                       std::to_string(line));
        flags[l] = 1;
        vals[l] = row[2];
    }
    for (const auto& [day, flags] : have) {
        for (std::size_t l = 0; l < flags.size(); ++l) {
            if (!flags[l]) {
                throw InputError("risk csv: day " + std::to_string(day) + " has no entry for line " +
                                 std::to_string(net.lines()[l].id));
            }
        }
    }
    return out;
}

inline std::map<int, std::vector<double>> read_risk_csv(const std::string& path, const Network& net) {
    auto in = detail::open_or_throw(path);
    return read_risk_csv(in, net);
}

}  // namespace psps
