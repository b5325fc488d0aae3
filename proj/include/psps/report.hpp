#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "psps/metrics.hpp"
#include "psps/network.hpp"
#include "psps/rolling.hpp"

namespace psps {

inline SolveStatus parse_status(const std::string& s) {
    for (SolveStatus v : {SolveStatus::optimal, SolveStatus::time_limit, SolveStatus::infeasible}) {
        if (s == to_string(v)) return v;
    }
    throw std::invalid_argument("unknown solve status '" + s + "'");
}

namespace detail {

template <class T>
nlohmann::json opt_json(const std::optional<T>& v) {
    return v ? nlohmann::json(*v) : nlohmann::json(nullptr);
}

template <class T>
std::optional<T> json_opt(const nlohmann::json& j, const char* key) {
    if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
    return j.at(key).get<T>();
}

inline std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.9g", v);
    return buf;
}

}  // namespace detail

inline nlohmann::json to_json(const DayRecord& d) {
    nlohmann::json j;
    j["day"] = d.day;
    j["alpha"] = d.alpha;
    j["risk_total"] = d.risk_total;
    j["z_base"] = d.z_base;
    j["z"] = d.z;
    j["shed_pred"] = d.shed_pred;
    j["shed_actual"] = d.shed_actual;
    j["demand_actual"] = d.demand_actual;
    j["demand_forecast_total"] = d.demand_forecast_total;
    j["risk_energized_base"] = d.risk_energized_base;
    j["risk_energized"] = d.risk_energized;
    j["objective_base"] = d.objective_base;
    j["objective_fair"] = detail::opt_json(d.objective_fair);
    j["fairness"] = detail::opt_json(d.fairness);
    j["status_base"] = to_string(d.status_base);
    j["status_fair"] = d.status_fair ? nlohmann::json(to_string(*d.status_fair)) : nlohmann::json(nullptr);
    j["bound_pred"] = detail::opt_json(d.bound_pred);
    j["bound_actual"] = detail::opt_json(d.bound_actual);
    j["bound_actual_bus"] = d.bound_actual_bus;
    return j;
}

inline DayRecord day_from_json(const nlohmann::json& j) {
    DayRecord d;
    d.day = j.at("day").get<int>();
    d.alpha = j.at("alpha").get<double>();
    d.risk_total = j.at("risk_total").get<double>();
    d.z_base = j.at("z_base").get<std::vector<int>>();
    d.z = j.at("z").get<std::vector<int>>();
    d.shed_pred = j.at("shed_pred").get<DayRecord::Matrix>();
    d.shed_actual = j.at("shed_actual").get<DayRecord::Matrix>();
    d.demand_actual = j.at("demand_actual").get<std::vector<double>>();
    d.demand_forecast_total = j.at("demand_forecast_total").get<double>();
    d.risk_energized_base = j.at("risk_energized_base").get<double>();
    d.risk_energized = j.at("risk_energized").get<double>();
    d.objective_base = j.at("objective_base").get<double>();
    d.objective_fair = detail::json_opt<double>(j, "objective_fair");
    d.fairness = detail::json_opt<double>(j, "fairness");
    d.status_base = parse_status(j.at("status_base").get<std::string>());
    if (auto s = detail::json_opt<std::string>(j, "status_fair")) d.status_fair = parse_status(*s);
    d.bound_pred = detail::json_opt<double>(j, "bound_pred");
    d.bound_actual = detail::json_opt<double>(j, "bound_actual");
    d.bound_actual_bus = j.value("bound_actual_bus", std::vector<double>{});
    return d;
}

inline nlohmann::json to_json(const SimulationResult& r) {
    nlohmann::json j;
    j["label"] = r.label;
    j["beta"] = r.beta;
    j["bus_ids"] = r.bus_ids;
    j["line_ids"] = r.line_ids;
    j["tally"] = {{"day", r.tally.day}, {"eta", r.tally.eta}, {"value", r.tally.value}};
    j["cumulative_actual"] = r.cumulative_actual;
    j["days"] = nlohmann::json::array();
    for (const auto& d : r.days) j["days"].push_back(to_json(d));
    return j;
}

inline SimulationResult result_from_json(const nlohmann::json& j) {
    try {
        SimulationResult r;
        r.label = j.at("label").get<std::string>();
        r.beta = j.at("beta").get<double>();
        r.bus_ids = j.at("bus_ids").get<std::vector<int>>();
        r.line_ids = j.at("line_ids").get<std::vector<int>>();
        const auto& t = j.at("tally");
        r.tally = ShedTally{t.at("day").get<int>(), t.at("eta").get<double>(), t.at("value").get<std::vector<double>>()};
        r.cumulative_actual = j.at("cumulative_actual").get<std::vector<double>>();
        for (const auto& d : j.at("days")) r.days.push_back(day_from_json(d));
        return r;
    } catch (const nlohmann::json::exception& e) {
        throw InputError(std::string("result file: ") + e.what());
    }
}

inline SimulationResult load_result(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw InputError(path + ": " + e.what());
    }
    return result_from_json(j);
}

// ---------------------------------------------------------------------------
// Flat tables

inline void write_days_csv(std::ostream& os, const SimulationResult& r) {
    os << "day,alpha,risk_energized,shed_total_pred,shed_total_actual,hamming\n";
    for (const auto& d : r.days) {
        os << d.day << ',' << detail::fmt(d.alpha) << ',' << detail::fmt(d.risk_energized) << ','
           << detail::fmt(d.shed_pred_total()) << ',' << detail::fmt(d.shed_actual_total()) << ',' << d.hamming() << '\n';
    }
}

inline void write_bus_shed_csv(std::ostream& os, const SimulationResult& r) {
    os << "day,bus,shed_actual\n";
    for (const auto& d : r.days) {
        const auto shed = d.shed_actual_bus();
        for (std::size_t n = 0; n < shed.size(); ++n) os << d.day << ',' << r.bus_ids[n] << ',' << detail::fmt(shed[n]) << '\n';
    }
}

inline void write_switching_csv(std::ostream& os, const SimulationResult& r) {
    os << "day,line,z_base,z_fair\n";
    for (const auto& d : r.days) {
        for (std::size_t l = 0; l < d.z.size(); ++l) os << d.day << ',' << r.line_ids[l] << ',' << d.z_base[l] << ',' << d.z[l] << '\n';
    }
}

/// Buses carry their cumulative actual shed; lines carry the number of days
/// they were switched off.
inline nlohmann::json shed_geojson(const Network& net, const SimulationResult& r) {
    nlohmann::json fc{{"type", "FeatureCollection"}, {"features", nlohmann::json::array()}};
    const double demand = total_actual_demand(r);
    for (std::size_t n = 0; n < net.num_buses(); ++n) {
        const auto& b = net.buses()[n];
        const double c = n < r.cumulative_actual.size() ? r.cumulative_actual[n] : 0.0;
        fc["features"].push_back({{"type", "Feature"},
                                  {"geometry", {{"type", "Point"}, {"coordinates", {b.lon, b.lat}}}},
                                  {"properties",
                                   {{"kind", "bus"}, {"id", b.id}, {"name", b.name}, {"shed_pu", c},
                                    {"shed_pct_of_total", demand > 0.0 ? 100.0 * c / demand : 0.0}}}});
    }
    for (std::size_t l = 0; l < net.num_lines(); ++l) {
        const auto& line = net.lines()[l];
        int off = 0;
        for (const auto& d : r.days) off += d.z[l] == 0;
        nlohmann::json coords = nlohmann::json::array();
        for (const auto& p : line.path) coords.push_back({p.lon, p.lat});
        fc["features"].push_back({{"type", "Feature"},
                                  {"geometry", {{"type", "LineString"}, {"coordinates", coords}}},
                                  {"properties", {{"kind", "line"}, {"id", line.id}, {"days_off", off}}}});
    }
    return fc;
}

/// Writes result.json, days.csv, bus_shed.csv, switching.csv and shed.geojson.
inline void write_outputs(const std::filesystem::path& dir, const Network& net, const SimulationResult& r) {
    std::filesystem::create_directories(dir);
    auto open = [&](const char* name) {
        std::ofstream os(dir / name);
        if (!os) throw std::runtime_error("cannot write " + (dir / name).string());
        return os;
    };
    {
        auto os = open("result.json");
        os << to_json(r).dump(1) << '\n';
    }
    {
        auto os = open("days.csv");
        write_days_csv(os, r);
    }
    {
        auto os = open("bus_shed.csv");
        write_bus_shed_csv(os, r);
    }
    {
        auto os = open("switching.csv");
        write_switching_csv(os, r);
    }
    {
        auto os = open("shed.geojson");
        os << shed_geojson(net, r).dump(1) << '\n';
    }
}

}  // namespace psps
