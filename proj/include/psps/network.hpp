#pragma once

#include <cmath>
#include <cstddef>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include <json.hpp>

namespace psps {

struct Point {
    double lon = 0.0;
    double lat = 0.0;
    bool operator==(const Point&) const = default;
};

struct Bus {
    int id = 0;
    std::string name;
    double lon = 0.0;
    double lat = 0.0;
    bool operator==(const Bus&) const = default;
};

/// Power limits in p.u. on the 100 MVA base.
struct Generator {
    int id = 0;
    int bus = 0;
    double g_min = 0.0;
    double g_max = 0.0;
    bool operator==(const Generator&) const = default;
};

struct Line {
    int id = 0;
    int from_bus = 0;
    int to_bus = 0;
    double x = 0.0;  ///< series reactance, p.u.
    double f_max = 0.0;
    double delta_min = -0.6;  ///< radians
    double delta_max = 0.6;
    std::vector<Point> path;  ///< routing polyline, lon/lat degrees

    /// b = -1/x, so -b * (theta_fr - theta_to) is the usual DC flow.
    [[nodiscard]] double susceptance() const { return -1.0 / x; }
    bool operator==(const Line&) const = default;
};

class CaseError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct CaseOptions {
    bool zero_generator_minimum = true;
    double default_angle_limit = 0.6;
};

/// The static grid. Immutable once built; share it freely across runs.
class Network {
public:
    static constexpr double kBaseMva = 100.0;

    Network() = default;
    Network(std::vector<Bus> buses, std::vector<Generator> gens, std::vector<Line> lines, double base_mva = kBaseMva)
        : buses_(std::move(buses)), gens_(std::move(gens)), lines_(std::move(lines)), base_mva_(base_mva) {
        reindex();
    }

    [[nodiscard]] const std::vector<Bus>& buses() const { return buses_; }
    [[nodiscard]] const std::vector<Generator>& generators() const { return gens_; }
    [[nodiscard]] const std::vector<Line>& lines() const { return lines_; }
    [[nodiscard]] double base_mva() const { return base_mva_; }

    [[nodiscard]] std::size_t num_buses() const { return buses_.size(); }
    [[nodiscard]] std::size_t num_generators() const { return gens_.size(); }
    [[nodiscard]] std::size_t num_lines() const { return lines_.size(); }

    [[nodiscard]] bool has_bus(int id) const { return bus_pos_.count(id) != 0; }
    [[nodiscard]] std::size_t bus_index(int id) const { return lookup(bus_pos_, id, "bus"); }
    [[nodiscard]] std::size_t line_index(int id) const { return lookup(line_pos_, id, "line"); }
    [[nodiscard]] std::size_t generator_index(int id) const { return lookup(gen_pos_, id, "generator"); }

    bool operator==(const Network& o) const {
        return buses_ == o.buses_ && gens_ == o.gens_ && lines_ == o.lines_ && base_mva_ == o.base_mva_;
    }

private:
    static std::size_t lookup(const std::unordered_map<int, std::size_t>& m, int id, const char* what) {
        auto it = m.find(id);
        if (it == m.end()) throw CaseError(std::string("unknown ") + what + " id " + std::to_string(id));
        return it->second;
    }

    void reindex() {
        for (std::size_t i = 0; i < buses_.size(); ++i) bus_pos_.emplace(buses_[i].id, i);
        for (std::size_t i = 0; i < gens_.size(); ++i) gen_pos_.emplace(gens_[i].id, i);
        for (std::size_t i = 0; i < lines_.size(); ++i) line_pos_.emplace(lines_[i].id, i);
    }

    std::vector<Bus> buses_;
    std::vector<Generator> gens_;
    std::vector<Line> lines_;
    double base_mva_ = kBaseMva;
    std::unordered_map<int, std::size_t> bus_pos_, gen_pos_, line_pos_;
};

// ---------------------------------------------------------------------------
// Case file I/O

namespace detail {

template <class T>
T field(const nlohmann::json& obj, const char* key, const std::string& where) {
    if (!obj.is_object()) throw CaseError(where + ": expected an object");
    auto it = obj.find(key);
    if (it == obj.end()) throw CaseError(where + "." + key + ": missing field");
    try {
        return it->template get<T>();
    } catch (const nlohmann::json::exception&) {
        throw CaseError(where + "." + key + ": wrong type");
    }
}

inline const nlohmann::json& array_field(const nlohmann::json& obj, const char* key) {
    auto it = obj.find(key);
    if (it == obj.end() || !it->is_array()) throw CaseError(std::string(key) + ": missing or not an array");
    return *it;
}

}  // namespace detail

/// Builds a cross-linked network from the JSON case schema. Lines without a
/// `path` are routed along the straight segment between their terminal buses.
inline Network parse_case(const nlohmann::json& doc, const CaseOptions& opts = {}) {
    using detail::field;
    if (!doc.is_object()) throw CaseError("case: top level must be an object");
    const double base = doc.contains("base_mva") ? field<double>(doc, "base_mva", "case") : Network::kBaseMva;

    std::vector<Bus> buses;
    std::unordered_map<int, std::size_t> seen_bus;
    const auto& jb = detail::array_field(doc, "buses");
    for (std::size_t i = 0; i < jb.size(); ++i) {
        const std::string where = "buses[" + std::to_string(i) + "]";
        Bus b;
        b.id = field<int>(jb[i], "id", where);
        b.name = jb[i].contains("name") ? field<std::string>(jb[i], "name", where) : "bus" + std::to_string(b.id);
        b.lon = field<double>(jb[i], "lon", where);
        b.lat = field<double>(jb[i], "lat", where);
        if (!seen_bus.emplace(b.id, i).second) throw CaseError(where + ".id: duplicate bus id " + std::to_string(b.id));
        buses.push_back(std::move(b));
    }

    std::vector<Generator> gens;
    std::unordered_map<int, std::size_t> seen_gen;
    const auto& jg = detail::array_field(doc, "generators");
    for (std::size_t i = 0; i < jg.size(); ++i) {
        const std::string where = "generators[" + std::to_string(i) + "]";
        Generator g;
        g.id = field<int>(jg[i], "id", where);
        g.bus = field<int>(jg[i], "bus", where);
        g.g_min = field<double>(jg[i], "g_min", where);
        g.g_max = field<double>(jg[i], "g_max", where);
        if (opts.zero_generator_minimum) g.g_min = 0.0;
        if (!seen_gen.emplace(g.id, i).second) {
            throw CaseError(where + ".id: duplicate generator id " + std::to_string(g.id));
        }
        if (!seen_bus.count(g.bus)) throw CaseError(where + ".bus: unknown bus " + std::to_string(g.bus));
        gens.push_back(g);
    }

    std::vector<Line> lines;
    std::unordered_map<int, std::size_t> seen_line;
    const auto& jl = detail::array_field(doc, "lines");
    for (std::size_t i = 0; i < jl.size(); ++i) {
        const std::string where = "lines[" + std::to_string(i) + "]";
        Line l;
        l.id = field<int>(jl[i], "id", where);
        l.from_bus = field<int>(jl[i], "from", where);
        l.to_bus = field<int>(jl[i], "to", where);
        l.x = field<double>(jl[i], "x", where);
        l.f_max = field<double>(jl[i], "f_max", where);
        l.delta_min = jl[i].contains("delta_min") ? field<double>(jl[i], "delta_min", where) : -opts.default_angle_limit;
        l.delta_max = jl[i].contains("delta_max") ? field<double>(jl[i], "delta_max", where) : opts.default_angle_limit;
        if (!seen_line.emplace(l.id, i).second) throw CaseError(where + ".id: duplicate line id " + std::to_string(l.id));
        if (!seen_bus.count(l.from_bus)) throw CaseError(where + ".from: unknown bus " + std::to_string(l.from_bus));
        if (!seen_bus.count(l.to_bus)) throw CaseError(where + ".to: unknown bus " + std::to_string(l.to_bus));
        if (jl[i].contains("path")) {
            const auto& jp = jl[i]["path"];
            if (!jp.is_array()) throw CaseError(where + ".path: expected an array of [lon,lat]");
            for (std::size_t k = 0; k < jp.size(); ++k) {
                if (!jp[k].is_array() || jp[k].size() != 2 || !jp[k][0].is_number() || !jp[k][1].is_number()) {
                    throw CaseError(where + ".path[" + std::to_string(k) + "]: expected [lon,lat]");
                }
                l.path.push_back({jp[k][0].get<double>(), jp[k][1].get<double>()});
            }
        }
        if (l.path.empty()) {
            const auto& a = buses[seen_bus.at(l.from_bus)];
            const auto& b = buses[seen_bus.at(l.to_bus)];
            l.path = {{a.lon, a.lat}, {b.lon, b.lat}};
        }
        lines.push_back(std::move(l));
    }
    return Network(std::move(buses), std::move(gens), std::move(lines), base);
}

inline Network parse_case_text(const std::string& text, const CaseOptions& opts = {}) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw CaseError(std::string("case: invalid JSON: ") + e.what());
    }
    return parse_case(doc, opts);
}

inline Network load_case(const std::string& path, const CaseOptions& opts = {}) {
    std::ifstream in(path);
    if (!in) throw CaseError("cannot open case file " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_case_text(ss.str(), opts);
}

inline nlohmann::json serialize_case(const Network& net) {
    nlohmann::json doc;
    doc["base_mva"] = net.base_mva();
    doc["buses"] = nlohmann::json::array();
    for (const auto& b : net.buses()) {
        doc["buses"].push_back({{"id", b.id}, {"name", b.name}, {"lon", b.lon}, {"lat", b.lat}});
    }
    doc["generators"] = nlohmann::json::array();
    for (const auto& g : net.generators()) {
        doc["generators"].push_back({{"id", g.id}, {"bus", g.bus}, {"g_min", g.g_min}, {"g_max", g.g_max}});
    }
    doc["lines"] = nlohmann::json::array();
    for (const auto& l : net.lines()) {
        nlohmann::json path = nlohmann::json::array();
        for (const auto& p : l.path) path.push_back({p.lon, p.lat});
        doc["lines"].push_back({{"id", l.id},
                                {"from", l.from_bus},
                                {"to", l.to_bus},
                                {"x", l.x},
                                {"f_max", l.f_max},
                                {"delta_min", l.delta_min},
                                {"delta_max", l.delta_max},
                                {"path", path}});
    }
    return doc;
}

// ---------------------------------------------------------------------------
// Validation and derived quantities

struct Violation {
    std::string entity;  ///< "bus", "generator", "line" or "network"
    int id = 0;
    std::string rule;
    bool operator==(const Violation&) const = default;
};

inline std::vector<Violation> validate(const Network& net) {
    std::vector<Violation> out;
    auto finite = [](double v) { return std::isfinite(v); };
    if (net.base_mva() != Network::kBaseMva) out.push_back({"network", 0, "base_mva"});
    std::unordered_map<int, int> ids;
    for (const auto& b : net.buses()) {
        if (++ids[b.id] == 2) out.push_back({"bus", b.id, "unique_id"});
        if (!finite(b.lon) || !finite(b.lat)) out.push_back({"bus", b.id, "finite_coordinates"});
    }
    ids.clear();
    for (const auto& g : net.generators()) {
        if (++ids[g.id] == 2) out.push_back({"generator", g.id, "unique_id"});
        if (!net.has_bus(g.bus)) out.push_back({"generator", g.id, "bus_exists"});
        if (!(g.g_min >= 0.0)) out.push_back({"generator", g.id, "g_min_nonnegative"});
        if (!(g.g_min <= g.g_max)) out.push_back({"generator", g.id, "g_min_le_g_max"});
    }
    ids.clear();
    for (const auto& l : net.lines()) {
        if (++ids[l.id] == 2) out.push_back({"line", l.id, "unique_id"});
        if (!net.has_bus(l.from_bus) || !net.has_bus(l.to_bus)) out.push_back({"line", l.id, "buses_exist"});
        if (l.from_bus == l.to_bus) out.push_back({"line", l.id, "distinct_terminals"});
        if (!(l.f_max > 0.0)) out.push_back({"line", l.id, "f_max_positive"});
        if (!(l.delta_min < 0.0 && 0.0 < l.delta_max)) out.push_back({"line", l.id, "angle_limits"});
        if (!(l.x != 0.0) || !finite(l.x)) out.push_back({"line", l.id, "reactance_nonzero"});
        for (const auto& p : l.path) {
            if (!finite(p.lon) || !finite(p.lat)) {
                out.push_back({"line", l.id, "finite_path"});
                break;
            }
        }
    }
    return out;
}

struct BigM {
    double lower = 0.0;  ///< sum of delta_min, radians
    double upper = 0.0;  ///< sum of delta_max, radians
};

/// Big-M constants for the switched angle and flow constraints.
inline BigM compute_big_m(const Network& net) {
    BigM m;
    for (const auto& l : net.lines()) {
        m.lower += l.delta_min;
        m.upper += l.delta_max;
    }
    return m;
}

struct BusIncidence {
    std::vector<std::size_t> lines_from;  ///< line indices with this bus as `from`
    std::vector<std::size_t> lines_to;
    std::vector<std::size_t> generators;  ///< generator indices
};

/// Per-bus incidence, indexed by bus position in `net.buses()`.
inline std::vector<BusIncidence> incidence(const Network& net) {
    std::vector<BusIncidence> inc(net.num_buses());
    for (std::size_t l = 0; l < net.num_lines(); ++l) {
        inc[net.bus_index(net.lines()[l].from_bus)].lines_from.push_back(l);
        inc[net.bus_index(net.lines()[l].to_bus)].lines_to.push_back(l);
    }
    for (std::size_t g = 0; g < net.num_generators(); ++g) {
        inc[net.bus_index(net.generators()[g].bus)].generators.push_back(g);
    }
    return inc;
}

}  // namespace psps
