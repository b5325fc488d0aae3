#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "psps/ingest.hpp"
#include "psps/network.hpp"
#include "psps/rolling.hpp"
#include "psps/synthetic.hpp"

namespace psps {

/// Where a season's risk and demand come from.
///
/// Demand is either one `bus_id,hour,value_pu` file whose hours run over the
/// whole season (day j owns hours (j-1)T+1 .. jT; later hours are ignored), or a nominal load file plus
/// a daily profile applied unchanged to every day. Risk is either a
/// `day,line_id,risk` table or rasters: one per day, or a single raster for
/// the whole season.
struct SeasonSources {
    std::optional<std::string> demand_csv;
    std::optional<std::string> nominal_csv;
    std::optional<std::string> profile_csv;
    std::optional<std::string> risk_csv;
    std::vector<std::string> rasters;
    double raster_step = 0.1;
};

inline Season load_season(const Network& net, const SeasonSources& src, int days, std::size_t hours) {
    if (days < 1 || hours < 1) throw InputError("season needs at least one day and one hour");
    const auto J = static_cast<std::size_t>(days);
    Season s;

    if (src.demand_csv && (src.nominal_csv || src.profile_csv)) {
        throw InputError("give either a demand file or a nominal load with a profile, not both");
    }
    if (src.demand_csv) {
        const DemandProfile all = read_demand_csv(*src.demand_csv, net, J * hours, true);
        for (std::size_t j = 0; j < J; ++j) {
            DemandProfile d(net.num_buses(), hours);
            for (std::size_t n = 0; n < net.num_buses(); ++n) {
                for (std::size_t t = 0; t < hours; ++t) d.values[n][t] = all.values[n][j * hours + t];
            }
            s.actual.push_back(std::move(d));
        }
    } else if (src.nominal_csv && src.profile_csv) {
        const auto nominal = read_nominal_csv(*src.nominal_csv, net);
        const auto profile = read_profile_csv(*src.profile_csv);
        const DemandProfile d = scale_demand(nominal, profile, hours);
        s.actual.assign(J, d);
    } else {
        throw InputError("no demand given (need a demand file, or a nominal load and a profile)");
    }

    if (src.risk_csv && !src.rasters.empty()) throw InputError("give either a risk table or rasters, not both");
    if (src.risk_csv) {
        const auto table = read_risk_csv(*src.risk_csv, net);
        for (int j = 1; j <= days; ++j) {
            auto it = table.find(j);
            if (it == table.end()) throw InputError("risk table has no rows for day " + std::to_string(j));
            s.risk.push_back(it->second);
        }
    } else if (!src.rasters.empty()) {
        if (src.rasters.size() != 1 && src.rasters.size() < J) {
            throw InputError("got " + std::to_string(src.rasters.size()) + " rasters for " + std::to_string(days) + " days");
        }
        if (src.rasters.size() == 1) {
            s.risk.assign(J, line_risks(net, load_raster(src.rasters.front()), src.raster_step));
        } else {
            for (std::size_t j = 0; j < J; ++j) s.risk.push_back(line_risks(net, load_raster(src.rasters[j]), src.raster_step));
        }
    } else {
        throw InputError("no risk given (need a risk table or rasters)");
    }
    return s;
}

inline nlohmann::json raster_to_json(const RiskRaster& r) {
    nlohmann::json rows = nlohmann::json::array();
    for (int i = 0; i < r.n_rows; ++i) {
        nlohmann::json row = nlohmann::json::array();
        for (int k = 0; k < r.n_cols; ++k) row.push_back(r.at(i, k));
        rows.push_back(std::move(row));
    }
    return {{"origin", {r.origin.lon, r.origin.lat}},
            {"cell_size", r.cell_size},
            {"n_rows", r.n_rows},
            {"n_cols", r.n_cols},
            {"values", std::move(rows)}};
}

/// Writes demand.csv, risk.csv and rasters/day_NN.json; the files load back
/// through `load_season`.
inline void write_season(const std::filesystem::path& dir, const Network& net, const SyntheticSeason& syn) {
    std::filesystem::create_directories(dir / "rasters");
    char buf[64];
    {
        std::ofstream os(dir / "demand.csv");
        if (!os) throw std::runtime_error("cannot write " + (dir / "demand.csv").string());
        os << "bus_id,hour,value_pu\n";
        std::size_t offset = 0;
        for (const auto& d : syn.season.actual) {
            for (std::size_t n = 0; n < d.num_buses(); ++n) {
                for (std::size_t t = 0; t < d.hours; ++t) {
                    std::snprintf(buf, sizeof buf, "%.17g", d.values[n][t]);
                    os << net.buses()[n].id << ',' << offset + t + 1 << ',' << buf << '\n';
                }
            }
            offset += d.hours;
        }
    }
    {
        std::ofstream os(dir / "risk.csv");
        if (!os) throw std::runtime_error("cannot write " + (dir / "risk.csv").string());
        os << "day,line_id,risk\n";
        for (std::size_t j = 0; j < syn.season.risk.size(); ++j) {
            for (std::size_t l = 0; l < net.num_lines(); ++l) {
                std::snprintf(buf, sizeof buf, "%.17g", syn.season.risk[j][l]);
                os << j + 1 << ',' << net.lines()[l].id << ',' << buf << '\n';
            }
        }
    }
    for (std::size_t j = 0; j < syn.rasters.size(); ++j) {
        std::snprintf(buf, sizeof buf, "day_%02zu.json", j + 1);
        std::ofstream os(dir / "rasters" / buf);
        if (!os) throw std::runtime_error("cannot write raster for day " + std::to_string(j + 1));
        os << raster_to_json(syn.rasters[j]).dump() << '\n';
    }
}

}  // namespace psps
