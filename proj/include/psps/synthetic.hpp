#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <span>
#include <stdexcept>
#include <vector>

#include "psps/ingest.hpp"
#include "psps/network.hpp"
#include "psps/rolling.hpp"

namespace psps {

/// Knobs of a synthetic wildfire season.
struct SeasonSpec {
    int days = 10;
    std::size_t hours = 24;
    std::uint64_t seed = 7;
    double cell_size = 0.05;        ///< raster resolution in degrees
    int hotspots = 2;
    double hotspot_radius = 0.5;    ///< degrees, one standard deviation
    double hotspot_drift = 0.1;     ///< degrees per day
    double background = 4.0;        ///< index far from any hotspot
    double peak_low = 90.0;         ///< hotspot peak index range
    double peak_high = 150.0;
    double load_floor = 0.65;       ///< overnight share of the daily peak
    double day_scale_low = 0.85;    ///< range of each day's peak relative to nominal
};

struct SyntheticSeason {
    Season season;
    std::vector<RiskRaster> rasters;
};

/// Gaussian fire-potential hotspots drifting over the network's bounding box,
/// and demand that follows a daily load curve scaled per day.
inline SyntheticSeason generate_season(const Network& net, std::span<const double> nominal, const SeasonSpec& spec) {
    if (spec.days < 1 || spec.hours < 1) throw std::invalid_argument("season needs at least one day and one hour");
    if (nominal.size() != net.num_buses()) throw std::invalid_argument("nominal demand does not cover every bus");
    if (net.num_buses() == 0) throw std::invalid_argument("network has no buses");

    double lon0 = net.buses()[0].lon, lon1 = lon0, lat0 = net.buses()[0].lat, lat1 = lat0;
    for (const auto& b : net.buses()) {
        lon0 = std::min(lon0, b.lon);
        lon1 = std::max(lon1, b.lon);
        lat0 = std::min(lat0, b.lat);
        lat1 = std::max(lat1, b.lat);
    }
    const double pad = 2.0 * spec.cell_size;
    RiskRaster grid;
    grid.origin = {lon0 - pad, lat0 - pad};
    grid.cell_size = spec.cell_size;
    grid.n_cols = static_cast<int>(std::ceil((lon1 - lon0 + 2 * pad) / spec.cell_size)) + 1;
    grid.n_rows = static_cast<int>(std::ceil((lat1 - lat0 + 2 * pad) / spec.cell_size)) + 1;

    std::mt19937_64 rng(spec.seed);
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    std::normal_distribution<double> step(0.0, spec.hotspot_drift);
    struct Spot {
        double lon, lat;
    };
    std::vector<Spot> spots;
    for (int h = 0; h < spec.hotspots; ++h) spots.push_back({lon0 + (lon1 - lon0) * u01(rng), lat0 + (lat1 - lat0) * u01(rng)});

    SyntheticSeason out;
    for (int day = 0; day < spec.days; ++day) {
        std::vector<double> peak;
        for (auto& s : spots) {
            if (day > 0) {
                s.lon = std::clamp(s.lon + step(rng), lon0, lon1);
                s.lat = std::clamp(s.lat + step(rng), lat0, lat1);
            }
            peak.push_back(spec.peak_low + (spec.peak_high - spec.peak_low) * u01(rng));
        }
        RiskRaster r = grid;
        r.values.assign(static_cast<std::size_t>(r.n_rows) * static_cast<std::size_t>(r.n_cols), 0.0);
        const double two_s2 = 2.0 * spec.hotspot_radius * spec.hotspot_radius;
        for (int i = 0; i < r.n_rows; ++i) {
            for (int k = 0; k < r.n_cols; ++k) {
                const double lon = r.origin.lon + (static_cast<double>(k) + 0.5) * r.cell_size;
                const double lat = r.origin.lat + (static_cast<double>(i) + 0.5) * r.cell_size;
                double v = spec.background;
                for (std::size_t h = 0; h < spots.size(); ++h) {
                    const double d2 = (lon - spots[h].lon) * (lon - spots[h].lon) + (lat - spots[h].lat) * (lat - spots[h].lat);
                    v += peak[h] * std::exp(-d2 / two_s2);
                }
                r.values[static_cast<std::size_t>(i * r.n_cols + k)] = std::min(v, 150.0);
            }
        }
        out.season.risk.push_back(line_risks(net, r));
        out.rasters.push_back(std::move(r));

        const double scale = spec.day_scale_low + (1.0 - spec.day_scale_low) * u01(rng);
        std::vector<double> profile(spec.hours);
        for (std::size_t t = 0; t < spec.hours; ++t) {
            // Load curve peaking late afternoon; hour t covers [t, t+1) of 24/T-hour blocks.
            const double clock = (static_cast<double>(t) + 0.5) * 24.0 / static_cast<double>(spec.hours);
            const double shape = 0.5 * (1.0 - std::cos(2.0 * std::numbers::pi * (clock - 5.0) / 24.0));
            profile[t] = scale * (spec.load_floor + (1.0 - spec.load_floor) * shape);
        }
        out.season.actual.push_back(scale_demand(nominal, profile));
    }
    return out;
}

}  // namespace psps
