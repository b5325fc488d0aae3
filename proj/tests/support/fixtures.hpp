#pragma once

#include <algorithm>
#include <random>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "psps/ingest.hpp"
#include "psps/network.hpp"

namespace psps::testing {

/// Three buses in a loop with a generator at each bus; only the unit at bus 1
/// has capacity. Loads of 1.0 and 0.5 sit at buses 2 and 3. All reactances
/// are equal, so with every line closed the flows split 5/6, 2/3 and -1/6.
inline Network triangle() {
    std::vector<Bus> buses{{1, "one", -120.0, 38.0}, {2, "two", -119.0, 38.0}, {3, "three", -119.5, 38.8}};
    std::vector<Generator> gens{{1, 1, 0.0, 2.0}, {2, 2, 0.0, 0.0}, {3, 3, 0.0, 0.0}};
    std::vector<Line> lines;
    auto add = [&](int id, int fr, int to) {
        Line l;
        l.id = id;
        l.from_bus = fr;
        l.to_bus = to;
        l.x = 0.1;
        l.f_max = 1.0;
        const auto& a = buses[static_cast<std::size_t>(fr - 1)];
        const auto& b = buses[static_cast<std::size_t>(to - 1)];
        l.path = {{a.lon, a.lat}, {b.lon, b.lat}};
        lines.push_back(l);
    };
    add(1, 1, 2);
    add(2, 1, 3);
    add(3, 2, 3);
    return Network(buses, gens, lines);
}

inline DemandProfile triangle_demand(std::size_t hours = 1) {
    DemandProfile d(3, hours);
    for (std::size_t t = 0; t < hours; ++t) {
        d.values[1][t] = 1.0;
        d.values[2][t] = 0.5;
    }
    return d;
}

inline Network two_bus(double g_max = 1.0, double f_max = 1.0) {
    std::vector<Bus> buses{{1, "a", 0.0, 0.0}, {2, "b", 1.0, 0.0}};
    std::vector<Generator> gens{{1, 1, 0.0, g_max}};
    Line l;
    l.id = 1;
    l.from_bus = 1;
    l.to_bus = 2;
    l.x = 0.2;
    l.f_max = f_max;
    l.path = {{0.0, 0.0}, {1.0, 0.0}};
    return Network(buses, gens, {l});
}

struct RandomInstance {
    Network net;
    DemandProfile demand;
    std::vector<double> risk;
};

/// Small random grid: `buses` nodes, at most `max_lines` distinct lines (a
/// spanning path first, then extra chords), one to three generators.
inline RandomInstance random_instance(std::mt19937_64& rng, std::size_t buses, std::size_t max_lines,
                                      std::size_t hours) {
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    std::vector<Bus> bs;
    for (std::size_t n = 0; n < buses; ++n) {
        bs.push_back({static_cast<int>(n + 1), "b" + std::to_string(n + 1), u01(rng), u01(rng)});
    }
    std::set<std::pair<int, int>> used;
    std::vector<std::pair<int, int>> ends;
    for (std::size_t n = 1; n < buses && ends.size() < max_lines; ++n) {
        std::uniform_int_distribution<int> pick(1, static_cast<int>(n));
        const int a = pick(rng);
        const int b = static_cast<int>(n + 1);
        used.insert({std::min(a, b), std::max(a, b)});
        ends.emplace_back(a, b);
    }
    std::uniform_int_distribution<int> anyb(1, static_cast<int>(buses));
    for (int tries = 0; ends.size() < max_lines && tries < 50; ++tries) {
        const int a = anyb(rng), b = anyb(rng);
        if (a == b || used.count({std::min(a, b), std::max(a, b)})) continue;
        used.insert({std::min(a, b), std::max(a, b)});
        ends.emplace_back(a, b);
    }
    std::vector<Line> ls;
    for (std::size_t k = 0; k < ends.size(); ++k) {
        Line l;
        l.id = static_cast<int>(k + 1);
        l.from_bus = ends[k].first;
        l.to_bus = ends[k].second;
        l.x = 0.05 + 0.45 * u01(rng);
        l.f_max = 0.3 + 1.2 * u01(rng);
        l.delta_min = -(0.3 + 0.4 * u01(rng));
        l.delta_max = 0.3 + 0.4 * u01(rng);
        const auto& a = bs[static_cast<std::size_t>(l.from_bus - 1)];
        const auto& b = bs[static_cast<std::size_t>(l.to_bus - 1)];
        l.path = {{a.lon, a.lat}, {b.lon, b.lat}};
        ls.push_back(l);
    }
    std::vector<Generator> gs;
    const int ngen = 1 + static_cast<int>(u01(rng) * 3.0);
    for (int i = 0; i < ngen; ++i) gs.push_back({i + 1, anyb(rng), 0.0, 0.5 + 1.5 * u01(rng)});

    DemandProfile d(buses, hours);
    for (std::size_t n = 0; n < buses; ++n) {
        const bool loaded = u01(rng) < 0.75;
        for (std::size_t t = 0; t < hours; ++t) d.values[n][t] = loaded ? 0.1 + 0.9 * u01(rng) : 0.0;
    }
    if (d.total() == 0.0) d.values[0].assign(hours, 0.5);
    std::vector<double> risk;
    for (std::size_t l = 0; l < ls.size(); ++l) risk.push_back(u01(rng) < 0.2 ? 0.0 : 150.0 * u01(rng));
    return {Network(bs, gs, ls), d, risk};
}

}  // namespace psps::testing
