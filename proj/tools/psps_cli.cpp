// Command-line front end: validate cases, generate synthetic seasons, run
// rolling simulations and beta sweeps, and summarise saved results.

#include <algorithm>
#include <cctype>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "psps/psps.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace psps;

namespace {

enum Exit : int { ok = 0, internal = 1, usage = 2, bad_input = 3, solve_failed = 4, invalid_case = 5 };

std::string env_name(const std::string& flag) {
    std::string s = "PSPS_";
    for (char c : flag) s += c == '-' ? '_' : static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
    return s;
}

template <class T>
CLI::Option* flag_opt(CLI::App* app, const std::string& name, T& target, const std::string& help) {
    return app->add_option("--" + name, target, help)->envname(env_name(name));
}

int fail(int code, const std::string& kind, const std::string& message, json extra = json::object()) {
    json err = {{"kind", kind}, {"message", message}};
    for (auto& [k, v] : extra.items()) err[k] = v;
    std::cerr << json{{"error", err}}.dump() << '\n';
    return code;
}

struct ScenarioArgs {
    std::string case_path;
    std::optional<std::string> demand, nominal, profile, risk_csv;
    std::vector<std::string> rasters;
    double raster_step = 0.1;
    int days = 10;
    std::size_t hours = 24;
    std::string method = "none";
    double alpha_lo = 0.3, alpha_hi = 0.6;
    std::optional<double> hist_risk_min, hist_risk_max;
    double beta = 0.95, zeta = 0.05, eta = 0.9, gap = 0.01;
    std::uint64_t seed = 1;
    double time_limit = 600.0;
    long node_limit = 5'000'000;
    std::string realtime = "min_shed";
    bool no_bounds = false;
    bool verbose = false;
    std::string out = "out";

    void attach(CLI::App* app) {
        flag_opt(app, "case", case_path, "network case (JSON)")->required();
        flag_opt(app, "demand", demand, "season demand CSV bus_id,hour,value_pu over hours 1..days*hours");
        flag_opt(app, "nominal", nominal, "nominal bus loads CSV bus_id,value_pu (with --profile)");
        flag_opt(app, "profile", profile, "daily profile CSV hour,fraction (with --nominal)");
        flag_opt(app, "risk-csv", risk_csv, "per-line risk CSV day,line_id,risk");
        flag_opt(app, "raster", rasters, "fire-potential raster JSON; one per day, or one for all days");
        flag_opt(app, "raster-step", raster_step, "integration step in cell units")->capture_default_str();
        flag_opt(app, "days", days, "number of days")->capture_default_str();
        flag_opt(app, "hours", hours, "hours per day")->capture_default_str();
        flag_opt(app, "method", method, "fairness method")
            ->check(CLI::IsMember({"none", "minmax", "weighted", "range"}))
            ->capture_default_str();
        flag_opt(app, "alpha-lo", alpha_lo, "alpha on the riskiest day")->capture_default_str();
        flag_opt(app, "alpha-hi", alpha_hi, "alpha on the calmest day")->capture_default_str();
        flag_opt(app, "hist-risk-min", hist_risk_min, "historical minimum total risk (default: season minimum)");
        flag_opt(app, "hist-risk-max", hist_risk_max, "historical maximum total risk (default: season maximum)");
        flag_opt(app, "beta", beta, "weight of total shed against fairness")->capture_default_str();
        flag_opt(app, "zeta", zeta, "allowed relative increase of energized risk")->capture_default_str();
        flag_opt(app, "eta", eta, "forgetting factor of the shed tally")->capture_default_str();
        flag_opt(app, "gap", gap, "relative MIP gap")->capture_default_str();
        flag_opt(app, "seed", seed, "seed for forecast errors and the solver")->capture_default_str();
        flag_opt(app, "time-limit", time_limit, "seconds per MIP solve")->capture_default_str();
        flag_opt(app, "node-limit", node_limit, "branch-and-bound nodes per MIP solve")->capture_default_str();
        flag_opt(app, "realtime", realtime, "real-time dispatch objective")
            ->check(CLI::IsMember({"min_shed", "fair"}))
            ->capture_default_str();
        app->add_flag("--no-bounds", no_bounds, "skip the per-day least-shed bounds")->envname(env_name("no-bounds"));
        app->add_flag("--verbose", verbose, "log every solve to stderr")->envname(env_name("verbose"));
        flag_opt(app, "out", out, "output directory")->capture_default_str();
    }

    [[nodiscard]] ScenarioConfig config() const {
        ScenarioConfig c;
        c.days = days;
        c.hours = hours;
        c.alpha_lo = alpha_lo;
        c.alpha_hi = alpha_hi;
        c.hist_risk_min = hist_risk_min;
        c.hist_risk_max = hist_risk_max;
        c.beta = beta;
        c.zeta = zeta;
        c.eta = eta;
        c.method = parse_method(method);
        c.seed = seed;
        c.solver.relative_mip_gap = gap;
        c.solver.time_limit_s = time_limit;
        c.solver.node_limit = node_limit;
        c.solver.seed = seed;
        c.realtime = realtime == "fair" ? RealtimeObjective::fair : RealtimeObjective::min_shed;
        c.compute_bounds = !no_bounds;
        c.validate();
        return c;
    }

    [[nodiscard]] SeasonSources sources() const {
        return {demand, nominal, profile, risk_csv, rasters, raster_step};
    }

    [[nodiscard]] SolveObserver observer() const {
        if (!verbose) return {};
        return [](const SolveEvent& e) {
            std::cerr << "day " << e.day << ' ' << e.kind << ": status=" << to_string(e.solution->status)
                      << " objective=" << e.solution->objective << " shed=" << e.solution->total_shed() << '\n';
        };
    }
};

json row_json(const MetricsRow& r) {
    json j = {{"label", r.label},
              {"cumulative_shed_pct", r.cumulative_shed_pct},
              {"mad", r.mad},
              {"max_shed_pct", r.max_shed_pct},
              {"outlier", r.outlier}};
    j["beta"] = r.beta ? json(*r.beta) : json(nullptr);
    j["mean_hamming"] = r.mean_hamming ? json(*r.mean_hamming) : json(nullptr);
    return j;
}

json summary(const SimulationResult& r) {
    json j = row_json(metrics_row(r, r.label, std::nullopt));
    j["beta"] = r.label == "baseline" ? json(nullptr) : json(r.beta);
    j["days"] = r.days.size();
    if (auto tri = triangle_row(r)) j["triangle"] = row_json(*tri);
    return j;
}

void write_json(const fs::path& p, const json& j) {
    std::ofstream os(p);
    if (!os) throw std::runtime_error("cannot write " + p.string());
    os << j.dump(1) << '\n';
}

int cmd_validate(const std::string& path) {
    const Network net = load_case(path);
    const auto issues = validate(net);
    json out = {{"case", path},
                {"buses", net.num_buses()},
                {"lines", net.num_lines()},
                {"generators", net.generators().size()},
                {"valid", issues.empty()},
                {"violations", json::array()}};
    for (const auto& v : issues) out["violations"].push_back({{"entity", v.entity}, {"id", v.id}, {"rule", v.rule}});
    std::cout << out.dump(1) << '\n';
    return issues.empty() ? ok : invalid_case;
}

int cmd_run(const ScenarioArgs& a) {
    const Network net = load_case(a.case_path);
    const ScenarioConfig cfg = a.config();
    const auto inputs = prepare_days(net, load_season(net, a.sources(), cfg.days, cfg.hours), cfg);
    const SimulationResult r = cfg.method ? run_fair(net, inputs, cfg, nullptr, a.observer())
                                          : run_baseline(net, inputs, cfg, a.observer());
    write_outputs(a.out, net, r);
    const json s = summary(r);
    write_json(fs::path(a.out) / "metrics.json", s);
    std::cout << s.dump(1) << '\n';
    return ok;
}

int cmd_sweep(const ScenarioArgs& a, const std::string& betas, unsigned jobs) {
    const Network net = load_case(a.case_path);
    ScenarioConfig cfg = a.config();
    if (!cfg.method) throw std::invalid_argument("sweep needs --method minmax, weighted or range");
    const auto list = parse_betas(betas);
    const auto inputs = prepare_days(net, load_season(net, a.sources(), cfg.days, cfg.hours), cfg);
    const SweepReport rep = beta_sweep(net, inputs, cfg, list, jobs);
    fs::create_directories(a.out);
    {
        std::ofstream os(fs::path(a.out) / "sweep.csv");
        if (!os) throw std::runtime_error("cannot write sweep.csv");
        write_sweep_csv(os, rep.rows);
    }
    write_outputs(fs::path(a.out) / "baseline", net, rep.baseline);
    json rows = json::array();
    for (const auto& r : rep.rows) rows.push_back(row_json(r));
    std::cout << json{{"rows", rows}}.dump(1) << '\n';
    return ok;
}

int cmd_report(const std::string& dir) {
    const fs::path p = fs::path(dir) / "result.json";
    const SimulationResult r = load_result(p.string());
    std::cout << summary(r).dump(1) << '\n';
    return ok;
}

int cmd_generate(const std::string& case_path, const std::string& nominal_path, const SeasonSpec& spec, const std::string& out) {
    const Network net = load_case(case_path);
    const auto nominal = read_nominal_csv(nominal_path, net);
    const SyntheticSeason syn = generate_season(net, nominal, spec);
    write_season(out, net, syn);
    json days = json::array();
    for (std::size_t j = 0; j < syn.season.risk.size(); ++j) {
        double risk = 0.0;
        for (double v : syn.season.risk[j]) risk += v;
        days.push_back({{"day", j + 1}, {"total_risk", risk}, {"total_demand", syn.season.actual[j].total()}});
    }
    std::cout << json{{"out", out}, {"days", days}}.dump(1) << '\n';
    return ok;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Fairness-aware public safety power shutoff planning"};
    app.require_subcommand(1);

    std::string validate_path;
    auto* validate_cmd = app.add_subcommand("validate", "check a network case file");
    validate_cmd->add_option("case", validate_path, "network case (JSON)")->required();

    ScenarioArgs run_args;
    auto* run_cmd = app.add_subcommand("run", "simulate a season with or without fairness");
    run_args.attach(run_cmd);

    ScenarioArgs sweep_args;
    sweep_args.method = "weighted";
    std::string betas = "0.05:0.95:0.05";
    unsigned jobs = 1;
    auto* sweep_cmd = app.add_subcommand("sweep", "run one fair simulation per beta and tabulate metrics");
    sweep_args.attach(sweep_cmd);
    flag_opt(sweep_cmd, "betas", betas, "lo:hi:step or a comma-separated list")->capture_default_str();
    flag_opt(sweep_cmd, "jobs", jobs, "betas solved concurrently")->capture_default_str();

    std::string report_dir;
    auto* report_cmd = app.add_subcommand("report", "summarise a saved simulation");
    flag_opt(report_cmd, "in", report_dir, "directory holding result.json")->required();

    std::string gen_case, gen_nominal, gen_out = "season";
    SeasonSpec spec;
    auto* gen_cmd = app.add_subcommand("generate", "write a synthetic season (rasters, risk and demand)");
    flag_opt(gen_cmd, "case", gen_case, "network case (JSON)")->required();
    flag_opt(gen_cmd, "nominal", gen_nominal, "nominal bus loads CSV bus_id,value_pu")->required();
    flag_opt(gen_cmd, "days", spec.days, "number of days")->capture_default_str();
    flag_opt(gen_cmd, "hours", spec.hours, "hours per day")->capture_default_str();
    flag_opt(gen_cmd, "seed", spec.seed, "random seed")->capture_default_str();
    flag_opt(gen_cmd, "cell-size", spec.cell_size, "raster cell size in degrees")->capture_default_str();
    flag_opt(gen_cmd, "hotspots", spec.hotspots, "number of fire-potential hotspots")->capture_default_str();
    flag_opt(gen_cmd, "hotspot-radius", spec.hotspot_radius, "hotspot spread in degrees")->capture_default_str();
    flag_opt(gen_cmd, "hotspot-drift", spec.hotspot_drift, "daily hotspot drift in degrees")->capture_default_str();
    flag_opt(gen_cmd, "background", spec.background, "index away from hotspots")->capture_default_str();
    flag_opt(gen_cmd, "peak-low", spec.peak_low, "lowest hotspot peak")->capture_default_str();
    flag_opt(gen_cmd, "peak-high", spec.peak_high, "highest hotspot peak")->capture_default_str();
    flag_opt(gen_cmd, "load-floor", spec.load_floor, "overnight load as a share of the peak")->capture_default_str();
    flag_opt(gen_cmd, "day-scale-low", spec.day_scale_low, "lowest daily peak relative to nominal")->capture_default_str();
    flag_opt(gen_cmd, "out", gen_out, "output directory")->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        return fail(usage, "usage", e.what());
    }

    try {
        if (*validate_cmd) return cmd_validate(validate_path);
        if (*run_cmd) return cmd_run(run_args);
        if (*sweep_cmd) return cmd_sweep(sweep_args, betas, std::max(1u, jobs));
        if (*report_cmd) return cmd_report(report_dir);
        if (*gen_cmd) return cmd_generate(gen_case, gen_nominal, spec, gen_out);
    } catch (const SweepError& e) {
        return fail(solve_failed, "simulation", e.what(), {{"beta", e.beta()}});
    } catch (const SimulationError& e) {
        return fail(solve_failed, "simulation", e.what(), {{"day", e.day()}});
    } catch (const CaseError& e) {
        return fail(bad_input, "case", e.what());
    } catch (const InputError& e) {
        return fail(bad_input, "input", e.what());
    } catch (const std::invalid_argument& e) {
        return fail(usage, "argument", e.what());
    } catch (const std::exception& e) {
        return fail(internal, "internal", e.what());
    }
    return internal;
}
