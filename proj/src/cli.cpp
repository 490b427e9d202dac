#include "mfv/cli.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <ostream>
#include <string>

#include <CLI11.hpp>

#include "mfv/certificates.hpp"
#include "mfv/io.hpp"

namespace mfv {

namespace {

namespace fs = std::filesystem;

std::string g12(double x)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.12g", x);
    return buf;
}

Json load_config(const std::string& path)
{
    Json config = read_json_file(path);
    if (!config.is_object())
        throw ConfigError("config must be a JSON object");
    if (!config.contains("schema_version") || config["schema_version"] != kSchemaVersion)
        throw ConfigError("config needs \"schema_version\": " + std::to_string(kSchemaVersion));
    if (!config.contains("seed"))
        config["seed"] = 0u;
    const Json& seed = config["seed"];
    if (!seed.is_number_integer() || (!seed.is_number_unsigned() && seed.get<std::int64_t>() < 0))
        throw ConfigError("seed must be a nonnegative integer");
    config["seed"] = seed.get<std::uint64_t>();
    return config;
}

const Json& section(const Json& config, const char* key)
{
    if (!config.contains(key))
        throw ConfigError(std::string("config is missing \"") + key + "\"");
    return config.at(key);
}

template <typename T>
T value_or(const Json& j, const char* key, T fallback)
{
    if (!j.contains(key))
        return fallback;
    try {
        return j.at(key).get<T>();
    } catch (const Json::exception&) {
        throw ConfigError(std::string("field \"") + key + "\" has the wrong type");
    }
}

WitnessOptions witness_options(const Json& config)
{
    WitnessOptions w;
    const Json empty = Json::object();
    const Json& j = config.contains("witness") ? config.at("witness") : empty;
    w.levels = value_or(j, "levels", w.levels);
    w.threshold = value_or(j, "threshold", w.threshold);
    w.restarts = value_or(j, "restarts", w.restarts);
    w.min_step = value_or(j, "min_step", w.min_step);
    w.seed = config.at("seed").get<std::uint64_t>();
    if (w.levels < 3 || !(w.threshold > 0) || w.restarts < 1 || !(w.min_step > 0))
        throw ConfigError("witness options need levels >= 3, restarts >= 1 and positive threshold, min_step");
    return w;
}

double positive(const Json& j, const char* key)
{
    const double v = value_or(j, key, -1.0);
    if (!(v > 0))
        throw ConfigError(std::string("\"") + key + "\" must be a positive number");
    return v;
}

Selector make_selector(const ControlSystem& sys, const Json& j)
{
    const std::string kind = value_or<std::string>(j, "kind", "");
    if (kind == "control")
        return control_selector(sys, value_or<std::size_t>(j, "index", 0));
    if (kind == "barycenter")
        return barycenter_selector(sys);
    throw ConfigError("selector kind must be \"control\" or \"barycenter\"");
}

void print_report(std::ostream& out, const TangencyReport& report)
{
    out << "verdict: " << to_string(report.verdict) << " (final ratio " << g12(report.ratios.back())
        << ", threshold " << g12(report.threshold) << ")";
    if (!report.diagnostic.empty())
        out << "; " << report.diagnostic;
    out << '\n';
}

int cmd_metric(const std::string& a, const std::string& b, std::ostream& out)
{
    const double d = w1_distance(measure_from_json(read_json_file(a)), measure_from_json(read_json_file(b)));
    out << "W1 = " << g12(d) << '\n';
    return kExitOk;
}

int cmd_lifted_metric(const std::string& a, const std::string& b, double p, std::ostream& out)
{
    const double d = lifted_metric(lifted_from_json(read_json_file(a)), lifted_from_json(read_json_file(b)), p);
    out << "W_lifted(p=" << g12(p) << ") = " << g12(d) << '\n';
    return kExitOk;
}

int cmd_tangency(const std::string& path, const std::string& out_dir, std::ostream& out)
{
    const Json config = load_config(path);
    const SetOracle K = oracle_from_json(section(config, "K"));
    const LiftedMeasure beta = lifted_from_json(section(config, "beta"));
    const TangencyReport report =
        tangency_estimate(beta, K, positive(config, "tau0"), value_or(config, "levels", 3),
                          value_or(config, "threshold", kDefaultTangencyThreshold));
    if (!out_dir.empty()) {
        fs::create_directories(out_dir);
        write_json_file(fs::path(out_dir) / "report.json", to_json(report));
        write_json_file(fs::path(out_dir) / "manifest.json",
                        {{"schema_version", kSchemaVersion}, {"command", "tangency"}, {"config", config}});
    }
    print_report(out, report);
    return report.verdict == Verdict::Tangent ? kExitOk : kExitNegative;
}

int cmd_check(const std::string& path, const std::string& out_dir, std::ostream& out)
{
    const Json config = load_config(path);
    const SetOracle K = oracle_from_json(section(config, "K"));
    const ControlSystem sys = system_from_json(section(config, "system"));
    const AtomicMeasure m = measure_from_json(section(config, "measure"));
    const ConditionResult result =
        viability_condition_check(m, K, sys, positive(config, "tau0"), witness_options(config));
    if (!out_dir.empty()) {
        fs::create_directories(out_dir);
        write_json_file(fs::path(out_dir) / "check.json", {{"found", result.found},
                                                           {"score", result.score},
                                                           {"witness", to_json(result.witness)},
                                                           {"report", to_json(result.report)}});
        write_json_file(fs::path(out_dir) / "manifest.json",
                        {{"schema_version", kSchemaVersion}, {"command", "check"}, {"config", config}});
    }
    out << "condition " << (result.found ? "found" : "not found") << ": score " << g12(result.score)
        << " (threshold " << g12(result.report.threshold) << ")\n";
    return result.found ? kExitOk : kExitNegative;
}

int cmd_solve(const std::string& path, const std::string& out_dir, std::optional<std::uint64_t> seed,
              std::ostream& out)
{
    Json config = load_config(path);
    if (seed)
        config["seed"] = *seed;
    const ControlSystem sys = system_from_json(section(config, "system"));
    const AtomicMeasure m0 = measure_from_json(section(config, "initial"));
    std::optional<SetOracle> K;
    if (config.contains("K"))
        K = oracle_from_json(config.at("K"));

    const Json& solver = section(config, "solver");
    SolveConfig cfg;
    cfg.horizon = positive(solver, "horizon");
    cfg.steps = value_or<std::size_t>(solver, "steps", 0);
    cfg.max_trajectories = value_or<std::size_t>(solver, "max_trajectories", cfg.max_trajectories);
    cfg.condition_samples = value_or<std::size_t>(solver, "condition_samples", cfg.condition_samples);
    cfg.witness = witness_options(config);
    const std::string mode = value_or<std::string>(solver, "mode", "");
    if (mode == "viable") {
        cfg.mode = SolveMode::ViableTracking;
        if (!K)
            throw ConfigError("viable mode needs a K block");
    } else if (mode == "forward") {
        cfg.mode = SolveMode::ForwardSelector;
        cfg.selector = make_selector(sys, section(solver, "selector"));
    } else {
        throw ConfigError("solver mode must be \"forward\" or \"viable\"");
    }

    fs::create_directories(out_dir);
    Json manifest = {{"schema_version", kSchemaVersion},
                     {"command", "solve"},
                     {"config", config},
                     {"seed", config["seed"]}};
    try {
        const SolveResult result = cfg.mode == SolveMode::ViableTracking
                                       ? solve_viable(m0, sys, *K, cfg)
                                       : solve_forward(m0, sys, cfg, K ? &*K : nullptr);
        {
            std::ofstream flow(fs::path(out_dir) / "flow.csv");
            write_flow_csv(flow, result);
            std::ofstream particles(fs::path(out_dir) / "particles.csv");
            write_trace_csv(particles, result.bundle);
        }
        const double residual = solution_residual(result, sys, 0.0, cfg.horizon);
        manifest["status"] = "ok";
        manifest["outputs"] = {"flow.csv", "particles.csv"};
        manifest["summary"] = {{"max_dist_to_K", result.max_dist_to_K()},
                               {"coupling_rate", result.coupling_rate},
                               {"merge_error", result.merge_error},
                               {"merges", result.merges},
                               {"trajectories", result.bundle.size()},
                               {"solution_residual", residual},
                               {"warnings", result.warnings}};
        write_json_file(fs::path(out_dir) / "manifest.json", manifest);
        for (const auto& w : result.warnings)
            out << "warning: " << w << '\n';
        out << "solve (" << to_string(cfg.mode) << "): " << cfg.steps << " steps, " << result.bundle.size()
            << " trajectories, max dist_to_K " << g12(result.max_dist_to_K()) << ", residual " << g12(residual)
            << " -> " << out_dir << '\n';
        return kExitOk;
    } catch (const ViabilityViolation& v) {
        manifest["status"] = "violated";
        manifest["violation"] = {{"step", v.step()}, {"score", v.score()}, {"nu", to_json(v.nu())}};
        write_json_file(fs::path(out_dir) / "manifest.json", manifest);
        out << v.what() << '\n';
        return kExitNegative;
    }
}

int cmd_verify(const std::string& dir, std::ostream& out)
{
    const Json manifest = read_json_file(fs::path(dir) / "manifest.json");
    if (value_or<std::string>(manifest, "command", "") != "solve")
        throw ConfigError("verify expects a solve run directory");
    if (value_or<std::string>(manifest, "status", "") != "ok") {
        out << "run did not finish (status " << value_or<std::string>(manifest, "status", "?")
            << "); nothing to verify\n";
        return kExitNegative;
    }
    const Json& config = section(manifest, "config");
    const ControlSystem sys = system_from_json(section(config, "system"));
    std::optional<SetOracle> K;
    if (config.contains("K"))
        K = oracle_from_json(config.at("K"));
    const SolveMode mode = section(config, "solver").value("mode", "") == "viable" ? SolveMode::ViableTracking
                                                                                  : SolveMode::ForwardSelector;
    std::ifstream in(fs::path(dir) / "particles.csv");
    if (!in)
        throw ConfigError("cannot open particles.csv in " + dir);
    const SolveResult result = result_from_bundle(read_trace_csv(in), mode);

    bool ok = true;
    for (const auto& c : certify_run(result, sys, K ? &*K : nullptr)) {
        out << (c.pass ? "PASS " : "FAIL ") << c.name << ": " << g12(c.value) << " <= " << g12(c.bound) << '\n';
        ok = ok && c.pass;
    }
    out << "verify: " << (ok ? "all checks passed" : "some checks failed") << '\n';
    return ok ? kExitOk : kExitNegative;
}

} // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err)
{
    CLI::App app{"Mean-field viability toolkit on the flat torus"};
    app.require_subcommand(1);

    std::string a, b, config, out_dir, run_dir;
    double p = 1.0;
    std::optional<std::uint64_t> seed;

    auto* metric = app.add_subcommand("metric", "W1 distance between two measure files");
    metric->add_option("a", a)->required();
    metric->add_option("b", b)->required();

    auto* lifted = app.add_subcommand("lifted-metric", "Lifted distance between two lifted-measure files");
    lifted->add_option("a", a)->required();
    lifted->add_option("b", b)->required();
    lifted->add_option("--p", p, "Exponent, 1 or 2");

    auto* tangency = app.add_subcommand("tangency", "Tangency ladder for a lifted measure");
    tangency->add_option("--config", config)->required();
    tangency->add_option("--out", out_dir);

    auto* check = app.add_subcommand("check", "Viability condition at a measure in K");
    check->add_option("--config", config)->required();
    check->add_option("--out", out_dir);

    auto* solve = app.add_subcommand("solve", "Forward or viability-tracking solve");
    solve->add_option("--config", config)->required();
    solve->add_option("--out", out_dir)->default_val("mfv-run");
    solve->add_option("--seed", seed);

    auto* verify = app.add_subcommand("verify", "Re-run the invariant checks on a solve directory");
    verify->add_option("dir", run_dir)->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kExitOk : kExitFailure;
    }

    try {
        if (*metric)
            return cmd_metric(a, b, out);
        if (*lifted)
            return cmd_lifted_metric(a, b, p, out);
        if (*tangency)
            return cmd_tangency(config, out_dir, out);
        if (*check)
            return cmd_check(config, out_dir, out);
        if (*solve)
            return cmd_solve(config, out_dir, seed, out);
        if (*verify)
            return cmd_verify(run_dir, out);
    } catch (const Json::exception& e) {
        err << "error: malformed config: " << e.what() << '\n';
        return kExitFailure;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kExitFailure;
    }
    return kExitFailure;
}

} // namespace mfv
