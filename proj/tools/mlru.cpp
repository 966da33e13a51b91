// mlru: spatial multi-LRU cache experiments from the command line.
//
// Subcommands:
//   coverage   coverage-number profile for a geometry (analytic or Monte Carlo)
//   simulate   run a seeded experiment or sweep from a config file
//   analyze    analytical hit-probability curves (Che / CIA / CSA / bound)
//   compare    join a simulation CSV with an analytical CSV, report deviations
//
// Exit codes: 0 success, 1 usage error, 2 runtime error.

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "mlru/analytics.hpp"
#include "mlru/config.hpp"
#include "mlru/engine.hpp"
#include "mlru/geometry.hpp"
#include "mlru/io.hpp"
#include "mlru/version.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

fs::path output_dir(const std::string& flag_value) {
    if (!flag_value.empty()) return flag_value;
    if (const char* env = std::getenv("MLRU_OUT_DIR")) return env;
    return ".";
}

struct ManifestWriter {
    json data;
    std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();

    explicit ManifestWriter(const std::string& command) {
        data["tool"] = "mlru";
        data["version"] = mlru::kVersion;
        data["command"] = command;
        data["outputs"] = json::array();
    }

    void add_output(const fs::path& path) { data["outputs"].push_back(path.string()); }

    void write(const fs::path& path) {
        data["wall_clock_ms"] =
            std::chrono::duration_cast<std::chrono::milliseconds>(
                std::chrono::steady_clock::now() - start)
                .count();
        mlru::write_file_atomic(path, data.dump(2) + "\n");
    }
};

// ---------------------------------------------------------------------------
// coverage
// ---------------------------------------------------------------------------

int cmd_coverage(const std::string& kind, double lambda_b, double rb,
                 std::size_t max_m, std::size_t samples, double width,
                 double height, std::uint64_t seed, const std::string& out_flag) {
    mlru::CoverageProfile profile;
    if (kind == "ppp") {
        profile = mlru::coverage_profile_ppp_boolean(lambda_b, rb, max_m);
    } else {
        mlru::Rng rng(seed);
        const mlru::Window window{width, height, rb};
        profile = mlru::coverage_profile_monte_carlo(
            [&](mlru::Rng& r) {
                return mlru::build_lattice_stations(lambda_b, window, rb, r);
            },
            rb, max_m, samples, rng);
    }
    std::ostringstream table;
    table << "m,p_m\n";
    for (std::size_t m = 0; m < profile.pmf.size(); ++m)
        table << m << ',' << mlru::format_double(profile.pmf[m]) << '\n';
    const double mean = mlru::mean_coverage_number(profile);

    std::cout << table.str();
    std::cout << "mean_coverage," << mlru::format_double(mean) << '\n';

    if (!out_flag.empty()) {
        const fs::path dir = output_dir(out_flag);
        fs::create_directories(dir);
        const fs::path csv = dir / ("coverage-" + kind + ".csv");
        mlru::write_file_atomic(csv, table.str());
        ManifestWriter manifest("coverage");
        manifest.data["config"] = {{"kind", kind},        {"lambda_b", lambda_b},
                                   {"rb", rb},            {"max_m", max_m},
                                   {"samples", samples},  {"width", width},
                                   {"height", height},    {"seed", seed}};
        manifest.data["mean_coverage"] = mean;
        manifest.add_output(csv);
        manifest.write(dir / ("coverage-" + kind + ".manifest.json"));
    }
    return 0;
}

// ---------------------------------------------------------------------------
// simulate
// ---------------------------------------------------------------------------

int cmd_simulate(const std::string& config_path, const std::vector<std::string>& sets,
                 const std::vector<std::string>& policies,
                 std::optional<std::uint64_t> seed,
                 std::optional<std::uint64_t> replications,
                 const std::string& out_flag, const std::string& name) {
    mlru::RunSpec spec = mlru::load_run_spec(config_path);
    for (const std::string& assignment : sets) {
        const auto eq = assignment.find('=');
        const auto dot = assignment.find('.');
        if (eq == std::string::npos || dot == std::string::npos || dot > eq)
            throw mlru::ConfigError("--set expects section.key=value, got '" +
                                    assignment + "'");
        mlru::apply_config_entry(spec, assignment.substr(0, dot),
                                 assignment.substr(dot + 1, eq - dot - 1),
                                 assignment.substr(eq + 1));
    }
    if (seed) spec.config.base_seed = *seed;
    if (replications) spec.config.replications = *replications;

    std::vector<mlru::PolicyKind> kinds;
    if (policies.empty()) {
        kinds.push_back(spec.config.policy);
    } else {
        for (const std::string& p : policies)
            kinds.push_back(mlru::parse_policy(p, spec.config.policy.insert_probability));
    }

    std::vector<mlru::ResultRow> rows;
    for (const mlru::PolicyKind& policy : kinds) {
        mlru::ExperimentConfig config = spec.config;
        config.policy = policy;
        if (spec.sweep_variable) {
            const auto points =
                mlru::run_sweep(config, *spec.sweep_variable, spec.sweep_values);
            for (const auto& point : points)
                rows.push_back({point.value, point.mean_coverage,
                                mlru::policy_name(policy), point.report.mean,
                                point.report.ci95_half_width,
                                point.report.per_replication.size(),
                                point.report.base_seed});
        } else {
            const mlru::HitReport report = mlru::run_experiment(config);
            const double n_bs = mlru::mean_coverage_number(
                mlru::experiment_coverage_profile(config));
            rows.push_back({config.coverage_radius, n_bs, mlru::policy_name(policy),
                            report.mean, report.ci95_half_width,
                            report.per_replication.size(), report.base_seed});
        }
    }

    const fs::path dir = output_dir(out_flag);
    fs::create_directories(dir);
    const fs::path csv = dir / (name + ".csv");
    const fs::path jsn = dir / (name + ".json");
    mlru::write_file_atomic(csv, mlru::result_rows_csv(rows));
    mlru::write_file_atomic(jsn, mlru::result_rows_json(rows).dump(2) + "\n");

    ManifestWriter manifest("simulate");
    manifest.data["config"] = mlru::config_echo(spec);
    manifest.data["config_file"] = config_path;
    json seeds = json::array();
    for (std::uint64_t i = 0; i < spec.config.replications; ++i)
        seeds.push_back(spec.config.base_seed + i);
    manifest.data["replication_seeds_first_point"] = seeds;
    manifest.add_output(csv);
    manifest.add_output(jsn);
    manifest.write(dir / (name + ".manifest.json"));

    std::cout << mlru::result_rows_csv(rows);
    return 0;
}

// ---------------------------------------------------------------------------
// analyze
// ---------------------------------------------------------------------------

int cmd_analyze(const std::string& policy, std::size_t f, double gamma,
                std::size_t k, double lambda_b, double lambda_u,
                std::size_t max_m, double voronoi_area, const std::string& var,
                std::vector<double> values, const std::vector<double>& pmf,
                const std::string& out_flag, const std::string& name) {
    const bool two_cache = policy == "two-cache-one" || policy == "two-cache-all";
    if (values.empty())
        throw mlru::ConfigError("analyze needs --values");

    // externally supplied p_m vector overrides the Boolean/PPP profile
    std::optional<mlru::CoverageProfile> fixed_profile;
    if (!pmf.empty()) {
        mlru::CoverageProfile profile;
        profile.pmf = pmf;
        profile.validate();
        fixed_profile = std::move(profile);
    }
    const auto profile_at = [&](double rb) {
        return fixed_profile
                   ? *fixed_profile
                   : mlru::coverage_profile_ppp_boolean(lambda_b, rb, max_m);
    };

    std::vector<mlru::CurveRow> rows;
    for (const double value : values) {
        double rb = 1.13, point_gamma = gamma;
        std::size_t point_k = k;
        if (var == "rb") rb = value;
        else if (var == "k") point_k = static_cast<std::size_t>(value);
        else if (var == "alpha") point_k = static_cast<std::size_t>(
            std::llround(value * static_cast<double>(f)));
        else if (var == "gamma") point_gamma = value;
        else throw mlru::ConfigError("analyze --var must be rb, k, alpha or gamma");

        const mlru::Catalogue cat = mlru::zipf_popularities(f, point_gamma);
        const double voronoi = voronoi_area > 0.0 ? voronoi_area : 1.0 / lambda_b;
        mlru::CurveRow row;
        row.sweep_value = value;
        row.policy = policy;

        if (policy == "single") {
            const auto sol = mlru::solve_characteristic_time(cat, lambda_u * voronoi,
                                                             point_k);
            row.characteristic_time = sol.characteristic_time;
            row.p_hit = mlru::che_single_hit(cat, lambda_u * voronoi, point_k);
        } else if (policy == "multi-one") {
            if (!mlru::cia_applicable(voronoi, rb))
                std::cerr << "warning: CIA precondition pi R_b^2 > |V| fails at rb="
                          << rb << "\n";
            const auto profile = profile_at(rb);
            const auto sol = mlru::solve_characteristic_time(cat, lambda_u * voronoi,
                                                             point_k);
            row.characteristic_time = sol.characteristic_time;
            row.p_hit = mlru::che_multi_one_hit(cat, lambda_u, voronoi, profile,
                                                point_k);
        } else if (policy == "multi-all") {
            const auto profile = profile_at(rb);
            const auto sol = mlru::solve_characteristic_time(
                cat, lambda_u * M_PI * rb * rb, point_k);
            row.characteristic_time = sol.characteristic_time;
            row.p_hit = mlru::che_multi_all_hit(cat, lambda_u, rb, profile, point_k);
        } else if (policy == "bound") {
            row.p_hit = mlru::hit_upper_bound(cat, profile_at(rb), point_k);
        } else if (two_cache) {
            const auto kind = policy == "two-cache-one" ? mlru::TwoCachePolicy::One
                                                        : mlru::TwoCachePolicy::All;
            const double solve_rate = kind == mlru::TwoCachePolicy::One
                                          ? lambda_u * voronoi
                                          : lambda_u * 2.0 * voronoi;
            const auto sol = mlru::solve_characteristic_time(cat, solve_rate, point_k);
            row.characteristic_time = sol.characteristic_time;
            row.p_hit = mlru::two_cache_hit(kind, cat, lambda_u, voronoi, point_k);
        } else {
            throw mlru::ConfigError("unknown analyze policy: " + policy);
        }
        rows.push_back(row);
    }

    std::cout << mlru::curve_rows_csv(rows);
    if (!out_flag.empty()) {
        const fs::path dir = output_dir(out_flag);
        fs::create_directories(dir);
        const fs::path csv = dir / (name + ".csv");
        mlru::write_file_atomic(csv, mlru::curve_rows_csv(rows));
        ManifestWriter manifest("analyze");
        manifest.data["config"] = {{"policy", policy}, {"f", f},
                                   {"gamma", gamma},   {"k", k},
                                   {"lambda_b", lambda_b}, {"lambda_u", lambda_u},
                                   {"var", var},       {"values", values}};
        manifest.add_output(csv);
        manifest.write(dir / (name + ".manifest.json"));
    }
    return 0;
}

// ---------------------------------------------------------------------------
// compare
// ---------------------------------------------------------------------------

struct CsvColumn {
    std::vector<double> sweep;
    std::vector<double> value;
    std::vector<std::string> label;
};

CsvColumn read_value_column(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    std::string header;
    if (!std::getline(in, header)) throw std::runtime_error("empty file: " + path.string());
    std::vector<std::string> names;
    {
        std::stringstream ss(header);
        std::string item;
        while (std::getline(ss, item, ',')) names.push_back(item);
    }
    long sweep_col = -1, value_col = -1, label_col = -1;
    for (std::size_t i = 0; i < names.size(); ++i) {
        if (names[i] == "sweep_value") sweep_col = static_cast<long>(i);
        if (names[i] == "p_hit_mean" || names[i] == "P_hit")
            value_col = static_cast<long>(i);
        if (names[i] == "policy") label_col = static_cast<long>(i);
    }
    if (sweep_col < 0 || value_col < 0)
        throw std::runtime_error(path.string() +
                                 ": need sweep_value and p_hit_mean/P_hit columns");
    CsvColumn out;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string item;
        std::vector<std::string> cells;
        while (std::getline(ss, item, ',')) cells.push_back(item);
        out.sweep.push_back(std::stod(cells.at(sweep_col)));
        out.value.push_back(std::stod(cells.at(value_col)));
        out.label.push_back(label_col >= 0 ? cells.at(label_col) : "");
    }
    return out;
}

int cmd_compare(const std::string& sim_path, const std::string& analytic_path,
                const std::string& out_flag, const std::string& name) {
    const CsvColumn sim = read_value_column(sim_path);
    const CsvColumn ana = read_value_column(analytic_path);
    if (sim.sweep.size() != ana.sweep.size())
        throw std::runtime_error("grid mismatch: " + std::to_string(sim.sweep.size()) +
                                 " vs " + std::to_string(ana.sweep.size()) + " rows");
    for (std::size_t i = 0; i < sim.sweep.size(); ++i)
        if (std::abs(sim.sweep[i] - ana.sweep[i]) > 1e-9)
            throw std::runtime_error("grid mismatch at row " + std::to_string(i));

    std::ostringstream table;
    table << "sweep_value,policy,p_sim,p_analytic,abs_deviation\n";
    double max_dev = 0.0;
    for (std::size_t i = 0; i < sim.sweep.size(); ++i) {
        const double dev = std::abs(sim.value[i] - ana.value[i]);
        max_dev = std::max(max_dev, dev);
        table << mlru::format_double(sim.sweep[i]) << ',' << sim.label[i] << ','
              << mlru::format_double(sim.value[i]) << ','
              << mlru::format_double(ana.value[i]) << ','
              << mlru::format_double(dev) << '\n';
    }
    std::cout << table.str();
    std::cout << "max_abs_deviation," << mlru::format_double(max_dev) << '\n';

    if (!out_flag.empty()) {
        const fs::path dir = output_dir(out_flag);
        fs::create_directories(dir);
        const fs::path csv = dir / (name + ".csv");
        mlru::write_file_atomic(csv, table.str());
        ManifestWriter manifest("compare");
        manifest.data["config"] = {{"sim", sim_path}, {"analytic", analytic_path}};
        manifest.data["max_abs_deviation"] = max_dev;
        manifest.add_output(csv);
        manifest.write(dir / (name + ".manifest.json"));
    }
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"spatial multi-LRU edge-caching simulator"};
    app.require_subcommand(1);
    app.set_version_flag("--version", mlru::kVersion);

    // coverage
    auto* coverage = app.add_subcommand("coverage", "coverage-number profile");
    std::string cov_kind = "ppp";
    double cov_lambda = 0.5, cov_rb = 1.13, cov_w = 12.0, cov_h = 12.0;
    std::size_t cov_m = 50, cov_samples = 200000;
    std::uint64_t cov_seed = 1;
    std::string cov_out;
    coverage->add_option("--kind", cov_kind)->check(CLI::IsMember({"ppp", "lattice"}));
    coverage->add_option("--lambda-b", cov_lambda)->check(CLI::PositiveNumber);
    coverage->add_option("--rb", cov_rb)->check(CLI::PositiveNumber);
    coverage->add_option("--max-m", cov_m)->check(CLI::PositiveNumber);
    coverage->add_option("--samples", cov_samples)->check(CLI::PositiveNumber);
    coverage->add_option("--width", cov_w)->check(CLI::PositiveNumber);
    coverage->add_option("--height", cov_h)->check(CLI::PositiveNumber);
    coverage->add_option("--seed", cov_seed);
    coverage->add_option("--out", cov_out, "output directory");

    // simulate
    auto* simulate = app.add_subcommand("simulate", "run an experiment or sweep");
    std::string sim_config, sim_out, sim_name = "results";
    std::vector<std::string> sim_sets, sim_policies;
    std::optional<std::uint64_t> sim_seed, sim_reps;
    simulate->add_option("--config", sim_config)->required()->check(CLI::ExistingFile);
    simulate->add_option("--set", sim_sets, "override: section.key=value");
    simulate->add_option("--policies", sim_policies)->delimiter(',');
    simulate->add_option("--seed", sim_seed);
    simulate->add_option("--replications", sim_reps);
    simulate->add_option("--out", sim_out, "output directory");
    simulate->add_option("--name", sim_name, "output file prefix");

    // analyze
    auto* analyze = app.add_subcommand("analyze", "analytical curves");
    std::string ana_policy = "multi-one", ana_var = "rb", ana_out, ana_name = "curve";
    std::size_t ana_f = 10000, ana_k = 500, ana_m = 50;
    double ana_gamma = 0.78, ana_lambda_b = 0.5, ana_lambda_u = 0.023, ana_voronoi = 0.0;
    std::vector<double> ana_values, ana_pmf;
    analyze->add_option("--policy", ana_policy)
        ->check(CLI::IsMember({"single", "multi-one", "multi-all", "bound",
                               "two-cache-one", "two-cache-all"}));
    analyze->add_option("--f", ana_f)->check(CLI::PositiveNumber);
    analyze->add_option("--gamma", ana_gamma)->check(CLI::NonNegativeNumber);
    analyze->add_option("--k", ana_k)->check(CLI::PositiveNumber);
    analyze->add_option("--lambda-b", ana_lambda_b)->check(CLI::PositiveNumber);
    analyze->add_option("--lambda-u", ana_lambda_u)->check(CLI::PositiveNumber);
    analyze->add_option("--max-m", ana_m)->check(CLI::PositiveNumber);
    analyze->add_option("--voronoi-area", ana_voronoi);
    analyze->add_option("--var", ana_var);
    analyze->add_option("--values", ana_values)->delimiter(',');
    analyze->add_option("--pmf", ana_pmf, "explicit coverage pmf p_0..p_M")
        ->delimiter(',');
    analyze->add_option("--out", ana_out, "output directory");
    analyze->add_option("--name", ana_name, "output file prefix");

    // compare
    auto* compare = app.add_subcommand("compare", "join simulation and analytics");
    std::string cmp_sim, cmp_ana, cmp_out, cmp_name = "deviation";
    compare->add_option("--sim", cmp_sim)->required()->check(CLI::ExistingFile);
    compare->add_option("--analytic", cmp_ana)->required()->check(CLI::ExistingFile);
    compare->add_option("--out", cmp_out, "output directory");
    compare->add_option("--name", cmp_name, "output file prefix");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        if (coverage->parsed())
            return cmd_coverage(cov_kind, cov_lambda, cov_rb, cov_m, cov_samples,
                                cov_w, cov_h, cov_seed, cov_out);
        if (simulate->parsed())
            return cmd_simulate(sim_config, sim_sets, sim_policies, sim_seed,
                                sim_reps, sim_out, sim_name);
        if (analyze->parsed())
            return cmd_analyze(ana_policy, ana_f, ana_gamma, ana_k, ana_lambda_b,
                               ana_lambda_u, ana_m, ana_voronoi, ana_var, ana_values,
                               ana_pmf, ana_out, ana_name);
        if (compare->parsed())
            return cmd_compare(cmp_sim, cmp_ana, cmp_out, cmp_name);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 1;
}
