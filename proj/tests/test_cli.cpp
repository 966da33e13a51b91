#include <catch_amalgamated.hpp>

#include <array>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>

namespace fs = std::filesystem;

namespace {

struct CliResult {
    int exit_code = -1;
    std::string output; // stdout only
};

CliResult run_cli(const std::string& args) {
    const std::string command = std::string(MLRU_BIN_PATH) + " " + args + " 2>/dev/null";
    CliResult result;
    FILE* pipe = popen(command.c_str(), "r");
    REQUIRE(pipe != nullptr);
    std::array<char, 4096> buffer;
    while (fgets(buffer.data(), buffer.size(), pipe)) result.output += buffer.data();
    const int status = pclose(pipe);
    result.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    return result;
}

double trailing_value(const std::string& output, const std::string& key) {
    const auto pos = output.rfind(key + ",");
    REQUIRE(pos != std::string::npos);
    return std::stod(output.substr(pos + key.size() + 1));
}

std::string slurp(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE(in.good());
    return std::string((std::istreambuf_iterator<char>(in)),
                       std::istreambuf_iterator<char>());
}

const fs::path tmp_dir = fs::path(MLRU_TEST_TMPDIR) / "cli";

std::string write_config(const std::string& name, const std::string& body) {
    fs::create_directories(tmp_dir);
    const fs::path path = tmp_dir / name;
    std::ofstream out(path);
    out << body;
    return path.string();
}

} // namespace

TEST_CASE("coverage: analytic ppp table", "[cli]") {
    const CliResult r = run_cli("coverage --kind ppp --lambda-b 0.5 --rb 1.6");
    CHECK(r.exit_code == 0);
    CHECK(r.output.find("m,p_m") == 0);
    CHECK(std::abs(trailing_value(r.output, "mean_coverage") - 4.0) < 0.03);
}

TEST_CASE("coverage: invalid radius exits with usage error", "[cli]") {
    CHECK(run_cli("coverage --kind ppp --rb 0").exit_code == 1);
    CHECK(run_cli("nonsense").exit_code == 1);
}

TEST_CASE("simulate: schema, determinism, policy x sweep fan-out", "[cli]") {
    const std::string config = write_config("sim.cfg", R"([geometry]
kind = ppp
lambda_b = 0.5
rb = 1.13
width = 8
height = 8

[traffic]
lambda_u = 0.05
target_requests = 20000
f = 500
gamma = 0.78

[policy]
kind = multi-lru-one
k = 10

[run]
replications = 2
seed = 5

[sweep]
variable = rb
values = 0.8, 1.13
)");
    const fs::path out = tmp_dir / "sim-out";
    const std::string invocation = "simulate --config " + config + " --out " +
                                   out.string() +
                                   " --policies multi-lru-one,single-lru";
    const CliResult first = run_cli(invocation);
    REQUIRE(first.exit_code == 0);
    CHECK(first.output.find(
              "sweep_value,N_bs_mean,policy,p_hit_mean,ci95,n_replications,seed") == 0);

    // 2 policies x 2 sweep values = 4 data rows
    const std::string csv = slurp(out / "results.csv");
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 5);
    CHECK(fs::exists(out / "results.json"));
    CHECK(fs::exists(out / "results.manifest.json"));

    const CliResult second = run_cli(invocation);
    REQUIRE(second.exit_code == 0);
    CHECK(slurp(out / "results.csv") == csv); // byte-identical rerun
}

TEST_CASE("analyze: closed-form bound and two-cache values", "[cli]") {
    const CliResult bound = run_cli(
        "analyze --policy bound --f 3 --gamma 1 --k 1 --pmf 0,1 --var k --values 1");
    REQUIRE(bound.exit_code == 0);
    const auto bound_line = bound.output.substr(bound.output.find('\n') + 1);
    CHECK(std::abs(std::stod(bound_line.substr(bound_line.find("bound,") + 6)) -
                   6.0 / 11.0) < 1e-9);

    const CliResult two = run_cli(
        "analyze --policy two-cache-all --f 2 --gamma 0 --k 1 --lambda-u 1 "
        "--voronoi-area 1 --var k --values 1");
    REQUIRE(two.exit_code == 0);
    CHECK(two.output.find("sweep_value,policy,P_hit,T_C") == 0);
    const auto line = two.output.substr(two.output.find('\n') + 1);
    CHECK(line.find("two-cache-all") != std::string::npos);
    CHECK(std::abs(std::stod(line.substr(line.find("all,") + 4)) - 0.5) < 1e-9);

    const CliResult one = run_cli(
        "analyze --policy two-cache-one --f 2 --gamma 0 --k 1 --lambda-u 1 "
        "--voronoi-area 1 --var k --values 1");
    REQUIRE(one.exit_code == 0);
    const auto line1 = one.output.substr(one.output.find('\n') + 1);
    CHECK(std::abs(std::stod(line1.substr(line1.find("one,") + 4)) - 0.75) < 1e-9);
}

TEST_CASE("analyze: multi-one curve is monotone in the radius", "[cli]") {
    const CliResult r = run_cli(
        "analyze --policy multi-one --f 1000 --gamma 0.78 --k 50 --lambda-b 0.5 "
        "--lambda-u 0.023 --var rb --values 0.8,1.13,1.38,1.6");
    REQUIRE(r.exit_code == 0);
    std::istringstream in(r.output);
    std::string line;
    std::getline(in, line); // header
    double prev = -1.0;
    int rows = 0;
    while (std::getline(in, line)) {
        const auto second_comma = line.find(',', line.find(',') + 1);
        const double p = std::stod(line.substr(second_comma + 1));
        CHECK(p >= prev - 1e-12);
        prev = p;
        ++rows;
    }
    CHECK(rows == 4);
}

TEST_CASE("simulate honours MLRU_OUT_DIR when --out is absent", "[cli]") {
    const std::string config = write_config("envdir.cfg", R"([geometry]
kind = ppp
rb = 1.13
width = 4
height = 4

[traffic]
lambda_u = 0.1
target_requests = 2000
f = 100

[policy]
kind = single-lru
k = 5

[run]
replications = 1
seed = 9
)");
    const fs::path out = tmp_dir / "env-out";
    fs::remove_all(out);
    const std::string command = "MLRU_OUT_DIR=" + out.string() + " " +
                                std::string(MLRU_BIN_PATH) + " simulate --config " +
                                config + " >/dev/null 2>&1";
    REQUIRE(std::system(command.c_str()) == 0);
    CHECK(fs::exists(out / "results.csv"));
    CHECK(fs::exists(out / "results.manifest.json"));
}

TEST_CASE("compare: identical grids give zero deviation, mismatch fails", "[cli]") {
    fs::create_directories(tmp_dir);
    const fs::path a = tmp_dir / "curve-a.csv";
    const fs::path b = tmp_dir / "curve-b.csv";
    const fs::path c = tmp_dir / "curve-c.csv";
    std::ofstream(a) << "sweep_value,policy,P_hit,T_C\n0.8,multi-one,0.25,10\n"
                        "1.13,multi-one,0.3,11\n";
    std::ofstream(b) << "sweep_value,policy,P_hit,T_C\n0.8,multi-one,0.27,10\n"
                        "1.13,multi-one,0.33,11\n";
    std::ofstream(c) << "sweep_value,policy,P_hit,T_C\n0.8,multi-one,0.25,10\n";

    const CliResult same = run_cli("compare --sim " + a.string() + " --analytic " +
                                   a.string());
    REQUIRE(same.exit_code == 0);
    CHECK(trailing_value(same.output, "max_abs_deviation") == 0.0);

    const CliResult close = run_cli("compare --sim " + a.string() + " --analytic " +
                                    b.string());
    REQUIRE(close.exit_code == 0);
    CHECK(std::abs(trailing_value(close.output, "max_abs_deviation") - 0.03) < 1e-9);

    CHECK(run_cli("compare --sim " + a.string() + " --analytic " + c.string())
              .exit_code == 2);
}
