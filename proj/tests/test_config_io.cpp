#include <catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "mlru/config.hpp"
#include "mlru/io.hpp"

using namespace mlru;
using Catch::Approx;

TEST_CASE("doubles format without locale surprises", "[config]") {
    CHECK(format_double(0.5) == "0.5");
    CHECK(format_double(-1.25) == "-1.25");
    CHECK(format_double(1e-9) == "1e-09");
    CHECK(std::stod(format_double(0.1 + 0.2)) == 0.1 + 0.2);
}

TEST_CASE("policy names round-trip", "[config]") {
    for (const auto family :
         {PolicyKind::Family::SingleLru, PolicyKind::Family::QLru,
          PolicyKind::Family::Lfu, PolicyKind::Family::MultiLruOne,
          PolicyKind::Family::MultiLruAll, PolicyKind::Family::QMultiLruAll,
          PolicyKind::Family::Pbp, PolicyKind::Family::Gfi}) {
        PolicyKind policy{family, 0.5};
        CHECK(parse_policy(policy_name(policy), 0.5).family == family);
    }
    CHECK_THROWS_AS(parse_policy("nonsense"), std::invalid_argument);
}

TEST_CASE("config files parse into experiment configs", "[config]") {
    std::istringstream in(R"(# reference experiment
[geometry]
kind = ppp
lambda_b = 0.5
rb = 1.38

[traffic]
lambda_u = 0.023
target_requests = 500000
f = 10000
gamma = 0.78

[policy]
kind = q-multi-lru-all
q = 0.5
alpha = 0.01

[run]
replications = 20
seed = 42
warmup_fraction = 0.1

[sweep]
variable = rb
values = 0.8, 1.13, 1.38
)");
    const RunSpec spec = parse_run_spec(in);
    CHECK(spec.config.geometry == FieldKind::Ppp);
    CHECK(spec.config.station_intensity == 0.5);
    CHECK(spec.config.coverage_radius == 1.38);
    CHECK(spec.config.request_intensity == 0.023);
    CHECK(spec.config.catalogue_size == 10000);
    CHECK(spec.config.policy.family == PolicyKind::Family::QMultiLruAll);
    CHECK(spec.config.policy.insert_probability == 0.5);
    CHECK(spec.config.effective_capacity() == 100);
    CHECK(spec.config.replications == 20);
    CHECK(spec.config.base_seed == 42);
    CHECK(spec.config.warmup_fraction == 0.1);
    REQUIRE(spec.sweep_variable.has_value());
    CHECK(*spec.sweep_variable == SweepVariable::CoverageRadius);
    CHECK(spec.sweep_values == std::vector<double>{0.8, 1.13, 1.38});
}

TEST_CASE("config errors carry line context", "[config]") {
    std::istringstream bad_key("[geometry]\nlambdas = 3\n");
    try {
        parse_run_spec(bad_key);
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        CHECK(std::string(e.what()).find("line 2") != std::string::npos);
    }

    std::istringstream bad_value("[geometry]\nrb = fast\n");
    CHECK_THROWS_AS(parse_run_spec(bad_value), ConfigError);

    std::istringstream no_eq("[run]\nreplications\n");
    CHECK_THROWS_AS(parse_run_spec(no_eq), ConfigError);

    std::istringstream orphan_sweep("[sweep]\nvariable = rb\n");
    CHECK_THROWS_AS(parse_run_spec(orphan_sweep), ConfigError);
}

TEST_CASE("station fields serialize to csv plus json header", "[config]") {
    StationField field;
    field.positions = {{0.25, 1.5}, {3.0, 4.0}};
    field.intensity = 0.5;
    field.coverage_radius = 1.13;
    field.window = Window{12.0, 12.0, 1.13};
    field.kind = FieldKind::Lattice;

    CHECK(station_field_csv(field) == "index,x,y\n0,0.25,1.5\n1,3,4\n");
    const auto header = station_field_header(field, 7);
    CHECK(header["lambda_b"] == 0.5);
    CHECK(header["rb"] == 1.13);
    CHECK(header["kind"] == "lattice");
    CHECK(header["seed"] == 7);
    CHECK(header["stations"] == 2);
    CHECK(header["window"]["margin"] == 1.13);
}

TEST_CASE("traffic serializers", "[config]") {
    const Catalogue cat = zipf_popularities(2, 0.0);
    CHECK(catalogue_csv(cat) == "rank,popularity\n1,0.5\n2,0.5\n");

    RequestStream stream;
    stream.requests = {{0.5, {1.0, 2.0}, 3}};
    CHECK(request_stream_csv(stream) == "t,x,y,object_id\n0.5,1,2,3\n");
}

TEST_CASE("inventory snapshots serialize station by station", "[config]") {
    CacheInventory a(2, 8), b(2, 8);
    a.insert(3);
    a.insert(1);
    b.insert(2);
    CHECK(inventories_csv({a, b}) == "station,rank,object\n0,0,1\n0,1,3\n1,0,2\n");
}

TEST_CASE("result rows keep the documented schema", "[config]") {
    const std::vector<ResultRow> rows{{1.13, 2.0, "multi-lru-one", 0.25, 0.01, 20, 42}};
    CHECK(result_rows_csv(rows) ==
          "sweep_value,N_bs_mean,policy,p_hit_mean,ci95,n_replications,seed\n"
          "1.13,2,multi-lru-one,0.25,0.01,20,42\n");
    const auto arr = result_rows_json(rows);
    CHECK(arr[0]["policy"] == "multi-lru-one");
    CHECK(arr[0]["p_hit_mean"] == 0.25);

    const std::vector<CurveRow> curve{{1.13, "multi-one", 0.3, 44.5}};
    CHECK(curve_rows_csv(curve) ==
          "sweep_value,policy,P_hit,T_C\n1.13,multi-one,0.3,44.5\n");
}

TEST_CASE("atomic writes land complete", "[config]") {
    const std::filesystem::path dir = MLRU_TEST_TMPDIR;
    std::filesystem::create_directories(dir);
    const auto path = dir / "atomic.txt";
    write_file_atomic(path, "payload\n");
    std::ifstream in(path);
    std::string contents((std::istreambuf_iterator<char>(in)),
                         std::istreambuf_iterator<char>());
    CHECK(contents == "payload\n");
    CHECK(!std::filesystem::exists(path.string() + ".tmp"));
}

TEST_CASE("config echo reflects the effective run", "[config]") {
    RunSpec spec;
    spec.config.policy = parse_policy("multi-lru-all");
    spec.config.alpha = 0.05;
    spec.sweep_variable = SweepVariable::CoverageRadius;
    spec.sweep_values = {0.8, 1.13};
    const auto echo = config_echo(spec);
    CHECK(echo["policy"]["kind"] == "multi-lru-all");
    CHECK(echo["policy"]["k"] == 500);
    CHECK(echo["sweep"]["variable"] == "rb");
}
