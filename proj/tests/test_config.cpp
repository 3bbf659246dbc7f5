#include <catch2/catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>

#include "dnpr/config.hpp"
#include "dnpr/run.hpp"

using namespace dnpr;
using Catch::Approx;

namespace {

const char* kMinimalLevels = R"({
  "schema_version": 1,
  "experiment": "levels",
  "levels": {"b_min_mT": 50.8, "b_max_mT": 51.6, "n_points": 11}
})";

std::filesystem::path temp_dir() {
    auto dir = std::filesystem::temp_directory_path() / "dnpr_test_out";
    std::filesystem::create_directories(dir);
    return dir;
}

} // namespace

TEST_CASE("config: minimal levels config fills defaults and echoes") {
    const RunConfig cfg = parse_config(kMinimalLevels);
    CHECK(cfg.kind == ExperimentKind::Levels);
    CHECK(cfg.n_points == 11);
    CHECK(cfg.system.preset == "nv_p1_c13");
    CHECK(cfg.format == "csv");

    // echo re-parses to an equal config
    const RunConfig again = parse_config(cfg.canonical_text());
    CHECK(again.canonical_text() == cfg.canonical_text());
    CHECK(fnv1a(again.canonical_text()) == fnv1a(cfg.canonical_text()));
}

TEST_CASE("config: unknown keys are rejected with a nearest-key hint") {
    const char* text = R"({
      "schema_version": 1,
      "experiment": "sweep",
      "sweeep": {}
    })";
    try {
        parse_config(text);
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        const std::string msg = e.what();
        CHECK(msg.find("sweeep") != std::string::npos);
        CHECK(msg.find("sweep") != std::string::npos);
    }
}

TEST_CASE("config: nested unknown keys carry their path") {
    const char* text = R"({
      "schema_version": 1,
      "experiment": "levels",
      "system": {"theta_drg": 10.0},
      "levels": {}
    })";
    try {
        parse_config(text);
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        const std::string msg = e.what();
        CHECK(msg.find("system") != std::string::npos);
        CHECK(msg.find("theta_drg") != std::string::npos);
        CHECK(msg.find("theta_deg") != std::string::npos);
    }
}

TEST_CASE("config: range validation names the limits") {
    const char* text = R"({
      "schema_version": 1,
      "experiment": "levels",
      "system": {"theta_deg": 95.0},
      "levels": {}
    })";
    try {
        parse_config(text);
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        const std::string msg = e.what();
        CHECK(msg.find("[0, 90]") != std::string::npos);
    }
}

TEST_CASE("config: parse errors report line and column") {
    try {
        parse_config("{\n  \"schema_version\": 1,\n  oops\n}");
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        const std::string msg = e.what();
        CHECK(msg.find("line 3") != std::string::npos);
    }
}

TEST_CASE("config: schema version mismatch") {
    CHECK_THROWS_AS(
        parse_config(R"({"schema_version": 7, "experiment": "levels"})"),
        ConfigError);
    CHECK_THROWS_AS(
        parse_config(R"({"schema_version": 1, "experiment": "wiggle"})"),
        ConfigError);
}

TEST_CASE("config: custom system species") {
    const char* text = R"({
      "schema_version": 1,
      "experiment": "levels",
      "system": {
        "preset": "custom",
        "custom": {
          "species": [
            {"label": "e", "s": 0.5, "gamma_MHz_per_mT": -28.0249},
            {"label": "n", "s": 0.5, "gamma_MHz_per_mT": 0.0107}
          ],
          "couplings": [
            {"site_i": 0, "site_j": 1, "scalar_MHz": 1.0, "polar_deg": 30.0}
          ]
        }
      },
      "levels": {"b_min_mT": 1.0, "b_max_mT": 2.0, "n_points": 3}
    })";
    const RunConfig cfg = parse_config(text);
    const auto spec = cfg.system.build();
    CHECK(spec.dim() == 4);
    CHECK(spec.couplings.size() == 1);
}

TEST_CASE("run: levels experiment produces a table with unit headers") {
    RunConfig cfg = parse_config(kMinimalLevels);
    cfg.seed = 7;
    cfg.seed_was_set = true;
    const auto env = run(cfg);
    REQUIRE(env.tables.size() == 1);
    const auto& [name, table] = env.tables.front();
    CHECK(name == "levels");
    CHECK(table.columns.front() == "B_mT");
    CHECK(table.columns[1] == "level_0_MHz");
    CHECK(table.rows.size() == 11);
    CHECK(!env.config_hash.empty());
}

TEST_CASE("run: thermal criterion values") {
    const char* text = R"({
      "schema_version": 1,
      "experiment": "thermal",
      "thermal": {
        "field_T": 9.0,
        "temperature_K": 300.0,
        "gamma_MHz_per_T": 10.708,
        "enhancement": {"epsilon": 30.0, "fill_fraction": 0.02,
                        "t_dnp_s": 15.0, "t_thermal_s": 1800.0}
      }
    })";
    const auto env = run(parse_config(text));
    const double p = env.data.at("thermal_polarization").get<double>();
    CHECK(p == Approx(7.7086e-6).epsilon(0.01));
    const double local =
        env.data.at("enhancement").at("local_polarization").get<double>();
    CHECK(local == Approx(30.0 * p / 0.02).margin(1e-12));
    const double gain =
        env.data.at("enhancement").at("sensitivity_gain").get<double>();
    CHECK(gain == Approx(30.0 * std::sqrt(120.0)).margin(1e-9));
}

TEST_CASE("thermal polarization: odd and monotone in field") {
    CHECK(thermal_polarization(0.0, 300.0, 10.708) == 0.0);
    double prev = 0.0;
    for (double b = 1.0; b <= 20.0; b += 2.0) {
        const double p = thermal_polarization(b, 300.0, 10.708);
        CHECK(p > prev);
        prev = p;
    }
    CHECK_THROWS_AS(thermal_polarization(1.0, 0.0, 10.708), ConfigError);
    CHECK_THROWS_AS(enhancement_report(30.0, 1.5, 15.0, 1800.0, 1e-5),
                    ConfigError);
    CHECK(enhancement_report(1.0, 1.0, 15.0, 15.0, 1e-5).sensitivity_gain ==
          Approx(1.0).margin(1e-12));
}

TEST_CASE("emit: csv and sidecar, byte-identical reruns") {
    RunConfig cfg = parse_config(kMinimalLevels);
    cfg.seed = 99;
    cfg.seed_was_set = true;
    const auto dir = temp_dir();
    const auto out = (dir / "levels_test.csv").string();

    const auto files1 = emit(run(cfg), out, "csv");
    REQUIRE(files1.size() == 2);
    std::ifstream f1(files1[0]);
    std::stringstream s1;
    s1 << f1.rdbuf();

    const auto files2 = emit(run(cfg), out, "csv");
    std::ifstream f2(files2[0]);
    std::stringstream s2;
    s2 << f2.rdbuf();
    CHECK(s1.str() == s2.str());
    CHECK(s1.str().find("B_mT,level_0_MHz") == 0);
}

TEST_CASE("emit: unwritable target never leaves partial output") {
    RunConfig cfg = parse_config(kMinimalLevels);
    cfg.seed = 1;
    cfg.seed_was_set = true;
    const auto env = run(cfg);
    CHECK_THROWS_AS(emit(env, "/proc/definitely/not/writable/out.csv", "csv"),
                    IoError);
}

TEST_CASE("figures: every bundled study builds a valid config") {
    for (const auto& name : figure_names()) {
        const auto configs = figure_configs(name, 1);
        CHECK(!configs.empty());
        for (const auto& [suffix, cfg] : configs) {
            // canonical echo must re-parse
            const RunConfig again = parse_config(cfg.canonical_text());
            CHECK(to_string(again.kind) == to_string(cfg.kind));
        }
    }
    CHECK_THROWS_AS(figure_configs("fig9z", 1), ConfigError);
}

TEST_CASE("fit: csv input round trip") {
    const auto dir = temp_dir();
    const auto csv_path = (dir / "fit_input.csv").string();
    {
        std::ofstream out(csv_path);
        out << "rate_mT_per_ms,amplitude\n";
        const LZParams truth;
        for (int i = 0; i < 16; ++i) {
            const double r = 0.02 * std::pow(100.0, i / 15.0);
            out << format_number(r) << "," << format_number(eval(truth, r))
                << "\n";
        }
    }
    json j;
    j["schema_version"] = 1;
    j["experiment"] = "fit";
    j["fit"] = {{"input_csv", csv_path}, {"multistart", 12}};
    const auto env = run(parse_config(j.dump()));
    CHECK(env.data.at("params").at("delta0_kHz").get<double>() ==
          Approx(250.0).epsilon(0.05));
    CHECK(env.data.at("params").at("p_m").get<double>() ==
          Approx(13.0).epsilon(0.05));
}
