#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "maxslice/scenario.hpp"

using namespace maxslice;

namespace {

std::filesystem::path write_temp(const std::string& name, const std::string& body) {
    const auto dir = std::filesystem::temp_directory_path() / "maxslice_scenario_tests";
    std::filesystem::create_directories(dir);
    const auto path = dir / name;
    std::ofstream out(path, std::ios::trunc);
    out << body;
    return path;
}

const char* kClassifyScenario = R"json({
  "schema_version": 1,
  "name": "gauss_classify",
  "tags": ["transition"],
  "seed": 7,
  "fiber": {"dim": 2, "sizes": [8, 8], "lengths": [6.283185307179586, 6.283185307179586]},
  "model": {"family": "multiply_warped", "interval": [-6, 6],
            "warps": ["exp(-0.5*t^2)", "1.3*exp(-0.245*t^2)"]},
  "tasks": [
    {"type": "classify", "t_range": [-2, 2], "samples": 33,
     "expect": {"kind": "transition", "t0": 0.0, "t0_tol": 1e-9}}
  ]
})json";

const char* kSolveScenario = R"json({
  "schema_version": 1,
  "name": "static_solve",
  "seed": 11,
  "fiber": {"dim": 1, "sizes": [32], "lengths": [6.283185307179586]},
  "model": {"family": "standard_static", "h": "1+0.3*sin(x)"},
  "tasks": [
    {"type": "solve_maximal", "solver": "newton",
     "init": {"kind": "random", "count": 2, "center": 0.0},
     "expect": {"all_status": "converged", "classification": "slice"}}
  ]
})json";

}  // namespace

TEST_CASE("model_from_json: families construct and evaluate") {
    const SpacetimeModel grw = model_from_json(R"({
      "fiber": {"dim": 1, "sizes": [16], "lengths": [6.283185307179586], "metric": ["1"]},
      "model": {"family": "grw", "warp": "cosh(t)"}
    })");
    double x[1] = {0.0};
    CHECK(grw.beta(0.3, x) == 1.0);
    CHECK(grw.metric(0.5, x).a[0] == doctest::Approx(std::cosh(0.5) * std::cosh(0.5)));
    CHECK(grw.has_analytic_dt());

    CHECK_THROWS_AS(model_from_json(R"({
      "fiber": {"dim": 1, "sizes": [16], "lengths": [1.0]},
      "model": {"family": "nope"}
    })"),
                    ParseError);
}

TEST_CASE("run_scenario: classify task passes and writes nothing when disabled") {
    const auto path = write_temp("classify.json", kClassifyScenario);
    RunOptions opts;
    opts.write_files = false;
    opts.quiet = true;
    const RunReport r = run_scenario(path, opts);
    CHECK(r.passed);
    CHECK(r.scenario == "gauss_classify");
    CHECK(r.assertions.size() == 2);
    // no solver rows: CSV is just the header
    CHECK(r.table_csv == "scenario,seed,status,final_residual,slice_deviation,t0,iterations\n");
    CHECK(r.report_json.find("\"schema_version\": 1") != std::string::npos);
    CHECK(r.report_json.find("\"sign_convention_sigma\": 1") != std::string::npos);
}

TEST_CASE("run_scenario: empty task list yields an empty passing report") {
    const auto path = write_temp("empty.json", R"({
      "name": "empty", "fiber": {"dim": 1, "sizes": [8], "lengths": [1.0]},
      "model": {"family": "lorentzian_product"}, "tasks": []
    })");
    RunOptions opts;
    opts.write_files = false;
    opts.quiet = true;
    const RunReport r = run_scenario(path, opts);
    CHECK(r.passed);
    CHECK(r.assertions.empty());
}

TEST_CASE("run_scenario: solve task emits CSV rows and is deterministic") {
    const auto path = write_temp("solve.json", kSolveScenario);
    RunOptions opts;
    opts.write_files = false;
    opts.quiet = true;
    const RunReport a = run_scenario(path, opts);
    const RunReport b = run_scenario(path, opts);
    CHECK(a.passed);
    CHECK(a.table_csv == b.table_csv);  // byte-identical bodies
    // header + one row per initialization
    CHECK(std::count(a.table_csv.begin(), a.table_csv.end(), '\n') == 3);
    CHECK(a.table_csv.find("static_solve,") != std::string::npos);
    CHECK(a.table_csv.find("converged") != std::string::npos);
}

TEST_CASE("run_scenario: seed override changes solver rows") {
    const auto path = write_temp("solve2.json", kSolveScenario);
    RunOptions opts;
    opts.write_files = false;
    opts.quiet = true;
    RunOptions opts2 = opts;
    opts2.seed_override = 999;
    const RunReport a = run_scenario(path, opts);
    const RunReport b = run_scenario(path, opts2);
    CHECK(a.table_csv != b.table_csv);
}

TEST_CASE("run_scenario: malformed JSON reports line and column") {
    const auto path = write_temp("bad.json", "{\n  \"name\": \"x\",\n  oops\n}");
    RunOptions opts;
    opts.write_files = false;
    opts.quiet = true;
    try {
        run_scenario(path, opts);
        FAIL("expected ParseError");
    } catch (const ParseError& e) {
        CHECK(e.line() == 3);
        CHECK(std::string(e.what()).find("line 3") != std::string::npos);
    }
}

TEST_CASE("run_scenario: failing expectation clears passed but still reports") {
    const auto path = write_temp("fail.json", R"({
      "name": "failing", "seed": 3,
      "fiber": {"dim": 1, "sizes": [16], "lengths": [6.283185307179586]},
      "model": {"family": "lorentzian_product"},
      "tasks": [
        {"type": "classify", "t_range": [-1, 1],
         "expect": {"kind": "transition"}}
      ]
    })");
    RunOptions opts;
    opts.write_files = false;
    opts.quiet = true;
    const RunReport r = run_scenario(path, opts);
    CHECK(!r.passed);
    REQUIRE(r.assertions.size() == 1);
    CHECK(r.assertions[0].actual == "static");
}

TEST_CASE("run_suite: failing scenario does not abort the others") {
    const auto dir = std::filesystem::temp_directory_path() / "maxslice_suite_test";
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    {
        std::ofstream(dir / "a_pass.json") << kClassifyScenario;
        std::ofstream(dir / "b_fail.json") << R"({
          "name": "b_fail", "fiber": {"dim": 1, "sizes": [16], "lengths": [6.283185307179586]},
          "model": {"family": "lorentzian_product"},
          "tasks": [{"type": "classify", "t_range": [-1, 1], "expect": {"kind": "transition"}}]
        })";
    }
    RunOptions opts;
    opts.quiet = true;
    opts.out_dir = dir / "out";
    const SuiteReport suite = run_suite(dir, opts);
    CHECK(!suite.passed);
    CHECK(suite.scenarios.size() == 2);
    CHECK(suite.hard_errors.empty());
    // output files exist for both
    CHECK(std::filesystem::exists(dir / "out" / "gauss_classify" / "report.json"));
    CHECK(std::filesystem::exists(dir / "out" / "b_fail" / "table.csv"));
}

TEST_CASE("observed_order: floor short-circuit") {
    CHECK(observed_order(1e-3, 2.5e-4) == doctest::Approx(2.0));
    CHECK(observed_order(1e-14, 1e-15, 1e-12) == 99.0);
    CHECK(observed_order(4e-4, 1e-13, 1e-12) == 99.0);
}
