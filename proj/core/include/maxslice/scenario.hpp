/// @file scenario.hpp
/// @brief Declarative scenario runner: builds models from a structured JSON
///        file, executes classification / solve / identity / refinement
///        tasks, and emits a JSON report plus a flat CSV table.
///
/// CSV columns are fixed: scenario, seed, status, final_residual,
/// slice_deviation, t0, iterations -- one row per solver initialization.
/// Numeric values print with 17 significant digits; identical scenario and
/// seed give byte-identical CSV bodies.

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "maxslice/solver.hpp"

namespace maxslice {

struct RunOptions {
    std::filesystem::path out_dir = "out";
    std::optional<std::uint64_t> seed_override;
    std::optional<std::array<int, 2>> grid_override;  // [nx, ny]; ny ignored in 1-D
    bool quiet = false;
    bool write_files = true;
};

struct Assertion {
    std::string name;
    bool passed = false;
    std::string expected;
    std::string actual;
};

struct RunReport {
    std::string scenario;
    bool passed = false;
    std::vector<Assertion> assertions;
    std::string report_json;  // serialized report (schema_version inside)
    std::string table_csv;    // deterministic CSV body
    double wall_time_seconds = 0.0;
};

/// Executes one scenario file. Writes <out>/<name>/report.json and
/// <out>/<name>/table.csv atomically unless options.write_files is false.
/// Throws ParseError on malformed files; assertion failures only clear
/// `passed`.
RunReport run_scenario(const std::filesystem::path& scenario_file,
                       const RunOptions& options = {});

struct SuiteReport {
    std::vector<RunReport> scenarios;
    std::vector<std::string> hard_errors;  // files that failed to run at all
    bool passed = false;
    std::string summary;  // printable table
};

/// Runs every *.json scenario under `dir` (sorted by filename). Scenario
/// assertion failures do not abort the remaining scenarios; hard errors are
/// collected and reported. Parallelism is capped by MAXSLICE_THREADS.
SuiteReport run_suite(const std::filesystem::path& dir, const RunOptions& options = {});

// ---- reusable pieces (also used by the acceptance suite) ---------------------

/// Builds a model from its scenario JSON snippet (family + expressions).
SpacetimeModel model_from_json(const std::string& json_text);

/// Sample a fiber-expression (variables x, y) into a field.
ScalarField sample_fiber_expression(const Expr& e, const FiberGrid& grid);

/// Boosted totally-geodesic initial graph u(x) = atanh(c cos(2 pi x / L)),
/// the tilted slice family of the cosh-warp model over a circle fiber.
ScalarField boosted_slice_init(const FiberGrid& grid, double tilt);

/// Observed convergence order between consecutive refinement errors, with a
/// floor below which errors count as converged (returns 99).
double observed_order(double err_coarse, double err_fine, double floor = 1e-12);

struct IdentityReport {
    double time_gradient_max = 0.0;       // gradient relation residual
    double normal_unit_max = 0.0;         // |g(N,N)+1| and orthogonality
    double divergence_theorem_max = 0.0;  // |integral of div X| (normalized)
    double self_adjoint_max = 0.0;        // |<Lap f, h> - <f, Lap h>| (normalized)
    double conformal_relation_max = 0.0;  // relation vs direct rescale
    double split_laplacian_max = 0.0;     // split vs direct time Laplacian
};

/// Runs the identity battery on one spacelike graph. `alpha_seeds` controls
/// how many random conformal factors are tested.
IdentityReport run_identity_checks(const SpacelikeGraph& graph, int alpha_seeds,
                                   std::uint64_t seed);

}  // namespace maxslice
