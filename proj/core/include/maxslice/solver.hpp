/// @file solver.hpp
/// @brief Solvers for the maximal hypersurface equation H(u) = 0 and the
///        prescribed conformal-curvature equation, plus deterministic
///        band-limited random initializations.
///
/// The Newton path uses a finite-difference Jacobian with stencil-limited
/// graph coloring, a sparse LU factorization, Armijo backtracking on
/// (1/2)||H||^2, and a hard spacelike guard: trial steps are rejected
/// (never penalized) until the graph keeps a margin above the floor.
/// Non-existence is reported heuristically from a sustained monotone drift
/// of mean(u) toward the interval boundary while the residual stagnates.

#pragma once

#include <cstdint>
#include <vector>

#include "maxslice/graph_geometry.hpp"

namespace maxslice {

struct SolverParams {
    double tol_residual = 1e-9;   // on ||residual||_inf
    double tol_step = 1e-10;      // on ||delta u||_inf
    int max_newton = 200;
    int max_flow = 20000;
    double damping_init = 1.0;
    double backtrack = 0.5;
    double armijo = 1e-4;
    int max_backtracks = 45;
    double margin_floor_frac = 0.1;   // fraction of the initial spacelike margin
    double jacobian_perturb = 1e-6;   // relative FD perturbation
    double step_cap = 10.0;           // trust-region style cap on |delta|_inf
    double flow_cfl = 0.45;
    double flow_weight_floor = 1e-3;
    int drift_window = 50;            // accepted steps for the non-existence check
    double drift_residual_drop = 0.01;
    double drift_min = 1e-3;          // minimum |mean drift| over the window
    double slice_tol = 1e-6;
    double step_floor = 1e-14;        // flow step collapse => Stalled
};

enum class SolveStatus {
    Converged,
    NoSolutionDetected,
    MaxIters,
    LostSpacelike,
    Stalled,
};
const char* status_name(SolveStatus s);

enum class GraphClass { Slice, NonSlice };
const char* class_name(GraphClass c);

struct SolverReport {
    SolveStatus status = SolveStatus::MaxIters;
    int iterations = 0;
    std::vector<double> residual_history;  // ||residual||_inf per accepted iterate
    std::vector<double> margin_history;
    std::vector<double> mean_history;      // drift trajectory of mean(u)
    GraphClass classification = GraphClass::NonSlice;
    double t0 = 0.0;               // mean of the final u
    double slice_deviation = 0.0;  // sup |u - mean(u)|
    double final_residual = 0.0;
};

struct SolveResult {
    SpacelikeGraph graph;
    SolverReport report;
};

/// Damped Newton on the node-wise mean-curvature residual.
/// Throws NotSpacelike when u0 is not spacelike and SingularSystem when the
/// Jacobian stays singular beyond the damping rescue.
SolveResult solve_maximal(const SpacetimeModel& model, const ScalarField& u0,
                          const SolverParams& params = {});

/// Prescribed-curvature equation over a GRW base: solves
///   Htilde(u) - e^{-alpha} g_F(D alpha, D u) / (f(u) sqrt(f(u)^2 - |Du|^2)) = 0
/// with Htilde the conformal mean curvature of the graph in
/// e^{2 alpha}(-dt^2 + f^2 g_F), computed through the conformal relation.
SolveResult solve_prescribed(const SpacetimeModel& grw_model, const ScalarField& alpha,
                             const ScalarField& u0, const SolverParams& params = {});

/// Explicit pseudo-time relaxation u <- u + dt W(u) H(u) with a positive
/// node weight keeping updates well-scaled near the light cone.
SolveResult flow_relax(const SpacetimeModel& model, const ScalarField& u0,
                       const SolverParams& params = {});

/// Band-limited trigonometric noise, modes 1..max_mode per axis, normalized
/// to unit sup norm. Deterministic in `seed`.
ScalarField band_limited_noise(const FiberGrid& grid, std::uint64_t seed, int max_mode = 3);

/// center + 0.25 * (local spacelike budget) * noise: the amplitude is the
/// given fraction of the largest scaling that keeps the graph spacelike
/// (and inside the model interval).
ScalarField random_spacelike_init(const SpacetimeModel& model, const FiberGrid& grid,
                                  double center, std::uint64_t seed, int max_mode = 3,
                                  double amplitude_frac = 0.25);

}  // namespace maxslice
