/// @file fiber_calculus.hpp
/// @brief Metric-aware discrete calculus on periodic fiber grids.
///
/// All operators use second-order central differences with metrics sampled
/// at nodes. The divergence is built as the exact negative adjoint of the
/// gradient under the quadrature inner product with volume density
/// sqrt(det g), so the discrete divergence theorem holds to machine
/// precision on the closed fiber and the Laplace-Beltrami operator
/// div(grad(.)) is symmetric negative semidefinite.

#pragma once

#include "maxslice/grid.hpp"

namespace maxslice {

/// Central-difference partial derivative along one axis (periodic).
ScalarField partial(const ScalarField& f, int axis);

/// Metric gradient g^{ij} d_j f (contravariant components).
VectorField gradient(const ScalarField& f, const SymTensorField& g);

/// Divergence (1/sqrt g) d_i (sqrt g X^i); exact adjoint of -gradient.
ScalarField divergence(const VectorField& X, const SymTensorField& g);

/// Laplace-Beltrami operator, divergence of the metric gradient.
ScalarField laplace_beltrami(const ScalarField& f, const SymTensorField& g);

/// Quadrature: node sum of f * sqrt(det g) * cell volume.
double integrate(const ScalarField& f, const SymTensorField& g);

/// Quadrature inner product <f, h> with volume density sqrt(det g).
double inner_product(const ScalarField& f, const ScalarField& h,
                     const SymTensorField& g);

}  // namespace maxslice
