/// @file grid.hpp
/// @brief Periodic structured grids over compact fibers and the field types
///        sampled on them.
///
/// A FiberGrid discretizes a flat-chart torus of dimension 1 or 2: axis `a`
/// carries `sizes[a]` nodes over a period `lengths[a]`, node coordinates are
/// x_a(i) = i * spacing_a, and indexing wraps around. Vector fields store
/// contravariant components; symmetric 2-tensors store the packed lower
/// triangle (xx) in 1-D and (xx, xy, yy) in 2-D.

#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <vector>

#include "maxslice/errors.hpp"

namespace maxslice {

/// Packed symmetric matrix value at a single node (dim 1 or 2).
struct SymMat {
    int dim = 1;
    std::array<double, 3> a{0.0, 0.0, 0.0};  // 1-D: [xx]; 2-D: [xx, xy, yy]

    static SymMat identity(int dim) {
        SymMat m;
        m.dim = dim;
        m.a = {1.0, 0.0, dim == 2 ? 1.0 : 0.0};
        return m;
    }

    double det() const {
        return dim == 1 ? a[0] : a[0] * a[2] - a[1] * a[1];
    }

    bool positive_definite() const {
        if (dim == 1) return a[0] > 0.0;
        return a[0] > 0.0 && det() > 0.0;
    }

    SymMat inverse() const {
        SymMat m;
        m.dim = dim;
        if (dim == 1) {
            m.a[0] = 1.0 / a[0];
        } else {
            const double d = det();
            m.a[0] = a[2] / d;
            m.a[1] = -a[1] / d;
            m.a[2] = a[0] / d;
        }
        return m;
    }

    /// Quadratic form v^T M v for a dim-component vector.
    double quad(const double* v) const {
        if (dim == 1) return a[0] * v[0] * v[0];
        return a[0] * v[0] * v[0] + 2.0 * a[1] * v[0] * v[1] + a[2] * v[1] * v[1];
    }

    /// Smallest eigenvalue (closed form for dim <= 2).
    double eig_min() const {
        if (dim == 1) return a[0];
        const double mean = 0.5 * (a[0] + a[2]);
        const double rad = std::hypot(0.5 * (a[0] - a[2]), a[1]);
        return mean - rad;
    }

    double eig_max() const {
        if (dim == 1) return a[0];
        const double mean = 0.5 * (a[0] + a[2]);
        const double rad = std::hypot(0.5 * (a[0] - a[2]), a[1]);
        return mean + rad;
    }

    /// Frobenius-like magnitude used for scale-free tolerances.
    double norm() const {
        if (dim == 1) return std::abs(a[0]);
        return std::sqrt(a[0] * a[0] + 2.0 * a[1] * a[1] + a[2] * a[2]);
    }

    SymMat scaled(double s) const {
        SymMat m = *this;
        for (auto& c : m.a) c *= s;
        return m;
    }

    double& operator()(int i, int j) { return a[pack(i, j)]; }
    double operator()(int i, int j) const { return a[pack(i, j)]; }

    static int pack(int i, int j) { return i + j; }  // valid for dim <= 2

    friend bool operator==(const SymMat&, const SymMat&) = default;
};

/// Periodic structured grid on a 1- or 2-torus chart.
class FiberGrid {
public:
    FiberGrid(int dim, std::array<int, 2> sizes, std::array<double, 2> lengths)
        : dim_(dim), sizes_(sizes), lengths_(lengths) {
        if (dim != 1 && dim != 2)
            throw Error("FiberGrid: dim must be 1 or 2");
        for (int a = 0; a < dim_; ++a) {
            if (sizes_[a] < 8)
                throw Error("FiberGrid: all sizes must be >= 8");
            if (!(lengths_[a] > 0.0))
                throw Error("FiberGrid: periods must be positive");
            spacings_[a] = lengths_[a] / sizes_[a];
        }
        if (dim_ == 1) {
            sizes_[1] = 1;
            lengths_[1] = 0.0;
            spacings_[1] = 0.0;
        }
        node_count_ = sizes_[0] * sizes_[1];
    }

    static FiberGrid line(int n, double length) {
        return FiberGrid(1, {n, 1}, {length, 0.0});
    }
    static FiberGrid torus(int nx, int ny, double lx, double ly) {
        return FiberGrid(2, {nx, ny}, {lx, ly});
    }

    int dim() const { return dim_; }
    int size(int axis) const { return sizes_[axis]; }
    double length(int axis) const { return lengths_[axis]; }
    double spacing(int axis) const { return spacings_[axis]; }
    int node_count() const { return node_count_; }

    /// Cell volume of the reference chart (product of spacings).
    double cell_volume() const {
        return dim_ == 1 ? spacings_[0] : spacings_[0] * spacings_[1];
    }

    int index(int i, int j = 0) const { return i + sizes_[0] * j; }

    void decompose(int node, int& i, int& j) const {
        i = node % sizes_[0];
        j = node / sizes_[0];
    }

    /// Node shifted by `offset` cells along `axis`, with periodic wrap.
    int neighbor(int node, int axis, int offset) const {
        int i, j;
        decompose(node, i, j);
        if (axis == 0) {
            i = wrap(i + offset, sizes_[0]);
        } else {
            j = wrap(j + offset, sizes_[1]);
        }
        return index(i, j);
    }

    /// Coordinates of a node in the periodic chart.
    void coords(int node, double* x) const {
        int i, j;
        decompose(node, i, j);
        x[0] = i * spacings_[0];
        if (dim_ == 2) x[1] = j * spacings_[1];
    }

    friend bool operator==(const FiberGrid& a, const FiberGrid& b) {
        return a.dim_ == b.dim_ && a.sizes_ == b.sizes_ && a.lengths_ == b.lengths_;
    }

private:
    static int wrap(int i, int n) {
        i %= n;
        return i < 0 ? i + n : i;
    }

    int dim_;
    std::array<int, 2> sizes_;
    std::array<double, 2> lengths_;
    std::array<double, 2> spacings_{0.0, 0.0};
    int node_count_;
};

/// Scalar samples at every grid node.
class ScalarField {
public:
    explicit ScalarField(const FiberGrid& grid, double fill = 0.0)
        : grid_(grid), values_(static_cast<size_t>(grid.node_count()), fill) {}

    const FiberGrid& grid() const { return grid_; }
    double& operator[](int node) { return values_[static_cast<size_t>(node)]; }
    double operator[](int node) const { return values_[static_cast<size_t>(node)]; }
    int size() const { return static_cast<int>(values_.size()); }
    std::vector<double>& values() { return values_; }
    const std::vector<double>& values() const { return values_; }

    double max_abs() const {
        double m = 0.0;
        for (double v : values_) m = std::max(m, std::abs(v));
        return m;
    }
    double min() const {
        double m = values_.empty() ? 0.0 : values_[0];
        for (double v : values_) m = std::min(m, v);
        return m;
    }
    double max() const {
        double m = values_.empty() ? 0.0 : values_[0];
        for (double v : values_) m = std::max(m, v);
        return m;
    }
    double mean() const {
        double s = 0.0;
        for (double v : values_) s += v;
        return values_.empty() ? 0.0 : s / static_cast<double>(values_.size());
    }

private:
    FiberGrid grid_;
    std::vector<double> values_;
};

/// Contravariant vector samples (one component field per fiber axis).
class VectorField {
public:
    explicit VectorField(const FiberGrid& grid) : grid_(grid) {
        for (int a = 0; a < grid.dim(); ++a)
            comp_[a].assign(static_cast<size_t>(grid.node_count()), 0.0);
    }

    const FiberGrid& grid() const { return grid_; }
    double& at(int axis, int node) { return comp_[axis][static_cast<size_t>(node)]; }
    double at(int axis, int node) const { return comp_[axis][static_cast<size_t>(node)]; }

private:
    FiberGrid grid_;
    std::array<std::vector<double>, 2> comp_;
};

/// Symmetric 2-tensor samples, packed per node like SymMat.
class SymTensorField {
public:
    explicit SymTensorField(const FiberGrid& grid) : grid_(grid) {
        const int n = grid.dim() == 1 ? 1 : 3;
        for (int c = 0; c < n; ++c)
            comp_[c].assign(static_cast<size_t>(grid.node_count()), 0.0);
        ncomp_ = n;
    }

    static SymTensorField constant(const FiberGrid& grid, const SymMat& m) {
        SymTensorField f(grid);
        for (int node = 0; node < grid.node_count(); ++node) f.set(node, m);
        return f;
    }

    const FiberGrid& grid() const { return grid_; }
    int components() const { return ncomp_; }

    double& comp(int c, int node) { return comp_[c][static_cast<size_t>(node)]; }
    double comp(int c, int node) const { return comp_[c][static_cast<size_t>(node)]; }

    SymMat at(int node) const {
        SymMat m;
        m.dim = grid_.dim();
        m.a[0] = comp_[0][static_cast<size_t>(node)];
        if (ncomp_ == 3) {
            m.a[1] = comp_[1][static_cast<size_t>(node)];
            m.a[2] = comp_[2][static_cast<size_t>(node)];
        }
        return m;
    }

    void set(int node, const SymMat& m) {
        comp_[0][static_cast<size_t>(node)] = m.a[0];
        if (ncomp_ == 3) {
            comp_[1][static_cast<size_t>(node)] = m.a[1];
            comp_[2][static_cast<size_t>(node)] = m.a[2];
        }
    }

    /// Throws DegenerateMetric unless every node is positive definite.
    void require_metric(const char* who) const {
        for (int node = 0; node < grid_.node_count(); ++node) {
            if (!at(node).positive_definite())
                throw DegenerateMetric(std::string(who) +
                                       ": metric not positive definite at node " +
                                       std::to_string(node));
        }
    }

private:
    FiberGrid grid_;
    int ncomp_ = 1;
    std::array<std::vector<double>, 3> comp_;
};

}  // namespace maxslice
