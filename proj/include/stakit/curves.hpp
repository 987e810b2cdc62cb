#pragma once

// Polynomial ansatz curves, Hermite-Birkhoff fitting and uniform-grid quadrature.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "stakit/common.hpp"

namespace stakit {

/// Uniform time grid on [0, t_f].
class TimeGrid {
public:
    TimeGrid(double t_f, std::size_t n_samples) : t_f_(t_f) {
        if (!(t_f > 0.0) || !std::isfinite(t_f)) fail_input("time grid: t_f must be positive");
        if (n_samples < 2) fail_input("time grid: need at least 2 samples");
        nodes_.resize(n_samples);
        const double h = t_f / static_cast<double>(n_samples - 1);
        for (std::size_t i = 0; i < n_samples; ++i) nodes_[i] = h * static_cast<double>(i);
        nodes_.back() = t_f;
    }

    double t_f() const noexcept { return t_f_; }
    std::size_t size() const noexcept { return nodes_.size(); }
    double spacing() const noexcept { return t_f_ / static_cast<double>(nodes_.size() - 1); }
    double operator[](std::size_t i) const { return nodes_[i]; }
    const std::vector<double>& nodes() const noexcept { return nodes_; }

private:
    double t_f_;
    std::vector<double> nodes_;
};

/// p(t) = sum_j c_j t^j. Derivatives are taken term by term.
class PolynomialCurve {
public:
    PolynomialCurve() : coeffs_{0.0} {}
    explicit PolynomialCurve(std::vector<double> coefficients) : coeffs_(std::move(coefficients)) {
        if (coeffs_.empty()) coeffs_.push_back(0.0);
    }

    static PolynomialCurve constant(double c) { return PolynomialCurve({c}); }

    const std::vector<double>& coefficients() const noexcept { return coeffs_; }
    int degree() const noexcept { return static_cast<int>(coeffs_.size()) - 1; }

    double operator()(double t, int order = 0) const {
        if (order < 0) fail_input("polynomial: negative derivative order");
        const int d = degree();
        if (order > d) return 0.0;
        // Horner on the differentiated coefficients c_j * j!/(j-order)!.
        double acc = 0.0;
        for (int j = d; j >= order; --j) {
            double falling = 1.0;
            for (int k = 0; k < order; ++k) falling *= static_cast<double>(j - k);
            acc = acc * t + coeffs_[static_cast<std::size_t>(j)] * falling;
        }
        return acc;
    }

    PolynomialCurve derivative() const {
        if (degree() == 0) return constant(0.0);
        std::vector<double> d(coeffs_.size() - 1);
        for (std::size_t j = 1; j < coeffs_.size(); ++j) d[j - 1] = coeffs_[j] * static_cast<double>(j);
        return PolynomialCurve(std::move(d));
    }

private:
    std::vector<double> coeffs_;
};

inline double eval(const PolynomialCurve& curve, double t, int order = 0) { return curve(t, order); }

struct BoundaryConstraint {
    double time = 0.0;
    int derivative_order = 0;
    double value = 0.0;
};

/// Solves the Vandermonde-with-derivatives system for a degree-`degree` polynomial.
/// Times are rescaled by the largest constraint time before the pivoted solve.
inline PolynomialCurve fit_polynomial(std::span<const BoundaryConstraint> constraints, int degree) {
    if (degree < 0 || constraints.size() != static_cast<std::size_t>(degree) + 1)
        fail_input("degree/constraint mismatch");
    for (std::size_t a = 0; a < constraints.size(); ++a) {
        if (constraints[a].derivative_order < 0 || !std::isfinite(constraints[a].time) ||
            !std::isfinite(constraints[a].value))
            fail_input("degenerate constraint set");
        for (std::size_t b = a + 1; b < constraints.size(); ++b)
            if (constraints[a].time == constraints[b].time &&
                constraints[a].derivative_order == constraints[b].derivative_order)
                fail_input("degenerate constraint set");
    }

    double scale = 0.0;
    for (const auto& c : constraints) scale = std::max(scale, std::abs(c.time));
    if (scale == 0.0) scale = 1.0;

    const auto n = static_cast<Eigen::Index>(constraints.size());
    Eigen::MatrixXd A = Eigen::MatrixXd::Zero(n, n);
    Eigen::VectorXd rhs(n);
    for (Eigen::Index row = 0; row < n; ++row) {
        const auto& c = constraints[static_cast<std::size_t>(row)];
        const double s = c.time / scale;
        const int r = c.derivative_order;
        for (int j = r; j < n; ++j) {
            double falling = 1.0;
            for (int k = 0; k < r; ++k) falling *= static_cast<double>(j - k);
            A(row, j) = falling * std::pow(s, j - r);
        }
        rhs(row) = c.value * std::pow(scale, r);
    }

    Eigen::FullPivLU<Eigen::MatrixXd> lu(A);
    lu.setThreshold(1e-12);
    if (!lu.isInvertible()) fail_input("degenerate constraint set");
    const Eigen::VectorXd scaled = lu.solve(rhs);

    std::vector<double> coeffs(static_cast<std::size_t>(n));
    for (Eigen::Index j = 0; j < n; ++j)
        coeffs[static_cast<std::size_t>(j)] = scaled(j) / std::pow(scale, static_cast<double>(j));
    PolynomialCurve curve(std::move(coeffs));

    for (const auto& c : constraints) {
        const double got = curve(c.time, c.derivative_order);
        if (!(std::abs(got - c.value) <= 1e-10 * std::max(1.0, std::abs(c.value))))
            fail_input("degenerate constraint set");
    }
    return curve;
}

inline PolynomialCurve fit_polynomial(std::initializer_list<BoundaryConstraint> constraints, int degree) {
    return fit_polynomial(std::span<const BoundaryConstraint>(constraints.begin(), constraints.size()), degree);
}

/// Scalar samples on the nodes of a TimeGrid.
struct SampledScalar {
    TimeGrid grid;
    std::vector<double> values;

    SampledScalar(TimeGrid g, std::vector<double> v) : grid(std::move(g)), values(std::move(v)) {
        if (values.size() != grid.size()) fail_input("sampled scalar: one value per node required");
    }

    template <class F>
    static SampledScalar sample(const TimeGrid& grid, F&& f) {
        std::vector<double> v(grid.size());
        for (std::size_t i = 0; i < grid.size(); ++i) v[i] = f(grid[i]);
        return SampledScalar(grid, std::move(v));
    }
};

/// Quadrature weights for n_points equally spaced samples with spacing h.
///
/// Composite Simpson on an even interval count; an odd count closes with
/// Simpson's 3/8 rule over the last three intervals. A single interval uses
/// the four-point Lagrange rule when enough samples are supplied, which keeps
/// every cumulative integral at fourth order.
inline std::vector<double> quadrature_weights(std::size_t n_points, double h, std::size_t available = 0) {
    std::vector<double> w(std::max(n_points, available), 0.0);
    if (n_points < 2) return w;
    const std::size_t k = n_points - 1;  // interval count
    if (k == 1) {
        if (available >= 4) {
            w[0] = 9.0 * h / 24.0;
            w[1] = 19.0 * h / 24.0;
            w[2] = -5.0 * h / 24.0;
            w[3] = 1.0 * h / 24.0;
        } else if (available == 3) {
            w[0] = 5.0 * h / 12.0;
            w[1] = 8.0 * h / 12.0;
            w[2] = -1.0 * h / 12.0;
        } else {
            w[0] = w[1] = 0.5 * h;
        }
        return w;
    }
    const std::size_t simpson_intervals = (k % 2 == 0) ? k : k - 3;
    for (std::size_t i = 0; i + 2 <= simpson_intervals; i += 2) {
        w[i] += h / 3.0;
        w[i + 1] += 4.0 * h / 3.0;
        w[i + 2] += h / 3.0;
    }
    if (k % 2 == 1) {
        const std::size_t i = simpson_intervals;
        w[i] += 3.0 * h / 8.0;
        w[i + 1] += 9.0 * h / 8.0;
        w[i + 2] += 9.0 * h / 8.0;
        w[i + 3] += 3.0 * h / 8.0;
    }
    return w;
}

/// Integral of f from 0 to grid[up_to].
inline double integrate_sampled(const SampledScalar& f, std::size_t up_to) {
    if (up_to >= f.grid.size()) fail_input("integrate_sampled: node index out of range");
    if (up_to == 0) return 0.0;
    const auto w = quadrature_weights(up_to + 1, f.grid.spacing(), f.grid.size());
    double acc = 0.0;
    for (std::size_t i = 0; i < w.size(); ++i) acc += w[i] * f.values[i];
    return acc;
}

/// Integral from 0 to every node.
inline std::vector<double> integrate_cumulative(const SampledScalar& f) {
    std::vector<double> out(f.grid.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = integrate_sampled(f, i);
    return out;
}

/// Uniform-grid integral of a smooth function over [a, b] using `intervals` panels.
template <class F>
double integrate_function(F&& f, double a, double b, std::size_t intervals = 2048) {
    if (b == a) return 0.0;
    const double h = (b - a) / static_cast<double>(intervals);
    const auto w = quadrature_weights(intervals + 1, h);
    double acc = 0.0;
    for (std::size_t i = 0; i <= intervals; ++i) acc += w[i] * f(a + h * static_cast<double>(i));
    return acc;
}

}  // namespace stakit
