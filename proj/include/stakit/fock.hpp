#pragma once

// Truncated Fock-basis representation of quadratic operators, Hermitian
// eigenpairs, oscillator wavefunctions and grid <-> Fock projection.

#include <algorithm>
#include <cmath>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "stakit/common.hpp"
#include "stakit/curves.hpp"
#include "stakit/ho_design.hpp"

namespace stakit {

/// Matrix of a quadratic operator in the number basis of an oscillator at omega_ref.
struct FockOperator {
    Eigen::MatrixXcd entries;
    double omega_ref = 1.0;

    Eigen::Index dimension() const noexcept { return entries.rows(); }
};

/// Ladder matrix elements of c_pp p^2 + c_qq q^2 + c_pq (pq + qp) with
///   q = sqrt(hbar/2 m w)(a + a+),  p = i sqrt(hbar m w/2)(a+ - a),  pq + qp = i hbar (a+^2 - a^2).
/// Entries are computed from the normal-ordered expressions, so every
/// retained element is exact regardless of truncation.
inline FockOperator build_operator(const QuadraticForm& form, Eigen::Index n, double omega_ref) {
    if (n < 4) fail_input("Fock dimension must be at least 4");
    if (!(omega_ref > 0.0)) fail_input("reference frequency must be positive");
    const double p2_scale = kHbar * kMass * omega_ref / 2.0;  // p^2 = p2_scale (2N + 1 - a^2 - a+^2)
    const double q2_scale = kHbar / (2.0 * kMass * omega_ref);  // q^2 = q2_scale (2N + 1 + a^2 + a+^2)
    FockOperator op{Eigen::MatrixXcd::Zero(n, n), omega_ref};
    for (Eigen::Index k = 0; k < n; ++k) {
        const double nk = static_cast<double>(k);
        op.entries(k, k) = (form.c_pp * p2_scale + form.c_qq * q2_scale) * (2.0 * nk + 1.0);
        if (k + 2 < n) {
            const double s = std::sqrt((nk + 1.0) * (nk + 2.0));
            // <k+2| . |k>: real part from p^2, q^2; imaginary from the crossed term.
            const cplx lower{(-form.c_pp * p2_scale + form.c_qq * q2_scale) * s, form.c_pq * kHbar * s};
            op.entries(k + 2, k) = lower;
            op.entries(k, k + 2) = std::conj(lower);
        }
    }
    return op;
}

struct EigenPair {
    double value = 0.0;
    StateVector vector;
};

/// Rotates v so that its largest-magnitude component is real and positive.
inline void fix_phase(StateVector& v) {
    Eigen::Index imax = 0;
    v.cwiseAbs().maxCoeff(&imax);
    const double mag = std::abs(v(imax));
    if (mag > 0.0) {
        v *= std::conj(v(imax)) / mag;
        v(imax) = mag;
    }
}

namespace detail {

inline bool has_parity_structure(const Eigen::MatrixXcd& m) {
    for (Eigen::Index j = 0; j < m.cols(); ++j)
        for (Eigen::Index i = (j + 1) % 2; i < m.rows(); i += 2)
            if (m(i, j) != cplx{}) return false;
    return true;
}

inline std::vector<EigenPair> dense_eigenpairs(const Eigen::MatrixXcd& m) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> solver(m);
    if (solver.info() != Eigen::Success) fail_numeric("Hermitian eigensolver did not converge");
    std::vector<EigenPair> out;
    out.reserve(static_cast<std::size_t>(m.rows()));
    for (Eigen::Index k = 0; k < m.rows(); ++k) out.push_back({solver.eigenvalues()(k), solver.eigenvectors().col(k)});
    return out;
}

}  // namespace detail

/// The k lowest eigenpairs in ascending order.
///
/// Quadratic operators couple only states of equal parity, so when the
/// matrix has that structure the even and odd sectors are solved separately.
inline std::vector<EigenPair> eigenpairs(const FockOperator& op, Eigen::Index k) {
    const Eigen::Index n = op.dimension();
    if (k < 0 || k > n) fail_input("eigenpairs: requested more pairs than the dimension");
    std::vector<EigenPair> all;
    if (n >= 4 && detail::has_parity_structure(op.entries)) {
        for (Eigen::Index parity = 0; parity < 2; ++parity) {
            const Eigen::Index m = (n - parity + 1) / 2;
            Eigen::MatrixXcd block(m, m);
            for (Eigen::Index i = 0; i < m; ++i)
                for (Eigen::Index j = 0; j < m; ++j) block(i, j) = op.entries(2 * i + parity, 2 * j + parity);
            for (auto& p : detail::dense_eigenpairs(block)) {
                StateVector full = StateVector::Zero(n);
                for (Eigen::Index i = 0; i < m; ++i) full(2 * i + parity) = p.vector(i);
                all.push_back({p.value, std::move(full)});
            }
        }
        std::stable_sort(all.begin(), all.end(), [](const EigenPair& a, const EigenPair& b) { return a.value < b.value; });
    } else {
        all = detail::dense_eigenpairs(op.entries);
    }
    all.resize(static_cast<std::size_t>(k));
    for (auto& p : all) fix_phase(p.vector);
    return all;
}

/// psi_0 .. psi_{count-1} of the oscillator at omega, evaluated at x.
///
/// Normalized three-term recurrence; magnitudes are carried with a separate
/// log scale so high orders neither overflow nor lose the Gaussian factor.
inline std::vector<double> hermite_functions(int count, double omega, double x) {
    std::vector<double> out(static_cast<std::size_t>(std::max(count, 0)), 0.0);
    if (count <= 0) return out;
    const double xi = std::sqrt(kMass * omega / kHbar) * x;
    double log_scale = 0.25 * std::log(kMass * omega / (kPi * kHbar)) - 0.5 * xi * xi;
    constexpr double kBig = 1e150;
    const double log_big = std::log(kBig);

    // out[k] temporarily holds the scaled value; scale changes are applied
    // retroactively only to the two entries the recurrence still needs.
    std::vector<double> log_at(out.size());
    double prev = 0.0;
    double cur = 1.0;
    out[0] = cur;
    log_at[0] = log_scale;
    for (int k = 1; k < count; ++k) {
        const double kk = static_cast<double>(k);
        const double next = std::sqrt(2.0 / kk) * xi * cur - std::sqrt((kk - 1.0) / kk) * prev;
        prev = cur;
        cur = next;
        if (std::abs(cur) > kBig) {
            cur /= kBig;
            prev /= kBig;
            log_scale += log_big;
        }
        out[static_cast<std::size_t>(k)] = cur;
        log_at[static_cast<std::size_t>(k)] = log_scale;
    }
    for (std::size_t k = 0; k < out.size(); ++k) {
        const double v = out[k];
        out[k] = v == 0.0 ? 0.0 : std::copysign(std::exp(std::log(std::abs(v)) + log_at[k]), v);
    }
    return out;
}

/// Normalized oscillator eigenfunction (physicists' Hermite convention).
inline double hermite_wavefunction(int n, double omega, double x) {
    if (n < 0) fail_input("level index must be non-negative");
    if (!(omega > 0.0)) fail_input("oscillator frequency must be positive");
    return hermite_functions(n + 1, omega, x)[static_cast<std::size_t>(n)];
}

/// Chirped, scaled eigenmode of the Ermakov invariant:
///   b^{-1/2} psi_n^{omega0}(x/b) exp(i m b' x^2 / (2 hbar b)).
/// The (m omega0/pi hbar)^{1/4} normalization is included, so the mode is unit-norm.
inline cplx invariant_mode_wavefunction(const ErmakovDesign& d, int n, double t, double x) {
    const double b = d.b(t);
    if (!(b > 0.0)) fail_input("scaling factor non-positive");
    const double bd = d.b(t, 1);
    const double amplitude = hermite_wavefunction(n, d.omega0, x / b) / std::sqrt(b);
    return amplitude * std::exp(cplx{0.0, kMass * bd * x * x / (2.0 * kHbar * b)});
}

/// Symmetric uniform grid on [-half_width, half_width] with Simpson-type weights.
struct PositionGrid {
    std::vector<double> x;
    std::vector<double> weights;

    double x_min() const { return x.front(); }
    double x_max() const { return x.back(); }
    std::size_t size() const { return x.size(); }
};

inline PositionGrid make_position_grid(double half_width, std::size_t n_points) {
    if (!(half_width > 0.0) || n_points < 4) fail_input("position grid: need positive width and >= 4 points");
    PositionGrid g;
    g.x.resize(n_points);
    const double h = 2.0 * half_width / static_cast<double>(n_points - 1);
    for (std::size_t i = 0; i < n_points; ++i) g.x[i] = -half_width + h * static_cast<double>(i);
    g.x.back() = half_width;
    g.weights = quadrature_weights(n_points, h);
    return g;
}

/// Default grid for oscillator runs: [-30, 30] oscillator lengths of omega0, 2049 points.
inline PositionGrid default_position_grid(double omega0) {
    return make_position_grid(30.0 * std::sqrt(kHbar / (kMass * omega0)), 2049);
}

struct Projection {
    StateVector state;           ///< renormalized Fock coefficients
    double grid_norm = 0.0;      ///< sum_i w_i |psi_i|^2
    double discarded_norm = 0.0; ///< grid norm of psi - sum_n c_n psi_n
};

inline Projection project_to_fock(std::span<const cplx> samples, const PositionGrid& grid, Eigen::Index n,
                                  double omega_ref) {
    if (n < 4) fail_input("Fock dimension must be at least 4");
    if (samples.size() != grid.size()) fail_input("projection: one sample per grid point required");

    double grid_norm = 0.0;
    double peak = 0.0;
    for (std::size_t i = 0; i < samples.size(); ++i) {
        grid_norm += grid.weights[i] * std::norm(samples[i]);
        peak = std::max(peak, std::abs(samples[i]));
    }
    if (!(grid_norm > 0.0)) fail_input("projection: zero state");
    if (std::abs(samples.front()) > 1e-12 * peak || std::abs(samples.back()) > 1e-12 * peak)
        fail_input("projection: position grid too narrow for the state");

    std::vector<std::vector<double>> table(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) table[i] = hermite_functions(static_cast<int>(n), omega_ref, grid.x[i]);

    StateVector c = StateVector::Zero(n);
    for (std::size_t i = 0; i < grid.size(); ++i)
        for (Eigen::Index k = 0; k < n; ++k) c(k) += grid.weights[i] * table[i][static_cast<std::size_t>(k)] * samples[i];

    double discarded = 0.0;
    for (std::size_t i = 0; i < grid.size(); ++i) {
        cplx r = samples[i];
        for (Eigen::Index k = 0; k < n; ++k) r -= c(k) * table[i][static_cast<std::size_t>(k)];
        discarded += grid.weights[i] * std::norm(r);
    }
    if (discarded > 1e-6 * grid_norm) fail_numeric("truncation insufficient");

    Projection p;
    p.grid_norm = grid_norm;
    p.discarded_norm = discarded;
    p.state = c / c.norm();
    return p;
}

}  // namespace stakit
