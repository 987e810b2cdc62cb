#pragma once

// Time-dependent harmonic oscillator: invariant-based (Ermakov) inverse
// engineering and counterdiabatic tracking, expressed as quadratic forms
//   c_pp p^2 + c_qq q^2 + c_pq (pq + qp).

#include <cmath>
#include <vector>

#include "stakit/common.hpp"
#include "stakit/curves.hpp"

namespace stakit {

struct QuadraticForm {
    double c_pp = 0.0;
    double c_qq = 0.0;
    double c_pq = 0.0;

    friend QuadraticForm operator+(QuadraticForm a, const QuadraticForm& b) {
        return {a.c_pp + b.c_pp, a.c_qq + b.c_qq, a.c_pq + b.c_pq};
    }
    friend QuadraticForm operator-(QuadraticForm a, const QuadraticForm& b) {
        return {a.c_pp - b.c_pp, a.c_qq - b.c_qq, a.c_pq - b.c_pq};
    }
    friend QuadraticForm operator*(double s, const QuadraticForm& a) { return {s * a.c_pp, s * a.c_qq, s * a.c_pq}; }
    friend bool operator==(const QuadraticForm&, const QuadraticForm&) = default;
};

/// Ordinary oscillator p^2/2m + m w^2 q^2/2 (w^2 may be negative).
inline QuadraticForm oscillator_form(double omega_squared) {
    return {1.0 / (2.0 * kMass), kMass * omega_squared / 2.0, 0.0};
}

struct ErmakovDesign {
    double omega0 = 1.0;
    double omega_f = 1.0;
    double t_f = 1.0;
    PolynomialCurve b;  ///< scaling factor
};

/// b(0)=1, b(t_f)=sqrt(omega0/omega_f); first and second derivatives vanish at both ends.
inline std::vector<BoundaryConstraint> standard_boundary_constraints(double omega0, double omega_f, double t_f) {
    if (!(omega0 > 0.0) || !(omega_f > 0.0) || !(t_f > 0.0))
        fail_input("oscillator design: omega0, omega_f and t_f must be positive");
    const double b_f = std::sqrt(omega0 / omega_f);
    return {
        {0.0, 0, 1.0}, {0.0, 1, 0.0}, {0.0, 2, 0.0},
        {t_f, 0, b_f}, {t_f, 1, 0.0}, {t_f, 2, 0.0},
    };
}

inline ErmakovDesign make_ermakov_design(double omega0, double omega_f, double t_f, int degree = 5) {
    const auto constraints = standard_boundary_constraints(omega0, omega_f, t_f);
    return {omega0, omega_f, t_f, fit_polynomial(constraints, degree)};
}

namespace detail {
inline double checked_b(const ErmakovDesign& d, double t) {
    const double b = d.b(t);
    if (!(b > 0.0)) fail_input("scaling factor non-positive");
    return b;
}
}  // namespace detail

/// omega^2(t) = omega0^2/b^4 - b''/b, from the Ermakov equation. Signed.
inline double omega_squared(const ErmakovDesign& d, double t) {
    const double b = detail::checked_b(d, t);
    return d.omega0 * d.omega0 / (b * b * b * b) - d.b(t, 2) / b;
}

/// |b'' + omega^2 b - omega0^2/b^3|.
inline double ermakov_residual(const ErmakovDesign& d, double t) {
    const double b = detail::checked_b(d, t);
    return std::abs(d.b(t, 2) + omega_squared(d, t) * b - d.omega0 * d.omega0 / (b * b * b));
}

/// I(t) = [pi^2/m + m omega0^2 q^2/b^2]/2 with pi = b p - m b' q.
inline QuadraticForm invariant_form(const ErmakovDesign& d, double t) {
    const double b = detail::checked_b(d, t);
    const double bd = d.b(t, 1);
    return {b * b / (2.0 * kMass), kMass * (d.omega0 * d.omega0 / (b * b) + bd * bd) / 2.0, -b * bd / 2.0};
}

inline QuadraticForm hamiltonian_form(const ErmakovDesign& d, double t) {
    return oscillator_form(omega_squared(d, t));
}

struct SplitForms {
    QuadraticForm h0;
    QuadraticForm h1;
};

/// H0 = lambda(t) I(t) is the reference Hamiltonian implied by the invariant;
/// H1 is the remainder H - H0.
inline SplitForms h0_h1_split(const ErmakovDesign& d, double t) {
    const double b = detail::checked_b(d, t);
    const double bd = d.b(t, 1);
    const double bdd = d.b(t, 2);
    const double lambda = 1.0 / (b * b) + (bd * bd - bdd * b) / (2.0 * d.omega0 * d.omega0);
    const QuadraticForm h0 = lambda * invariant_form(d, t);
    return {h0, hamiltonian_form(d, t) - h0};
}

/// alpha_n(t) = -(n + 1/2) omega0 * integral_0^t dt'/b^2.
inline double lr_phase_ho(const ErmakovDesign& d, int n, double t) {
    if (n < 0) fail_input("level index must be non-negative");
    if (t < 0.0 || t > d.t_f * (1.0 + 1e-12)) fail_input("time outside [0, t_f]");
    const double integral = integrate_function(
        [&](double s) {
            const double b = detail::checked_b(d, s);
            return 1.0 / (b * b);
        },
        0.0, t, 4096);
    return -(n + 0.5) * d.omega0 * integral;
}

struct TrapInversionReport {
    double min_omega_squared = 0.0;
    double t_at_min = 0.0;
    bool inverted = false;
    std::vector<std::pair<double, double>> intervals;  ///< [start, end] node times with omega^2 < 0
};

inline TrapInversionReport trap_inversion(const ErmakovDesign& d, const TimeGrid& grid) {
    TrapInversionReport r;
    r.min_omega_squared = omega_squared(d, grid[0]);
    bool open = false;
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const double w2 = omega_squared(d, grid[i]);
        if (w2 < r.min_omega_squared) {
            r.min_omega_squared = w2;
            r.t_at_min = grid[i];
        }
        if (w2 < 0.0 && !open) {
            r.intervals.push_back({grid[i], grid[i]});
            open = true;
        }
        if (w2 < 0.0) r.intervals.back().second = grid[i];
        if (w2 >= 0.0) open = false;
    }
    r.inverted = r.min_omega_squared < 0.0;
    return r;
}

// ---------------------------------------------------------------------------
// Counterdiabatic (transitionless tracking) route.

/// Reference frequency schedule omega(t) for the tracking Hamiltonian.
struct OmegaRamp {
    PolynomialCurve omega;
    double t_f = 1.0;
};

/// Quintic ramp omega0 -> omega_f with vanishing first and second derivatives at both ends.
inline OmegaRamp make_omega_ramp(double omega0, double omega_f, double t_f) {
    if (!(omega0 > 0.0) || !(omega_f > 0.0) || !(t_f > 0.0))
        fail_input("omega ramp: omega0, omega_f and t_f must be positive");
    const std::vector<BoundaryConstraint> c = {
        {0.0, 0, omega0}, {0.0, 1, 0.0}, {0.0, 2, 0.0},
        {t_f, 0, omega_f}, {t_f, 1, 0.0}, {t_f, 2, 0.0},
    };
    return {fit_polynomial(c, 5), t_f};
}

namespace detail {
inline double checked_omega(const OmegaRamp& r, double t) {
    const double w = r.omega(t);
    if (!(w > 0.0)) fail_input("reference frequency non-positive");
    return w;
}
}  // namespace detail

/// H0(t): the plain oscillator at the reference frequency.
inline QuadraticForm berry_ho_reference(const OmegaRamp& r, double t) {
    const double w = detail::checked_omega(r, t);
    return oscillator_form(w * w);
}

/// H0 + H1 with H1 = -(omega'/4 omega)(pq + qp).
inline QuadraticForm berry_ho_hamiltonian(const OmegaRamp& r, double t) {
    const double w = detail::checked_omega(r, t);
    QuadraticForm h = oscillator_form(w * w);
    h.c_pq = -r.omega(t, 1) / (4.0 * w);
    return h;
}

/// I(t) = (omega0/omega(t)) H0(t).
inline QuadraticForm berry_ho_invariant(const OmegaRamp& r, double t) {
    const double w = detail::checked_omega(r, t);
    const double w0 = detail::checked_omega(r, 0.0);
    return (w0 / w) * oscillator_form(w * w);
}

}  // namespace stakit
