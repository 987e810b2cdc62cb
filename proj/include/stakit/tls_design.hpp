#pragma once

// Two-level atom: invariant parameterization by auxiliary angles (gamma, beta),
// inversion to physical controls, Lewis-Riesenfeld phases, endpoint checks and
// the counterdiabatic (transitionless tracking) terms.
//
// Basis ordering follows |2> = (1, 0), |1> = (0, 1):
//   H = (hbar/2) [[Delta, OmegaR e^{i phi}], [OmegaR e^{-i phi}, -Delta]].

#include <algorithm>
#include <cmath>
#include <utility>
#include <vector>

#include "stakit/common.hpp"
#include "stakit/curves.hpp"

namespace stakit {

struct AngleDesign {
    PolynomialCurve gamma;
    PolynomialCurve beta;
    PolynomialCurve phi = PolynomialCurve::constant(0.0);
    double Omega0 = 1.0;
    double t_f = 1.0;
};

/// Physical controls at one instant.
struct ControlPoint {
    double Delta = 0.0;
    double OmegaR = 0.0;
    double phi = 0.0;
};

struct TLSControls {
    SampledScalar Delta;
    SampledScalar OmegaR;
    SampledScalar phi;

    const TimeGrid& grid() const noexcept { return Delta.grid; }
    ControlPoint at(std::size_t node) const { return {Delta.values[node], OmegaR.values[node], phi.values[node]}; }
};

namespace detail {

inline double distance_to_multiple_of_pi(double x) { return std::abs(x - std::round(x / kPi) * kPi); }

// cos(beta - phi) at multiples of pi/2 comes out of libm as ~1e-17, not zero.
inline double snap_zero(double x) { return std::abs(x) < 1e-15 ? 0.0 : x; }

// gamma(t) - n pi near an endpoint where gamma is pinned at n pi. Summing the
// Taylor series about that endpoint keeps the small offset to full relative
// precision; gamma(t) - n pi cancels catastrophically and sin(gamma) with it.
inline double offset_from_pole(const PolynomialCurve& g, double t, double t_f, double n_pi) {
    const double a = (t < 0.5 * t_f) ? 0.0 : t_f;
    double base = g(a) - n_pi;
    if (std::abs(base) > 1e-12) return g(t) - n_pi;
    base = 0.0;  // pinned endpoint, rounding noise only
    const double dt = t - a;
    double acc = 0.0, pw = 1.0, fact = 1.0;
    for (int j = 1; j <= g.degree(); ++j) {
        pw *= dt;
        fact *= j;
        acc += g(a, j) / fact * pw;
    }
    return base + acc;
}

inline ControlPoint fold_sign(ControlPoint c) {
    if (c.OmegaR < 0.0) {
        c.OmegaR = -c.OmegaR;
        c.phi += kPi;
    }
    return c;
}

}  // namespace detail

/// Controls realizing the invariant of `d` at time t:
///   OmegaR = gamma' / sin(beta - phi),
///   Delta  = OmegaR cot(gamma) cos(beta - phi) - beta'.
/// Where gamma sits at a multiple of pi with gamma' ~ 0 the cot(gamma) factor
/// diverges; Delta is then taken from its series limit -k (beta' - phi') - beta',
/// with k the order of the first non-vanishing derivative of gamma.
inline ControlPoint controls_at(const AngleDesign& d, double t) {
    const double g = d.gamma(t);
    const double gd = d.gamma(t, 1);
    const double bd = d.beta(t, 1);
    const double u = d.beta(t) - d.phi(t);
    const double ud = bd - d.phi(t, 1);
    const double su = std::sin(u);
    const double cu = detail::snap_zero(std::cos(u));

    ControlPoint c;
    c.phi = d.phi(t);
    if (std::abs(su) < 1e-12) {
        if (std::abs(gd) > 1e-12) fail_input("ansatz singularity: infinite Rabi frequency");
        c.OmegaR = 0.0;
    } else {
        c.OmegaR = gd / su;
    }

    const bool at_pole = detail::distance_to_multiple_of_pi(g) <= 1e-6 && std::abs(gd) <= 1e-6;
    if (at_pole) {
        int k = 0;
        for (int j = 2; j <= d.gamma.degree(); ++j)
            if (std::abs(d.gamma(t, j)) > 1e-10) {
                k = j;
                break;
            }
        if (k == 0) {
            // gamma frozen at n pi: the invariant is diagonal and any detuning keeps it invariant.
            c.Delta = -bd;
        } else {
            if (std::abs(cu) > 1e-6) fail_input("ansatz singularity: infinite detuning");
            c.Delta = -static_cast<double>(k) * ud - bd;
        }
    } else if (cu == 0.0) {
        c.Delta = -bd;
    } else {
        double cot = std::cos(g) / std::sin(g);
        const double n_pi = std::round(g / kPi) * kPi;
        if (std::abs(g - n_pi) < 0.1) cot = 1.0 / std::tan(detail::offset_from_pole(d.gamma, t, d.t_f, n_pi));
        c.Delta = c.OmegaR * cot * cu - bd;
    }
    if (!std::isfinite(c.Delta) || !std::isfinite(c.OmegaR)) fail_input("ansatz singularity: non-finite controls");
    return detail::fold_sign(c);
}

inline TLSControls controls_from_angles(const AngleDesign& d, const TimeGrid& grid) {
    std::vector<double> delta(grid.size()), rabi(grid.size()), phase(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const auto c = controls_at(d, grid[i]);
        delta[i] = c.Delta;
        rabi[i] = c.OmegaR;
        phase[i] = c.phi;
    }
    return {SampledScalar(grid, std::move(delta)), SampledScalar(grid, std::move(rabi)),
            SampledScalar(grid, std::move(phase))};
}

inline TwoLevelMatrix hamiltonian_matrix(const ControlPoint& c) {
    const cplx off = c.OmegaR * std::exp(cplx{0.0, c.phi});
    TwoLevelMatrix h;
    h << c.Delta, off, std::conj(off), -c.Delta;
    return 0.5 * kHbar * h;
}

inline TwoLevelMatrix hamiltonian(const TLSControls& controls, std::size_t node) {
    return hamiltonian_matrix(controls.at(node));
}

/// (hbar Omega0/2) [[cos g, sin g e^{i b}], [sin g e^{-i b}, -cos g]].
inline TwoLevelMatrix bloch_matrix(double scale, double polar, double azimuth) {
    const cplx off = std::sin(polar) * std::exp(cplx{0.0, azimuth});
    TwoLevelMatrix m;
    m << std::cos(polar), off, std::conj(off), -std::cos(polar);
    return 0.5 * kHbar * scale * m;
}

inline TwoLevelMatrix invariant_matrix(const AngleDesign& d, double t) {
    return bloch_matrix(d.Omega0, d.gamma(t), d.beta(t));
}

/// Eigenvector of the invariant with eigenvalue +hbar Omega0/2 (plus) or -hbar Omega0/2.
inline Eigen::Vector2cd invariant_mode(const AngleDesign& d, double t, bool plus = true) {
    const double g = d.gamma(t);
    const cplx e = std::exp(cplx{0.0, d.beta(t)});
    Eigen::Vector2cd v;
    if (plus)
        v << std::cos(g / 2.0) * e, std::sin(g / 2.0);
    else
        v << std::sin(g / 2.0), -std::cos(g / 2.0) * std::conj(e);
    return v;
}

struct InstantaneousEigensystem {
    double theta = 0.0;
    double E_plus = 0.0;
    double E_minus = 0.0;
    Eigen::Vector2cd n_plus;
    Eigen::Vector2cd n_minus;
};

inline InstantaneousEigensystem instantaneous_eigensystem(const ControlPoint& c) {
    const double omega = std::hypot(c.Delta, c.OmegaR);
    if (!(omega > 0.0)) fail_input("degenerate point: mixing angle undefined");
    InstantaneousEigensystem s;
    s.theta = std::acos(std::clamp(c.Delta / omega, -1.0, 1.0));
    s.E_plus = 0.5 * kHbar * omega;
    s.E_minus = -s.E_plus;
    const cplx e = std::exp(cplx{0.0, c.phi});
    s.n_plus << std::cos(s.theta / 2.0) * e, std::sin(s.theta / 2.0);
    s.n_minus << std::sin(s.theta / 2.0), -std::cos(s.theta / 2.0) * std::conj(e);
    return s;
}

inline InstantaneousEigensystem instantaneous_eigensystem(const TLSControls& controls, std::size_t node) {
    return instantaneous_eigensystem(controls.at(node));
}

/// alpha_+ = (1/2) int (Delta - 2 Omega~), alpha_- = -alpha_+, with
/// Omega~ = (Delta + beta') cos^2(gamma/2) + (OmegaR/2) sin(gamma) cos(beta - phi).
inline std::pair<double, double> lr_phase_tls(const AngleDesign& d, const TLSControls& controls, std::size_t up_to) {
    const auto& grid = controls.grid();
    std::vector<double> integrand(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const double t = grid[i];
        const auto c = controls.at(i);
        const double g = d.gamma(t);
        const double cg2 = std::cos(g / 2.0);
        const double omega_tilde = (c.Delta + d.beta(t, 1)) * cg2 * cg2 +
                                   0.5 * c.OmegaR * std::sin(g) * std::cos(d.beta(t) - c.phi);
        integrand[i] = c.Delta - 2.0 * omega_tilde;
    }
    const double a = 0.5 * integrate_sampled(SampledScalar(grid, std::move(integrand)), up_to);
    return {a, -a};
}

struct CommutatorEndpointReport {
    double norm_start = 0.0;      ///< ||[H, I]||_F at t = 0
    double norm_end = 0.0;        ///< ||[H, I]||_F at t = t_f
    double relative_start = 0.0;  ///< divided by ||H||_F ||I||_F
    double relative_end = 0.0;
    bool rabi_zero_start = false;
    bool gamma_multiple_of_pi_start = false;
    bool rabi_zero_end = false;
    bool gamma_multiple_of_pi_end = false;
};

inline CommutatorEndpointReport commutator_endpoint_report(const AngleDesign& d, const TLSControls& controls) {
    CommutatorEndpointReport r;
    double scale = 1.0;
    for (std::size_t i = 0; i < controls.grid().size(); ++i)
        scale = std::max({scale, std::abs(controls.Delta.values[i]), std::abs(controls.OmegaR.values[i])});

    const auto evaluate = [&](std::size_t node, double t, double& norm, double& rel, bool& rabi0, bool& gnpi) {
        const TwoLevelMatrix h = hamiltonian(controls, node);
        const TwoLevelMatrix inv = invariant_matrix(d, t);
        norm = commutator(h, inv).norm();
        const double denom = h.norm() * inv.norm();
        rel = denom > 0.0 ? norm / denom : 0.0;
        rabi0 = std::abs(controls.OmegaR.values[node]) <= 1e-10 * scale;
        gnpi = detail::distance_to_multiple_of_pi(d.gamma(t)) <= 1e-10;
    };
    const std::size_t last = controls.grid().size() - 1;
    evaluate(0, 0.0, r.norm_start, r.relative_start, r.rabi_zero_start, r.gamma_multiple_of_pi_start);
    evaluate(last, controls.grid()[last], r.norm_end, r.relative_end, r.rabi_zero_end, r.gamma_multiple_of_pi_end);
    return r;
}

/// H rebuilt from its invariant representation,
/// (hbar/2) [[M, N e^{i beta}], [N* e^{-i beta}, -M]]. Cross-check only.
inline TwoLevelMatrix reconstruct_hamiltonian(const AngleDesign& d, const TLSControls& controls, std::size_t node) {
    const double t = controls.grid()[node];
    const auto c = controls.at(node);
    const double g = d.gamma(t);
    const double b = d.beta(t);
    const double bd = d.beta(t, 1);
    const double gd = d.gamma(t, 1);
    const double sg = std::sin(g);
    const double cg = std::cos(g);
    const double cu = std::cos(b - c.phi);
    const double m = c.Delta * cg * cg + c.OmegaR * sg * cg * cu - bd * sg * sg;
    const cplx n = cplx{(c.Delta * cg + c.OmegaR * sg * cu + bd * cg) * sg, -gd};
    const cplx off = n * std::exp(cplx{0.0, b});
    TwoLevelMatrix h;
    h << m, off, std::conj(off), -m;
    return 0.5 * kHbar * h;
}

/// Counterdiabatic term for eigenvectors parameterized by (theta, phi):
/// (hbar/2) [[-phi' sin^2 th, (-i th' + (phi'/2) sin 2th) e^{i phi}], [h.c., phi' sin^2 th]].
inline TwoLevelMatrix berry_cd_matrix(double theta, double theta_dot, double phi, double phi_dot) {
    const double s2 = std::sin(theta) * std::sin(theta);
    const cplx off = cplx{0.5 * phi_dot * std::sin(2.0 * theta), -theta_dot} * std::exp(cplx{0.0, phi});
    TwoLevelMatrix h;
    h << -phi_dot * s2, off, std::conj(off), phi_dot * s2;
    return 0.5 * kHbar * h;
}

/// Fourth-order finite-difference derivative of uniformly sampled values
/// (central in the interior, one-sided five-point stencils at the two ends).
inline std::vector<double> differentiate_sampled(const SampledScalar& f) {
    const auto& v = f.values;
    const std::size_t n = v.size();
    if (n < 5) fail_input("differentiation needs at least 5 samples");
    const double h = f.grid.spacing();
    std::vector<double> d(n);
    for (std::size_t i = 2; i + 2 < n; ++i) d[i] = (v[i - 2] - 8.0 * v[i - 1] + 8.0 * v[i + 1] - v[i + 2]) / (12.0 * h);
    d[0] = (-25.0 * v[0] + 48.0 * v[1] - 36.0 * v[2] + 16.0 * v[3] - 3.0 * v[4]) / (12.0 * h);
    d[1] = (-3.0 * v[0] - 10.0 * v[1] + 18.0 * v[2] - 6.0 * v[3] + v[4]) / (12.0 * h);
    d[n - 1] = (25.0 * v[n - 1] - 48.0 * v[n - 2] + 36.0 * v[n - 3] - 16.0 * v[n - 4] + 3.0 * v[n - 5]) / (12.0 * h);
    d[n - 2] = (3.0 * v[n - 1] + 10.0 * v[n - 2] - 18.0 * v[n - 3] + 6.0 * v[n - 4] - v[n - 5]) / (12.0 * h);
    return d;
}

/// Omega_a = (OmegaR Delta' - OmegaR' Delta) / Omega^2, which equals -theta'.
inline double berry_omega_a(double delta, double rabi, double delta_dot, double rabi_dot) {
    const double omega2 = delta * delta + rabi * rabi;
    if (!(omega2 > 0.0)) fail_input("degenerate point");
    return (rabi * delta_dot - rabi_dot * delta) / omega2;
}

/// Berry term at a node of sampled controls; derivatives by finite differences.
inline TwoLevelMatrix berry_cd_term(const TLSControls& controls, std::size_t node) {
    const auto c = controls.at(node);
    const auto sys = instantaneous_eigensystem(c);
    const double delta_dot = differentiate_sampled(controls.Delta)[node];
    const double rabi_dot = differentiate_sampled(controls.OmegaR)[node];
    const double phi_dot = differentiate_sampled(controls.phi)[node];
    const double theta_dot = -berry_omega_a(c.Delta, c.OmegaR, delta_dot, rabi_dot);
    return berry_cd_matrix(sys.theta, theta_dot, c.phi, phi_dot);
}

/// max over nodes of |OmegaR Delta' - OmegaR' Delta| / Omega^3.
inline double adiabaticity_metric(const TLSControls& controls) {
    const auto dd = differentiate_sampled(controls.Delta);
    const auto rd = differentiate_sampled(controls.OmegaR);
    double worst = 0.0;
    for (std::size_t i = 0; i < dd.size(); ++i) {
        const double delta = controls.Delta.values[i];
        const double rabi = controls.OmegaR.values[i];
        const double omega = std::hypot(delta, rabi);
        if (!(omega > 0.0)) fail_input("degenerate point");
        worst = std::max(worst, std::abs(rabi * dd[i] - rd[i] * delta) / (omega * omega * omega));
    }
    return worst;
}

/// Cubic gamma: pi -> 0 with flat ends; cubic beta around -pi/2 (fig. 1 style protocol).
inline AngleDesign preset_fig1(double t_f) {
    if (!(t_f > 0.0)) fail_input("t_f must be positive");
    AngleDesign d;
    d.t_f = t_f;
    d.gamma = fit_polynomial({{0.0, 0, kPi}, {0.0, 1, 0.0}, {t_f, 0, 0.0}, {t_f, 1, 0.0}}, 3);
    d.beta = fit_polynomial(
        {{0.0, 0, -kPi / 2.0}, {0.0, 1, 3.0 * kPi / (2.0 * t_f)}, {t_f, 0, -kPi / 2.0}, {t_f, 1, -3.0 * kPi / (2.0 * t_f)}},
        3);
    return d;
}

/// Same gamma; quartic beta pinned to -pi/2 at both ends and the midpoint, with smaller end slopes.
inline AngleDesign preset_fig2(double t_f) {
    AngleDesign d = preset_fig1(t_f);
    d.beta = fit_polynomial({{0.0, 0, -kPi / 2.0},
                             {0.0, 1, kPi / (2.0 * t_f)},
                             {t_f / 2.0, 0, -kPi / 2.0},
                             {t_f, 0, -kPi / 2.0},
                             {t_f, 1, -kPi / (2.0 * t_f)}},
                            4);
    return d;
}

/// Reference H0 implied by the invariant: [(Delta cos g + OmegaR sin g cos(b - phi))/Omega0] I(t).
inline TwoLevelMatrix tracking_h0_from_angles(const AngleDesign& d, const ControlPoint& c, double t) {
    const double g = d.gamma(t);
    const double scale = (c.Delta * std::cos(g) + c.OmegaR * std::sin(g) * std::cos(d.beta(t) - c.phi)) / d.Omega0;
    return scale * invariant_matrix(d, t);
}

inline TwoLevelMatrix tracking_h0_from_angles(const AngleDesign& d, const TLSControls& controls, std::size_t node) {
    return tracking_h0_from_angles(d, controls.at(node), controls.grid()[node]);
}

/// Closed form of H - H0 for the invariant route.
inline TwoLevelMatrix tracking_h1_from_angles(const AngleDesign& d, double t) {
    return berry_cd_matrix(d.gamma(t), d.gamma(t, 1), d.beta(t), d.beta(t, 1));
}

// ---------------------------------------------------------------------------
// Standard tracking route: reference H0 given through its mixing angle.

/// H0 with Delta = Omega cos(theta), OmegaR = Omega sin(theta).
struct MixingReference {
    PolynomialCurve theta;
    PolynomialCurve Omega;
    PolynomialCurve phi = PolynomialCurve::constant(0.0);
    double t_f = 1.0;
};

/// theta: pi -> 0 (cubic, flat ends) at constant Omega; starts in |1>, ends in |2>.
inline MixingReference make_smoothstep_reference(double t_f, double Omega) {
    if (!(t_f > 0.0) || !(Omega > 0.0)) fail_input("reference: t_f and Omega must be positive");
    MixingReference r;
    r.t_f = t_f;
    r.theta = fit_polynomial({{0.0, 0, kPi}, {0.0, 1, 0.0}, {t_f, 0, 0.0}, {t_f, 1, 0.0}}, 3);
    r.Omega = PolynomialCurve::constant(Omega);
    return r;
}

inline ControlPoint reference_controls_at(const MixingReference& r, double t) {
    const double omega = r.Omega(t);
    if (!(omega > 0.0)) fail_input("degenerate point");
    return {omega * std::cos(r.theta(t)), omega * std::sin(r.theta(t)), r.phi(t)};
}

inline TLSControls controls_from_reference(const MixingReference& r, const TimeGrid& grid) {
    std::vector<double> delta(grid.size()), rabi(grid.size()), phase(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const auto c = detail::fold_sign(reference_controls_at(r, grid[i]));
        delta[i] = c.Delta;
        rabi[i] = c.OmegaR;
        phase[i] = c.phi;
    }
    return {SampledScalar(grid, std::move(delta)), SampledScalar(grid, std::move(rabi)),
            SampledScalar(grid, std::move(phase))};
}

inline TwoLevelMatrix reference_hamiltonian(const MixingReference& r, double t) {
    return hamiltonian_matrix(reference_controls_at(r, t));
}

/// H1 from exact derivatives of the reference curves.
inline TwoLevelMatrix reference_cd_term(const MixingReference& r, double t) {
    return berry_cd_matrix(r.theta(t), r.theta(t, 1), r.phi(t), r.phi(t, 1));
}

/// Invariant of H0 + H1 with eigenvalues fixed at +-hbar Omega(0)/2.
inline TwoLevelMatrix tracking_invariant(const MixingReference& r, double t) {
    return bloch_matrix(r.Omega(0.0), r.theta(t), r.phi(t));
}

inline Eigen::Vector2cd reference_mode(const MixingReference& r, double t) {
    const double th = r.theta(t);
    Eigen::Vector2cd v;
    v << std::cos(th / 2.0) * std::exp(cplx{0.0, r.phi(t)}), std::sin(th / 2.0);
    return v;
}

/// Phase of the tracked |n0+>: -int (Omega/2 + phi' cos^2(theta/2)).
inline double tracking_phase_plus(const MixingReference& r, double t) {
    return -integrate_function(
        [&](double s) {
            const double c = std::cos(r.theta(s) / 2.0);
            return 0.5 * r.Omega(s) + r.phi(s, 1) * c * c;
        },
        0.0, t, 2048);
}

}  // namespace stakit
