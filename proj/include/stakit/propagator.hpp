#pragma once

// Adaptive propagation of i hbar psi' = H(t) psi and the diagnostics used to
// certify shortcut protocols: populations, mode transport, invariance
// residuals and dynamical-mode amplitudes.

#include <algorithm>
#include <cmath>
#include <concepts>
#include <functional>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "stakit/common.hpp"
#include "stakit/curves.hpp"
#include "stakit/fock.hpp"
#include "stakit/ho_design.hpp"
#include "stakit/tls_design.hpp"

namespace stakit {

/// Anything that can report H(t) as a matrix and apply it to a state.
template <class S>
concept HamiltonianSchedule = requires(const S& s, double t, const StateVector& x, StateVector& y) {
    { s.dimension() } -> std::convertible_to<Eigen::Index>;
    { s.matrix(t) } -> std::convertible_to<Eigen::MatrixXcd>;
    { s.smooth() } -> std::convertible_to<bool>;
    s.apply(t, x, y);
};

/// Schedule defined by a dense matrix-valued function of time.
class MatrixSchedule {
public:
    MatrixSchedule(Eigen::Index dim, std::function<Eigen::MatrixXcd(double)> f, bool smooth = true)
        : dim_(dim), f_(std::move(f)), smooth_(smooth) {}

    /// Convenience for 2x2 schedules.
    static MatrixSchedule two_level(std::function<TwoLevelMatrix(double)> f, bool smooth = true) {
        return MatrixSchedule(2, [f = std::move(f)](double t) -> Eigen::MatrixXcd { return f(t); }, smooth);
    }

    Eigen::Index dimension() const noexcept { return dim_; }
    bool smooth() const noexcept { return smooth_; }
    Eigen::MatrixXcd matrix(double t) const { return f_(t); }
    void apply(double t, const StateVector& x, StateVector& y) const { y.noalias() = f_(t) * x; }

private:
    Eigen::Index dim_;
    std::function<Eigen::MatrixXcd(double)> f_;
    bool smooth_;
};

/// Quadratic operator schedule in a truncated Fock basis; applied in O(N).
class QuadraticSchedule {
public:
    QuadraticSchedule(std::function<QuadraticForm(double)> form, Eigen::Index n, double omega_ref, bool smooth = true)
        : form_(std::move(form)), n_(n), omega_ref_(omega_ref), smooth_(smooth) {
        if (n < 4) fail_input("Fock dimension must be at least 4");
        ladder_.resize(static_cast<std::size_t>(n));
        for (Eigen::Index k = 0; k < n; ++k)
            ladder_[static_cast<std::size_t>(k)] = std::sqrt((static_cast<double>(k) + 1.0) * (static_cast<double>(k) + 2.0));
    }

    Eigen::Index dimension() const noexcept { return n_; }
    bool smooth() const noexcept { return smooth_; }
    double omega_ref() const noexcept { return omega_ref_; }
    QuadraticForm form(double t) const { return form_(t); }
    Eigen::MatrixXcd matrix(double t) const { return build_operator(form_(t), n_, omega_ref_).entries; }
    FockOperator op(double t) const { return build_operator(form_(t), n_, omega_ref_); }

    void apply(double t, const StateVector& x, StateVector& y) const {
        const QuadraticForm f = form_(t);
        const double p2 = kHbar * kMass * omega_ref_ / 2.0;
        const double q2 = kHbar / (2.0 * kMass * omega_ref_);
        const double diag = f.c_pp * p2 + f.c_qq * q2;
        const cplx lower{-f.c_pp * p2 + f.c_qq * q2, f.c_pq * kHbar};
        const cplx upper = std::conj(lower);
        y.resize(n_);
        for (Eigen::Index k = 0; k < n_; ++k) {
            cplx acc = diag * (2.0 * static_cast<double>(k) + 1.0) * x(k);
            if (k >= 2) acc += lower * ladder_[static_cast<std::size_t>(k - 2)] * x(k - 2);
            if (k + 2 < n_) acc += upper * ladder_[static_cast<std::size_t>(k)] * x(k + 2);
            y(k) = acc;
        }
    }

private:
    std::function<QuadraticForm(double)> form_;
    Eigen::Index n_;
    double omega_ref_;
    bool smooth_;
    std::vector<double> ladder_;
};

struct PropagationOptions {
    double rel_tol = 1e-10;
    double abs_tol = 1e-12;
    std::size_t max_steps = 50'000'000;
};

struct StepStatistics {
    std::size_t accepted = 0;
    std::size_t rejected = 0;
    double min_step = 0.0;
    double max_step = 0.0;
};

struct PropagationRecord {
    TimeGrid grid;
    std::vector<StateVector> states;  ///< one per grid node
    double norm_drift = 0.0;          ///< max | ||psi|| - 1 | over accepted steps
    StepStatistics steps;
};

namespace detail {

template <HamiltonianSchedule S>
void check_hermitian(const S& schedule, double t_f) {
    std::mt19937_64 rng(0x5eedULL);
    std::uniform_real_distribution<double> u(0.0, t_f);
    for (int k = 0; k < 16; ++k) {
        const Eigen::MatrixXcd h = schedule.matrix(u(rng));
        const double scale = std::max(h.norm(), 1e-300);
        if ((h - h.adjoint()).norm() > 1e-12 * scale) fail_input("Hamiltonian schedule is not Hermitian");
    }
}

// Weighted RMS norm used by the step controller.
inline double error_norm(const StateVector& err, const StateVector& y0, const StateVector& y1, double rtol,
                         double atol) {
    double acc = 0.0;
    for (Eigen::Index i = 0; i < err.size(); ++i) {
        const double sk = atol + rtol * std::max(std::abs(y0(i)), std::abs(y1(i)));
        const double r = std::abs(err(i)) / sk;
        acc += r * r;
    }
    return std::sqrt(acc / static_cast<double>(err.size()));
}

}  // namespace detail

/// Dormand-Prince 5(4) with PI step control and the fourth-order dense
/// output, sampled at the grid nodes. The state is never renormalized.
template <HamiltonianSchedule S>
PropagationRecord propagate(const S& schedule, const StateVector& psi0, const TimeGrid& grid,
                            const PropagationOptions& opt = {}) {
    if (psi0.size() != schedule.dimension()) fail_input("initial state dimension mismatch");
    if (std::abs(psi0.norm() - 1.0) > 1e-12) fail_input("initial state must be normalized");
    if (!(opt.rel_tol >= 1e-13 && opt.rel_tol <= 1e-6)) fail_input("rel_tol must lie in [1e-13, 1e-6]");
    if (!(opt.abs_tol > 0.0)) fail_input("abs_tol must be positive");
    detail::check_hermitian(schedule, grid.t_f());

    // Butcher tableau.
    constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
    constexpr double a21 = 1.0 / 5;
    constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
    constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
    constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561, a54 = -212.0 / 729;
    constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                     a65 = -5103.0 / 18656;
    constexpr double a71 = 35.0 / 384, a73 = 500.0 / 1113, a74 = 125.0 / 192, a75 = -2187.0 / 6784,
                     a76 = 11.0 / 84;
    constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920, e5 = -17253.0 / 339200,
                     e6 = 22.0 / 525, e7 = -1.0 / 40;
    constexpr double d1 = -12715105075.0 / 11282082432, d3 = 87487479700.0 / 32700410799,
                     d4 = -10690763975.0 / 1880347072, d5 = 701980252875.0 / 199316789632,
                     d6 = -1453857185.0 / 822651844, d7 = 69997945.0 / 29380423;

    const cplx minus_i_over_hbar{0.0, -1.0 / kHbar};
    auto rhs = [&](double t, const StateVector& y, StateVector& out) {
        schedule.apply(t, y, out);
        out *= minus_i_over_hbar;
    };

    const Eigen::Index n = psi0.size();
    const double t_f = grid.t_f();
    PropagationRecord rec{grid, {}, 0.0, {}};
    rec.states.reserve(grid.size());
    rec.states.push_back(psi0);

    StateVector y = psi0, y1(n), ytmp(n), k1(n), k2(n), k3(n), k4(n), k5(n), k6(n), k7(n), err(n);
    rhs(0.0, y, k1);

    // Initial step (Hairer-Wanner heuristic).
    double h;
    {
        const double d0 = detail::error_norm(y, y, y, opt.rel_tol, opt.abs_tol);
        const double d1n = detail::error_norm(k1, y, y, opt.rel_tol, opt.abs_tol);
        double h0 = (d0 < 1e-5 || d1n < 1e-5) ? 1e-6 * t_f : 0.01 * d0 / d1n;
        h0 = std::min(h0, t_f);
        ytmp = y + h0 * k1;
        rhs(h0, ytmp, k2);
        const double d2 = detail::error_norm(k2 - k1, y, y, opt.rel_tol, opt.abs_tol) / h0;
        const double dm = std::max(d1n, d2);
        const double h1 = dm <= 1e-15 ? std::max(1e-6 * t_f, h0 * 1e-3) : std::pow(0.01 / dm, 1.0 / 5.0);
        h = std::min({100.0 * h0, h1, t_f});
    }

    constexpr double kBeta = 0.04;
    constexpr double kExpo = 0.2 - kBeta * 0.75;
    constexpr double kSafety = 0.9;
    constexpr double kMaxGrowth = 5.0;
    constexpr double kMinShrink = 0.2;
    double err_old = 1e-4;
    bool last_rejected = false;

    double t = 0.0;
    std::size_t next_node = 1;
    rec.steps.min_step = t_f;
    std::size_t total = 0;

    while (next_node < grid.size()) {
        if (++total > opt.max_steps) fail_numeric("stiffness failure: step budget exhausted");
        bool last = false;
        if (t + h >= t_f * (1.0 - 1e-14) || t + h > t_f) {
            h = t_f - t;
            last = true;
        }
        if (h < t_f * 1e-14) fail_numeric("stiffness failure: step size underflow");

        ytmp = y + h * (a21 * k1);
        rhs(t + c2 * h, ytmp, k2);
        ytmp = y + h * (a31 * k1 + a32 * k2);
        rhs(t + c3 * h, ytmp, k3);
        ytmp = y + h * (a41 * k1 + a42 * k2 + a43 * k3);
        rhs(t + c4 * h, ytmp, k4);
        ytmp = y + h * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4);
        rhs(t + c5 * h, ytmp, k5);
        ytmp = y + h * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5);
        rhs(t + h, ytmp, k6);
        y1 = y + h * (a71 * k1 + a73 * k3 + a74 * k4 + a75 * k5 + a76 * k6);
        rhs(t + h, y1, k7);
        err = h * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);

        const double e = detail::error_norm(err, y, y1, opt.rel_tol, opt.abs_tol);
        if (!std::isfinite(e)) fail_numeric("accuracy failure: non-finite state");

        if (e <= 1.0) {
            const double t_new = last ? t_f : t + h;
            // Dense output at every node inside (t, t_new].
            while (next_node < grid.size() && grid[next_node] <= t_new) {
                if (next_node == grid.size() - 1 && last) {
                    rec.states.push_back(y1);
                } else {
                    const double th = (grid[next_node] - t) / h;
                    const StateVector ydiff = y1 - y;
                    const StateVector bspl = h * k1 - ydiff;
                    const StateVector r4 = ydiff - h * k7 - bspl;
                    const StateVector r5 = h * (d1 * k1 + d3 * k3 + d4 * k4 + d5 * k5 + d6 * k6 + d7 * k7);
                    rec.states.push_back(y + th * (ydiff + (1.0 - th) * (bspl + th * (r4 + (1.0 - th) * r5))));
                }
                ++next_node;
            }
            rec.norm_drift = std::max(rec.norm_drift, std::abs(y1.norm() - 1.0));
            rec.steps.accepted++;
            rec.steps.min_step = std::min(rec.steps.min_step, h);
            rec.steps.max_step = std::max(rec.steps.max_step, h);

            y.swap(y1);
            k1.swap(k7);  // FSAL
            t = t_new;

            double ratio = kSafety * std::pow(e, -kExpo) * std::pow(err_old, kBeta);
            if (e == 0.0) ratio = kMaxGrowth;
            ratio = std::clamp(ratio, kMinShrink, kMaxGrowth);
            if (last_rejected) ratio = std::min(ratio, 1.0);
            h *= ratio;
            err_old = std::max(e, 1e-4);
            last_rejected = false;
        } else {
            rec.steps.rejected++;
            h *= std::max(kMinShrink, kSafety * std::pow(e, -kExpo));
            last_rejected = true;
        }
    }

    if (rec.norm_drift > 1e-6) fail_numeric("accuracy failure: norm drift exceeds 1e-6");
    return rec;
}

// ---------------------------------------------------------------------------
// Diagnostics.

/// |psi_k|^2 for each requested index, per node.
inline std::vector<std::vector<double>> populations(const PropagationRecord& rec, const std::vector<Eigen::Index>& levels) {
    std::vector<std::vector<double>> out;
    out.reserve(rec.states.size());
    for (const auto& s : rec.states) {
        std::vector<double> row;
        row.reserve(levels.size());
        for (const auto k : levels) row.push_back(std::norm(s(k)));
        out.push_back(std::move(row));
    }
    return out;
}

struct LevelPopulations {
    double P1 = 0.0;  ///< ground level |1>
    double P2 = 0.0;  ///< excited level |2>
};

/// Two-level populations (component 1 is |1>, component 0 is |2>).
inline std::vector<LevelPopulations> populations(const PropagationRecord& rec) {
    if (rec.states.empty() || rec.states.front().size() != 2) fail_input("two-level populations need 2-component states");
    std::vector<LevelPopulations> out;
    out.reserve(rec.states.size());
    for (const auto& s : rec.states) out.push_back({std::norm(s(1)), std::norm(s(0))});
    return out;
}

enum class Branch { plus, minus };

/// Populations of |1>, |2> if the state followed |n+> (or |n->) adiabatically.
inline std::vector<LevelPopulations> adiabatic_reference(const TLSControls& controls, Branch branch = Branch::plus) {
    std::vector<LevelPopulations> out;
    out.reserve(controls.grid().size());
    for (std::size_t i = 0; i < controls.grid().size(); ++i) {
        const double th = instantaneous_eigensystem(controls, i).theta;
        const double s2 = std::sin(th / 2.0) * std::sin(th / 2.0);
        const double c2 = std::cos(th / 2.0) * std::cos(th / 2.0);
        out.push_back(branch == Branch::plus ? LevelPopulations{s2, c2} : LevelPopulations{c2, s2});
    }
    return out;
}

struct ModeOverlap {
    double modulus = 0.0;
    double phase = 0.0;  ///< arg <phi(t)|psi(t)>, unwrapped along the grid
};

/// Overlap of the propagated state with a supplied mode at each node.
/// `mode(node, t)` returns the normalized mode vector.
template <class ModeProvider>
std::vector<ModeOverlap> mode_transport_check(const PropagationRecord& rec, ModeProvider&& mode) {
    std::vector<ModeOverlap> out;
    out.reserve(rec.states.size());
    double prev = 0.0;
    for (std::size_t i = 0; i < rec.states.size(); ++i) {
        const StateVector m = mode(i, rec.grid[i]);
        const cplx ov = m.dot(rec.states[i]);  // conjugates m
        double ph = std::arg(ov);
        if (i > 0) ph = prev + std::remainder(ph - prev, 2.0 * kPi);
        prev = ph;
        out.push_back({std::abs(ov), ph});
    }
    return out;
}

/// Keeps numerically obtained eigenvectors in a continuous gauge: each new
/// vector is rotated so that <previous|current> is real and positive.
class GaugeTracker {
public:
    StateVector align(StateVector v) {
        if (has_prev_) {
            const cplx ov = prev_.dot(v);
            if (std::abs(ov) > 0.0) v *= std::conj(ov) / std::abs(ov);
        }
        prev_ = v;
        has_prev_ = true;
        return v;
    }

private:
    StateVector prev_;
    bool has_prev_ = false;
};

/// max over nodes of || i hbar dI/dt - [H, I] ||_F / (||H||_F ||I||_F).
///
/// dI/dt is a central difference (fourth order when both schedules are
/// flagged smooth) with step min(spacing, t_f/2048), so a coarse output grid
/// does not inflate the residual. `ignore_trailing` drops that many
/// trailing basis states from the norm, for truncated Fock matrices whose
/// last rows are affected by the cut.
template <HamiltonianSchedule SH, HamiltonianSchedule SI>
double invariance_residual(const SH& h_schedule, const SI& i_schedule, const TimeGrid& grid,
                           Eigen::Index ignore_trailing = 0) {
    const double h = std::min(grid.spacing(), grid.t_f() / 2048.0);
    const bool fourth = h_schedule.smooth() && i_schedule.smooth();
    const double reach = (fourth ? 2.0 : 1.0) * h;
    const Eigen::Index keep = h_schedule.dimension() - ignore_trailing;
    double worst = 0.0;
    for (std::size_t i = 1; i + 1 < grid.size(); ++i) {
        const double t = grid[i];
        if (t - reach < 0.0 || t + reach > grid.t_f()) continue;
        Eigen::MatrixXcd didt;
        if (fourth)
            didt = (i_schedule.matrix(t - 2 * h) - 8.0 * i_schedule.matrix(t - h) + 8.0 * i_schedule.matrix(t + h) -
                    i_schedule.matrix(t + 2 * h)) /
                   (12.0 * h);
        else
            didt = (i_schedule.matrix(t + h) - i_schedule.matrix(t - h)) / (2.0 * h);
        const Eigen::MatrixXcd hm = h_schedule.matrix(t);
        const Eigen::MatrixXcd im = i_schedule.matrix(t);
        const Eigen::MatrixXcd r = cplx{0.0, kHbar} * didt - commutator(hm, im);
        const double num = r.topLeftCorner(keep, keep).norm();
        const double den = hm.topLeftCorner(keep, keep).norm() * im.topLeftCorner(keep, keep).norm();
        if (den > 0.0) worst = std::max(worst, num / den);
    }
    return worst;
}

/// Max deviation of <psi(t)|I(t)|psi(t)> from its initial value.
template <HamiltonianSchedule SI>
double invariant_expectation_drift(const PropagationRecord& rec, const SI& i_schedule) {
    double first = 0.0;
    double worst = 0.0;
    StateVector tmp;
    for (std::size_t i = 0; i < rec.states.size(); ++i) {
        i_schedule.apply(rec.grid[i], rec.states[i], tmp);
        const double v = rec.states[i].dot(tmp).real();
        if (i == 0) first = v;
        worst = std::max(worst, std::abs(v - first));
    }
    return worst;
}

/// c_n = <phi_n(t)|psi(t)> e^{-i alpha_n(t)} at one node.
inline std::vector<cplx> decompose_into_modes(const PropagationRecord& rec, const std::vector<StateVector>& modes,
                                              const std::vector<double>& phases, std::size_t node) {
    if (modes.size() != phases.size()) fail_input("one phase per mode required");
    std::vector<cplx> c;
    c.reserve(modes.size());
    for (std::size_t k = 0; k < modes.size(); ++k)
        c.push_back(modes[k].dot(rec.states[node]) * std::exp(cplx{0.0, -phases[k]}));
    return c;
}

/// |<target|psi>|^2.
inline double fidelity(const StateVector& target, const StateVector& psi) { return std::norm(target.dot(psi)); }

}  // namespace stakit
