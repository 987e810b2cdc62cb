#pragma once

// End-to-end protocol runs: build the schedule for a design and method,
// propagate, and collect the per-node diagnostics that the CLI and the
// verification battery report.

#include <string>
#include <vector>

#include "stakit/design_io.hpp"
#include "stakit/fock.hpp"
#include "stakit/ho_design.hpp"
#include "stakit/propagator.hpp"
#include "stakit/tls_design.hpp"

namespace stakit {

enum class Method { invariant, counterdiabatic, reference_only };

inline Method parse_method(const std::string& s) {
    if (s == "invariant") return Method::invariant;
    if (s == "counterdiabatic") return Method::counterdiabatic;
    if (s == "reference_only") return Method::reference_only;
    fail_input("unknown method '" + s + "' (expected invariant, counterdiabatic or reference_only)");
}

inline const char* to_string(Method m) {
    switch (m) {
        case Method::invariant: return "invariant";
        case Method::counterdiabatic: return "counterdiabatic";
        case Method::reference_only: return "reference_only";
    }
    return "?";
}

struct RunSettings {
    std::size_t samples = 0;  ///< 0 picks the system default (1025 two-level, 201 oscillator)
    double rel_tol = 1e-10;
    double abs_tol = 1e-12;
    Eigen::Index fock_dim = 128;
    int state = -1;  ///< two-level: level 1 or 2 (default 1); oscillator: eigenstate index (default 0)

    PropagationOptions propagation() const { return {rel_tol, abs_tol}; }
};

// ---------------------------------------------------------------------------
// Two-level atom.

struct TlsTrajectory {
    PropagationRecord record;
    TLSControls controls;
    std::vector<LevelPopulations> populations;
    std::vector<LevelPopulations> adiabatic;
    std::vector<ModeOverlap> mode_plus;  ///< overlap with the invariant's + eigenvector
    std::vector<double> alpha_plus;      ///< Lewis-Riesenfeld phase of the + mode
};

namespace detail {

inline StateVector tls_level(int level) {
    StateVector psi = StateVector::Zero(2);
    if (level == 2)
        psi(0) = 1.0;
    else if (level == 1 || level < 0)
        psi(1) = 1.0;
    else
        fail_input("two-level state must be 1 or 2");
    return psi;
}

inline TimeGrid tls_grid(double t_f, const RunSettings& s) { return TimeGrid(t_f, s.samples ? s.samples : 1025); }
inline TimeGrid ho_grid(double t_f, const RunSettings& s) { return TimeGrid(t_f, s.samples ? s.samples : 201); }

}  // namespace detail

inline MatrixSchedule tls_schedule(const AngleDesign& d) {
    return MatrixSchedule::two_level([d](double t) { return hamiltonian_matrix(controls_at(d, t)); });
}

inline MatrixSchedule tls_schedule(const MixingReference& r, Method m) {
    if (m == Method::invariant) fail_input("a mixing-angle reference supports counterdiabatic or reference_only");
    const bool with_cd = m == Method::counterdiabatic;
    return MatrixSchedule::two_level([r, with_cd](double t) {
        TwoLevelMatrix h = reference_hamiltonian(r, t);
        if (with_cd) h += reference_cd_term(r, t);
        return h;
    });
}

inline TlsTrajectory run_tls(const AngleDesign& d, const RunSettings& s = {}) {
    const TimeGrid grid = detail::tls_grid(d.t_f, s);
    auto controls = controls_from_angles(d, grid);
    auto record = propagate(tls_schedule(d), detail::tls_level(s.state), grid, s.propagation());
    TlsTrajectory out{std::move(record), std::move(controls), {}, {}, {}, {}};
    out.populations = populations(out.record);
    out.adiabatic = adiabatic_reference(out.controls);
    out.mode_plus = mode_transport_check(out.record, [&](std::size_t, double t) -> StateVector { return invariant_mode(d, t); });
    out.alpha_plus.resize(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) out.alpha_plus[i] = lr_phase_tls(d, out.controls, i).first;
    return out;
}

inline TlsTrajectory run_tls(const MixingReference& r, Method m, const RunSettings& s = {}) {
    const TimeGrid grid = detail::tls_grid(r.t_f, s);
    auto controls = controls_from_reference(r, grid);
    auto record = propagate(tls_schedule(r, m), detail::tls_level(s.state), grid, s.propagation());
    TlsTrajectory out{std::move(record), std::move(controls), {}, {}, {}, {}};
    out.populations = populations(out.record);
    out.adiabatic = adiabatic_reference(out.controls);
    out.mode_plus = mode_transport_check(out.record, [&](std::size_t, double t) -> StateVector { return reference_mode(r, t); });
    const auto rate = SampledScalar::sample(grid, [&](double t) {
        const double c = std::cos(r.theta(t) / 2.0);
        return -(0.5 * r.Omega(t) + r.phi(t, 1) * c * c);
    });
    out.alpha_plus = integrate_cumulative(rate);
    return out;
}

// ---------------------------------------------------------------------------
// Harmonic oscillator (Fock basis at omega_ref = omega0).

struct HoTrajectory {
    PropagationRecord record;
    std::vector<double> mode_fidelity;  ///< |<phi_n(t)|psi(t)>|^2 with the tracked mode
    std::vector<Eigen::Index> tracked_levels;
    std::vector<std::vector<double>> level_populations;
    double final_fidelity = 0.0;  ///< to the n-th eigenstate of H(t_f)
    double omega_ref = 1.0;
};

inline QuadraticSchedule ho_schedule(const OscillatorDocument& d, Method m, Eigen::Index n) {
    const double w_ref = d.ermakov.omega0;
    switch (m) {
        case Method::invariant:
            return QuadraticSchedule([e = d.ermakov](double t) { return hamiltonian_form(e, t); }, n, w_ref);
        case Method::counterdiabatic:
            return QuadraticSchedule([r = d.ramp](double t) { return berry_ho_hamiltonian(r, t); }, n, w_ref);
        case Method::reference_only:
            return QuadraticSchedule([r = d.ramp](double t) { return berry_ho_reference(r, t); }, n, w_ref);
    }
    fail_input("unknown method");
}

/// Operator whose eigenvectors are the transported modes for the method.
inline QuadraticSchedule ho_mode_schedule(const OscillatorDocument& d, Method m, Eigen::Index n) {
    const double w_ref = d.ermakov.omega0;
    if (m == Method::invariant)
        return QuadraticSchedule([e = d.ermakov](double t) { return invariant_form(e, t); }, n, w_ref);
    return QuadraticSchedule([r = d.ramp](double t) { return berry_ho_invariant(r, t); }, n, w_ref);
}

inline double ho_time(const OscillatorDocument& d, Method m) { return m == Method::invariant ? d.ermakov.t_f : d.ramp.t_f; }

inline HoTrajectory run_ho(const OscillatorDocument& d, Method m, const RunSettings& s = {}, bool track_modes = true) {
    const int level = s.state < 0 ? 0 : s.state;
    if (level >= s.fock_dim / 4) fail_input("oscillator state index must be below fock_dim/4");
    const TimeGrid grid = detail::ho_grid(ho_time(d, m), s);
    const auto schedule = ho_schedule(d, m, s.fock_dim);
    const auto n_levels = static_cast<Eigen::Index>(level + 1);

    const StateVector psi0 = eigenpairs(schedule.op(0.0), n_levels).back().vector;
    HoTrajectory out{propagate(schedule, psi0, grid, s.propagation()), {}, {}, {}, 0.0, d.ermakov.omega0};

    for (Eigen::Index k = 0; k < std::min<Eigen::Index>(8, s.fock_dim); ++k) out.tracked_levels.push_back(k);
    out.level_populations = populations(out.record, out.tracked_levels);

    const StateVector target = eigenpairs(schedule.op(grid.t_f()), n_levels).back().vector;
    out.final_fidelity = fidelity(target, out.record.states.back());

    if (track_modes) {
        const auto modes = ho_mode_schedule(d, m, s.fock_dim);
        out.mode_fidelity.reserve(grid.size());
        for (std::size_t i = 0; i < grid.size(); ++i) {
            const StateVector mode = eigenpairs(modes.op(grid[i]), n_levels).back().vector;
            out.mode_fidelity.push_back(fidelity(mode, out.record.states[i]));
        }
    }
    return out;
}

}  // namespace stakit
