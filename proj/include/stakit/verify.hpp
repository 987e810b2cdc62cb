#pragma once

// Verification battery run by `stakit check`.

#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "stakit/runs.hpp"

namespace stakit {

enum class Comparison { at_most, at_least, info };

struct CheckEntry {
    std::string name;
    double value = 0.0;
    double threshold = 0.0;
    Comparison comparison = Comparison::info;

    bool pass() const {
        if (!std::isfinite(value)) return comparison == Comparison::info;
        switch (comparison) {
            case Comparison::at_most: return value <= threshold;
            case Comparison::at_least: return value >= threshold;
            case Comparison::info: return true;
        }
        return false;
    }
};

struct CheckReport {
    std::string design_kind;
    std::optional<double> ermakov_residual_max;
    std::optional<double> endpoint_commutator_start;
    std::optional<double> endpoint_commutator_end;
    std::optional<double> invariance_residual;
    std::optional<double> norm_drift;
    std::optional<double> adiabaticity_metric;
    std::optional<double> truncation_convergence_delta;
    std::vector<CheckEntry> entries;

    void add(std::string name, double value, Comparison cmp, double threshold = 0.0) {
        entries.push_back({std::move(name), value, threshold, cmp});
    }
    bool all_pass() const {
        for (const auto& e : entries)
            if (!e.pass()) return false;
        return true;
    }
    std::vector<const CheckEntry*> failures() const {
        std::vector<const CheckEntry*> out;
        for (const auto& e : entries)
            if (!e.pass()) out.push_back(&e);
        return out;
    }
};

inline const char* to_string(Comparison c) {
    switch (c) {
        case Comparison::at_most: return "<=";
        case Comparison::at_least: return ">=";
        case Comparison::info: return "info";
    }
    return "?";
}

inline nlohmann::json to_json(const CheckReport& r) {
    const auto opt = [](const std::optional<double>& v) -> nlohmann::json { return v ? nlohmann::json(*v) : nlohmann::json(); };
    nlohmann::json entries = nlohmann::json::array();
    for (const auto& e : r.entries) {
        nlohmann::json j{{"name", e.name}, {"value", e.value}, {"comparison", to_string(e.comparison)}, {"pass", e.pass()}};
        j["threshold"] = e.comparison == Comparison::info ? nlohmann::json() : nlohmann::json(e.threshold);
        entries.push_back(std::move(j));
    }
    return {
        {"design_kind", r.design_kind},
        {"ermakov_residual_max", opt(r.ermakov_residual_max)},
        {"endpoint_commutator_start", opt(r.endpoint_commutator_start)},
        {"endpoint_commutator_end", opt(r.endpoint_commutator_end)},
        {"invariance_residual", opt(r.invariance_residual)},
        {"norm_drift", opt(r.norm_drift)},
        {"adiabaticity_metric", opt(r.adiabaticity_metric)},
        {"truncation_convergence_delta", opt(r.truncation_convergence_delta)},
        {"checks", std::move(entries)},
        {"all_pass", r.all_pass()},
    };
}

namespace detail {

inline double max_transport_loss(const std::vector<ModeOverlap>& ov) {
    double worst = 0.0;
    for (const auto& o : ov) worst = std::max(worst, 1.0 - o.modulus * o.modulus);
    return worst;
}

/// |arg<phi+|psi>(t_f) - alpha+(t_f)| reduced to [0, pi], with the
/// initial overlap phase removed.
inline double final_phase_error(const TlsTrajectory& tr) {
    const double got = tr.mode_plus.back().phase - tr.mode_plus.front().phase;
    return std::abs(std::remainder(got - tr.alpha_plus.back(), 2.0 * kPi));
}

inline double min_fidelity(const std::vector<double>& f) {
    double worst = 1.0;
    for (double v : f) worst = std::min(worst, v);
    return worst;
}

}  // namespace detail

inline CheckReport check_design(const AngleDesign& d, const RunSettings& s = {}) {
    CheckReport r;
    r.design_kind = "two_level/angles";
    const auto tr = run_tls(d, s);
    const auto& grid = tr.record.grid;

    const auto ends = commutator_endpoint_report(d, tr.controls);
    r.endpoint_commutator_start = ends.relative_start;
    r.endpoint_commutator_end = ends.relative_end;
    r.add("endpoint commutator at t=0 (relative)", ends.relative_start, Comparison::at_most, 1e-10);
    r.add("endpoint commutator at t=t_f (relative)", ends.relative_end, Comparison::at_most, 1e-10);

    const auto hs = tls_schedule(d);
    const auto is = MatrixSchedule::two_level([d](double t) { return invariant_matrix(d, t); });
    r.invariance_residual = invariance_residual(hs, is, grid);
    r.add("invariance residual (relative)", *r.invariance_residual, Comparison::at_most, 1e-8);

    double recon = 0.0;
    for (std::size_t i = 1; i + 1 < grid.size(); ++i) {
        const TwoLevelMatrix h = hamiltonian(tr.controls, i);
        const TwoLevelMatrix g = reconstruct_hamiltonian(d, tr.controls, i);
        recon = std::max(recon, (h - g).cwiseAbs().maxCoeff() / std::max(h.cwiseAbs().maxCoeff(), 1e-300));
    }
    r.add("Hamiltonian reconstruction (relative, elementwise)", recon, Comparison::at_most, 1e-12);

    r.add("<I> drift / (hbar Omega0)", invariant_expectation_drift(tr.record, is) / (kHbar * d.Omega0), Comparison::at_most,
          1e-7);
    r.add("max mode transport loss 1-|<phi+|psi>|^2", detail::max_transport_loss(tr.mode_plus), Comparison::at_most, 1e-8);
    r.add("final phase vs alpha+ (rad)", detail::final_phase_error(tr), Comparison::at_most, 1e-6);

    r.norm_drift = tr.record.norm_drift;
    r.add("norm drift", tr.record.norm_drift, Comparison::at_most, 10.0 * s.rel_tol);

    r.adiabaticity_metric = adiabaticity_metric(tr.controls);
    r.add("adiabaticity metric", *r.adiabaticity_metric, Comparison::info);
    r.add("final P2", tr.populations.back().P2, Comparison::info);
    return r;
}

inline CheckReport check_design(const MixingReference& ref, const RunSettings& s = {}) {
    CheckReport r;
    r.design_kind = "two_level/reference";
    const auto tr = run_tls(ref, Method::counterdiabatic, s);
    const auto& grid = tr.record.grid;

    const auto hs = tls_schedule(ref, Method::counterdiabatic);
    const auto is = MatrixSchedule::two_level([ref](double t) { return tracking_invariant(ref, t); });
    r.invariance_residual = invariance_residual(hs, is, grid);
    r.add("invariance residual, H0+H1 (relative)", *r.invariance_residual, Comparison::at_most, 1e-8);

    r.add("<I> drift / (hbar Omega(0))", invariant_expectation_drift(tr.record, is) / (kHbar * ref.Omega(0.0)),
          Comparison::at_most, 1e-7);
    r.add("max mode transport loss, H0+H1", detail::max_transport_loss(tr.mode_plus), Comparison::at_most, 1e-8);
    r.add("final phase vs tracked phase (rad)", detail::final_phase_error(tr), Comparison::at_most, 1e-6);

    r.norm_drift = tr.record.norm_drift;
    r.add("norm drift", tr.record.norm_drift, Comparison::at_most, 10.0 * s.rel_tol);

    r.adiabaticity_metric = adiabaticity_metric(tr.controls);
    r.add("adiabaticity metric of H0", *r.adiabaticity_metric, Comparison::info);

    const auto bare = run_tls(ref, Method::reference_only, s);
    const double last = bare.mode_plus.back().modulus;
    r.add("final eigenstate population, H0 alone", last * last, Comparison::info);
    return r;
}

inline CheckReport check_design(const OscillatorDocument& d, const RunSettings& s = {}) {
    CheckReport r;
    r.design_kind = "oscillator";
    const auto& e = d.ermakov;
    const TimeGrid grid = detail::ho_grid(e.t_f, s);

    double erm = 0.0;
    for (std::size_t i = 0; i < grid.size(); ++i) erm = std::max(erm, std::abs(ermakov_residual(e, grid[i])));
    r.ermakov_residual_max = erm;
    r.add("Ermakov residual max", erm, Comparison::at_most, 1e-8);

    const double b_end = std::sqrt(e.omega0 / e.omega_f);
    double bc = std::max({std::abs(e.b(0.0) - 1.0), std::abs(e.b(0.0, 1)), std::abs(e.b(0.0, 2)),
                          std::abs(e.b(e.t_f) - b_end), std::abs(e.b(e.t_f, 1)), std::abs(e.b(e.t_f, 2))});
    r.add("boundary conditions on b", bc, Comparison::at_most, 1e-10);

    const auto inv = trap_inversion(e, grid);
    r.add("min omega^2", inv.min_omega_squared, Comparison::info);
    r.add("trap inverted (1 = yes)", inv.inverted ? 1.0 : 0.0, Comparison::info);

    const auto hs = ho_schedule(d, Method::invariant, s.fock_dim);
    const auto is = ho_mode_schedule(d, Method::invariant, s.fock_dim);
    r.invariance_residual = invariance_residual(hs, is, grid, 2);
    r.add("invariance residual (relative)", *r.invariance_residual, Comparison::at_most, 1e-8);

    const auto tr = run_ho(d, Method::invariant, s);
    r.norm_drift = tr.record.norm_drift;
    r.add("norm drift", tr.record.norm_drift, Comparison::at_most, 10.0 * s.rel_tol);
    r.add("final fidelity to eigenstate of H(t_f)", tr.final_fidelity, Comparison::at_least, 1.0 - 1e-6);
    r.add("min mode transport fidelity", detail::min_fidelity(tr.mode_fidelity), Comparison::at_least, 1.0 - 1e-6);
    const double drift = invariant_expectation_drift(tr.record, is);
    r.add("<I> drift / (hbar omega0)", drift / (kHbar * e.omega0), Comparison::at_most, 1e-7);

    RunSettings wide = s;
    wide.fock_dim = 2 * s.fock_dim;
    const auto tr2 = run_ho(d, Method::invariant, wide, false);
    r.truncation_convergence_delta = std::abs(tr2.final_fidelity - tr.final_fidelity);
    r.add("truncation convergence delta (N -> 2N)", *r.truncation_convergence_delta, Comparison::at_most, 1e-8);

    const auto cd = run_ho(d, Method::counterdiabatic, s, false);
    r.add("counterdiabatic final fidelity", cd.final_fidelity, Comparison::at_least, 1.0 - 1e-6);
    const auto bare = run_ho(d, Method::reference_only, s, false);
    r.add("reference-only final fidelity", bare.final_fidelity, Comparison::info);
    return r;
}

inline CheckReport check_design(const DesignDocument& doc, const RunSettings& s = {}) {
    return std::visit([&](const auto& d) { return check_design(d, s); }, doc);
}

}  // namespace stakit
