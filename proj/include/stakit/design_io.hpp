#pragma once

// JSON documents for protocol designs.
//
//   oscillator:         {omega0, omega_f, t_f, b_coefficients[], omega_coefficients[]}
//   two-level, angles:  {t_f, gamma_coefficients[], beta_coefficients[], phi_coefficients[], Omega0}
//   two-level, tracking reference: {t_f, theta_coefficients[], Omega_coefficients[], phi_coefficients[]}
//
// Each document also carries "system" and "kind" tags; readers dispatch on
// the coefficient keys so hand-written files may omit the tags.

#include <fstream>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "stakit/common.hpp"
#include "stakit/ho_design.hpp"
#include "stakit/tls_design.hpp"

namespace stakit {

/// Oscillator design: invariant route via b(t), tracking route via omega(t).
struct OscillatorDocument {
    ErmakovDesign ermakov;
    OmegaRamp ramp;
};

using DesignDocument = std::variant<OscillatorDocument, AngleDesign, MixingReference>;

namespace detail {

inline std::vector<double> coefficients_of(const nlohmann::json& j, const char* key) {
    if (!j.contains(key)) fail_input(std::string("design document: missing ") + key);
    const auto& arr = j.at(key);
    if (!arr.is_array() || arr.empty()) fail_input(std::string("design document: ") + key + " must be a non-empty array");
    std::vector<double> out;
    for (const auto& v : arr) {
        if (!v.is_number()) fail_input(std::string("design document: ") + key + " must hold numbers");
        out.push_back(v.get<double>());
    }
    return out;
}

inline double number_of(const nlohmann::json& j, const char* key) {
    if (!j.contains(key) || !j.at(key).is_number()) fail_input(std::string("design document: missing number ") + key);
    return j.at(key).get<double>();
}

inline double positive_number_of(const nlohmann::json& j, const char* key) {
    const double v = number_of(j, key);
    if (!(v > 0.0)) fail_input(std::string("design document: ") + key + " must be positive");
    return v;
}

}  // namespace detail

inline nlohmann::json to_json(const OscillatorDocument& d) {
    return {
        {"system", "oscillator"},
        {"kind", "ermakov"},
        {"omega0", d.ermakov.omega0},
        {"omega_f", d.ermakov.omega_f},
        {"t_f", d.ermakov.t_f},
        {"b_coefficients", d.ermakov.b.coefficients()},
        {"omega_coefficients", d.ramp.omega.coefficients()},
    };
}

inline nlohmann::json to_json(const AngleDesign& d) {
    return {
        {"system", "two_level"},
        {"kind", "angles"},
        {"t_f", d.t_f},
        {"gamma_coefficients", d.gamma.coefficients()},
        {"beta_coefficients", d.beta.coefficients()},
        {"phi_coefficients", d.phi.coefficients()},
        {"Omega0", d.Omega0},
    };
}

inline nlohmann::json to_json(const MixingReference& r) {
    return {
        {"system", "two_level"},
        {"kind", "reference"},
        {"t_f", r.t_f},
        {"theta_coefficients", r.theta.coefficients()},
        {"Omega_coefficients", r.Omega.coefficients()},
        {"phi_coefficients", r.phi.coefficients()},
    };
}

inline nlohmann::json to_json(const DesignDocument& d) {
    return std::visit([](const auto& v) { return to_json(v); }, d);
}

inline DesignDocument design_from_json(const nlohmann::json& j) {
    if (!j.is_object()) fail_input("design document: expected a JSON object");
    if (j.contains("b_coefficients")) {
        OscillatorDocument d;
        d.ermakov.omega0 = detail::positive_number_of(j, "omega0");
        d.ermakov.omega_f = detail::positive_number_of(j, "omega_f");
        d.ermakov.t_f = detail::positive_number_of(j, "t_f");
        d.ermakov.b = PolynomialCurve(detail::coefficients_of(j, "b_coefficients"));
        if (j.contains("omega_coefficients"))
            d.ramp = {PolynomialCurve(detail::coefficients_of(j, "omega_coefficients")), d.ermakov.t_f};
        else
            d.ramp = make_omega_ramp(d.ermakov.omega0, d.ermakov.omega_f, d.ermakov.t_f);
        return d;
    }
    if (j.contains("gamma_coefficients")) {
        AngleDesign d;
        d.t_f = detail::positive_number_of(j, "t_f");
        d.gamma = PolynomialCurve(detail::coefficients_of(j, "gamma_coefficients"));
        d.beta = PolynomialCurve(detail::coefficients_of(j, "beta_coefficients"));
        d.phi = j.contains("phi_coefficients") ? PolynomialCurve(detail::coefficients_of(j, "phi_coefficients"))
                                               : PolynomialCurve::constant(0.0);
        d.Omega0 = j.contains("Omega0") ? detail::positive_number_of(j, "Omega0") : 1.0;
        return d;
    }
    if (j.contains("theta_coefficients")) {
        MixingReference r;
        r.t_f = detail::positive_number_of(j, "t_f");
        r.theta = PolynomialCurve(detail::coefficients_of(j, "theta_coefficients"));
        r.Omega = PolynomialCurve(detail::coefficients_of(j, "Omega_coefficients"));
        r.phi = j.contains("phi_coefficients") ? PolynomialCurve(detail::coefficients_of(j, "phi_coefficients"))
                                               : PolynomialCurve::constant(0.0);
        return r;
    }
    fail_input("design document: no b_coefficients, gamma_coefficients or theta_coefficients");
}

inline DesignDocument load_design(const std::string& path) {
    std::ifstream in(path);
    if (!in) fail_input("cannot open design file " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        fail_input("design file " + path + ": " + e.what());
    }
    return design_from_json(j);
}

}  // namespace stakit
