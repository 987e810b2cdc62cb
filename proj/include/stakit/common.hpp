#pragma once

#include <complex>
#include <numbers>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace stakit {

// Internal units: hbar = 1, m = 1. Times and frequencies are dimensionless.
inline constexpr double kHbar = 1.0;
inline constexpr double kMass = 1.0;
inline constexpr double kPi = std::numbers::pi;

using cplx = std::complex<double>;
using StateVector = Eigen::VectorXcd;
using TwoLevelMatrix = Eigen::Matrix2cd;

/// Broad failure classes; the CLI maps these onto exit codes.
enum class ErrorKind {
    invalid_input,  ///< violated precondition or malformed design
    numeric,        ///< integrator or truncation failure
};

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

[[noreturn]] inline void fail_input(const std::string& what) { throw Error(ErrorKind::invalid_input, what); }
[[noreturn]] inline void fail_numeric(const std::string& what) { throw Error(ErrorKind::numeric, what); }

template <class Matrix>
Matrix commutator(const Matrix& a, const Matrix& b) {
    return a * b - b * a;
}

}  // namespace stakit
