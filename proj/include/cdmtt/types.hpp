#pragma once

#include <Eigen/Dense>

#include <stdexcept>
#include <string>

namespace cdmtt {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Raised when an argument violates an operation's precondition.
class InvalidInput : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Raised when a computation produces a result that cannot be trusted
/// (non-finite state, indefinite covariance, solver failure).
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Raised when an operation is requested on a model outside its domain,
/// e.g. steady-state moments of a non-Hurwitz drift.
class NotApplicable : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

inline bool all_finite(const Matrix& m) { return m.allFinite(); }

inline Matrix symmetrize(const Matrix& m) { return 0.5 * (m + m.transpose()); }

inline void require(bool cond, const std::string& msg) {
    if (!cond) throw InvalidInput(msg);
}

}  // namespace cdmtt
