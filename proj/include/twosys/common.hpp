#pragma once

#include <Eigen/Dense>
#include <stdexcept>
#include <string>

namespace twosys {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Malformed or non-finite input data.
struct DataError : std::runtime_error {
  explicit DataError(const std::string& what) : std::runtime_error(what) {}
};

/// A matrix factorization could not be carried out (e.g. not positive definite).
struct FactorizationError : std::runtime_error {
  explicit FactorizationError(const std::string& what) : std::runtime_error(what) {}
};

/// Invalid experiment or sampler configuration.
struct ConfigError : std::runtime_error {
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

/// Runtime failure inside a sampling run (indicates a kernel bug or divergence).
struct SamplingError : std::runtime_error {
  explicit SamplingError(const std::string& what) : std::runtime_error(what) {}
};

/// Mode search diverged; the density is likely improper.
struct ImproperPosteriorError : std::runtime_error {
  explicit ImproperPosteriorError(const std::string& what) : std::runtime_error(what) {}
};

inline bool all_finite(const Vector& v) { return v.allFinite(); }
inline bool all_finite(const Matrix& m) { return m.allFinite(); }

}  // namespace twosys
