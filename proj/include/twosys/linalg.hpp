#pragma once

#include <cmath>
#include <span>
#include <sstream>
#include <vector>

#include "twosys/common.hpp"
#include "twosys/rng.hpp"

namespace twosys {

/// Dense symmetric matrix used as a sampler preconditioner. Construction
/// symmetrizes the storage after checking the input is symmetric to a
/// 1e-12 relative tolerance; positive definiteness is enforced where it is
/// actually required (factorize).
class SpdMatrix {
 public:
  SpdMatrix() = default;

  explicit SpdMatrix(Matrix m) {
    if (m.rows() != m.cols()) {
      throw DataError("SpdMatrix: matrix must be square, got " +
                      std::to_string(m.rows()) + "x" + std::to_string(m.cols()));
    }
    if (!m.allFinite()) throw DataError("SpdMatrix: non-finite entries");
    const double scale = std::max(1.0, m.norm());
    const double asym = (m - m.transpose()).norm();
    if (asym > 1e-12 * scale) {
      throw DataError("SpdMatrix: matrix not symmetric (relative asymmetry " +
                      std::to_string(asym / scale) + ")");
    }
    mat_ = 0.5 * (m + m.transpose());
  }

  Eigen::Index dim() const { return mat_.rows(); }
  const Matrix& mat() const { return mat_; }

  static SpdMatrix identity(Eigen::Index d) { return SpdMatrix(Matrix::Identity(d, d)); }

  bool operator==(const SpdMatrix& other) const { return mat_ == other.mat_; }

 private:
  Matrix mat_;
};

/// Cached factors of an SPD matrix: lower Cholesky L (LL^T = C) for drawing
/// Gaussian noise, and the principal symmetric square root R (R^2 = C) used by
/// kinetic position/velocity updates.
struct SpdFactorization {
  SpdMatrix source;
  Matrix cholesky;   // lower triangular
  Matrix sym_sqrt;   // symmetric
  double log_det = 0.0;  // log det(source)

  Eigen::Index dim() const { return source.dim(); }

  /// Solve L z = r for the proposal quadratic form.
  Vector chol_solve(const Vector& r) const {
    return cholesky.triangularView<Eigen::Lower>().solve(r);
  }
};

/// Largest-magnitude eigenvalue of a symmetric matrix (its operator norm when PSD).
inline double operator_norm(const SpdMatrix& c) {
  if (c.dim() == 0) return 0.0;
  Eigen::SelfAdjointEigenSolver<Matrix> es(c.mat(), Eigen::EigenvaluesOnly);
  return std::max(std::abs(es.eigenvalues().minCoeff()), std::abs(es.eigenvalues().maxCoeff()));
}

/// Unbiased sample covariance about the ensemble mean, plus jitter * I.
/// A single point has no spread and yields jitter * I.
inline SpdMatrix ensemble_covariance(std::span<const Vector> points, double jitter) {
  if (points.empty()) throw DataError("ensemble_covariance: empty point set");
  if (jitter < 0.0) throw DataError("ensemble_covariance: negative jitter");
  const Eigen::Index d = points[0].size();
  for (const Vector& p : points) {
    if (p.size() != d) throw DataError("ensemble_covariance: inconsistent dimensions");
    if (!p.allFinite()) throw DataError("ensemble_covariance: non-finite point");
  }
  const auto n = static_cast<Eigen::Index>(points.size());
  Matrix cov = Matrix::Zero(d, d);
  if (n > 1) {
    Vector mean = Vector::Zero(d);
    for (const Vector& p : points) mean += p;
    mean /= static_cast<double>(n);
    for (const Vector& p : points) {
      Vector dev = p - mean;
      cov.noalias() += dev * dev.transpose();
    }
    cov /= static_cast<double>(n - 1);
  }
  cov.diagonal().array() += jitter;
  return SpdMatrix(std::move(cov));
}

inline SpdMatrix ensemble_covariance(const std::vector<Vector>& points, double jitter) {
  return ensemble_covariance(std::span<const Vector>(points), jitter);
}

/// Cholesky plus principal square root. Requires strictly positive spectrum.
inline SpdFactorization factorize(const SpdMatrix& c) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(c.mat());
  if (es.info() != Eigen::Success) {
    throw FactorizationError("factorize: eigendecomposition failed");
  }
  const double min_eig = es.eigenvalues().minCoeff();
  if (min_eig <= 0.0) {
    std::ostringstream msg;
    msg << "factorize: matrix not positive definite (smallest eigenvalue " << min_eig << ")";
    throw FactorizationError(msg.str());
  }
  SpdFactorization f;
  f.source = c;
  f.sym_sqrt = es.eigenvectors() *
               es.eigenvalues().cwiseSqrt().asDiagonal() *
               es.eigenvectors().transpose();
  f.sym_sqrt = 0.5 * (f.sym_sqrt + f.sym_sqrt.transpose().eval());
  Eigen::LLT<Matrix> llt(c.mat());
  if (llt.info() != Eigen::Success) {
    throw FactorizationError("factorize: Cholesky failed on numerically indefinite input");
  }
  f.cholesky = llt.matrixL();
  f.log_det = 2.0 * f.cholesky.diagonal().array().log().sum();
  return f;
}

/// Rescale C by K / max(K, ||C||_op) so the operator norm never exceeds K.
/// Inputs already under the cap pass through unchanged (bit-exact), which also
/// makes repeated application a no-op.
inline SpdMatrix cap_operator_norm(const SpdMatrix& c, double cap) {
  if (cap <= 0.0) throw DataError("cap_operator_norm: cap must be positive");
  const double nrm = operator_norm(c);
  if (nrm <= cap * (1.0 + 16.0 * std::numeric_limits<double>::epsilon())) return c;
  return SpdMatrix(c.mat() * (cap / nrm));
}

/// Running covariance estimate with its adaptation counter and norm cap.
struct AdaptiveStat {
  SpdMatrix cov;
  long counter = 1;   // K; the caller's schedule advances it
  double cap = 1e6;   // operator norm bound
};

/// One running-average step: cov <- batch/K + (1 - 1/K) cov, then norm-capped.
/// K = 1 overwrites history with the batch exactly. The counter itself is
/// advanced by the caller.
inline AdaptiveStat running_update(const AdaptiveStat& stat, const SpdMatrix& batch) {
  if (stat.counter < 1) throw DataError("running_update: counter must be >= 1");
  AdaptiveStat out = stat;
  if (stat.counter == 1 || stat.cov.dim() == 0) {
    out.cov = batch;
  } else {
    if (batch.dim() != stat.cov.dim()) {
      throw DataError("running_update: dimension mismatch (" + std::to_string(batch.dim()) +
                      " vs " + std::to_string(stat.cov.dim()) + ")");
    }
    // Incremental form of batch/K + (1-1/K)*cov; exact when batch == cov.
    const double k = static_cast<double>(stat.counter);
    out.cov = SpdMatrix(stat.cov.mat() + (batch.mat() - stat.cov.mat()) / k);
  }
  out.cov = cap_operator_norm(out.cov, stat.cap);
  return out;
}

/// Random SPD matrix with eigenvalues linearly spaced in [eig_min, eig_max]
/// and a Haar-random eigenbasis drawn from the seed.
inline SpdMatrix random_spd(Eigen::Index dim, double eig_min, double eig_max,
                            std::uint64_t seed) {
  if (dim <= 0) throw DataError("random_spd: dimension must be positive");
  if (!(eig_min > 0.0) || eig_min > eig_max) {
    throw DataError("random_spd: need 0 < eig_min <= eig_max");
  }
  Vector eigs(dim);
  if (dim == 1) {
    eigs[0] = eig_min;
  } else {
    for (Eigen::Index i = 0; i < dim; ++i) {
      eigs[i] = eig_min + (eig_max - eig_min) * static_cast<double>(i) /
                              static_cast<double>(dim - 1);
    }
  }
  CounterRng rng(derive_key(seed, static_cast<std::uint64_t>(StreamKind::spd_basis)));
  Matrix g(dim, dim);
  for (Eigen::Index i = 0; i < dim; ++i)
    for (Eigen::Index j = 0; j < dim; ++j) g(i, j) = rng.normal();
  Eigen::HouseholderQR<Matrix> qr(g);
  Matrix q = qr.householderQ();
  Matrix r = qr.matrixQR().triangularView<Eigen::Upper>();
  // Fix the sign convention so Q is Haar distributed.
  for (Eigen::Index j = 0; j < dim; ++j) {
    if (r(j, j) < 0.0) q.col(j) = -q.col(j);
  }
  Matrix a = q * eigs.asDiagonal() * q.transpose();
  return SpdMatrix(0.5 * (a + a.transpose().eval()));
}

}  // namespace twosys
