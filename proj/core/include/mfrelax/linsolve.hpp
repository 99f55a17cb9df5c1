// Sparse linear algebra used by the solvers: a reusable sparse LU handle,
// minimum-norm MINRES for consistent singular symmetric systems, and a deflated
// smallest-eigenvalue estimator for generalized symmetric eigenproblems.
#pragma once

#include <memory>
#include <optional>
#include <stdexcept>
#include <string>

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include "mfrelax/derham.hpp"

namespace mfrelax {

class FactorizationError : public std::runtime_error {
 public:
  FactorizationError(const std::string& what, long pivot_index)
      : std::runtime_error(what), pivot_index_(pivot_index) {}
  /// Column at which elimination broke down, or -1 when not applicable.
  long pivot_index() const { return pivot_index_; }

 private:
  long pivot_index_;
};

/// Immutable sparse LU (partial pivoting, COLAMD ordering). Copies share the
/// factors; concurrent solves are safe.
class Factorization {
 public:
  explicit Factorization(const SparseOperator& a);

  Eigen::VectorXd solve(const Eigen::VectorXd& b) const;
  Eigen::Index rows() const { return rows_; }
  Eigen::Index cols() const { return cols_; }

 private:
  struct Impl;
  std::shared_ptr<const Impl> impl_;
  Eigen::Index rows_ = 0;
  Eigen::Index cols_ = 0;
};

Factorization factorize(const SparseOperator& a);

/// Projector onto the Euclidean complement of range(Z) for a sparse basis Z
/// with full column rank: x - Z (Z^T Z)^{-1} Z^T x.
class NullSpaceProjector {
 public:
  explicit NullSpaceProjector(SparseOperator basis);

  Eigen::VectorXd component(const Eigen::VectorXd& x) const;
  Eigen::VectorXd project_out(const Eigen::VectorXd& x) const;
  const SparseOperator& basis() const { return basis_; }

 private:
  SparseOperator basis_;
  std::optional<Factorization> gram_;
};

struct KrylovReport {
  int iterations = 0;
  double relative_residual = 0.0;
  bool converged = false;
  /// Euclidean norm of the null-space component of the returned solution;
  /// empty when no null-space basis was supplied.
  std::optional<double> null_component_norm;
};

struct MinresOptions {
  double tol = 1e-10;
  int max_iterations = 0;  // 0 selects 4 * n + 100
  const NullSpaceProjector* null_space = nullptr;
  const Eigen::VectorXd* initial_guess = nullptr;
};

struct MinresResult {
  Eigen::VectorXd x;
  KrylovReport report;
};

/// MINRES for symmetric positive semidefinite K with f in range(K). Started
/// from zero the iterates stay in range(K); the optional null-space projector
/// removes any kernel component picked up from an initial guess or rounding.
MinresResult minres_minnorm(const SparseOperator& k, const Eigen::VectorXd& f,
                            const MinresOptions& options = {});

struct EigenOptions {
  double tol = 1e-10;  // relative residual target ||K v - lambda M v|| / (lambda ||M v||)
  int block_size = 6;
  int max_iterations = 2000;
};

struct EigenPair {
  double value = 0.0;
  Eigen::VectorXd vector;  // M-normalized
  int iterations = 0;
  double relative_residual = 0.0;
};

/// Smallest eigenvalue of K x = lambda M x on the M-orthogonal complement of
/// range(deflation). Shift-invert block subspace iteration with Rayleigh-Ritz
/// on the deflated saddle operator [K, M Z; Z^T M, 0].
EigenPair eig_smallest_nonzero(const SparseOperator& k, const SparseOperator& m,
                               const SparseOperator& deflation,
                               const EigenOptions& options = {});

}  // namespace mfrelax
