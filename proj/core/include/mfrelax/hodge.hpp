// Vector potential recovery, discrete Hodge decomposition B = curl A + B_H,
// (generalized) helicity, and the discrete Poincare/Arnold constant.
#pragma once

#include <optional>

#include "mfrelax/derham.hpp"
#include "mfrelax/linsolve.hpp"

namespace mfrelax {

struct HodgeResult {
  FieldVec A;    // edge space
  FieldVec B_H;  // face space
  double helicity = 0.0;
  double gen_helicity = 0.0;
  KrylovReport report;
};

/// Thrown when a potential is requested for a field that is not discretely
/// divergence-free.
class PreconditionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Reusable curl-curl solver: (curl A, curl C) = (B, curl C) for all C in the
/// constrained edge space, solved by MINRES with the gradient columns as the
/// known kernel basis.
class HodgeSolver {
 public:
  explicit HodgeSolver(const DeRhamComplex& complex, double tol = 1e-12);

  /// A with D_curl A the M_face-orthogonal projection of B onto range(D_curl).
  std::pair<FieldVec, KrylovReport> recover_potential(
      const FieldVec& B, const Eigen::VectorXd* initial_guess = nullptr) const;
  HodgeResult decompose(const FieldVec& B) const;

  const SparseOperator& curl_curl() const { return curl_curl_; }
  const DeRhamComplex& complex() const { return *complex_; }

 private:
  const DeRhamComplex* complex_;
  double tol_;
  SparseOperator curl_curl_;
  SparseOperator curl_t_mass_;
  NullSpaceProjector gradients_;
};

std::pair<FieldVec, KrylovReport> recover_potential(const DeRhamComplex& complex,
                                                    const FieldVec& B);
/// B - D_curl A.
FieldVec harmonic_component(const DeRhamComplex& complex, const FieldVec& B, const FieldVec& A);
/// A^T M_mixed B.
double helicity(const DeRhamComplex& complex, const FieldVec& A, const FieldVec& B);
/// A^T M_mixed (B + B_H).
double generalized_helicity(const DeRhamComplex& complex, const FieldVec& A, const FieldVec& B,
                            const FieldVec& B_H);

struct PoincareEstimate {
  double lambda_min = 0.0;
  /// sqrt(lambda_min): C |H| <= E for div-free B on topologically trivial domains.
  double C = 0.0;
  /// Constant of the generalized inequality C~ |H~| <= E. Equals C on trivial
  /// domains and C / 2 when a harmonic field is present.
  double C_generalized = 0.0;
  FieldVec eigenvector;  // edge space, M_edge-normalized
  double relative_residual = 0.0;
  int iterations = 0;
};

/// Smallest nonzero eigenvalue of (curl A, curl C) = lambda (A, C) on the
/// constrained edge space, deflating the gradient kernel.
PoincareEstimate estimate_arnold_constant(const DeRhamComplex& complex,
                                          const EigenOptions& options = {});

}  // namespace mfrelax
