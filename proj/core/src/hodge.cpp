#include "mfrelax/hodge.hpp"

#include <cmath>

namespace mfrelax {

namespace {

void require_space(const FieldVec& v, SpaceKind kind, const DeRhamComplex& c, const char* who) {
  if (v.space != kind || v.size() != c.dim(kind)) {
    throw std::invalid_argument(std::string(who) + ": expected a " + to_string(kind) +
                                "-space FieldVec");
  }
}

}  // namespace

HodgeSolver::HodgeSolver(const DeRhamComplex& complex, double tol)
    : complex_(&complex), tol_(tol), gradients_(complex.grad) {
  curl_t_mass_ = SparseOperator(complex.curl.transpose()) * complex.mass_face;
  curl_curl_ = curl_t_mass_ * complex.curl;
}

std::pair<FieldVec, KrylovReport> HodgeSolver::recover_potential(
    const FieldVec& B, const Eigen::VectorXd* initial_guess) const {
  const DeRhamComplex& c = *complex_;
  require_space(B, SpaceKind::face, c, "recover_potential");
  const double bmax = B.coeffs.size() ? B.coeffs.cwiseAbs().maxCoeff() : 0.0;
  const Eigen::VectorXd divb = c.div * B.coeffs;
  const double dmax = divb.size() ? divb.cwiseAbs().maxCoeff() : 0.0;
  if (dmax > 1e-10 * bmax) {
    throw PreconditionError("recover_potential: field is not divergence-free (max |div B| = " +
                            std::to_string(dmax) + ")");
  }
  MinresOptions opt;
  opt.tol = tol_;
  opt.null_space = &gradients_;
  opt.initial_guess = initial_guess;
  auto res = minres_minnorm(curl_curl_, curl_t_mass_ * B.coeffs, opt);
  return {FieldVec{SpaceKind::edge, std::move(res.x)}, res.report};
}

HodgeResult HodgeSolver::decompose(const FieldVec& B) const {
  const DeRhamComplex& c = *complex_;
  auto [A, report] = recover_potential(B);
  HodgeResult r;
  r.B_H = harmonic_component(c, B, A);
  r.helicity = helicity(c, A, B);
  r.gen_helicity = generalized_helicity(c, A, B, r.B_H);
  r.A = std::move(A);
  r.report = report;
  return r;
}

std::pair<FieldVec, KrylovReport> recover_potential(const DeRhamComplex& complex,
                                                    const FieldVec& B) {
  return HodgeSolver(complex).recover_potential(B);
}

FieldVec harmonic_component(const DeRhamComplex& c, const FieldVec& B, const FieldVec& A) {
  require_space(B, SpaceKind::face, c, "harmonic_component");
  require_space(A, SpaceKind::edge, c, "harmonic_component");
  return FieldVec{SpaceKind::face, B.coeffs - c.curl * A.coeffs};
}

double helicity(const DeRhamComplex& c, const FieldVec& A, const FieldVec& B) {
  require_space(A, SpaceKind::edge, c, "helicity");
  require_space(B, SpaceKind::face, c, "helicity");
  return A.coeffs.dot(c.mixed * B.coeffs);
}

double generalized_helicity(const DeRhamComplex& c, const FieldVec& A, const FieldVec& B,
                            const FieldVec& B_H) {
  require_space(A, SpaceKind::edge, c, "generalized_helicity");
  require_space(B, SpaceKind::face, c, "generalized_helicity");
  require_space(B_H, SpaceKind::face, c, "generalized_helicity");
  return A.coeffs.dot(c.mixed * (B.coeffs + B_H.coeffs));
}

PoincareEstimate estimate_arnold_constant(const DeRhamComplex& c, const EigenOptions& options) {
  const SparseOperator k =
      SparseOperator(c.curl.transpose()) * c.mass_face * c.curl;
  const EigenPair pair = eig_smallest_nonzero(k, c.mass_edge, c.grad, options);
  PoincareEstimate est;
  est.lambda_min = pair.value;
  est.C = std::sqrt(pair.value);
  est.C_generalized = c.harmonic_dim > 0 ? 0.5 * est.C : est.C;
  est.eigenvector = FieldVec{SpaceKind::edge, pair.vector};
  est.relative_residual = pair.relative_residual;
  est.iterations = pair.iterations;
  return est;
}

}  // namespace mfrelax
