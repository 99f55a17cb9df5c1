#include "mfrelax/fields.hpp"

#include <cmath>
#include <stdexcept>

#include "mfrelax/linsolve.hpp"

namespace mfrelax {

VectorField hopf_field(const HopfParams& p) {
  const double wnorm = std::hypot(p.omega1, p.omega2);
  if (!(wnorm > 0.0)) throw std::invalid_argument("hopf_field: omega1^2 + omega2^2 must be > 0");
  if (p.s < 0.0) throw std::invalid_argument("hopf_field: s must be >= 0");
  const double w1 = p.omega1;
  const double w2 = p.omega2;
  const double scale = 4.0 * std::sqrt(p.s) / (M_PI * wnorm);
  return [=](const Vec3& x) -> Vec3 {
    const double r2 = x.squaredNorm();
    const double d = 1.0 + r2;
    const double pre = scale / (d * d * d);
    return pre * Vec3(2.0 * (w2 * x[1] - w1 * x[0] * x[2]),
                      -2.0 * (w2 * x[0] + w1 * x[1] * x[2]),
                      w1 * (-1.0 + x[0] * x[0] + x[1] * x[1] - x[2] * x[2]));
  };
}

VectorField isohelix_field() {
  return [](const Vec3& x) -> Vec3 {
    const double r2 = x[0] * x[0] + x[1] * x[1];
    const double alpha = 0.5 * M_PI * x[2] * std::exp(-0.5 * r2 - 0.25 * x[2] * x[2]);
    return Vec3(alpha * x[1], -alpha * x[0], 1.0);
  };
}

VectorField initial_field(const ICKind& ic) {
  if (const auto* h = std::get_if<HopfParams>(&ic)) return hopf_field(*h);
  return isohelix_field();
}

Projection project_divfree(const DeRhamComplex& c, const FieldVec& raw) {
  if (raw.space != SpaceKind::face || raw.size() != c.dim(SpaceKind::face)) {
    throw std::invalid_argument("project_divfree: input must be a face-space FieldVec");
  }
  using Triplet = Eigen::Triplet<double, int>;
  const int nf = c.dim(SpaceKind::face);
  const int nc = c.dim(SpaceKind::cell);
  const int n = nf + nc + 1;

  // [ M_f       -D^T M_c   0 ]
  // [ -M_c D     0         1 ]
  // [ 0          1^T       0 ]
  const SparseOperator mcd = c.mass_cell * c.div;
  std::vector<Triplet> t;
  for (int r = 0; r < nf; ++r) {
    for (SparseOperator::InnerIterator it(c.mass_face, r); it; ++it) t.emplace_back(r, it.col(), it.value());
  }
  for (int r = 0; r < nc; ++r) {
    for (SparseOperator::InnerIterator it(mcd, r); it; ++it) {
      t.emplace_back(nf + r, it.col(), -it.value());
      t.emplace_back(it.col(), nf + r, -it.value());
    }
    t.emplace_back(nf + r, nf + nc, 1.0);
    t.emplace_back(nf + nc, nf + r, 1.0);
  }
  SparseOperator saddle(n, n);
  saddle.setFromTriplets(t.begin(), t.end());
  saddle.makeCompressed();

  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n);
  rhs.head(nf) = c.mass_face * raw.coeffs;
  const Eigen::VectorXd sol = factorize(saddle).solve(rhs);

  Projection out;
  out.B = FieldVec{SpaceKind::face, sol.head(nf)};
  out.p = FieldVec{SpaceKind::cell, sol.segment(nf, nc)};
  return out;
}

}  // namespace mfrelax
