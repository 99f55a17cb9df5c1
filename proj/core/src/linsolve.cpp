#include "mfrelax/linsolve.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <regex>

#include <Eigen/Dense>
#include <Eigen/OrderingMethods>
#include <Eigen/SparseLU>

namespace mfrelax {

namespace {

using ColMajorSparse = Eigen::SparseMatrix<double, Eigen::ColMajor, int>;
using Triplet = Eigen::Triplet<double, int>;

long trailing_integer(const std::string& s) {
  static const std::regex re("(-?[0-9]+)\\s*$");
  std::smatch m;
  if (std::regex_search(s, m, re)) return std::stol(m[1].str());
  return -1;
}

}  // namespace

struct Factorization::Impl {
  Eigen::SparseLU<ColMajorSparse, Eigen::COLAMDOrdering<int>> lu;
};

Factorization::Factorization(const SparseOperator& a) : rows_(a.rows()), cols_(a.cols()) {
  if (a.rows() != a.cols()) {
    throw FactorizationError("factorize: matrix is " + std::to_string(a.rows()) + "x" +
                                 std::to_string(a.cols()) + ", not square",
                             -1);
  }
  auto impl = std::make_shared<Impl>();
  if (a.rows() > 0) {
    ColMajorSparse cm(a);
    cm.makeCompressed();
    impl->lu.analyzePattern(cm);
    impl->lu.factorize(cm);
    if (impl->lu.info() != Eigen::Success) {
      const std::string msg = impl->lu.lastErrorMessage();
      // Eigen reports the 1-based column of the zero pivot.
      const long col = trailing_integer(msg);
      throw FactorizationError("factorize: singular pivot (" + msg + ")",
                               col > 0 ? col - 1 : col);
    }
  }
  impl_ = std::move(impl);
}

Eigen::VectorXd Factorization::solve(const Eigen::VectorXd& b) const {
  if (b.size() != rows_) throw std::invalid_argument("Factorization::solve: size mismatch");
  if (rows_ == 0) return Eigen::VectorXd();
  Eigen::VectorXd x = impl_->lu.solve(b);
  return x;
}

Factorization factorize(const SparseOperator& a) { return Factorization(a); }

NullSpaceProjector::NullSpaceProjector(SparseOperator basis) : basis_(std::move(basis)) {
  if (basis_.cols() > 0) {
    const SparseOperator gram = SparseOperator(basis_.transpose()) * basis_;
    gram_.emplace(gram);
  }
}

Eigen::VectorXd NullSpaceProjector::component(const Eigen::VectorXd& x) const {
  if (!gram_) return Eigen::VectorXd::Zero(x.size());
  const Eigen::VectorXd zx = basis_.transpose() * x;
  return basis_ * gram_->solve(zx);
}

Eigen::VectorXd NullSpaceProjector::project_out(const Eigen::VectorXd& x) const {
  return x - component(x);
}

MinresResult minres_minnorm(const SparseOperator& k, const Eigen::VectorXd& f,
                            const MinresOptions& opt) {
  const Eigen::Index n = k.rows();
  if (k.rows() != k.cols() || f.size() != n) {
    throw std::invalid_argument("minres_minnorm: dimension mismatch");
  }
  MinresResult out;
  out.x = opt.initial_guess ? *opt.initial_guess : Eigen::VectorXd::Zero(n);
  if (out.x.size() != n) throw std::invalid_argument("minres_minnorm: bad initial guess size");

  const double fnorm = f.norm();
  const int max_it = opt.max_iterations > 0 ? opt.max_iterations : static_cast<int>(4 * n + 100);
  const double eps = std::numeric_limits<double>::epsilon();
  KrylovReport& rep = out.report;

  auto finish = [&](void) {
    if (opt.null_space) {
      out.x = opt.null_space->project_out(out.x);
      rep.null_component_norm = opt.null_space->component(out.x).norm();
    }
    const double rtrue = (f - k * out.x).norm();
    rep.relative_residual = fnorm > 0.0 ? rtrue / fnorm : rtrue;
    rep.converged = fnorm > 0.0 ? rtrue <= opt.tol * fnorm : rtrue == 0.0;
  };

  if (fnorm == 0.0) {
    out.x.setZero();
    finish();
    return out;
  }

  // Restarted only when the recurrence residual and the true residual disagree.
  for (int restart = 0; restart < 6 && rep.iterations < max_it; ++restart) {
    Eigen::VectorXd r1 = f - k * out.x;
    const double beta1 = r1.norm();
    if (beta1 <= opt.tol * fnorm) break;

    Eigen::VectorXd y = r1;
    Eigen::VectorXd r2 = r1;
    Eigen::VectorXd w = Eigen::VectorXd::Zero(n);
    Eigen::VectorXd w1 = w;
    Eigen::VectorXd w2 = w;
    double oldb = 0.0;
    double beta = beta1;
    double dbar = 0.0;
    double epsln = 0.0;
    double phibar = beta1;
    double cs = -1.0;
    double sn = 0.0;

    while (rep.iterations < max_it) {
      ++rep.iterations;
      const Eigen::VectorXd v = y / beta;
      y = k * v;
      if (oldb != 0.0) y -= (beta / oldb) * r1;
      const double alfa = v.dot(y);
      y -= (alfa / beta) * r2;
      r1 = r2;
      r2 = y;
      oldb = beta;
      beta = y.norm();

      const double oldeps = epsln;
      const double delta = cs * dbar + sn * alfa;
      const double gbar = sn * dbar - cs * alfa;
      epsln = sn * beta;
      dbar = -cs * beta;
      double gamma = std::max(std::hypot(gbar, beta), eps);
      cs = gbar / gamma;
      sn = beta / gamma;
      const double phi = cs * phibar;
      phibar = sn * phibar;

      w1 = w2;
      w2 = w;
      w = (v - oldeps * w1 - delta * w2) / gamma;
      out.x += phi * w;

      if (phibar <= 0.5 * opt.tol * fnorm) break;
      if (beta <= eps * beta1) break;  // Krylov space exhausted
    }
    if ((f - k * out.x).norm() <= opt.tol * fnorm) break;
  }
  finish();
  return out;
}

EigenPair eig_smallest_nonzero(const SparseOperator& k, const SparseOperator& m,
                               const SparseOperator& z, const EigenOptions& opt) {
  const Eigen::Index n = k.rows();
  if (k.cols() != n || m.rows() != n || m.cols() != n || (z.cols() > 0 && z.rows() != n)) {
    throw std::invalid_argument("eig_smallest_nonzero: dimension mismatch");
  }
  const Eigen::Index nz = z.cols();
  const Eigen::Index free_dim = n - nz;
  if (free_dim <= 0) throw std::invalid_argument("eig_smallest_nonzero: nothing left after deflation");

  // Saddle operator [K, M Z; Z^T M, 0].
  SparseOperator saddle(n + nz, n + nz);
  {
    std::vector<Triplet> t;
    for (int r = 0; r < k.outerSize(); ++r) {
      for (SparseOperator::InnerIterator it(k, r); it; ++it) t.emplace_back(r, it.col(), it.value());
    }
    if (nz > 0) {
      const SparseOperator mz = m * z;
      for (int r = 0; r < mz.outerSize(); ++r) {
        for (SparseOperator::InnerIterator it(mz, r); it; ++it) {
          t.emplace_back(r, n + it.col(), it.value());
          t.emplace_back(n + it.col(), r, it.value());
        }
      }
    }
    saddle.setFromTriplets(t.begin(), t.end());
    saddle.makeCompressed();
  }
  const Factorization inv(saddle);
  auto apply_inverse = [&](const Eigen::VectorXd& v) {
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n + nz);
    rhs.head(n) = m * v;
    return Eigen::VectorXd(inv.solve(rhs).head(n));
  };

  const int p = static_cast<int>(std::min<Eigen::Index>(opt.block_size, free_dim));
  std::mt19937_64 rng(0x5eed5eedULL);
  std::normal_distribution<double> normal;
  Eigen::MatrixXd x(n, p);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (int j = 0; j < p; ++j) x(i, j) = normal(rng);
  }

  auto m_orthonormalize = [&](Eigen::MatrixXd& v) {
    for (int pass = 0; pass < 2; ++pass) {
      for (int j = 0; j < v.cols(); ++j) {
        for (int i = 0; i < j; ++i) {
          const double c = v.col(i).dot(m * v.col(j));
          v.col(j) -= c * v.col(i);
        }
        const double nrm = std::sqrt(v.col(j).dot(m * v.col(j)));
        if (!(nrm > 1e-300)) {
          throw std::runtime_error("eig_smallest_nonzero: subspace collapsed");
        }
        v.col(j) /= nrm;
      }
    }
  };

  EigenPair best;
  double last = std::numeric_limits<double>::infinity();
  double last_res = std::numeric_limits<double>::infinity();
  for (int it = 1; it <= opt.max_iterations; ++it) {
    for (int j = 0; j < p; ++j) x.col(j) = apply_inverse(x.col(j));
    m_orthonormalize(x);
    Eigen::MatrixXd kx(n, p);
    for (int j = 0; j < p; ++j) kx.col(j) = k * x.col(j);
    Eigen::MatrixXd kr = x.transpose() * kx;
    kr = 0.5 * (kr + kr.transpose()).eval();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(kr);
    if (es.info() != Eigen::Success) throw std::runtime_error("eig_smallest_nonzero: Ritz step failed");
    x = (x * es.eigenvectors()).eval();
    const double lambda = es.eigenvalues()[0];
    const Eigen::VectorXd v = x.col(0);
    const Eigen::VectorXd mv = m * v;
    const double res = (k * v - lambda * mv).norm() / (std::abs(lambda) * mv.norm());
    best = {lambda, v, it, res};
    // Below tol, or stuck at the rounding floor: neither the Ritz value nor
    // the residual improves any more.
    const bool stalled = std::abs(lambda - last) <= 1e-15 * std::abs(lambda) && res >= 0.5 * last_res;
    if (res <= opt.tol || (stalled && res <= 1e3 * opt.tol)) return best;
    last = lambda;
    last_res = res;
  }
  return best;
}

}  // namespace mfrelax
