#include <gtest/gtest.h>

#include "mfrelax/derham.hpp"
#include "oracles.hpp"

using namespace mfrelax;

namespace {

BoxMesh cube2(bool periodic) {
  return build_box_mesh({Interval{-1, 1}, Interval{-1, 1}, Interval{-1, 1}}, {2, 2, 2}, periodic);
}
BoxMesh desk(bool periodic) {
  return build_box_mesh({Interval{-4, 4}, Interval{-4, 4}, Interval{-10, 10}}, {4, 4, 10}, periodic);
}
BoxMesh skewed() {
  return build_box_mesh({Interval{0, 1}, Interval{-1, 2}, Interval{0.5, 3}}, {2, 3, 4}, false);
}

double rel_gap(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  return (a - b).cwiseAbs().maxCoeff() / std::max(oracle::max_abs(b), 1e-300);
}

}  // namespace

TEST(DeRham, CompositionsVanishExactly) {
  for (const BoxMesh& m : {cube2(false), cube2(true), desk(false), desk(true)}) {
    const DeRhamComplex c = build_complex(m);
    EXPECT_EQ(oracle::max_abs(oracle::dense(c.curl_full * c.grad_full)), 0.0);
    EXPECT_EQ(oracle::max_abs(oracle::dense(c.div_full * c.curl_full)), 0.0);
    EXPECT_EQ(oracle::max_abs(oracle::dense(c.curl * c.grad)), 0.0);
    EXPECT_EQ(oracle::max_abs(oracle::dense(c.div * c.curl)), 0.0);
  }
}

TEST(DeRham, IncidenceEntriesAreSigns) {
  const DeRhamComplex c = build_complex(desk(true));
  for (const SparseOperator* op : {&c.grad_full, &c.curl_full, &c.div_full}) {
    for (int r = 0; r < op->outerSize(); ++r) {
      for (SparseOperator::InnerIterator it(*op, r); it; ++it) {
        EXPECT_TRUE(it.value() == 1.0 || it.value() == -1.0 || it.value() == 0.0);
      }
    }
  }
}

TEST(DeRham, CohomologyMatchesTopology) {
  struct Case {
    BoxMesh mesh;
    int harmonic;
  };
  for (const Case& k : {Case{cube2(false), 0}, Case{cube2(true), 1}, Case{desk(false), 0}, Case{desk(true), 1}}) {
    const DeRhamComplex c = build_complex(k.mesh);
    const oracle::Betti b = oracle::reduced_betti(c);
    EXPECT_EQ(b.b0, 0);
    EXPECT_EQ(b.b1, 0);
    EXPECT_EQ(b.b2, k.harmonic);
    EXPECT_EQ(b.b3, 0);
    EXPECT_EQ(c.harmonic_dim, k.harmonic);
    const ComplexReport r = verify_complex(c, 5000);
    EXPECT_TRUE(r.passed);
    EXPECT_EQ(r.rank_grad, oracle::dense_rank(oracle::dense(c.grad)));
    EXPECT_EQ(r.rank_curl, oracle::dense_rank(oracle::dense(c.curl)));
    EXPECT_EQ(r.rank_div, oracle::dense_rank(oracle::dense(c.div)));
    EXPECT_EQ(r.face_defect, k.harmonic);
  }
}

TEST(DeRham, MassMatricesMatchQuadrature) {
  for (const BoxMesh& m : {cube2(false), cube2(true), skewed()}) {
    for (int d = 0; d <= 3; ++d) {
      EXPECT_LE(rel_gap(oracle::dense(assemble_mass_full(m, d)), oracle::quadrature_mass(m, d)), 1e-14)
          << "dim " << d << " on " << m.descriptor();
    }
    EXPECT_LE(rel_gap(oracle::dense(assemble_mixed_mass_full(m)), oracle::quadrature_mixed(m)), 1e-14);
  }
}

TEST(DeRham, RestrictedMassesAreSubmatrices) {
  const BoxMesh m = skewed();
  const DeRhamComplex c = build_complex(m);
  const Eigen::MatrixXd me = oracle::quadrature_mass(m, 1);
  const Eigen::MatrixXd mf = oracle::quadrature_mass(m, 2);
  const Eigen::MatrixXd mm = oracle::quadrature_mixed(m);
  const Eigen::MatrixXd ce = oracle::dense(c.mass_edge);
  const Eigen::MatrixXd cf = oracle::dense(c.mass_face);
  const Eigen::MatrixXd cm = oracle::dense(c.mixed);
  const auto& ed = c.edge_dofs.entity;
  const auto& fd = c.face_dofs.entity;
  for (std::size_t i = 0; i < ed.size(); ++i) {
    for (std::size_t j = 0; j < ed.size(); ++j) EXPECT_NEAR(ce(i, j), me(ed[i], ed[j]), 1e-14);
    for (std::size_t j = 0; j < fd.size(); ++j) EXPECT_NEAR(cm(i, j), mm(ed[i], fd[j]), 1e-14);
  }
  for (std::size_t i = 0; i < fd.size(); ++i) {
    for (std::size_t j = 0; j < fd.size(); ++j) EXPECT_NEAR(cf(i, j), mf(fd[i], fd[j]), 1e-14);
  }
}

TEST(DeRham, NodalVectorMassIsBlockDiagonal) {
  const BoxMesh m = skewed();
  const DeRhamComplex c = build_complex(m);
  const Eigen::MatrixXd mn = oracle::quadrature_mass(m, 0);
  const Eigen::MatrixXd mv = oracle::dense(c.mass_nodal_vector);
  const auto& ent = c.nodal_vector_dofs.entity;
  for (std::size_t i = 0; i < ent.size(); ++i) {
    for (std::size_t j = 0; j < ent.size(); ++j) {
      const double expect = ent[i] % 3 == ent[j] % 3 ? mn(ent[i] / 3, ent[j] / 3) : 0.0;
      EXPECT_NEAR(mv(i, j), expect, 1e-14);
    }
  }
}

TEST(DeRham, InteriorDiagonalEntries) {
  const BoxMesh m = desk(false);
  const DeRhamComplex c = build_complex(m);
  // h = 2: edge 4 * (8 / 4 / 9), face 2 * (8 / 16 / 3), cell 1 / 8.
  const int e = m.index_of(EntityId{EntityKind::edge_z, {2, 2, 4}});
  const int f = m.index_of(EntityId{EntityKind::face_x, {2, 1, 4}});
  EXPECT_NEAR(c.mass_edge_full.coeff(e, e), 8.0 / 9.0, 1e-15);
  EXPECT_NEAR(c.mass_face_full.coeff(f, f), 1.0 / 3.0, 1e-15);
  EXPECT_NEAR(c.mass_cell.coeff(7, 7), 0.125, 1e-15);
}

TEST(DeRham, MixedPairingOfConstantsIsVolume) {
  const BoxMesh m = desk(true);
  const DeRhamComplex c = build_complex(m);
  const Vec3 a(1.0, 2.0, 3.0);
  const Vec3 b(3.0, -1.0, 2.0);
  const Eigen::VectorXd ea = interpolate_entities(m, [&](const Vec3&) { return a; }, 1);
  const Eigen::VectorXd fb = interpolate_entities(m, [&](const Vec3&) { return b; }, 2);
  EXPECT_NEAR(ea.dot(c.mixed_full * fb), 1280.0 * a.dot(b), 1e-10);
  const Eigen::VectorXd ez = interpolate_entities(m, [](const Vec3&) { return Vec3(0, 0, 1); }, 1);
  const Eigen::VectorXd fz = interpolate_entities(m, [](const Vec3&) { return Vec3(0, 0, 1); }, 2);
  EXPECT_NEAR(ez.dot(c.mixed_full * fz), 1280.0, 1e-10);
}

TEST(DeRham, CommutingDiagramForQuadraticFields) {
  for (const BoxMesh& m : {skewed(), desk(false)}) {
    const DeRhamComplex c = build_complex(m);
    const Eigen::VectorXd nodal_xyz =
        interpolate_entities(m, [](const Vec3& x) { return Vec3(oracle::quad_scalar(x), 0, 0); }, 0);
    Eigen::VectorXd phi(m.count_dim(0));
    for (int v = 0; v < phi.size(); ++v) phi[v] = nodal_xyz[3 * v];
    const Eigen::VectorXd g = interpolate_entities(m, oracle::quad_scalar_grad, 1);
    EXPECT_LE((c.grad_full * phi - g).lpNorm<Eigen::Infinity>(), 1e-12 * g.lpNorm<Eigen::Infinity>());

    const Eigen::VectorXd e = interpolate_entities(m, oracle::quad_field, 1);
    const Eigen::VectorXd f = interpolate_entities(m, oracle::quad_field_curl, 2);
    EXPECT_LE((c.curl_full * e - f).lpNorm<Eigen::Infinity>(), 1e-12 * f.lpNorm<Eigen::Infinity>());

    const Eigen::VectorXd b = interpolate_entities(m, oracle::quad_field, 2);
    const Eigen::VectorXd d = oracle::cell_integrals(m, oracle::quad_field_div);
    EXPECT_LE((c.div_full * b - d).lpNorm<Eigen::Infinity>(), 1e-12 * d.lpNorm<Eigen::Infinity>());
  }
}

TEST(DeRham, DofMapRoundTrip) {
  const DeRhamComplex c = build_complex(desk(true));
  const Eigen::VectorXd v = oracle::random_vector(c.dim(SpaceKind::face), 3);
  EXPECT_EQ(c.face_dofs.restrict(c.face_dofs.prolong(v)), v);
  EXPECT_EQ(c.dim(SpaceKind::face), 560 - 160);
  EXPECT_THROW(c.face_dofs.restrict(v), std::invalid_argument);
}
