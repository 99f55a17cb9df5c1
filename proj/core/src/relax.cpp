#include "mfrelax/relax.hpp"

#include <chrono>
#include <cmath>
#include <optional>

#include <Eigen/Geometry>
#include <Eigen/LU>

#include "mfrelax/cell_basis.hpp"

namespace mfrelax {

namespace {

using Triplet = Eigen::Triplet<double, int>;

// Local basis data of one space, shared by every cell of the uniform mesh.
struct LocalTable {
  int n = 0;
  std::vector<int> dofs;    // [cell * n + l], -1 when constrained
  std::vector<Vec3> value;  // [q * n + l]
  std::vector<Vec3> curl;   // [q * n + l], empty for spaces without a curl
};

void append(std::vector<Triplet>& t, const SparseOperator& m, int row_off, int col_off,
            double scale) {
  for (int r = 0; r < m.outerSize(); ++r) {
    for (SparseOperator::InnerIterator it(m, r); it; ++it) {
      t.emplace_back(row_off + r, col_off + static_cast<int>(it.col()), scale * it.value());
    }
  }
}

Vec3 eval(const LocalTable& tab, const std::vector<Vec3>& basis, int cell, int q,
          const Eigen::VectorXd& x) {
  Vec3 v = Vec3::Zero();
  for (int l = 0; l < tab.n; ++l) {
    const int d = tab.dofs[cell * tab.n + l];
    if (d >= 0) v += x[d] * basis[q * tab.n + l];
  }
  return v;
}

void require(const FieldVec& v, SpaceKind kind, const DeRhamComplex& c, const char* who) {
  if (v.space != kind || v.size() != c.dim(kind)) {
    throw std::invalid_argument(std::string(who) + ": expected a " + to_string(kind) +
                                "-space FieldVec of size " + std::to_string(c.dim(kind)));
  }
}

}  // namespace

struct Stepper::Tables {
  CellQuadrature quad;
  LocalTable edge;
  LocalTable edge_full;
  LocalTable face;
  LocalTable nvec;
  SparseOperator mf_curl;    // M_f C
  SparseOperator curl_t_mf;  // C^T M_f
  std::optional<Factorization> edge_lu;
  std::optional<Factorization> face_lu;
  std::optional<Factorization> nvec_lu;
  // Block elimination: (j, H) corrections as lift * dB, i.e.
  // [M_e^-1 C^T M_f; M_e^-1 M_mixed] for sp and [M_e^-1 C^T M_f; I] for hdiv_noH.
  bool block = false;
  Eigen::MatrixXd lift_sp;
  Eigen::MatrixXd lift_noh;
};

namespace {

Eigen::MatrixXd solve_columns(const Factorization& f, const Eigen::MatrixXd& b) {
  Eigen::MatrixXd x(f.cols(), b.cols());
  for (Eigen::Index k = 0; k < b.cols(); ++k) x.col(k) = f.solve(b.col(k));
  return x;
}

std::shared_ptr<const Stepper::Tables> build_tables(const DeRhamComplex& c, int points, bool block) {
  auto t = std::make_shared<Stepper::Tables>();
  const BoxMesh& mesh = c.mesh;
  t->quad = make_cell_quadrature(mesh.spacing(), points);
  const int nq = t->quad.size();
  const auto [nx, ny, nz] = mesh.resolution();
  const int ncell = nx * ny * nz;

  t->edge.n = t->edge_full.n = kCellEdges;
  t->face.n = kCellFaces;
  t->nvec.n = 3 * kCellVertices;
  t->edge.dofs.assign(ncell * kCellEdges, -1);
  t->edge_full.dofs.assign(ncell * kCellEdges, -1);
  t->face.dofs.assign(ncell * kCellFaces, -1);
  t->nvec.dofs.assign(ncell * 3 * kCellVertices, -1);

  for (int k = 0; k < nz; ++k) {
    for (int j = 0; j < ny; ++j) {
      for (int i = 0; i < nx; ++i) {
        const int cell = mesh.cell_index(i, j, k);
        const auto edges = cell_edges(mesh, i, j, k);
        for (int l = 0; l < kCellEdges; ++l) {
          const int e = mesh.index_of(edges[l]);
          t->edge_full.dofs[cell * kCellEdges + l] = e;
          t->edge.dofs[cell * kCellEdges + l] = c.edge_dofs.free_index[e];
        }
        const auto faces = cell_faces(mesh, i, j, k);
        for (int l = 0; l < kCellFaces; ++l) {
          t->face.dofs[cell * kCellFaces + l] = c.face_dofs.free_index[mesh.index_of(faces[l])];
        }
        const auto verts = cell_vertices(mesh, i, j, k);
        for (int l = 0; l < kCellVertices; ++l) {
          const int v = mesh.index_of(verts[l]);
          for (int comp = 0; comp < 3; ++comp) {
            t->nvec.dofs[cell * 3 * kCellVertices + 3 * l + comp] =
                c.nodal_vector_dofs.free_index[3 * v + comp];
          }
        }
      }
    }
  }

  for (LocalTable* tab : {&t->edge, &t->edge_full}) {
    tab->value.resize(nq * kCellEdges);
    tab->curl.resize(nq * kCellEdges);
    for (int q = 0; q < nq; ++q) {
      for (int l = 0; l < kCellEdges; ++l) {
        tab->value[q * kCellEdges + l] = t->quad.edge_value[q][l];
        tab->curl[q * kCellEdges + l] = t->quad.edge_curl[q][l];
      }
    }
  }
  t->face.value.resize(nq * kCellFaces);
  for (int q = 0; q < nq; ++q) {
    for (int l = 0; l < kCellFaces; ++l) t->face.value[q * kCellFaces + l] = t->quad.face_value[q][l];
  }
  const int nv = t->nvec.n;
  t->nvec.value.resize(nq * nv);
  t->nvec.curl.resize(nq * nv);
  for (int q = 0; q < nq; ++q) {
    for (int l = 0; l < kCellVertices; ++l) {
      for (int comp = 0; comp < 3; ++comp) {
        const Vec3 e = Vec3::Unit(comp);
        t->nvec.value[q * nv + 3 * l + comp] = t->quad.vertex_value[q][l] * e;
        t->nvec.curl[q * nv + 3 * l + comp] = t->quad.vertex_grad[q][l].cross(e);
      }
    }
  }

  t->mf_curl = c.mass_face * c.curl;
  t->curl_t_mf = SparseOperator(c.curl.transpose()) * c.mass_face;
  t->edge_lu.emplace(c.mass_edge);
  t->face_lu.emplace(c.mass_face);
  t->nvec_lu.emplace(c.mass_nodal_vector);
  if (block) {
    const int nf = c.dim(SpaceKind::face);
    const int ne = c.dim(SpaceKind::edge);
    const Eigen::MatrixXd x = solve_columns(*t->edge_lu, Eigen::MatrixXd(t->curl_t_mf));
    t->lift_sp.resize(2 * ne, nf);
    t->lift_sp.topRows(ne) = x;
    t->lift_sp.bottomRows(ne) = solve_columns(*t->edge_lu, Eigen::MatrixXd(c.mixed));
    t->lift_noh.resize(ne + nf, nf);
    t->lift_noh.topRows(ne) = x;
    t->lift_noh.bottomRows(nf).setIdentity();
    t->block = true;
  }
  return t;
}

// T_i = sum_q w ((j x H) x H) . phi_i over edge test functions, with optional
// derivatives. Rows go to row_off, j columns to j_off, H columns to h_off.
struct LorentzOut {
  Eigen::VectorXd* value = nullptr;
  std::vector<Triplet>* jac = nullptr;
  int row_off = 0;
  int j_off = 0;
  int h_off = 0;
  double scale = 1.0;
  double norm_sq = 0.0;
};

void lorentz(const Stepper::Tables& t, const LocalTable& ht, const Eigen::VectorXd& j,
             const Eigen::VectorXd& H, LorentzOut& out) {
  const LocalTable& jt = t.edge;
  const int nq = t.quad.size();
  const int ncell = static_cast<int>(jt.dofs.size()) / jt.n;
  Eigen::MatrixXd djl(jt.n, jt.n);
  Eigen::MatrixXd dhl(jt.n, ht.n);
  Eigen::VectorXd vl(jt.n);
  for (int cell = 0; cell < ncell; ++cell) {
    vl.setZero();
    djl.setZero();
    dhl.setZero();
    for (int q = 0; q < nq; ++q) {
      const double w = t.quad.weights[q];
      const Vec3 jq = eval(jt, jt.value, cell, q, j);
      const Vec3 hq = eval(ht, ht.value, cell, q, H);
      const Vec3 jxh = jq.cross(hq);
      const Vec3 g = jxh.cross(hq);
      out.norm_sq += w * jxh.squaredNorm();
      const Vec3* phi = &jt.value[q * jt.n];
      const Vec3* chi = &ht.value[q * ht.n];
      for (int i = 0; i < jt.n; ++i) vl[i] += w * g.dot(phi[i]);
      if (!out.jac) continue;
      for (int k = 0; k < jt.n; ++k) {
        const Vec3 dg = phi[k].cross(hq).cross(hq);
        for (int i = 0; i < jt.n; ++i) djl(i, k) += w * dg.dot(phi[i]);
      }
      for (int k = 0; k < ht.n; ++k) {
        const Vec3 dg = jq.cross(chi[k]).cross(hq) + jxh.cross(chi[k]);
        for (int i = 0; i < jt.n; ++i) dhl(i, k) += w * dg.dot(phi[i]);
      }
    }
    for (int i = 0; i < jt.n; ++i) {
      const int r = jt.dofs[cell * jt.n + i];
      if (r < 0) continue;
      if (out.value) (*out.value)[out.row_off + r] += out.scale * vl[i];
      if (!out.jac) continue;
      for (int k = 0; k < jt.n; ++k) {
        const int col = jt.dofs[cell * jt.n + k];
        if (col >= 0) out.jac->emplace_back(out.row_off + r, out.j_off + col, out.scale * djl(i, k));
      }
      for (int k = 0; k < ht.n; ++k) {
        const int col = ht.dofs[cell * ht.n + k];
        if (col >= 0) out.jac->emplace_back(out.row_off + r, out.h_off + col, out.scale * dhl(i, k));
      }
    }
  }
}

// N_i = sum_q w (u x B) . curl phi_i (B-space tests) and
// P_i = sum_q w (curl B x B) . psi_i (u-space tests).
struct InductionOut {
  Eigen::VectorXd* N = nullptr;
  Eigen::VectorXd* P = nullptr;
  std::vector<Triplet>* jac = nullptr;
  int b_off = 0;  // row and column offset of the B block
  int u_off = 0;  // row and column offset of the u block
  double n_scale = 1.0;
  double p_scale = 1.0;
};

void induction(const Stepper::Tables& t, const LocalTable& bt, const LocalTable& ut,
               const Eigen::VectorXd& B, const Eigen::VectorXd& u, InductionOut& out) {
  const int nq = t.quad.size();
  const int ncell = static_cast<int>(bt.dofs.size()) / bt.n;
  Eigen::VectorXd nl(bt.n), pl(ut.n);
  Eigen::MatrixXd dnb(bt.n, bt.n), dnu(bt.n, ut.n), dpb(ut.n, bt.n);
  for (int cell = 0; cell < ncell; ++cell) {
    nl.setZero();
    pl.setZero();
    dnb.setZero();
    dnu.setZero();
    dpb.setZero();
    for (int q = 0; q < nq; ++q) {
      const double w = t.quad.weights[q];
      const Vec3 bq = eval(bt, bt.value, cell, q, B);
      const Vec3 cbq = eval(bt, bt.curl, cell, q, B);
      const Vec3 uq = eval(ut, ut.value, cell, q, u);
      const Vec3 uxb = uq.cross(bq);
      const Vec3 cbxb = cbq.cross(bq);
      const Vec3* phi = &bt.value[q * bt.n];
      const Vec3* cphi = &bt.curl[q * bt.n];
      const Vec3* psi = &ut.value[q * ut.n];
      for (int i = 0; i < bt.n; ++i) nl[i] += w * uxb.dot(cphi[i]);
      for (int i = 0; i < ut.n; ++i) pl[i] += w * cbxb.dot(psi[i]);
      if (!out.jac) continue;
      for (int k = 0; k < bt.n; ++k) {
        const Vec3 a = uq.cross(phi[k]);
        const Vec3 b = cphi[k].cross(bq) + cbq.cross(phi[k]);
        for (int i = 0; i < bt.n; ++i) dnb(i, k) += w * a.dot(cphi[i]);
        for (int i = 0; i < ut.n; ++i) dpb(i, k) += w * b.dot(psi[i]);
      }
      for (int k = 0; k < ut.n; ++k) {
        const Vec3 a = psi[k].cross(bq);
        for (int i = 0; i < bt.n; ++i) dnu(i, k) += w * a.dot(cphi[i]);
      }
    }
    for (int i = 0; i < bt.n; ++i) {
      const int r = bt.dofs[cell * bt.n + i];
      if (r < 0) continue;
      if (out.N) (*out.N)[r] += nl[i];
      if (!out.jac) continue;
      for (int k = 0; k < bt.n; ++k) {
        const int col = bt.dofs[cell * bt.n + k];
        if (col >= 0) out.jac->emplace_back(out.b_off + r, out.b_off + col, out.n_scale * dnb(i, k));
      }
      for (int k = 0; k < ut.n; ++k) {
        const int col = ut.dofs[cell * ut.n + k];
        if (col >= 0) out.jac->emplace_back(out.b_off + r, out.u_off + col, out.n_scale * dnu(i, k));
      }
    }
    for (int i = 0; i < ut.n; ++i) {
      const int r = ut.dofs[cell * ut.n + i];
      if (r < 0) continue;
      if (out.P) (*out.P)[r] += pl[i];
      if (!out.jac) continue;
      for (int k = 0; k < bt.n; ++k) {
        const int col = bt.dofs[cell * bt.n + k];
        if (col >= 0) out.jac->emplace_back(out.u_off + r, out.b_off + col, out.p_scale * dpb(i, k));
      }
    }
  }
}

SparseOperator from_triplets(int n, std::vector<Triplet>& t) {
  SparseOperator m(n, n);
  m.setFromTriplets(t.begin(), t.end());
  m.makeCompressed();
  return m;
}

struct NewtonResult {
  Eigen::VectorXd z;
  int iterations = 0;
  double residual = 0.0;
  std::vector<double> history;
  bool converged = false;
  std::string failure;
};

// `correction(z, r)` returns J(z)^-1 r.
template <class R, class J>
NewtonResult newton(Eigen::VectorXd z, const R& residual, const J& correction, double tol,
                    int max_iter) {
  NewtonResult res;
  Eigen::VectorXd r = residual(z);
  res.history.push_back(r.norm());
  while (true) {
    const double rn = res.history.back();
    if (!std::isfinite(rn)) {
      res.failure = "non-finite residual";
      break;
    }
    if (res.iterations >= 1 && rn <= tol) {
      res.converged = true;
      break;
    }
    if (res.iterations >= max_iter) {
      res.failure = "no convergence in " + std::to_string(max_iter) + " Newton iterations";
      break;
    }
    try {
      const Eigen::VectorXd d = correction(z, r);
      if (!d.allFinite()) {
        res.failure = "non-finite Newton correction";
        break;
      }
      z -= d;
    } catch (const FactorizationError& e) {
      res.failure = std::string("singular Jacobian: ") + e.what();
      break;
    }
    ++res.iterations;
    r = residual(z);
    res.history.push_back(r.norm());
  }
  res.z = std::move(z);
  res.residual = res.history.back();
  return res;
}

}  // namespace

std::string to_string(SchemeKind kind) {
  switch (kind) {
    case SchemeKind::sp:
      return "sp";
    case SchemeKind::hdiv_noH:
      return "hdiv_noH";
    case SchemeKind::hcurl:
      return "hcurl";
    case SchemeKind::h1:
      return "h1";
  }
  return "?";
}

SchemeKind scheme_from_string(const std::string& name) {
  for (SchemeKind k : {SchemeKind::sp, SchemeKind::hdiv_noH, SchemeKind::hcurl, SchemeKind::h1}) {
    if (to_string(k) == name) return k;
  }
  throw std::invalid_argument("unknown scheme '" + name + "' (expected sp, hdiv_noH, hcurl, h1)");
}

SpaceKind state_space(SchemeKind kind) {
  switch (kind) {
    case SchemeKind::sp:
    case SchemeKind::hdiv_noH:
      return SpaceKind::face;
    case SchemeKind::hcurl:
      return SpaceKind::edge_full;
    case SchemeKind::h1:
      return SpaceKind::nodal_vector;
  }
  return SpaceKind::face;
}

Stepper::Stepper(const DeRhamComplex& complex, const StepperConfig& config)
    : complex_(&complex), config_(config) {
  if (!(config.dt > 0.0) || !std::isfinite(config.dt)) {
    throw std::invalid_argument("Stepper: dt must be positive and finite");
  }
  if (!(config.tau >= 0.0) || !std::isfinite(config.tau)) {
    throw std::invalid_argument("Stepper: tau must be non-negative and finite");
  }
  if (config.newton_max_iter < 1) throw std::invalid_argument("Stepper: newton_max_iter must be >= 1");
  if (config.quadrature_points < 1) {
    throw std::invalid_argument("Stepper: quadrature_points must be >= 1");
  }
  const bool block =
      config.linear_solve == LinearSolve::block_elimination ||
      (config.linear_solve == LinearSolve::automatic && complex.dim(SpaceKind::face) <= 3000);
  tables_ = build_tables(complex, config.quadrature_points, block);
}

// ---- sp -------------------------------------------------------------------

Eigen::VectorXd Stepper::residual_sp(const FieldVec& Bn, const MidpointStage& s) const {
  const DeRhamComplex& c = *complex_;
  require(Bn, SpaceKind::face, c, "residual_sp");
  require(s.B_mid, SpaceKind::face, c, "residual_sp");
  require(s.E, SpaceKind::edge, c, "residual_sp");
  require(s.j, SpaceKind::edge, c, "residual_sp");
  require(s.H, SpaceKind::edge, c, "residual_sp");
  const int nf = c.dim(SpaceKind::face);
  const int ne = c.dim(SpaceKind::edge);
  const double dt = config_.dt;
  Eigen::VectorXd r(nf + 3 * ne);
  r.head(nf) = c.mass_face * (2.0 / dt * (s.B_mid.coeffs - Bn.coeffs)) + tables_->mf_curl * s.E.coeffs;
  r.segment(nf, ne) = c.mass_edge * s.E.coeffs;
  r.segment(nf + ne, ne) = c.mass_edge * s.j.coeffs - tables_->curl_t_mf * s.B_mid.coeffs;
  r.tail(ne) = c.mass_edge * s.H.coeffs - c.mixed * s.B_mid.coeffs;
  LorentzOut out;
  out.value = &r;
  out.row_off = nf;
  out.scale = config_.tau;
  lorentz(*tables_, tables_->edge, s.j.coeffs, s.H.coeffs, out);
  return r;
}

SparseOperator Stepper::jacobian_sp(const FieldVec& Bn, const MidpointStage& s) const {
  const DeRhamComplex& c = *complex_;
  require(Bn, SpaceKind::face, c, "jacobian_sp");
  const int nf = c.dim(SpaceKind::face);
  const int ne = c.dim(SpaceKind::edge);
  std::vector<Triplet> t;
  append(t, c.mass_face, 0, 0, 2.0 / config_.dt);
  append(t, tables_->mf_curl, 0, nf, 1.0);
  append(t, c.mass_edge, nf, nf, 1.0);
  append(t, c.mass_edge, nf + ne, nf + ne, 1.0);
  append(t, tables_->curl_t_mf, nf + ne, 0, -1.0);
  append(t, c.mass_edge, nf + 2 * ne, nf + 2 * ne, 1.0);
  append(t, c.mixed, nf + 2 * ne, 0, -1.0);
  LorentzOut out;
  out.jac = &t;
  out.row_off = nf;
  out.j_off = nf + ne;
  out.h_off = nf + 2 * ne;
  out.scale = config_.tau;
  lorentz(*tables_, tables_->edge, s.j.coeffs, s.H.coeffs, out);
  return from_triplets(nf + 3 * ne, t);
}

// ---- hdiv_noH -------------------------------------------------------------

Eigen::VectorXd Stepper::residual_hdiv_noH(const FieldVec& Bn, const MidpointStage& s) const {
  const DeRhamComplex& c = *complex_;
  require(Bn, SpaceKind::face, c, "residual_hdiv_noH");
  require(s.B_mid, SpaceKind::face, c, "residual_hdiv_noH");
  require(s.E, SpaceKind::edge, c, "residual_hdiv_noH");
  require(s.j, SpaceKind::edge, c, "residual_hdiv_noH");
  const int nf = c.dim(SpaceKind::face);
  const int ne = c.dim(SpaceKind::edge);
  const double dt = config_.dt;
  Eigen::VectorXd r(nf + 2 * ne);
  r.head(nf) = c.mass_face * (2.0 / dt * (s.B_mid.coeffs - Bn.coeffs)) + tables_->mf_curl * s.E.coeffs;
  r.segment(nf, ne) = c.mass_edge * s.E.coeffs;
  r.tail(ne) = c.mass_edge * s.j.coeffs - tables_->curl_t_mf * s.B_mid.coeffs;
  LorentzOut out;
  out.value = &r;
  out.row_off = nf;
  out.scale = config_.tau;
  lorentz(*tables_, tables_->face, s.j.coeffs, s.B_mid.coeffs, out);
  return r;
}

SparseOperator Stepper::jacobian_hdiv_noH(const FieldVec& Bn, const MidpointStage& s) const {
  const DeRhamComplex& c = *complex_;
  require(Bn, SpaceKind::face, c, "jacobian_hdiv_noH");
  const int nf = c.dim(SpaceKind::face);
  const int ne = c.dim(SpaceKind::edge);
  std::vector<Triplet> t;
  append(t, c.mass_face, 0, 0, 2.0 / config_.dt);
  append(t, tables_->mf_curl, 0, nf, 1.0);
  append(t, c.mass_edge, nf, nf, 1.0);
  append(t, c.mass_edge, nf + ne, nf + ne, 1.0);
  append(t, tables_->curl_t_mf, nf + ne, 0, -1.0);
  LorentzOut out;
  out.jac = &t;
  out.row_off = nf;
  out.j_off = nf + ne;
  out.h_off = 0;
  out.scale = config_.tau;
  lorentz(*tables_, tables_->face, s.j.coeffs, s.B_mid.coeffs, out);
  return from_triplets(nf + 2 * ne, t);
}

// ---- hcurl / h1 -----------------------------------------------------------

namespace {

struct InductionSetup {
  const LocalTable* bt;
  const LocalTable* ut;
  const SparseOperator* mb;
  const SparseOperator* mu;
  SpaceKind bspace;
  SpaceKind uspace;
};

InductionSetup induction_setup(const DeRhamComplex& c, const Stepper::Tables& t, SchemeKind kind) {
  if (kind == SchemeKind::hcurl) {
    return {&t.edge_full, &t.face, &c.mass_edge_full, &c.mass_face, SpaceKind::edge_full,
            SpaceKind::face};
  }
  return {&t.nvec, &t.nvec, &c.mass_nodal_vector, &c.mass_nodal_vector, SpaceKind::nodal_vector,
          SpaceKind::nodal_vector};
}

Eigen::VectorXd induction_residual(const DeRhamComplex& c, const Stepper::Tables& t,
                                   const StepperConfig& cfg, SchemeKind kind, const FieldVec& Bn,
                                   const InductionStage& s, const char* who) {
  const InductionSetup st = induction_setup(c, t, kind);
  require(Bn, st.bspace, c, who);
  require(s.B_mid, st.bspace, c, who);
  require(s.u, st.uspace, c, who);
  const int nb = c.dim(st.bspace);
  const int nu = c.dim(st.uspace);
  Eigen::VectorXd N = Eigen::VectorXd::Zero(nb);
  Eigen::VectorXd P = Eigen::VectorXd::Zero(nu);
  InductionOut out;
  out.N = &N;
  out.P = &P;
  induction(t, *st.bt, *st.ut, s.B_mid.coeffs, s.u.coeffs, out);
  Eigen::VectorXd r(nb + nu);
  r.head(nb) = *st.mb * (2.0 / cfg.dt * (s.B_mid.coeffs - Bn.coeffs)) - N;
  r.tail(nu) = *st.mu * s.u.coeffs - cfg.tau * P;
  return r;
}

SparseOperator induction_jacobian(const DeRhamComplex& c, const Stepper::Tables& t,
                                  const StepperConfig& cfg, SchemeKind kind, const FieldVec& Bn,
                                  const InductionStage& s, const char* who) {
  const InductionSetup st = induction_setup(c, t, kind);
  require(Bn, st.bspace, c, who);
  const int nb = c.dim(st.bspace);
  const int nu = c.dim(st.uspace);
  std::vector<Triplet> trip;
  append(trip, *st.mb, 0, 0, 2.0 / cfg.dt);
  append(trip, *st.mu, nb, nb, 1.0);
  InductionOut out;
  out.jac = &trip;
  out.b_off = 0;
  out.u_off = nb;
  out.n_scale = -1.0;
  out.p_scale = -cfg.tau;
  induction(t, *st.bt, *st.ut, s.B_mid.coeffs, s.u.coeffs, out);
  return from_triplets(nb + nu, trip);
}

}  // namespace

Eigen::VectorXd Stepper::residual_hcurl(const FieldVec& Bn, const InductionStage& s) const {
  return induction_residual(*complex_, *tables_, config_, SchemeKind::hcurl, Bn, s, "residual_hcurl");
}

SparseOperator Stepper::jacobian_hcurl(const FieldVec& Bn, const InductionStage& s) const {
  return induction_jacobian(*complex_, *tables_, config_, SchemeKind::hcurl, Bn, s, "jacobian_hcurl");
}

Eigen::VectorXd Stepper::residual_h1(const FieldVec& Bn, const InductionStage& s) const {
  return induction_residual(*complex_, *tables_, config_, SchemeKind::h1, Bn, s, "residual_h1");
}

SparseOperator Stepper::jacobian_h1(const FieldVec& Bn, const InductionStage& s) const {
  return induction_jacobian(*complex_, *tables_, config_, SchemeKind::h1, Bn, s, "jacobian_h1");
}

// ---- Newton corrections -----------------------------------------------------

bool Stepper::uses_block_elimination() const { return tables_->block; }

// Solves J d = r for the stacked (B_mid, E, j[, H]) system. With block
// elimination the (c), (d) rows give (dj, dH) = q + lift dB, row (b) gives
// dE = M_e^-1 (r_b - L (q + lift dB)) with L = tau dT/d(j, H), and row (a)
// leaves a dense system in dB.
Eigen::VectorXd Stepper::midpoint_correction(const FieldVec& Bn, const MidpointStage& s,
                                             bool with_H, const Eigen::VectorXd& r) const {
  if (!tables_->block) {
    const SparseOperator jac = with_H ? jacobian_sp(Bn, s) : jacobian_hdiv_noH(Bn, s);
    return factorize(jac).solve(r);
  }
  const DeRhamComplex& c = *complex_;
  const Tables& t = *tables_;
  const int nf = c.dim(SpaceKind::face);
  const int ne = c.dim(SpaceKind::edge);
  const int nh = with_H ? ne : nf;
  if (r.size() != nf + (with_H ? 3 : 2) * ne) {
    throw std::invalid_argument("midpoint_correction: residual has the wrong size");
  }
  std::vector<Triplet> trip;
  LorentzOut out;
  out.jac = &trip;
  out.j_off = 0;
  out.h_off = ne;
  out.scale = config_.tau;
  lorentz(t, with_H ? t.edge : t.face, s.j.coeffs, with_H ? s.H.coeffs : s.B_mid.coeffs, out);
  SparseOperator L(ne, ne + nh);
  L.setFromTriplets(trip.begin(), trip.end());
  const Eigen::MatrixXd& lift = with_H ? t.lift_sp : t.lift_noh;

  const auto ra = r.head(nf);
  const auto rb = r.segment(nf, ne);
  Eigen::VectorXd q = Eigen::VectorXd::Zero(ne + nh);
  q.head(ne) = t.edge_lu->solve(r.segment(nf + ne, ne));
  if (with_H) q.tail(ne) = t.edge_lu->solve(r.tail(ne));

  const Eigen::MatrixXd g = solve_columns(*t.edge_lu, L * lift);
  Eigen::MatrixXd schur = (2.0 / config_.dt) * Eigen::MatrixXd(c.mass_face);
  schur.noalias() -= t.mf_curl * g;
  const Eigen::VectorXd rhs = ra - t.mf_curl * t.edge_lu->solve(rb - L * q);
  const Eigen::VectorXd dB = schur.partialPivLu().solve(rhs);
  const Eigen::VectorXd djh = q + lift * dB;

  Eigen::VectorXd d(r.size());
  d.head(nf) = dB;
  d.segment(nf, ne) = t.edge_lu->solve(rb - L * djh);
  d.segment(nf + ne, ne) = djh.head(ne);
  if (with_H) d.tail(ne) = djh.tail(ne);
  return d;
}

// ---- initial guesses and diagnostics ---------------------------------------

MidpointStage Stepper::initial_midpoint_stage(const FieldVec& Bn, bool with_H) const {
  const DeRhamComplex& c = *complex_;
  require(Bn, SpaceKind::face, c, "initial_midpoint_stage");
  const int ne = c.dim(SpaceKind::edge);
  MidpointStage s;
  s.B_mid = Bn;
  s.j = FieldVec{SpaceKind::edge, tables_->edge_lu->solve(tables_->curl_t_mf * Bn.coeffs)};
  Eigen::VectorXd T = Eigen::VectorXd::Zero(ne);
  LorentzOut out;
  out.value = &T;
  if (with_H) {
    s.H = FieldVec{SpaceKind::edge, tables_->edge_lu->solve(c.mixed * Bn.coeffs)};
    lorentz(*tables_, tables_->edge, s.j.coeffs, s.H.coeffs, out);
  } else {
    lorentz(*tables_, tables_->face, s.j.coeffs, Bn.coeffs, out);
  }
  s.E = FieldVec{SpaceKind::edge, -config_.tau * tables_->edge_lu->solve(T)};
  return s;
}

InductionStage Stepper::initial_induction_stage(const FieldVec& Bn, SchemeKind kind) const {
  if (kind != SchemeKind::hcurl && kind != SchemeKind::h1) {
    throw std::invalid_argument("initial_induction_stage: scheme must be hcurl or h1");
  }
  const DeRhamComplex& c = *complex_;
  const InductionSetup st = induction_setup(c, *tables_, kind);
  require(Bn, st.bspace, c, "initial_induction_stage");
  Eigen::VectorXd P = Eigen::VectorXd::Zero(c.dim(st.uspace));
  const Eigen::VectorXd u0 = Eigen::VectorXd::Zero(c.dim(st.uspace));
  InductionOut out;
  out.P = &P;
  induction(*tables_, *st.bt, *st.ut, Bn.coeffs, u0, out);
  const Factorization& lu = kind == SchemeKind::hcurl ? *tables_->face_lu : *tables_->nvec_lu;
  return InductionStage{Bn, FieldVec{st.uspace, config_.tau * lu.solve(P)}};
}

double Stepper::lorentz_norm_sq(const FieldVec& j, const FieldVec& H) const {
  const DeRhamComplex& c = *complex_;
  require(j, SpaceKind::edge, c, "lorentz_norm_sq");
  if (H.space != SpaceKind::edge && H.space != SpaceKind::face) {
    throw std::invalid_argument("lorentz_norm_sq: H must be an edge or face field");
  }
  require(H, H.space, c, "lorentz_norm_sq");
  LorentzOut out;
  lorentz(*tables_, H.space == SpaceKind::edge ? tables_->edge : tables_->face, j.coeffs, H.coeffs,
          out);
  return out.norm_sq;
}

// ---- stepping ---------------------------------------------------------------

std::pair<SchemeState, StepReport> Stepper::step_once(const SchemeState& state, double dt) const {
  const auto t0 = std::chrono::steady_clock::now();
  const DeRhamComplex& c = *complex_;
  // Residuals scale with 1/dt, so a half step runs on a copy of the config.
  Stepper local = *this;
  local.config_.dt = dt;
  const double tol = config_.newton_abs_tol * std::max(1.0, config_.reference_norm);
  const FieldVec& Bn = state.B;

  StepReport rep;
  rep.dt = dt;
  SchemeState next;
  next.scheme = state.scheme;
  next.t = state.t + dt;
  NewtonResult nr;

  if (state.scheme == SchemeKind::sp || state.scheme == SchemeKind::hdiv_noH) {
    const bool with_h = state.scheme == SchemeKind::sp;
    const int nf = c.dim(SpaceKind::face);
    const int ne = c.dim(SpaceKind::edge);
    const MidpointStage s0 = local.initial_midpoint_stage(Bn, with_h);
    const int n = nf + (with_h ? 3 : 2) * ne;
    auto unpack = [&](const Eigen::VectorXd& z) {
      MidpointStage s;
      s.B_mid = FieldVec{SpaceKind::face, z.head(nf)};
      s.E = FieldVec{SpaceKind::edge, z.segment(nf, ne)};
      s.j = FieldVec{SpaceKind::edge, z.segment(nf + ne, ne)};
      if (with_h) s.H = FieldVec{SpaceKind::edge, z.segment(nf + 2 * ne, ne)};
      return s;
    };
    Eigen::VectorXd z(n);
    z.head(nf) = s0.B_mid.coeffs;
    z.segment(nf, ne) = s0.E.coeffs;
    z.segment(nf + ne, ne) = s0.j.coeffs;
    if (with_h) z.tail(ne) = s0.H.coeffs;
    if (with_h) {
      nr = newton(
          z, [&](const Eigen::VectorXd& x) { return local.residual_sp(Bn, unpack(x)); },
          [&](const Eigen::VectorXd& x, const Eigen::VectorXd& r) {
            return local.midpoint_correction(Bn, unpack(x), true, r);
          },
          tol,
          config_.newton_max_iter);
    } else {
      nr = newton(
          z, [&](const Eigen::VectorXd& x) { return local.residual_hdiv_noH(Bn, unpack(x)); },
          [&](const Eigen::VectorXd& x, const Eigen::VectorXd& r) {
            return local.midpoint_correction(Bn, unpack(x), false, r);
          },
          tol,
          config_.newton_max_iter);
    }
    rep.stage = unpack(nr.z);
    next.B = FieldVec{SpaceKind::face, Bn.coeffs - dt * (c.curl * rep.stage.E.coeffs)};
    const FieldVec& h = with_h ? rep.stage.H : rep.stage.B_mid;
    rep.dissipation = 2.0 * config_.tau * dt * lorentz_norm_sq(rep.stage.j, h);
  } else {
    const InductionSetup st = induction_setup(c, *tables_, state.scheme);
    const int nb = c.dim(st.bspace);
    const int nu = c.dim(st.uspace);
    const InductionStage s0 = local.initial_induction_stage(Bn, state.scheme);
    auto unpack = [&](const Eigen::VectorXd& x) {
      return InductionStage{FieldVec{st.bspace, x.head(nb)}, FieldVec{st.uspace, x.tail(nu)}};
    };
    Eigen::VectorXd z(nb + nu);
    z.head(nb) = s0.B_mid.coeffs;
    z.tail(nu) = s0.u.coeffs;
    const SchemeKind kind = state.scheme;
    nr = newton(
        z,
        [&](const Eigen::VectorXd& x) {
          return induction_residual(c, *tables_, local.config_, kind, Bn, unpack(x), "step");
        },
        [&](const Eigen::VectorXd& x, const Eigen::VectorXd& r) {
          return factorize(induction_jacobian(c, *tables_, local.config_, kind, Bn, unpack(x), "step"))
              .solve(r);
        },
        tol, config_.newton_max_iter);
    rep.induction = unpack(nr.z);
    next.B = FieldVec{st.bspace, 2.0 * rep.induction.B_mid.coeffs - Bn.coeffs};
    Eigen::VectorXd P = Eigen::VectorXd::Zero(nu);
    InductionOut out;
    out.P = &P;
    induction(*tables_, *st.bt, *st.ut, rep.induction.B_mid.coeffs, rep.induction.u.coeffs, out);
    rep.dissipation = 2.0 * dt * rep.induction.u.coeffs.dot(P);
  }

  rep.newton_iterations = nr.iterations;
  rep.residual_norm = nr.residual;
  rep.residual_history = std::move(nr.history);
  rep.converged = nr.converged;
  rep.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  if (!nr.converged) {
    throw StepError("step at t=" + std::to_string(state.t) + " (" + to_string(state.scheme) +
                        "): " + nr.failure + ", residual " + std::to_string(nr.residual),
                    rep);
  }
  return {std::move(next), std::move(rep)};
}

std::pair<SchemeState, StepReport> Stepper::step(const SchemeState& state) const {
  const DeRhamComplex& c = *complex_;
  require(state.B, state_space(state.scheme), c, "step");
  try {
    return step_once(state, config_.dt);
  } catch (const StepError&) {
    if (!config_.halve_on_failure) throw;
  }
  auto [mid, r1] = step_once(state, 0.5 * config_.dt);
  auto [end, r2] = step_once(mid, 0.5 * config_.dt);
  end.t = state.t + config_.dt;
  r2.newton_iterations += r1.newton_iterations;
  r2.dissipation += r1.dissipation;
  r2.wall_seconds += r1.wall_seconds;
  r2.dt = config_.dt;
  r2.halved = true;
  return {std::move(end), std::move(r2)};
}

Eigen::VectorXd residual_sp(const DeRhamComplex& complex, const FieldVec& Bn,
                            const MidpointStage& stage, const StepperConfig& config) {
  return Stepper(complex, config).residual_sp(Bn, stage);
}

SparseOperator jacobian_sp(const DeRhamComplex& complex, const FieldVec& Bn,
                           const MidpointStage& stage, const StepperConfig& config) {
  return Stepper(complex, config).jacobian_sp(Bn, stage);
}

std::pair<SchemeState, StepReport> step(const DeRhamComplex& complex, const SchemeState& state,
                                        const StepperConfig& config) {
  return Stepper(complex, config).step(state);
}

SchemeState make_initial_state(const DeRhamComplex& complex, SchemeKind scheme, const ICKind& ic) {
  const VectorField f = initial_field(ic);
  SchemeState s;
  s.scheme = scheme;
  const SpaceKind space = state_space(scheme);
  if (space == SpaceKind::face) {
    s.B = project_divfree(complex, interpolate(complex, f, SpaceKind::face)).B;
  } else {
    s.B = interpolate(complex, f, space);
  }
  return s;
}

double energy(const DeRhamComplex& complex, const FieldVec& B) {
  require(B, B.space, complex, "energy");
  return B.coeffs.dot(complex.mass(B.space) * B.coeffs);
}

}  // namespace mfrelax
