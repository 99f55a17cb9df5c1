#include "mfrelax/derham.hpp"

#include <cmath>
#include <stdexcept>

#include <Eigen/Dense>

#include "mfrelax/cell_basis.hpp"

namespace mfrelax {

namespace {

using Triplet = Eigen::Triplet<double, int>;

// Integral over [0, h] of lambda_p * lambda_q.
double hat_product(double h, int p, int q) { return p == q ? h / 3.0 : h / 6.0; }

// Axes (a1, a2) with e_a1 x e_a2 = e_a.
std::array<int, 2> cyclic_axes(int a) {
  switch (a) {
    case 0:
      return {1, 2};
    case 1:
      return {2, 0};
    default:
      return {0, 1};
  }
}

std::array<int, 3> shifted(std::array<int, 3> idx, int a, int by = 1) {
  idx[a] += by;
  return idx;
}

SparseOperator from_triplets(int rows, int cols, const std::vector<Triplet>& t) {
  SparseOperator m(rows, cols);
  m.setFromTriplets(t.begin(), t.end());
  m.makeCompressed();
  return m;
}

SparseOperator assemble_grad_full(const BoxMesh& mesh) {
  std::vector<Triplet> t;
  const int ne = mesh.count_dim(1);
  for (int e = 0; e < ne; ++e) {
    const EntityId id = mesh.entity(1, e);
    const int a = axis(id.kind);
    t.emplace_back(e, mesh.index_of({EntityKind::vertex, id.index}), -1.0);
    t.emplace_back(e, mesh.index_of({EntityKind::vertex, shifted(id.index, a)}), 1.0);
  }
  return from_triplets(ne, mesh.count_dim(0), t);
}

SparseOperator assemble_curl_full(const BoxMesh& mesh) {
  std::vector<Triplet> t;
  const int nf = mesh.count_dim(2);
  for (int f = 0; f < nf; ++f) {
    const EntityId id = mesh.entity(2, f);
    const int a = axis(id.kind);
    const auto [a1, a2] = cyclic_axes(a);
    // Counter-clockwise circulation about the +a normal.
    t.emplace_back(f, mesh.index_of({edge_kind(a1), id.index}), 1.0);
    t.emplace_back(f, mesh.index_of({edge_kind(a2), shifted(id.index, a1)}), 1.0);
    t.emplace_back(f, mesh.index_of({edge_kind(a1), shifted(id.index, a2)}), -1.0);
    t.emplace_back(f, mesh.index_of({edge_kind(a2), id.index}), -1.0);
  }
  return from_triplets(nf, mesh.count_dim(1), t);
}

SparseOperator assemble_div_full(const BoxMesh& mesh) {
  std::vector<Triplet> t;
  const int nc = mesh.count_dim(3);
  for (int c = 0; c < nc; ++c) {
    const auto idx = mesh.cell_lattice(c);
    for (int a = 0; a < 3; ++a) {
      t.emplace_back(c, mesh.index_of({face_kind(a), idx}), -1.0);
      t.emplace_back(c, mesh.index_of({face_kind(a), shifted(idx, a)}), 1.0);
    }
  }
  return from_triplets(nc, mesh.count_dim(2), t);
}

std::vector<bool> nodal_vector_mask(const BoxMesh& mesh) {
  const int nv = mesh.count_dim(0);
  const auto [nx, ny, nz] = mesh.resolution();
  std::vector<bool> mask(3 * nv, false);
  for (int v = 0; v < nv; ++v) {
    const auto idx = mesh.entity(0, v).index;
    mask[3 * v + 0] = idx[0] == 0 || idx[0] == nx;
    mask[3 * v + 1] = idx[1] == 0 || idx[1] == ny;
    mask[3 * v + 2] = !mesh.periodic_z() && (idx[2] == 0 || idx[2] == nz);
  }
  return mask;
}

int dense_rank(const SparseOperator& m) {
  if (m.rows() == 0 || m.cols() == 0) return 0;
  Eigen::MatrixXd d = Eigen::MatrixXd(m);
  Eigen::FullPivLU<Eigen::MatrixXd> lu(d);
  lu.setThreshold(1e-10);
  return static_cast<int>(lu.rank());
}

}  // namespace

std::string to_string(SpaceKind kind) {
  switch (kind) {
    case SpaceKind::nodal:
      return "nodal";
    case SpaceKind::edge:
      return "edge";
    case SpaceKind::face:
      return "face";
    case SpaceKind::cell:
      return "cell";
    case SpaceKind::edge_full:
      return "edge_full";
    case SpaceKind::nodal_vector:
      return "nodal_vector";
  }
  return "unknown";
}

Eigen::VectorXd DofMap::restrict(const Eigen::VectorXd& full) const {
  if (full.size() != num_entities()) {
    throw std::invalid_argument("DofMap::restrict: size mismatch");
  }
  Eigen::VectorXd out(num_free());
  for (int i = 0; i < num_free(); ++i) out[i] = full[entity[i]];
  return out;
}

Eigen::VectorXd DofMap::prolong(const Eigen::VectorXd& free) const {
  if (free.size() != num_free()) {
    throw std::invalid_argument("DofMap::prolong: size mismatch");
  }
  Eigen::VectorXd out = Eigen::VectorXd::Zero(num_entities());
  for (int i = 0; i < num_free(); ++i) out[entity[i]] = free[i];
  return out;
}

DofMap DofMap::from_mask(const std::vector<bool>& constrained) {
  DofMap m;
  m.free_index.assign(constrained.size(), -1);
  for (std::size_t e = 0; e < constrained.size(); ++e) {
    if (!constrained[e]) {
      m.free_index[e] = static_cast<int>(m.entity.size());
      m.entity.push_back(static_cast<int>(e));
    }
  }
  return m;
}

SparseOperator restrict_operator(const SparseOperator& full, const DofMap& rows,
                                 const DofMap& cols) {
  if (full.rows() != rows.num_entities() || full.cols() != cols.num_entities()) {
    throw std::invalid_argument("restrict_operator: shape mismatch");
  }
  std::vector<Triplet> t;
  t.reserve(full.nonZeros());
  for (int r = 0; r < rows.num_free(); ++r) {
    for (SparseOperator::InnerIterator it(full, rows.entity[r]); it; ++it) {
      const int c = cols.free_index[it.col()];
      if (c >= 0) t.emplace_back(r, c, it.value());
    }
  }
  return from_triplets(rows.num_free(), cols.num_free(), t);
}

SparseOperator assemble_mass_full(const BoxMesh& mesh, int dim) {
  const Vec3 h = mesh.spacing();
  const auto [nx, ny, nz] = mesh.resolution();
  std::vector<Triplet> t;
  const int n = mesh.count_dim(dim);
  if (dim == 3) {
    for (int c = 0; c < n; ++c) t.emplace_back(c, c, 1.0 / mesh.cell_volume());
    return from_triplets(n, n, t);
  }
  for (int k = 0; k < nz; ++k) {
    for (int j = 0; j < ny; ++j) {
      for (int i = 0; i < nx; ++i) {
        if (dim == 0) {
          const auto v = cell_vertices(mesh, i, j, k);
          for (int l = 0; l < kCellVertices; ++l) {
            for (int m = 0; m < kCellVertices; ++m) {
              double val = 1.0;
              for (int a = 0; a < 3; ++a) val *= hat_product(h[a], (l >> a) & 1, (m >> a) & 1);
              t.emplace_back(mesh.index_of(v[l]), mesh.index_of(v[m]), val);
            }
          }
        } else if (dim == 1) {
          const auto e = cell_edges(mesh, i, j, k);
          for (int l = 0; l < kCellEdges; ++l) {
            for (int m = 0; m < kCellEdges; ++m) {
              const int a = l / 4;
              if (m / 4 != a) continue;
              const auto [a1, a2] = other_axes(a);
              const double val = hat_product(h[a1], l & 1, m & 1) *
                                 hat_product(h[a2], (l >> 1) & 1, (m >> 1) & 1) / h[a];
              t.emplace_back(mesh.index_of(e[l]), mesh.index_of(e[m]), val);
            }
          }
        } else if (dim == 2) {
          const auto f = cell_faces(mesh, i, j, k);
          for (int l = 0; l < kCellFaces; ++l) {
            for (int m = 0; m < kCellFaces; ++m) {
              const int a = l / 2;
              if (m / 2 != a) continue;
              const auto [a1, a2] = other_axes(a);
              const double val = hat_product(h[a], l & 1, m & 1) / (h[a1] * h[a2]);
              t.emplace_back(mesh.index_of(f[l]), mesh.index_of(f[m]), val);
            }
          }
        } else {
          throw std::invalid_argument("assemble_mass_full: dimension must be 0..3");
        }
      }
    }
  }
  return from_triplets(n, n, t);
}

SparseOperator assemble_mixed_mass_full(const BoxMesh& mesh) {
  const auto [nx, ny, nz] = mesh.resolution();
  std::vector<Triplet> t;
  for (int k = 0; k < nz; ++k) {
    for (int j = 0; j < ny; ++j) {
      for (int i = 0; i < nx; ++i) {
        const auto e = cell_edges(mesh, i, j, k);
        const auto f = cell_faces(mesh, i, j, k);
        for (int l = 0; l < kCellEdges; ++l) {
          for (int m = 0; m < kCellFaces; ++m) {
            // (1/h_a) (1/(h_a1 h_a2)) * (h_a/2)(h_a1/2)(h_a2/2)
            if (m / 2 == l / 4) t.emplace_back(mesh.index_of(e[l]), mesh.index_of(f[m]), 0.125);
          }
        }
      }
    }
  }
  return from_triplets(mesh.count_dim(1), mesh.count_dim(2), t);
}

SparseOperator assemble_mass(const BoxMesh& mesh, SpaceKind kind) {
  switch (kind) {
    case SpaceKind::nodal: {
      const auto d = DofMap::from_mask(mesh.boundary_mask(0).constrained);
      return restrict_operator(assemble_mass_full(mesh, 0), d, d);
    }
    case SpaceKind::edge: {
      const auto d = DofMap::from_mask(mesh.boundary_mask(1).constrained);
      return restrict_operator(assemble_mass_full(mesh, 1), d, d);
    }
    case SpaceKind::face: {
      const auto d = DofMap::from_mask(mesh.boundary_mask(2).constrained);
      return restrict_operator(assemble_mass_full(mesh, 2), d, d);
    }
    case SpaceKind::cell:
      return assemble_mass_full(mesh, 3);
    case SpaceKind::edge_full:
      return assemble_mass_full(mesh, 1);
    case SpaceKind::nodal_vector: {
      const SparseOperator scalar = assemble_mass_full(mesh, 0);
      std::vector<Triplet> t;
      for (int r = 0; r < scalar.outerSize(); ++r) {
        for (SparseOperator::InnerIterator it(scalar, r); it; ++it) {
          for (int c = 0; c < 3; ++c) t.emplace_back(3 * r + c, 3 * it.col() + c, it.value());
        }
      }
      const int n = 3 * static_cast<int>(scalar.rows());
      const auto d = DofMap::from_mask(nodal_vector_mask(mesh));
      return restrict_operator(from_triplets(n, n, t), d, d);
    }
  }
  throw std::invalid_argument("assemble_mass: unknown space");
}

SparseOperator assemble_mixed_mass(const BoxMesh& mesh) {
  const auto e = DofMap::from_mask(mesh.boundary_mask(1).constrained);
  const auto f = DofMap::from_mask(mesh.boundary_mask(2).constrained);
  return restrict_operator(assemble_mixed_mass_full(mesh), e, f);
}

const DofMap& DeRhamComplex::dofs(SpaceKind kind) const {
  switch (kind) {
    case SpaceKind::nodal:
      return node_dofs;
    case SpaceKind::edge:
      return edge_dofs;
    case SpaceKind::face:
      return face_dofs;
    case SpaceKind::cell:
      return cell_dofs;
    case SpaceKind::nodal_vector:
      return nodal_vector_dofs;
    case SpaceKind::edge_full:
      break;
  }
  throw std::invalid_argument("DeRhamComplex::dofs: " + to_string(kind) +
                              " has no constraint map");
}

int DeRhamComplex::dim(SpaceKind kind) const {
  if (kind == SpaceKind::edge_full) return mesh.count_dim(1);
  return dofs(kind).num_free();
}

const SparseOperator& DeRhamComplex::mass(SpaceKind kind) const {
  switch (kind) {
    case SpaceKind::nodal:
      return mass_node;
    case SpaceKind::edge:
      return mass_edge;
    case SpaceKind::face:
      return mass_face;
    case SpaceKind::cell:
      return mass_cell;
    case SpaceKind::edge_full:
      return mass_edge_full;
    case SpaceKind::nodal_vector:
      return mass_nodal_vector;
  }
  throw std::invalid_argument("DeRhamComplex::mass: unknown space");
}

FieldVec DeRhamComplex::zeros(SpaceKind kind) const {
  return FieldVec{kind, Eigen::VectorXd::Zero(dim(kind))};
}

DeRhamComplex build_complex(const BoxMesh& mesh) {
  DeRhamComplex c{mesh};
  c.node_dofs = DofMap::from_mask(mesh.boundary_mask(0).constrained);
  c.edge_dofs = DofMap::from_mask(mesh.boundary_mask(1).constrained);
  c.face_dofs = DofMap::from_mask(mesh.boundary_mask(2).constrained);
  c.cell_dofs = DofMap::from_mask(mesh.boundary_mask(3).constrained);
  c.nodal_vector_dofs = DofMap::from_mask(nodal_vector_mask(mesh));

  c.grad_full = assemble_grad_full(mesh);
  c.curl_full = assemble_curl_full(mesh);
  c.div_full = assemble_div_full(mesh);
  c.grad = restrict_operator(c.grad_full, c.edge_dofs, c.node_dofs);
  c.curl = restrict_operator(c.curl_full, c.face_dofs, c.edge_dofs);
  c.div = restrict_operator(c.div_full, c.cell_dofs, c.face_dofs);

  const SparseOperator m0 = assemble_mass_full(mesh, 0);
  c.mass_edge_full = assemble_mass_full(mesh, 1);
  c.mass_face_full = assemble_mass_full(mesh, 2);
  c.mass_node = restrict_operator(m0, c.node_dofs, c.node_dofs);
  c.mass_edge = restrict_operator(c.mass_edge_full, c.edge_dofs, c.edge_dofs);
  c.mass_face = restrict_operator(c.mass_face_full, c.face_dofs, c.face_dofs);
  c.mass_cell = assemble_mass_full(mesh, 3);
  c.mass_nodal_vector = assemble_mass(mesh, SpaceKind::nodal_vector);

  c.mixed_full = assemble_mixed_mass_full(mesh);
  c.mixed = restrict_operator(c.mixed_full, c.edge_dofs, c.face_dofs);

  // With grad injective, ker curl = range grad and range div = mean-zero cell
  // functions, the face-level defect follows from the free-DOF counts.
  c.harmonic_dim = c.face_dofs.num_free() - (c.cell_dofs.num_free() - 1) -
                   (c.edge_dofs.num_free() - c.node_dofs.num_free());
  return c;
}

Eigen::VectorXd interpolate_entities(const BoxMesh& mesh, const VectorField& f, int dim,
                                     int points) {
  const Vec3 h = mesh.spacing();
  const GaussRule1D g = gauss_legendre_unit(points);
  const int n = mesh.count_dim(dim);
  if (dim == 0) {
    Eigen::VectorXd out(3 * n);
    for (int v = 0; v < n; ++v) {
      const auto idx = mesh.entity(0, v).index;
      const Vec3 val = f(mesh.vertex_position(idx[0], idx[1], idx[2]));
      out.segment<3>(3 * v) = val;
    }
    return out;
  }
  Eigen::VectorXd out(n);
  for (int e = 0; e < n; ++e) {
    const EntityId id = mesh.entity(dim, e);
    const int a = axis(id.kind);
    const Vec3 origin = mesh.vertex_position(id.index[0], id.index[1], id.index[2]);
    double sum = 0.0;
    if (dim == 1) {
      for (int q = 0; q < points; ++q) {
        Vec3 p = origin;
        p[a] += g.nodes[q] * h[a];
        sum += g.weights[q] * f(p)[a];
      }
      out[e] = sum * h[a];
    } else if (dim == 2) {
      const auto [a1, a2] = other_axes(a);
      for (int q2 = 0; q2 < points; ++q2) {
        for (int q1 = 0; q1 < points; ++q1) {
          Vec3 p = origin;
          p[a1] += g.nodes[q1] * h[a1];
          p[a2] += g.nodes[q2] * h[a2];
          sum += g.weights[q1] * g.weights[q2] * f(p)[a];
        }
      }
      out[e] = sum * h[a1] * h[a2];
    } else {
      throw std::invalid_argument("interpolate_entities: dimension must be 0, 1 or 2");
    }
  }
  return out;
}

FieldVec interpolate(const DeRhamComplex& complex, const VectorField& f, SpaceKind kind,
                     int points) {
  switch (kind) {
    case SpaceKind::edge:
      return {kind, complex.edge_dofs.restrict(interpolate_entities(complex.mesh, f, 1, points))};
    case SpaceKind::edge_full:
      return {kind, interpolate_entities(complex.mesh, f, 1, points)};
    case SpaceKind::face:
      return {kind, complex.face_dofs.restrict(interpolate_entities(complex.mesh, f, 2, points))};
    case SpaceKind::nodal_vector:
      return {kind,
              complex.nodal_vector_dofs.restrict(interpolate_entities(complex.mesh, f, 0, points))};
    default:
      throw std::invalid_argument("interpolate: unsupported target space " + to_string(kind));
  }
}

ComplexReport verify_complex(const DeRhamComplex& c, int dense_limit) {
  ComplexReport r;
  r.expected_harmonic_dim = c.mesh.periodic_z() ? 1 : 0;

  const SparseOperator cg = c.curl * c.grad;
  const SparseOperator dc = c.div * c.curl;
  const SparseOperator cg_full = c.curl_full * c.grad_full;
  const SparseOperator dc_full = c.div_full * c.curl_full;
  auto max_abs = [](const SparseOperator& m) {
    double v = 0.0;
    for (int k = 0; k < m.outerSize(); ++k) {
      for (SparseOperator::InnerIterator it(m, k); it; ++it) v = std::max(v, std::abs(it.value()));
    }
    return v;
  };
  r.max_abs_curl_grad = std::max(max_abs(cg), max_abs(cg_full));
  r.max_abs_div_curl = std::max(max_abs(dc), max_abs(dc_full));
  if (r.max_abs_curl_grad != 0.0) r.failures.push_back("curl * grad is not identically zero");
  if (r.max_abs_div_curl != 0.0) r.failures.push_back("div * curl is not identically zero");

  for (const SparseOperator* m : {&c.grad_full, &c.curl_full, &c.div_full}) {
    for (int k = 0; k < m->outerSize(); ++k) {
      for (SparseOperator::InnerIterator it(*m, k); it; ++it) {
        const double v = it.value();
        if (v != 0.0 && v != 1.0 && v != -1.0) r.incidence_entries_ok = false;
      }
    }
  }
  if (!r.incidence_entries_ok) r.failures.push_back("incidence entry outside {-1, 0, +1}");

  const int nn = c.node_dofs.num_free();
  const int ne = c.edge_dofs.num_free();
  const int nf = c.face_dofs.num_free();
  const int nc = c.cell_dofs.num_free();
  if (c.harmonic_dim != r.expected_harmonic_dim) {
    r.failures.push_back("harmonic dimension " + std::to_string(c.harmonic_dim) +
                         " does not match topology (" +
                         std::to_string(r.expected_harmonic_dim) + ")");
  }

  if (nn + ne + nf + nc <= dense_limit) {
    r.dense_checked = true;
    r.rank_grad = dense_rank(c.grad);
    r.rank_curl = dense_rank(c.curl);
    r.rank_div = dense_rank(c.div);
    r.node_defect = nn - r.rank_grad;
    r.edge_defect = (ne - r.rank_curl) - r.rank_grad;
    r.face_defect = (nf - r.rank_div) - r.rank_curl;
    r.cell_defect = (nc - 1) - r.rank_div;
    if (r.node_defect != 0) r.failures.push_back("grad is not injective on free vertices");
    if (r.edge_defect != 0) r.failures.push_back("complex not exact at the edge level");
    if (r.face_defect != r.expected_harmonic_dim) {
      r.failures.push_back("face-level defect " + std::to_string(r.face_defect) +
                           " does not match topology");
    }
    if (r.cell_defect != 0) r.failures.push_back("div does not map onto mean-zero cell space");
  }
  r.passed = r.failures.empty();
  return r;
}

}  // namespace mfrelax
