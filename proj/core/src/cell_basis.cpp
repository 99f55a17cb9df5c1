#include "mfrelax/cell_basis.hpp"

#include <cmath>

#include <Eigen/Geometry>
#include <stdexcept>

namespace mfrelax {

namespace {

// 1D hats on [0,1]: lambda_0 = 1 - t, lambda_1 = t.
double hat(int p, double t) { return p == 0 ? 1.0 - t : t; }
double hat_slope(int p) { return p == 0 ? -1.0 : 1.0; }

Vec3 unit(int a) {
  Vec3 e = Vec3::Zero();
  e[a] = 1.0;
  return e;
}

}  // namespace

std::array<int, 2> other_axes(int a) {
  switch (a) {
    case 0:
      return {1, 2};
    case 1:
      return {0, 2};
    default:
      return {0, 1};
  }
}

GaussRule1D gauss_legendre_unit(int n) {
  if (n < 1) throw std::invalid_argument("gauss_legendre_unit: need at least one point");
  GaussRule1D rule;
  rule.nodes.resize(n);
  rule.weights.resize(n);
  // Newton iteration on Legendre polynomials, symmetric pairs.
  const int m = (n + 1) / 2;
  for (int i = 0; i < m; ++i) {
    double z = std::cos(M_PI * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0;
      double p1 = 0.0;
      for (int j = 0; j < n; ++j) {
        const double p2 = p1;
        p1 = p0;
        p0 = ((2.0 * j + 1.0) * z * p1 - j * p2) / (j + 1.0);
      }
      dp = n * (z * p0 - p1) / (z * z - 1.0);
      const double dz = p0 / dp;
      z -= dz;
      if (std::abs(dz) < 1e-16) break;
    }
    const double w = 2.0 / ((1.0 - z * z) * dp * dp);
    rule.nodes[i] = 0.5 * (1.0 - z);
    rule.nodes[n - 1 - i] = 0.5 * (1.0 + z);
    rule.weights[i] = 0.5 * w;
    rule.weights[n - 1 - i] = 0.5 * w;
  }
  return rule;
}

double vertex_basis(int l, const Vec3& xi) {
  return hat(l & 1, xi[0]) * hat((l >> 1) & 1, xi[1]) * hat((l >> 2) & 1, xi[2]);
}

Vec3 vertex_basis_grad(int l, const Vec3& xi, const Vec3& h) {
  const int o[3] = {l & 1, (l >> 1) & 1, (l >> 2) & 1};
  Vec3 g;
  for (int a = 0; a < 3; ++a) {
    double v = hat_slope(o[a]) / h[a];
    for (int b = 0; b < 3; ++b) {
      if (b != a) v *= hat(o[b], xi[b]);
    }
    g[a] = v;
  }
  return g;
}

Vec3 edge_basis(int l, const Vec3& xi, const Vec3& h) {
  const int a = l / 4;
  const auto [a1, a2] = other_axes(a);
  const int b = l & 1;
  const int c = (l >> 1) & 1;
  return unit(a) * (hat(b, xi[a1]) * hat(c, xi[a2]) / h[a]);
}

Vec3 edge_basis_curl(int l, const Vec3& xi, const Vec3& h) {
  // curl(f e_a) = grad f x e_a
  const int a = l / 4;
  const auto [a1, a2] = other_axes(a);
  const int b = l & 1;
  const int c = (l >> 1) & 1;
  Vec3 grad = Vec3::Zero();
  grad[a1] = hat_slope(b) / h[a1] * hat(c, xi[a2]) / h[a];
  grad[a2] = hat(b, xi[a1]) * hat_slope(c) / h[a2] / h[a];
  return grad.cross(unit(a));
}

Vec3 face_basis(int l, const Vec3& xi, const Vec3& h) {
  const int a = l / 2;
  const int p = l & 1;
  const auto [a1, a2] = other_axes(a);
  return unit(a) * (hat(p, xi[a]) / (h[a1] * h[a2]));
}

double face_basis_div(int l, const Vec3& h) {
  const int p = l & 1;
  return hat_slope(p) / (h[0] * h[1] * h[2]);
}

CellQuadrature make_cell_quadrature(const Vec3& h, int n) {
  const GaussRule1D g = gauss_legendre_unit(n);
  CellQuadrature q;
  q.points_per_axis = n;
  const double vol = h[0] * h[1] * h[2];
  for (int k = 0; k < n; ++k) {
    for (int j = 0; j < n; ++j) {
      for (int i = 0; i < n; ++i) {
        const Vec3 xi(g.nodes[i], g.nodes[j], g.nodes[k]);
        q.local_points.push_back(xi);
        q.weights.push_back(g.weights[i] * g.weights[j] * g.weights[k] * vol);
        std::array<double, kCellVertices> vv{};
        std::array<Vec3, kCellVertices> vg{};
        for (int l = 0; l < kCellVertices; ++l) {
          vv[l] = vertex_basis(l, xi);
          vg[l] = vertex_basis_grad(l, xi, h);
        }
        std::array<Vec3, kCellEdges> ev{};
        std::array<Vec3, kCellEdges> ec{};
        for (int l = 0; l < kCellEdges; ++l) {
          ev[l] = edge_basis(l, xi, h);
          ec[l] = edge_basis_curl(l, xi, h);
        }
        std::array<Vec3, kCellFaces> fv{};
        for (int l = 0; l < kCellFaces; ++l) fv[l] = face_basis(l, xi, h);
        q.vertex_value.push_back(vv);
        q.vertex_grad.push_back(vg);
        q.edge_value.push_back(ev);
        q.edge_curl.push_back(ec);
        q.face_value.push_back(fv);
      }
    }
  }
  for (int l = 0; l < kCellFaces; ++l) q.face_div[l] = face_basis_div(l, h);
  return q;
}

std::array<EntityId, kCellVertices> cell_vertices(const BoxMesh& mesh, int i, int j, int k) {
  std::array<EntityId, kCellVertices> out{};
  for (int l = 0; l < kCellVertices; ++l) {
    out[l] = mesh.canonical(
        EntityId{EntityKind::vertex, {i + (l & 1), j + ((l >> 1) & 1), k + ((l >> 2) & 1)}});
  }
  return out;
}

std::array<EntityId, kCellEdges> cell_edges(const BoxMesh& mesh, int i, int j, int k) {
  std::array<EntityId, kCellEdges> out{};
  for (int l = 0; l < kCellEdges; ++l) {
    const int a = l / 4;
    const auto [a1, a2] = other_axes(a);
    std::array<int, 3> idx{i, j, k};
    idx[a1] += l & 1;
    idx[a2] += (l >> 1) & 1;
    out[l] = mesh.canonical(EntityId{edge_kind(a), idx});
  }
  return out;
}

std::array<EntityId, kCellFaces> cell_faces(const BoxMesh& mesh, int i, int j, int k) {
  std::array<EntityId, kCellFaces> out{};
  for (int l = 0; l < kCellFaces; ++l) {
    const int a = l / 2;
    std::array<int, 3> idx{i, j, k};
    idx[a] += l & 1;
    out[l] = mesh.canonical(EntityId{face_kind(a), idx});
  }
  return out;
}

}  // namespace mfrelax
