// Lowest-order basis functions on one axis-aligned hexahedral cell, dual to
// the integral DOFs (vertex value, edge circulation, face flux, cell integral).
//
// Local numbering inside a cell:
//   vertices  l = ox + 2*oy + 4*oz
//   edges     l = 4*a + b + 2*c   (axis a; b, c = offsets along the other two
//                                  axes in increasing axis order)
//   faces     l = 2*a + p         (axis a; p = offset along a)
#pragma once

#include <array>
#include <vector>

#include "mfrelax/mesh.hpp"

namespace mfrelax {

inline constexpr int kCellVertices = 8;
inline constexpr int kCellEdges = 12;
inline constexpr int kCellFaces = 6;

/// The two axes orthogonal to a, in increasing order.
std::array<int, 2> other_axes(int a);

/// Gauss-Legendre nodes and weights on [0, 1].
struct GaussRule1D {
  std::vector<double> nodes;
  std::vector<double> weights;
};
GaussRule1D gauss_legendre_unit(int npoints);

/// Basis values of every local function at the points of a tensor Gauss rule,
/// for a cell of the given spacing. The mesh is uniform, so one table serves
/// every cell.
struct CellQuadrature {
  int points_per_axis = 0;
  std::vector<Vec3> local_points;  // in [0,1]^3
  std::vector<double> weights;     // physical weights (include cell volume)
  // [q][l]
  std::vector<std::array<double, kCellVertices>> vertex_value;
  std::vector<std::array<Vec3, kCellVertices>> vertex_grad;
  std::vector<std::array<Vec3, kCellEdges>> edge_value;
  std::vector<std::array<Vec3, kCellEdges>> edge_curl;
  std::vector<std::array<Vec3, kCellFaces>> face_value;
  std::array<double, kCellFaces> face_div{};

  int size() const { return static_cast<int>(weights.size()); }
};

CellQuadrature make_cell_quadrature(const Vec3& spacing, int points_per_axis);

double vertex_basis(int l, const Vec3& xi);
Vec3 vertex_basis_grad(int l, const Vec3& xi, const Vec3& h);
Vec3 edge_basis(int l, const Vec3& xi, const Vec3& h);
Vec3 edge_basis_curl(int l, const Vec3& xi, const Vec3& h);
Vec3 face_basis(int l, const Vec3& xi, const Vec3& h);
double face_basis_div(int l, const Vec3& h);

/// Global entity ids of the cell's local entities (periodic wrap applied).
std::array<EntityId, kCellVertices> cell_vertices(const BoxMesh& mesh, int i, int j, int k);
std::array<EntityId, kCellEdges> cell_edges(const BoxMesh& mesh, int i, int j, int k);
std::array<EntityId, kCellFaces> cell_faces(const BoxMesh& mesh, int i, int j, int k);

}  // namespace mfrelax
