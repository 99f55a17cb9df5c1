// Structured axis-aligned hexahedral box mesh with optional z-periodicity.
//
// Entities are addressed by a kind and a lattice index triple. Within each
// topological dimension they are numbered lexicographically (x fastest),
// kinds in axis order: x-edges, then y-edges, then z-edges (same for faces).
// Every edge is oriented along its +axis and every face carries its +axis
// normal. With periodic_z the top vertex/edge/face layer is identified with
// the bottom one (k is taken modulo nz).
#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace mfrelax {

using Vec3 = Eigen::Vector3d;

struct Interval {
  double lo = 0.0;
  double hi = 1.0;
  double length() const { return hi - lo; }
};

enum class EntityKind : std::uint8_t {
  vertex,
  edge_x,
  edge_y,
  edge_z,
  face_x,
  face_y,
  face_z,
  cell
};

/// Topological dimension of an entity kind (0 = vertex ... 3 = cell).
int dimension(EntityKind kind);
/// Axis (0, 1, 2) of an edge or face kind.
int axis(EntityKind kind);
EntityKind edge_kind(int axis);
EntityKind face_kind(int axis);
std::string to_string(EntityKind kind);

struct EntityId {
  EntityKind kind = EntityKind::vertex;
  std::array<int, 3> index{0, 0, 0};

  friend bool operator==(const EntityId&, const EntityId&) = default;
};

struct EntityCounts {
  int vertices = 0;
  std::array<int, 3> edges{0, 0, 0};
  std::array<int, 3> faces{0, 0, 0};
  int cells = 0;

  int total_edges() const { return edges[0] + edges[1] + edges[2]; }
  int total_faces() const { return faces[0] + faces[1] + faces[2]; }
  int euler_characteristic() const {
    return vertices - total_edges() + total_faces() - cells;
  }
};

/// Constrained (essential homogeneous BC) flags for one topological dimension,
/// indexed by the entity number within that dimension.
struct BoundaryMask {
  int dim = 0;
  std::vector<bool> constrained;

  int count() const;
};

class BoxMesh {
 public:
  BoxMesh(const std::array<Interval, 3>& extents, const std::array<int, 3>& resolution,
          bool periodic_z);

  const std::array<Interval, 3>& extents() const { return extents_; }
  const std::array<int, 3>& resolution() const { return resolution_; }
  bool periodic_z() const { return periodic_z_; }
  const Vec3& spacing() const { return spacing_; }
  double cell_volume() const { return spacing_[0] * spacing_[1] * spacing_[2]; }
  double volume() const;
  double min_spacing() const { return spacing_.minCoeff(); }

  /// Index ranges [0, n) of a kind's lattice after periodic identification.
  std::array<int, 3> lattice_extent(EntityKind kind) const;
  int count(EntityKind kind) const;
  /// Number of entities of a topological dimension.
  int count_dim(int dim) const;
  EntityCounts counts() const;

  /// Wraps the z index under periodicity; throws if out of range otherwise.
  EntityId canonical(EntityId id) const;
  /// Number of the entity within its topological dimension.
  int index_of(const EntityId& id) const;
  /// Inverse of index_of.
  EntityId entity(int dim, int number) const;

  Vec3 vertex_position(int i, int j, int k) const;
  /// Lower corner of cell (i, j, k).
  Vec3 cell_origin(int i, int j, int k) const;
  int cell_index(int i, int j, int k) const;
  std::array<int, 3> cell_lattice(int cell) const;

  /// True if the entity lies on the part of the boundary carrying essential BCs.
  /// Under periodic_z only the four side planes count.
  bool on_essential_boundary(const EntityId& id) const;
  BoundaryMask boundary_mask(int dim) const;

  /// Point-in-domain test; z is not restricted on periodic meshes.
  bool contains(const Vec3& p) const;
  /// Maps z into [zmin, zmax) on periodic meshes; identity otherwise.
  Vec3 wrap(const Vec3& p) const;
  /// Containing cell lattice index and local coordinates in [0,1]^3.
  /// Precondition: contains(p).
  std::array<int, 3> locate(const Vec3& p, Vec3& local) const;

  /// Compact text descriptor used for checkpoint validation.
  std::string descriptor() const;

 private:
  std::array<Interval, 3> extents_;
  std::array<int, 3> resolution_;
  bool periodic_z_;
  Vec3 spacing_;
};

BoxMesh build_box_mesh(const std::array<Interval, 3>& extents,
                       const std::array<int, 3>& resolution, bool periodic_z);

EntityCounts entity_counts(const BoxMesh& mesh);

/// space_dim: 0 nodal, 1 edge, 2 face, 3 cell.
BoundaryMask boundary_mask(const BoxMesh& mesh, int space_dim);

}  // namespace mfrelax
