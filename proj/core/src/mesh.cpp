#include "mfrelax/mesh.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace mfrelax {

namespace {

constexpr const char* kAxisNames[3] = {"x", "y", "z"};

int floor_mod(int a, int n) {
  const int r = a % n;
  return r < 0 ? r + n : r;
}

}  // namespace

int dimension(EntityKind kind) {
  switch (kind) {
    case EntityKind::vertex:
      return 0;
    case EntityKind::edge_x:
    case EntityKind::edge_y:
    case EntityKind::edge_z:
      return 1;
    case EntityKind::face_x:
    case EntityKind::face_y:
    case EntityKind::face_z:
      return 2;
    case EntityKind::cell:
      return 3;
  }
  return -1;
}

int axis(EntityKind kind) {
  switch (kind) {
    case EntityKind::edge_x:
    case EntityKind::face_x:
      return 0;
    case EntityKind::edge_y:
    case EntityKind::face_y:
      return 1;
    case EntityKind::edge_z:
    case EntityKind::face_z:
      return 2;
    default:
      throw std::invalid_argument("axis(): " + to_string(kind) + " has no axis");
  }
}

EntityKind edge_kind(int a) {
  static constexpr EntityKind kinds[3] = {EntityKind::edge_x, EntityKind::edge_y,
                                          EntityKind::edge_z};
  return kinds[a];
}

EntityKind face_kind(int a) {
  static constexpr EntityKind kinds[3] = {EntityKind::face_x, EntityKind::face_y,
                                          EntityKind::face_z};
  return kinds[a];
}

std::string to_string(EntityKind kind) {
  switch (kind) {
    case EntityKind::vertex:
      return "vertex";
    case EntityKind::edge_x:
      return "edge_x";
    case EntityKind::edge_y:
      return "edge_y";
    case EntityKind::edge_z:
      return "edge_z";
    case EntityKind::face_x:
      return "face_x";
    case EntityKind::face_y:
      return "face_y";
    case EntityKind::face_z:
      return "face_z";
    case EntityKind::cell:
      return "cell";
  }
  return "unknown";
}

int BoundaryMask::count() const {
  int n = 0;
  for (bool b : constrained) n += b ? 1 : 0;
  return n;
}

BoxMesh::BoxMesh(const std::array<Interval, 3>& extents, const std::array<int, 3>& resolution,
                 bool periodic_z)
    : extents_(extents), resolution_(resolution), periodic_z_(periodic_z) {
  for (int a = 0; a < 3; ++a) {
    if (resolution_[a] < 1) {
      throw std::invalid_argument(std::string("build_box_mesh: axis ") + kAxisNames[a] +
                                  " has resolution " + std::to_string(resolution_[a]) +
                                  " (must be >= 1)");
    }
    const double len = extents_[a].length();
    if (!(len > 0.0) || !std::isfinite(len)) {
      std::ostringstream os;
      os << "build_box_mesh: axis " << kAxisNames[a] << " has degenerate extent ["
         << extents_[a].lo << ", " << extents_[a].hi << "]";
      throw std::invalid_argument(os.str());
    }
    spacing_[a] = len / resolution_[a];
  }
  if (periodic_z_ && resolution_[2] < 2) {
    throw std::invalid_argument("build_box_mesh: axis z is periodic and needs nz >= 2");
  }
}

double BoxMesh::volume() const {
  return extents_[0].length() * extents_[1].length() * extents_[2].length();
}

std::array<int, 3> BoxMesh::lattice_extent(EntityKind kind) const {
  const auto [nx, ny, nz] = resolution_;
  // Kinds whose lattice has an extra layer in z lose it under periodicity.
  const int zl = periodic_z_ ? nz : nz + 1;
  switch (kind) {
    case EntityKind::vertex:
      return {nx + 1, ny + 1, zl};
    case EntityKind::edge_x:
      return {nx, ny + 1, zl};
    case EntityKind::edge_y:
      return {nx + 1, ny, zl};
    case EntityKind::edge_z:
      return {nx + 1, ny + 1, nz};
    case EntityKind::face_x:
      return {nx + 1, ny, nz};
    case EntityKind::face_y:
      return {nx, ny + 1, nz};
    case EntityKind::face_z:
      return {nx, ny, zl};
    case EntityKind::cell:
      return {nx, ny, nz};
  }
  return {0, 0, 0};
}

int BoxMesh::count(EntityKind kind) const {
  const auto e = lattice_extent(kind);
  return e[0] * e[1] * e[2];
}

int BoxMesh::count_dim(int dim) const {
  switch (dim) {
    case 0:
      return count(EntityKind::vertex);
    case 1:
      return count(EntityKind::edge_x) + count(EntityKind::edge_y) + count(EntityKind::edge_z);
    case 2:
      return count(EntityKind::face_x) + count(EntityKind::face_y) + count(EntityKind::face_z);
    case 3:
      return count(EntityKind::cell);
    default:
      throw std::invalid_argument("count_dim: dimension must be 0..3");
  }
}

EntityCounts BoxMesh::counts() const {
  EntityCounts c;
  c.vertices = count(EntityKind::vertex);
  for (int a = 0; a < 3; ++a) {
    c.edges[a] = count(edge_kind(a));
    c.faces[a] = count(face_kind(a));
  }
  c.cells = count(EntityKind::cell);
  return c;
}

EntityId BoxMesh::canonical(EntityId id) const {
  const auto ext = lattice_extent(id.kind);
  if (periodic_z_) id.index[2] = floor_mod(id.index[2], resolution_[2]);
  for (int a = 0; a < 3; ++a) {
    if (id.index[a] < 0 || id.index[a] >= ext[a]) {
      throw std::out_of_range("BoxMesh: " + to_string(id.kind) + " index out of range on axis " +
                              kAxisNames[a]);
    }
  }
  return id;
}

int BoxMesh::index_of(const EntityId& raw) const {
  const EntityId id = canonical(raw);
  const auto ext = lattice_extent(id.kind);
  int offset = 0;
  const int d = dimension(id.kind);
  if (d == 1 || d == 2) {
    const int a = axis(id.kind);
    for (int b = 0; b < a; ++b) offset += count(d == 1 ? edge_kind(b) : face_kind(b));
  }
  return offset + id.index[0] + ext[0] * (id.index[1] + ext[1] * id.index[2]);
}

EntityId BoxMesh::entity(int dim, int number) const {
  if (number < 0 || number >= count_dim(dim)) {
    throw std::out_of_range("BoxMesh::entity: number out of range");
  }
  EntityKind kind = EntityKind::vertex;
  if (dim == 3) {
    kind = EntityKind::cell;
  } else if (dim == 1 || dim == 2) {
    for (int a = 0; a < 3; ++a) {
      kind = dim == 1 ? edge_kind(a) : face_kind(a);
      const int n = count(kind);
      if (number < n) break;
      number -= n;
    }
  }
  const auto ext = lattice_extent(kind);
  EntityId id{kind, {number % ext[0], (number / ext[0]) % ext[1], number / (ext[0] * ext[1])}};
  return id;
}

Vec3 BoxMesh::vertex_position(int i, int j, int k) const {
  return {extents_[0].lo + i * spacing_[0], extents_[1].lo + j * spacing_[1],
          extents_[2].lo + k * spacing_[2]};
}

Vec3 BoxMesh::cell_origin(int i, int j, int k) const { return vertex_position(i, j, k); }

int BoxMesh::cell_index(int i, int j, int k) const {
  return i + resolution_[0] * (j + resolution_[1] * k);
}

std::array<int, 3> BoxMesh::cell_lattice(int cell) const {
  const int nx = resolution_[0];
  const int ny = resolution_[1];
  return {cell % nx, (cell / nx) % ny, cell / (nx * ny)};
}

bool BoxMesh::on_essential_boundary(const EntityId& raw) const {
  const EntityId id = canonical(raw);
  const auto [nx, ny, nz] = resolution_;
  const auto [i, j, k] = id.index;
  const bool side_x = i == 0 || i == nx;
  const bool side_y = j == 0 || j == ny;
  const bool cap_z = !periodic_z_ && (k == 0 || k == nz);
  switch (id.kind) {
    case EntityKind::vertex:
      return side_x || side_y || cap_z;
    case EntityKind::edge_x:
      return side_y || cap_z;
    case EntityKind::edge_y:
      return side_x || cap_z;
    case EntityKind::edge_z:
      return side_x || side_y;
    case EntityKind::face_x:
      return side_x;
    case EntityKind::face_y:
      return side_y;
    case EntityKind::face_z:
      return cap_z;
    case EntityKind::cell:
      return false;
  }
  return false;
}

BoundaryMask BoxMesh::boundary_mask(int dim) const {
  BoundaryMask mask;
  mask.dim = dim;
  const int n = count_dim(dim);
  mask.constrained.resize(n);
  for (int e = 0; e < n; ++e) mask.constrained[e] = on_essential_boundary(entity(dim, e));
  return mask;
}

bool BoxMesh::contains(const Vec3& p) const {
  for (int a = 0; a < 3; ++a) {
    if (a == 2 && periodic_z_) continue;
    if (p[a] < extents_[a].lo || p[a] > extents_[a].hi) return false;
  }
  return true;
}

Vec3 BoxMesh::wrap(const Vec3& p) const {
  if (!periodic_z_) return p;
  Vec3 q = p;
  const double len = extents_[2].length();
  q[2] = extents_[2].lo + std::fmod(p[2] - extents_[2].lo, len);
  if (q[2] < extents_[2].lo) q[2] += len;
  if (q[2] >= extents_[2].hi) q[2] -= len;
  return q;
}

std::array<int, 3> BoxMesh::locate(const Vec3& p, Vec3& local) const {
  const Vec3 q = wrap(p);
  std::array<int, 3> cell{};
  for (int a = 0; a < 3; ++a) {
    const double s = (q[a] - extents_[a].lo) / spacing_[a];
    int c = static_cast<int>(std::floor(s));
    if (c < 0) c = 0;
    if (c > resolution_[a] - 1) c = resolution_[a] - 1;
    cell[a] = c;
    local[a] = s - c;
  }
  return cell;
}

std::string BoxMesh::descriptor() const {
  std::ostringstream os;
  os.precision(17);
  for (int a = 0; a < 3; ++a) os << extents_[a].lo << ' ' << extents_[a].hi << ' ';
  os << resolution_[0] << ' ' << resolution_[1] << ' ' << resolution_[2] << ' '
     << (periodic_z_ ? 1 : 0);
  return os.str();
}

BoxMesh build_box_mesh(const std::array<Interval, 3>& extents,
                       const std::array<int, 3>& resolution, bool periodic_z) {
  return BoxMesh(extents, resolution, periodic_z);
}

EntityCounts entity_counts(const BoxMesh& mesh) { return mesh.counts(); }

BoundaryMask boundary_mask(const BoxMesh& mesh, int space_dim) {
  return mesh.boundary_mask(space_dim);
}

}  // namespace mfrelax
