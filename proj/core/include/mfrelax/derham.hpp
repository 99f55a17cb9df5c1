// Lowest-order discrete de Rham complex on a BoxMesh:
//
//   H1_0 --grad--> H_0(curl) --curl--> H_0(div) --div--> L2_0
//
// DOFs are integrals (vertex value, edge circulation, face flux, cell
// integral), so the differential operators are signed incidence matrices with
// entries in {-1, 0, +1}. Mass matrices come from closed-form 1D hat integrals.
#pragma once

#include <functional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include "mfrelax/mesh.hpp"

namespace mfrelax {

using SparseOperator = Eigen::SparseMatrix<double, Eigen::RowMajor, int>;
using VectorField = std::function<Vec3(const Vec3&)>;

enum class SpaceKind {
  nodal,         // H1_0-type, vertex values
  edge,          // H_0(curl)-type, tangential trace constrained
  face,          // H_0(div)-type, normal trace constrained
  cell,          // L2_0-type, cell integrals
  edge_full,     // H(curl)-type without boundary constraints
  nodal_vector,  // (H1)^3 with the normal component constrained on boundary planes
};

std::string to_string(SpaceKind kind);

struct FieldVec {
  SpaceKind space = SpaceKind::face;
  Eigen::VectorXd coeffs;

  Eigen::Index size() const { return coeffs.size(); }
};

/// Maps entities (or nodal-vector components) to free DOF numbers.
struct DofMap {
  std::vector<int> free_index;  // per entity, -1 when constrained
  std::vector<int> entity;      // per free DOF

  int num_entities() const { return static_cast<int>(free_index.size()); }
  int num_free() const { return static_cast<int>(entity.size()); }

  Eigen::VectorXd restrict(const Eigen::VectorXd& full) const;
  Eigen::VectorXd prolong(const Eigen::VectorXd& free) const;

  static DofMap from_mask(const std::vector<bool>& constrained);
};

/// R A C^T where R, C select the free rows and columns.
SparseOperator restrict_operator(const SparseOperator& full, const DofMap& rows,
                                 const DofMap& cols);

struct DeRhamComplex {
  explicit DeRhamComplex(BoxMesh m) : mesh(std::move(m)) {}

  BoxMesh mesh;

  DofMap node_dofs;
  DofMap edge_dofs;
  DofMap face_dofs;
  DofMap cell_dofs;
  DofMap nodal_vector_dofs;

  // Entity-level operators (periodic identification applied, no BCs).
  SparseOperator grad_full;
  SparseOperator curl_full;
  SparseOperator div_full;

  // Restricted to free DOFs.
  SparseOperator grad;
  SparseOperator curl;
  SparseOperator div;

  SparseOperator mass_node;
  SparseOperator mass_edge;
  SparseOperator mass_face;
  SparseOperator mass_cell;
  SparseOperator mass_edge_full;
  SparseOperator mass_face_full;
  SparseOperator mass_nodal_vector;

  // L2 pairing of edge test functions against face trial functions.
  SparseOperator mixed;
  SparseOperator mixed_full;

  int harmonic_dim = 0;

  const DofMap& dofs(SpaceKind kind) const;
  int dim(SpaceKind kind) const;
  const SparseOperator& mass(SpaceKind kind) const;
  FieldVec zeros(SpaceKind kind) const;
};

DeRhamComplex build_complex(const BoxMesh& mesh);

/// Mass matrix over all entities of a topological dimension (no BCs).
SparseOperator assemble_mass_full(const BoxMesh& mesh, int dim);
/// Mass matrix on the free DOFs of a space.
SparseOperator assemble_mass(const BoxMesh& mesh, SpaceKind kind);
/// Edge-by-face L2 pairing over all entities.
SparseOperator assemble_mixed_mass_full(const BoxMesh& mesh);
/// Edge-by-face L2 pairing on free edge and face DOFs.
SparseOperator assemble_mixed_mass(const BoxMesh& mesh);

/// Canonical DOFs over every entity of dimension 1 (circulations), 2 (fluxes)
/// or 0 (point values of each component, interleaved xyz) using Gauss rules
/// with `points` nodes per axis.
Eigen::VectorXd interpolate_entities(const BoxMesh& mesh, const VectorField& f, int dim,
                                     int points = 5);
/// Interpolation into a space; constrained DOFs are dropped (implicitly zero).
FieldVec interpolate(const DeRhamComplex& complex, const VectorField& f, SpaceKind kind,
                     int points = 5);

struct ComplexReport {
  double max_abs_curl_grad = 0.0;
  double max_abs_div_curl = 0.0;
  bool incidence_entries_ok = true;  // every entry in {-1, 0, +1}
  bool dense_checked = false;
  int rank_grad = -1;
  int rank_curl = -1;
  int rank_div = -1;
  int node_defect = -1;  // dim ker grad
  int edge_defect = -1;  // dim ker curl - rank grad
  int face_defect = -1;  // dim ker div - rank curl
  int cell_defect = -1;  // (#cells - 1) - rank div
  int expected_harmonic_dim = 0;
  bool passed = false;
  std::vector<std::string> failures;
};

/// Dense rank checks run only when the total DOF count is <= dense_limit.
ComplexReport verify_complex(const DeRhamComplex& complex, int dense_limit = 500);

}  // namespace mfrelax
