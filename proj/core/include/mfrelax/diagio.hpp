// Diagnostics rows, CSV time series, legacy VTK snapshots, field-line tracing
// and binary checkpoints.
#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "mfrelax/hodge.hpp"
#include "mfrelax/relax.hpp"

namespace mfrelax {

/// One record of the time series. Quantities that do not apply to a scheme
/// (helicity for hcurl/h1, div_norm for hcurl) are NaN and written as "nan".
struct DiagRow {
  double t = 0.0;
  double energy = 0.0;
  double helicity = 0.0;
  double gen_helicity = 0.0;
  double div_norm = 0.0;
  double harmonic_norm = 0.0;
  double modified_energy = 0.0;
  int newton_iters = 0;
  double residual = 0.0;
  /// Helicity columns copied from an earlier row (cadence skip). Not written.
  bool helicity_carried = false;
};

inline constexpr const char* kCsvHeader =
    "t,energy,helicity,gen_helicity,div_norm,harmonic_norm,modified_energy,newton_iters,residual";

/// Divergence measure of a state: ||D_div B||_2 for face fields, the 2-norm of
/// per-cell integrals of div B for h1 fields, NaN for hcurl.
double divergence_norm(const DeRhamComplex& complex, const FieldVec& B);

/// hodge may be null (cadence skip); then helicity, harmonic_norm and
/// modified_energy are copied from `previous` when given, NaN otherwise.
DiagRow diagnostics_row(const DeRhamComplex& complex, const SchemeState& state,
                        const HodgeResult* hodge, const StepReport* report = nullptr,
                        const DiagRow* previous = nullptr);

std::string format_double(double v);
std::string format_csv_row(const DiagRow& row);

void write_csv(const std::vector<DiagRow>& rows, const std::filesystem::path& path);
/// Appends one row, writing the header first if the file is missing or empty.
void append_csv_row(const DiagRow& row, const std::filesystem::path& path);
std::vector<DiagRow> read_csv(const std::filesystem::path& path);

/// Per-cell average of B: flux / face area averaged over opposing faces for
/// face fields, circulation / length over the four parallel edges for edge
/// fields, the vertex mean for h1 fields. Indexed by BoxMesh::cell_index.
std::vector<Vec3> cell_averages(const DeRhamComplex& complex, const FieldVec& B);

/// Writes `<stem>_<step>.vtk` (step zero-padded to 6 digits) and returns the path.
std::filesystem::path write_vtk_snapshot(const DeRhamComplex& complex, const SchemeState& state,
                                         const std::filesystem::path& stem, int step);

enum class Termination { boundary, max_length, stagnation };
std::string to_string(Termination t);

struct Polyline {
  std::vector<Vec3> points;
  int seed_id = 0;
  Termination reason = Termination::max_length;
  /// Indices i where points[i] starts a new piece after a periodic z wrap.
  std::vector<std::size_t> wrap_breaks;
};

struct TraceResult {
  std::vector<Polyline> lines;
  std::vector<int> skipped_seeds;  // outside the domain
};

/// Value of a face field at a point (Raviart-Thomas reconstruction in the
/// containing cell). Precondition: mesh.contains(p).
Vec3 evaluate_face_field(const DeRhamComplex& complex, const FieldVec& B, const Vec3& p);

/// RK4 along B/|B| with fixed arclength step (step_len <= 0 selects h_min / 4).
TraceResult trace_fieldlines(const DeRhamComplex& complex, const FieldVec& B,
                             const std::vector<Vec3>& seeds, double step_len, double max_len);

/// Legacy ASCII POLYDATA; lines are split at periodic wraps.
void write_polylines_vtk(const std::vector<Polyline>& lines, const std::filesystem::path& path);

void checkpoint_save(const DeRhamComplex& complex, const SchemeState& state,
                     const std::filesystem::path& path);
/// Throws std::runtime_error on version, mesh or size mismatch.
SchemeState checkpoint_load(const DeRhamComplex& complex, const std::filesystem::path& path);

}  // namespace mfrelax
