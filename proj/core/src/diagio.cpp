#include "mfrelax/diagio.hpp"

#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

#include <Eigen/Geometry>

#include "mfrelax/cell_basis.hpp"

namespace mfrelax {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::runtime_error io_error(const std::string& what, const std::filesystem::path& path) {
  return std::runtime_error(what + ": " + path.string());
}

std::ofstream open_out(const std::filesystem::path& path, std::ios::openmode mode) {
  if (path.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(path.parent_path(), ec);
  }
  std::ofstream out(path, mode);
  if (!out) throw io_error("cannot open for writing", path);
  return out;
}

double parse_double(const std::string& s, const std::filesystem::path& path, int line) {
  if (s == "nan" || s == "-nan") return kNaN;
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    throw io_error("line " + std::to_string(line) + ": bad number '" + s + "'", path);
  }
  return v;
}

Eigen::VectorXd full_coeffs(const DeRhamComplex& c, const FieldVec& B) {
  switch (B.space) {
    case SpaceKind::face:
      return c.face_dofs.prolong(B.coeffs);
    case SpaceKind::edge:
      return c.edge_dofs.prolong(B.coeffs);
    case SpaceKind::nodal_vector:
      return c.nodal_vector_dofs.prolong(B.coeffs);
    case SpaceKind::edge_full:
      return B.coeffs;
    default:
      throw std::invalid_argument("unsupported field space " + to_string(B.space));
  }
}

}  // namespace

double divergence_norm(const DeRhamComplex& c, const FieldVec& B) {
  switch (B.space) {
    case SpaceKind::face:
      return (c.div * B.coeffs).norm();
    case SpaceKind::edge_full:
    case SpaceKind::edge:
      return kNaN;
    case SpaceKind::nodal_vector: {
      const BoxMesh& mesh = c.mesh;
      const Eigen::VectorXd full = full_coeffs(c, B);
      const CellQuadrature quad = make_cell_quadrature(mesh.spacing(), 2);
      // Integral of each local gradient over one cell.
      std::array<Vec3, kCellVertices> g{};
      for (auto& v : g) v.setZero();
      for (int q = 0; q < quad.size(); ++q) {
        for (int l = 0; l < kCellVertices; ++l) g[l] += quad.weights[q] * quad.vertex_grad[q][l];
      }
      const auto [nx, ny, nz] = mesh.resolution();
      double sum = 0.0;
      for (int k = 0; k < nz; ++k) {
        for (int j = 0; j < ny; ++j) {
          for (int i = 0; i < nx; ++i) {
            const auto verts = cell_vertices(mesh, i, j, k);
            double d = 0.0;
            for (int l = 0; l < kCellVertices; ++l) {
              const int v = mesh.index_of(verts[l]);
              for (int a = 0; a < 3; ++a) d += full[3 * v + a] * g[l][a];
            }
            sum += d * d;
          }
        }
      }
      return std::sqrt(sum);
    }
    default:
      throw std::invalid_argument("divergence_norm: unsupported space " + to_string(B.space));
  }
}

DiagRow diagnostics_row(const DeRhamComplex& c, const SchemeState& state, const HodgeResult* hodge,
                        const StepReport* report, const DiagRow* previous) {
  const FieldVec& B = state.B;
  DiagRow row;
  row.t = state.t;
  row.energy = energy(c, B);
  row.div_norm = divergence_norm(c, B);
  if (B.space == SpaceKind::face) {
    if (hodge) {
      const SparseOperator& m = c.mass_face;
      const Eigen::VectorXd& bh = hodge->B_H.coeffs;
      const Eigen::VectorXd rest = B.coeffs - bh;
      row.helicity = hodge->helicity;
      row.gen_helicity = hodge->gen_helicity;
      row.harmonic_norm = std::sqrt(std::max(0.0, bh.dot(m * bh)));
      row.modified_energy = rest.dot(m * rest);
    } else {
      row.helicity_carried = true;
      row.helicity = previous ? previous->helicity : kNaN;
      row.gen_helicity = previous ? previous->gen_helicity : kNaN;
      row.harmonic_norm = previous ? previous->harmonic_norm : kNaN;
      row.modified_energy = previous ? previous->modified_energy : kNaN;
    }
  } else {
    row.helicity = row.gen_helicity = row.harmonic_norm = row.modified_energy = kNaN;
  }
  if (report) {
    row.newton_iters = report->newton_iterations;
    row.residual = report->residual_norm;
  }
  return row;
}

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

std::string format_csv_row(const DiagRow& r) {
  std::string s;
  for (double v : {r.t, r.energy, r.helicity, r.gen_helicity, r.div_norm, r.harmonic_norm,
                   r.modified_energy}) {
    s += format_double(v);
    s += ',';
  }
  s += std::to_string(r.newton_iters);
  s += ',';
  s += format_double(r.residual);
  return s;
}

void write_csv(const std::vector<DiagRow>& rows, const std::filesystem::path& path) {
  std::ofstream out = open_out(path, std::ios::out | std::ios::trunc);
  out << kCsvHeader << '\n';
  for (const auto& r : rows) out << format_csv_row(r) << '\n';
  if (!out) throw io_error("write failed", path);
}

void append_csv_row(const DiagRow& row, const std::filesystem::path& path) {
  std::error_code ec;
  const bool fresh = !std::filesystem::exists(path, ec) || std::filesystem::file_size(path, ec) == 0;
  std::ofstream out = open_out(path, std::ios::out | std::ios::app);
  if (fresh) out << kCsvHeader << '\n';
  out << format_csv_row(row) << '\n';
  out.flush();
  if (!out) throw io_error("write failed", path);
}

std::vector<DiagRow> read_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw io_error("cannot open for reading", path);
  std::string line;
  if (!std::getline(in, line) || line != kCsvHeader) throw io_error("missing or wrong CSV header", path);
  std::vector<DiagRow> rows;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) f.push_back(cell);
    if (f.size() != 9) throw io_error("line " + std::to_string(lineno) + ": expected 9 fields", path);
    DiagRow r;
    r.t = parse_double(f[0], path, lineno);
    r.energy = parse_double(f[1], path, lineno);
    r.helicity = parse_double(f[2], path, lineno);
    r.gen_helicity = parse_double(f[3], path, lineno);
    r.div_norm = parse_double(f[4], path, lineno);
    r.harmonic_norm = parse_double(f[5], path, lineno);
    r.modified_energy = parse_double(f[6], path, lineno);
    r.newton_iters = static_cast<int>(parse_double(f[7], path, lineno));
    r.residual = parse_double(f[8], path, lineno);
    rows.push_back(r);
  }
  return rows;
}

std::vector<Vec3> cell_averages(const DeRhamComplex& c, const FieldVec& B) {
  const BoxMesh& mesh = c.mesh;
  const Vec3 h = mesh.spacing();
  const Eigen::VectorXd full = full_coeffs(c, B);
  const auto [nx, ny, nz] = mesh.resolution();
  std::vector<Vec3> out(static_cast<std::size_t>(nx) * ny * nz, Vec3::Zero());
  for (int k = 0; k < nz; ++k) {
    for (int j = 0; j < ny; ++j) {
      for (int i = 0; i < nx; ++i) {
        Vec3 v = Vec3::Zero();
        if (B.space == SpaceKind::face) {
          const auto faces = cell_faces(mesh, i, j, k);
          for (int a = 0; a < 3; ++a) {
            const auto o = other_axes(a);
            const double area = h[o[0]] * h[o[1]];
            v[a] = 0.5 * (full[mesh.index_of(faces[2 * a])] + full[mesh.index_of(faces[2 * a + 1])]) / area;
          }
        } else if (B.space == SpaceKind::nodal_vector) {
          for (const auto& id : cell_vertices(mesh, i, j, k)) {
            const int n = mesh.index_of(id);
            v += Vec3(full[3 * n], full[3 * n + 1], full[3 * n + 2]) / kCellVertices;
          }
        } else {
          const auto edges = cell_edges(mesh, i, j, k);
          for (int a = 0; a < 3; ++a) {
            double s = 0.0;
            for (int m = 0; m < 4; ++m) s += full[mesh.index_of(edges[4 * a + m])];
            v[a] = 0.25 * s / h[a];
          }
        }
        out[mesh.cell_index(i, j, k)] = v;
      }
    }
  }
  return out;
}

std::filesystem::path write_vtk_snapshot(const DeRhamComplex& c, const SchemeState& state,
                                         const std::filesystem::path& stem, int step) {
  char suffix[32];
  std::snprintf(suffix, sizeof(suffix), "_%06d.vtk", step);
  const std::filesystem::path path = stem.string() + suffix;
  const BoxMesh& mesh = c.mesh;
  const auto [nx, ny, nz] = mesh.resolution();
  const std::vector<Vec3> avg = cell_averages(c, state.B);

  std::ofstream out = open_out(path, std::ios::out | std::ios::trunc);
  out << "# vtk DataFile Version 3.0\n"
      << "mfrelax " << to_string(state.scheme) << " t=" << format_double(state.t) << '\n'
      << "ASCII\nDATASET UNSTRUCTURED_GRID\n";
  // Geometry always uses nz + 1 vertex layers, also when z is periodic.
  const int px = nx + 1, py = ny + 1, pz = nz + 1;
  const Vec3 lo(mesh.extents()[0].lo, mesh.extents()[1].lo, mesh.extents()[2].lo);
  const Vec3 h = mesh.spacing();
  out << "POINTS " << px * py * pz << " double\n";
  for (int k = 0; k < pz; ++k) {
    for (int j = 0; j < py; ++j) {
      for (int i = 0; i < px; ++i) {
        out << format_double(lo[0] + i * h[0]) << ' ' << format_double(lo[1] + j * h[1]) << ' '
            << format_double(lo[2] + k * h[2]) << '\n';
      }
    }
  }
  const int ncell = nx * ny * nz;
  auto pid = [&](int i, int j, int k) { return i + px * (j + py * k); };
  out << "CELLS " << ncell << ' ' << 9 * ncell << '\n';
  for (int cell = 0; cell < ncell; ++cell) {
    const auto [i, j, k] = mesh.cell_lattice(cell);
    out << 8 << ' ' << pid(i, j, k) << ' ' << pid(i + 1, j, k) << ' ' << pid(i + 1, j + 1, k) << ' '
        << pid(i, j + 1, k) << ' ' << pid(i, j, k + 1) << ' ' << pid(i + 1, j, k + 1) << ' '
        << pid(i + 1, j + 1, k + 1) << ' ' << pid(i, j + 1, k + 1) << '\n';
  }
  out << "CELL_TYPES " << ncell << '\n';
  for (int cell = 0; cell < ncell; ++cell) out << "12\n";
  out << "CELL_DATA " << ncell << '\n' << "VECTORS B double\n";
  for (const Vec3& v : avg) {
    out << format_double(v[0]) << ' ' << format_double(v[1]) << ' ' << format_double(v[2]) << '\n';
  }
  out << "SCALARS Bmag double 1\nLOOKUP_TABLE default\n";
  for (const Vec3& v : avg) out << format_double(v.norm()) << '\n';
  if (!out) throw io_error("write failed", path);
  return path;
}

std::string to_string(Termination t) {
  switch (t) {
    case Termination::boundary:
      return "boundary";
    case Termination::max_length:
      return "max_length";
    case Termination::stagnation:
      return "stagnation";
  }
  return "?";
}

Vec3 evaluate_face_field(const DeRhamComplex& c, const FieldVec& B, const Vec3& p) {
  if (B.space != SpaceKind::face) throw std::invalid_argument("evaluate_face_field: face field required");
  const BoxMesh& mesh = c.mesh;
  Vec3 local;
  const auto cell = mesh.locate(p, local);
  const auto faces = cell_faces(mesh, cell[0], cell[1], cell[2]);
  Vec3 v = Vec3::Zero();
  for (int l = 0; l < kCellFaces; ++l) {
    const int d = c.face_dofs.free_index[mesh.index_of(faces[l])];
    if (d >= 0) v += B.coeffs[d] * face_basis(l, local, mesh.spacing());
  }
  return v;
}

TraceResult trace_fieldlines(const DeRhamComplex& c, const FieldVec& B, const std::vector<Vec3>& seeds,
                             double step_len, double max_len) {
  if (B.space != SpaceKind::face || B.size() != c.dim(SpaceKind::face)) {
    throw std::invalid_argument("trace_fieldlines: face-space field required");
  }
  if (!(max_len > 0.0) || !std::isfinite(max_len)) {
    throw std::invalid_argument("trace_fieldlines: max_len must be positive and finite");
  }
  const BoxMesh& mesh = c.mesh;
  const double h = step_len > 0.0 ? step_len : 0.25 * mesh.min_spacing();

  auto clamp = [&](Vec3 x) {
    for (int a = 0; a < 3; ++a) {
      if (a == 2 && mesh.periodic_z()) continue;
      x[a] = std::clamp(x[a], mesh.extents()[a].lo, mesh.extents()[a].hi);
    }
    return mesh.wrap(x);
  };
  bool stagnant = false;
  auto dir = [&](const Vec3& x) -> Vec3 {
    const Vec3 b = evaluate_face_field(c, B, clamp(x));
    const double n = b.norm();
    if (n < 1e-12) {
      stagnant = true;
      return Vec3::Zero();
    }
    return b / n;
  };

  TraceResult result;
  for (std::size_t s = 0; s < seeds.size(); ++s) {
    if (!mesh.contains(seeds[s])) {
      result.skipped_seeds.push_back(static_cast<int>(s));
      continue;
    }
    Polyline line;
    line.seed_id = static_cast<int>(s);
    Vec3 p = mesh.wrap(seeds[s]);
    line.points.push_back(p);
    double len = 0.0;
    while (true) {
      const double remaining = max_len - len;
      if (remaining <= 1e-12 * h) {
        line.reason = Termination::max_length;
        break;
      }
      const double dt = std::min(h, remaining);
      stagnant = false;
      const Vec3 k1 = dir(p);
      const Vec3 k2 = dir(p + 0.5 * dt * k1);
      const Vec3 k3 = dir(p + 0.5 * dt * k2);
      const Vec3 k4 = dir(p + dt * k3);
      if (stagnant) {
        line.reason = Termination::stagnation;
        break;
      }
      const Vec3 pn = p + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
      if (!mesh.contains(pn)) {
        double lo = 0.0, hi = 1.0;
        for (int it = 0; it < 60; ++it) {
          const double mid = 0.5 * (lo + hi);
          (mesh.contains(p + mid * (pn - p)) ? lo : hi) = mid;
        }
        if (lo > 0.0) line.points.push_back(p + lo * (pn - p));
        line.reason = Termination::boundary;
        break;
      }
      len += dt;
      const Vec3 w = mesh.wrap(pn);
      if (w[2] != pn[2]) line.wrap_breaks.push_back(line.points.size());
      line.points.push_back(w);
      p = w;
    }
    result.lines.push_back(std::move(line));
  }
  return result;
}

void write_polylines_vtk(const std::vector<Polyline>& lines, const std::filesystem::path& path) {
  struct Piece {
    std::size_t begin, end;
    int seed;
  };
  std::vector<Piece> pieces;
  std::vector<std::size_t> offset;
  std::size_t npoints = 0;
  for (const auto& line : lines) {
    offset.push_back(npoints);
    std::size_t start = 0;
    std::vector<std::size_t> cuts = line.wrap_breaks;
    cuts.push_back(line.points.size());
    for (std::size_t cut : cuts) {
      if (cut - start >= 2) pieces.push_back({npoints + start, npoints + cut, line.seed_id});
      start = cut;
    }
    npoints += line.points.size();
  }
  std::ofstream out = open_out(path, std::ios::out | std::ios::trunc);
  out << "# vtk DataFile Version 3.0\nmfrelax field lines\nASCII\nDATASET POLYDATA\n";
  out << "POINTS " << npoints << " double\n";
  for (const auto& line : lines) {
    for (const Vec3& p : line.points) {
      out << format_double(p[0]) << ' ' << format_double(p[1]) << ' ' << format_double(p[2]) << '\n';
    }
  }
  std::size_t size = 0;
  for (const auto& pc : pieces) size += pc.end - pc.begin + 1;
  out << "LINES " << pieces.size() << ' ' << size << '\n';
  for (const auto& pc : pieces) {
    out << pc.end - pc.begin;
    for (std::size_t i = pc.begin; i < pc.end; ++i) out << ' ' << i;
    out << '\n';
  }
  out << "CELL_DATA " << pieces.size() << "\nSCALARS seed int 1\nLOOKUP_TABLE default\n";
  for (const auto& pc : pieces) out << pc.seed << '\n';
  if (!out) throw io_error("write failed", path);
}

// ---- checkpoints -------------------------------------------------------------

namespace {

constexpr const char* kCheckpointMagic = "PRLX1";

SpaceKind space_from_string(const std::string& s) {
  for (SpaceKind k : {SpaceKind::nodal, SpaceKind::edge, SpaceKind::face, SpaceKind::cell,
                      SpaceKind::edge_full, SpaceKind::nodal_vector}) {
    if (to_string(k) == s) return k;
  }
  throw std::runtime_error("checkpoint: unknown space '" + s + "'");
}

std::uint64_t to_little(std::uint64_t v) {
  if constexpr (std::endian::native == std::endian::big) return __builtin_bswap64(v);
  return v;
}

}  // namespace

void checkpoint_save(const DeRhamComplex& c, const SchemeState& state,
                     const std::filesystem::path& path) {
  if (state.B.size() != c.dim(state.B.space)) {
    throw std::invalid_argument("checkpoint_save: state does not match the complex");
  }
  const std::filesystem::path tmp = path.string() + ".tmp";
  {
    std::ofstream out = open_out(tmp, std::ios::out | std::ios::trunc | std::ios::binary);
    out << kCheckpointMagic << '\n'
        << "scheme " << to_string(state.scheme) << '\n'
        << "space " << to_string(state.B.space) << '\n'
        << "mesh " << c.mesh.descriptor() << '\n'
        << "t " << format_double(state.t) << '\n'
        << "ndof " << state.B.size() << '\n'
        << "end\n";
    for (Eigen::Index i = 0; i < state.B.size(); ++i) {
      const std::uint64_t bits = to_little(std::bit_cast<std::uint64_t>(state.B.coeffs[i]));
      out.write(reinterpret_cast<const char*>(&bits), sizeof(bits));
    }
    out.flush();
    if (!out) throw io_error("write failed", tmp);
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw io_error("cannot move checkpoint into place (" + ec.message() + ")", path);
}

SchemeState checkpoint_load(const DeRhamComplex& c, const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::in | std::ios::binary);
  if (!in) throw io_error("cannot open checkpoint", path);
  std::string line;
  if (!std::getline(in, line) || line != kCheckpointMagic) {
    throw io_error("not a " + std::string(kCheckpointMagic) + " checkpoint", path);
  }
  SchemeState state;
  std::string scheme, space, mesh;
  double t = 0.0;
  long ndof = -1;
  while (std::getline(in, line) && line != "end") {
    const auto sp = line.find(' ');
    const std::string key = line.substr(0, sp);
    const std::string val = sp == std::string::npos ? "" : line.substr(sp + 1);
    if (key == "scheme") scheme = val;
    else if (key == "space") space = val;
    else if (key == "mesh") mesh = val;
    else if (key == "t") t = parse_double(val, path, 0);
    else if (key == "ndof") ndof = std::stol(val);
    else throw io_error("unknown checkpoint key '" + key + "'", path);
  }
  if (line != "end") throw io_error("truncated checkpoint header", path);
  if (mesh != c.mesh.descriptor()) {
    throw io_error("checkpoint mesh '" + mesh + "' does not match '" + c.mesh.descriptor() + "'", path);
  }
  state.scheme = scheme_from_string(scheme);
  const SpaceKind kind = space_from_string(space);
  if (kind != state_space(state.scheme)) throw io_error("checkpoint space does not match its scheme", path);
  if (ndof != c.dim(kind)) throw io_error("checkpoint DOF count does not match the complex", path);
  state.t = t;
  state.B = FieldVec{kind, Eigen::VectorXd(ndof)};
  for (long i = 0; i < ndof; ++i) {
    std::uint64_t bits = 0;
    if (!in.read(reinterpret_cast<char*>(&bits), sizeof(bits))) throw io_error("truncated checkpoint data", path);
    state.B.coeffs[i] = std::bit_cast<double>(to_little(bits));
  }
  return state;
}

}  // namespace mfrelax
