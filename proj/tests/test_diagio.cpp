#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>
#include <string>

#include "mfrelax/diagio.hpp"
#include "oracles.hpp"

using namespace mfrelax;
namespace fs = std::filesystem;

namespace {

BoxMesh desk(bool periodic) {
  return build_box_mesh({Interval{-4, 4}, Interval{-4, 4}, Interval{-10, 10}}, {4, 4, 10}, periodic);
}

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "mfrelax_test_diagio";
  fs::create_directories(dir);
  const fs::path p = dir / name;
  fs::remove(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

SchemeState uniform_z(const DeRhamComplex& c, double value = 1.0) {
  SchemeState s;
  s.scheme = SchemeKind::sp;
  s.B = interpolate(c, [value](const Vec3&) { return Vec3(0, 0, value); }, SpaceKind::face);
  return s;
}

}  // namespace

TEST(Diagio, ZeroFieldRow) {
  const DeRhamComplex c = build_complex(desk(false));
  SchemeState s;
  s.B = c.zeros(SpaceKind::face);
  const HodgeResult h = HodgeSolver(c).decompose(s.B);
  const DiagRow r = diagnostics_row(c, s, &h);
  EXPECT_EQ(r.energy, 0.0);
  EXPECT_EQ(r.helicity, 0.0);
  EXPECT_EQ(r.div_norm, 0.0);
  EXPECT_EQ(r.harmonic_norm, 0.0);
  EXPECT_EQ(r.modified_energy, 0.0);
}

TEST(Diagio, UniformPeriodicFieldRow) {
  const DeRhamComplex c = build_complex(desk(true));
  const SchemeState s = uniform_z(c);
  const HodgeResult h = HodgeSolver(c).decompose(s.B);
  const DiagRow r = diagnostics_row(c, s, &h);
  EXPECT_NEAR(r.energy, 1280.0, 1e-9);
  EXPECT_NEAR(r.helicity, 0.0, 1e-10);
  EXPECT_NEAR(r.div_norm, 0.0, 1e-12);
  EXPECT_NEAR(r.harmonic_norm, std::sqrt(1280.0), 1e-9);
  EXPECT_NEAR(r.modified_energy, 0.0, 1e-9);
}

TEST(Diagio, SkippedHodgeCarriesPreviousValues) {
  const DeRhamComplex c = build_complex(desk(true));
  const SchemeState s = uniform_z(c);
  DiagRow prev;
  prev.helicity = 0.5;
  prev.gen_helicity = 0.25;
  const DiagRow r = diagnostics_row(c, s, nullptr, nullptr, &prev);
  EXPECT_TRUE(r.helicity_carried);
  EXPECT_EQ(r.helicity, 0.5);
  EXPECT_EQ(r.gen_helicity, 0.25);
  const DiagRow first = diagnostics_row(c, s, nullptr);
  EXPECT_TRUE(std::isnan(first.helicity));
}

TEST(Diagio, NonFaceSchemesReportNan) {
  const DeRhamComplex c = build_complex(desk(false));
  const SchemeState hc = make_initial_state(c, SchemeKind::hcurl, HopfParams{});
  const DiagRow r = diagnostics_row(c, hc, nullptr);
  EXPECT_TRUE(std::isnan(r.div_norm));
  EXPECT_TRUE(std::isnan(r.helicity));
  EXPECT_GT(r.energy, 0.0);
  EXPECT_NE(format_csv_row(r).find("nan"), std::string::npos);
}

TEST(Diagio, H1DivergenceOfConstantFieldIsZero) {
  const DeRhamComplex c = build_complex(desk(true));
  const FieldVec b = interpolate(c, [](const Vec3&) { return Vec3(0, 0, 2); }, SpaceKind::nodal_vector);
  EXPECT_NEAR(divergence_norm(c, b), 0.0, 1e-12);
  const FieldVec twisted = interpolate(
      c, [](const Vec3& x) { return Vec3(0.0, 0.0, 1.0 + 0.1 * x[2] * x[2]); }, SpaceKind::nodal_vector);
  EXPECT_GT(divergence_norm(c, twisted), 1e-3);
}

TEST(Diagio, CsvHeaderAndRoundTrip) {
  const fs::path empty = scratch("empty.csv");
  write_csv({}, empty);
  EXPECT_EQ(slurp(empty), std::string(kCsvHeader) + "\n");
  EXPECT_TRUE(read_csv(empty).empty());

  std::vector<DiagRow> rows(3);
  for (int i = 0; i < 3; ++i) {
    rows[i].t = 10.0 * i;
    rows[i].energy = 1.0 / 3.0 + i;
    rows[i].helicity = 0.0827064935550 * std::pow(1.1, i);
    rows[i].gen_helicity = -1e-300;
    rows[i].div_norm = i == 1 ? std::numeric_limits<double>::quiet_NaN() : 7.1e-15;
    rows[i].harmonic_norm = std::nextafter(1.0, 2.0);
    rows[i].modified_energy = 12.33;
    rows[i].newton_iters = 3;
    rows[i].residual = 4.2e-12;
  }
  const fs::path p = scratch("rows.csv");
  write_csv(rows, p);
  const std::vector<DiagRow> back = read_csv(p);
  ASSERT_EQ(back.size(), rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    EXPECT_EQ(format_csv_row(back[i]), format_csv_row(rows[i]));
    EXPECT_EQ(back[i].energy, rows[i].energy);
    EXPECT_EQ(back[i].helicity, rows[i].helicity);
    EXPECT_EQ(back[i].harmonic_norm, rows[i].harmonic_norm);
  }
  EXPECT_TRUE(std::isnan(back[1].div_norm));
  EXPECT_NE(slurp(p).find(",nan,"), std::string::npos);

  const fs::path q = scratch("appended.csv");
  for (const DiagRow& r : rows) append_csv_row(r, q);
  EXPECT_EQ(slurp(q), slurp(p));
}

TEST(Diagio, VtkSnapshotOfUniformField) {
  const DeRhamComplex c = build_complex(desk(true));
  const SchemeState s = uniform_z(c, 2.5);
  const fs::path dir = fs::temp_directory_path() / "mfrelax_test_diagio";
  const fs::path path = write_vtk_snapshot(c, s, dir / "B", 42);
  EXPECT_EQ(path.filename(), "B_000042.vtk");

  std::ifstream in(path);
  std::string line;
  int points = -1;
  int cell_types = 0;
  std::vector<Vec3> vectors;
  while (std::getline(in, line)) {
    std::istringstream ls(line);
    std::string key;
    ls >> key;
    if (key == "POINTS") ls >> points;
    if (key == "CELL_TYPES") {
      int n = 0;
      ls >> n;
      for (int i = 0; i < n; ++i) {
        std::getline(in, line);
        cell_types += line == "12";
      }
    }
    if (key == "VECTORS") {
      for (int i = 0; i < 160; ++i) {
        Vec3 v;
        in >> v[0] >> v[1] >> v[2];
        vectors.push_back(v);
      }
    }
  }
  EXPECT_EQ(points, 5 * 5 * 11);
  EXPECT_EQ(cell_types, 160);
  ASSERT_EQ(vectors.size(), 160u);
  for (const Vec3& v : vectors) EXPECT_LE((v - Vec3(0, 0, 2.5)).norm(), 1e-12);
}

TEST(Diagio, CellAveragesOfUniformFieldInEverySpace) {
  const DeRhamComplex c = build_complex(desk(true));
  const Vec3 u(0.0, 0.0, -1.5);
  for (SpaceKind k : {SpaceKind::face, SpaceKind::edge_full, SpaceKind::nodal_vector}) {
    const FieldVec b = interpolate(c, [&](const Vec3&) { return u; }, k);
    for (const Vec3& v : cell_averages(c, b)) EXPECT_LE((v - u).norm(), 1e-12) << to_string(k);
  }
}

TEST(Diagio, FaceReconstructionConvergesUnderRefinement) {
  const VectorField hopf = hopf_field(HopfParams{});
  auto error = [&](int factor) {
    const BoxMesh m = build_box_mesh({Interval{-4, 4}, Interval{-4, 4}, Interval{-10, 10}},
                                     {4 * factor, 4 * factor, 10 * factor}, false);
    const DeRhamComplex c = build_complex(m);
    const FieldVec b = interpolate(c, hopf, SpaceKind::face);
    double sum = 0.0;
    for (int s = 0; s < 200; ++s) {
      const Eigen::VectorXd r = oracle::random_vector(3, 500 + s);
      const Vec3 x(3.0 * r[0], 3.0 * r[1], 4.0 * r[2]);
      sum += (evaluate_face_field(c, b, x) - hopf(x)).squaredNorm();
    }
    return std::sqrt(sum);
  };
  const double coarse = error(1);
  const double fine = error(2);
  EXPECT_LT(fine, 0.7 * coarse);
}

TEST(Diagio, TracerFollowsUniformField) {
  const DeRhamComplex c = build_complex(desk(true));
  const FieldVec up = uniform_z(c).B;
  const TraceResult straight = trace_fieldlines(c, up, {Vec3(0, 0, -9)}, 0.0, 4.0);
  ASSERT_EQ(straight.lines.size(), 1u);
  EXPECT_LE((straight.lines[0].points.back() - Vec3(0, 0, -5)).norm(), 1e-10);
  EXPECT_EQ(straight.lines[0].reason, Termination::max_length);
  EXPECT_TRUE(straight.lines[0].wrap_breaks.empty());

  const TraceResult wrapped = trace_fieldlines(c, up, {Vec3(0, 0, -9)}, 0.0, 25.0);
  EXPECT_LE((wrapped.lines[0].points.back() - Vec3(0, 0, -4)).norm(), 1e-10);
  EXPECT_EQ(wrapped.lines[0].wrap_breaks.size(), 1u);

  const FieldVec down = uniform_z(c, -1.0).B;
  const TraceResult reversed = trace_fieldlines(c, down, {Vec3(1, 1, -9)}, 0.0, 4.0);
  EXPECT_LE((reversed.lines[0].points.back() - Vec3(1, 1, 7)).norm(), 1e-10);

  const TraceResult outside = trace_fieldlines(c, up, {Vec3(5, 0, 0), Vec3(0, 0, 0)}, 0.0, 1.0);
  ASSERT_EQ(outside.skipped_seeds.size(), 1u);
  EXPECT_EQ(outside.skipped_seeds[0], 0);
  ASSERT_EQ(outside.lines.size(), 1u);
  EXPECT_EQ(outside.lines[0].seed_id, 1);

  const fs::path p = scratch("lines.vtk");
  write_polylines_vtk(wrapped.lines, p);
  const std::string text = slurp(p);
  EXPECT_NE(text.find("DATASET POLYDATA"), std::string::npos);
  EXPECT_NE(text.find("LINES 2 "), std::string::npos);
}

TEST(Diagio, TracerStopsAtBoundary) {
  const DeRhamComplex c = build_complex(desk(false));
  const FieldVec b = project_divfree(c, interpolate(c, hopf_field(HopfParams{}), SpaceKind::face)).B;
  const TraceResult r = trace_fieldlines(c, b, {Vec3(0.5, 0.5, 0.5)}, 0.0, 200.0);
  ASSERT_EQ(r.lines.size(), 1u);
  for (const Vec3& p : r.lines[0].points) EXPECT_TRUE(c.mesh.contains(p));
}

TEST(Diagio, CheckpointRoundTrip) {
  const DeRhamComplex c = build_complex(desk(false));
  SchemeState s = make_initial_state(c, SchemeKind::sp, HopfParams{});
  s.t = 130.0;
  const fs::path p = scratch("state.prlx");
  checkpoint_save(c, s, p);
  const SchemeState back = checkpoint_load(c, p);
  EXPECT_EQ(back.t, s.t);
  EXPECT_EQ(back.scheme, s.scheme);
  EXPECT_EQ(back.B.space, s.B.space);
  EXPECT_EQ(back.B.coeffs, s.B.coeffs);

  const DeRhamComplex other = build_complex(desk(true));
  EXPECT_THROW(checkpoint_load(other, p), std::runtime_error);
  const fs::path junk = scratch("junk.prlx");
  std::ofstream(junk) << "not a checkpoint\n";
  EXPECT_THROW(checkpoint_load(c, junk), std::runtime_error);
}
