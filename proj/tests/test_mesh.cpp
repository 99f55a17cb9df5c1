#include <gtest/gtest.h>

#include <stdexcept>

#include "mfrelax/mesh.hpp"

using namespace mfrelax;

namespace {

BoxMesh desk(bool periodic) {
  return build_box_mesh({Interval{-4, 4}, Interval{-4, 4}, Interval{-10, 10}}, {4, 4, 10}, periodic);
}

std::string message_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const std::exception& e) {
    return e.what();
  }
  return {};
}

}  // namespace

TEST(Mesh, CountsNonPeriodic) {
  const EntityCounts n = desk(false).counts();
  EXPECT_EQ(n.vertices, 275);
  EXPECT_EQ(n.total_edges(), 690);
  EXPECT_EQ(n.total_faces(), 576);
  EXPECT_EQ(n.cells, 160);
  EXPECT_EQ(n.euler_characteristic(), 1);
}

TEST(Mesh, CountsPeriodic) {
  const EntityCounts n = desk(true).counts();
  EXPECT_EQ(n.vertices, 250);
  EXPECT_EQ(n.total_edges(), 650);
  EXPECT_EQ(n.total_faces(), 560);
  EXPECT_EQ(n.cells, 160);
  EXPECT_EQ(n.euler_characteristic(), 0);
}

TEST(Mesh, SpacingAndVolume) {
  const BoxMesh m = desk(false);
  EXPECT_DOUBLE_EQ(m.spacing()[0], 2.0);
  EXPECT_DOUBLE_EQ(m.spacing()[2], 2.0);
  EXPECT_DOUBLE_EQ(m.volume(), 1280.0);
  EXPECT_DOUBLE_EQ(m.cell_volume(), 8.0);
}

TEST(Mesh, InvalidInputNamesAxis) {
  const auto zero_res = message_of([] {
    build_box_mesh({Interval{0, 1}, Interval{0, 1}, Interval{0, 1}}, {2, 0, 2}, false);
  });
  EXPECT_NE(zero_res.find("axis y"), std::string::npos) << zero_res;
  const auto flat = message_of([] {
    build_box_mesh({Interval{1, 1}, Interval{0, 1}, Interval{0, 1}}, {2, 2, 2}, false);
  });
  EXPECT_NE(flat.find("axis x"), std::string::npos) << flat;
  const auto thin = message_of([] {
    build_box_mesh({Interval{0, 1}, Interval{0, 1}, Interval{0, 1}}, {2, 2, 1}, true);
  });
  EXPECT_NE(thin.find("axis z"), std::string::npos) << thin;
}

TEST(Mesh, BoundaryMasks) {
  const BoxMesh p = desk(true);
  const BoxMesh q = desk(false);
  EXPECT_EQ(p.boundary_mask(2).count(), 160);
  EXPECT_EQ(q.boundary_mask(2).count(), 192);
  EXPECT_EQ(p.boundary_mask(3).count(), 0);
  // Non-periodic: interior vertices are the 3x3x9 lattice.
  EXPECT_EQ(q.counts().vertices - q.boundary_mask(0).count(), 81);
  EXPECT_EQ(p.counts().vertices - p.boundary_mask(0).count(), 90);
}

TEST(Mesh, IndexRoundTrip) {
  for (bool periodic : {false, true}) {
    const BoxMesh m = desk(periodic);
    for (int d = 0; d <= 3; ++d) {
      for (int n = 0; n < m.count_dim(d); ++n) {
        const EntityId id = m.entity(d, n);
        EXPECT_EQ(dimension(id.kind), d);
        ASSERT_EQ(m.index_of(id), n);
      }
    }
  }
}

TEST(Mesh, PeriodicWrapIdentifiesTopLayer) {
  const BoxMesh m = desk(true);
  const EntityId top{EntityKind::vertex, {1, 2, 10}};
  const EntityId bottom{EntityKind::vertex, {1, 2, 0}};
  EXPECT_EQ(m.canonical(top), bottom);
  EXPECT_EQ(m.index_of(top), m.index_of(bottom));
  EXPECT_THROW(desk(false).index_of(EntityId{EntityKind::vertex, {1, 2, 11}}), std::out_of_range);
}

TEST(Mesh, LocateAndWrap) {
  const BoxMesh m = desk(true);
  Vec3 local;
  const auto cell = m.locate(Vec3(-3.0, 0.5, 9.0), local);
  EXPECT_EQ(cell[0], 0);
  EXPECT_EQ(cell[1], 2);
  EXPECT_EQ(cell[2], 9);
  EXPECT_NEAR(local[0], 0.5, 1e-15);
  EXPECT_NEAR(local[1], 0.25, 1e-15);
  EXPECT_NEAR(local[2], 0.5, 1e-15);
  EXPECT_NEAR(m.wrap(Vec3(0, 0, 11))[2], -9.0, 1e-14);
  EXPECT_NEAR(m.wrap(Vec3(0, 0, -12))[2], 8.0, 1e-14);
  EXPECT_TRUE(m.contains(Vec3(0, 0, 25)));
  EXPECT_FALSE(desk(false).contains(Vec3(0, 0, 25)));
  EXPECT_FALSE(m.contains(Vec3(4.5, 0, 0)));
  // The upper boundary belongs to the last cell.
  const auto last = desk(false).locate(Vec3(4.0, 4.0, 10.0), local);
  EXPECT_EQ(last[0], 3);
  EXPECT_EQ(last[2], 9);
  EXPECT_NEAR(local[0], 1.0, 1e-15);
}

TEST(Mesh, DescriptorDistinguishesMeshes) {
  EXPECT_NE(desk(true).descriptor(), desk(false).descriptor());
  EXPECT_EQ(desk(true).descriptor(), desk(true).descriptor());
}
