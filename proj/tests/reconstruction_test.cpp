#include "sapg/reconstruction.hpp"

#include <gtest/gtest.h>

#include "sapg/nn_models.hpp"
#include "sapg/rng.hpp"

using namespace sapg;

namespace {

GridSpec flat_spec() {
  GridSpec spec;
  spec.origin = Vec3(-2, -2, -1.05);
  spec.cell_size = 0.25;
  spec.dims = {16, 16, 10};
  return spec;
}

// Feature grid with observations in a chosen set of cells.
FeatureGrid grid_with_observations(const GridSpec& spec, int n,
                                   const std::vector<size_t>& cells) {
  FeatureGrid grid(spec, n);
  std::vector<double> sums(static_cast<size_t>(3) * n, 0.0);
  std::vector<uint32_t> counts(static_cast<size_t>(3) * n, 0);
  sums[2] = 0.25;
  counts[2] = 1;
  for (size_t c : cells) grid.set_raw(c, sums.data(), counts.data());
  return grid;
}

}  // namespace

TEST(PredictCells, EvaluatesExactlyObservedCells) {
  const GridSpec spec = flat_spec();
  std::vector<size_t> cells;
  Rng rng(83);
  for (size_t c = 0; c < spec.cell_count(); ++c)
    if (rng.uniform() < 0.2) cells.push_back(c);
  const FeatureGrid grid = grid_with_observations(spec, 16, cells);

  // Zero-weight networks: classifier outputs exactly 0.5 everywhere.
  const nn::Model cls = nn::build_classifier(16);
  const nn::Model reg = nn::build_regressor(16);

  PredictStats stats;
  const auto preds = predict_cells(grid, cls, reg, 0.4, 1.0, &stats);
  EXPECT_EQ(preds.size(), cells.size());
  EXPECT_EQ(stats.evaluated, cells.size());
  EXPECT_EQ(stats.inliers, cells.size());  // 0.5 >= 0.4
  for (const auto& p : preds) {
    EXPECT_DOUBLE_EQ(p.inlier_prob, 0.5);
    EXPECT_TRUE(p.inlier);
    EXPECT_DOUBLE_EQ(p.d, 0.0);
    EXPECT_LT((p.n_hat - Vec3::UnitZ()).norm(), 1e-12);
  }

  const auto rejected = predict_cells(grid, cls, reg, 0.6, 1.0, &stats);
  EXPECT_EQ(stats.inliers, 0u);
  for (const auto& p : rejected) EXPECT_FALSE(p.inlier);
}

TEST(PredictCells, MismatchedWidthThrows) {
  const FeatureGrid grid(flat_spec(), 16);
  const nn::Model cls = nn::build_classifier(8);
  const nn::Model reg = nn::build_regressor(16);
  EXPECT_THROW(predict_cells(grid, cls, reg, 0.5, 1.0), std::invalid_argument);
}

TEST(FusePrediction, SignConventionAroundSurface) {
  const GridSpec spec = flat_spec();
  TsdfGrid tsdf(spec, 1.0);
  // Zero distance at a cell with an upward gradient: the surface passes
  // through the cell; free space above stays positive.
  const Vec3 center = spec.cell_center(spec.cell_at(Vec3(0.125, 0.125, 0.0)));
  fuse_prediction(tsdf, center, 0.0, Vec3::UnitZ(), 1.0);

  const size_t above = spec.linear(spec.cell_at(center + Vec3(0, 0, 0.5)));
  const size_t below = spec.linear(spec.cell_at(center - Vec3(0, 0, 0.5)));
  ASSERT_GT(tsdf.weight(above), 0.0);
  ASSERT_GT(tsdf.weight(below), 0.0);
  EXPECT_GT(tsdf.distance(above), 0.25);
  EXPECT_LT(tsdf.distance(below), -0.25);
  EXPECT_NEAR(tsdf.distance(spec.linear(spec.cell_at(center))), 0.0,
              0.5 * spec.cell_size);
}

TEST(FusePrediction, AgreeingPredictionsMatchSingle) {
  const GridSpec spec = flat_spec();
  TsdfGrid one(spec, 1.0), two(spec, 1.0);
  const Vec3 center = spec.cell_center(spec.cell_at(Vec3(0, 0, 0.3)));
  fuse_prediction(one, center, 0.3, Vec3::UnitZ(), 1.0);
  fuse_prediction(two, center, 0.3, Vec3::UnitZ(), 1.0);
  fuse_prediction(two, center, 0.3, Vec3::UnitZ(), 1.0);
  for (size_t c = 0; c < spec.cell_count(); ++c) {
    if (!(one.band_weight(c) > 0.0f)) continue;
    EXPECT_NEAR(two.distance(c), one.distance(c), 1e-9);
    EXPECT_EQ(two.band_weight(c), 2.0f * one.band_weight(c));
  }
}

TEST(FusePrediction, RejectsOutOfBandInputs) {
  TsdfGrid tsdf(flat_spec(), 1.0);
  EXPECT_THROW(fuse_prediction(tsdf, Vec3::Zero(), 1.0, Vec3::UnitZ(), 1.0),
               std::invalid_argument);
  EXPECT_THROW(fuse_prediction(tsdf, Vec3::Zero(), 0.0, Vec3(0, 0, 2), 1.0),
               std::invalid_argument);
}

TEST(FusePrediction, PlaneOfPredictionsRecoversPlane) {
  const GridSpec spec = flat_spec();
  TsdfGrid tsdf(spec, 1.0);
  // Predictions from every cell within the band of the plane z = 0, as the
  // regressor would produce on perfect data.
  for (size_t c = 0; c < spec.cell_count(); ++c) {
    const Vec3 center = spec.cell_center(spec.unlinear(c));
    if (std::abs(center.z()) >= 0.9) continue;
    fuse_prediction(tsdf, center, center.z(), Vec3::UnitZ(), 1.0);
  }
  const TriangleMesh mesh = marching_cubes(tsdf);
  ASSERT_FALSE(mesh.empty());
  for (const auto& v : mesh.vertices) EXPECT_LE(std::abs(v.z()), 0.5 * spec.cell_size);

  // End-to-end sign convention: cells clearly above the floor never go
  // strongly negative.
  for (size_t c = 0; c < spec.cell_count(); ++c) {
    if (!(tsdf.weight(c) > 0.0)) continue;
    const Vec3 center = spec.cell_center(spec.unlinear(c));
    if (center.z() > 0.3) EXPECT_GT(tsdf.distance(c), -0.5);
  }
}

TEST(FusePrediction, OrderIndependentWithin1e9) {
  const GridSpec spec = flat_spec();
  struct Pred {
    Vec3 center;
    double d;
    Vec3 n;
  };
  std::vector<Pred> preds;
  Rng rng(89);
  for (int i = 0; i < 200; ++i) {
    const Vec3 center(rng.uniform(-1.5, 1.5), rng.uniform(-1.5, 1.5),
                      rng.uniform(-0.5, 0.5));
    const TangentDelta delta{rng.uniform(-0.3, 0.3), rng.uniform(-0.3, 0.3)};
    preds.push_back({center, rng.uniform(-0.8, 0.8), exp_map(delta)});
  }
  TsdfGrid fwd(spec, 1.0), rev(spec, 1.0);
  for (const auto& p : preds) fuse_prediction(fwd, p.center, p.d, p.n, 1.0);
  for (auto it = preds.rbegin(); it != preds.rend(); ++it)
    fuse_prediction(rev, it->center, it->d, it->n, 1.0);
  for (size_t c = 0; c < spec.cell_count(); ++c) {
    EXPECT_EQ(fwd.band_weight(c), rev.band_weight(c));
    if (fwd.band_weight(c) > 0.0f)
      EXPECT_NEAR(fwd.distance(c), rev.distance(c), 1e-9);
  }
}
