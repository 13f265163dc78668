#include "sapg/feature_grid.hpp"

#include <gtest/gtest.h>

#include <map>

#include "sapg/rng.hpp"
#include "sapg/sonar.hpp"
#include "sapg/trajectory.hpp"

using namespace sapg;

namespace {

GridSpec small_grid() {
  GridSpec spec;
  spec.origin = Vec3(-2, -2, -2);
  spec.cell_size = 0.5;
  spec.dims = {8, 8, 8};
  return spec;
}

SonarConfig small_sonar() {
  SonarConfig c;
  c.r_min = 0.5;
  c.r_max = 6.0;
  c.n_range_bins = 32;
  c.azimuth_fov = 90.0 * M_PI / 180.0;
  c.n_beams = 16;
  c.elevation_fov = 40.0 * M_PI / 180.0;
  c.n_elevation_samples = 8;
  c.noise_sigma = 0.0;
  c.march_step = 0.1;
  return c;
}

SonarImage constant_image(const SonarConfig& cfg, float value) {
  SonarImage img;
  img.config = cfg;
  img.intensities.assign(static_cast<size_t>(cfg.n_range_bins) * cfg.n_beams,
                         SonarImage::quantize(value));
  return img;
}

// Brute-force observation log: re-derives, for every (frame, cell), whether
// the cell is in the FOV and which bins it lands in, accumulating sums and
// counts independently of FeatureGrid's scan order and slot bookkeeping.
struct OracleCell {
  std::map<std::pair<int, int>, std::pair<double, uint32_t>> bins;  // (axis,bin)->sum,count
};

std::map<size_t, OracleCell> oracle_integrate(
    const GridSpec& spec, int n,
    const std::vector<std::pair<SonarImage, Pose>>& frames) {
  std::map<size_t, OracleCell> cells;
  for (const auto& [img, pose] : frames) {
    const SonarConfig& cfg = img.config;
    for (size_t c = 0; c < spec.cell_count(); ++c) {
      const Vec3 center = spec.cell_center(spec.unlinear(c));
      const Vec3 p_l = cell_to_sonar(pose, center);
      if (p_l.norm() == 0.0) continue;
      const PolarCoord polar = project_polar(p_l);
      if (polar.range < cfg.r_min || polar.range > cfg.r_max) continue;
      if (std::abs(polar.azimuth) > 0.5 * cfg.azimuth_fov) continue;
      if (std::abs(polar.elevation) > 0.5 * cfg.elevation_fov) continue;
      if (p_l.x() <= 0.0) continue;
      const double intensity =
          img.at(cfg.range_bin(polar.range), cfg.beam_bin(polar.azimuth));
      const Vec3 r_hat = (pose.translation - center).normalized();
      const Vec3 gammas = axis_angles(r_hat);
      for (int axis = 0; axis < 3; ++axis) {
        auto& slot = cells[c].bins[{axis, angle_bin(gammas[axis], n)}];
        slot.first += intensity;
        slot.second += 1;
      }
    }
  }
  return cells;
}

}  // namespace

TEST(AngleBin, Boundaries) {
  EXPECT_EQ(angle_bin(0.0, 100), 0);
  EXPECT_EQ(angle_bin(M_PI_2, 100), 99);
  EXPECT_EQ(angle_bin(M_PI_4, 100), 50);
  EXPECT_THROW(angle_bin(-0.1, 100), std::domain_error);
  EXPECT_THROW(angle_bin(2.0, 100), std::domain_error);
}

TEST(FeatureGrid, SingleObservationMean) {
  const GridSpec spec = small_grid();
  FeatureGrid grid(spec, 10);
  const SonarConfig cfg = small_sonar();
  Pose pose;
  pose.translation = Vec3(-3.0, 0.125, 0.125);  // looking +x at the grid

  grid.integrate_frame(constant_image(cfg, 0.8f), pose);
  // Every observed bin is a one-sample mean: exactly the intensity.
  const double expected = SonarImage::quantize(0.8f);
  size_t observed = 0;
  for (size_t c = 0; c < spec.cell_count(); ++c) {
    if (!grid.observed(c)) continue;
    ++observed;
    const FeatureVector fv = grid.feature_vector(c);
    for (size_t i = 0; i < fv.values.size(); ++i) {
      if (fv.mask[i]) EXPECT_EQ(fv.values[i], expected);
    }
  }
  EXPECT_GT(observed, 0u);
}

TEST(FeatureGrid, TwoFrameMean) {
  const GridSpec spec = small_grid();
  FeatureGrid grid(spec, 10);
  const SonarConfig cfg = small_sonar();
  Pose pose;
  pose.translation = Vec3(-3.0, 0.125, 0.125);
  grid.integrate_frame(constant_image(cfg, 0.4f), pose);
  grid.integrate_frame(constant_image(cfg, 0.8f), pose);
  const double expected =
      0.5 * (SonarImage::quantize(0.4f) + SonarImage::quantize(0.8f));
  for (size_t c = 0; c < spec.cell_count(); ++c) {
    if (!grid.observed(c)) continue;
    const FeatureVector fv = grid.feature_vector(c);
    for (size_t i = 0; i < fv.values.size(); ++i)
      if (fv.mask[i]) EXPECT_NEAR(fv.values[i], expected, 1e-12);
  }
}

TEST(FeatureGrid, CellBehindSonarUntouched) {
  const GridSpec spec = small_grid();
  FeatureGrid grid(spec, 10);
  const SonarConfig cfg = small_sonar();
  Pose pose;
  pose.translation = Vec3(3.0, 0.0, 0.0);  // grid is behind (x_l < 0 for all cells
                                           // with x < 3 looking +x)
  grid.integrate_frame(constant_image(cfg, 0.5f), pose);
  for (size_t c = 0; c < spec.cell_count(); ++c) {
    const Vec3 center = spec.cell_center(spec.unlinear(c));
    if (center.x() < pose.translation.x()) EXPECT_FALSE(grid.observed(c));
  }
}

TEST(FeatureGrid, ZeroCellFeatureVector) {
  FeatureGrid grid(small_grid(), 10);
  const FeatureVector fv = grid.feature_vector(0);
  for (size_t i = 0; i < fv.values.size(); ++i) {
    EXPECT_EQ(fv.values[i], 0.0);
    EXPECT_FALSE(fv.mask[i]);
  }
}

TEST(FeatureGrid, MatchesObservationLogOracle) {
  const GridSpec spec = small_grid();
  const int n = 16;
  const SonarConfig cfg = small_sonar();
  Rng rng(31);

  std::vector<std::pair<SonarImage, Pose>> frames;
  for (int f = 0; f < 12; ++f) {
    SonarImage img;
    img.config = cfg;
    img.intensities.resize(static_cast<size_t>(cfg.n_range_bins) * cfg.n_beams);
    for (float& v : img.intensities)
      v = SonarImage::quantize(rng.uniform(0.0, 1.0));
    const double ang = rng.uniform(0.0, 2.0 * M_PI);
    const Pose pose = Pose::yaw_pitch(
        ang + M_PI, rng.uniform(-0.3, 0.3),
        Vec3(4.0 * std::cos(ang), 4.0 * std::sin(ang), rng.uniform(-0.5, 0.5)));
    frames.emplace_back(std::move(img), pose);
  }

  FeatureGrid grid(spec, n);
  for (const auto& [img, pose] : frames) grid.integrate_frame(img, pose);
  const auto oracle = oracle_integrate(spec, n, frames);

  size_t oracle_cells = 0;
  for (size_t c = 0; c < spec.cell_count(); ++c) {
    const auto it = oracle.find(c);
    if (it == oracle.end()) {
      EXPECT_FALSE(grid.observed(c));
      continue;
    }
    ++oracle_cells;
    ASSERT_TRUE(grid.observed(c));
    const double* sums = grid.raw_sums(c);
    const uint32_t* counts = grid.raw_counts(c);
    for (int axis = 0; axis < 3; ++axis)
      for (int k = 0; k < n; ++k) {
        const auto bit = it->second.bins.find({axis, k});
        const double esum = bit == it->second.bins.end() ? 0.0 : bit->second.first;
        const uint32_t ecount = bit == it->second.bins.end() ? 0 : bit->second.second;
        // Exact: quantized intensities sum exactly in double.
        EXPECT_EQ(sums[axis * n + k], esum) << "cell " << c;
        EXPECT_EQ(counts[axis * n + k], ecount) << "cell " << c;
      }
  }
  EXPECT_GT(oracle_cells, 50u);
}

TEST(FeatureGrid, FrameOrderInvariant) {
  const GridSpec spec = small_grid();
  const int n = 12;
  const SonarConfig cfg = small_sonar();
  Rng rng(37);

  std::vector<std::pair<SonarImage, Pose>> frames;
  for (int f = 0; f < 10; ++f) {
    SonarImage img;
    img.config = cfg;
    img.intensities.resize(static_cast<size_t>(cfg.n_range_bins) * cfg.n_beams);
    for (float& v : img.intensities) v = SonarImage::quantize(rng.uniform(0.0, 1.0));
    const double ang = rng.uniform(0.0, 2.0 * M_PI);
    const Pose pose =
        Pose::yaw_pitch(ang + M_PI, 0.0,
                        Vec3(4.0 * std::cos(ang), 4.0 * std::sin(ang), 0.25));
    frames.emplace_back(std::move(img), pose);
  }

  FeatureGrid a(spec, n), b(spec, n);
  for (const auto& [img, pose] : frames) a.integrate_frame(img, pose);
  std::vector<size_t> order(frames.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = order.size() - 1 - i;
  for (size_t i : order) b.integrate_frame(frames[i].first, frames[i].second);

  for (size_t c = 0; c < spec.cell_count(); ++c) {
    ASSERT_EQ(a.observed(c), b.observed(c));
    if (!a.observed(c)) continue;
    const double* sa = a.raw_sums(c);
    const double* sb = b.raw_sums(c);
    const uint32_t* ca = a.raw_counts(c);
    const uint32_t* cb = b.raw_counts(c);
    for (size_t k = 0; k < static_cast<size_t>(3) * n; ++k) {
      EXPECT_EQ(sa[k], sb[k]);  // bitwise
      EXPECT_EQ(ca[k], cb[k]);
    }
  }
}

TEST(FeatureGrid, MeanWithinObservedBounds) {
  // Mean of each bin lies within [min, max] of what was integrated; with two
  // distinct constant frames the means lie in [0.3, 0.9].
  const GridSpec spec = small_grid();
  FeatureGrid grid(spec, 10);
  const SonarConfig cfg = small_sonar();
  Pose pose;
  pose.translation = Vec3(-3.0, 0.125, 0.125);
  grid.integrate_frame(constant_image(cfg, 0.3f), pose);
  grid.integrate_frame(constant_image(cfg, 0.9f), pose);
  for (size_t c = 0; c < spec.cell_count(); ++c) {
    if (!grid.observed(c)) continue;
    const FeatureVector fv = grid.feature_vector(c);
    for (size_t i = 0; i < fv.values.size(); ++i)
      if (fv.mask[i]) {
        EXPECT_GE(fv.values[i], 0.3 - 1e-12);
        EXPECT_LE(fv.values[i], 0.9 + 1e-12);
      }
  }
}
