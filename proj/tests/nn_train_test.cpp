#include "sapg/nn_train.hpp"

#include <gtest/gtest.h>

#include "sapg/nn_models.hpp"
#include "sapg/rng.hpp"

using namespace sapg;
using namespace sapg::nn;

namespace {

struct ToySet {
  std::vector<float> x;
  std::vector<double> y;
  std::vector<DataView> views;
  int width = 0;
  int ydim = 0;

  void finalize() {
    const size_t count = y.size() / ydim;
    views.resize(count);
    for (size_t i = 0; i < count; ++i)
      views[i] = DataView{&x[i * width], &y[i * ydim]};
  }
};

// Two separated blobs: class decided by the mean of the first half of the
// input versus the second half.
ToySet separable_set(int width, size_t count, uint64_t seed) {
  ToySet set;
  set.width = width;
  set.ydim = 1;
  Rng rng(seed);
  for (size_t i = 0; i < count; ++i) {
    const bool positive = (i % 2) == 0;
    for (int k = 0; k < width; ++k) {
      const bool first_half = k < width / 2;
      const double base = (positive == first_half) ? 0.8 : 0.1;
      set.x.push_back(static_cast<float>(base + 0.05 * rng.normal()));
    }
    set.y.push_back(positive ? 1.0 : 0.0);
  }
  set.finalize();
  return set;
}

ToySet constant_target_set(int width, size_t count, uint64_t seed) {
  ToySet set;
  set.width = width;
  set.ydim = 3;
  Rng rng(seed);
  for (size_t i = 0; i < count; ++i) {
    for (int k = 0; k < width; ++k)
      set.x.push_back(static_cast<float>(rng.uniform(0.0, 1.0)));
    set.y.insert(set.y.end(), {0.4, -0.2, 0.1});
  }
  set.finalize();
  return set;
}

Model tiny_classifier(int width) {
  Model m(width, 1);
  m.conv1d(4, 5, 2).relu();
  m.global_average_pool();
  m.dense(8).relu();
  m.dense(1).sigmoid();
  return m;
}

Model tiny_regressor(int width) {
  Model m(width, 1);
  m.conv1d(4, 5, 2).relu();
  m.flatten();
  m.dense(16).relu();
  m.dense(3);
  return m;
}

}  // namespace

TEST(Train, LearnsLinearlySeparableToySet) {
  const ToySet set = separable_set(24, 400, 5);
  Model m = tiny_classifier(24);
  m.init_params(17);
  TrainConfig cfg;
  cfg.learning_rate = 3e-3;
  cfg.validation_split = 0.2;
  cfg.batch_size = 32;
  cfg.max_epochs = 60;
  cfg.patience = 10;
  cfg.rng_seed = 99;
  const TrainResult res = train(std::move(m), set.views, cfg,
                                LossKind::BinaryCrossEntropy);
  ASSERT_FALSE(res.history.empty());
  EXPECT_EQ(res.history[res.best_epoch - 1].val_accuracy, 1.0);
}

TEST(Train, ConstantTargetRegressionConverges) {
  const ToySet set = constant_target_set(24, 300, 7);
  Model m = tiny_regressor(24);
  m.init_params(23);
  TrainConfig cfg;
  cfg.learning_rate = 1e-2;
  cfg.validation_split = 0.2;
  cfg.batch_size = 32;
  cfg.max_epochs = 250;
  cfg.patience = 30;
  cfg.rng_seed = 7;
  const TrainResult res = train(std::move(m), set.views, cfg, LossKind::LogCosh);
  EXPECT_LT(res.history[res.best_epoch - 1].val_mse, 1e-4);
}

TEST(Train, DeterministicForFixedSeed) {
  const ToySet set = separable_set(24, 200, 11);
  TrainConfig cfg;
  cfg.learning_rate = 1e-3;
  cfg.batch_size = 16;
  cfg.max_epochs = 8;
  cfg.patience = 5;
  cfg.rng_seed = 1234;

  auto run = [&]() {
    Model m = tiny_classifier(24);
    m.init_params(55);
    return train(std::move(m), set.views, cfg, LossKind::BinaryCrossEntropy);
  };
  const TrainResult a = run();
  const TrainResult b = run();
  ASSERT_EQ(a.history.size(), b.history.size());
  for (size_t i = 0; i < a.history.size(); ++i) {
    EXPECT_EQ(a.history[i].train_loss, b.history[i].train_loss);
    EXPECT_EQ(a.history[i].val_loss, b.history[i].val_loss);
    EXPECT_EQ(a.history[i].val_accuracy, b.history[i].val_accuracy);
  }
  for (size_t li = 0; li < a.model.layers().size(); ++li) {
    const auto& wa = a.model.layers()[li].W;
    const auto& wb = b.model.layers()[li].W;
    for (size_t k = 0; k < wa.size(); ++k) EXPECT_EQ(wa[k], wb[k]);
  }
}

TEST(Train, HistoryRespectsEpochCapAndPatience) {
  const ToySet set = separable_set(24, 120, 13);
  Model m = tiny_classifier(24);
  m.init_params(3);
  TrainConfig cfg;
  cfg.learning_rate = 1e-3;
  cfg.max_epochs = 5;
  cfg.patience = 3;
  cfg.rng_seed = 5;
  const TrainResult res = train(std::move(m), set.views, cfg,
                                LossKind::BinaryCrossEntropy);
  EXPECT_LE(res.history.size(), 5u);
  EXPECT_GE(res.best_epoch, 1);
}

TEST(Train, ThrowsWhenSplitLeavesNoData) {
  const ToySet set = separable_set(24, 2, 17);
  Model m = tiny_classifier(24);
  m.init_params(1);
  TrainConfig cfg;
  cfg.validation_split = 0.9;
  EXPECT_THROW(train(std::move(m), set.views, cfg, LossKind::BinaryCrossEntropy),
               std::invalid_argument);
}

TEST(Train, EpochSampleCapShortensEpochs) {
  const ToySet set = separable_set(24, 400, 19);
  TrainConfig cfg;
  cfg.learning_rate = 1e-3;
  cfg.batch_size = 16;
  cfg.max_epochs = 3;
  cfg.patience = 3;
  cfg.rng_seed = 2;
  cfg.max_epoch_samples = 32;
  cfg.max_val_samples = 20;
  Model m = tiny_classifier(24);
  m.init_params(9);
  const TrainResult res = train(std::move(m), set.views, cfg,
                                LossKind::BinaryCrossEntropy);
  EXPECT_EQ(res.history.size(), 3u);  // runs, just on fewer samples
}
