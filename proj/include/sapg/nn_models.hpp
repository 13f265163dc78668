#pragma once

#include "sapg/nn.hpp"

namespace sapg::nn {

// Outlier rejection network: five 1D convolutions (stride 2 on the second
// and fourth), global average pooling, two dense layers with a sigmoid
// head. Input is the 3n feature vector as a 1-channel sequence.
inline Model build_classifier(int n) {
  if (n < 8) throw std::invalid_argument("build_classifier: n must be >= 8");
  Model m(3 * n, 1);
  m.conv1d(16, 5, 1).relu();
  m.conv1d(32, 5, 2).relu();
  m.conv1d(32, 5, 1).relu();
  m.conv1d(64, 5, 2).relu();
  m.conv1d(64, 5, 1).relu();
  m.global_average_pool();
  m.dense(32).relu();
  m.dense(1).sigmoid();
  return m;
}

// Signed distance prediction network: four stride-2 convolutions, flatten,
// three dense layers with a linear 3-unit head (d_c, delta_u, delta_v).
inline Model build_regressor(int n) {
  if (n < 8) throw std::invalid_argument("build_regressor: n must be >= 8");
  Model m(3 * n, 1);
  m.conv1d(16, 5, 2).relu();
  m.conv1d(32, 5, 2).relu();
  m.conv1d(32, 5, 2).relu();
  m.conv1d(64, 5, 2).relu();
  m.flatten();
  m.dense(128).relu();
  m.dense(64).relu();
  m.dense(3);
  return m;
}

}  // namespace sapg::nn
