// Copyright 2026 The FairMTL Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "fairmtl/nn.h"

#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "test_util.h"

namespace fairmtl {
namespace {

TEST(NnTest, DenseForwardIsAffine) {
  Dense d = ZeroDense(3, 2);
  d.weight << 1, 2, 3, -1, 0, 1;
  d.bias << 0.5, -0.5;
  Matrix x(2, 3);
  x << 1, 1, 1, 2, 0, -1;
  const Matrix y = DenseForward(d, x);
  EXPECT_DOUBLE_EQ(y(0, 0), 6.5);
  EXPECT_DOUBLE_EQ(y(0, 1), -0.5);
  EXPECT_DOUBLE_EQ(y(1, 0), -0.5);
  EXPECT_DOUBLE_EQ(y(1, 1), -3.5);
}

TEST(NnTest, HeUniformBounds) {
  std::mt19937_64 rng(1);
  const Dense d = InitDense(24, 100, rng);
  const double bound = std::sqrt(6.0 / 24.0);
  EXPECT_LE(d.weight.cwiseAbs().maxCoeff(), bound);
  EXPECT_GT(d.weight.cwiseAbs().maxCoeff(), 0.9 * bound);
  EXPECT_TRUE(d.bias.isZero());
}

TEST(NnTest, SoftmaxRowsSumToOneAndSurviveLargeLogits) {
  Matrix l(3, 4);
  l << 0, 0, 0, 0, 1000, 999, -1000, 0, -745, -746, -744, -745;
  const Matrix p = SoftmaxRows(l);
  ASSERT_TRUE(p.allFinite());
  for (Eigen::Index i = 0; i < 3; ++i) EXPECT_NEAR(p.row(i).sum(), 1.0, 1e-12);
  EXPECT_DOUBLE_EQ(p(0, 2), 0.25);
  EXPECT_NEAR(p(1, 0), 1.0 / (1.0 + std::exp(-1.0)), 1e-12);
}

TEST(NnTest, ActivationBackwardMatchesDerivatives) {
  Matrix pre(1, 4);
  pre << -1.0, -0.0, 0.5, 2.0;
  const Matrix ones = Matrix::Ones(1, 4);
  const Matrix relu = ActivationBackward(Activation::kRelu, pre, Activate(Activation::kRelu, pre), ones);
  EXPECT_EQ(relu(0, 0), 0.0);
  EXPECT_EQ(relu(0, 2), 1.0);
  const Matrix post = Activate(Activation::kTanh, pre);
  const Matrix tanh = ActivationBackward(Activation::kTanh, pre, post, ones);
  for (int j = 0; j < 4; ++j) {
    EXPECT_NEAR(tanh(0, j), 1.0 - std::pow(std::tanh(pre(0, j)), 2), 1e-15);
  }
}

TEST(NnTest, BatchNormTrainingUsesBatchStatistics) {
  BatchNorm bn = InitBatchNorm(2);
  Matrix x(4, 2);
  x << 1, 10, 2, 20, 3, 30, 4, 40;
  BatchNormCache cache;
  const Matrix y = BatchNormForward(bn, x, true, &cache);
  EXPECT_TRUE(cache.used_batch_stats);
  for (int j = 0; j < 2; ++j) {
    EXPECT_NEAR(y.col(j).mean(), 0.0, 1e-12);
    EXPECT_NEAR(y.col(j).squaredNorm() / 4.0, 1.0, 1e-4);  // eps in the denominator
  }
  // Running stats untouched until folded in explicitly.
  EXPECT_TRUE(bn.running_mean.isZero());
  UpdateRunningStats(&bn, cache, 4);
  EXPECT_NEAR(bn.running_mean(0), 0.1 * 2.5, 1e-12);
  // Unbiased variance of {1,2,3,4} is 5/3.
  EXPECT_NEAR(bn.running_var(0), 0.9 + 0.1 * (5.0 / 3.0), 1e-12);
}

TEST(NnTest, BatchNormSingleRowFallsBackToRunningStats) {
  BatchNorm bn = InitBatchNorm(1);
  bn.running_mean << 2.0;
  bn.running_var << 4.0;
  Matrix x(1, 1);
  x << 6.0;
  BatchNormCache cache;
  const Matrix y = BatchNormForward(bn, x, true, &cache);
  EXPECT_FALSE(cache.used_batch_stats);
  EXPECT_NEAR(y(0, 0), 4.0 / std::sqrt(4.0 + bn.eps), 1e-12);
}

TEST(NnTest, DropoutMaskIsInvertedAndRoughlyAtRate) {
  std::mt19937_64 rng(2);
  const Matrix m = DropoutMask(200, 50, 0.25, rng);
  int zeros = 0;
  for (Eigen::Index i = 0; i < m.size(); ++i) {
    const double v = m.data()[i];
    EXPECT_TRUE(v == 0.0 || std::abs(v - 1.0 / 0.75) < 1e-15);
    zeros += v == 0.0;
  }
  EXPECT_NEAR(zeros / 10000.0, 0.25, 0.02);
  EXPECT_NEAR(m.mean(), 1.0, 0.03);
}

// One AdamW step by hand: with zero moments the bias-corrected update is
// lr * g / (|g| + eps), plus decoupled decay lr * wd * theta.
TEST(NnTest, AdamWFirstStepMatchesHandComputation) {
  std::vector<double> theta = {1.0, -2.0, 0.5};
  std::vector<double> grad = {0.1, -0.3, 0.0};
  AdamW opt({0.9, 0.999, 1e-8, 0.01});
  const double lr = 0.01;
  opt.Step({{"t", theta}}, {{"g", grad}}, lr);
  const double expect[3] = {1.0 - lr * 0.01 * 1.0 - lr * 0.1 / (0.1 + 1e-8),
                            -2.0 - lr * 0.01 * -2.0 + lr * 0.3 / (0.3 + 1e-8),
                            0.5 - lr * 0.01 * 0.5};
  for (int i = 0; i < 3; ++i) EXPECT_NEAR(theta[static_cast<std::size_t>(i)], expect[i], 1e-15);
  EXPECT_EQ(opt.steps(), 1);
}

TEST(NnTest, AdamWSecondStepUsesBiasCorrection) {
  std::vector<double> theta = {0.0};
  std::vector<double> g1 = {1.0};
  AdamW opt({0.9, 0.999, 0.0, 0.0});
  opt.Step({{"t", theta}}, {{"g", g1}}, 1.0);
  std::vector<double> g2 = {-1.0};
  opt.Step({{"t", theta}}, {{"g", g2}}, 1.0);
  const double m = 0.9 * 0.1 + 0.1 * -1.0;
  const double v = 0.999 * 0.001 + 0.001;
  const double m_hat = m / (1 - 0.81);
  const double v_hat = v / (1 - 0.999 * 0.999);
  EXPECT_NEAR(theta[0], -1.0 - m_hat / std::sqrt(v_hat), 1e-12);
}

TEST(NnTest, JsonRoundTripsExactly) {
  std::mt19937_64 rng(3);
  const Dense d = InitDense(5, 3, rng);
  const Dense back = DenseFromJson(ToJson(d));
  EXPECT_EQ(back.weight, d.weight);
  EXPECT_EQ(back.bias, d.bias);
  BatchNorm bn = InitBatchNorm(3);
  bn.running_var << 0.1, 0.2, 1.0 / 3.0;
  EXPECT_EQ(BatchNormFromJson(ToJson(bn)).running_var, bn.running_var);
}

}  // namespace
}  // namespace fairmtl
