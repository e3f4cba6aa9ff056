// tests/unit/autodiff_test.cc

// Copyright 2026 The mtlaug Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

#include "mtlaug/ad/adam.h"
#include "mtlaug/ad/checkpoint.h"
#include "mtlaug/ad/layers.h"
#include "mtlaug/ad/ops.h"
#include "mtlaug/error.h"
#include "test_support.h"

namespace mtlaug::ad {
namespace {

using testing::GradCheck;
using testing::RandomVector;
using T64 = Tensor<double>;

std::size_t Count(const Shape &s) {
  return std::accumulate(s.begin(), s.end(), std::size_t{1}, std::multiplies<>());
}

T64 RandomParam(const Shape &s, Rng &rng, double scale = 1.0) {
  return T64::Parameter(s, RandomVector(Count(s), rng, scale));
}

// sum(y * r) with a fixed random r, so every output cell matters.
T64 Project(const T64 &y, std::uint64_t seed = 99) {
  Rng rng(seed);
  return Sum(Mul(y, T64::Constant(y.shape(), RandomVector(y.numel(), rng))));
}

TEST(TensorTest, BackwardIdentityAndSquare) {
  auto x = T64::Parameter({1}, {3.0});
  Sum(x).Backward();
  EXPECT_EQ(x.grad()[0], 1.0);
  x.ZeroGrad();
  Sum(Mul(x, x)).Backward();
  EXPECT_EQ(x.grad()[0], 6.0);
}

TEST(TensorTest, SecondBackwardDoublesGradient) {
  auto x = T64::Parameter({1}, {3.0});
  auto y = Sum(Mul(x, x));
  y.Backward();
  y.Backward();
  EXPECT_EQ(x.grad()[0], 12.0);
}

TEST(TensorTest, NonScalarRootThrows) {
  auto x = T64::Parameter({2}, {1.0, 2.0});
  EXPECT_THROW(Relu(x).Backward(), UsageError);
}

TEST(TensorTest, DiamondAccumulates) {
  Rng rng(1);
  auto x = RandomParam({3}, rng);
  auto loss = [&] { return Add(Sum(Tanh(x)), Sum(Mul(x, Sigmoid(x)))); };
  EXPECT_LT(GradCheck({x}, loss), 1e-6);
}

TEST(OpsTest, ReluValuesAndMask) {
  auto x = T64::Parameter({3}, {-1.0, 0.0, 2.0});
  auto y = Relu(x);
  EXPECT_EQ(std::vector<double>(y.data().begin(), y.data().end()), (std::vector<double>{0, 0, 2}));
  Sum(y).Backward();
  EXPECT_EQ(std::vector<double>(x.grad().begin(), x.grad().end()), (std::vector<double>{0, 0, 1}));
}

TEST(OpsTest, UnitKernelConvIsScaledIdentity) {
  Rng rng(2);
  auto x = RandomParam({1, 1, 4, 5}, rng);
  auto y = Conv2d(x, T64::Constant({1, 1, 1, 1}, {2.5}), 1, 0);
  for (std::size_t i = 0; i < x.numel(); ++i) EXPECT_DOUBLE_EQ(y.data()[i], 2.5 * x.data()[i]);
}

TEST(OpsTest, ShapeMismatchNamesOp) {
  auto a = T64::Zeros({2, 3}), b = T64::Zeros({2, 3});
  try {
    MatMul(a, b);
    FAIL();
  } catch (const ShapeError &e) {
    EXPECT_NE(std::string(e.what()).find("matmul"), std::string::npos);
  }
  EXPECT_THROW(Add(a, T64::Zeros({3, 2})), ShapeError);
}

TEST(OpsTest, SoftmaxRowsSumToOne) {
  Rng rng(3);
  auto s = Softmax(RandomParam({5, 7}, rng, 10.0));
  for (int r = 0; r < 5; ++r) {
    double t = 0;
    for (int c = 0; c < 7; ++c) t += s.data()[r * 7 + c];
    EXPECT_NEAR(t, 1.0, 1e-6);
  }
}

TEST(OpsTest, DropoutIdentityCases) {
  Rng rng(4), drng(5);
  auto x = RandomParam({4, 6}, rng);
  auto a = Dropout(x, 0.3, false, drng);
  auto b = Dropout(x, 0.0, true, drng);
  for (std::size_t i = 0; i < x.numel(); ++i) {
    EXPECT_EQ(a.data()[i], x.data()[i]);
    EXPECT_EQ(b.data()[i], x.data()[i]);
  }
  EXPECT_THROW(Dropout(x, 1.0, true, drng), ValidationError);
  EXPECT_THROW(Dropout(x, -0.1, true, drng), ValidationError);
}

TEST(OpsTest, SoftmaxCrossEntropyCases) {
  auto uniform = T64::Parameter({2, 4}, std::vector<double>(8, 0.3));
  std::vector<double> t{0.1, 0.2, 0.3, 0.4, 0, 0, 1, 0};
  EXPECT_NEAR(SoftmaxCrossEntropy<double>(uniform, t).item(), std::log(4.0), 1e-12);
  auto peaked = T64::Parameter({1, 4}, {5.0, 0.0, 0.0, 0.0});
  std::vector<double> e1{1, 0, 0, 0}, e4{0, 0, 0, 1}, soft{0.5, 0, 0, 0.5};
  EXPECT_LT(SoftmaxCrossEntropy<double>(peaked, e1).item(), std::log(4.0));
  const double mixed = SoftmaxCrossEntropy<double>(peaked, soft).item();
  const double lin = 0.5 * SoftmaxCrossEntropy<double>(peaked, e1).item() +
                     0.5 * SoftmaxCrossEntropy<double>(peaked, e4).item();
  EXPECT_NEAR(mixed, lin, 1e-12);
  std::vector<double> bad{0.5, 0.5, 0.5, 0};
  EXPECT_THROW(SoftmaxCrossEntropy<double>(peaked, bad), ValidationError);
}

TEST(OpsTest, CenterLossCases) {
  std::vector<int> y{0};
  std::vector<double> c{1.0};
  auto f = T64::Parameter({1, 1}, {3.0});
  auto r = CenterLoss<double>(f, y, c, 1, 0.5);
  EXPECT_DOUBLE_EQ(r.loss.item(), 4.0);
  r.loss.Backward();
  EXPECT_DOUBLE_EQ(f.grad()[0], 4.0);

  auto g = T64::Parameter({2, 2}, {1, 2, 3, 4});
  std::vector<int> y2{0, 1};
  std::vector<double> c2{1, 2, 3, 4};
  auto z = CenterLoss<double>(g, y2, c2, 2, 0.5);
  EXPECT_EQ(z.loss.item(), 0.0);
  for (double d : z.center_deltas) EXPECT_EQ(d, 0.0);
  std::vector<int> y3{0, 2};
  EXPECT_THROW(CenterLoss<double>(g, y3, c2, 2, 0.5), ValidationError);
}

TEST(OpsTest, CentersConvergeToClassMeans) {
  // Two classes, frozen features, alpha 1.
  auto f = T64::Constant({4, 1}, {1.0, 3.0, 10.0, 14.0});
  std::vector<int> y{0, 0, 1, 1};
  std::vector<double> c{0.0, 0.0};
  for (int it = 0; it < 60; ++it) {
    auto r = CenterLoss<double>(f, y, c, 2, 1.0);
    for (int j = 0; j < 2; ++j) c[j] += r.center_deltas[j];
  }
  EXPECT_NEAR(c[0], 2.0, 1e-9);
  EXPECT_NEAR(c[1], 12.0, 1e-9);
}

TEST(OpsTest, SquaredErrorCases) {
  auto x = T64::Parameter({2}, {0.0, 0.0});
  auto y = T64::Constant({2}, {1.0, 1.0});
  EXPECT_DOUBLE_EQ(SquaredError(x, y).item(), 1.0);
  EXPECT_DOUBLE_EQ(SquaredError(x, x).item(), 0.0);
  EXPECT_DOUBLE_EQ(SquaredError(x, y, Reduction::kSum).item(), 2.0);
  Rng rng(6);
  auto a = RandomParam({3, 4}, rng), b = RandomParam({3, 4}, rng);
  EXPECT_LT(GradCheck({a, b}, [&] { return SquaredError(a, b); }), 1e-6);
}

TEST(GradCheckTest, Primitives) {
  Rng rng(7);
  for (int trial = 0; trial < 5; ++trial) {
    const std::size_t m = 1 + trial, k = 2 + trial % 3, n = 3 + trial % 2;
    auto a = RandomParam({m, k}, rng), b = RandomParam({k, n}, rng);
    EXPECT_LT(GradCheck({a, b}, [&] { return Project(MatMul(a, b)); }), 1e-4) << "matmul";
    auto bias = RandomParam({n}, rng);
    auto c = RandomParam({m, n}, rng);
    EXPECT_LT(GradCheck({c, bias}, [&] { return Project(BiasAdd(c, bias, 1)); }), 1e-4) << "bias";
    EXPECT_LT(GradCheck({c}, [&] { return Project(Sigmoid(c)); }), 1e-4) << "sigmoid";
    EXPECT_LT(GradCheck({c}, [&] { return Project(Tanh(c)); }), 1e-4) << "tanh";
    EXPECT_LT(GradCheck({c}, [&] { return Project(Relu(c)); }), 1e-4) << "relu";
    EXPECT_LT(GradCheck({c}, [&] { return Project(Softmax(c)); }), 1e-4) << "softmax";
    auto d = RandomParam({m, n}, rng);
    EXPECT_LT(GradCheck({c, d}, [&] { return Project(Mul(c, d)); }), 1e-4) << "mul";
    EXPECT_LT(GradCheck({c, d}, [&] { return Project(Sub(Scale(c, 1.7), d)); }), 1e-4) << "sub";
    EXPECT_LT(GradCheck({c, d}, [&] { return Project(Concat<double>({c, d}, 1)); }), 1e-4) << "concat";
    EXPECT_LT(GradCheck({c}, [&] { return Project(Slice(c, 1, 1, n - 1)); }), 1e-4) << "slice";
    EXPECT_LT(GradCheck({c}, [&] { return Project(MeanAxis(c, 0)); }), 1e-4) << "mean_axis";
    EXPECT_LT(GradCheck({c}, [&] { return Mean(Mul(c, c)); }), 1e-4) << "mean";
  }
}

TEST(GradCheckTest, Convolutions) {
  Rng rng(8);
  struct Case { std::size_t b, ci, co, h, w, k; int s, p; };
  for (const Case &c : {Case{1, 1, 2, 5, 4, 3, 1, 1}, Case{2, 2, 1, 6, 5, 3, 2, 1},
                        Case{1, 2, 3, 7, 7, 5, 2, 2}, Case{2, 1, 1, 4, 6, 1, 1, 0},
                        Case{1, 3, 2, 5, 5, 3, 1, 0}}) {
    auto x = RandomParam({c.b, c.ci, c.h, c.w}, rng);
    auto w = RandomParam({c.co, c.ci, c.k, c.k}, rng);
    EXPECT_LT(GradCheck({x, w}, [&] { return Project(Conv2d(x, w, c.s, c.p)); }), 1e-4);
    auto wt = RandomParam({c.ci, c.co, c.k, c.k}, rng);
    EXPECT_LT(GradCheck({x, wt}, [&] { return Project(Conv2dTranspose(x, wt, c.s, c.p, c.s - 1, 0)); }), 1e-4);
  }
}

TEST(GradCheckTest, LstmSmall) {
  Rng rng(9);
  auto x = RandomParam({1, 3, 2}, rng);
  ParameterStore<double> store;
  BiLstm<double> lstm(store, "l", "g", 2, 2, rng);
  std::vector<T64> inputs{x};
  for (auto &e : store.entries()) inputs.push_back(e.tensor);
  EXPECT_LT(GradCheck(inputs, [&] { return Project(lstm(x).concat); }), 1e-4);
}

TEST(LstmTest, ZeroWeightsGiveZeroOutput) {
  auto x = T64::Constant({2, 3, 4}, std::vector<double>(24, 0.7));
  auto wx = T64::Zeros({4, 8}), wh = T64::Zeros({2, 8}), b = T64::Zeros({8});
  for (bool rev : {false, true}) {
    auto h = Lstm(x, wx, wh, b, rev);
    for (double v : h.data()) EXPECT_EQ(v, 0.0);
  }
}

TEST(LstmTest, SingleStepSameInBothDirections) {
  Rng rng(10);
  ParameterStore<double> store;
  BiLstm<double> lstm(store, "l", "g", 3, 5, rng);
  auto out = lstm(RandomParam({2, 1, 3}, rng));
  EXPECT_EQ(out.concat.dim(2), 10u);
  auto fin = BiLstm<double>::FinalStates(out);
  for (std::size_t i = 0; i < fin.numel(); ++i) EXPECT_EQ(fin.data()[i], out.concat.data()[i]);
}

TEST(AdamTest, ZeroGradsKeepParams) {
  ParameterStore<float> store;
  auto p = store.Create("p", "g", {3}, {1.0f, -2.0f, 0.5f});
  p.mutable_grad();
  Adam adam(1e-3);
  adam.Step(store);
  EXPECT_EQ(std::vector<float>(p.data().begin(), p.data().end()), (std::vector<float>{1.0f, -2.0f, 0.5f}));
  EXPECT_EQ(adam.state().step, 1);
}

TEST(AdamTest, FirstStepIsMinusLr) {
  for (float g : {1.0f, 1000.0f, 0.001f}) {
    ParameterStore<float> store;
    auto p = store.Create("p", "g", {1}, {0.0f});
    p.mutable_grad()[0] = g;
    Adam adam(1e-3);
    adam.Step(store);
    EXPECT_NEAR(p.data()[0], -1e-3, 1e-6) << g;
  }
}

TEST(AdamTest, MissingGradThrowsAndDeterministic) {
  ParameterStore<float> store;
  store.Create("p", "g", {1}, {0.0f});
  Adam adam;
  EXPECT_THROW(adam.Step(store), UsageError);
  auto run = [] {
    ParameterStore<float> s;
    auto p = s.Create("p", "g", {2}, {0.3f, -0.2f});
    Adam a(1e-2);
    for (int i = 0; i < 20; ++i) {
      auto loss = Sum(Mul(p, p));
      loss.Backward();
      a.Step(s);
      s.ZeroGrad();
    }
    return std::vector<float>(p.data().begin(), p.data().end());
  };
  EXPECT_EQ(run(), run());
}

TEST(AdamTest, GroupFilter) {
  ParameterStore<float> store;
  auto a = store.Create("a", "enc", {1}, {1.0f});
  auto b = store.Create("b", "emo", {1}, {1.0f});
  a.mutable_grad()[0] = 1.0f;
  Adam adam(0.1);
  adam.Step(store, {"enc"});
  EXPECT_NE(a.data()[0], 1.0f);
  EXPECT_EQ(b.data()[0], 1.0f);
}

TEST(ArchiveTest, RoundTripAndCorruption) {
  Archive a;
  a.meta()["k"] = 3;
  a.Put("w", {2, 2}, {1.0f, 2.0f, 3.0f, 4.5f});
  auto bytes = a.Serialize();
  auto b = Archive::Deserialize(bytes);
  EXPECT_EQ(b.meta()["k"], 3);
  EXPECT_EQ(b.Get("w").data, a.Get("w").data);
  EXPECT_THROW(b.Get("missing"), IntegrityError);
  bytes[bytes.size() / 2] ^= 0x5a;
  EXPECT_THROW(Archive::Deserialize(bytes), IntegrityError);
  EXPECT_THROW(Archive::Deserialize(bytes.substr(0, 10)), IntegrityError);
}

TEST(PurityTest, ForwardTwiceBitIdentical) {
  Rng rng(11);
  ParameterStore<double> store;
  Dense<double> d(store, "d", "g", 4, 3, rng);
  auto x = RandomParam({2, 4}, rng);
  auto a = Softmax(d(x)), b = Softmax(d(x));
  for (std::size_t i = 0; i < a.numel(); ++i) EXPECT_EQ(a.data()[i], b.data()[i]);
}

}  // namespace
}  // namespace mtlaug::ad
