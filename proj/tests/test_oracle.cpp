#include "rsnn/errors.hpp"
#include "rsnn/oracle.hpp"

#include "lcg.hpp"
#include "test_support.hpp"

#include <doctest.h>

#include <numeric>

using namespace rsnn;

namespace {

QuantizedTensor tensor(std::vector<int> dims, std::vector<int> values, int bits = 3) {
  QuantizedTensor q;
  q.dims = std::move(dims);
  q.bits = bits;
  q.values.resize(static_cast<Eigen::Index>(values.size()));
  for (std::size_t i = 0; i < values.size(); ++i) q.values[i] = static_cast<std::int8_t>(values[i]);
  return q;
}

IntTensor ints(Shape shape, std::vector<std::int64_t> values) {
  IntTensor t(shape);
  for (std::size_t i = 0; i < values.size(); ++i) t.data()[i] = values[i];
  return t;
}

}  // namespace

TEST_CASE("ref_conv2d") {
  SUBCASE("all-ones input sums the kernel") {
    IntTensor ones(Shape{1, 3, 3});
    ones.data().setOnes();
    const auto out = oracle::ref_conv2d(ones, tensor({1, 1, 2, 2}, {1, 2, 3, 4}, 4), 1, 0);
    CHECK(out.shape() == Shape{1, 2, 2});
    CHECK((out.data().array() == 10).all());
  }
  SUBCASE("zero kernel") {
    std::mt19937_64 rng(1);
    const auto out = oracle::ref_conv2d(testing::random_levels({2, 5, 5}, 3, rng),
                                        tensor({3, 2, 3, 3}, std::vector<int>(54, 0)), 1, 1);
    CHECK(out.shape() == Shape{3, 5, 5});
    CHECK(out.data().isZero());
  }
  SUBCASE("frozen brute-force values") {
    // Values from tests/oracles/derive_expected.py (Lcg seed 7).
    testing::Lcg g(7);
    IntTensor act(Shape{1, 4, 4});
    for (auto& v : act.data()) v = g.next(8);
    std::vector<int> k(4);
    for (auto& v : k) v = g.next(8) - 4;
    CHECK(k == std::vector<int>{-3, 3, 3, 2});
    const auto out = oracle::ref_conv2d(act, tensor({1, 1, 2, 2}, k), 1, 0);
    CHECK(out == ints({1, 3, 3}, {17, 20, 9, 24, 2, 0, 26, 21, 14}));
  }
  SUBCASE("1x1 unit kernel is the identity") {
    std::mt19937_64 rng(2);
    const auto act = testing::random_levels({3, 4, 5}, 4, rng);
    std::vector<int> eye(9, 0);
    for (int c = 0; c < 3; ++c) eye[c * 3 + c] = 1;
    CHECK(oracle::ref_conv2d(act, tensor({3, 3, 1, 1}, eye), 1, 0) == act);
  }
  SUBCASE("shape mismatch") {
    CHECK_THROWS_AS(oracle::ref_conv2d(IntTensor(Shape{2, 4, 4}),
                                       tensor({1, 1, 2, 2}, {1, 1, 1, 1}), 1, 0),
                    ConfigError);
  }
}

TEST_CASE("ref_avgpool") {
  CHECK(oracle::ref_avgpool(ints({1, 2, 2}, {1, 3, 5, 7}), 2, 2, 2) == ints({1, 1, 1}, {4}));
  CHECK(oracle::ref_avgpool(IntTensor(Shape{2, 4, 4}), 2, 2, 2).data().isZero());

  IntTensor ramp(Shape{1, 4, 4});
  for (int i = 0; i < 16; ++i) ramp.data()[i] = i;
  CHECK(oracle::ref_avgpool(ramp, 2, 2, 2) == ints({1, 2, 2}, {2, 4, 10, 12}));

  CHECK_THROWS_AS(oracle::ref_avgpool(ramp, 2, 2, 1), ConfigError);
  CHECK_THROWS_AS(oracle::ref_avgpool(ramp, 3, 1, 3), ConfigError);
}

TEST_CASE("ref_linear") {
  std::mt19937_64 rng(4);
  const auto x = testing::random_levels({5, 1, 1}, 3, rng);
  std::vector<int> eye(25, 0);
  for (int i = 0; i < 5; ++i) eye[i * 5 + i] = 1;
  CHECK(oracle::ref_linear(x, tensor({5, 5}, eye)) == x);
  CHECK(oracle::ref_linear(IntTensor(Shape{5, 1, 1}), tensor({2, 5}, std::vector<int>(10, 3)))
            .data()
            .isZero());

  testing::Lcg g(11);
  IntTensor act(Shape{8, 1, 1});
  for (auto& v : act.data()) v = g.next(8);
  std::vector<int> w(32);
  for (auto& v : w) v = g.next(8) - 4;
  CHECK(oracle::ref_linear(act, tensor({4, 8}, w)) == ints({4, 1, 1}, {-23, 40, -3, -29}));

  CHECK_THROWS_AS(oracle::ref_linear(act, tensor({2, 5}, std::vector<int>(10, 0))), ConfigError);
}

TEST_CASE("ref_forward") {
  SUBCASE("zero weights give zero logits") {
    const auto spec = parse_network("6x6 - L4");
    QuantizedParams params;
    params.layers.emplace(1, tensor({4, 36}, std::vector<int>(144, 0)));
    std::mt19937_64 rng(1);
    const auto fwd = oracle::ref_forward(spec, params, testing::random_levels(spec.input, 3, rng),
                                         EncodingConfig{3});
    CHECK(fwd.logits.data().isZero());
  }

  SUBCASE("LeNet-5 snapshot") {
    // Inputs, weights and expected logits from tests/oracles/derive_expected.py.
    const auto snap = testing::lenet_snapshot();
    const auto spec = with_requant_shifts(snap.spec, testing::kLeNetShifts);
    const auto fwd = oracle::ref_forward(spec, snap.params, snap.input, EncodingConfig{3});
    CHECK(fwd.logits == ints({10, 1, 1}, {9, -2, -16, -18, -6, -11, -6, -27, -8, -7}));
  }

  SUBCASE("huge shift collapses activations") {
    const auto spec = parse_network("8x8 - 4C3q40 - L3");
    std::mt19937_64 rng(6);
    const auto params = random_params(spec, 3, rng);
    const auto fwd = oracle::ref_forward(spec, params, testing::random_levels(spec.input, 3, rng),
                                         EncodingConfig{3});
    CHECK(fwd.per_layer[0].data().isZero());
    CHECK(fwd.logits.data().isZero());
  }

  SUBCASE("requantized activations stay in range and runs are deterministic") {
    std::mt19937_64 rng(8);
    for (int n = 0; n < 100; ++n) {
      const auto spec = testing::random_network(rng);
      const int t = 2 + n % 5;
      const auto params = random_params(spec, 3, rng);
      const auto input = testing::random_levels(spec.input, t, rng);
      const auto a = oracle::ref_forward(spec, params, input, EncodingConfig{t});
      const auto b = oracle::ref_forward(spec, params, input, EncodingConfig{t});
      REQUIRE(a.logits == b.logits);
      for (std::size_t i = 0; i + 1 < a.per_layer.size(); ++i) {
        const auto& d = a.per_layer[i].data();
        REQUIRE(d.minCoeff() >= 0);
        REQUIRE(d.maxCoeff() <= (1 << t) - 1);
      }
    }
  }

  SUBCASE("input validation") {
    const auto spec = parse_network("4x4 - L2");
    std::mt19937_64 rng(1);
    const auto params = random_params(spec, 3, rng);
    IntTensor bad(Shape{1, 4, 4});
    bad(0, 0, 0) = 8;
    CHECK_THROWS_AS(oracle::ref_forward(spec, params, bad, EncodingConfig{3}), ConfigError);
    CHECK_THROWS_AS(oracle::ref_forward(spec, params, IntTensor(Shape{1, 5, 4}), EncodingConfig{3}),
                    ConfigError);
  }
}
