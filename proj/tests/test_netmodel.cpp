#include "rsnn/errors.hpp"
#include "rsnn/netmodel.hpp"
#include "rsnn/oracle.hpp"

#include "test_support.hpp"

#include <doctest.h>

using namespace rsnn;

TEST_CASE("parse LeNet-5 compact notation") {
  const auto spec = parse_network(testing::kLeNet5);
  CHECK(spec.input == Shape{1, 32, 32});
  CHECK(spec.conv_layers() == 3);
  CHECK(spec.linear_layers() == 3);
  REQUIRE(spec.layers.size() == 9);
  CHECK(spec.flatten_index() == 5);

  const auto& c1 = std::get<ConvLayerSpec>(spec.layers[0]);
  CHECK(c1.out == Shape{6, 28, 28});
  CHECK(std::get<PoolLayerSpec>(spec.layers[1]).out == Shape{6, 14, 14});
  CHECK(std::get<ConvLayerSpec>(spec.layers[2]).out == Shape{16, 10, 10});
  CHECK(std::get<PoolLayerSpec>(spec.layers[3]).out == Shape{16, 5, 5});
  CHECK(std::get<ConvLayerSpec>(spec.layers[4]).out == Shape{120, 1, 1});
  CHECK(std::get<LinearLayerSpec>(spec.layers[6]).in_features == 120);
  CHECK(spec.output_shape() == Shape{10, 1, 1});
  const auto& last = std::get<LinearLayerSpec>(spec.layers.back());
  CHECK_FALSE(last.apply_relu);
  CHECK(std::get<PoolLayerSpec>(spec.layers[1]).divisor_shift == 2);
}

TEST_CASE("parse degenerate and footnote-style networks") {
  const auto single = parse_network("28x28x1 - L10");
  REQUIRE(single.layers.size() == 2);
  CHECK(std::holds_alternative<FlattenSpec>(single.layers[0]));
  CHECK(std::get<LinearLayerSpec>(single.layers[1]).in_features == 784);

  const auto fang = parse_network("28x28x1 - 32C3 - P2 - 32C3 - P2 - L256 - L10");
  CHECK(fang.conv_layers() == 2);
  CHECK(fang.linear_layers() == 2);

  // Table-footnote spelling: "2P", bare linear widths, unicode times sign.
  const auto alt = parse_network("28\xC3\x97" "28 -- 32C3 -- 2P -- 32C3 -- 2P -- 256 -- 10");
  CHECK(alt == fang);
}

TEST_CASE("compact suffixes set stride, padding, shift and ReLU") {
  const auto spec = parse_network("9x9x2 - 4C3x5s2p1q3n - P2s1 - L6q2 - L3");
  const auto& c = std::get<ConvLayerSpec>(spec.layers[0]);
  CHECK(c.kernel_rows == 3);
  CHECK(c.kernel_cols == 5);
  CHECK(c.stride == 2);
  CHECK(c.pad == 1);
  CHECK(c.requant_shift == 3);
  CHECK_FALSE(c.apply_relu);
  CHECK(c.out == Shape{4, 5, 4});
  const auto& p = std::get<PoolLayerSpec>(spec.layers[1]);
  CHECK(p.stride == 1);
  CHECK(p.out == Shape{4, 4, 3});
  CHECK(std::get<LinearLayerSpec>(spec.layers[3]).requant_shift == 2);
}

TEST_CASE("structured form normalizes to the same spec") {
  const char* text = R"(
# LeNet-5
input = 32x32x1
[conv]
out_channels = 6
kernel = 5
[pool]
window = 2
[conv]
out_channels = 16
kernel = 5
[pool]
window = 2
[conv]
out_channels = 120
kernel = 5
[flatten]
[linear]
out_features = 120
[linear]
out_features = 84
[linear]
out_features = 10
)";
  CHECK(parse_network(text) == parse_network(testing::kLeNet5));
}

TEST_CASE("network errors name the offending token or line") {
  auto message = [](const char* text) {
    try {
      parse_network(text);
    } catch (const ConfigError& e) {
      return std::string(e.what());
    }
    return std::string();
  };
  CHECK(message("32x32x1 - 6Q5 - L10").find("token 1") != std::string::npos);
  CHECK(message("32x32 - 6C40 - L10").find("layer 0") != std::string::npos);
  CHECK(message("input = 8x8\n[conv]\nbogus = 1\n").find("line 3") != std::string::npos);
  CHECK(message("input = 8x8\n[linear]\nout_features = 2\nbias = true\n").find("bias") !=
        std::string::npos);
  CHECK_FALSE(message("8x8 - P3 - L2").empty());             // 9 is not a power of two
  CHECK_FALSE(message("8x8 - L4 - 2C3 - L2").empty());      // conv after flatten
  CHECK_FALSE(message("8x8 - F - F - L2").empty());         // two flattens
  CHECK_FALSE(message("8x8 - 2C3").empty());                // no linear layer
  CHECK_FALSE(message("").empty());
  CHECK_FALSE(message("input = 8x8\n[linear]\nin_features = 10\nout_features = 2\n").empty());
}

TEST_CASE("to_compact round trips random networks") {
  std::mt19937_64 rng(17);
  for (int i = 0; i < 300; ++i) {
    const auto spec = testing::random_network(rng);
    const auto text = to_compact(spec);
    REQUIRE_MESSAGE(parse_network(text) == spec, text);
  }
}

TEST_CASE("shape inference agrees with the closed form and with the oracle") {
  std::mt19937_64 rng(23);
  for (int n = 0; n < 1000; ++n) {
    const auto spec = testing::random_network(rng);
    Shape cur = spec.input;
    for (const auto& layer : spec.layers) {
      Shape expected = cur;
      if (const auto* c = std::get_if<ConvLayerSpec>(&layer)) {
        expected = {c->out_channels, (cur.height + 2 * c->pad - c->kernel_rows) / c->stride + 1,
                    (cur.width + 2 * c->pad - c->kernel_cols) / c->stride + 1};
      } else if (const auto* p = std::get_if<PoolLayerSpec>(&layer)) {
        expected = {cur.channels, (cur.height - p->window) / p->stride + 1,
                    (cur.width - p->window) / p->stride + 1};
      } else if (const auto* l = std::get_if<LinearLayerSpec>(&layer)) {
        expected = {l->out_features, 1, 1};
      } else {
        expected = {static_cast<int>(cur.size()), 1, 1};
      }
      REQUIRE(layer_output(layer) == expected);
      cur = expected;
    }
    if (n % 10 == 0) {
      auto params = random_params(spec, 3, rng);
      const auto fwd = oracle::ref_forward(spec, params,
                                           testing::random_levels(spec.input, 3, rng),
                                           EncodingConfig{3});
      for (std::size_t i = 0; i < spec.layers.size(); ++i) {
        REQUIRE(fwd.per_layer[i].shape() == layer_output(spec.layers[i]));
      }
    }
  }
}

TEST_CASE("with_requant_shifts leaves the final layer raw") {
  const auto spec = parse_network("8x8 - 2C3 - L4 - L2");
  const auto shifted = with_requant_shifts(spec, {3, 0, 2, 5});
  CHECK(std::get<ConvLayerSpec>(shifted.layers[0]).requant_shift == 3);
  CHECK(std::get<LinearLayerSpec>(shifted.layers[2]).requant_shift == 2);
  CHECK(std::get<LinearLayerSpec>(shifted.layers[3]).requant_shift == 0);
  CHECK_THROWS_AS(with_requant_shifts(spec, {-1}), ConfigError);
}
