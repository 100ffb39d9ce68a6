#include "rsnn/encoding.hpp"
#include "rsnn/errors.hpp"

#include "test_support.hpp"

#include <doctest.h>

#include <array>
#include <random>

using namespace rsnn;

TEST_CASE("quantize_activation rounds half away from zero on the 2^T-1 grid") {
  const EncodingConfig t3{3};
  CHECK(quantize_activation(1.0, t3) == 7);
  CHECK(quantize_activation(0.0, t3) == 0);
  CHECK(quantize_activation(0.34, t3) == 2);
  CHECK(quantize_activation(0.5, t3) == 4);  // 3.5 rounds up
  CHECK_THROWS_AS(quantize_activation(-0.01, t3), std::domain_error);
  CHECK_THROWS_AS(quantize_activation(1.5, t3), std::domain_error);
  CHECK_THROWS_AS(quantize_activation(std::nan(""), t3), std::domain_error);
}

TEST_CASE("quantize_activation is monotone") {
  for (int t = 1; t <= kMaxTimeSteps; ++t) {
    const EncodingConfig cfg{t};
    std::int64_t prev = 0;
    for (int i = 0; i <= 1000; ++i) {
      const auto q = quantize_activation(i / 1000.0, cfg);
      CHECK(q >= prev);
      CHECK(q <= cfg.max_level());
      prev = q;
    }
  }
}

TEST_CASE("encode_radix is the MSB-first binary expansion") {
  const EncodingConfig t3{3};
  CHECK(encode_radix(5, t3) == SpikeTrain{1, 0, 1});
  CHECK(encode_radix(0, t3) == SpikeTrain{0, 0, 0});
  CHECK(encode_radix(7, t3) == SpikeTrain{1, 1, 1});
  CHECK_THROWS_AS(encode_radix(8, t3), std::out_of_range);
  CHECK_THROWS_AS(encode_radix(-1, t3), std::out_of_range);
}

TEST_CASE("decode_radix weights spike t by 2^(T-1-t)") {
  CHECK(decode_radix(SpikeTrain{1, 0, 1}) == 5);
  CHECK(decode_radix(SpikeTrain{0, 0, 0}) == 0);
  CHECK(decode_radix(SpikeTrain{1, 1, 1, 1}) == 15);
}

TEST_CASE("encoding config bounds") {
  CHECK_THROWS_AS(EncodingConfig{0}.validate(), ConfigError);
  CHECK_THROWS_AS(EncodingConfig{17}.validate(), ConfigError);
  CHECK_NOTHROW(EncodingConfig{16}.validate());
}

TEST_CASE("round trip for every level up to T = 16") {
  for (int t = 1; t <= kMaxTimeSteps; ++t) {
    const EncodingConfig cfg{t};
    bool ok = true;
    for (std::int64_t q = 0; q <= cfg.max_level(); ++q) {
      ok = ok && decode_radix(encode_radix(q, cfg)) == q;
    }
    CHECK_MESSAGE(ok, "T = " << t);
  }
}

TEST_CASE("horner_accumulate") {
  CHECK(horner_accumulate<std::int64_t>(std::array<std::int64_t, 3>{3, 1, 2}) == 16);
  CHECK(horner_accumulate<std::int64_t>(std::array<std::int64_t, 3>{0, 0, 0}) == 0);
  CHECK(horner_accumulate<std::int64_t>(std::array<std::int64_t, 2>{-2, 4}) == 0);
  CHECK_THROWS_AS(horner_accumulate<std::int64_t>(std::span<const std::int64_t>{}),
                  std::invalid_argument);

  SUBCASE("equals the weighted sum, exhaustively for small sequences") {
    for (int len = 1; len <= 4; ++len) {
      std::vector<std::int64_t> p(len, -3);
      for (;;) {
        std::int64_t expected = 0;
        for (int t = 0; t < len; ++t) expected += p[t] * (std::int64_t{1} << (len - 1 - t));
        REQUIRE(horner_accumulate<std::int64_t>(p) == expected);
        int i = 0;
        while (i < len && ++p[i] > 3) p[i++] = -3;
        if (i == len) break;
      }
    }
  }
}

TEST_CASE("bit planes are linear under a kernel dot product") {
  // sum_t 2^(T-1-t) D(plane_t) == D(decode(planes)) for D a fixed dot product.
  std::mt19937_64 rng(5);
  std::uniform_int_distribution<int> wdist(-4, 3);
  for (int trial = 0; trial < 200; ++trial) {
    const int t = 1 + trial % 8;
    const Shape shape{2, 3, 4};
    const auto levels = testing::random_levels(shape, t, rng);
    Vector<std::int64_t> w(shape.size());
    for (auto& v : w) v = wdist(rng);

    const auto planes = encode_planes(levels, EncodingConfig{t});
    std::vector<std::int64_t> per_plane;
    for (const auto& p : planes.planes) per_plane.push_back(w.dot(p.data().cast<std::int64_t>()));
    REQUIRE(horner_accumulate<std::int64_t>(per_plane) == w.dot(levels.data()));
    REQUIRE(decode_planes(planes) == levels);
  }
}

TEST_CASE("encode_planes rejects out-of-range levels") {
  IntTensor t(Shape{1, 1, 2});
  t(0, 0, 1) = 8;
  CHECK_THROWS_AS(encode_planes(t, EncodingConfig{3}), std::out_of_range);
}
