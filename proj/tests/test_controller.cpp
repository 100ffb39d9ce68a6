#include "rsnn/controller.hpp"
#include "rsnn/errors.hpp"
#include "rsnn/oracle.hpp"

#include "test_support.hpp"

#include <doctest.h>

using namespace rsnn;

TEST_CASE("accelerator config text") {
  const auto accel = parse_accelerator_config(R"(
    # comment
    T = 5
    U = 3
    conv_xy = 40, 7
    pool_xy = 20,4
    memory_mode = off_chip
    dram_latency_cycles = 50
    dram_bytes_per_cycle = 2
    row_fetch_cycles = 0
    output_write_cycles = 2
    linear_parallel_outputs = 32
    clock_mhz = 250
  )");
  CHECK(accel.time_steps == 5);
  CHECK(accel.conv_units == 3);
  CHECK(accel.conv == UnitGeometry{40, 7});
  CHECK(accel.pool == UnitGeometry{20, 4});
  CHECK(accel.memory.kind == MemoryMode::Kind::off_chip);
  CHECK(accel.memory.dram_latency_cycles == 50);
  CHECK(accel.cost == CostModel{0, 2, 32});
  CHECK(accel.clock_mhz == 250.0);
  CHECK(parse_accelerator_config(to_text(accel)) == accel);
  CHECK(parse_accelerator_config("") == AcceleratorConfig{});

  CHECK_THROWS_AS(parse_accelerator_config("speed = 3"), ConfigError);
  CHECK_THROWS_AS(parse_accelerator_config("T = 17"), ConfigError);
  CHECK_THROWS_AS(parse_accelerator_config("U = 0"), ConfigError);
  CHECK_THROWS_AS(parse_accelerator_config("conv_xy = 30"), ConfigError);
  CHECK_THROWS_AS(parse_accelerator_config("T = three"), ConfigError);
  CHECK_THROWS_AS(parse_accelerator_config("memory_mode = cloud"), ConfigError);
  CHECK_THROWS_WITH_AS(parse_accelerator_config("\nT 3"), "config line 2: expected key = value",
                       ConfigError);
}

TEST_CASE("LeNet-5 inference matches the oracle snapshot") {
  const auto snap = testing::lenet_snapshot();
  const auto spec = with_requant_shifts(snap.spec, testing::kLeNetShifts);
  AcceleratorConfig accel;
  const auto run = run_inference(spec, snap.params, snap.input, accel);
  CHECK(std::vector<std::int64_t>(run.logits.data().begin(), run.logits.data().end()) ==
        testing::kLeNetLogits);
  CHECK(run.predicted == 0);
  CHECK(run.cycles.total_cycles == 23864);
  CHECK(run.cycles == estimate_cycles(spec, snap.params, accel));

  // Per-layer closed form, worked by hand for T = 3, P = 16.
  const std::vector<std::int64_t> per_layer{3552, 876, 8700, 448, 4996, 0, 2880, 2160, 252};
  REQUIRE(run.cycles.layers.size() == per_layer.size());
  for (std::size_t i = 0; i < per_layer.size(); ++i) {
    CHECK(run.cycles.layers[i].compute_cycles == per_layer[i]);
  }

  accel.conv_units = 2;
  CHECK(estimate_cycles(spec, snap.params, accel).total_cycles == 15240);
}

TEST_CASE("calibration") {
  SUBCASE("LeNet snapshot") {
    const auto snap = testing::lenet_snapshot();
    const std::vector<IntTensor> samples{snap.input};
    CHECK(calibrate_requant(snap.spec, snap.params, samples, {3}) == testing::kLeNetShifts);
  }
  SUBCASE("single peak") {
    const auto spec = parse_network("1x1x1 - L1 - L1");
    QuantizedParams params;
    QuantizedTensor w{{1, 1}, 8, Vector<std::int8_t>::Constant(1, 100)};
    params.layers.emplace(1, w);
    params.layers.emplace(2, w);
    const std::vector<IntTensor> samples{IntTensor(Shape{1, 1, 1}, Vector<std::int64_t>::Constant(1, 1))};
    // 100 >> 4 = 6 fits in 3 bits, 100 >> 3 = 12 does not.
    CHECK(calibrate_requant(spec, params, samples, {3}) == std::vector<int>{0, 4, 0});
  }
  SUBCASE("zero weights need no shift") {
    const auto spec = parse_network("6x6 - 2C3 - L2");
    std::mt19937_64 rng(1);
    auto params = random_params(spec, 3, rng);
    for (auto& [i, q] : params.layers) q.values.setZero();
    const std::vector<IntTensor> samples{testing::random_levels(spec.input, 3, rng)};
    CHECK(calibrate_requant(spec, params, samples, {3}) == std::vector<int>{0, 0, 0});
    CHECK_THROWS_AS(calibrate_requant(spec, params, {}, {3}), ConfigError);
  }
}

TEST_CASE("inference on random networks") {
  std::mt19937_64 rng(21);
  for (int n = 0; n < 60; ++n) {
    const auto spec = testing::random_network(rng);
    const int t = 1 + n % 6;
    const auto params = random_params(spec, 2 + n % 7, rng);
    const auto input = testing::random_levels(spec.input, t, rng);
    const auto expected = oracle::ref_forward(spec, params, input, {t}).logits;

    auto accel = testing::fitting_config(spec, t);
    const auto base = run_inference(spec, params, input, accel);
    REQUIRE(base.logits == expected);
    REQUIRE(base.predicted == argmax(expected));
    REQUIRE(base.cycles == estimate_cycles(spec, params, accel));

    accel.conv_units = 1 + n % 4;
    accel.conv.columns *= 2;
    accel.memory.kind = MemoryMode::Kind::off_chip;
    const auto varied = run_inference(spec, params, input, accel);
    REQUIRE(varied.logits == expected);
    REQUIRE(varied.cycles == estimate_cycles(spec, params, accel));
    REQUIRE(varied.cycles.weight_fetch_cycles > 0);
  }
}

TEST_CASE("timing does not depend on activations or weight values") {
  std::mt19937_64 rng(22);
  const auto spec = parse_network("12x12x2 - 4C3 - P2 - 3C3 - L6 - L3");
  const auto accel = testing::fitting_config(spec, 4);
  const auto a = run_inference(spec, random_params(spec, 3, rng),
                               testing::random_levels(spec.input, 4, rng), accel);
  auto zeros = random_params(spec, 3, rng);
  for (auto& [i, q] : zeros.layers) q.values.setZero();
  const auto b = run_inference(spec, zeros, IntTensor(spec.input), accel);
  CHECK(a.cycles == b.cycles);
}

TEST_CASE("off-chip weight fetch per layer") {
  const auto spec = parse_network("8x8 - 4C3 - L10");
  std::mt19937_64 rng(23);
  const auto params = random_params(spec, 3, rng);
  AcceleratorConfig accel;
  accel.memory = {MemoryMode::Kind::off_chip, 100, 4};
  const auto report = estimate_cycles(spec, params, accel);
  // 36 and 1440 three-bit weights: 14 and 540 bytes.
  CHECK(report.layers[0].weight_fetch_cycles == 104);
  CHECK(report.layers[1].weight_fetch_cycles == 0);
  CHECK(report.layers[2].weight_fetch_cycles == 235);
  CHECK(report.weight_fetch_cycles == 339);
  CHECK(report.total_cycles == report.compute_cycles + 339);
}

TEST_CASE("capacity checks before running") {
  const auto spec = parse_network(testing::kLeNet5);
  AcceleratorConfig accel;
  accel.conv = {27, 5};
  CHECK_THROWS_AS(check_capacity(spec, accel), CapacityError);
  accel.conv = {28, 5};
  accel.pool = {13, 2};
  CHECK_THROWS_AS(check_capacity(spec, accel), CapacityError);
  accel.pool = {14, 2};
  CHECK_NOTHROW(check_capacity(spec, accel));
}

TEST_CASE("input validation") {
  const auto spec = parse_network("6x6 - 2C3 - L2");
  std::mt19937_64 rng(24);
  const auto params = random_params(spec, 3, rng);
  AcceleratorConfig accel;
  CHECK_THROWS_AS(run_inference(spec, params, IntTensor(Shape{1, 5, 5}), accel), ConfigError);
  IntTensor hot(spec.input);
  hot.data().setConstant(8);
  CHECK_THROWS(run_inference(spec, params, hot, accel));
}

TEST_CASE("time-step sweep is affine") {
  const auto snap = testing::lenet_snapshot();
  std::mt19937_64 rng(25);
  const auto image = testing::random_image(snap.spec.input, rng);
  const std::vector<int> steps{1, 2, 3, 4, 6, 8};
  const auto sweep = sweep_time_steps(snap.spec, snap.params, image, AcceleratorConfig{}, steps);
  CHECK(sweep.affine);
  REQUIRE(sweep.rows.size() == steps.size());
  CHECK(sweep.rows[2].cycles == 23864);
  // Per-step cost: (23864 - 356 output-write cycles) / 3.
  CHECK(sweep.rows[1].cycles - sweep.rows[0].cycles == 7836);
  const std::vector<int> bad{3, 2};
  CHECK_THROWS_AS(sweep_time_steps(snap.spec, snap.params, image, AcceleratorConfig{}, bad),
                  ConfigError);
}

TEST_CASE("unit sweep") {
  const auto snap = testing::lenet_snapshot();
  const auto spec = with_requant_shifts(snap.spec, testing::kLeNetShifts);
  std::mt19937_64 rng(26);
  const auto image = testing::random_image(spec.input, rng);
  const std::vector<int> units{1, 2, 4, 8};
  const auto sweep = sweep_conv_units(spec, snap.params, image, AcceleratorConfig{}, units);
  CHECK(sweep.monotone);
  CHECK(sweep.sublinear);
  CHECK(sweep.logits_invariant);
  std::vector<std::int64_t> cycles;
  for (const auto& r : sweep.rows) cycles.push_back(r.cycles);
  CHECK(cycles == std::vector<std::int64_t>{23864, 15240, 11949, 9907});
}

TEST_CASE("evaluate") {
  const auto snap = testing::lenet_snapshot();
  const auto spec = with_requant_shifts(snap.spec, testing::kLeNetShifts);
  std::mt19937_64 rng(27);
  std::vector<Sample> data;
  for (int i = 0; i < 12; ++i) {
    Sample s{testing::random_image(spec.input, rng), 0};
    s.label = run_inference(spec, snap.params, quantize_image(s.image, {3}), {}).predicted;
    if (i % 3 == 0) s.label = (s.label + 1) % 10;
    data.push_back(std::move(s));
  }
  for (unsigned threads : {1u, 3u}) {
    const auto r = evaluate(spec, snap.params, data, AcceleratorConfig{}, 0, threads);
    CHECK(r.total == 12);
    CHECK(r.correct == 8);
    CHECK(r.accuracy == doctest::Approx(8.0 / 12.0));
    CHECK(r.cycles.total_cycles == 23864);
  }
  CHECK(evaluate(spec, snap.params, data, AcceleratorConfig{}, 5, 2).total == 5);
  CHECK_THROWS_AS(evaluate(spec, snap.params, {}, AcceleratorConfig{}), ConfigError);
}
