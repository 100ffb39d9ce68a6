#include "rsnn/encoding.hpp"

#include "rsnn/errors.hpp"

#include <cmath>
#include <string>

namespace rsnn {

void EncodingConfig::validate() const {
  if (time_steps < 1 || time_steps > kMaxTimeSteps) {
    throw ConfigError("time steps must lie in [1, " +
                      std::to_string(kMaxTimeSteps) + "], got " +
                      std::to_string(time_steps));
  }
}

std::int64_t quantize_activation(double x, const EncodingConfig& cfg) {
  cfg.validate();
  if (!(x >= 0.0 && x <= 1.0)) {
    throw std::domain_error("activation must lie in [0, 1], got " +
                            std::to_string(x));
  }
  // std::round rounds half away from zero.
  return static_cast<std::int64_t>(
      std::round(x * static_cast<double>(cfg.max_level())));
}

SpikeTrain encode_radix(std::int64_t q, const EncodingConfig& cfg) {
  cfg.validate();
  if (q < 0 || q > cfg.max_level()) {
    throw std::out_of_range("level " + std::to_string(q) +
                            " does not fit in " +
                            std::to_string(cfg.time_steps) + " time steps");
  }
  SpikeTrain bits(cfg.time_steps);
  for (int t = 0; t < cfg.time_steps; ++t) {
    bits[t] = static_cast<std::uint8_t>((q >> (cfg.time_steps - 1 - t)) & 1);
  }
  return bits;
}

std::int64_t decode_radix(std::span<const std::uint8_t> spikes) {
  std::int64_t q = 0;
  for (std::uint8_t s : spikes) q = horner_step<std::int64_t>(q, s);
  return q;
}

SpikePlanes encode_planes(const IntTensor& levels, const EncodingConfig& cfg) {
  cfg.validate();
  const auto& v = levels.data();
  if (v.size() > 0 && (v.minCoeff() < 0 || v.maxCoeff() > cfg.max_level())) {
    throw std::out_of_range("activation level outside [0, 2^T - 1]");
  }
  SpikePlanes out;
  out.planes.reserve(cfg.time_steps);
  for (int t = 0; t < cfg.time_steps; ++t) {
    const int shift = cfg.time_steps - 1 - t;
    out.planes.emplace_back(
        levels.shape(),
        v.unaryExpr([shift](std::int64_t q) {
           return static_cast<std::uint8_t>((q >> shift) & 1);
         }).eval());
  }
  return out;
}

IntTensor decode_planes(const SpikePlanes& spikes) {
  IntTensor out(spikes.shape());
  for (const auto& plane : spikes.planes) {
    out.data() = out.data() * 2 + plane.data().cast<std::int64_t>();
  }
  return out;
}

IntTensor quantize_image(const RealTensor& image, const EncodingConfig& cfg) {
  IntTensor out(image.shape());
  for (Eigen::Index i = 0; i < image.size(); ++i) {
    out.data()[i] = quantize_activation(image.data()[i], cfg);
  }
  return out;
}

}  // namespace rsnn
