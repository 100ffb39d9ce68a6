#include "rsnn/params.hpp"

#include "rsnn/errors.hpp"

#include <cmath>
#include <fstream>
#include <istream>
#include <numeric>
#include <ostream>

namespace rsnn {

namespace {

constexpr char kMagic[4] = {'R', 'S', 'N', 'N'};

Eigen::Index product(const std::vector<int>& dims) {
  return std::accumulate(dims.begin(), dims.end(), Eigen::Index{1},
                         std::multiplies<>());
}

std::string dims_str(const std::vector<int>& dims) {
  std::string s = "(";
  for (std::size_t i = 0; i < dims.size(); ++i) {
    if (i) s += ", ";
    s += std::to_string(dims[i]);
  }
  return s + ")";
}

void check_bits(int bits) {
  if (bits < kMinWeightBits || bits > kMaxWeightBits) {
    throw ConfigError("weight bits must lie in [2, 8], got " + std::to_string(bits));
  }
}

template <typename T>
void put(std::ostream& out, T value) {
  for (std::size_t i = 0; i < sizeof(T); ++i) {
    out.put(static_cast<char>((static_cast<std::uint64_t>(value) >> (8 * i)) & 0xff));
  }
}

template <typename T>
T get(std::istream& in, const char* what) {
  std::uint64_t v = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) {
    const int c = in.get();
    if (c == std::char_traits<char>::eof()) {
      throw FormatError(std::string("parameter file truncated while reading ") + what);
    }
    v |= static_cast<std::uint64_t>(static_cast<unsigned char>(c)) << (8 * i);
  }
  return static_cast<T>(v);
}

}  // namespace

const QuantizedTensor& QuantizedParams::at(int layer) const {
  auto it = layers.find(layer);
  if (it == layers.end()) {
    throw ConfigError("no parameters for layer " + std::to_string(layer));
  }
  return it->second;
}

QuantizedTensor quantize_weights(std::span<const double> weights,
                                 std::vector<int> dims, int bits, double scale) {
  check_bits(bits);
  if (!(scale > 0.0) || !std::isfinite(scale)) {
    throw ConfigError("quantization scale must be positive and finite");
  }
  if (product(dims) != static_cast<Eigen::Index>(weights.size())) {
    throw ConfigError("weights do not match dims " + dims_str(dims));
  }
  QuantizedTensor q;
  q.dims = std::move(dims);
  q.bits = bits;
  q.values.resize(static_cast<Eigen::Index>(weights.size()));
  const double lo = static_cast<double>(q.min_value());
  const double hi = static_cast<double>(q.max_value());
  for (std::size_t i = 0; i < weights.size(); ++i) {
    if (!std::isfinite(weights[i])) {
      throw FormatError("non-finite weight at flat index " + std::to_string(i));
    }
    q.values[static_cast<Eigen::Index>(i)] =
        static_cast<std::int8_t>(std::clamp(std::round(weights[i] / scale), lo, hi));
  }
  return q;
}

std::vector<int> expected_dims(const LayerSpec& layer) {
  if (const auto* c = std::get_if<ConvLayerSpec>(&layer)) {
    return {c->out_channels, c->in_channels, c->kernel_rows, c->kernel_cols};
  }
  if (const auto* l = std::get_if<LinearLayerSpec>(&layer)) {
    return {l->out_features, l->in_features};
  }
  return {};
}

QuantizedParams random_params(const NetworkSpec& spec, int bits,
                              std::mt19937_64& rng) {
  check_bits(bits);
  QuantizedParams params;
  for (std::size_t i = 0; i < spec.layers.size(); ++i) {
    auto dims = expected_dims(spec.layers[i]);
    if (dims.empty()) continue;
    QuantizedTensor q;
    q.bits = bits;
    q.values.resize(product(dims));
    q.dims = std::move(dims);
    std::uniform_int_distribution<int> dist(static_cast<int>(q.min_value()),
                                            static_cast<int>(q.max_value()));
    for (auto& v : q.values) v = static_cast<std::int8_t>(dist(rng));
    params.layers.emplace(static_cast<int>(i), std::move(q));
  }
  return params;
}

void validate_params(const NetworkSpec& spec, const QuantizedParams& params) {
  std::size_t expected = 0;
  for (std::size_t i = 0; i < spec.layers.size(); ++i) {
    const auto dims = expected_dims(spec.layers[i]);
    if (dims.empty()) continue;
    ++expected;
    auto it = params.layers.find(static_cast<int>(i));
    if (it == params.layers.end()) {
      throw ConfigError("missing parameters for layer " + std::to_string(i));
    }
    const auto& q = it->second;
    if (q.dims != dims || q.values.size() != product(dims)) {
      throw ConfigError("layer " + std::to_string(i) + ": parameter shape " +
                        dims_str(q.dims) + " does not match expected " +
                        dims_str(dims));
    }
    if (q.bits < kMinWeightBits || q.bits > kMaxWeightBits) {
      throw FormatError("layer " + std::to_string(i) + ": invalid bit width " +
                        std::to_string(q.bits));
    }
    if (q.size() > 0 && (q.values.minCoeff() < q.min_value() ||
                         q.values.maxCoeff() > q.max_value())) {
      throw FormatError("layer " + std::to_string(i) + ": value outside " +
                        std::to_string(q.bits) + "-bit range [" +
                        std::to_string(q.min_value()) + ", " +
                        std::to_string(q.max_value()) + "]");
    }
  }
  if (params.layers.size() != expected) {
    throw ConfigError("parameters supplied for layers without weights");
  }
}

void save_params(const QuantizedParams& params, std::ostream& out) {
  out.write(kMagic, sizeof kMagic);
  put<std::uint16_t>(out, kParamFormatVersion);
  put<std::uint16_t>(out, static_cast<std::uint16_t>(params.layers.size()));
  for (const auto& [index, q] : params.layers) {
    put<std::uint16_t>(out, static_cast<std::uint16_t>(index));
    put<std::uint8_t>(out, static_cast<std::uint8_t>(q.bits));
    put<std::uint8_t>(out, static_cast<std::uint8_t>(q.rank()));
    for (int d : q.dims) put<std::uint32_t>(out, static_cast<std::uint32_t>(d));
    out.write(reinterpret_cast<const char*>(q.values.data()), q.values.size());
  }
  if (!out) throw FormatError("failed to write parameter stream");
}

void save_params(const QuantizedParams& params, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot open " + path.string() + " for writing");
  save_params(params, out);
}

QuantizedParams load_params(std::istream& in, const NetworkSpec& spec) {
  char magic[4] = {};
  in.read(magic, sizeof magic);
  if (in.gcount() != sizeof magic) throw FormatError("parameter file too short");
  if (!std::equal(std::begin(magic), std::end(magic), std::begin(kMagic))) {
    throw FormatError("bad parameter file magic");
  }
  const auto version = get<std::uint16_t>(in, "version");
  if (version != kParamFormatVersion) {
    throw FormatError("unsupported parameter format version " + std::to_string(version));
  }
  const auto count = get<std::uint16_t>(in, "layer count");
  QuantizedParams params;
  for (std::uint16_t n = 0; n < count; ++n) {
    const int index = get<std::uint16_t>(in, "layer index");
    QuantizedTensor q;
    q.bits = get<std::uint8_t>(in, "bit width");
    const int rank = get<std::uint8_t>(in, "rank");
    if (rank < 1 || rank > 4) throw FormatError("invalid tensor rank " + std::to_string(rank));
    for (int r = 0; r < rank; ++r) {
      const auto d = get<std::uint32_t>(in, "dims");
      if (d == 0 || d > (1u << 24)) throw FormatError("invalid tensor dimension");
      q.dims.push_back(static_cast<int>(d));
    }
    q.values.resize(product(q.dims));
    in.read(reinterpret_cast<char*>(q.values.data()), q.values.size());
    if (in.gcount() != q.values.size()) throw FormatError("parameter values truncated");
    if (!params.layers.emplace(index, std::move(q)).second) {
      throw FormatError("duplicate layer index " + std::to_string(index));
    }
  }
  if (in.peek() != std::char_traits<char>::eof()) {
    throw FormatError("trailing bytes after parameter data");
  }
  validate_params(spec, params);
  return params;
}

QuantizedParams load_params(const std::filesystem::path& path, const NetworkSpec& spec) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + path.string());
  return load_params(in, spec);
}

}  // namespace rsnn
