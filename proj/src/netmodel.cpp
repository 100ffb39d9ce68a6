#include "rsnn/netmodel.hpp"

#include "rsnn/errors.hpp"

#include <algorithm>
#include <bit>
#include <cctype>
#include <charconv>
#include <optional>
#include <regex>
#include <sstream>

namespace rsnn {

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};

std::string describe(std::size_t index, const LayerSpec& layer) {
  return "layer " + std::to_string(index) + " (" +
         std::string(layer_kind(layer)) + ")";
}

int conv_extent(int in, int pad, int kernel, int stride) {
  return (in + 2 * pad - kernel) / stride + 1;
}

void check_shift(int shift, const std::string& where) {
  if (shift < 0 || shift > 62) {
    throw ConfigError(where + ": requantization shift must lie in [0, 62]");
  }
}

}  // namespace

std::string_view layer_kind(const LayerSpec& layer) {
  return std::visit(
      overloaded{[](const ConvLayerSpec&) { return std::string_view("conv"); },
                 [](const PoolLayerSpec&) { return std::string_view("pool"); },
                 [](const FlattenSpec&) { return std::string_view("flatten"); },
                 [](const LinearLayerSpec&) {
                   return std::string_view("linear");
                 }},
      layer);
}

Shape layer_input(const LayerSpec& layer) {
  return std::visit([](const auto& l) { return l.in; }, layer);
}

Shape layer_output(const LayerSpec& layer) {
  return std::visit([](const auto& l) { return l.out; }, layer);
}

int NetworkSpec::conv_layers() const {
  return static_cast<int>(std::count_if(layers.begin(), layers.end(), [](const auto& l) {
    return std::holds_alternative<ConvLayerSpec>(l);
  }));
}

int NetworkSpec::linear_layers() const {
  return static_cast<int>(std::count_if(layers.begin(), layers.end(), [](const auto& l) {
    return std::holds_alternative<LinearLayerSpec>(l);
  }));
}

int NetworkSpec::flatten_index() const {
  for (std::size_t i = 0; i < layers.size(); ++i) {
    if (std::holds_alternative<FlattenSpec>(layers[i])) return static_cast<int>(i);
  }
  return -1;
}

NetworkSpec build_network(Shape input, std::vector<LayerSpec> layers) {
  if (input.channels < 1 || input.height < 1 || input.width < 1) {
    throw ConfigError("input shape must be positive");
  }
  NetworkSpec spec;
  spec.input = input;
  Shape cur = input;
  bool flat = false;

  for (auto& layer : layers) {
    const std::string where = describe(spec.layers.size(), layer);
    if (std::holds_alternative<LinearLayerSpec>(layer) && !flat) {
      spec.layers.push_back(
          FlattenSpec{cur, Shape{static_cast<int>(cur.size()), 1, 1}});
      cur = Shape{static_cast<int>(cur.size()), 1, 1};
      flat = true;
    }
    std::visit(
        overloaded{
            [&](ConvLayerSpec& c) {
              if (flat) throw ConfigError(where + ": 2-D layer after flatten");
              if (c.in_channels != 0 && c.in_channels != cur.channels) {
                throw ConfigError(where + ": expects " +
                                  std::to_string(c.in_channels) +
                                  " input channels, predecessor has " +
                                  std::to_string(cur.channels));
              }
              c.in_channels = cur.channels;
              if (c.out_channels < 1 || c.kernel_rows < 1 ||
                  c.kernel_cols < 1 || c.stride < 1 || c.pad < 0) {
                throw ConfigError(where + ": invalid geometry");
              }
              check_shift(c.requant_shift, where);
              if (cur.height + 2 * c.pad < c.kernel_rows ||
                  cur.width + 2 * c.pad < c.kernel_cols) {
                throw ConfigError(where + ": kernel larger than padded input");
              }
              c.in = cur;
              c.out = Shape{
                  c.out_channels,
                  conv_extent(cur.height, c.pad, c.kernel_rows, c.stride),
                  conv_extent(cur.width, c.pad, c.kernel_cols, c.stride)};
              cur = c.out;
            },
            [&](PoolLayerSpec& p) {
              if (flat) throw ConfigError(where + ": 2-D layer after flatten");
              if (p.window < 1) throw ConfigError(where + ": window must be >= 1");
              if (p.stride < 1) throw ConfigError(where + ": stride must be >= 1");
              const auto area = static_cast<unsigned>(p.window * p.window);
              if (!std::has_single_bit(area)) {
                throw ConfigError(where +
                                  ": window area must be a power of two for "
                                  "shift-based averaging");
              }
              p.divisor_shift = std::countr_zero(area);
              if (cur.height < p.window || cur.width < p.window) {
                throw ConfigError(where + ": window larger than input");
              }
              p.in = cur;
              p.out = Shape{cur.channels,
                            conv_extent(cur.height, 0, p.window, p.stride),
                            conv_extent(cur.width, 0, p.window, p.stride)};
              cur = p.out;
            },
            [&](FlattenSpec& f) {
              if (flat) throw ConfigError(where + ": second flatten");
              f.in = cur;
              f.out = Shape{static_cast<int>(cur.size()), 1, 1};
              cur = f.out;
              flat = true;
            },
            [&](LinearLayerSpec& l) {
              if (l.in_features != 0 && l.in_features != cur.size()) {
                throw ConfigError(where + ": expects " +
                                  std::to_string(l.in_features) +
                                  " input features, predecessor has " +
                                  std::to_string(cur.size()));
              }
              l.in_features = static_cast<int>(cur.size());
              if (l.out_features < 1) {
                throw ConfigError(where + ": out_features must be >= 1");
              }
              check_shift(l.requant_shift, where);
              l.in = cur;
              l.out = Shape{l.out_features, 1, 1};
              cur = l.out;
            }},
        layer);
    spec.layers.push_back(layer);
  }

  if (spec.layers.empty() ||
      !std::holds_alternative<LinearLayerSpec>(spec.layers.back())) {
    throw ConfigError("network must end with a linear layer");
  }
  auto& last = std::get<LinearLayerSpec>(spec.layers.back());
  last.apply_relu = false;
  last.requant_shift = 0;
  return spec;
}

namespace {

std::string normalize(std::string_view text) {
  std::string s(text);
  auto replace_all = [&s](std::string_view from, std::string_view to) {
    for (std::size_t pos = 0; (pos = s.find(from, pos)) != std::string::npos;
         pos += to.size()) {
      s.replace(pos, from.size(), to);
    }
  };
  replace_all("\xC3\x97", "x");      // multiplication sign
  replace_all("\xE2\x80\x93", "-");  // en dash
  replace_all("\xE2\x80\x94", "-");  // em dash
  return s;
}

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(first, last - first + 1));
}

int to_int(std::string_view s, const std::string& where) {
  int value = 0;
  const auto* end = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(s.data(), end, value);
  if (ec != std::errc() || ptr != end) {
    throw ConfigError(where + ": expected an integer, got '" + std::string(s) +
                      "'");
  }
  return value;
}

Shape parse_input_shape(const std::string& token, const std::string& where) {
  static const std::regex re(R"((\d+)x(\d+)(?:x(\d+))?)", std::regex::icase);
  std::smatch m;
  if (!std::regex_match(token, m, re)) {
    throw ConfigError(where + ": expected input shape HxW or HxWxC, got '" +
                      token + "'");
  }
  return Shape{m[3].matched ? to_int(m[3].str(), where) : 1,
               to_int(m[1].str(), where), to_int(m[2].str(), where)};
}

// Suffix flags: s<stride>, p<pad>, q<requant shift>, n (no ReLU).
template <class Apply>
void parse_suffixes(const std::string& suffix, const std::string& where,
                    Apply apply) {
  static const std::regex re(R"(([spq])(\d+)|(n))", std::regex::icase);
  for (auto it = std::sregex_iterator(suffix.begin(), suffix.end(), re);
       it != std::sregex_iterator(); ++it) {
    const auto& m = *it;
    if (m[3].matched) {
      apply('n', 0);
    } else {
      apply(static_cast<char>(std::tolower(m[1].str()[0])),
            to_int(m[2].str(), where));
    }
  }
}

LayerSpec parse_compact_layer(const std::string& token,
                              const std::string& where) {
  static const std::regex conv_re(R"((\d+)C(\d+)(?:x(\d+))?((?:[spq]\d+|n)*))",
                                  std::regex::icase);
  static const std::regex pool_re(R"(P(\d+)((?:s\d+)?))", std::regex::icase);
  static const std::regex pool_alt_re(R"((\d+)P)", std::regex::icase);
  static const std::regex linear_re(R"(L(\d+)((?:q\d+|n)*))", std::regex::icase);
  static const std::regex bare_re(R"(\d+)");
  static const std::regex flatten_re(R"(F|flatten)", std::regex::icase);

  std::smatch m;
  if (std::regex_match(token, m, conv_re)) {
    ConvLayerSpec c;
    c.out_channels = to_int(m[1].str(), where);
    c.kernel_rows = to_int(m[2].str(), where);
    c.kernel_cols = m[3].matched ? to_int(m[3].str(), where) : c.kernel_rows;
    parse_suffixes(m[4].str(), where, [&](char key, int v) {
      switch (key) {
        case 's': c.stride = v; break;
        case 'p': c.pad = v; break;
        case 'q': c.requant_shift = v; break;
        case 'n': c.apply_relu = false; break;
      }
    });
    return c;
  }
  if (std::regex_match(token, m, pool_re)) {
    PoolLayerSpec p;
    p.window = to_int(m[1].str(), where);
    p.stride = m[2].length() > 0 ? to_int(m[2].str().substr(1), where) : p.window;
    return p;
  }
  if (std::regex_match(token, m, pool_alt_re)) {
    PoolLayerSpec p;
    p.window = p.stride = to_int(m[1].str(), where);
    return p;
  }
  if (std::regex_match(token, m, linear_re)) {
    LinearLayerSpec l;
    l.out_features = to_int(m[1].str(), where);
    parse_suffixes(m[2].str(), where, [&](char key, int v) {
      if (key == 'q') l.requant_shift = v;
      if (key == 'n') l.apply_relu = false;
    });
    return l;
  }
  if (std::regex_match(token, bare_re)) {
    LinearLayerSpec l;
    l.out_features = to_int(token, where);
    return l;
  }
  if (std::regex_match(token, flatten_re)) return FlattenSpec{};
  throw ConfigError(where + ": unrecognized layer '" + token + "'");
}

NetworkSpec parse_compact(const std::string& text) {
  std::vector<std::string> tokens;
  std::stringstream ss(text);
  for (std::string part; std::getline(ss, part, '-');) {
    auto t = trim(part);
    if (!t.empty()) tokens.push_back(std::move(t));
  }
  if (tokens.empty()) throw ConfigError("empty network description");

  const Shape input = parse_input_shape(tokens[0], "token 0");
  std::vector<LayerSpec> layers;
  for (std::size_t i = 1; i < tokens.size(); ++i) {
    layers.push_back(parse_compact_layer(
        tokens[i], "token " + std::to_string(i) + " ('" + tokens[i] + "')"));
  }
  return build_network(input, std::move(layers));
}

bool parse_bool(const std::string& v, const std::string& where) {
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw ConfigError(where + ": expected a boolean, got '" + v + "'");
}

NetworkSpec parse_structured(const std::string& text) {
  std::optional<Shape> input;
  std::vector<LayerSpec> layers;
  std::stringstream ss(text);
  int line_no = 0;
  for (std::string raw; std::getline(ss, raw);) {
    ++line_no;
    const std::string where = "line " + std::to_string(line_no);
    auto line = trim(raw.substr(0, raw.find('#')));
    if (line.empty()) continue;

    if (line.front() == '[') {
      if (line.back() != ']') throw ConfigError(where + ": unterminated section");
      const auto kind = trim(std::string_view(line).substr(1, line.size() - 2));
      if (kind == "conv") layers.emplace_back(ConvLayerSpec{});
      else if (kind == "pool") {
        PoolLayerSpec p;
        p.stride = 0;  // filled from window unless given
        layers.emplace_back(p);
      }
      else if (kind == "flatten") layers.emplace_back(FlattenSpec{});
      else if (kind == "linear") layers.emplace_back(LinearLayerSpec{});
      else throw ConfigError(where + ": unknown section '" + kind + "'");
      continue;
    }

    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError(where + ": expected key = value");
    const auto key = trim(std::string_view(line).substr(0, eq));
    const auto value = trim(std::string_view(line).substr(eq + 1));
    const std::string field = where + " field '" + key + "'";

    if (key == "bias") {
      if (parse_bool(value, field)) {
        throw ConfigError(field + ": bias terms are not supported by the datapath");
      }
      continue;
    }
    if (layers.empty()) {
      if (key != "input") throw ConfigError(field + ": unknown top-level key");
      input = parse_input_shape(value, field);
      continue;
    }

    auto unknown = [&] { throw ConfigError(field + ": unknown key for this layer"); };
    std::visit(
        overloaded{
            [&](ConvLayerSpec& c) {
              if (key == "out_channels") c.out_channels = to_int(value, field);
              else if (key == "in_channels") c.in_channels = to_int(value, field);
              else if (key == "kernel") c.kernel_rows = c.kernel_cols = to_int(value, field);
              else if (key == "kernel_rows") c.kernel_rows = to_int(value, field);
              else if (key == "kernel_cols") c.kernel_cols = to_int(value, field);
              else if (key == "stride") c.stride = to_int(value, field);
              else if (key == "pad") c.pad = to_int(value, field);
              else if (key == "requant_shift") c.requant_shift = to_int(value, field);
              else if (key == "relu") c.apply_relu = parse_bool(value, field);
              else unknown();
            },
            [&](PoolLayerSpec& p) {
              if (key == "window") p.window = to_int(value, field);
              else if (key == "stride") p.stride = to_int(value, field);
              else unknown();
            },
            [&](FlattenSpec&) { unknown(); },
            [&](LinearLayerSpec& l) {
              if (key == "out_features") l.out_features = to_int(value, field);
              else if (key == "in_features") l.in_features = to_int(value, field);
              else if (key == "requant_shift") l.requant_shift = to_int(value, field);
              else if (key == "relu") l.apply_relu = parse_bool(value, field);
              else unknown();
            }},
        layers.back());
  }
  if (!input) throw ConfigError("structured network: missing 'input' key");
  for (auto& layer : layers) {
    if (auto* p = std::get_if<PoolLayerSpec>(&layer); p && p->stride == 0) {
      p->stride = p->window;
    }
  }
  return build_network(*input, std::move(layers));
}

}  // namespace

NetworkSpec parse_network(std::string_view text) {
  const std::string s = normalize(text);
  if (s.find('[') != std::string::npos || s.find('=') != std::string::npos) {
    return parse_structured(s);
  }
  // Compact form may span lines; comments are allowed.
  std::string joined;
  std::stringstream ss(s);
  for (std::string line; std::getline(ss, line);) {
    joined += line.substr(0, line.find('#'));
    joined += ' ';
  }
  return parse_compact(joined);
}

std::string to_compact(const NetworkSpec& spec) {
  std::ostringstream os;
  os << spec.input.height << 'x' << spec.input.width << 'x'
     << spec.input.channels;
  for (const auto& layer : spec.layers) {
    os << " - ";
    std::visit(overloaded{[&](const ConvLayerSpec& c) {
                            os << c.out_channels << 'C' << c.kernel_rows << 'x'
                               << c.kernel_cols << 's' << c.stride << 'p'
                               << c.pad << 'q' << c.requant_shift;
                            if (!c.apply_relu) os << 'n';
                          },
                          [&](const PoolLayerSpec& p) {
                            os << 'P' << p.window << 's' << p.stride;
                          },
                          [&](const FlattenSpec&) { os << 'F'; },
                          [&](const LinearLayerSpec& l) {
                            os << 'L' << l.out_features << 'q'
                               << l.requant_shift;
                            if (!l.apply_relu) os << 'n';
                          }},
               layer);
  }
  return os.str();
}

NetworkSpec with_requant_shifts(const NetworkSpec& spec,
                                const std::vector<int>& shifts) {
  NetworkSpec out = spec;
  const std::size_t last = out.layers.size() - 1;
  for (std::size_t i = 0; i < out.layers.size() && i < shifts.size(); ++i) {
    if (i == last) break;
    const std::string where = describe(i, out.layers[i]);
    if (auto* c = std::get_if<ConvLayerSpec>(&out.layers[i])) {
      check_shift(shifts[i], where);
      c->requant_shift = shifts[i];
    } else if (auto* l = std::get_if<LinearLayerSpec>(&out.layers[i])) {
      check_shift(shifts[i], where);
      l->requant_shift = shifts[i];
    }
  }
  return out;
}

}  // namespace rsnn
