#include "rsnn/idx.hpp"

#include "rsnn/errors.hpp"

#include <fstream>
#include <istream>
#include <ostream>

namespace rsnn {

namespace {

std::uint32_t read_be32(std::istream& in, const char* what) {
  unsigned char b[4];
  in.read(reinterpret_cast<char*>(b), 4);
  if (in.gcount() != 4) throw FormatError(std::string("IDX file truncated in ") + what);
  return (std::uint32_t{b[0]} << 24) | (std::uint32_t{b[1]} << 16) |
         (std::uint32_t{b[2]} << 8) | b[3];
}

void write_be32(std::ostream& out, std::uint32_t v) {
  const char b[4] = {static_cast<char>(v >> 24), static_cast<char>(v >> 16),
                     static_cast<char>(v >> 8), static_cast<char>(v)};
  out.write(b, 4);
}

}  // namespace

std::vector<Sample> ingest_idx(std::istream& images, std::istream& labels, int pad_to) {
  if (read_be32(images, "image header") != kIdxImagesMagic) {
    throw FormatError("IDX images: magic mismatch (expected 2051)");
  }
  if (read_be32(labels, "label header") != kIdxLabelsMagic) {
    throw FormatError("IDX labels: magic mismatch (expected 2049)");
  }
  const std::uint32_t n_images = read_be32(images, "image header");
  const int rows = static_cast<int>(read_be32(images, "image header"));
  const int cols = static_cast<int>(read_be32(images, "image header"));
  const std::uint32_t n_labels = read_be32(labels, "label header");
  if (n_images != n_labels) {
    throw FormatError("IDX: " + std::to_string(n_images) + " images but " +
                      std::to_string(n_labels) + " labels");
  }
  if (rows < 1 || cols < 1 || rows > 4096 || cols > 4096) {
    throw FormatError("IDX images: invalid image size");
  }
  if (pad_to > 0 && (pad_to < rows || pad_to < cols)) {
    throw ConfigError("pad size smaller than image");
  }
  const int height = pad_to > 0 ? pad_to : rows;
  const int width = pad_to > 0 ? pad_to : cols;
  const int top = (height - rows) / 2;
  const int left = (width - cols) / 2;

  std::vector<Sample> samples;
  samples.reserve(n_images);
  Plane<std::uint8_t> pixels(rows, cols);
  for (std::uint32_t n = 0; n < n_images; ++n) {
    images.read(reinterpret_cast<char*>(pixels.data()), pixels.size());
    if (images.gcount() != pixels.size()) throw FormatError("IDX images: truncated pixel data");
    const int label = labels.get();
    if (label == std::char_traits<char>::eof()) throw FormatError("IDX labels: truncated");

    Sample s;
    s.label = label;
    s.image = RealTensor(Shape{1, height, width});
    s.image.channel(0).block(top, left, rows, cols) = pixels.cast<double>() / 255.0;
    samples.push_back(std::move(s));
  }
  return samples;
}

std::vector<Sample> ingest_idx(const std::filesystem::path& images,
                               const std::filesystem::path& labels, int pad_to) {
  std::ifstream img(images, std::ios::binary);
  if (!img) throw FormatError("cannot open " + images.string());
  std::ifstream lbl(labels, std::ios::binary);
  if (!lbl) throw FormatError("cannot open " + labels.string());
  return ingest_idx(img, lbl, pad_to);
}

void write_idx_images(std::ostream& out, const std::vector<Plane<std::uint8_t>>& images) {
  write_be32(out, kIdxImagesMagic);
  write_be32(out, static_cast<std::uint32_t>(images.size()));
  const auto rows = images.empty() ? 0 : images.front().rows();
  const auto cols = images.empty() ? 0 : images.front().cols();
  write_be32(out, static_cast<std::uint32_t>(rows));
  write_be32(out, static_cast<std::uint32_t>(cols));
  for (const auto& img : images) {
    out.write(reinterpret_cast<const char*>(img.data()), img.size());
  }
}

void write_idx_labels(std::ostream& out, const std::vector<std::uint8_t>& labels) {
  write_be32(out, kIdxLabelsMagic);
  write_be32(out, static_cast<std::uint32_t>(labels.size()));
  out.write(reinterpret_cast<const char*>(labels.data()),
            static_cast<std::streamsize>(labels.size()));
}

}  // namespace rsnn
