#pragma once

#include "rsnn/controller.hpp"

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <vector>

namespace rsnn {

inline constexpr std::uint32_t kIdxImagesMagic = 2051;
inline constexpr std::uint32_t kIdxLabelsMagic = 2049;

/// Reads an IDX image/label pair (e.g. MNIST). Pixels are scaled by 1/255;
/// with `pad_to` > 0 each image is zero-padded symmetrically to
/// pad_to x pad_to. Throws FormatError on bad magic, truncation or a count
/// mismatch between the two files.
std::vector<Sample> ingest_idx(std::istream& images, std::istream& labels, int pad_to = 0);
std::vector<Sample> ingest_idx(const std::filesystem::path& images,
                               const std::filesystem::path& labels, int pad_to = 0);

/// Writers for the same format; used to produce fixtures.
void write_idx_images(std::ostream& out, const std::vector<Plane<std::uint8_t>>& images);
void write_idx_labels(std::ostream& out, const std::vector<std::uint8_t>& labels);

}  // namespace rsnn
