#pragma once

#include <filesystem>

#include "secl/data.hpp"

namespace secl {

/// Reads an IDX image/label pair: images carry magic 0x00000803 with
/// big-endian dims (n, rows, cols) and unsigned-byte pixels, labels carry
/// 0x00000801 with dim n. Pixels are scaled by 1/255.
LabeledDataset load_idx(const std::filesystem::path& images, const std::filesystem::path& labels);

/// Inverse of load_idx; pixel values are rounded to the nearest byte.
void write_idx(const LabeledDataset& data, const std::filesystem::path& images,
               const std::filesystem::path& labels);

}  // namespace secl
