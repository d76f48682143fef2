#include "secl/idx.hpp"

#include <cmath>
#include <cstdint>
#include <fstream>
#include <iterator>
#include <vector>

#include "secl/error.hpp"

namespace secl {
namespace {

constexpr std::uint32_t kImageMagic = 0x00000803;
constexpr std::uint32_t kLabelMagic = 0x00000801;

std::vector<std::uint8_t> read_all(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw Error("cannot open " + p.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::uint32_t be32(const std::vector<std::uint8_t>& b, std::size_t off, const std::filesystem::path& p) {
  if (b.size() < off + 4) throw Error(p.string() + ": truncated file");
  return (std::uint32_t{b[off]} << 24) | (std::uint32_t{b[off + 1]} << 16) |
         (std::uint32_t{b[off + 2]} << 8) | std::uint32_t{b[off + 3]};
}

void put_be32(std::ofstream& out, std::uint32_t v) {
  const char bytes[4] = {static_cast<char>(v >> 24), static_cast<char>(v >> 16),
                         static_cast<char>(v >> 8), static_cast<char>(v)};
  out.write(bytes, 4);
}

}  // namespace

LabeledDataset load_idx(const std::filesystem::path& images, const std::filesystem::path& labels) {
  const auto img = read_all(images);
  const auto lab = read_all(labels);

  if (be32(img, 0, images) != kImageMagic) throw Error(images.string() + ": bad magic");
  if (be32(lab, 0, labels) != kLabelMagic) throw Error(labels.string() + ": bad magic");

  const std::size_t n = be32(img, 4, images);
  const std::size_t rows = be32(img, 8, images);
  const std::size_t cols = be32(img, 12, images);
  const std::size_t n_labels = be32(lab, 4, labels);
  if (n != n_labels) {
    throw Error("count mismatch: " + std::to_string(n) + " images vs " + std::to_string(n_labels) +
                " labels");
  }
  require(n > 0 && rows > 0 && cols > 0, images.string() + ": empty image set");
  const std::size_t pixels = rows * cols;
  if (img.size() < 16 + n * pixels) throw Error(images.string() + ": truncated file");
  if (lab.size() < 8 + n) throw Error(labels.string() + ": truncated file");

  LabeledDataset ds;
  ds.image_rows = rows;
  ds.image_cols = cols;
  ds.inputs = Matrix(n, pixels);
  auto values = ds.inputs.values();
  for (std::size_t i = 0; i < n * pixels; ++i) values[i] = img[16 + i] / 255.0;
  ds.labels.resize(n);
  int max_label = 0;
  for (std::size_t i = 0; i < n; ++i) {
    ds.labels[i] = lab[8 + i];
    max_label = std::max(max_label, ds.labels[i]);
  }
  ds.num_classes = max_label + 1;
  return ds;
}

void write_idx(const LabeledDataset& data, const std::filesystem::path& images,
               const std::filesystem::path& labels) {
  data.validate();
  require(data.is_image(), "write_idx: dataset has no image shape");
  std::ofstream img(images, std::ios::binary | std::ios::trunc);
  std::ofstream lab(labels, std::ios::binary | std::ios::trunc);
  if (!img || !lab) throw Error("write_idx: cannot open output files");
  put_be32(img, kImageMagic);
  put_be32(img, static_cast<std::uint32_t>(data.size()));
  put_be32(img, static_cast<std::uint32_t>(data.image_rows));
  put_be32(img, static_cast<std::uint32_t>(data.image_cols));
  for (double v : data.inputs.values()) {
    const double clamped = std::min(1.0, std::max(0.0, v));
    img.put(static_cast<char>(static_cast<std::uint8_t>(std::lround(clamped * 255.0))));
  }
  put_be32(lab, kLabelMagic);
  put_be32(lab, static_cast<std::uint32_t>(data.size()));
  for (int y : data.labels) {
    require(y >= 0 && y < 256, "write_idx: label does not fit in a byte");
    lab.put(static_cast<char>(static_cast<std::uint8_t>(y)));
  }
  if (!img || !lab) throw Error("write_idx: write failed");
}

}  // namespace secl
