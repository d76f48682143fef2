#include "secl/binary_io.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

#include "secl/error.hpp"

namespace secl {
namespace {

constexpr char kMagic[8] = {'S', 'E', 'C', 'L', 'S', 'T', 'A', 'T'};
constexpr std::uint32_t kVersion = 1;

}  // namespace

BinaryWriter::BinaryWriter(std::string kind) {
  buf_.insert(buf_.end(), std::begin(kMagic), std::end(kMagic));
  for (int i = 0; i < 4; ++i) buf_.push_back(static_cast<std::uint8_t>(kVersion >> (8 * i)));
  str(kind);
}

void BinaryWriter::u64(std::uint64_t v) {
  for (int i = 0; i < 8; ++i) buf_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

void BinaryWriter::f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }

void BinaryWriter::str(const std::string& s) {
  u64(s.size());
  buf_.insert(buf_.end(), s.begin(), s.end());
}

void BinaryWriter::matrix(const Matrix& m) {
  u64(m.rows());
  u64(m.cols());
  for (double v : m.values()) f64(v);
}

void BinaryWriter::doubles(const std::vector<double>& v) {
  u64(v.size());
  for (double x : v) f64(x);
}

void BinaryWriter::ints(const std::vector<int>& v) {
  u64(v.size());
  for (int x : v) i64(x);
}

void BinaryWriter::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot open " + path.string() + " for writing");
  out.write(reinterpret_cast<const char*>(buf_.data()), static_cast<std::streamsize>(buf_.size()));
  if (!out) throw Error("write failed: " + path.string());
}

BinaryReader::BinaryReader(std::vector<std::uint8_t> bytes, const std::string& expected_kind)
    : buf_(std::move(bytes)) {
  need(sizeof(kMagic) + 4);
  if (std::memcmp(buf_.data(), kMagic, sizeof(kMagic)) != 0) throw Error("state file: bad magic");
  pos_ = sizeof(kMagic);
  std::uint32_t version = 0;
  for (int i = 0; i < 4; ++i) version |= static_cast<std::uint32_t>(buf_[pos_++]) << (8 * i);
  if (version != kVersion) throw Error("state file: unsupported version " + std::to_string(version));
  const std::string kind = str();
  if (kind != expected_kind) {
    throw Error("state file: expected kind '" + expected_kind + "', found '" + kind + "'");
  }
}

BinaryReader BinaryReader::load(const std::filesystem::path& path, const std::string& expected_kind) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return BinaryReader(std::move(bytes), expected_kind);
}

void BinaryReader::need(std::size_t n) const {
  if (buf_.size() - pos_ < n) throw Error("state file: truncated");
}

std::uint64_t BinaryReader::u64() {
  need(8);
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(buf_[pos_++]) << (8 * i);
  return v;
}

double BinaryReader::f64() { return std::bit_cast<double>(u64()); }

std::string BinaryReader::str() {
  const std::uint64_t n = u64();
  need(n);
  std::string s(buf_.begin() + static_cast<std::ptrdiff_t>(pos_),
                buf_.begin() + static_cast<std::ptrdiff_t>(pos_ + n));
  pos_ += n;
  return s;
}

Matrix BinaryReader::matrix() {
  const std::uint64_t r = u64();
  const std::uint64_t c = u64();
  if (c != 0 && r > (buf_.size() - pos_) / 8 / c) throw Error("state file: truncated");
  std::vector<double> data(r * c);
  for (double& v : data) v = f64();
  return Matrix(r, c, std::move(data));
}

std::vector<double> BinaryReader::doubles() {
  const std::uint64_t n = u64();
  if (n > (buf_.size() - pos_) / 8) throw Error("state file: truncated");
  std::vector<double> v(n);
  for (double& x : v) x = f64();
  return v;
}

std::vector<int> BinaryReader::ints() {
  const std::uint64_t n = u64();
  if (n > (buf_.size() - pos_) / 8) throw Error("state file: truncated");
  std::vector<int> v(n);
  for (int& x : v) x = static_cast<int>(i64());
  return v;
}

std::uint64_t checksum(const std::vector<const Matrix*>& mats) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const Matrix* m : mats) {
    for (double v : m->values()) {
      std::uint64_t bits = std::bit_cast<std::uint64_t>(v);
      for (int i = 0; i < 8; ++i) {
        h ^= (bits >> (8 * i)) & 0xff;
        h *= 0x100000001b3ULL;
      }
    }
  }
  return h;
}

}  // namespace secl
