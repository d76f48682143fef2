#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "secl/matrix.hpp"

namespace secl {

/// Writer for the state container used by run directories.
///
/// Layout (all integers little-endian):
///   bytes 0..7   magic "SECLSTAT"
///   u32          format version (1)
///   str          payload kind, e.g. "backbone"
///   ...          payload fields in the order the owning type writes them
/// where str = u64 length + raw bytes, f64 = IEEE-754 bit pattern as u64, and
/// a matrix = u64 rows, u64 cols, rows*cols f64 values in row-major order.
/// Doubles are stored by bit pattern, so a round trip is exact.
class BinaryWriter {
 public:
  explicit BinaryWriter(std::string kind);

  void u64(std::uint64_t v);
  void i64(std::int64_t v) { u64(static_cast<std::uint64_t>(v)); }
  void f64(double v);
  void str(const std::string& s);
  void matrix(const Matrix& m);
  void doubles(const std::vector<double>& v);
  void ints(const std::vector<int>& v);

  const std::vector<std::uint8_t>& bytes() const { return buf_; }
  void save(const std::filesystem::path& path) const;

 private:
  std::vector<std::uint8_t> buf_;
};

class BinaryReader {
 public:
  /// Checks magic, version and kind.
  BinaryReader(std::vector<std::uint8_t> bytes, const std::string& expected_kind);
  static BinaryReader load(const std::filesystem::path& path, const std::string& expected_kind);

  std::uint64_t u64();
  std::int64_t i64() { return static_cast<std::int64_t>(u64()); }
  double f64();
  std::string str();
  Matrix matrix();
  std::vector<double> doubles();
  std::vector<int> ints();

  bool at_end() const { return pos_ == buf_.size(); }

 private:
  void need(std::size_t n) const;

  std::vector<std::uint8_t> buf_;
  std::size_t pos_ = 0;
};

/// FNV-1a over the bit patterns of every value; used to verify that frozen
/// parameters never change.
std::uint64_t checksum(const std::vector<const Matrix*>& mats);

}  // namespace secl
