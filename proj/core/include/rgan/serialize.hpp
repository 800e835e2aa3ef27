#pragma once

#include <cstdint>
#include <cstring>
#include <filesystem>
#include <string>
#include <vector>

#include "rgan/error.hpp"

namespace rgan {

// FNV-1a 64-bit. Used for parameter checksums, config hashes and file
// integrity footers. Not cryptographic; collision resistance is not a goal.
uint64_t fnv1a64(const void* data, size_t n, uint64_t seed = 0xcbf29ce484222325ULL);
uint64_t fnv1a64(const std::string& s);

// Little-endian binary writer with a running FNV footer. All persisted
// formats (checkpoints, feature stats, sample sidecars) go through this so
// save -> load -> save is byte-identical.
class BinaryWriter {
 public:
  void u8(uint8_t v) { raw(&v, 1); }
  void u32(uint32_t v);
  void u64(uint64_t v);
  void i64(int64_t v);
  void f64(double v);
  void str(const std::string& s);
  void f64_span(const double* p, size_t n);
  void f64_vec(const std::vector<double>& v);
  void u32_vec(const std::vector<uint32_t>& v);

  const std::vector<uint8_t>& bytes() const { return buf_; }
  uint64_t checksum() const { return fnv1a64(buf_.data(), buf_.size()); }

  // Writes payload + 8-byte FNV footer atomically (temp file + rename).
  void write_file(const std::filesystem::path& path) const;

 private:
  void raw(const void* p, size_t n);
  std::vector<uint8_t> buf_;
};

class BinaryReader {
 public:
  explicit BinaryReader(std::vector<uint8_t> bytes) : buf_(std::move(bytes)) {}

  // Loads a file written by BinaryWriter::write_file and verifies the footer.
  static BinaryReader from_file(const std::filesystem::path& path);

  uint8_t u8();
  uint32_t u32();
  uint64_t u64();
  int64_t i64();
  double f64();
  std::string str();
  std::vector<double> f64_vec();
  std::vector<uint32_t> u32_vec();
  void f64_into(double* p, size_t n);

  bool at_end() const { return pos_ == buf_.size(); }
  // Checksum of the payload (as verified against the footer).
  uint64_t payload_checksum() const { return fnv1a64(buf_.data(), buf_.size()); }

 private:
  void raw(void* p, size_t n);
  std::vector<uint8_t> buf_;
  size_t pos_ = 0;
};

// Atomic small-text write (temp + rename); the CLI uses it for JSON outputs.
void write_text_atomic(const std::filesystem::path& path, const std::string& text);

}  // namespace rgan
