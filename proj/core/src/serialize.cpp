#include "rgan/serialize.hpp"

#include <bit>
#include <fstream>

namespace rgan {

static_assert(std::endian::native == std::endian::little,
              "persisted formats assume a little-endian host");

uint64_t fnv1a64(const void* data, size_t n, uint64_t seed) {
  const auto* p = static_cast<const uint8_t*>(data);
  uint64_t h = seed;
  for (size_t i = 0; i < n; ++i) {
    h ^= p[i];
    h *= 0x100000001b3ULL;
  }
  return h;
}

uint64_t fnv1a64(const std::string& s) { return fnv1a64(s.data(), s.size()); }

void BinaryWriter::raw(const void* p, size_t n) {
  const auto* b = static_cast<const uint8_t*>(p);
  buf_.insert(buf_.end(), b, b + n);
}

void BinaryWriter::u32(uint32_t v) { raw(&v, sizeof v); }
void BinaryWriter::u64(uint64_t v) { raw(&v, sizeof v); }
void BinaryWriter::i64(int64_t v) { raw(&v, sizeof v); }
void BinaryWriter::f64(double v) { raw(&v, sizeof v); }

void BinaryWriter::str(const std::string& s) {
  u64(s.size());
  raw(s.data(), s.size());
}

void BinaryWriter::f64_span(const double* p, size_t n) {
  u64(n);
  raw(p, n * sizeof(double));
}

void BinaryWriter::f64_vec(const std::vector<double>& v) { f64_span(v.data(), v.size()); }

void BinaryWriter::u32_vec(const std::vector<uint32_t>& v) {
  u64(v.size());
  raw(v.data(), v.size() * sizeof(uint32_t));
}

void BinaryWriter::write_file(const std::filesystem::path& path) const {
  namespace fs = std::filesystem;
  const uint64_t footer = checksum();
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    require(out.good(), ErrorCategory::io, "cannot open for write: " + tmp.string());
    out.write(reinterpret_cast<const char*>(buf_.data()),
              static_cast<std::streamsize>(buf_.size()));
    out.write(reinterpret_cast<const char*>(&footer), sizeof footer);
    require(out.good(), ErrorCategory::io, "write failed: " + tmp.string());
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  require(!ec, ErrorCategory::io, "rename failed: " + path.string() + " (" + ec.message() + ")");
}

BinaryReader BinaryReader::from_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary | std::ios::ate);
  require(in.good(), ErrorCategory::io, "cannot open: " + path.string());
  const auto size = static_cast<size_t>(in.tellg());
  require(size >= sizeof(uint64_t), ErrorCategory::integrity,
          "file too short: " + path.string());
  in.seekg(0);
  std::vector<uint8_t> bytes(size);
  in.read(reinterpret_cast<char*>(bytes.data()), static_cast<std::streamsize>(size));
  require(in.good(), ErrorCategory::io, "read failed: " + path.string());

  uint64_t footer;
  std::memcpy(&footer, bytes.data() + size - sizeof footer, sizeof footer);
  bytes.resize(size - sizeof footer);
  require(fnv1a64(bytes.data(), bytes.size()) == footer, ErrorCategory::integrity,
          "checksum mismatch (corrupted file?): " + path.string());
  return BinaryReader(std::move(bytes));
}

void BinaryReader::raw(void* p, size_t n) {
  require(pos_ + n <= buf_.size(), ErrorCategory::integrity, "truncated payload");
  std::memcpy(p, buf_.data() + pos_, n);
  pos_ += n;
}

uint8_t BinaryReader::u8() { uint8_t v; raw(&v, sizeof v); return v; }
uint32_t BinaryReader::u32() { uint32_t v; raw(&v, sizeof v); return v; }
uint64_t BinaryReader::u64() { uint64_t v; raw(&v, sizeof v); return v; }
int64_t BinaryReader::i64() { int64_t v; raw(&v, sizeof v); return v; }
double BinaryReader::f64() { double v; raw(&v, sizeof v); return v; }

std::string BinaryReader::str() {
  const uint64_t n = u64();
  std::string s(n, '\0');
  raw(s.data(), n);
  return s;
}

std::vector<double> BinaryReader::f64_vec() {
  const uint64_t n = u64();
  std::vector<double> v(n);
  raw(v.data(), n * sizeof(double));
  return v;
}

std::vector<uint32_t> BinaryReader::u32_vec() {
  const uint64_t n = u64();
  std::vector<uint32_t> v(n);
  raw(v.data(), n * sizeof(uint32_t));
  return v;
}

void BinaryReader::f64_into(double* p, size_t n) {
  const uint64_t stored = u64();
  require(stored == n, ErrorCategory::integrity, "tensor size mismatch in payload");
  raw(p, n * sizeof(double));
}

void write_text_atomic(const std::filesystem::path& path, const std::string& text) {
  namespace fs = std::filesystem;
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    require(out.good(), ErrorCategory::io, "cannot open for write: " + tmp.string());
    out << text;
    require(out.good(), ErrorCategory::io, "write failed: " + tmp.string());
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  require(!ec, ErrorCategory::io, "rename failed: " + path.string());
}

}  // namespace rgan
