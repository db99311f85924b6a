#pragma once

// Little-endian envelope helpers shared by the .acts, .feat and .sae formats:
//   magic[4] | version u32 | header_len u32 | header JSON | payload...

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace concept_bridge::io {

inline constexpr std::uint32_t kFormatVersion = 1;

class ByteWriter {
 public:
  void bytes(std::string_view s);
  void u32(std::uint32_t v);
  void u64(std::uint64_t v);
  void f32s(std::span<const float> values);
  const std::vector<char>& buffer() const { return buf_; }

 private:
  std::vector<char> buf_;
};

/// Cursor over a whole file; every read checks the remaining length and
/// throws DataError naming the offset and the byte deficit.
class ByteReader {
 public:
  ByteReader(std::vector<char> data, std::string source);

  std::string bytes(std::size_t n, std::string_view what);
  std::uint32_t u32(std::string_view what);
  std::uint64_t u64(std::string_view what);
  std::vector<float> f32s(std::size_t count, std::string_view what);
  std::size_t offset() const { return pos_; }
  std::size_t remaining() const { return data_.size() - pos_; }
  /// Throws if unread bytes remain.
  void expect_end() const;
  [[noreturn]] void fail(std::string_view message) const;

 private:
  void require(std::size_t n, std::string_view what) const;

  std::vector<char> data_;
  std::string source_;
  std::size_t pos_ = 0;
};

std::vector<char> read_file(const std::string& path);
void write_file(const std::string& path, const std::vector<char>& bytes);

void write_envelope(ByteWriter& w, std::string_view magic, std::string_view header_json);
/// Validates magic and version, returns the header JSON text.
std::string read_envelope(ByteReader& r, std::string_view magic);

/// FNV-1a 64-bit, lowercase hex.
std::string fnv1a_hex(std::span<const char> bytes);

}  // namespace concept_bridge::io
