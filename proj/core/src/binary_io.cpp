#include "binary_io.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

#include "concept_bridge/error.hpp"

namespace concept_bridge::io {
namespace {

template <typename T>
void put_le(std::vector<char>& buf, T v) {
  for (std::size_t i = 0; i < sizeof(T); ++i) buf.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

template <typename T>
T get_le(const char* p) {
  T v = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) v |= static_cast<T>(static_cast<unsigned char>(p[i])) << (8 * i);
  return v;
}

}  // namespace

void ByteWriter::bytes(std::string_view s) { buf_.insert(buf_.end(), s.begin(), s.end()); }
void ByteWriter::u32(std::uint32_t v) { put_le(buf_, v); }
void ByteWriter::u64(std::uint64_t v) { put_le(buf_, v); }

void ByteWriter::f32s(std::span<const float> values) {
  buf_.reserve(buf_.size() + values.size() * 4);
  if constexpr (std::endian::native == std::endian::little) {
    const auto* p = reinterpret_cast<const char*>(values.data());
    buf_.insert(buf_.end(), p, p + values.size() * 4);
  } else {
    for (float f : values) put_le(buf_, std::bit_cast<std::uint32_t>(f));
  }
}

ByteReader::ByteReader(std::vector<char> data, std::string source) : data_(std::move(data)), source_(std::move(source)) {}

void ByteReader::fail(std::string_view message) const {
  throw DataError(source_ + ": " + std::string(message) + " (at byte offset " + std::to_string(pos_) + ")");
}

void ByteReader::require(std::size_t n, std::string_view what) const {
  if (remaining() < n) {
    throw DataError(source_ + ": truncated while reading " + std::string(what) + " at byte offset " +
                    std::to_string(pos_) + ": expected " + std::to_string(n) + " bytes, found " +
                    std::to_string(remaining()) + " (deficit " + std::to_string(n - remaining()) + ")");
  }
}

std::string ByteReader::bytes(std::size_t n, std::string_view what) {
  require(n, what);
  std::string out(data_.data() + pos_, n);
  pos_ += n;
  return out;
}

std::uint32_t ByteReader::u32(std::string_view what) {
  require(4, what);
  const auto v = get_le<std::uint32_t>(data_.data() + pos_);
  pos_ += 4;
  return v;
}

std::uint64_t ByteReader::u64(std::string_view what) {
  require(8, what);
  const auto v = get_le<std::uint64_t>(data_.data() + pos_);
  pos_ += 8;
  return v;
}

std::vector<float> ByteReader::f32s(std::size_t count, std::string_view what) {
  if (count > remaining() / 4) {
    const auto expected = static_cast<unsigned __int128>(count) * 4;
    const auto deficit = expected - remaining();
    auto str = [](unsigned __int128 v) {
      return v > UINT64_MAX ? std::string("> 2^64") : std::to_string(static_cast<std::uint64_t>(v));
    };
    throw DataError(source_ + ": truncated while reading " + std::string(what) + " at byte offset " +
                    std::to_string(pos_) + ": expected " + str(expected) + " bytes, found " +
                    std::to_string(remaining()) + " (deficit " + str(deficit) + ")");
  }
  std::vector<float> out(count);
  if constexpr (std::endian::native == std::endian::little) {
    std::memcpy(out.data(), data_.data() + pos_, count * 4);
  } else {
    for (std::size_t i = 0; i < count; ++i) {
      out[i] = std::bit_cast<float>(get_le<std::uint32_t>(data_.data() + pos_ + 4 * i));
    }
  }
  pos_ += count * 4;
  return out;
}

void ByteReader::expect_end() const {
  if (remaining() != 0) fail(std::to_string(remaining()) + " unexpected trailing bytes");
}

std::vector<char> read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open '" + path + "' for reading");
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file(const std::string& path, const std::vector<char>& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot open '" + path + "' for writing");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw DataError("short write to '" + path + "'");
}

void write_envelope(ByteWriter& w, std::string_view magic, std::string_view header_json) {
  w.bytes(magic);
  w.u32(kFormatVersion);
  w.u32(static_cast<std::uint32_t>(header_json.size()));
  w.bytes(header_json);
}

std::string read_envelope(ByteReader& r, std::string_view magic) {
  const std::string got = r.bytes(4, "magic");
  if (got != magic) {
    throw DataError("bad magic: expected '" + std::string(magic) + "', found '" + got + "' at byte offset 0");
  }
  const std::uint32_t version = r.u32("version");
  if (version != kFormatVersion) {
    throw DataError("unsupported format version " + std::to_string(version) + " (this build reads version " +
                    std::to_string(kFormatVersion) + ")");
  }
  const std::uint32_t len = r.u32("header length");
  return r.bytes(len, "header JSON");
}

std::string fnv1a_hex(std::span<const char> bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (char c : bytes) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i) {
    out[static_cast<std::size_t>(i)] = kHex[h & 0xF];
    h >>= 4;
  }
  return out;
}

}  // namespace concept_bridge::io
