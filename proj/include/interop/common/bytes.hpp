#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace interop {

using Bytes = std::vector<std::uint8_t>;

/// Thrown when a byte stream does not follow the expected encoding.
class DecodeError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

Bytes to_bytes(std::string_view s);
std::string to_string(std::span<const std::uint8_t> b);

std::string to_hex(std::span<const std::uint8_t> b);
Bytes from_hex(std::string_view hex);

std::string base64_encode(std::span<const std::uint8_t> b);
Bytes base64_decode(std::string_view text);

/// Big-endian append-only encoder. All length prefixes are 4 bytes.
class ByteWriter {
 public:
  void u8(std::uint8_t v) { out_.push_back(v); }
  void u16(std::uint16_t v);
  void u32(std::uint32_t v);
  void u64(std::uint64_t v);
  void i64(std::int64_t v) { u64(static_cast<std::uint64_t>(v)); }
  void raw(std::span<const std::uint8_t> b) { out_.insert(out_.end(), b.begin(), b.end()); }
  void raw(std::string_view s) { out_.insert(out_.end(), s.begin(), s.end()); }
  void bytes(std::span<const std::uint8_t> b);
  void str(std::string_view s);

  const Bytes& data() const& { return out_; }
  Bytes take() && { return std::move(out_); }

 private:
  Bytes out_;
};

class ByteReader {
 public:
  explicit ByteReader(std::span<const std::uint8_t> in) : in_(in) {}

  std::uint8_t u8();
  std::uint16_t u16();
  std::uint32_t u32();
  std::uint64_t u64();
  std::int64_t i64() { return static_cast<std::int64_t>(u64()); }
  std::span<const std::uint8_t> raw(std::size_t n);
  Bytes bytes();
  std::string str();

  bool done() const { return pos_ == in_.size(); }
  std::size_t remaining() const { return in_.size() - pos_; }
  /// Throws unless every input byte was consumed.
  void expect_done() const;

 private:
  void need(std::size_t n) const;

  std::span<const std::uint8_t> in_;
  std::size_t pos_ = 0;
};

}  // namespace interop
