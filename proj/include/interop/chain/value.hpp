#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>

#include "interop/common/bytes.hpp"

namespace interop::chain {

enum class ValueType : std::uint8_t { Null = 0, Bool = 1, Int = 2, Str = 3, Bytes = 4 };

std::string_view type_name(ValueType t);

class TypeMismatch : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Scalar stored in contract state: Null | Bool | Int64 | Str | Bytes.
class Value {
 public:
  Value() = default;

  static Value null() { return {}; }
  static Value boolean(bool b) { return Value(Repr(b)); }
  static Value integer(std::int64_t i) { return Value(Repr(i)); }
  static Value string(std::string s) { return Value(Repr(std::move(s))); }
  static Value bytes(interop::Bytes b) { return Value(Repr(std::move(b))); }

  ValueType type() const { return static_cast<ValueType>(repr_.index()); }
  bool is_null() const { return type() == ValueType::Null; }
  bool is_bool() const { return type() == ValueType::Bool; }
  bool is_int() const { return type() == ValueType::Int; }
  bool is_str() const { return type() == ValueType::Str; }
  bool is_bytes() const { return type() == ValueType::Bytes; }

  // Accessors throw TypeMismatch on the wrong alternative.
  bool as_bool() const;
  std::int64_t as_int() const;
  const std::string& as_str() const;
  const interop::Bytes& as_bytes() const;

  /// Human-readable form used in logs and error messages.
  std::string debug_string() const;

  bool operator==(const Value&) const = default;

 private:
  using Repr = std::variant<std::monostate, bool, std::int64_t, std::string, interop::Bytes>;
  explicit Value(Repr r) : repr_(std::move(r)) {}

  Repr repr_;
};

/// Canonical encoding: tag byte, then 1 byte for Bool, 8 bytes big-endian for
/// Int, or a 4-byte big-endian length plus payload for Str and Bytes.
void encode_value(ByteWriter& w, const Value& v);
interop::Bytes encode_value(const Value& v);
/// Strict decoder: rejects unknown tags and non-canonical Bool payloads.
Value decode_value(ByteReader& r);
Value decode_value(std::span<const std::uint8_t> b);

}  // namespace interop::chain
