#include "interop/chain/value.hpp"

namespace interop::chain {

std::string_view type_name(ValueType t) {
  switch (t) {
    case ValueType::Null: return "null";
    case ValueType::Bool: return "bool";
    case ValueType::Int: return "int";
    case ValueType::Str: return "str";
    case ValueType::Bytes: return "bytes";
  }
  return "?";
}

namespace {

[[noreturn]] void mismatch(ValueType want, ValueType got) {
  throw TypeMismatch("expected " + std::string(type_name(want)) + ", got " +
                     std::string(type_name(got)));
}

}  // namespace

bool Value::as_bool() const {
  if (!is_bool()) mismatch(ValueType::Bool, type());
  return std::get<bool>(repr_);
}

std::int64_t Value::as_int() const {
  if (!is_int()) mismatch(ValueType::Int, type());
  return std::get<std::int64_t>(repr_);
}

const std::string& Value::as_str() const {
  if (!is_str()) mismatch(ValueType::Str, type());
  return std::get<std::string>(repr_);
}

const interop::Bytes& Value::as_bytes() const {
  if (!is_bytes()) mismatch(ValueType::Bytes, type());
  return std::get<interop::Bytes>(repr_);
}

std::string Value::debug_string() const {
  switch (type()) {
    case ValueType::Null: return "null";
    case ValueType::Bool: return as_bool() ? "true" : "false";
    case ValueType::Int: return std::to_string(as_int());
    case ValueType::Str: return "\"" + as_str() + "\"";
    case ValueType::Bytes: return "0x" + to_hex(as_bytes());
  }
  return "?";
}

void encode_value(ByteWriter& w, const Value& v) {
  w.u8(static_cast<std::uint8_t>(v.type()));
  switch (v.type()) {
    case ValueType::Null: break;
    case ValueType::Bool: w.u8(v.as_bool() ? 1 : 0); break;
    case ValueType::Int: w.i64(v.as_int()); break;
    case ValueType::Str: w.str(v.as_str()); break;
    case ValueType::Bytes: w.bytes(v.as_bytes()); break;
  }
}

interop::Bytes encode_value(const Value& v) {
  ByteWriter w;
  encode_value(w, v);
  return std::move(w).take();
}

Value decode_value(ByteReader& r) {
  switch (r.u8()) {
    case 0: return Value::null();
    case 1: {
      const auto b = r.u8();
      if (b > 1) throw DecodeError("non-canonical bool payload");
      return Value::boolean(b == 1);
    }
    case 2: return Value::integer(r.i64());
    case 3: return Value::string(r.str());
    case 4: return Value::bytes(r.bytes());
    default: throw DecodeError("unknown value tag");
  }
}

Value decode_value(std::span<const std::uint8_t> b) {
  ByteReader r(b);
  auto v = decode_value(r);
  r.expect_done();
  return v;
}

}  // namespace interop::chain
