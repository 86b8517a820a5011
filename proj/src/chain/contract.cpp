#include "interop/chain/contract.hpp"

namespace interop::chain {

policy::AccessRequest Contract::access_request(const std::string& method, const std::vector<Value>& args,
                                               const CallerRef&) const {
  policy::AccessRequest req;
  req.action = policy::Action::Invoke;
  req.resource = method;
  req.args = args;
  return req;
}

const Value& arg(const std::vector<Value>& args, std::size_t i) {
  if (i >= args.size()) throw ContractFailure("BadArgs", "missing argument " + std::to_string(i));
  return args[i];
}

std::int64_t arg_int(const std::vector<Value>& args, std::size_t i) {
  const Value& v = arg(args, i);
  if (!v.is_int()) throw ContractFailure("BadArgs", "argument " + std::to_string(i) + " must be int");
  return v.as_int();
}

const std::string& arg_str(const std::vector<Value>& args, std::size_t i) {
  const Value& v = arg(args, i);
  if (!v.is_str()) throw ContractFailure("BadArgs", "argument " + std::to_string(i) + " must be str");
  return v.as_str();
}

Bytes encode_call(const std::string& method, const std::vector<Value>& args) {
  ByteWriter w;
  w.str(method);
  w.u32(static_cast<std::uint32_t>(args.size()));
  for (const auto& a : args) encode_value(w, a);
  return std::move(w).take();
}

std::pair<std::string, std::vector<Value>> decode_call(std::span<const std::uint8_t> payload) {
  ByteReader r(payload);
  auto method = r.str();
  const auto n = r.u32();
  if (n > r.remaining()) throw DecodeError("argument count exceeds input");
  std::vector<Value> args;
  for (std::uint32_t i = 0; i < n; ++i) args.push_back(decode_value(r));
  r.expect_done();
  return {std::move(method), std::move(args)};
}

}  // namespace interop::chain
