#include "cogrid/keys.hpp"

#include "cogrid/error.hpp"

namespace cogrid {

namespace {
constexpr char kHexDigits[] = "0123456789abcdef";

int hex_value(char c) {
  if (c >= '0' && c <= '9') return c - '0';
  if (c >= 'a' && c <= 'f') return c - 'a' + 10;
  if (c >= 'A' && c <= 'F') return c - 'A' + 10;
  return -1;
}
}  // namespace

std::string hex_encode(const std::string& bytes) {
  std::string out;
  out.reserve(bytes.size() * 2);
  for (unsigned char c : bytes) {
    out.push_back(kHexDigits[c >> 4]);
    out.push_back(kHexDigits[c & 0xf]);
  }
  return out;
}

std::string hex_decode(const std::string& hex) {
  if (hex.size() % 2 != 0) throw ValidationError("hex string has odd length");
  std::string out;
  out.reserve(hex.size() / 2);
  for (size_t i = 0; i < hex.size(); i += 2) {
    int hi = hex_value(hex[i]);
    int lo = hex_value(hex[i + 1]);
    if (hi < 0 || lo < 0) throw ValidationError("invalid hex digit in: " + hex);
    out.push_back(static_cast<char>((hi << 4) | lo));
  }
  return out;
}

void Fnv1a::update(const void* data, size_t len) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (size_t i = 0; i < len; ++i) {
    state_ ^= p[i];
    state_ *= 0x100000001b3ull;
  }
}

}  // namespace cogrid
