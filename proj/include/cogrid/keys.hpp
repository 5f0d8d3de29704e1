#ifndef COGRID_KEYS_HPP
#define COGRID_KEYS_HPP

#include <cstdint>
#include <optional>
#include <string>

namespace cogrid {

// Rowkeys are raw byte strings compared lexicographically.
using RowKey = std::string;

// Smallest key strictly greater than `key`.
inline RowKey key_successor(const RowKey& key) {
  RowKey next = key;
  next.push_back('\0');
  return next;
}

std::string hex_encode(const std::string& bytes);
std::string hex_decode(const std::string& hex);

// 64-bit FNV-1a, used for order-independent content digests over sorted scans.
class Fnv1a {
 public:
  void update(const void* data, size_t len);
  void update(const std::string& s) { update(s.data(), s.size()); }
  uint64_t value() const { return state_; }

 private:
  uint64_t state_ = 0xcbf29ce484222325ull;
};

}  // namespace cogrid

#endif  // COGRID_KEYS_HPP
