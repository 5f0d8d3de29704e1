#ifndef COGRID_ERROR_HPP
#define COGRID_ERROR_HPP

#include <stdexcept>
#include <string>

namespace cogrid {

// Bad arguments, malformed files, out-of-range parameters.
class ValidationError : public std::runtime_error {
 public:
  explicit ValidationError(const std::string& msg) : std::runtime_error(msg) {}
};

// Existing state disagrees with the requested state (e.g. schema mismatch).
class ConflictError : public std::runtime_error {
 public:
  explicit ConflictError(const std::string& msg) : std::runtime_error(msg) {}
};

// Single-key lookups that miss. Distinct from an empty range, which succeeds.
class NotFoundError : public std::runtime_error {
 public:
  explicit NotFoundError(const std::string& msg) : std::runtime_error(msg) {}
};

// On-disk state is inconsistent with metadata.
class IntegrityError : public std::runtime_error {
 public:
  explicit IntegrityError(const std::string& msg) : std::runtime_error(msg) {}
};

// Another operation holds the store lock.
class BusyError : public std::runtime_error {
 public:
  explicit BusyError(const std::string& msg) : std::runtime_error(msg) {}
};

// Model bounds cannot be satisfied (lower > upper).
class InfeasibleError : public std::runtime_error {
 public:
  explicit InfeasibleError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace cogrid

#endif  // COGRID_ERROR_HPP
