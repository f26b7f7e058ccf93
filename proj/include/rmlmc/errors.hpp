#pragma once

#include <stdexcept>
#include <string>

namespace rmlmc {

// Bad shapes, non-monotone inputs, out-of-range arguments.
class InputError : public std::invalid_argument {
public:
  explicit InputError(const std::string& what) : std::invalid_argument(what) {}
};

// A caller broke a runtime contract (e.g. a bundle shorter than the
// sampled truncation level, or identical RNG streams where independence
// is required).
class ContractViolation : public std::logic_error {
public:
  explicit ContractViolation(const std::string& what) : std::logic_error(what) {}
};

// A moment profile came out flat or non-positive, so no schedule exists.
class DegenerateProfileError : public std::runtime_error {
public:
  explicit DegenerateProfileError(const std::string& what) : std::runtime_error(what) {}
};

// A configured work budget was exhausted mid-run.
class ResourceCapError : public std::runtime_error {
public:
  explicit ResourceCapError(const std::string& what) : std::runtime_error(what) {}
};

} // namespace rmlmc
