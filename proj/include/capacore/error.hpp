#pragma once

#include <stdexcept>
#include <string>
#include <utility>
#include <variant>

namespace capacore {

// Raised for invalid arguments and malformed inputs. The CLI maps it to exit code 2.
class UsageError : public std::invalid_argument {
 public:
  explicit UsageError(const std::string& what) : std::invalid_argument(what) {}
};

// Raised when an exhaustive oracle would exceed its enumeration cap (exit code 4).
class OracleCapError : public std::runtime_error {
 public:
  explicit OracleCapError(const std::string& what) : std::runtime_error(what) {}
};

// Every guess o FAILed (exit code 3).
class FailError : public std::runtime_error {
 public:
  explicit FailError(const std::string& what) : std::runtime_error(what) {}
};

// FAIL is an ordinary outcome of the randomized builders, not an exception.
struct Fail {
  std::string reason;
};

template <typename T>
using OrFail = std::variant<T, Fail>;

template <typename T>
bool failed(const OrFail<T>& v) {
  return std::holds_alternative<Fail>(v);
}

template <typename T>
const T& value_of(const OrFail<T>& v) {
  if (const auto* f = std::get_if<Fail>(&v)) throw std::logic_error("value_of on FAIL: " + f->reason);
  return std::get<T>(v);
}

template <typename T>
T&& value_of(OrFail<T>&& v) {
  if (const auto* f = std::get_if<Fail>(&v)) throw std::logic_error("value_of on FAIL: " + f->reason);
  return std::get<T>(std::move(v));
}

inline void require(bool cond, const std::string& msg) {
  if (!cond) throw UsageError(msg);
}

}  // namespace capacore
