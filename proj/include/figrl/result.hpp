#pragma once

#include <cassert>
#include <utility>
#include <variant>

namespace figrl {

// Minimal expected-like carrier for operations whose failures are data
// rather than exceptional conditions (parse errors, per-item transport
// failures). Contract violations throw instead.
template <typename T, typename E>
class Result {
 public:
  Result(T value) : v_(std::move(value)) {}
  Result(E error) : v_(std::move(error)) {}

  bool ok() const { return std::holds_alternative<T>(v_); }
  explicit operator bool() const { return ok(); }

  const T& value() const& {
    assert(ok());
    return std::get<T>(v_);
  }
  T&& value() && {
    assert(ok());
    return std::get<T>(std::move(v_));
  }
  const E& error() const {
    assert(!ok());
    return std::get<E>(v_);
  }

 private:
  std::variant<T, E> v_;
};

}  // namespace figrl
