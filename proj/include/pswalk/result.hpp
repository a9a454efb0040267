#pragma once

#include <cassert>
#include <string>
#include <utility>
#include <variant>

namespace pswalk {

// Minimal value-or-error carrier. Domain errors are ordinary return values,
// never exceptions; callers branch on ok().
template <class T, class E>
class Result {
 public:
  Result(T v) : data_(std::in_place_index<0>, std::move(v)) {}
  Result(E e) : data_(std::in_place_index<1>, std::move(e)) {}

  bool ok() const { return data_.index() == 0; }
  explicit operator bool() const { return ok(); }

  const T& value() const {
    assert(ok());
    return std::get<0>(data_);
  }
  T& value() {
    assert(ok());
    return std::get<0>(data_);
  }
  const E& error() const {
    assert(!ok());
    return std::get<1>(data_);
  }

 private:
  std::variant<T, E> data_;
};

}  // namespace pswalk
