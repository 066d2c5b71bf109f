#pragma once

#include <cstdint>
#include <string>

#include "menshov/errors.hpp"

namespace menshov::checked {

inline std::int64_t mul(std::int64_t a, std::int64_t b) {
  std::int64_t out;
  if (__builtin_mul_overflow(a, b, &out)) {
    throw OverflowError("int64 overflow in " + std::to_string(a) + " * " + std::to_string(b));
  }
  return out;
}

inline std::int64_t add(std::int64_t a, std::int64_t b) {
  std::int64_t out;
  if (__builtin_add_overflow(a, b, &out)) {
    throw OverflowError("int64 overflow in " + std::to_string(a) + " + " + std::to_string(b));
  }
  return out;
}

inline std::int64_t sub(std::int64_t a, std::int64_t b) {
  std::int64_t out;
  if (__builtin_sub_overflow(a, b, &out)) {
    throw OverflowError("int64 overflow in " + std::to_string(a) + " - " + std::to_string(b));
  }
  return out;
}

inline std::int64_t pow(std::int64_t base, int exp) {
  std::int64_t out = 1;
  for (int i = 0; i < exp; ++i) out = mul(out, base);
  return out;
}

}  // namespace menshov::checked
