#pragma once

// Shared basics: path/value aliases, extended reals, error taxonomy,
// deterministic RNG helpers, numeric formatting.

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace treedro {

using Vec = std::vector<double>;   // one step value, dimension d_n
using Path = std::vector<Vec>;     // x_{1:N}

// ---------------------------------------------------------------------------
// Errors. The CLI maps ValidationError -> exit 2, CapExceededError and
// UnboundedError -> exit 1, anything else -> exit 2.
// ---------------------------------------------------------------------------

struct ValidationError : std::runtime_error {
  explicit ValidationError(const std::string& msg) : std::runtime_error(msg) {}
};

struct CapExceededError : std::runtime_error {
  explicit CapExceededError(const std::string& msg) : std::runtime_error(msg) {}
};

struct UnboundedError : std::runtime_error {
  explicit UnboundedError(const std::string& msg) : std::runtime_error(msg) {}
};

// ---------------------------------------------------------------------------
// Extended reals. +inf is carried as a flag so it never enters float
// arithmetic; all finite values are ordinary doubles.
// ---------------------------------------------------------------------------

struct ExtReal {
  double v = 0.0;
  bool inf = false;  // +infinity only; -infinity never arises here

  ExtReal() = default;
  ExtReal(double x) : v(x) {}  // NOLINT: implicit by design
  static ExtReal infinity() {
    ExtReal r;
    r.inf = true;
    return r;
  }
  bool finite() const { return !inf; }

  ExtReal operator+(const ExtReal& o) const {
    if (inf || o.inf) return infinity();
    return ExtReal(v + o.v);
  }
  bool operator<(const ExtReal& o) const {
    if (inf) return false;
    if (o.inf) return true;
    return v < o.v;
  }
  bool operator<=(const ExtReal& o) const { return !(o < *this); }
};

// ---------------------------------------------------------------------------
// Deterministic RNG. Tiny xorshift* core with explicit seeds; uniforms are
// derived from raw 53-bit draws so results do not depend on the standard
// library's distribution implementations.
// ---------------------------------------------------------------------------

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed ? seed : 0x9e3779b97f4a7c15ULL) {}

  std::uint64_t next_u64() {
    // xorshift* keeps the generator tiny and platform-stable.
    std::uint64_t x = state_;
    x ^= x >> 12;
    x ^= x << 25;
    x ^= x >> 27;
    state_ = x;
    return x * 0x2545F4914F6CDD1DULL;
  }

  double u01() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double a, double b) { return a + (b - a) * u01(); }

  // uniform integer in [lo, hi], inclusive
  int uniform_int(int lo, int hi) {
    const auto span = static_cast<std::uint64_t>(hi - lo + 1);
    return lo + static_cast<int>(next_u64() % span);
  }

 private:
  std::uint64_t state_;
};

// 12 significant digits everywhere numeric output is emitted.
std::string format_value(double x);

inline double sq(double x) { return x * x; }

}  // namespace treedro
