#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>

namespace hint {

// ---------------------------------------------------------------------------
// Errors
// ---------------------------------------------------------------------------

/// Malformed input data. Carries the source path and 1-based line number
/// when they are known (line 0 = not line-addressable).
class ParseError : public std::runtime_error {
 public:
  ParseError(std::string path, std::size_t line, const std::string& what)
      : std::runtime_error(line > 0 ? path + ":" + std::to_string(line) + ": " + what
                                    : path + ": " + what),
        path_(std::move(path)),
        line_(line) {}

  const std::string& path() const { return path_; }
  std::size_t line() const { return line_; }

 private:
  std::string path_;
  std::size_t line_;
};

/// Non-finite values or other numeric breakdown during computation.
class NumericError : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// A referenced entity (query id, document id, file) does not exist.
class NotFoundError : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// Hashing
// ---------------------------------------------------------------------------

inline std::uint64_t fnv1a64(std::string_view s,
                             std::uint64_t h = 0xcbf29ce484222325ULL) {
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::uint64_t hash_combine(std::uint64_t a, std::uint64_t b) {
  std::uint64_t x = a ^ (b + 0x9e3779b97f4a7c15ULL + (a << 6) + (a >> 2));
  x ^= x >> 30;
  x *= 0xbf58476d1ce4e5b9ULL;
  x ^= x >> 27;
  x *= 0x94d049bb133111ebULL;
  x ^= x >> 31;
  return x;
}

// ---------------------------------------------------------------------------
// Deterministic RNG (splitmix64)
// ---------------------------------------------------------------------------

/// Small deterministic generator. The same seed gives the same stream on
/// every platform; split() derives independent streams by purpose so adding
/// a new consumer does not shift existing ones.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64() {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  /// Uniform draw from the open interval (0, 1).
  double next_unit() {
    return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
  }

  /// Uniform draw from the open interval (lo, hi).
  double uniform(double lo, double hi) { return lo + (hi - lo) * next_unit(); }

  /// Unbiased draw from {0, ..., n-1}.
  std::uint64_t next_below(std::uint64_t n) {
    if (n == 0) return 0;
    std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % n);
    std::uint64_t v;
    do {
      v = next_u64();
    } while (v >= limit);
    return v % n;
  }

  /// Derives an independent stream keyed by a purpose label.
  Rng split(std::string_view purpose) const {
    return Rng(hash_combine(state_, fnv1a64(purpose)));
  }

 private:
  std::uint64_t state_;
};

// ---------------------------------------------------------------------------
// Small file helpers
// ---------------------------------------------------------------------------

/// Whole-file read; throws NotFoundError if the file cannot be opened.
std::string read_file(const std::string& path);

/// Whole-file write; throws std::runtime_error on failure.
void write_file(const std::string& path, std::string_view content);

}  // namespace hint
