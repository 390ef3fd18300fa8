#ifndef OCTFOREST_COMMON_HPP
#define OCTFOREST_COMMON_HPP

#include <cstdint>
#include <cstddef>
#include <stdexcept>
#include <string>

namespace octforest {

/// Thrown on violated preconditions of public operations.
class contract_error : public std::logic_error {
 public:
  explicit contract_error(const std::string& what) : std::logic_error(what) {}
};

namespace detail {
[[noreturn]] inline void contract_fail(const char* cond, const char* file, int line) {
  throw contract_error(std::string("contract violation: ") + cond + " at " + file + ":" +
                       std::to_string(line));
}
}  // namespace detail

#define OF_CHECK(cond)                                          \
  do {                                                          \
    if (!(cond)) ::octforest::detail::contract_fail(#cond, __FILE__, __LINE__); \
  } while (0)

#ifndef NDEBUG
#define OF_ASSERT(cond) OF_CHECK(cond)
#else
#define OF_ASSERT(cond) ((void)0)
#endif

/// FNV-1a, used for stable output hashing and seeded predicates.
inline uint64_t fnv1a(const void* data, size_t n, uint64_t h = 0xcbf29ce484222325ull) {
  const unsigned char* p = static_cast<const unsigned char*>(data);
  for (size_t i = 0; i < n; ++i) {
    h ^= p[i];
    h *= 0x100000001b3ull;
  }
  return h;
}

inline uint64_t hash_combine(uint64_t h, uint64_t v) { return fnv1a(&v, sizeof v, h); }

/// Deterministic 64-bit mixer (splitmix64 finalizer); used instead of the
/// standard distributions so seeded runs are identical across platforms.
inline uint64_t mix64(uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

/// Small deterministic RNG for tests and demo drivers.
class Rng {
 public:
  explicit Rng(uint64_t seed) : state_(seed ? seed : 1) {}
  uint64_t next() {
    state_ = mix64(state_ + 0x632be59bd9b4e019ull);
    return state_;
  }
  /// Uniform in [0, n).
  uint64_t below(uint64_t n) { return n ? next() % n : 0; }
  double unit() { return double(next() >> 11) * (1.0 / 9007199254740992.0); }

 private:
  uint64_t state_;
};

}  // namespace octforest

#endif
