#pragma once

// Shared plumbing: error types, deterministic RNG helpers, hashing, small
// text utilities. Everything here is header-only and dependency-free.

#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <type_traits>
#include <vector>

namespace aot {

// ----------------------------- errors -----------------------------

struct InvalidArgument : std::runtime_error {
    explicit InvalidArgument(const std::string& msg) : std::runtime_error(msg) {}
};

struct SingularError : std::runtime_error {
    int rank;
    explicit SingularError(int achieved_rank, const std::string& msg)
        : std::runtime_error(msg), rank(achieved_rank) {}
};

struct GenerationFailure : std::runtime_error {
    explicit GenerationFailure(const std::string& msg) : std::runtime_error(msg) {}
};

struct ResourceLimit : std::runtime_error {
    explicit ResourceLimit(const std::string& msg) : std::runtime_error(msg) {}
};

struct NotInSupport : std::runtime_error {
    explicit NotInSupport(const std::string& msg) : std::runtime_error(msg) {}
};

struct UnknownSymbol : std::runtime_error {
    explicit UnknownSymbol(const std::string& msg) : std::runtime_error(msg) {}
};

// Model assigns zero probability to an outcome the true measure supports.
// Deliberately not representable as a number.
struct InfiniteLoss : std::runtime_error {
    explicit InfiniteLoss(const std::string& msg) : std::runtime_error(msg) {}
};

struct NumericFault : std::runtime_error {
    explicit NumericFault(const std::string& msg) : std::runtime_error(msg) {}
};

struct InternalConsistencyError : std::runtime_error {
    explicit InternalConsistencyError(const std::string& msg) : std::runtime_error(msg) {}
};

struct InputMissing : std::runtime_error {
    explicit InputMissing(const std::string& msg) : std::runtime_error(msg) {}
};

struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

// ----------------------------- rng -----------------------------

using Rng = std::mt19937_64;

// splitmix64; used to derive independent seed values from (seed, stream ids).
inline uint64_t splitmix64(uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

// Deterministic per-stream rng: mixes the base seed with stream indices so
// that (seed, index) pairs give independent, schedule-free streams.
inline Rng derive_rng(uint64_t seed, uint64_t stream, uint64_t substream = 0) {
    uint64_t s = splitmix64(seed ^ splitmix64(stream ^ splitmix64(substream)));
    return Rng(s);
}

// Unbiased uniform integer in [0, bound) from the raw 64-bit stream.
// std::uniform_int_distribution is implementation-defined, so we roll our
// own to keep outputs identical across standard libraries.
inline uint64_t uniform_below(Rng& rng, uint64_t bound) {
    if (bound == 0) throw InvalidArgument("uniform_below: bound must be > 0");
    uint64_t threshold = (0 - bound) % bound;  // 2^64 mod bound
    for (;;) {
        uint64_t r = rng();
        if (r >= threshold) return r % bound;
    }
}

// Uniform double in [0, 1) with 53 random bits.
inline double uniform_unit(Rng& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

// Standard normal via Box-Muller; avoids std::normal_distribution for the
// same portability reason as uniform_below.
class NormalSampler {
   public:
    double operator()(Rng& rng) {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double u1 = 0.0;
        while (u1 == 0.0) u1 = uniform_unit(rng);
        double u2 = uniform_unit(rng);
        double r = std::sqrt(-2.0 * std::log(u1));
        double theta = 6.283185307179586476925287 * u2;
        spare_ = r * std::sin(theta);
        has_spare_ = true;
        return r * std::cos(theta);
    }

   private:
    bool has_spare_ = false;
    double spare_ = 0.0;
};

// ----------------------------- hashing -----------------------------

inline constexpr uint64_t kFnvOffset = 1469598103934665603ULL;
inline constexpr uint64_t kFnvPrime = 1099511628211ULL;

inline uint64_t fnv1a(const void* data, size_t len, uint64_t h = kFnvOffset) {
    const unsigned char* p = static_cast<const unsigned char*>(data);
    for (size_t i = 0; i < len; ++i) {
        h ^= p[i];
        h *= kFnvPrime;
    }
    return h;
}

inline uint64_t fnv1a_str(const std::string& s, uint64_t h = kFnvOffset) {
    return fnv1a(s.data(), s.size(), h);
}

template <class T>
uint64_t fnv1a_vec(const std::vector<T>& v, uint64_t h = kFnvOffset) {
    static_assert(std::is_trivially_copyable_v<T>);
    return fnv1a(v.data(), v.size() * sizeof(T), h);
}

// ----------------------------- directions -----------------------------

enum class Direction { fw, bw };

inline const char* to_string(Direction d) { return d == Direction::fw ? "fw" : "bw"; }

inline Direction direction_from_string(const std::string& s) {
    if (s == "fw") return Direction::fw;
    if (s == "bw") return Direction::bw;
    throw InvalidArgument("unknown direction: " + s);
}

}  // namespace aot
