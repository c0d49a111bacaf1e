#pragma once

// Deterministic random streams.
//
// Every random draw in the library flows through SplitMix64.  It is a
// counter-based generator: the state advances by a fixed increment and the
// output is a bijective hash of the counter, so a stream can be re-created
// from its seed alone, with no warm-up and no hidden state.  Streams for a
// given (seed, index, stream_id) triple are derived by hashing the three
// words together, which lets any round of a simulation be replayed in
// isolation and keeps results independent of evaluation order.
//
// The standard <random> distributions are deliberately avoided: their output
// sequences are implementation-defined, and run artifacts here are promised
// to be bit-reproducible.

#include <cstdint>
#include <cmath>
#include <vector>

#include "persalign/errors.hpp"

namespace persalign {

// Finalizer from the SplitMix64 output function (Steele, Lea, Flood 2014).
inline std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  // Stream derivation: hash-chain the three words so that nearby
  // (seed, index) pairs land in unrelated parts of the state space.
  static Rng stream(std::uint64_t seed, std::uint64_t index,
                    std::uint64_t stream_id) {
    std::uint64_t s = mix64(seed + kGolden);
    s = mix64(s ^ (index + kGolden));
    s = mix64(s ^ (stream_id + kGolden));
    return Rng(s);
  }

  std::uint64_t next_u64() {
    state_ += kGolden;
    return mix64(state_);
  }

  // Uniform on [0, 1), 53-bit resolution.
  double next_double() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  // Uniform on (0, 1]; safe as a log argument.
  double next_double_pos() {
    return static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53;
  }

  // Standard normal via Box-Muller; the sine partner is cached.
  double next_normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    const double u1 = next_double_pos();
    const double u2 = next_double();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double theta = 2.0 * kPi * u2;
    spare_ = r * std::sin(theta);
    has_spare_ = true;
    return r * std::cos(theta);
  }

  // Uniform integer in [0, n).  Fixed-point multiply; the bias of at most
  // n / 2^64 is far below anything observable here.
  std::uint64_t next_below(std::uint64_t n) {
    if (n == 0) throw IndexOutOfRange("next_below: n must be positive");
    return static_cast<std::uint64_t>(
        (static_cast<unsigned __int128>(next_u64()) * n) >> 64);
  }

  // Categorical draw by CDF scan.  Weights must be nonnegative; they need
  // not be normalized.
  int next_categorical(const double* w, int n) {
    double total = 0.0;
    for (int i = 0; i < n; ++i) total += w[i];
    if (!(total > 0.0)) {
      throw NumericalFailure("next_categorical: weights sum to zero");
    }
    const double r = next_double() * total;
    double acc = 0.0;
    for (int i = 0; i < n; ++i) {
      acc += w[i];
      if (r < acc) return i;
    }
    return n - 1;  // guard against rounding in the final partial sum
  }

  int next_categorical(const std::vector<double>& w) {
    return next_categorical(w.data(), static_cast<int>(w.size()));
  }

 private:
  static constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ull;
  static constexpr double kPi = 3.14159265358979323846;

  std::uint64_t state_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

// Stream ids used across the library.  Kept in one place so no two call
// sites can collide.
namespace stream_id {
constexpr std::uint64_t kInstance = 1;    // instance construction draws
constexpr std::uint64_t kArrival = 2;     // (user, context) arrivals
constexpr std::uint64_t kSlate = 3;       // slate composition
constexpr std::uint64_t kChoice = 4;      // preference labels
constexpr std::uint64_t kTest = 100;      // scratch streams inside tests
}  // namespace stream_id

}  // namespace persalign
