#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdint>
#include <vector>

#include "persalign/errors.hpp"
#include "persalign/rng.hpp"

using namespace persalign;

TEST_CASE("splitmix64 matches the published reference sequence") {
  // First outputs for seed 0 from the Steele/Lea/Flood reference code.
  Rng r(0);
  CHECK(r.next_u64() == 0xe220a8397b1dcdafull);
  CHECK(r.next_u64() == 0x6e789e6aa1b965f4ull);
  CHECK(r.next_u64() == 0x06c45d188009454full);

  Rng r2(1234567);
  CHECK(r2.next_u64() == 0x599ed017fb08fc85ull);
  CHECK(r2.next_u64() == 0x2c73f08458540fa5ull);
  CHECK(r2.next_u64() == 0x883ebce5a3f27c77ull);
}

TEST_CASE("stream derivation is a fixed hash chain") {
  // Recomputed independently: chain mix64 over seed, index, stream id.
  Rng s = Rng::stream(42, 7, 100);
  CHECK(s.next_u64() == 0xca57116725ca5b43ull);
  CHECK(s.next_u64() == 0x77b90e2b9b0e0a4aull);
}

TEST_CASE("identical seeds replay identical sequences") {
  Rng a = Rng::stream(9, 3, stream_id::kArrival);
  Rng b = Rng::stream(9, 3, stream_id::kArrival);
  for (int i = 0; i < 1000; ++i) CHECK(a.next_u64() == b.next_u64());
}

TEST_CASE("distinct stream ids decorrelate") {
  Rng a = Rng::stream(9, 3, stream_id::kArrival);
  Rng b = Rng::stream(9, 3, stream_id::kChoice);
  int equal = 0;
  for (int i = 0; i < 1000; ++i) equal += (a.next_u64() == b.next_u64());
  CHECK(equal == 0);
}

TEST_CASE("uniform doubles live in their half-open ranges") {
  Rng r(5);
  for (int i = 0; i < 100000; ++i) {
    const double u = r.next_double();
    CHECK(u >= 0.0);
    CHECK(u < 1.0);
    const double v = r.next_double_pos();
    CHECK(v > 0.0);
    CHECK(v <= 1.0);
  }
}

TEST_CASE("uniform doubles have the right first two moments") {
  Rng r(11);
  const int n = 200000;
  double sum = 0.0, sumsq = 0.0;
  for (int i = 0; i < n; ++i) {
    const double u = r.next_double();
    sum += u;
    sumsq += u * u;
  }
  const double mean = sum / n;
  const double var = sumsq / n - mean * mean;
  // 3 sigma bands for mean of U(0,1): sd = sqrt(1/12n).
  CHECK(std::abs(mean - 0.5) < 3.0 * std::sqrt(1.0 / 12.0 / n));
  CHECK(std::abs(var - 1.0 / 12.0) < 0.002);
}

TEST_CASE("normal draws have standard moments and symmetry") {
  Rng r(13);
  const int n = 200000;
  double sum = 0.0, sumsq = 0.0;
  int below = 0;
  for (int i = 0; i < n; ++i) {
    const double z = r.next_normal();
    sum += z;
    sumsq += z * z;
    below += (z < 0.0);
  }
  const double mean = sum / n;
  const double var = sumsq / n - mean * mean;
  CHECK(std::abs(mean) < 3.0 / std::sqrt(static_cast<double>(n)));
  // Var of the sample variance of N(0,1) is 2/n.
  CHECK(std::abs(var - 1.0) < 3.0 * std::sqrt(2.0 / n));
  const double frac = static_cast<double>(below) / n;
  CHECK(std::abs(frac - 0.5) < 3.0 * std::sqrt(0.25 / n));
}

TEST_CASE("next_below respects its bound and is near uniform") {
  Rng r(17);
  const int n = 120000;
  std::vector<int> counts(6, 0);
  for (int i = 0; i < n; ++i) {
    const std::uint64_t v = r.next_below(6);
    REQUIRE(v < 6);
    ++counts[static_cast<int>(v)];
  }
  // chi^2 with 5 dof, alpha = 0.001 critical value 20.52.
  double chi2 = 0.0;
  const double expect = n / 6.0;
  for (int c : counts) chi2 += (c - expect) * (c - expect) / expect;
  CHECK(chi2 < 20.52);
  CHECK_THROWS_AS(r.next_below(0), IndexOutOfRange);
}

TEST_CASE("categorical draws follow unnormalized weights") {
  Rng r(19);
  const std::vector<double> w = {3.0, 1.0, 4.0};  // sums to 8, unnormalized
  const int n = 160000;
  std::vector<int> counts(3, 0);
  for (int i = 0; i < n; ++i) ++counts[r.next_categorical(w)];
  const double total = 8.0;
  for (int k = 0; k < 3; ++k) {
    const double p = w[k] / total;
    const double se = std::sqrt(p * (1.0 - p) / n);
    CHECK(std::abs(counts[k] / static_cast<double>(n) - p) < 3.0 * se);
  }
  const std::vector<double> zero = {0.0, 0.0};
  CHECK_THROWS_AS(r.next_categorical(zero), NumericalFailure);
}

TEST_CASE("categorical handles a zero-weight head entry") {
  Rng r(23);
  const std::vector<double> w = {0.0, 1.0};
  for (int i = 0; i < 1000; ++i) CHECK(r.next_categorical(w) == 1);
}
