#include <cmath>
#include <set>
#include <vector>

#include "raes/rng.hpp"

#include "doctest.h"

using namespace raes;

TEST_SUITE("rng") {

TEST_CASE("identical seeds give identical streams") {
  Rng a(12345), b(12345);
  for (int i = 0; i < 1000; ++i) CHECK(a.next_u64() == b.next_u64());
}

TEST_CASE("different seeds diverge") {
  Rng a(1), b(2);
  bool differ = false;
  for (int i = 0; i < 4 && !differ; ++i) differ = a.next_u64() != b.next_u64();
  CHECK(differ);
}

TEST_CASE("below stays in range and covers small domains") {
  Rng r(7);
  std::set<std::uint64_t> seen;
  for (int i = 0; i < 1000; ++i) {
    const auto v = r.below(5);
    CHECK(v < 5);
    seen.insert(v);
  }
  CHECK(seen.size() == 5);
}

TEST_CASE("below(1) is always 0") {
  Rng r(9);
  for (int i = 0; i < 100; ++i) CHECK(r.below(1) == 0);
}

TEST_CASE("next_double lies in [0,1)") {
  Rng r(11);
  for (int i = 0; i < 10000; ++i) {
    const double x = r.next_double();
    CHECK(x >= 0.0);
    CHECK(x < 1.0);
  }
}

TEST_CASE("bernoulli edge probabilities") {
  Rng r(13);
  for (int i = 0; i < 100; ++i) {
    CHECK_FALSE(r.bernoulli(0.0));
    CHECK(r.bernoulli(1.0));
  }
}

TEST_CASE("domain-separated tags give distinct streams over many seeds") {
  int collisions = 0;
  for (std::uint64_t seed = 0; seed < 1000; ++seed) {
    const auto a = Rng::from_tag(seed, "protocol").next_u64();
    const auto b = Rng::from_tag(seed, "adversary").next_u64();
    const auto c = Rng::from_tag(seed, "metrics").next_u64();
    if (a == b || b == c || a == c) ++collisions;
  }
  CHECK(collisions == 0);
}

TEST_CASE("below is unbiased enough on a narrow domain") {
  // 4 outcomes over 100k draws: each count within 4 sigma of the mean
  Rng r(42);
  const int draws = 100000;
  std::vector<int> counts(4, 0);
  for (int i = 0; i < draws; ++i) ++counts[r.below(4)];
  const double mean = draws / 4.0;
  const double sigma = std::sqrt(draws * 0.25 * 0.75);
  for (int c : counts) CHECK(std::abs(c - mean) <= 4.0 * sigma);
}

}  // TEST_SUITE
