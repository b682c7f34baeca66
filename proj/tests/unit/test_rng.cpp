#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "umprobe/rng.hpp"

#include <cmath>
#include <set>

using namespace umprobe;

TEST_CASE("uniforms lie in [0, 1) and reproduce per seed") {
  Rng a(12), b(12);
  for (int i = 0; i < 1000; ++i) {
    const double u = a.uniform();
    CHECK(u >= 0.0);
    CHECK(u < 1.0);
    CHECK(u == b.uniform());
  }
}

TEST_CASE("normal sampler has unit moments") {
  Rng rng(1);
  double sum = 0.0, sq = 0.0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    const double x = rng.normal();
    sum += x;
    sq += x * x;
  }
  CHECK(std::abs(sum / n) < 0.01);
  CHECK(std::abs(sq / n - 1.0) < 0.01);
}

TEST_CASE("sampling without replacement returns sorted distinct indices") {
  Rng rng(3);
  const auto picked = rng.sample_without_replacement(100, 30);
  REQUIRE(picked.size() == 30);
  CHECK(std::set<std::size_t>(picked.begin(), picked.end()).size() == 30);
  for (std::size_t i = 1; i < picked.size(); ++i)
    CHECK(picked[i] > picked[i - 1]);
  CHECK(picked.back() < 100);
}

TEST_CASE("derived seeds differ per stream") {
  CHECK(derive_seed(0, 0) != derive_seed(0, 1));
  CHECK(derive_seed(0, 1) != derive_seed(1, 1));
  CHECK(derive_seed(5, 2) == derive_seed(5, 2));
}
