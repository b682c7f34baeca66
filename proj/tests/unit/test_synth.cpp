#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "support/temp_dir.hpp"

#include "umprobe/error.hpp"
#include "umprobe/io.hpp"
#include "umprobe/synth.hpp"

#include <cmath>
#include <cstring>

using namespace umprobe;

TEST_CASE("same seed gives bitwise identical clusters") {
  ClusterSpec spec{7, 9, 5, 10.0, 0.3, 42};
  const auto a = gen_clusters(spec);
  const auto b = gen_clusters(spec);
  REQUIRE(a.size() == 63);
  REQUIRE(a.dim() == 5);
  CHECK(std::memcmp(a.vectors.data(), b.vectors.data(),
                    sizeof(double) * static_cast<std::size_t>(a.vectors.size())) == 0);
  spec.seed = 43;
  CHECK(gen_clusters(spec).vectors != a.vectors);
}

TEST_CASE("generated values are finite and honor d") {
  for (const int d : {1, 2, 64}) {
    const auto s = gen_clusters({3, 4, d, 10.0, 2.0, 1});
    CHECK(s.dim() == d);
    CHECK(s.vectors.allFinite());
  }
}

TEST_CASE("one cluster with zero spread is a sequence of identical vectors") {
  const auto s = gen_clusters({1, 50, 16, 10.0, 0.0, 9});
  for (Eigen::Index i = 1; i < s.size(); ++i)
    CHECK(s.vectors.row(i) == s.vectors.row(0));
  CHECK(std::abs(sequence_entropy(s, {}).value) <= 1e-9);
}

TEST_CASE("four exact far apart clusters carry 2 bits") {
  const auto s = gen_clusters({4, 30, 64, 10.0, 0.0, 5});
  // Centers in [0,10)^64 sit ~30 apart; sigma = 3 leaves cross terms ~e^-50.
  const auto r = sequence_entropy(s, {}, BandwidthPolicy::fixed(3.0));
  CHECK(std::abs(r.value - 2.0) <= 0.05);
}

TEST_CASE("entropy grows with the number of clusters at a fixed budget") {
  for (std::uint64_t seed = 0; seed < 3; ++seed) {
    double previous = -1.0;
    for (const int k : {1, 5, 20, 100}) {
      ClusterSpec spec{k, 400 / k, 64, 10.0, k == 1 ? 0.0 : 0.1, seed};
      const double h = sequence_entropy(gen_clusters(spec), {}).value;
      CHECK(h > previous);
      previous = h;
    }
  }
}

TEST_CASE("invalid cluster specs are rejected") {
  CHECK_THROWS_AS(gen_clusters({0, 5, 2, 1.0, 0.1, 0}), Error);
  CHECK_THROWS_AS(gen_clusters({2, 5, 0, 1.0, 0.1, 0}), Error);
  CHECK_THROWS_AS(gen_clusters({2, 5, 2, 0.0, 0.1, 0}), Error);
  CHECK_THROWS_AS(gen_clusters({2, 5, 2, 1.0, -0.1, 0}), Error);
}

TEST_CASE("dependency pairs follow their mode") {
  DependencySpec spec;
  spec.seed = 3;

  spec.mode = DependencySpec::Mode::identical;
  const auto [p1, r1] = gen_dependency_pair(spec);
  CHECK(p1.vectors == r1.vectors);
  CHECK(p1.role == Role::prompt);
  CHECK(r1.role == Role::response);
  CHECK(std::abs(conditional_entropy(p1, r1, {}).value) <= 1e-9);

  spec.mode = DependencySpec::Mode::perturbed;
  spec.noise = 0.05;
  const auto [p2, r2] = gen_dependency_pair(spec);
  CHECK(p2.vectors == p1.vectors);
  const double rms = std::sqrt((r2.vectors - p2.vectors).squaredNorm() /
                               static_cast<double>(p2.vectors.size()));
  CHECK(rms == doctest::Approx(0.05).epsilon(0.1));

  spec.mode = DependencySpec::Mode::independent;
  const auto [p3, r3] = gen_dependency_pair(spec);
  CHECK(p3.vectors == p1.vectors);
  CHECK(r3.size() == p3.size());
  CHECK(r3.vectors != p3.vectors);
}

TEST_CASE("perturbed mode requires positive noise") {
  DependencySpec spec;
  spec.mode = DependencySpec::Mode::perturbed;
  spec.noise = 0.0;
  try {
    gen_dependency_pair(spec);
    FAIL("expected invalid-parameter");
  } catch (const Error &e) {
    CHECK(e.kind() == ErrorKind::invalid_parameter);
  }
}

TEST_CASE("smaller perturbation gives a smaller proxy (20-seed sweep)") {
  int ordered = 0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    DependencySpec spec;
    spec.seed = seed;
    spec.mode = DependencySpec::Mode::perturbed;
    ClusterSpec base = spec.base;
    base.seed = derive_seed(seed, 0);
    const double sigma_base =
        select_bandwidth(gen_clusters(base), BandwidthPolicy::median());

    spec.noise = 0.01 * sigma_base;
    auto [p, small] = gen_dependency_pair(spec);
    spec.noise = 0.5 * sigma_base;
    auto [q, large] = gen_dependency_pair(spec);
    if (conditional_entropy(p, small, {}).value <
        conditional_entropy(q, large, {}).value)
      ++ordered;
  }
  CHECK(ordered >= 19);
}

TEST_CASE("default validation run passes and writes its CSV") {
  testing::TempDir dir;
  const auto path = dir / "validation.csv";
  const ValidationReport report = run_validation(path);
  CHECK(report.passed());
  REQUIRE(report.checks.size() == 4);
  for (const auto &c : report.checks)
    CHECK_MESSAGE(c.passed, c.name << ": " << c.detail);

  int k1_rows = 0;
  for (const auto &row : report.rows) {
    if (row.experiment == "clusters" && row.param == "k=1") {
      ++k1_rows;
      CHECK(std::abs(row.value) <= 1e-9);
    }
  }
  CHECK(k1_rows == 10);
  CHECK(report.rows.size() == 10 * 4 + 40 * 3);

  const std::string csv = read_file(path);
  CHECK(csv.rfind("# sampler=mt19937_64", 0) == 0);
  CHECK(csv.find("experiment,param,seed,entropy_or_proxy,sigma,n,alpha,"
                 "log_base\n") != std::string::npos);
  CHECK(csv == validation_csv(report));
}

TEST_CASE("validation CSV is reproducible byte for byte") {
  ValidationOptions small;
  small.cluster_seeds = 2;
  small.dependency_trials = 3;
  CHECK(validation_csv(run_validation(small)) ==
        validation_csv(run_validation(small)));
}
