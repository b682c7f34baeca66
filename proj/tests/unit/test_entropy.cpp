#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "support/oracles.hpp"

#include "umprobe/entropy.hpp"
#include "umprobe/error.hpp"
#include "umprobe/rng.hpp"

#include <cmath>

using namespace umprobe;

namespace {

PointMatrix random_points(Eigen::Index n, Eigen::Index d, std::uint64_t seed) {
  Rng rng(seed);
  PointMatrix m(n, d);
  for (Eigen::Index i = 0; i < m.size(); ++i)
    m.data()[i] = rng.normal();
  return m;
}

KernelMatrix as_kernel(Eigen::MatrixXd entries) {
  KernelMatrix k;
  k.trace = entries.trace();
  k.entries = std::move(entries);
  return k;
}

// Six hand-placed points in R^3; expected values below were computed
// independently with numpy (eigvalsh on the trace-normalized Gram matrix).
PointMatrix fixture_prompt() {
  PointMatrix m(6, 3);
  m << 0, 0, 0, 1, 0, 0, 0, 2, 0, 0, 0, 3, 1, 1, 1, 2, -1, 0.5;
  return m;
}

PointMatrix fixture_response() {
  PointMatrix m(3, 3);
  m << 0.5, 0.5, 0.5, 3, 0, 0, 0, 0, -1;
  return m;
}

} // namespace

TEST_CASE("all-ones kernel has zero entropy") {
  for (const int n : {1, 2, 10, 300}) {
    const auto r =
        matrix_entropy(as_kernel(Eigen::MatrixXd::Ones(n, n)), EntropyParams{});
    CHECK(std::abs(r.value) <= 1e-9);
    CHECK(r.n_effective == n);
  }
}

TEST_CASE("ideal k-block kernel has log2(k) bits") {
  for (const int k : {2, 3, 4, 8, 16}) {
    const auto kernel = as_kernel(oracle::block_kernel(std::vector<int>(k, 7)));
    const auto r = matrix_entropy(kernel, EntropyParams{});
    CHECK(std::abs(r.value - std::log2(k)) <= 1e-9);
  }
}

TEST_CASE("natural log base scales the result by ln 2") {
  const auto kernel = as_kernel(oracle::block_kernel({5, 5, 5, 5}));
  EntropyParams nats;
  nats.log_base = LogBase::natural;
  CHECK(std::abs(matrix_entropy(kernel, nats).value - std::log(4.0)) <= 1e-9);
}

TEST_CASE("alpha = 2 eigen path equals the Frobenius closed form") {
  EntropyParams p;
  p.alpha = 2.0;
  for (std::uint64_t seed = 0; seed < 40; ++seed) {
    const auto seq = make_sequence(random_points(5 + seed * 3, 4, seed));
    const double sigma = select_bandwidth(seq, BandwidthPolicy::median());
    const KernelMatrix k = gaussian_self_kernel(seq, sigma);
    CHECK(std::abs(matrix_entropy(k, p).value - oracle::frobenius_h2(k.entries)) <=
          1e-10);
  }
}

TEST_CASE("entropy matches independently computed reference values") {
  const auto seq = make_sequence(fixture_prompt());
  const auto r = sequence_entropy(seq, EntropyParams{});
  CHECK(r.sigma == doctest::Approx(2.29128784747792).epsilon(1e-14));
  CHECK(std::abs(r.value - 1.4880599878016216) <= 1e-10);

  EntropyParams two;
  two.alpha = 2.0;
  CHECK(std::abs(sequence_entropy(seq, two).value - 1.0310449376080195) <=
        1e-10);

  EntropyParams nats;
  nats.log_base = LogBase::natural;
  CHECK(std::abs(sequence_entropy(seq, nats).value - 1.0314445850487606) <=
        1e-10);
}

TEST_CASE("conditional proxy matches independently computed reference values") {
  const auto p = make_sequence(fixture_prompt());
  const auto r = make_sequence(fixture_response());
  const auto pooled = conditional_entropy(p, r, EntropyParams{});
  CHECK(pooled.joint_entropy.sigma ==
        doctest::Approx(2.2636779124888546).epsilon(1e-14));
  CHECK(std::abs(pooled.value - 0.10961937284742262) <= 1e-10);
  CHECK(std::abs(pooled.joint_entropy.value - 1.6144907825397445) <= 1e-10);
  CHECK(std::abs(pooled.prompt_entropy.value - 1.504871409692322) <= 1e-10);
  CHECK(pooled.value ==
        pooled.joint_entropy.value - pooled.prompt_entropy.value);

  const auto prompt_only = conditional_entropy(
      p, r, EntropyParams{}, BandwidthPolicy::median(), SigmaPolicy::prompt_only);
  CHECK(std::abs(prompt_only.value - 0.10756635304760986) <= 1e-10);
}

TEST_CASE("identical vectors and single vectors have zero entropy") {
  CHECK(std::abs(sequence_entropy(make_sequence(PointMatrix::Constant(50, 8, 2.5)),
                                  EntropyParams{})
                     .value) <= 1e-9);
  PointMatrix one(1, 3);
  one << 1, 2, 3;
  const auto r = sequence_entropy(make_sequence(one), EntropyParams{});
  CHECK(r.value == 0.0);
  CHECK(r.n_effective == 1);
}

TEST_CASE("four well separated clusters approach 2 bits") {
  // Corners of a square with side 10, spread 0.1, sigma fixed between the
  // intra-cluster scale and the spacing.
  Rng rng(3);
  PointMatrix m(200, 2);
  const double corners[4][2] = {{0, 0}, {10, 0}, {0, 10}, {10, 10}};
  for (int c = 0; c < 4; ++c)
    for (int i = 0; i < 50; ++i)
      for (int j = 0; j < 2; ++j)
        m(c * 50 + i, j) = corners[c][j] + 0.1 * rng.normal();
  const auto r = sequence_entropy(make_sequence(m), EntropyParams{},
                                  BandwidthPolicy::fixed(3.0));
  CHECK(std::abs(r.value - 2.0) <= 0.05);
}

TEST_CASE("entropy stays within [0, log2 n]") {
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    const Eigen::Index n = 2 + static_cast<Eigen::Index>(seed * 5);
    const auto r = sequence_entropy(make_sequence(random_points(n, 3, seed)),
                                    EntropyParams{});
    CHECK(r.value >= -1e-9);
    CHECK(r.value <= std::log2(static_cast<double>(n)) + 1e-9);
  }
}

TEST_CASE("conditional proxy of a sequence with itself is zero") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto z = make_sequence(random_points(1 + seed * 7, 5, seed));
    CHECK(std::abs(conditional_entropy(z, z, EntropyParams{}).value) <= 1e-9);
  }
}

TEST_CASE("proxy can go negative: two-block closed form") {
  // Prompt: two far apart points. Response: 100 copies of the first point.
  // Joint spectrum is {101/102, 1/102}; prompt spectrum is {1/2, 1/2}.
  PointMatrix p(2, 2);
  p << 0, 0, 100, 0;
  PointMatrix r = PointMatrix::Zero(100, 2);
  const auto result = conditional_entropy(make_sequence(p), make_sequence(r),
                                          EntropyParams{},
                                          BandwidthPolicy::fixed(5.0));
  const double joint = oracle::renyi_bits({101.0 / 102.0, 1.0 / 102.0}, 1.01);
  CHECK(joint < 1.0);
  CHECK(std::abs(result.prompt_entropy.value - 1.0) <= 1e-9);
  CHECK(std::abs(result.joint_entropy.value - joint) <= 1e-9);
  CHECK(std::abs(result.value - (joint - 1.0)) <= 1e-9);
  CHECK(result.value < 0.0);
  CHECK(result.value >= -result.prompt_entropy.value - 1e-9);
}

TEST_CASE("near copy has a smaller proxy than an independent sample") {
  const PointMatrix base = random_points(60, 8, 1);
  Rng rng(2);
  PointMatrix noisy = base;
  for (Eigen::Index i = 0; i < noisy.size(); ++i)
    noisy.data()[i] += 0.01 * rng.normal();
  const auto z = make_sequence(base);
  const double near = conditional_entropy(z, make_sequence(noisy), {}).value;
  const double far =
      conditional_entropy(z, make_sequence(random_points(60, 8, 99)), {}).value;
  CHECK(near < far);
}

TEST_CASE("subsampling is seeded and caps the point count") {
  const auto seq = make_sequence(random_points(80, 4, 4));
  EntropyParams p;
  p.subsample_cap = 25;
  p.seed = 17;
  const auto a = sequence_entropy(seq, p);
  const auto b = sequence_entropy(seq, p);
  CHECK(a.n_effective == 25);
  CHECK(a.value == b.value);
  CHECK(a.params.seed == 17);

  p.seed = 18;
  CHECK(sequence_entropy(seq, p).value != a.value);

  EntropyParams unseeded;
  unseeded.subsample_cap = 25;
  CHECK(sequence_entropy(seq, unseeded).params.seed == 0);

  EntropyParams roomy;
  roomy.subsample_cap = 1000;
  CHECK(sequence_entropy(seq, roomy).value ==
        sequence_entropy(seq, EntropyParams{}).value);
}

TEST_CASE("conditional subsampling caps prompt and response independently") {
  const auto p = make_sequence(random_points(40, 3, 1));
  const auto r = make_sequence(random_points(30, 3, 2));
  EntropyParams params;
  params.subsample_cap = 10;
  params.seed = 5;
  const auto c = conditional_entropy(p, r, params);
  CHECK(c.prompt_entropy.n_effective == 10);
  CHECK(c.joint_entropy.n_effective == 20);
  CHECK(c.value == conditional_entropy(p, r, params).value);
}

TEST_CASE("subsample keeps original row order") {
  PointMatrix m(10, 1);
  for (int i = 0; i < 10; ++i)
    m(i, 0) = i;
  Rng rng(1);
  const auto s = subsample(make_sequence(m), 4, rng);
  REQUIRE(s.size() == 4);
  for (int i = 1; i < 4; ++i)
    CHECK(s.vectors(i, 0) > s.vectors(i - 1, 0));
}

TEST_CASE("invalid parameters are rejected") {
  const auto seq = make_sequence(random_points(5, 2, 1));
  for (const double alpha : {1.0, 0.0, -0.5}) {
    EntropyParams p;
    p.alpha = alpha;
    try {
      sequence_entropy(seq, p);
      FAIL("expected invalid-parameter");
    } catch (const Error &e) {
      CHECK(e.kind() == ErrorKind::invalid_parameter);
    }
  }
  EntropyParams zero_cap;
  zero_cap.subsample_cap = 0;
  CHECK_THROWS_AS(sequence_entropy(seq, zero_cap), Error);
  CHECK_THROWS_AS(parse_log_base("10"), Error);
  CHECK_THROWS_AS(parse_sigma_policy("global"), Error);
}

TEST_CASE("malformed kernels are reported, not silently used") {
  Eigen::MatrixXd bad = Eigen::MatrixXd::Ones(3, 3);
  bad(1, 1) = 0.0;
  try {
    matrix_entropy(as_kernel(bad), EntropyParams{});
    FAIL("expected invalid-input");
  } catch (const Error &e) {
    CHECK(e.kind() == ErrorKind::invalid_input);
  }
  EntropyParams huge_clamp;
  huge_clamp.eig_clamp = 2.0;
  try {
    matrix_entropy(as_kernel(Eigen::MatrixXd::Identity(3, 3)), huge_clamp);
    FAIL("expected numerical-error");
  } catch (const Error &e) {
    CHECK(e.kind() == ErrorKind::numerical);
  }
}

TEST_CASE("conditional proxy rejects mismatched dimensions") {
  try {
    conditional_entropy(make_sequence(random_points(3, 2, 1)),
                        make_sequence(random_points(3, 4, 1)), {});
    FAIL("expected invalid-input");
  } catch (const Error &e) {
    CHECK(e.kind() == ErrorKind::invalid_input);
  }
}
