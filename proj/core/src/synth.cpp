#include "umprobe/synth.hpp"

#include "umprobe/error.hpp"
#include "umprobe/io.hpp"
#include "umprobe/kernel.hpp"
#include "umprobe/rng.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace umprobe {

void validate(const ClusterSpec &spec) {
  if (spec.k < 1 || spec.per_cluster < 1 || spec.d < 1)
    fail(ErrorKind::invalid_parameter,
         "cluster spec needs k, per_cluster and d >= 1");
  if (!(spec.center_scale > 0.0) || !std::isfinite(spec.center_scale))
    fail(ErrorKind::invalid_parameter, "center_scale must be positive");
  if (!(spec.spread >= 0.0) || !std::isfinite(spec.spread))
    fail(ErrorKind::invalid_parameter, "spread must be non-negative");
}

EmbeddingSequence gen_clusters(const ClusterSpec &spec) {
  validate(spec);
  Rng rng(spec.seed);

  PointMatrix centers(spec.k, spec.d);
  for (Eigen::Index c = 0; c < centers.rows(); ++c)
    for (Eigen::Index j = 0; j < centers.cols(); ++j)
      centers(c, j) = rng.uniform(0.0, spec.center_scale);

  PointMatrix points(static_cast<Eigen::Index>(spec.k) * spec.per_cluster,
                     spec.d);
  Eigen::Index row = 0;
  for (Eigen::Index c = 0; c < centers.rows(); ++c) {
    for (int p = 0; p < spec.per_cluster; ++p, ++row) {
      for (Eigen::Index j = 0; j < points.cols(); ++j) {
        points(row, j) = spec.spread > 0.0
                             ? centers(c, j) + spec.spread * rng.normal()
                             : centers(c, j);
      }
    }
  }

  return make_sequence(std::move(points),
                       "clusters-k" + std::to_string(spec.k) + "-s" +
                           std::to_string(spec.seed));
}

std::string_view to_string(DependencySpec::Mode mode) {
  switch (mode) {
  case DependencySpec::Mode::identical:
    return "identical";
  case DependencySpec::Mode::perturbed:
    return "perturbed";
  case DependencySpec::Mode::independent:
    return "independent";
  }
  return "identical";
}

DependencySpec::Mode parse_dependency_mode(std::string_view text) {
  if (text == "identical")
    return DependencySpec::Mode::identical;
  if (text == "perturbed")
    return DependencySpec::Mode::perturbed;
  if (text == "independent")
    return DependencySpec::Mode::independent;
  fail(ErrorKind::invalid_parameter,
       "dependency mode must be identical, perturbed or independent");
}

void validate(const DependencySpec &spec) {
  validate(spec.base);
  if (spec.mode == DependencySpec::Mode::perturbed &&
      (!(spec.noise > 0.0) || !std::isfinite(spec.noise)))
    fail(ErrorKind::invalid_parameter, "perturbed mode needs noise > 0");
}

std::pair<EmbeddingSequence, EmbeddingSequence>
gen_dependency_pair(const DependencySpec &spec) {
  validate(spec);

  ClusterSpec base = spec.base;
  base.seed = derive_seed(spec.seed, 0);
  EmbeddingSequence prompt = gen_clusters(base);
  prompt.id = "dep-" + std::string(to_string(spec.mode)) + "-s" +
              std::to_string(spec.seed) + "-prompt";
  prompt.role = Role::prompt;

  EmbeddingSequence response;
  switch (spec.mode) {
  case DependencySpec::Mode::identical:
    response = prompt;
    break;
  case DependencySpec::Mode::perturbed: {
    response = prompt;
    Rng rng(derive_seed(spec.seed, 1));
    for (Eigen::Index i = 0; i < response.size(); ++i)
      for (Eigen::Index j = 0; j < response.dim(); ++j)
        response.vectors(i, j) += spec.noise * rng.normal();
    break;
  }
  case DependencySpec::Mode::independent: {
    ClusterSpec fresh = spec.base;
    fresh.seed = derive_seed(spec.seed, 2);
    response = gen_clusters(fresh);
    break;
  }
  }
  response.id = "dep-" + std::string(to_string(spec.mode)) + "-s" +
                std::to_string(spec.seed) + "-response";
  response.role = Role::response;
  return {std::move(prompt), std::move(response)};
}

bool ValidationReport::passed() const {
  return std::all_of(checks.begin(), checks.end(),
                     [](const ValidationCheck &c) { return c.passed; });
}

namespace {

constexpr double kZeroTolerance = 1e-9;

void run_cluster_experiment(const ValidationOptions &options,
                            ValidationReport &report) {
  bool monotone = true;
  bool zero_ok = true;
  int failing_seeds = 0;

  for (int s = 0; s < options.cluster_seeds; ++s) {
    double previous = -1.0;
    bool seed_ok = true;
    for (const int k : options.cluster_counts) {
      ClusterSpec spec = options.clusters;
      spec.k = k;
      spec.per_cluster = std::max(1, options.total_points / k);
      spec.seed = static_cast<std::uint64_t>(s);
      if (k == 1)
        spec.spread = 0.0;

      const EntropyResult r = sequence_entropy(gen_clusters(spec),
                                               options.params);
      report.rows.push_back({"clusters", "k=" + std::to_string(k), spec.seed,
                             r.value, r.sigma, r.n_effective,
                             options.params.alpha, options.params.log_base});
      if (k == 1 && std::abs(r.value) > kZeroTolerance)
        zero_ok = false;
      if (!(r.value > previous))
        seed_ok = false;
      previous = r.value;
    }
    if (!seed_ok) {
      monotone = false;
      ++failing_seeds;
    }
  }

  report.checks.push_back(
      {"cluster_monotonicity", monotone,
       std::to_string(options.cluster_seeds - failing_seeds) + "/" +
           std::to_string(options.cluster_seeds) +
           " seeds strictly increasing"});
  report.checks.push_back({"cluster_zero", zero_ok,
                           "k=1 (identical vectors) entropy within 1e-9 of 0"});
}

void run_dependency_experiment(const ValidationOptions &options,
                               ValidationReport &report) {
  int ordered = 0;
  bool identity_ok = true;

  for (int t = 0; t < options.dependency_trials; ++t) {
    DependencySpec spec;
    spec.base = options.dependency_base;
    spec.seed = static_cast<std::uint64_t>(t);

    // Perturbation is scaled to the base sequence's own bandwidth.
    ClusterSpec base = spec.base;
    base.seed = derive_seed(spec.seed, 0);
    const double base_sigma =
        select_bandwidth(gen_clusters(base), BandwidthPolicy::median());
    spec.noise = options.relative_noise * base_sigma;

    double values[3] = {0.0, 0.0, 0.0};
    const DependencySpec::Mode modes[3] = {DependencySpec::Mode::identical,
                                           DependencySpec::Mode::perturbed,
                                           DependencySpec::Mode::independent};
    for (int m = 0; m < 3; ++m) {
      spec.mode = modes[m];
      const auto [prompt, response] = gen_dependency_pair(spec);
      const ConditionalEntropyResult r =
          conditional_entropy(prompt, response, options.params);
      values[m] = r.value;
      report.rows.push_back({"dependency", std::string(to_string(modes[m])),
                             spec.seed, r.value, r.joint_entropy.sigma,
                             r.joint_entropy.n_effective, options.params.alpha,
                             options.params.log_base});
    }
    if (std::abs(values[0]) > kZeroTolerance)
      identity_ok = false;
    if (values[0] < values[1] && values[1] < values[2])
      ++ordered;
  }

  const double fraction =
      options.dependency_trials > 0
          ? static_cast<double>(ordered) / options.dependency_trials
          : 0.0;
  report.checks.push_back(
      {"dependency_monotonicity", fraction >= options.required_fraction,
       std::to_string(ordered) + "/" +
           std::to_string(options.dependency_trials) +
           " trials ordered identical < perturbed < independent"});
  report.checks.push_back(
      {"dependency_identity_zero", identity_ok,
       "identical-pair proxy within 1e-9 of 0 in every trial"});
}

} // namespace

ValidationReport run_validation(const ValidationOptions &options) {
  validate(options.params);
  ValidationReport report;
  run_cluster_experiment(options, report);
  run_dependency_experiment(options, report);
  return report;
}

ValidationReport run_validation(const std::filesystem::path &report_path,
                                const ValidationOptions &options) {
  ValidationReport report = run_validation(options);
  atomic_write(report_path, validation_csv(report));
  return report;
}

std::string validation_csv(const ValidationReport &report) {
  std::ostringstream out;
  out << "# sampler=" << Rng::algorithm << '\n';
  out << "experiment,param,seed,entropy_or_proxy,sigma,n,alpha,log_base\n";
  for (const auto &row : report.rows) {
    out << row.experiment << ',' << row.param << ',' << row.seed << ','
        << format_double(row.value) << ',' << format_double(row.sigma) << ','
        << row.n << ',' << format_double(row.alpha) << ','
        << to_string(row.log_base) << '\n';
  }
  return out.str();
}

} // namespace umprobe
