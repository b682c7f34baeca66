#include "umprobe/entropy.hpp"

#include "umprobe/error.hpp"

#include <cmath>
#include <numbers>
#include <string>

namespace umprobe {
namespace {

EntropyParams effective(const EntropyParams &params) {
  validate(params);
  EntropyParams out = params;
  if (out.subsample_cap && !out.seed)
    out.seed = 0;
  return out;
}

double bandwidth_for(const Eigen::MatrixXd &sq_distances,
                     BandwidthPolicy policy) {
  if (policy.kind == BandwidthPolicy::Kind::fixed) {
    if (!(policy.value > 0.0) || !std::isfinite(policy.value))
      fail(ErrorKind::invalid_parameter,
           "fixed bandwidth must be positive, got " +
               std::to_string(policy.value));
    return policy.value;
  }
  return median_positive_distance(sq_distances);
}

} // namespace

std::string_view to_string(LogBase base) {
  return base == LogBase::two ? "2" : "e";
}

LogBase parse_log_base(std::string_view text) {
  if (text == "2" || text == "two" || text == "bits")
    return LogBase::two;
  if (text == "e" || text == "natural" || text == "nats")
    return LogBase::natural;
  fail(ErrorKind::invalid_parameter,
       "log base must be '2' or 'e', got '" + std::string(text) + "'");
}

std::string_view to_string(SigmaPolicy policy) {
  return policy == SigmaPolicy::pooled ? "pooled" : "prompt-only";
}

SigmaPolicy parse_sigma_policy(std::string_view text) {
  if (text == "pooled")
    return SigmaPolicy::pooled;
  if (text == "prompt-only")
    return SigmaPolicy::prompt_only;
  fail(ErrorKind::invalid_parameter,
       "sigma policy must be 'pooled' or 'prompt-only', got '" +
           std::string(text) + "'");
}

void validate(const EntropyParams &params) {
  if (!(params.alpha > 0.0) || !std::isfinite(params.alpha) ||
      params.alpha == 1.0) {
    fail(ErrorKind::invalid_parameter,
         "alpha must be positive and different from 1, got " +
             std::to_string(params.alpha));
  }
  if (!(params.eig_clamp >= 0.0))
    fail(ErrorKind::invalid_parameter, "eigenvalue clamp must be >= 0");
  if (params.subsample_cap && *params.subsample_cap == 0)
    fail(ErrorKind::invalid_parameter, "subsample cap must be positive");
}

double log_in_base(double x, LogBase base) {
  return base == LogBase::two ? std::log2(x) : std::log(x);
}

Eigen::VectorXd normalized_spectrum(const KernelMatrix &kernel,
                                    double eig_clamp) {
  const Eigen::Index n = kernel.size();
  if (n == 0 || kernel.entries.cols() != n)
    fail(ErrorKind::invalid_input, "kernel matrix must be square and non-empty");
  if (!kernel.entries.allFinite())
    fail(ErrorKind::invalid_input, "kernel matrix has non-finite entries");
  if ((kernel.entries.diagonal().array() <= 0.0).any())
    fail(ErrorKind::invalid_input, "kernel matrix diagonal must be positive");

  const double trace = kernel.entries.trace();
  const Eigen::MatrixXd normalized = kernel.entries / trace;

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(
      normalized, Eigen::EigenvaluesOnly);
  if (solver.info() != Eigen::Success)
    fail(ErrorKind::numerical, "symmetric eigensolver did not converge");

  Eigen::VectorXd spectrum = solver.eigenvalues();
  for (Eigen::Index i = 0; i < spectrum.size(); ++i) {
    if (spectrum(i) < eig_clamp)
      spectrum(i) = 0.0;
  }
  return spectrum;
}

double renyi_from_spectrum(const Eigen::VectorXd &spectrum, double alpha,
                           LogBase base) {
  double power_sum = 0.0;
  for (Eigen::Index i = 0; i < spectrum.size(); ++i) {
    if (spectrum(i) > 0.0)
      power_sum += std::pow(spectrum(i), alpha);
  }
  if (!(power_sum > 0.0))
    fail(ErrorKind::numerical, "every eigenvalue was clamped to zero");
  return log_in_base(power_sum, base) / (1.0 - alpha);
}

EntropyResult matrix_entropy(const KernelMatrix &kernel,
                             const EntropyParams &params) {
  validate(params);
  EntropyResult result;
  result.params = params;
  result.sigma = kernel.sigma;
  result.n_effective = kernel.size();
  result.value =
      renyi_from_spectrum(normalized_spectrum(kernel, params.eig_clamp),
                          params.alpha, params.log_base);
  return result;
}

EmbeddingSequence subsample(const EmbeddingSequence &seq, std::size_t cap,
                            Rng &rng) {
  const auto n = static_cast<std::size_t>(seq.size());
  if (n <= cap)
    return seq;
  const auto picked = rng.sample_without_replacement(n, cap);
  EmbeddingSequence out = seq;
  out.vectors.resize(static_cast<Eigen::Index>(cap), seq.dim());
  for (std::size_t i = 0; i < picked.size(); ++i) {
    out.vectors.row(static_cast<Eigen::Index>(i)) =
        seq.vectors.row(static_cast<Eigen::Index>(picked[i]));
  }
  return out;
}

EntropyResult sequence_entropy(const EmbeddingSequence &seq,
                               const EntropyParams &params,
                               BandwidthPolicy bandwidth) {
  const EntropyParams p = effective(params);
  validate(seq);

  const EmbeddingSequence *points = &seq;
  EmbeddingSequence reduced;
  if (p.subsample_cap) {
    Rng rng(*p.seed);
    reduced = subsample(seq, *p.subsample_cap, rng);
    points = &reduced;
  }

  const Eigen::MatrixXd sq = pairwise_sq_distances(points->vectors);
  const double sigma = bandwidth_for(sq, bandwidth);
  return matrix_entropy(kernel_from_sq_distances(sq, sigma, KernelKind::self),
                        p);
}

ConditionalEntropyResult conditional_entropy(const EmbeddingSequence &prompt,
                                             const EmbeddingSequence &response,
                                             const EntropyParams &params,
                                             BandwidthPolicy bandwidth,
                                             SigmaPolicy sigma_policy) {
  const EntropyParams p = effective(params);
  validate(prompt);
  validate(response);
  if (prompt.dim() != response.dim()) {
    fail(ErrorKind::invalid_input,
         "prompt dimension " + std::to_string(prompt.dim()) +
             " does not match response dimension " +
             std::to_string(response.dim()));
  }

  PointMatrix prompt_points = prompt.vectors;
  PointMatrix response_points = response.vectors;
  if (p.subsample_cap) {
    Rng rng(*p.seed);
    prompt_points = subsample(prompt, *p.subsample_cap, rng).vectors;
    response_points = subsample(response, *p.subsample_cap, rng).vectors;
  }

  const Eigen::Index n = prompt_points.rows();
  const Eigen::MatrixXd sq =
      pairwise_sq_distances(concatenate(prompt_points, response_points));
  const Eigen::MatrixXd sq_prompt = sq.topLeftCorner(n, n);

  const double sigma = sigma_policy == SigmaPolicy::pooled
                           ? bandwidth_for(sq, bandwidth)
                           : bandwidth_for(sq_prompt, bandwidth);

  ConditionalEntropyResult result;
  result.joint_entropy = matrix_entropy(
      kernel_from_sq_distances(sq, sigma, KernelKind::joint), p);
  result.prompt_entropy = matrix_entropy(
      kernel_from_sq_distances(sq_prompt, sigma, KernelKind::self), p);
  result.value = result.joint_entropy.value - result.prompt_entropy.value;
  return result;
}

} // namespace umprobe
