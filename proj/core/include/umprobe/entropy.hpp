#pragma once

#include "umprobe/kernel.hpp"
#include "umprobe/rng.hpp"
#include "umprobe/types.hpp"

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string_view>

namespace umprobe {

enum class LogBase { two, natural };

std::string_view to_string(LogBase base);
LogBase parse_log_base(std::string_view text);

/// Which point set the median bandwidth is taken from in conditional_entropy.
enum class SigmaPolicy { pooled, prompt_only };

std::string_view to_string(SigmaPolicy policy);
SigmaPolicy parse_sigma_policy(std::string_view text);

struct EntropyParams {
  double alpha = 1.01;
  LogBase log_base = LogBase::two;
  /// Eigenvalues of the trace-normalized kernel below this are set to zero.
  double eig_clamp = 1e-12;
  std::optional<std::size_t> subsample_cap;
  std::optional<std::uint64_t> seed;
};

/// Throws invalid_parameter for alpha <= 0, alpha == 1, a negative clamp or a
/// zero subsample cap.
void validate(const EntropyParams &params);

struct EntropyResult {
  double value = 0.0;
  EntropyParams params;
  double sigma = 1.0;
  Eigen::Index n_effective = 0;
};

struct ConditionalEntropyResult {
  double value = 0.0;
  EntropyResult joint_entropy;
  EntropyResult prompt_entropy;
};

double log_in_base(double x, LogBase base);

/// Eigenvalues of K / tr(K) in ascending order, with values below `eig_clamp`
/// replaced by zero.
Eigen::VectorXd normalized_spectrum(const KernelMatrix &kernel,
                                    double eig_clamp);

/// (1 / (1 - alpha)) * log(sum_i lambda_i^alpha) over a normalized spectrum.
double renyi_from_spectrum(const Eigen::VectorXd &spectrum, double alpha,
                           LogBase base);

/// Matrix-based Renyi entropy of a Gram matrix.
EntropyResult matrix_entropy(const KernelMatrix &kernel,
                             const EntropyParams &params);

/// Uniform sampling without replacement down to `cap` rows; rows keep their
/// original relative order. Returns the input unchanged when n <= cap.
EmbeddingSequence subsample(const EmbeddingSequence &seq, std::size_t cap,
                            Rng &rng);

/// Subsample (if capped), pick the bandwidth, build the self-kernel and take
/// its matrix entropy.
EntropyResult
sequence_entropy(const EmbeddingSequence &seq, const EntropyParams &params,
                 BandwidthPolicy bandwidth = BandwidthPolicy::median());

/// H(K_joint) - H(K_pp) with one bandwidth shared by both kernels. When
/// subsampling is enabled the prompt is drawn first and the response second
/// from a single stream seeded by params.seed.
ConditionalEntropyResult
conditional_entropy(const EmbeddingSequence &prompt,
                    const EmbeddingSequence &response,
                    const EntropyParams &params,
                    BandwidthPolicy bandwidth = BandwidthPolicy::median(),
                    SigmaPolicy sigma_policy = SigmaPolicy::pooled);

} // namespace umprobe
