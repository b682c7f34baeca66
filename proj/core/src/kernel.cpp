#include "umprobe/kernel.hpp"

#include "umprobe/error.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

namespace umprobe {
namespace {

void check_sigma(double sigma) {
  if (!(sigma > 0.0) || !std::isfinite(sigma)) {
    fail(ErrorKind::invalid_parameter,
         "bandwidth must be a positive finite number, got " +
             std::to_string(sigma));
  }
}

double resolve(const PointMatrix &points, BandwidthPolicy policy) {
  if (policy.kind == BandwidthPolicy::Kind::fixed) {
    check_sigma(policy.value);
    return policy.value;
  }
  return median_positive_distance(pairwise_sq_distances(points));
}

} // namespace

Eigen::MatrixXd pairwise_sq_distances(const PointMatrix &points) {
  const Eigen::Index n = points.rows();
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i + 1; j < n; ++j) {
      const double d = (points.row(i) - points.row(j)).squaredNorm();
      out(i, j) = d;
      out(j, i) = d;
    }
  }
  return out;
}

double median_positive_distance(const Eigen::MatrixXd &sq_distances) {
  const Eigen::Index n = sq_distances.rows();
  std::vector<double> distances;
  distances.reserve(static_cast<std::size_t>(n * (n - 1) / 2));
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i + 1; j < n; ++j) {
      if (sq_distances(i, j) > 0.0)
        distances.push_back(std::sqrt(sq_distances(i, j)));
    }
  }
  if (distances.empty())
    return kFallbackBandwidth;

  const std::size_t mid = distances.size() / 2;
  std::nth_element(distances.begin(), distances.begin() + mid, distances.end());
  const double upper = distances[mid];
  if (distances.size() % 2 == 1)
    return upper;
  const double lower =
      *std::max_element(distances.begin(), distances.begin() + mid);
  return 0.5 * (lower + upper);
}

PointMatrix concatenate(const PointMatrix &top, const PointMatrix &bottom) {
  if (top.cols() != bottom.cols()) {
    fail(ErrorKind::invalid_input,
         "dimension mismatch: " + std::to_string(top.cols()) + " vs " +
             std::to_string(bottom.cols()));
  }
  PointMatrix out(top.rows() + bottom.rows(), top.cols());
  out.topRows(top.rows()) = top;
  out.bottomRows(bottom.rows()) = bottom;
  return out;
}

double select_bandwidth(const EmbeddingSequence &seq, BandwidthPolicy policy) {
  return resolve(seq.vectors, policy);
}

double select_bandwidth(const EmbeddingSequence &prompt,
                        const EmbeddingSequence &response,
                        BandwidthPolicy policy) {
  if (policy.kind == BandwidthPolicy::Kind::fixed)
    return resolve(prompt.vectors, policy);
  return resolve(concatenate(prompt.vectors, response.vectors), policy);
}

KernelMatrix kernel_from_sq_distances(const Eigen::MatrixXd &sq_distances,
                                      double sigma, KernelKind kind) {
  check_sigma(sigma);
  const double scale = -1.0 / (2.0 * sigma * sigma);
  KernelMatrix k;
  k.entries = (sq_distances.array() * scale).exp().matrix();
  k.sigma = sigma;
  k.kind = kind;
  k.trace = k.entries.trace();
  return k;
}

KernelMatrix gaussian_self_kernel(const EmbeddingSequence &seq, double sigma) {
  validate(seq);
  return kernel_from_sq_distances(pairwise_sq_distances(seq.vectors), sigma,
                                  KernelKind::self);
}

KernelMatrix gaussian_joint_kernel(const EmbeddingSequence &prompt,
                                   const EmbeddingSequence &response,
                                   double sigma) {
  validate(prompt);
  validate(response);
  if (prompt.dim() != response.dim()) {
    fail(ErrorKind::invalid_input,
         "prompt dimension " + std::to_string(prompt.dim()) +
             " does not match response dimension " +
             std::to_string(response.dim()));
  }
  return kernel_from_sq_distances(
      pairwise_sq_distances(concatenate(prompt.vectors, response.vectors)),
      sigma, KernelKind::joint);
}

} // namespace umprobe
