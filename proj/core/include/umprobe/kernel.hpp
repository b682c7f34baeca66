#pragma once

#include "umprobe/types.hpp"

#include <Eigen/Dense>

namespace umprobe {

/// How the Gaussian bandwidth is chosen for one computation.
struct BandwidthPolicy {
  enum class Kind { median, fixed };

  Kind kind = Kind::median;
  double value = 0.0; // only read for Kind::fixed

  static BandwidthPolicy median() { return {}; }
  static BandwidthPolicy fixed(double sigma) { return {Kind::fixed, sigma}; }
};

enum class KernelKind { self, joint };

/// Symmetric Gram matrix with unit diagonal, together with the bandwidth
/// that produced it.
struct KernelMatrix {
  Eigen::MatrixXd entries;
  double sigma = 1.0;
  double trace = 0.0;
  KernelKind kind = KernelKind::self;

  Eigen::Index size() const { return entries.rows(); }
};

/// Bandwidth returned when a point set has no strictly positive distance.
inline constexpr double kFallbackBandwidth = 1.0;

/// Symmetric matrix of squared Euclidean distances between rows. Each entry
/// is accumulated from the explicit coordinate differences, so coincident
/// points give exactly zero.
Eigen::MatrixXd pairwise_sq_distances(const PointMatrix &points);

/// Median of the strictly positive off-diagonal distances (the square roots of
/// the upper triangle of `sq_distances`). Falls back to kFallbackBandwidth.
double median_positive_distance(const Eigen::MatrixXd &sq_distances);

/// Stacks `top` above `bottom`. Column counts must agree.
PointMatrix concatenate(const PointMatrix &top, const PointMatrix &bottom);

double select_bandwidth(const EmbeddingSequence &seq, BandwidthPolicy policy);

/// Bandwidth for the pooled prompt and response points.
double select_bandwidth(const EmbeddingSequence &prompt,
                        const EmbeddingSequence &response,
                        BandwidthPolicy policy);

/// exp(-D / (2 sigma^2)) applied entrywise to a squared-distance matrix.
KernelMatrix kernel_from_sq_distances(const Eigen::MatrixXd &sq_distances,
                                      double sigma, KernelKind kind);

KernelMatrix gaussian_self_kernel(const EmbeddingSequence &seq, double sigma);

/// The (n+m) x (n+m) block kernel [[K_pp, K_pr], [K_rp, K_rr]] with one shared
/// bandwidth. Built as the self-kernel of the concatenated points, so the two
/// constructions agree entry for entry.
KernelMatrix gaussian_joint_kernel(const EmbeddingSequence &prompt,
                                   const EmbeddingSequence &response,
                                   double sigma);

} // namespace umprobe
