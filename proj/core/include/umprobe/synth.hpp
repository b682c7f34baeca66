#pragma once

#include "umprobe/entropy.hpp"
#include "umprobe/types.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

namespace umprobe {

/// k Gaussian clusters with centers uniform in [0, center_scale)^d.
struct ClusterSpec {
  int k = 5;
  int per_cluster = 80;
  int d = 64;
  double center_scale = 10.0;
  double spread = 0.1;
  std::uint64_t seed = 0;
};

void validate(const ClusterSpec &spec);

/// Cluster-major rows: all points of center 0, then center 1, and so on.
/// spread == 0 places every point of a cluster exactly on its center.
EmbeddingSequence gen_clusters(const ClusterSpec &spec);

struct DependencySpec {
  enum class Mode { identical, perturbed, independent };

  Mode mode = Mode::identical;
  /// Per-component standard deviation of the perturbation (perturbed only).
  double noise = 0.0;
  /// Generator for the base sequence. Its seed field is ignored; every draw
  /// is derived from `seed` below.
  ClusterSpec base{5, 20, 64, 10.0, 0.1, 0};
  std::uint64_t seed = 0;
};

std::string_view to_string(DependencySpec::Mode mode);
DependencySpec::Mode parse_dependency_mode(std::string_view text);
void validate(const DependencySpec &spec);

/// Returns (prompt, response). identical: exact copy. perturbed: prompt plus
/// iid N(0, noise^2) per component. independent: a fresh draw from the base
/// generator under a derived seed.
std::pair<EmbeddingSequence, EmbeddingSequence>
gen_dependency_pair(const DependencySpec &spec);

struct ValidationOptions {
  ClusterSpec clusters{1, 400, 64, 10.0, 0.1, 0};
  /// Total points per sequence; per_cluster = total_points / k.
  int total_points = 400;
  std::vector<int> cluster_counts{1, 5, 20, 100};
  int cluster_seeds = 10;

  ClusterSpec dependency_base{5, 20, 64, 10.0, 0.1, 0};
  /// Perturbation stdev as a fraction of the base sequence's median bandwidth.
  double relative_noise = 0.01;
  int dependency_trials = 40;
  double required_fraction = 0.95;

  EntropyParams params;
};

struct ValidationRow {
  std::string experiment;
  std::string param;
  std::uint64_t seed = 0;
  double value = 0.0;
  double sigma = 0.0;
  Eigen::Index n = 0;
  double alpha = 0.0;
  LogBase log_base = LogBase::two;
};

struct ValidationCheck {
  std::string name;
  bool passed = false;
  std::string detail;
};

struct ValidationReport {
  std::vector<ValidationRow> rows;
  std::vector<ValidationCheck> checks;

  bool passed() const;
};

/// Runs the cluster-count and dependency experiments. The k = 1 sequence is
/// generated with zero spread, i.e. all vectors identical.
ValidationReport run_validation(const ValidationOptions &options = {});

/// Runs the experiments and writes the CSV report to `report_path`.
ValidationReport run_validation(const std::filesystem::path &report_path,
                                const ValidationOptions &options = {});

std::string validation_csv(const ValidationReport &report);

} // namespace umprobe
