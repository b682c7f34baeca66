#pragma once

#include <Eigen/Dense>

#include <optional>
#include <string>
#include <string_view>

namespace umprobe {

/// Row-major point matrix: one row per embedding vector.
using PointMatrix =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

enum class Role { prompt, response };
enum class Modality { text, image, other };

std::string_view to_string(Role role);
std::string_view to_string(Modality modality);
Role parse_role(std::string_view text);
Modality parse_modality(std::string_view text);

/// An ordered set of n vectors of dimension d, plus the metadata that
/// identifies where it came from. An absent layer denotes the raw
/// embedding layer that precedes transformer block 0.
struct EmbeddingSequence {
  PointMatrix vectors;
  std::string id;
  Role role = Role::prompt;
  Modality modality = Modality::text;
  std::optional<int> layer;

  Eigen::Index size() const { return vectors.rows(); }
  Eigen::Index dim() const { return vectors.cols(); }
};

/// Wraps raw points into a sequence with default metadata.
EmbeddingSequence make_sequence(PointMatrix vectors, std::string id = {},
                                Role role = Role::prompt);

/// Throws invalid_input unless n >= 1, d >= 1 and every component is finite.
void validate(const EmbeddingSequence &seq);

/// Returns a copy with every row scaled to unit Euclidean norm. Zero rows are
/// left unchanged. Not applied anywhere by default.
EmbeddingSequence normalize_rows(const EmbeddingSequence &seq);

} // namespace umprobe
