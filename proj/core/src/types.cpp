#include "umprobe/types.hpp"

#include "umprobe/error.hpp"

#include <cmath>

namespace umprobe {

std::string_view to_string(Role role) {
  return role == Role::prompt ? "prompt" : "response";
}

std::string_view to_string(Modality modality) {
  switch (modality) {
  case Modality::text:
    return "text";
  case Modality::image:
    return "image";
  case Modality::other:
    return "other";
  }
  return "other";
}

Role parse_role(std::string_view text) {
  if (text == "prompt")
    return Role::prompt;
  if (text == "response")
    return Role::response;
  fail(ErrorKind::invalid_input, "unknown role '" + std::string(text) + "'");
}

Modality parse_modality(std::string_view text) {
  if (text == "text")
    return Modality::text;
  if (text == "image")
    return Modality::image;
  if (text == "other")
    return Modality::other;
  fail(ErrorKind::invalid_input,
       "unknown modality '" + std::string(text) + "'");
}

EmbeddingSequence make_sequence(PointMatrix vectors, std::string id,
                                Role role) {
  EmbeddingSequence seq;
  seq.vectors = std::move(vectors);
  seq.id = std::move(id);
  seq.role = role;
  return seq;
}

void validate(const EmbeddingSequence &seq) {
  const std::string name = seq.id.empty() ? "<unnamed>" : seq.id;
  if (seq.size() < 1 || seq.dim() < 1) {
    fail(ErrorKind::invalid_input,
         "sequence " + name + " must have n >= 1 and d >= 1 (got " +
             std::to_string(seq.size()) + "x" + std::to_string(seq.dim()) +
             ")");
  }
  if (!seq.vectors.allFinite()) {
    for (Eigen::Index i = 0; i < seq.size(); ++i) {
      for (Eigen::Index j = 0; j < seq.dim(); ++j) {
        if (!std::isfinite(seq.vectors(i, j))) {
          fail(ErrorKind::invalid_input,
               "sequence " + name + " has a non-finite component at row " +
                   std::to_string(i) + ", column " + std::to_string(j));
        }
      }
    }
  }
}

EmbeddingSequence normalize_rows(const EmbeddingSequence &seq) {
  EmbeddingSequence out = seq;
  for (Eigen::Index i = 0; i < out.size(); ++i) {
    const double norm = out.vectors.row(i).norm();
    if (norm > 0.0)
      out.vectors.row(i) /= norm;
  }
  return out;
}

} // namespace umprobe
