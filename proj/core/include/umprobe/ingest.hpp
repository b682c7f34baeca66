#pragma once

#include "umprobe/error.hpp"
#include "umprobe/types.hpp"

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace umprobe {

inline constexpr std::string_view kManifestFileName = "manifest.json";
inline constexpr std::string_view kManifestVersion = "1.0";

enum class DType { f32, f64 };

std::string_view to_string(DType dtype);
std::size_t element_size(DType dtype);

/// One little-endian row-major blob of shape [rows, cols].
struct RecordEntry {
  std::string id;
  std::string prompt_id;
  Role role = Role::prompt;
  Modality modality = Modality::text;
  std::optional<int> layer; // absent: embedding layer
  std::string type_tag;
  std::optional<std::int64_t> length_chars;
  std::int64_t rows = 0;
  std::int64_t cols = 0;
  DType dtype = DType::f32;
  std::string path; // relative to the manifest directory

  std::uint64_t byte_length() const;
};

struct TraceManifest {
  std::string version{kManifestVersion};
  std::string model_id;
  std::map<std::string, std::string> metadata;
  std::vector<RecordEntry> records;
  std::filesystem::path root;

  const RecordEntry *find(std::string_view id) const;
};

enum class ViolationCode {
  missing_manifest,
  malformed_json,
  schema,
  duplicate_id,
  unknown_dtype,
  bad_shape,
  unsafe_path,
  missing_file,
  byte_length_mismatch,
  non_finite_payload,
};

std::string_view to_string(ViolationCode code);

struct Violation {
  ViolationCode code;
  std::string record_id; // empty for manifest-level problems
  std::string message;
};

/// Thrown by read_manifest; carries every violation found, not just the first.
class ManifestError : public Error {
public:
  explicit ManifestError(std::vector<Violation> violations);

  const std::vector<Violation> &violations() const noexcept {
    return violations_;
  }

private:
  std::vector<Violation> violations_;
};

/// Every problem with the directory. With `scan_payloads`, each blob that
/// passes the structural checks is also decoded and scanned for NaN/Inf.
/// Never throws for malformed input.
std::vector<Violation> check_manifest(const std::filesystem::path &dir,
                                      bool scan_payloads = true);

/// Structurally validated manifest (schema, ids, dtypes, shapes, files and
/// byte lengths). Throws ManifestError listing all violations.
TraceManifest read_manifest(const std::filesystem::path &dir);

/// Decodes one record; f32 payloads are widened to f64. Throws format on a
/// size mismatch and invalid_input naming the record on non-finite values.
EmbeddingSequence load_record(const TraceManifest &manifest,
                              const RecordEntry &entry);

struct WriteOptions {
  bool overwrite = false;
  /// Used when the manifest does not exist yet.
  std::string model_id;
};

/// Writes the blob (encoded at entry.dtype) and registers the entry in the
/// manifest. Both files are replaced atomically; concurrent writers are
/// serialized through an advisory lock file in `dir`. An empty entry.path
/// defaults to "<id>.bin"; rows and cols are taken from `data`.
void write_record(const std::filesystem::path &dir, RecordEntry entry,
                  const PointMatrix &data, const WriteOptions &options = {});

/// Atomically replaces the manifest file.
void write_manifest(const std::filesystem::path &dir,
                    const TraceManifest &manifest);

std::string encode_payload(const PointMatrix &data, DType dtype);

} // namespace umprobe
