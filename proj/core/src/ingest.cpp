#include "umprobe/ingest.hpp"

#include "umprobe/io.hpp"

#include <json.hpp>

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fcntl.h>
#include <set>
#include <sys/file.h>
#include <unistd.h>

namespace umprobe {

namespace fs = std::filesystem;
using nlohmann::json;

static_assert(std::endian::native == std::endian::little,
              "payload codec assumes a little-endian host");

std::string_view to_string(DType dtype) {
  return dtype == DType::f32 ? "f32" : "f64";
}

std::size_t element_size(DType dtype) { return dtype == DType::f32 ? 4 : 8; }

std::uint64_t RecordEntry::byte_length() const {
  return static_cast<std::uint64_t>(rows) * static_cast<std::uint64_t>(cols) *
         element_size(dtype);
}

const RecordEntry *TraceManifest::find(std::string_view id) const {
  for (const auto &r : records)
    if (r.id == id)
      return &r;
  return nullptr;
}

std::string_view to_string(ViolationCode code) {
  switch (code) {
  case ViolationCode::missing_manifest:
    return "missing_manifest";
  case ViolationCode::malformed_json:
    return "malformed_json";
  case ViolationCode::schema:
    return "schema";
  case ViolationCode::duplicate_id:
    return "duplicate_id";
  case ViolationCode::unknown_dtype:
    return "unknown_dtype";
  case ViolationCode::bad_shape:
    return "bad_shape";
  case ViolationCode::unsafe_path:
    return "unsafe_path";
  case ViolationCode::missing_file:
    return "missing_file";
  case ViolationCode::byte_length_mismatch:
    return "byte_length_mismatch";
  case ViolationCode::non_finite_payload:
    return "non_finite_payload";
  }
  return "unknown";
}

namespace {

std::string summarize(const std::vector<Violation> &violations) {
  std::string out = "manifest validation failed with " +
                    std::to_string(violations.size()) + " violation(s)";
  for (const auto &v : violations) {
    out += "\n  [" + std::string(to_string(v.code)) + "]";
    if (!v.record_id.empty())
      out += " " + v.record_id + ":";
    out += " " + v.message;
  }
  return out;
}

struct ParseState {
  std::vector<Violation> violations;

  void add(ViolationCode code, std::string record, std::string message) {
    violations.push_back({code, std::move(record), std::move(message)});
  }
};

std::optional<std::string> string_field(const json &obj, const char *key,
                                        const std::string &record,
                                        ParseState &state, bool required) {
  const auto it = obj.find(key);
  if (it == obj.end() || it->is_null()) {
    if (required)
      state.add(ViolationCode::schema, record,
                std::string("missing required field '") + key + "'");
    return std::nullopt;
  }
  if (!it->is_string()) {
    state.add(ViolationCode::schema, record,
              std::string("field '") + key + "' must be a string");
    return std::nullopt;
  }
  return it->get<std::string>();
}

std::optional<std::int64_t> optional_int(const json &obj, const char *key,
                                         const std::string &record,
                                         ParseState &state, bool &ok) {
  const auto it = obj.find(key);
  if (it == obj.end() || it->is_null())
    return std::nullopt;
  if (!it->is_number_integer() || it->get<std::int64_t>() < 0) {
    state.add(ViolationCode::schema, record,
              std::string("field '") + key +
                  "' must be a non-negative integer or absent");
    ok = false;
    return std::nullopt;
  }
  return it->get<std::int64_t>();
}

bool unsafe(const std::string &path) {
  const fs::path p(path);
  if (path.empty() || p.is_absolute())
    return true;
  for (const auto &part : p)
    if (part == "..")
      return true;
  return false;
}

std::optional<RecordEntry> parse_record(const json &item, std::size_t index,
                                        ParseState &state) {
  std::string label = "#" + std::to_string(index);
  if (!item.is_object()) {
    state.add(ViolationCode::schema, label, "record must be a JSON object");
    return std::nullopt;
  }
  const auto before = state.violations.size();

  RecordEntry entry;
  if (auto id = string_field(item, "id", label, state, true)) {
    entry.id = *id;
    label = entry.id;
  }
  if (auto v = string_field(item, "prompt_id", label, state, true))
    entry.prompt_id = *v;
  if (auto v = string_field(item, "role", label, state, true)) {
    if (*v == "prompt" || *v == "response")
      entry.role = parse_role(*v);
    else
      state.add(ViolationCode::schema, label, "unknown role '" + *v + "'");
  }
  if (auto v = string_field(item, "modality", label, state, true)) {
    if (*v == "text" || *v == "image" || *v == "other")
      entry.modality = parse_modality(*v);
    else
      state.add(ViolationCode::schema, label, "unknown modality '" + *v + "'");
  }
  if (auto v = string_field(item, "type_tag", label, state, false))
    entry.type_tag = *v;

  bool ok = true;
  if (auto layer = optional_int(item, "layer", label, state, ok))
    entry.layer = static_cast<int>(*layer);
  entry.length_chars = optional_int(item, "length_chars", label, state, ok);

  if (auto v = string_field(item, "dtype", label, state, true)) {
    if (*v == "f32")
      entry.dtype = DType::f32;
    else if (*v == "f64")
      entry.dtype = DType::f64;
    else
      state.add(ViolationCode::unknown_dtype, label,
                "unknown dtype '" + *v + "' (expected f32 or f64)");
  }

  const auto shape = item.find("shape");
  if (shape == item.end()) {
    state.add(ViolationCode::schema, label, "missing required field 'shape'");
  } else if (!shape->is_array() || shape->size() != 2 ||
             !(*shape)[0].is_number_integer() ||
             !(*shape)[1].is_number_integer() ||
             (*shape)[0].get<std::int64_t>() < 1 ||
             (*shape)[1].get<std::int64_t>() < 1) {
    state.add(ViolationCode::bad_shape, label,
              "shape must be [n, d] with positive integers, got " +
                  shape->dump());
  } else {
    entry.rows = (*shape)[0].get<std::int64_t>();
    entry.cols = (*shape)[1].get<std::int64_t>();
  }

  if (auto v = string_field(item, "path", label, state, true)) {
    if (unsafe(*v))
      state.add(ViolationCode::unsafe_path, label,
                "path '" + *v + "' must be relative and stay inside the "
                                "manifest directory");
    else
      entry.path = *v;
  }

  if (state.violations.size() != before)
    return std::nullopt;
  return entry;
}

// Parses and checks the manifest document itself without touching blobs.
std::optional<TraceManifest> parse_manifest(const fs::path &dir,
                                            ParseState &state,
                                            std::vector<bool> *valid_records) {
  const fs::path file = dir / kManifestFileName;
  std::error_code ec;
  if (!fs::is_regular_file(file, ec)) {
    state.add(ViolationCode::missing_manifest, "",
              "no " + std::string(kManifestFileName) + " in " + dir.string());
    return std::nullopt;
  }

  json doc;
  try {
    doc = json::parse(read_file(file));
  } catch (const json::exception &e) {
    state.add(ViolationCode::malformed_json, "", e.what());
    return std::nullopt;
  } catch (const Error &e) {
    state.add(ViolationCode::missing_manifest, "", e.what());
    return std::nullopt;
  }

  if (!doc.is_object()) {
    state.add(ViolationCode::schema, "", "manifest root must be an object");
    return std::nullopt;
  }

  TraceManifest manifest;
  manifest.root = dir;
  if (auto v = string_field(doc, "version", "", state, true))
    manifest.version = *v;
  if (auto v = string_field(doc, "model_id", "", state, false))
    manifest.model_id = *v;
  if (const auto meta = doc.find("metadata"); meta != doc.end()) {
    if (!meta->is_object()) {
      state.add(ViolationCode::schema, "", "'metadata' must be an object");
    } else {
      for (const auto &[key, value] : meta->items())
        manifest.metadata[key] = value.is_string() ? value.get<std::string>()
                                                   : value.dump();
    }
  }

  const auto records = doc.find("records");
  if (records == doc.end() || !records->is_array()) {
    state.add(ViolationCode::schema, "", "'records' must be an array");
    return manifest;
  }

  std::set<std::string> seen;
  for (std::size_t i = 0; i < records->size(); ++i) {
    auto entry = parse_record((*records)[i], i, state);
    if (!entry) {
      // Still register the id so later duplicates are reported.
      if ((*records)[i].is_object() && (*records)[i].contains("id") &&
          (*records)[i]["id"].is_string())
        seen.insert((*records)[i]["id"].get<std::string>());
      continue;
    }
    if (!seen.insert(entry->id).second) {
      state.add(ViolationCode::duplicate_id, entry->id,
                "record id appears more than once");
      continue;
    }
    manifest.records.push_back(std::move(*entry));
  }
  if (valid_records)
    valid_records->assign(manifest.records.size(), true);
  return manifest;
}

void check_files(const TraceManifest &manifest, ParseState &state,
                 std::vector<bool> &valid) {
  for (std::size_t i = 0; i < manifest.records.size(); ++i) {
    const auto &r = manifest.records[i];
    const fs::path blob = manifest.root / r.path;
    std::error_code ec;
    if (!fs::is_regular_file(blob, ec)) {
      state.add(ViolationCode::missing_file, r.id,
                "data file '" + r.path + "' does not exist");
      valid[i] = false;
      continue;
    }
    const auto size = fs::file_size(blob, ec);
    if (ec || size != r.byte_length()) {
      state.add(ViolationCode::byte_length_mismatch, r.id,
                "data file '" + r.path + "' has " + std::to_string(size) +
                    " bytes, shape [" + std::to_string(r.rows) + "," +
                    std::to_string(r.cols) + "] " +
                    std::string(to_string(r.dtype)) + " needs " +
                    std::to_string(r.byte_length()));
      valid[i] = false;
    }
  }
}

template <typename T>
PointMatrix decode(const std::string &bytes, std::int64_t rows,
                   std::int64_t cols) {
  PointMatrix out(rows, cols);
  const char *src = bytes.data();
  for (Eigen::Index i = 0; i < out.size(); ++i) {
    T value;
    std::memcpy(&value, src + i * sizeof(T), sizeof(T));
    out.data()[i] = static_cast<double>(value);
  }
  return out;
}

json to_json(const RecordEntry &r) {
  json j;
  j["id"] = r.id;
  j["prompt_id"] = r.prompt_id;
  j["role"] = std::string(to_string(r.role));
  j["modality"] = std::string(to_string(r.modality));
  j["layer"] = r.layer ? json(*r.layer) : json(nullptr);
  j["type_tag"] = r.type_tag;
  j["length_chars"] = r.length_chars ? json(*r.length_chars) : json(nullptr);
  j["shape"] = {r.rows, r.cols};
  j["dtype"] = std::string(to_string(r.dtype));
  j["path"] = r.path;
  return j;
}

class DirectoryLock {
public:
  explicit DirectoryLock(const fs::path &dir) {
    const fs::path lock = dir / ".manifest.lock";
    fd_ = ::open(lock.c_str(), O_RDWR | O_CREAT | O_CLOEXEC, 0644);
    if (fd_ < 0)
      fail(ErrorKind::io, "cannot open lock file " + lock.string());
    if (::flock(fd_, LOCK_EX) != 0) {
      ::close(fd_);
      fail(ErrorKind::io, "cannot lock " + lock.string());
    }
  }
  ~DirectoryLock() {
    ::flock(fd_, LOCK_UN);
    ::close(fd_);
  }
  DirectoryLock(const DirectoryLock &) = delete;
  DirectoryLock &operator=(const DirectoryLock &) = delete;

private:
  int fd_ = -1;
};

} // namespace

ManifestError::ManifestError(std::vector<Violation> violations)
    : Error(ErrorKind::format, summarize(violations)),
      violations_(std::move(violations)) {}

std::vector<Violation> check_manifest(const fs::path &dir,
                                      bool scan_payloads) {
  ParseState state;
  std::vector<bool> valid;
  auto manifest = parse_manifest(dir, state, &valid);
  if (!manifest)
    return state.violations;
  check_files(*manifest, state, valid);

  if (scan_payloads) {
    for (std::size_t i = 0; i < manifest->records.size(); ++i) {
      if (!valid[i])
        continue;
      try {
        (void)load_record(*manifest, manifest->records[i]);
      } catch (const Error &e) {
        state.add(e.kind() == ErrorKind::invalid_input
                      ? ViolationCode::non_finite_payload
                      : ViolationCode::byte_length_mismatch,
                  manifest->records[i].id, e.what());
      }
    }
  }
  return state.violations;
}

TraceManifest read_manifest(const fs::path &dir) {
  ParseState state;
  std::vector<bool> valid;
  auto manifest = parse_manifest(dir, state, &valid);
  if (manifest)
    check_files(*manifest, state, valid);
  if (!state.violations.empty())
    throw ManifestError(std::move(state.violations));
  return std::move(*manifest);
}

EmbeddingSequence load_record(const TraceManifest &manifest,
                              const RecordEntry &entry) {
  const fs::path blob = manifest.root / entry.path;
  std::string bytes;
  try {
    bytes = read_file(blob);
  } catch (const Error &) {
    fail(ErrorKind::format,
         "record " + entry.id + ": cannot read '" + entry.path + "'");
  }
  if (bytes.size() != entry.byte_length()) {
    fail(ErrorKind::format,
         "record " + entry.id + ": payload is " + std::to_string(bytes.size()) +
             " bytes, expected " + std::to_string(entry.byte_length()));
  }

  EmbeddingSequence seq;
  seq.vectors = entry.dtype == DType::f32
                    ? decode<float>(bytes, entry.rows, entry.cols)
                    : decode<double>(bytes, entry.rows, entry.cols);
  seq.id = entry.id;
  seq.role = entry.role;
  seq.modality = entry.modality;
  seq.layer = entry.layer;
  if (!seq.vectors.allFinite())
    fail(ErrorKind::invalid_input,
         "record " + entry.id + ": payload contains NaN or Inf");
  return seq;
}

std::string encode_payload(const PointMatrix &data, DType dtype) {
  std::string bytes(static_cast<std::size_t>(data.size()) *
                        element_size(dtype),
                    '\0');
  for (Eigen::Index i = 0; i < data.size(); ++i) {
    if (dtype == DType::f32) {
      const auto v = static_cast<float>(data.data()[i]);
      std::memcpy(bytes.data() + i * 4, &v, 4);
    } else {
      const double v = data.data()[i];
      std::memcpy(bytes.data() + i * 8, &v, 8);
    }
  }
  return bytes;
}

void write_manifest(const fs::path &dir, const TraceManifest &manifest) {
  json doc;
  doc["version"] = manifest.version;
  doc["model_id"] = manifest.model_id;
  if (!manifest.metadata.empty())
    doc["metadata"] = manifest.metadata;
  doc["records"] = json::array();
  for (const auto &r : manifest.records)
    doc["records"].push_back(to_json(r));
  atomic_write(dir / kManifestFileName, doc.dump(2) + "\n");
}

void write_record(const fs::path &dir, RecordEntry entry,
                  const PointMatrix &data, const WriteOptions &options) {
  if (entry.id.empty())
    fail(ErrorKind::invalid_parameter, "record id must not be empty");
  if (data.rows() < 1 || data.cols() < 1)
    fail(ErrorKind::invalid_input, "record " + entry.id + " has empty shape");
  if (entry.path.empty())
    entry.path = entry.id + ".bin";
  if (unsafe(entry.path))
    fail(ErrorKind::invalid_parameter,
         "record path '" + entry.path + "' must be relative");
  entry.rows = data.rows();
  entry.cols = data.cols();

  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec)
    fail(ErrorKind::io, "cannot create " + dir.string());

  DirectoryLock lock(dir);

  TraceManifest manifest;
  manifest.root = dir;
  manifest.model_id = options.model_id;
  if (fs::exists(dir / kManifestFileName)) {
    ParseState state;
    auto parsed = parse_manifest(dir, state, nullptr);
    if (!state.violations.empty())
      throw ManifestError(std::move(state.violations));
    manifest = std::move(*parsed);
  }

  auto existing = std::find_if(
      manifest.records.begin(), manifest.records.end(),
      [&](const RecordEntry &r) { return r.id == entry.id; });
  if (existing != manifest.records.end() && !options.overwrite) {
    fail(ErrorKind::invalid_parameter,
         "record " + entry.id + " already exists; pass overwrite to replace it");
  }

  atomic_write(dir / entry.path, encode_payload(data, entry.dtype));
  if (existing != manifest.records.end())
    *existing = std::move(entry);
  else
    manifest.records.push_back(std::move(entry));
  write_manifest(dir, manifest);
}

} // namespace umprobe
