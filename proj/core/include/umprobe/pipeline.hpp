#pragma once

#include "umprobe/entropy.hpp"
#include "umprobe/error.hpp"
#include "umprobe/ingest.hpp"
#include "umprobe/kernel.hpp"
#include "umprobe/results.hpp"

#include <string>
#include <string_view>
#include <vector>

namespace umprobe {

struct ProbeOptions {
  EntropyParams entropy;
  BandwidthPolicy bandwidth = BandwidthPolicy::median();
  SigmaPolicy sigma_policy = SigmaPolicy::pooled;
  /// Worker threads; 0 means one per hardware thread.
  unsigned jobs = 1;
};

enum class ProbeLevel { prompt, response, both };

ProbeLevel parse_probe_level(std::string_view text);

struct RecordFailure {
  std::string record_id;
  ErrorKind kind;
  std::string message;
};

struct ProbeOutcome {
  std::vector<ResultRow> rows; // canonical order
  std::vector<RecordFailure> failures;

  bool ok() const { return failures.empty(); }
};

/// One entropy row per prompt-role record, at every layer present.
ProbeOutcome prompt_level_probe(const TraceManifest &manifest,
                                const ProbeOptions &options);

/// One cond_entropy row per response record paired with the prompt record
/// that shares its prompt_id and layer. Unpaired or ambiguously paired
/// responses become pairing failures.
ProbeOutcome response_level_probe(const TraceManifest &manifest,
                                  const ProbeOptions &options);

ProbeOutcome probe(const TraceManifest &manifest, ProbeLevel level,
                   const ProbeOptions &options);

ResultRow entropy_row(const TraceManifest &manifest, const RecordEntry &entry,
                      const EntropyResult &result);

ResultRow cond_entropy_row(const TraceManifest &manifest,
                           const RecordEntry &prompt,
                           const RecordEntry &response,
                           const ConditionalEntropyResult &result);

} // namespace umprobe
