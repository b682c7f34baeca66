#include "umprobe/pipeline.hpp"

#include <atomic>
#include <functional>
#include <map>
#include <optional>
#include <thread>
#include <tuple>

namespace umprobe {
namespace {

unsigned worker_count(unsigned requested, std::size_t tasks) {
  unsigned jobs = requested == 0 ? std::thread::hardware_concurrency() : requested;
  if (jobs == 0)
    jobs = 1;
  if (tasks < jobs)
    jobs = static_cast<unsigned>(std::max<std::size_t>(tasks, 1));
  return jobs;
}

// Runs task(i) for i in [0, count) on a bounded pool. Each task owns slot i,
// so output order never depends on scheduling.
void parallel_for(std::size_t count, unsigned jobs,
                  const std::function<void(std::size_t)> &task) {
  const unsigned workers = worker_count(jobs, count);
  if (workers <= 1) {
    for (std::size_t i = 0; i < count; ++i)
      task(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::jthread> pool;
  pool.reserve(workers);
  for (unsigned w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next.fetch_add(1); i < count; i = next.fetch_add(1))
        task(i);
    });
  }
}

struct Slot {
  std::optional<ResultRow> row;
  std::optional<RecordFailure> failure;
};

template <typename F> void guarded(Slot &slot, const std::string &id, F &&f) {
  try {
    slot.row = f();
  } catch (const Error &e) {
    slot.failure = RecordFailure{id, e.kind(), e.what()};
  } catch (const std::exception &e) {
    slot.failure = RecordFailure{id, ErrorKind::numerical, e.what()};
  }
}

ProbeOutcome collect(std::vector<Slot> &slots,
                     std::vector<RecordFailure> failures = {}) {
  ProbeOutcome out;
  for (auto &slot : slots) {
    if (slot.row)
      out.rows.push_back(std::move(*slot.row));
    if (slot.failure)
      out.failures.push_back(std::move(*slot.failure));
  }
  out.failures.insert(out.failures.end(), failures.begin(), failures.end());
  sort_canonical(out.rows);
  return out;
}

} // namespace

ProbeLevel parse_probe_level(std::string_view text) {
  if (text == "prompt")
    return ProbeLevel::prompt;
  if (text == "response")
    return ProbeLevel::response;
  if (text == "both")
    return ProbeLevel::both;
  fail(ErrorKind::invalid_parameter,
       "probe level must be prompt, response or both");
}

ResultRow entropy_row(const TraceManifest &manifest, const RecordEntry &entry,
                      const EntropyResult &result) {
  ResultRow row;
  row.model_id = manifest.model_id;
  row.prompt_id = entry.prompt_id;
  row.role = entry.role;
  row.modality = entry.modality;
  row.layer = entry.layer;
  row.type_tag = entry.type_tag;
  row.length_chars = entry.length_chars;
  row.metric = Metric::entropy;
  row.value = result.value;
  row.sigma = result.sigma;
  row.alpha = result.params.alpha;
  row.log_base = result.params.log_base;
  row.n_effective = result.n_effective;
  row.seed = result.params.seed;
  return row;
}

ResultRow cond_entropy_row(const TraceManifest &manifest,
                           const RecordEntry &prompt,
                           const RecordEntry &response,
                           const ConditionalEntropyResult &result) {
  ResultRow row = entropy_row(manifest, response, result.joint_entropy);
  row.metric = Metric::cond_entropy;
  row.value = result.value;
  if (row.type_tag.empty())
    row.type_tag = prompt.type_tag;
  // Length buckets describe the prompt that produced the response.
  row.length_chars = prompt.length_chars ? prompt.length_chars
                                         : response.length_chars;
  return row;
}

ProbeOutcome prompt_level_probe(const TraceManifest &manifest,
                                const ProbeOptions &options) {
  validate(options.entropy);
  std::vector<const RecordEntry *> targets;
  for (const auto &r : manifest.records)
    if (r.role == Role::prompt)
      targets.push_back(&r);

  std::vector<Slot> slots(targets.size());
  parallel_for(targets.size(), options.jobs, [&](std::size_t i) {
    const RecordEntry &entry = *targets[i];
    guarded(slots[i], entry.id, [&] {
      const EmbeddingSequence seq = load_record(manifest, entry);
      return entropy_row(manifest, entry,
                         sequence_entropy(seq, options.entropy,
                                          options.bandwidth));
    });
  });
  return collect(slots);
}

ProbeOutcome response_level_probe(const TraceManifest &manifest,
                                  const ProbeOptions &options) {
  validate(options.entropy);

  std::map<std::tuple<std::string, int>, std::vector<const RecordEntry *>>
      prompts;
  for (const auto &r : manifest.records)
    if (r.role == Role::prompt)
      prompts[{r.prompt_id, r.layer.value_or(-1)}].push_back(&r);

  std::vector<std::pair<const RecordEntry *, const RecordEntry *>> pairs;
  std::vector<RecordFailure> pairing;
  for (const auto &r : manifest.records) {
    if (r.role != Role::response)
      continue;
    const std::string layer =
        r.layer ? "layer " + std::to_string(*r.layer) : "embedding layer";
    const auto it = prompts.find({r.prompt_id, r.layer.value_or(-1)});
    if (it == prompts.end()) {
      pairing.push_back({r.id, ErrorKind::pairing,
                         "response " + r.id + " has no prompt record with "
                         "prompt_id '" + r.prompt_id + "' at " + layer});
    } else if (it->second.size() > 1) {
      std::string ids;
      for (const auto *p : it->second)
        ids += (ids.empty() ? "" : ", ") + p->id;
      pairing.push_back({r.id, ErrorKind::pairing,
                         "response " + r.id + " matches several prompt "
                         "records at " + layer + ": " + ids});
    } else {
      pairs.emplace_back(it->second.front(), &r);
    }
  }

  std::vector<Slot> slots(pairs.size());
  parallel_for(pairs.size(), options.jobs, [&](std::size_t i) {
    const auto [prompt, response] = pairs[i];
    guarded(slots[i], response->id, [&] {
      const EmbeddingSequence p = load_record(manifest, *prompt);
      const EmbeddingSequence r = load_record(manifest, *response);
      return cond_entropy_row(
          manifest, *prompt, *response,
          conditional_entropy(p, r, options.entropy, options.bandwidth,
                              options.sigma_policy));
    });
  });
  return collect(slots, std::move(pairing));
}

ProbeOutcome probe(const TraceManifest &manifest, ProbeLevel level,
                   const ProbeOptions &options) {
  if (level == ProbeLevel::prompt)
    return prompt_level_probe(manifest, options);
  if (level == ProbeLevel::response)
    return response_level_probe(manifest, options);

  ProbeOutcome out = prompt_level_probe(manifest, options);
  ProbeOutcome responses = response_level_probe(manifest, options);
  out.rows.insert(out.rows.end(), responses.rows.begin(), responses.rows.end());
  out.failures.insert(out.failures.end(), responses.failures.begin(),
                      responses.failures.end());
  sort_canonical(out.rows);
  return out;
}

} // namespace umprobe
