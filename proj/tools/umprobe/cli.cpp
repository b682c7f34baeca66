#include "umprobe/cli.hpp"

#include "umprobe/umprobe.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <ostream>
#include <sstream>

namespace umprobe::cli {
namespace {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

struct EntropyFlags {
  std::string sigma = "auto";
  double alpha = 1.01;
  std::string log_base = "2";
  double eig_clamp = 1e-12;
  std::size_t subsample = 0;
  std::optional<std::uint64_t> seed;
  bool normalize = false;
  std::string sigma_policy = "pooled";

  EntropyParams params() const {
    EntropyParams p;
    p.alpha = alpha;
    p.log_base = parse_log_base(log_base);
    p.eig_clamp = eig_clamp;
    if (subsample > 0)
      p.subsample_cap = subsample;
    p.seed = seed;
    if (p.subsample_cap && !p.seed)
      p.seed = 0;
    validate(p);
    return p;
  }

  BandwidthPolicy bandwidth() const {
    if (sigma == "auto" || sigma == "median")
      return BandwidthPolicy::median();
    double value = 0.0;
    try {
      value = parse_double(sigma);
    } catch (const Error &) {
      fail(ErrorKind::invalid_parameter,
           "--sigma must be 'auto' or a positive number, got '" + sigma + "'");
    }
    if (!(value > 0.0))
      fail(ErrorKind::invalid_parameter,
           "--sigma must be positive, got " + sigma);
    return BandwidthPolicy::fixed(value);
  }
};

void add_entropy_flags(CLI::App *cmd, EntropyFlags &f, bool conditional) {
  cmd->add_option("--sigma", f.sigma,
                  "Gaussian bandwidth: 'auto' (median distance) or a value")
      ->capture_default_str();
  cmd->add_option("--alpha", f.alpha, "Renyi order (> 0, != 1)")
      ->capture_default_str();
  cmd->add_option("--log-base", f.log_base, "Logarithm base: 2 or e")
      ->capture_default_str();
  cmd->add_option("--eig-clamp", f.eig_clamp,
                  "Eigenvalues below this are treated as zero")
      ->capture_default_str();
  cmd->add_option("--subsample", f.subsample,
                  "Uniformly subsample each sequence to at most N points");
  cmd->add_option("--seed", f.seed, "Subsampling seed");
  cmd->add_flag("--normalize", f.normalize,
                "Scale every vector to unit norm before the kernel");
  if (conditional)
    cmd->add_option("--sigma-policy", f.sigma_policy,
                    "Bandwidth source: pooled or prompt-only")
        ->capture_default_str();
}

ordered_json params_json(const EntropyParams &p) {
  ordered_json j;
  j["alpha"] = p.alpha;
  j["log_base"] = std::string(to_string(p.log_base));
  j["eig_clamp"] = p.eig_clamp;
  j["subsample_cap"] =
      p.subsample_cap ? ordered_json(*p.subsample_cap) : ordered_json(nullptr);
  j["seed"] = p.seed ? ordered_json(*p.seed) : ordered_json(nullptr);
  return j;
}

ordered_json result_json(const EntropyResult &r) {
  ordered_json j;
  j["value"] = r.value;
  j["sigma"] = r.sigma;
  j["n_effective"] = r.n_effective;
  j["params"] = params_json(r.params);
  return j;
}

std::string policy_text(const BandwidthPolicy &policy) {
  return policy.kind == BandwidthPolicy::Kind::median ? "median" : "fixed";
}

// Plain-text vectors: one vector per line, components separated by commas
// or whitespace; blank lines and '#' comments are skipped.
EmbeddingSequence read_text_vectors(const fs::path &path) {
  std::istringstream in(read_file(path));
  std::vector<std::vector<double>> rows;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos)
      line.resize(hash);
    std::replace(line.begin(), line.end(), ',', ' ');
    std::istringstream fields(line);
    std::vector<double> row;
    std::string token;
    while (fields >> token) {
      try {
        row.push_back(parse_double(token));
      } catch (const Error &) {
        fail(ErrorKind::invalid_input, path.string() + ":" +
                                           std::to_string(line_no) +
                                           ": not a number '" + token + "'");
      }
    }
    if (row.empty())
      continue;
    if (!rows.empty() && row.size() != rows.front().size())
      fail(ErrorKind::invalid_input,
           path.string() + ":" + std::to_string(line_no) + ": expected " +
               std::to_string(rows.front().size()) + " components, got " +
               std::to_string(row.size()));
    rows.push_back(std::move(row));
  }
  if (rows.empty())
    fail(ErrorKind::invalid_input, path.string() + " contains no vectors");

  PointMatrix m(static_cast<Eigen::Index>(rows.size()),
                static_cast<Eigen::Index>(rows.front().size()));
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < rows[i].size(); ++j)
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
          rows[i][j];
  return make_sequence(std::move(m), path.filename().string());
}

// <dir>#<record-id>, a manifest directory holding exactly one record, or a
// plain-text vector file.
EmbeddingSequence resolve_input(const std::string &spec) {
  if (const auto hash = spec.rfind('#'); hash != std::string::npos) {
    const TraceManifest manifest = read_manifest(spec.substr(0, hash));
    const std::string id = spec.substr(hash + 1);
    const RecordEntry *entry = manifest.find(id);
    if (!entry)
      fail(ErrorKind::invalid_input,
           "record '" + id + "' not found in " + spec.substr(0, hash));
    return load_record(manifest, *entry);
  }
  if (fs::is_directory(spec)) {
    const TraceManifest manifest = read_manifest(spec);
    if (manifest.records.size() != 1)
      fail(ErrorKind::invalid_input,
           "manifest " + spec + " holds " +
               std::to_string(manifest.records.size()) +
               " records; select one with <dir>#<record-id>");
    return load_record(manifest, manifest.records.front());
  }
  if (!fs::exists(spec))
    fail(ErrorKind::invalid_input, "input '" + spec + "' does not exist");
  return read_text_vectors(spec);
}

int exit_code(ErrorKind kind) {
  switch (kind) {
  case ErrorKind::invalid_parameter:
    return invalid_args;
  case ErrorKind::numerical:
    return numerical_error;
  default:
    return input_error;
  }
}

unsigned default_jobs() {
  if (const char *env = std::getenv(kJobsEnv)) {
    try {
      const long v = std::stol(env);
      if (v >= 0)
        return static_cast<unsigned>(v);
    } catch (const std::exception &) {
    }
  }
  return 1;
}

std::vector<double> parse_thresholds(const std::string &text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      out.push_back(parse_double(item));
    } catch (const Error &) {
      fail(ErrorKind::invalid_parameter,
           "--length-buckets expects numbers, got '" + item + "'");
    }
  }
  return out;
}

struct ClusterFlags {
  ClusterSpec spec;

  void add(CLI::App *cmd) {
    cmd->add_option("--k", spec.k, "Number of clusters")->capture_default_str();
    cmd->add_option("--per-cluster", spec.per_cluster, "Points per cluster")
        ->capture_default_str();
    cmd->add_option("--d", spec.d, "Dimension")->capture_default_str();
    cmd->add_option("--center-scale", spec.center_scale,
                    "Side of the hypercube holding the centers")
        ->capture_default_str();
    cmd->add_option("--spread", spec.spread, "Intra-cluster standard deviation")
        ->capture_default_str();
  }
};

RecordEntry synthetic_entry(const std::string &id, const std::string &prompt_id,
                            Role role, const std::string &type_tag) {
  RecordEntry entry;
  entry.id = id;
  entry.prompt_id = prompt_id;
  entry.role = role;
  entry.modality = Modality::other;
  entry.type_tag = type_tag;
  entry.dtype = DType::f64;
  return entry;
}

} // namespace

int run(const std::vector<std::string> &args, std::ostream &out,
        std::ostream &err) {
  CLI::App app{"Kernel-based Renyi entropy probing of embedding sequences",
               "umprobe"};
  app.require_subcommand(1);
  unsigned jobs = default_jobs();
  app.add_option("--jobs,-j", jobs,
                 "Worker threads for probe (0 = all cores); default from " +
                     std::string(kJobsEnv));

  // entropy
  auto *entropy_cmd = app.add_subcommand(
      "entropy", "Matrix-based Renyi entropy of one sequence (JSON line)");
  std::string input;
  EntropyFlags entropy_flags;
  entropy_cmd->add_option("--input", input,
                          "Vector file, manifest dir, or <dir>#<record-id>")
      ->required();
  add_entropy_flags(entropy_cmd, entropy_flags, false);

  // cond
  auto *cond_cmd = app.add_subcommand(
      "cond", "Conditional entropy proxy of a response given a prompt");
  std::string prompt_input, response_input;
  EntropyFlags cond_flags;
  cond_cmd->add_option("--prompt", prompt_input, "Prompt sequence")->required();
  cond_cmd->add_option("--response", response_input, "Response sequence")
      ->required();
  add_entropy_flags(cond_cmd, cond_flags, true);

  // probe
  auto *probe_cmd =
      app.add_subcommand("probe", "Run the layer-wise study over a manifest");
  std::string manifest_dir, level = "both", results_out;
  EntropyFlags probe_flags;
  probe_cmd->add_option("--manifest", manifest_dir, "Manifest directory")
      ->required();
  probe_cmd->add_option("--level", level, "prompt, response or both")
      ->capture_default_str();
  probe_cmd->add_option("--out", results_out, "Results CSV path")->required();
  add_entropy_flags(probe_cmd, probe_flags, true);

  // report
  auto *report_cmd =
      app.add_subcommand("report", "Aggregate a results CSV and draw charts");
  std::string results_in, group_by = "layer,modality", charts_dir, table_out,
                          buckets;
  report_cmd->add_option("--results", results_in, "Results CSV")->required();
  report_cmd->add_option("--group-by", group_by,
                         "Comma list of layer, modality, type_tag, "
                         "length_bucket, role, metric")
      ->capture_default_str();
  report_cmd->add_option("--charts", charts_dir, "Directory for SVG charts");
  report_cmd->add_option("--out", table_out,
                         "Write the table CSV here instead of stdout");
  report_cmd->add_option("--length-buckets", buckets,
                         "Comma list of character thresholds "
                         "(default: thirds of the observed range)");

  // synth
  auto *synth_cmd = app.add_subcommand("synth", "Synthetic validation data");
  synth_cmd->require_subcommand(1);
  std::string synth_out;
  std::uint64_t synth_seed = 0;
  bool overwrite = false;

  auto *clusters_cmd =
      synth_cmd->add_subcommand("clusters", "Write a Gaussian-cluster record");
  ClusterFlags cluster_flags;
  cluster_flags.add(clusters_cmd);
  clusters_cmd->add_option("--seed", synth_seed)->capture_default_str();
  clusters_cmd->add_option("--out", synth_out, "Manifest directory")->required();
  clusters_cmd->add_flag("--overwrite", overwrite, "Replace existing records");

  auto *dependency_cmd = synth_cmd->add_subcommand(
      "dependency", "Write prompt/response pairs with controlled dependency");
  ClusterFlags dependency_flags;
  dependency_flags.spec = DependencySpec{}.base;
  dependency_flags.add(dependency_cmd);
  std::string mode = "all";
  double noise = 0.0;
  double relative_noise = 0.01;
  dependency_cmd->add_option("--mode", mode,
                             "identical, perturbed, independent or all")
      ->capture_default_str();
  dependency_cmd->add_option(
      "--noise", noise,
      "Absolute perturbation stdev (default: --relative-noise x median "
      "bandwidth of the base)");
  dependency_cmd->add_option("--relative-noise", relative_noise)
      ->capture_default_str();
  dependency_cmd->add_option("--seed", synth_seed)->capture_default_str();
  dependency_cmd->add_option("--out", synth_out, "Manifest directory")
      ->required();
  dependency_cmd->add_flag("--overwrite", overwrite, "Replace existing records");

  auto *validate_cmd = synth_cmd->add_subcommand(
      "validate", "Run the cluster and dependency monotonicity checks");
  validate_cmd->add_option("--out", synth_out, "Directory for validation.csv")
      ->required();

  // fmt
  auto *fmt_cmd = app.add_subcommand("fmt", "Trace format utilities");
  fmt_cmd->require_subcommand(1);
  auto *check_cmd = fmt_cmd->add_subcommand("check", "Validate a manifest");
  check_cmd->add_option("--manifest", manifest_dir, "Manifest directory")
      ->required();

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp &) {
    out << app.help();
    return ok;
  } catch (const CLI::CallForAllHelp &) {
    out << app.help("", CLI::AppFormatMode::All);
    return ok;
  } catch (const CLI::ParseError &e) {
    err << "error: " << e.what() << '\n';
    return invalid_args;
  }

  try {
    if (entropy_cmd->parsed()) {
      const EntropyParams params = entropy_flags.params();
      const BandwidthPolicy bandwidth = entropy_flags.bandwidth();
      EmbeddingSequence seq = resolve_input(input);
      if (entropy_flags.normalize)
        seq = normalize_rows(seq);
      ordered_json j = result_json(sequence_entropy(seq, params, bandwidth));
      j["bandwidth_policy"] = policy_text(bandwidth);
      j["normalized"] = entropy_flags.normalize;
      j["input"] = input;
      out << j.dump() << '\n';
      return ok;
    }

    if (cond_cmd->parsed()) {
      const EntropyParams params = cond_flags.params();
      const BandwidthPolicy bandwidth = cond_flags.bandwidth();
      const SigmaPolicy sigma_policy =
          parse_sigma_policy(cond_flags.sigma_policy);
      EmbeddingSequence prompt = resolve_input(prompt_input);
      EmbeddingSequence response = resolve_input(response_input);
      if (cond_flags.normalize) {
        prompt = normalize_rows(prompt);
        response = normalize_rows(response);
      }
      const ConditionalEntropyResult r = conditional_entropy(
          prompt, response, params, bandwidth, sigma_policy);
      ordered_json j;
      j["value"] = r.value;
      j["joint_entropy"] = result_json(r.joint_entropy);
      j["prompt_entropy"] = result_json(r.prompt_entropy);
      j["bandwidth_policy"] = policy_text(bandwidth);
      j["sigma_policy"] = std::string(to_string(sigma_policy));
      j["normalized"] = cond_flags.normalize;
      out << j.dump() << '\n';
      return ok;
    }

    if (probe_cmd->parsed()) {
      if (probe_flags.normalize)
        fail(ErrorKind::invalid_parameter,
             "--normalize is not supported by probe");
      ProbeOptions options;
      options.entropy = probe_flags.params();
      options.bandwidth = probe_flags.bandwidth();
      options.sigma_policy = parse_sigma_policy(probe_flags.sigma_policy);
      options.jobs = jobs;
      const ProbeLevel probe_level = parse_probe_level(level);
      const TraceManifest manifest = read_manifest(manifest_dir);
      const ProbeOutcome outcome = probe(manifest, probe_level, options);
      write_results(results_out, outcome.rows);

      ordered_json summary;
      summary["rows"] = outcome.rows.size();
      summary["failures"] = outcome.failures.size();
      summary["out"] = results_out;
      summary["params"] = params_json(options.entropy);
      summary["bandwidth_policy"] = policy_text(options.bandwidth);
      summary["sigma_policy"] = std::string(to_string(options.sigma_policy));
      out << summary.dump() << '\n';
      for (const auto &f : outcome.failures) {
        ordered_json j;
        j["record_id"] = f.record_id;
        j["error"] = std::string(to_string(f.kind));
        j["message"] = f.message;
        err << j.dump() << '\n';
      }
      return outcome.ok() ? ok : partial_failure;
    }

    if (report_cmd->parsed()) {
      const auto keys = parse_group_keys(group_by);
      const auto rows = read_results(results_in);
      if (rows.empty()) {
        err << "warning: " << results_in << " has no rows; nothing to report\n";
        return ok;
      }
      const ReportTable table = aggregate(rows, keys, parse_thresholds(buckets));
      const std::string csv = report_csv(table);
      if (table_out.empty())
        out << csv;
      else
        atomic_write(table_out, csv);
      if (!charts_dir.empty()) {
        const auto files = emit_charts(table, charts_dir);
        if (files.empty())
          err << "warning: empty table, no charts written\n";
        for (const auto &f : files)
          err << "wrote " << f.string() << '\n';
      }
      return ok;
    }

    if (clusters_cmd->parsed()) {
      ClusterSpec spec = cluster_flags.spec;
      spec.seed = synth_seed;
      const EmbeddingSequence seq = gen_clusters(spec);
      WriteOptions options{overwrite, "synthetic"};
      write_record(synth_out,
                   synthetic_entry(seq.id, seq.id, Role::prompt,
                                   "k=" + std::to_string(spec.k)),
                   seq.vectors, options);
      ordered_json j;
      j["record_id"] = seq.id;
      j["shape"] = {seq.size(), seq.dim()};
      j["out"] = synth_out;
      j["sampler"] = std::string(Rng::algorithm);
      out << j.dump() << '\n';
      return ok;
    }

    if (dependency_cmd->parsed()) {
      DependencySpec spec;
      spec.base = dependency_flags.spec;
      spec.seed = synth_seed;
      spec.noise = noise;
      if (!(noise > 0.0)) {
        ClusterSpec base = spec.base;
        base.seed = derive_seed(spec.seed, 0);
        spec.noise = relative_noise *
                     select_bandwidth(gen_clusters(base),
                                      BandwidthPolicy::median());
      }
      std::vector<DependencySpec::Mode> modes;
      if (mode == "all")
        modes = {DependencySpec::Mode::identical,
                 DependencySpec::Mode::perturbed,
                 DependencySpec::Mode::independent};
      else
        modes = {parse_dependency_mode(mode)};

      WriteOptions options{overwrite, "synthetic"};
      ordered_json records = ordered_json::array();
      for (const auto m : modes) {
        spec.mode = m;
        const auto [prompt, response] = gen_dependency_pair(spec);
        const std::string prompt_id =
            "dep-" + std::string(to_string(m)) + "-s" +
            std::to_string(spec.seed);
        write_record(synth_out,
                     synthetic_entry(prompt.id, prompt_id, Role::prompt,
                                     std::string(to_string(m))),
                     prompt.vectors, options);
        write_record(synth_out,
                     synthetic_entry(response.id, prompt_id, Role::response,
                                     std::string(to_string(m))),
                     response.vectors, options);
        records.push_back(prompt.id);
        records.push_back(response.id);
      }
      ordered_json j;
      j["records"] = records;
      j["noise"] = spec.noise;
      j["out"] = synth_out;
      j["sampler"] = std::string(Rng::algorithm);
      out << j.dump() << '\n';
      return ok;
    }

    if (validate_cmd->parsed()) {
      const fs::path csv = fs::path(synth_out) / "validation.csv";
      const ValidationReport report = run_validation(csv);
      for (const auto &c : report.checks) {
        ordered_json j;
        j["check"] = c.name;
        j["passed"] = c.passed;
        j["detail"] = c.detail;
        out << j.dump() << '\n';
      }
      ordered_json summary;
      summary["passed"] = report.passed();
      summary["report"] = csv.string();
      summary["sampler"] = std::string(Rng::algorithm);
      out << summary.dump() << '\n';
      return report.passed() ? ok : partial_failure;
    }

    if (check_cmd->parsed()) {
      const auto violations = check_manifest(manifest_dir);
      ordered_json j;
      j["manifest"] = manifest_dir;
      j["valid"] = violations.empty();
      j["violations"] = ordered_json::array();
      for (const auto &v : violations) {
        ordered_json item;
        item["code"] = std::string(to_string(v.code));
        item["record_id"] = v.record_id;
        item["message"] = v.message;
        j["violations"].push_back(item);
      }
      out << j.dump() << '\n';
      return violations.empty() ? ok : input_error;
    }
  } catch (const Error &e) {
    err << "error [" << to_string(e.kind()) << "]: " << e.what() << '\n';
    return exit_code(e.kind());
  } catch (const std::exception &e) {
    err << "error: " << e.what() << '\n';
    return numerical_error;
  }

  err << app.help();
  return invalid_args;
}

} // namespace umprobe::cli
