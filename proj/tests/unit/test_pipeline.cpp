#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "support/temp_dir.hpp"

#include "umprobe/pipeline.hpp"
#include "umprobe/synth.hpp"

#include <bit>
#include <cmath>
#include <fstream>

using namespace umprobe;
using testing::TempDir;

namespace {

RecordEntry entry(std::string id, std::string prompt_id, Role role,
                  std::optional<int> layer, Modality modality = Modality::text) {
  RecordEntry e;
  e.id = std::move(id);
  e.prompt_id = std::move(prompt_id);
  e.role = role;
  e.layer = layer;
  e.modality = modality;
  e.dtype = DType::f64;
  e.type_tag = "deductive";
  e.length_chars = 42;
  return e;
}

void put(const TempDir &dir, RecordEntry e, const PointMatrix &data) {
  WriteOptions opts;
  opts.model_id = "toy";
  write_record(dir.path(), std::move(e), data, opts);
}

} // namespace

TEST_CASE("one prompt over three layers gives three entropy rows") {
  TempDir dir;
  put(dir, entry("p0-emb", "p0", Role::prompt, std::nullopt),
      gen_clusters({2, 5, 4, 10, 0.5, 1}).vectors);
  put(dir, entry("p0-l1", "p0", Role::prompt, 1),
      gen_clusters({3, 5, 4, 10, 0.5, 2}).vectors);
  put(dir, entry("p0-l0", "p0", Role::prompt, 0),
      PointMatrix::Constant(6, 4, 1.25)); // identical vectors
  const auto manifest = read_manifest(dir.path());

  const auto out = prompt_level_probe(manifest, {});
  CHECK(out.ok());
  REQUIRE(out.rows.size() == 3);
  CHECK(!out.rows[0].layer);
  CHECK(out.rows[1].layer == 0);
  CHECK(out.rows[2].layer == 1);
  CHECK(std::abs(out.rows[1].value) <= 1e-9);
  for (const auto &row : out.rows) {
    CHECK(row.metric == Metric::entropy);
    CHECK(row.model_id == "toy");
    CHECK(row.type_tag == "deductive");
    CHECK(row.length_chars == 42);
    CHECK(row.alpha == 1.01);
  }
}

TEST_CASE("pipeline rows are bitwise equal to direct calls") {
  TempDir dir;
  for (int i = 0; i < 6; ++i) {
    put(dir, entry("c" + std::to_string(i), "q" + std::to_string(i / 2),
                   Role::prompt, i % 2),
        gen_clusters({4, 10, 8, 10.0, 0.2, static_cast<std::uint64_t>(i)})
            .vectors);
  }
  const auto manifest = read_manifest(dir.path());
  ProbeOptions options;
  options.jobs = 4;
  const auto out = prompt_level_probe(manifest, options);
  REQUIRE(out.rows.size() == 6);
  for (const auto &r : manifest.records) {
    const auto direct = sequence_entropy(load_record(manifest, r), {});
    const ResultRow *match = nullptr;
    for (const auto &row : out.rows)
      if (row.prompt_id == r.prompt_id && row.layer == r.layer)
        match = &row;
    REQUIRE(match != nullptr);
    CHECK(std::bit_cast<std::uint64_t>(match->value) ==
          std::bit_cast<std::uint64_t>(direct.value));
    CHECK(match->sigma == direct.sigma);
  }
}

TEST_CASE("result order does not depend on the worker count") {
  TempDir dir;
  for (int i = 0; i < 10; ++i)
    put(dir, entry("r" + std::to_string(i), "p" + std::to_string(9 - i),
                   Role::prompt, i % 3),
        gen_clusters({2, 6, 3, 5.0, 0.3, static_cast<std::uint64_t>(i)})
            .vectors);
  const auto manifest = read_manifest(dir.path());
  ProbeOptions serial, parallel;
  parallel.jobs = 7;
  CHECK(prompt_level_probe(manifest, serial).rows ==
        prompt_level_probe(manifest, parallel).rows);
}

TEST_CASE("response duplicating its prompt gives a zero cond_entropy row") {
  TempDir dir;
  const PointMatrix z = gen_clusters({3, 7, 5, 10.0, 0.5, 3}).vectors;
  put(dir, entry("p", "x", Role::prompt, 4), z);
  auto r = entry("r", "x", Role::response, 4, Modality::image);
  r.type_tag.clear();
  r.length_chars.reset();
  put(dir, r, z);
  const auto out = response_level_probe(read_manifest(dir.path()), {});
  CHECK(out.ok());
  REQUIRE(out.rows.size() == 1);
  CHECK(out.rows[0].metric == Metric::cond_entropy);
  CHECK(out.rows[0].role == Role::response);
  CHECK(out.rows[0].modality == Modality::image);
  CHECK(out.rows[0].type_tag == "deductive"); // inherited from the prompt
  CHECK(out.rows[0].length_chars == 42);
  CHECK(out.rows[0].n_effective == 42);
  CHECK(std::abs(out.rows[0].value) <= 1e-9);
}

TEST_CASE("independent response scores above a perturbed one") {
  TempDir dir;
  for (const auto mode : {DependencySpec::Mode::perturbed,
                          DependencySpec::Mode::independent}) {
    DependencySpec spec;
    spec.mode = mode;
    spec.noise = 0.3;
    spec.seed = 11;
    const auto [p, r] = gen_dependency_pair(spec);
    const std::string id(to_string(mode));
    put(dir, entry(id + "-p", id, Role::prompt, std::nullopt), p.vectors);
    put(dir, entry(id + "-r", id, Role::response, std::nullopt), r.vectors);
  }
  const auto out = response_level_probe(read_manifest(dir.path()), {});
  REQUIRE(out.rows.size() == 2);
  // Canonical order: "independent" < "perturbed".
  CHECK(out.rows[0].prompt_id == "independent");
  CHECK(out.rows[0].value > out.rows[1].value);
}

TEST_CASE("response layer without a prompt layer is a pairing error") {
  TempDir dir;
  const PointMatrix z = gen_clusters({2, 4, 3, 10.0, 0.5, 3}).vectors;
  put(dir, entry("p-l0", "x", Role::prompt, 0), z);
  put(dir, entry("r-l0", "x", Role::response, 0), z);
  put(dir, entry("r-l5", "x", Role::response, 5), z);
  const auto out = response_level_probe(read_manifest(dir.path()), {});
  CHECK(!out.ok());
  CHECK(out.rows.size() == 1);
  REQUIRE(out.failures.size() == 1);
  CHECK(out.failures[0].record_id == "r-l5");
  CHECK(out.failures[0].kind == ErrorKind::pairing);
  CHECK(out.failures[0].message.find("layer 5") != std::string::npos);
}

TEST_CASE("per-record failures do not stop the run") {
  TempDir dir;
  put(dir, entry("good", "a", Role::prompt, 0),
      gen_clusters({2, 4, 3, 10.0, 0.5, 1}).vectors);
  put(dir, entry("bad", "b", Role::prompt, 0),
      gen_clusters({2, 4, 3, 10.0, 0.5, 2}).vectors);
  const auto manifest = read_manifest(dir.path());
  // Corrupt one payload after validation.
  {
    std::ofstream f(dir / "bad.bin", std::ios::binary | std::ios::trunc);
    f << "short";
  }
  const auto out = prompt_level_probe(manifest, {});
  CHECK(out.rows.size() == 1);
  REQUIRE(out.failures.size() == 1);
  CHECK(out.failures[0].record_id == "bad");
  CHECK(out.failures[0].kind == ErrorKind::format);
}

TEST_CASE("level both combines prompt and response rows") {
  TempDir dir;
  const PointMatrix z = gen_clusters({3, 4, 3, 10.0, 0.5, 3}).vectors;
  put(dir, entry("p", "x", Role::prompt, 0), z);
  put(dir, entry("r", "x", Role::response, 0), z);
  const auto out = probe(read_manifest(dir.path()), ProbeLevel::both, {});
  REQUIRE(out.rows.size() == 2);
  CHECK(out.rows[0].metric == Metric::entropy);
  CHECK(out.rows[1].metric == Metric::cond_entropy);
  CHECK_THROWS_AS(parse_probe_level("layer"), Error);
}
