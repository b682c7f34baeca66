#include "umprobe/entropy.hpp"
#include "umprobe/kernel.hpp"
#include "umprobe/rng.hpp"

#include <benchmark/benchmark.h>

namespace {

umprobe::EmbeddingSequence points(Eigen::Index n, Eigen::Index d,
                                  std::uint64_t seed) {
  umprobe::Rng rng(seed);
  umprobe::PointMatrix m(n, d);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < d; ++j)
      m(i, j) = rng.normal();
  return umprobe::make_sequence(std::move(m));
}

void BM_KernelAssembly(benchmark::State &state) {
  const auto seq = points(state.range(0), 64, 1);
  for (auto _ : state) {
    const double sigma =
        umprobe::select_bandwidth(seq, umprobe::BandwidthPolicy::median());
    benchmark::DoNotOptimize(umprobe::gaussian_self_kernel(seq, sigma));
  }
}
BENCHMARK(BM_KernelAssembly)->RangeMultiplier(2)->Range(64, 1024);

void BM_SequenceEntropy(benchmark::State &state) {
  const auto seq = points(state.range(0), 64, 2);
  for (auto _ : state)
    benchmark::DoNotOptimize(umprobe::sequence_entropy(seq, {}));
}
BENCHMARK(BM_SequenceEntropy)->RangeMultiplier(2)->Range(64, 1024);

void BM_ConditionalEntropy(benchmark::State &state) {
  const auto prompt = points(state.range(0), 64, 3);
  const auto response = points(state.range(0), 64, 4);
  for (auto _ : state)
    benchmark::DoNotOptimize(umprobe::conditional_entropy(prompt, response, {}));
}
BENCHMARK(BM_ConditionalEntropy)->RangeMultiplier(2)->Range(64, 512);

} // namespace

BENCHMARK_MAIN();
