// OpenMP kernels against their serial references. Run with
// OMP_NUM_THREADS set to the core count; with one thread the pairs
// should time alike.

#include <benchmark/benchmark.h>

#include "daug/adversarial.hpp"
#include "daug/cat.hpp"
#include "daug/cli.hpp"
#include "daug/diversity.hpp"

using namespace daug;

namespace {

TrajectoryDataset noisy_set(const Environment& env, int n) {
  auto expert = make_expert(env);
  TrajectoryDataset ds = make_dataset(env);
  for (int i = 0; i < n; ++i) ds.trajectories.push_back(rollout(env, expert_policy(*expert, 0.2, i), 100 + i));
  return ds;
}

GaussianPolicy random_policy(int in, int out, std::uint64_t seed) {
  GaussianPolicy p({in, 64, 64, out}, -1.0);
  Rng rng(seed);
  p.mean_net().init_random(rng);
  return p;
}

template <bool Parallel>
void BM_PairwiseDtw(benchmark::State& state) {
  auto env = make_env("point-reach");
  const TrajectoryDataset ds = noisy_set(*env, static_cast<int>(state.range(0)));
  for (auto _ : state)
    benchmark::DoNotOptimize(Parallel ? mean_pairwise_dtw(ds) : mean_pairwise_dtw_serial(ds));
  state.SetItemsProcessed(state.iterations() * state.range(0) * (state.range(0) - 1) / 2);
}

template <bool Parallel>
void BM_RandomAugReplays(benchmark::State& state) {
  auto env = make_env("latch-door");
  const TrajectoryDataset ex = generate_experts(*env, 3, 1000);
  for (auto _ : state) {
    Rng rng(1);
    benchmark::DoNotOptimize(Parallel ? random_aug_success_rate(ex, 0.3, 500, *env, rng)
                                      : random_aug_success_rate_serial(ex, 0.3, 500, *env, rng));
  }
  state.SetItemsProcessed(state.iterations() * 500);
}

template <bool Parallel>
void BM_CollectBatch(benchmark::State& state) {
  auto env = make_env("point-reach");
  const GaussianPolicy pol = random_policy(6, 2, 2);
  std::vector<detail::EpisodePlan> plans(21);
  for (std::size_t e = 0; e < plans.size(); ++e) plans[e].seed = e;
  for (auto _ : state)
    benchmark::DoNotOptimize(Parallel ? detail::collect_batch(*env, pol, plans)
                                      : detail::collect_batch_serial(*env, pol, plans));
  state.SetItemsProcessed(state.iterations() * 21 * env->spec().horizon);
}

template <bool Parallel>
void BM_EvaluatePolicy(benchmark::State& state) {
  auto env = make_env("pend-swing");
  const GaussianPolicy pol = random_policy(3, 1, 3);
  for (auto _ : state)
    benchmark::DoNotOptimize(Parallel ? evaluate_policy(*env, pol, 100, 4, true)
                                      : evaluate_policy_serial(*env, pol, 100, 4, true));
  state.SetItemsProcessed(state.iterations() * 100);
}

template <bool Parallel>
void BM_CatSuccessRate(benchmark::State& state) {
  auto env = make_env("point-reach");
  Rng rng(5);
  const AugmentPool pool = build_pool(generate_experts(*env, 3, 1000), 32, 0.2, rng);
  const GaussianPolicy pol = random_policy(8, 2, 6);
  for (auto _ : state)
    benchmark::DoNotOptimize(Parallel ? cat_success_rate(pol, pool, *env, 200, 7)
                                      : cat_success_rate_serial(pol, pool, *env, 200, 7));
  state.SetItemsProcessed(state.iterations() * 200);
}

}  // namespace

BENCHMARK_TEMPLATE(BM_PairwiseDtw, false)->Name("PairwiseDtw/serial")->Arg(100)->Unit(benchmark::kMillisecond);
BENCHMARK_TEMPLATE(BM_PairwiseDtw, true)->Name("PairwiseDtw/omp")->Arg(100)->Unit(benchmark::kMillisecond);
BENCHMARK_TEMPLATE(BM_RandomAugReplays, false)->Name("RandomAugReplays/serial")->Unit(benchmark::kMillisecond);
BENCHMARK_TEMPLATE(BM_RandomAugReplays, true)->Name("RandomAugReplays/omp")->Unit(benchmark::kMillisecond);
BENCHMARK_TEMPLATE(BM_CollectBatch, false)->Name("CollectBatch/serial")->Unit(benchmark::kMillisecond);
BENCHMARK_TEMPLATE(BM_CollectBatch, true)->Name("CollectBatch/omp")->Unit(benchmark::kMillisecond);
BENCHMARK_TEMPLATE(BM_EvaluatePolicy, false)->Name("EvaluatePolicy/serial")->Unit(benchmark::kMillisecond);
BENCHMARK_TEMPLATE(BM_EvaluatePolicy, true)->Name("EvaluatePolicy/omp")->Unit(benchmark::kMillisecond);
BENCHMARK_TEMPLATE(BM_CatSuccessRate, false)->Name("CatSuccessRate/serial")->Unit(benchmark::kMillisecond);
BENCHMARK_TEMPLATE(BM_CatSuccessRate, true)->Name("CatSuccessRate/omp")->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
