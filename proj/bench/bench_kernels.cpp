#include <benchmark/benchmark.h>

#include "omnidepth/depth_sweep.hpp"
#include "omnidepth/filters.hpp"
#include "omnidepth/synth.hpp"

namespace {

using namespace omnidepth;

const synth::Dataset& dataset() {
  static const synth::Dataset data = [] {
    synth::SceneSpec scene = synth::default_scene();
    scene.supersample = 1;
    return synth::render_dataset(scene, synth::named_layout("classroom"), {256, 128});
  }();
  return data;
}

Exec exec_of(const benchmark::State& state) {
  return state.range(0) ? Exec::kParallel : Exec::kSerial;
}

void BM_SweepDepth(benchmark::State& state) {
  const synth::Dataset& data = dataset();
  std::vector<SweepView> views;
  for (const RigView& v : data.rig.views) {
    if (v.index == 0) continue;
    views.push_back({&data.images[v.index], v.rotation, data.rig.metric_translation(v.index)});
  }
  const DepthCandidates c = make_candidates(0.05, 10.0, 64);
  for (auto _ : state) {
    benchmark::DoNotOptimize(sweep_depth(data.images[0], views, c, 3, 0.0, exec_of(state)));
  }
}
BENCHMARK(BM_SweepDepth)->ArgName("parallel")->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

void BM_RenderView(benchmark::State& state) {
  const synth::SceneSpec scene = synth::default_scene();
  for (auto _ : state) {
    benchmark::DoNotOptimize(synth::render_view(scene, {}, {256, 128}, exec_of(state)));
  }
}
BENCHMARK(BM_RenderView)->ArgName("parallel")->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

void BM_PostSmooth(benchmark::State& state) {
  const synth::Dataset& data = dataset();
  for (auto _ : state) {
    benchmark::DoNotOptimize(postsmooth(data.depths[0], data.images[0], {}, exec_of(state)));
  }
}
BENCHMARK(BM_PostSmooth)->ArgName("parallel")->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
