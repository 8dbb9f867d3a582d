#include <benchmark/benchmark.h>

#include "minios/fatimg.hpp"
#include "minios/fatro.hpp"
#include "minios/gasm.hpp"
#include "minios/samples.hpp"
#include "minios/sched.hpp"
#include "minios/sim.hpp"
#include "minios/vmcu.hpp"

using namespace minios;

namespace {

const std::vector<std::uint8_t>& image() {
  static const auto img = samples::standard_image();
  return img;
}

}  // namespace

// Tight counting loop, no traps.
static void BM_CpuRunBudget(benchmark::State& state) {
  auto bin = gasm::assemble(gasm::AsmSource::from_text("loop:\n    MOVI r1, 1\n    ADD r0, r0, r1\n    B loop\n"));
  vmcu::Memory mem;
  mem.write(vmcu::kRamBase, bin.code);
  auto cpu = vmcu::GuestCpu::user_context(vmcu::kRamBase, vmcu::kRamBase + 0x8000, vmcu::kRamBase + 0x4000);
  memprot::MpuConfig mpu;
  const auto budget = static_cast<std::uint64_t>(state.range(0));
  for (auto _ : state) {
    auto [res, n] = vmcu::run_budget(cpu, mem, mpu, budget);
    benchmark::DoNotOptimize(n);
  }
  state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations() * budget));
}
BENCHMARK(BM_CpuRunBudget)->Arg(1000)->Arg(100000);

static void BM_BuildSampleApp(benchmark::State& state) {
  for (auto _ : state) benchmark::DoNotOptimize(samples::build("sample"));
}
BENCHMARK(BM_BuildSampleApp);

static void BM_Disassemble(benchmark::State& state) {
  auto bin = samples::build("sample");
  for (auto _ : state) benchmark::DoNotOptimize(gasm::disassemble(bin));
}
BENCHMARK(BM_Disassemble);

static void BM_SchedulerDispatch(benchmark::State& state) {
  sched::Scheduler s(16, 5);
  for (int i = 0; i < 8; ++i) s.create(static_cast<std::uint8_t>(i % 4));
  Tick now = 0;
  s.dispatch();
  for (auto _ : state) {
    s.on_systick(++now);
    benchmark::DoNotOptimize(s.dispatch());
  }
}
BENCHMARK(BM_SchedulerDispatch);

static void BM_FatReadAll(benchmark::State& state) {
  fatimg::ImageOptions o;
  o.size_bytes = 4u << 20;
  o.fragment = true;
  fatimg::ImageBuilder b(o);
  b.add_file("BIG.BIN", std::vector<std::uint8_t>(static_cast<std::size_t>(state.range(0)), 0x5A));
  periph::BlockDevice dev(b.build());
  auto vol = fatro::FatVolume::mount(dev);
  for (auto _ : state) benchmark::DoNotOptimize(vol.read_all("BIG.BIN"));
  state.SetBytesProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_FatReadAll)->Arg(4096)->Arg(256 << 10);

// Node with the four-thread sample program, per simulated second.
static void BM_KernelSampleSecond(benchmark::State& state) {
  for (auto _ : state) {
    kernel::Kernel k(syskern::Config{}, periph::BlockDevice(image()));
    k.tick(1);
    k.load("SAMPLE.APP");
    for (Tick t = 2; t <= 1000; ++t) k.tick(t);
    benchmark::DoNotOptimize(k.uart().size());
  }
}
BENCHMARK(BM_KernelSampleSecond)->Unit(benchmark::kMillisecond);

// 20-node dissemination at loss 0.3 until convergence.
static void BM_MeshConvergence(benchmark::State& state) {
  std::uint64_t seed = 1;
  for (auto _ : state) {
    std::map<mesh::NodeId, sim::MeshNodeSpec> specs;
    for (mesh::NodeId id = 0; id < 20; ++id) specs[id] = {syskern::Config{}, image(), std::nullopt};
    specs[0].config.net.version = 1;
    sim::MeshSim m(mesh::Topology::random_connected(20, 40, 0.3, seed), specs, seed);
    m.run(5000, true);
    benchmark::DoNotOptimize(m.converged_at());
    ++seed;
  }
}
BENCHMARK(BM_MeshConvergence)->Unit(benchmark::kMillisecond);
BENCHMARK_MAIN();
