#include "reconfig/runtime.hpp"

#include <benchmark/benchmark.h>

#include <filesystem>
#include <fstream>
#include <sstream>

using namespace reconfig;

namespace {

std::filesystem::path fixture(const std::string& rel) { return std::filesystem::path(RECONFIG_FIXTURES) / rel; }

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

std::shared_ptr<const CorpusStore> corpus(const std::string& rel) {
  return std::make_shared<const CorpusStore>(CorpusStore::load(fixture(rel)));
}

std::unique_ptr<Architecture> build(const std::string& adl, const std::string& corpus_rel) {
  return build_architecture(parse_adl(slurp(fixture(adl))), Granularity::PerComponent,
                            std::make_shared<ModuleManager>(), corpus(corpus_rel));
}

void BM_ParseAdl(benchmark::State& state) {
  const auto text = slurp(fixture("hello/helloworld.fractal.xml"));
  for (auto _ : state) benchmark::DoNotOptimize(parse_adl(text));
}
BENCHMARK(BM_ParseAdl);

void BM_PlanModules(benchmark::State& state) {
  const auto def = parse_adl(slurp(fixture("hello/helloworld.fractal.xml")));
  const auto c = corpus("hello/corpus");
  for (auto _ : state) benchmark::DoNotOptimize(plan_modules(def, Granularity::PerComponent, *c));
}
BENCHMARK(BM_PlanModules);

void BM_LoadTypeCached(benchmark::State& state) {
  auto arch = build("hello/helloworld.fractal.xml", "hello/corpus");
  const auto info = arch->assembly.get(arch->component("client")).info_module;
  for (auto _ : state) benchmark::DoNotOptimize(arch->mgr->load_type(info, "Request"));
}
BENCHMARK(BM_LoadTypeCached);

// A call down a chain of `depth` components, with and without the
// interceptor's context bookkeeping.
void BM_ChainCall(benchmark::State& state) {
  const auto depth = state.range(0);
  auto arch = build("chain/chain" + std::to_string(depth) + ".fractal.xml", "chain/corpus");
  arch->record_trace = false;
  arch->intercept = state.range(1) != 0;
  const auto token = make_value(*arch, "c1", "Token");
  for (auto _ : state) benchmark::DoNotOptimize(invoke(*arch, "c1", "in", "hop", {token}));
  state.SetLabel(arch->intercept ? "intercepted" : "plain");
}
BENCHMARK(BM_ChainCall)->ArgsProduct({{1, 3, 5}, {0, 1}});

void BM_HotSwap(benchmark::State& state) {
  for (auto _ : state) {
    state.PauseTiming();
    auto arch = build("evolved/helloworld-v1.fractal.xml", "evolved/corpus");
    state.ResumeTiming();
    benchmark::DoNotOptimize(swap_implementation(*arch, "server", TypeRef::parse("ServerImpl@2.0")));
  }
}
BENCHMARK(BM_HotSwap);

} // namespace

BENCHMARK_MAIN();
