#include <benchmark/benchmark.h>

#include <complex>
#include <vector>

#include "lims/harness.hpp"
#include "lims/signal_model.hpp"
#include "lims/waveform.hpp"

using namespace lims;

namespace {

void BM_AcfTableSerial(benchmark::State& state) {
  for (auto _ : state) {
    benchmark::DoNotOptimize(bandlimited_half_table_serial(kGpsChip, 2e6, kGpsChip / 1000, 2000));
  }
}

void BM_AcfTableParallel(benchmark::State& state) {
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        bandlimited_half_table_parallel(kGpsChip, 2e6, kGpsChip / 1000, 2000));
  }
}

struct CorrelationInput {
  ChipSequence code = gen_ca_code(1);
  double ts = kGpsChip / 20;
  std::vector<std::complex<double>> x;
  std::vector<double> lags;

  CorrelationInput() {
    const LagGrid grid = LagGrid::centered(3 * kGpsChip, 0.1 * kGpsChip);
    lags.assign(grid.lags().begin(), grid.lags().end());
    ChannelRealization ch;
    ch.coefficients = Eigen::VectorXcd::Constant(1, 1.0);
    ch.delays = Eigen::VectorXd::Zero(1);
    x = received_waveform(ch, code, ts, 1023 * 20);
  }
};

const CorrelationInput& correlation_input() {
  static const CorrelationInput in;
  return in;
}

void BM_CorrelateDirect(benchmark::State& state) {
  const auto& in = correlation_input();
  for (auto _ : state) {
    benchmark::DoNotOptimize(correlate_direct(in.x, in.code, in.ts, in.lags));
  }
}

void BM_CorrelateSegmented(benchmark::State& state) {
  const auto& in = correlation_input();
  const auto exec = state.range(0) ? Execution::parallel : Execution::serial;
  for (auto _ : state) {
    benchmark::DoNotOptimize(correlate_segmented(in.x, in.code, in.ts, in.lags, exec));
  }
}

void BM_Experiment(benchmark::State& state) {
  ExperimentConfig c;
  c.trials = 16;
  c.cn0_sweep_dbhz = {40, 60};
  c.algorithms = {AlgorithmSpec::lims_variant(2, true), AlgorithmSpec::el(AlgorithmKind::el_narrow)};
  const Experiment e(c);
  const auto exec = state.range(0) ? Execution::parallel : Execution::serial;
  for (auto _ : state) benchmark::DoNotOptimize(e.run(exec));
}

}  // namespace

BENCHMARK(BM_AcfTableSerial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_AcfTableParallel)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_CorrelateDirect)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_CorrelateSegmented)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Experiment)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
