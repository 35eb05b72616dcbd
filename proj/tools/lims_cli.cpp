#include <CLI11.hpp>

#include <cstdio>
#include <exception>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "lims/config.hpp"
#include "lims/crb.hpp"
#include "lims/discriminator.hpp"
#include "lims/harness.hpp"

namespace fs = std::filesystem;
using namespace lims;

namespace {

struct Options {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<int> trials;
  std::string out = ".";
  bool oracle = false;
  bool serial = false;
};

TrackConfig resolve(const Options& o) {
  TrackConfig tc = o.config.empty() ? parse_config("") : load_config(o.config);
  if (o.seed) tc.base.seed = *o.seed;
  if (o.trials) tc.base.trials = *o.trials;
  if (o.oracle) tc.base.waveform_oracle = true;
  tc.base.validate();
  return tc;
}

Execution exec_of(const Options& o) { return o.serial ? Execution::serial : Execution::parallel; }

void cmd_sweep(const Options& o) {
  const TrackConfig tc = resolve(o);
  const auto rows = run_experiment(tc.base, exec_of(o));
  fs::create_directories(o.out);
  const fs::path csv = fs::path(o.out) / "results.csv";
  const fs::path dat = emit_results(rows, csv);
  for (const auto& r : rows) {
    std::printf("%-20s %5.1f dBHz  mse %.4e chips^2  failures %d/%d\n", r.algorithm.c_str(),
                r.cn0_dbhz, r.mse_chips2, r.failure_count, r.trial_count);
  }
  std::cout << "wrote " << csv.string() << " and " << dat.string() << '\n';
}

void cmd_response(const Options& o) {
  const TrackConfig tc = resolve(o);
  const ExperimentConfig& c = tc.base;
  const AcfModel acf =
      c.bandwidth ? shared_bandlimited_acf(c.chip, *c.bandwidth) : AcfModel::ideal(c.chip);
  std::vector<double> offsets;
  for (int i = -150; i <= 150; ++i) offsets.push_back(i * 0.01 * c.chip);

  std::vector<DiscriminatorProbe> probes{
      el_probe(ElConfig::wide(c.chip), "el_wide"),
      el_probe(ElConfig::narrow(c.chip), "el_narrow"),
      generalized_probe(GeneralizedDiscConfig::for_spacing(c.ts, c.chip, true), acf,
                        "generalized_white"),
      generalized_probe(GeneralizedDiscConfig::for_spacing(c.ts, c.chip, false), acf,
                        "generalized_nowhite")};
  fs::create_directories(o.out);
  for (const auto& p : probes) {
    const auto d = discriminator_response(p, offsets, acf);
    const fs::path path = fs::path(o.out) / ("response_" + p.label + ".csv");
    write_response_csv(offsets, d, c.chip, path);
    std::cout << "wrote " << path.string() << '\n';
  }
}

void cmd_crb(const Options& o) {
  const TrackConfig tc = resolve(o);
  const ExperimentConfig& c = tc.base;
  PowerDelayProfile mean = c.profile();
  mean.fading = Fading::none;
  RandomStream rng(c.seed);
  const ChannelRealization ch = realize(mean, rng);
  const AcfModel acf =
      c.bandwidth ? shared_bandlimited_acf(c.chip, *c.bandwidth) : AcfModel::ideal(c.chip);
  const auto curve = crb_curve_offset_averaged(ch, c.grid(), acf, c.ti, c.cn0_sweep_dbhz, 16);
  fs::create_directories(o.out);
  const fs::path path = fs::path(o.out) / "crb.csv";
  write_crb_csv(curve, path);
  for (const auto& p : curve) {
    std::printf("%5.1f dBHz  crb %.4e chips^2\n", p.cn0_dbhz, p.crb_seconds2 / (c.chip * c.chip));
  }
  std::cout << "wrote " << path.string() << '\n';
}

void cmd_track(const Options& o) {
  const TrackConfig tc = resolve(o);
  const auto rows = run_tracking(tc, exec_of(o));
  fs::create_directories(o.out);
  const fs::path path = fs::path(o.out) / "track.csv";
  write_track_csv(rows, path);
  std::cout << "wrote " << path.string() << " (" << rows.size() << " rows)\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"LIMS multipath delay estimation simulator"};
  app.require_subcommand(1);
  Options o;
  auto add_common = [&o](CLI::App* sub) {
    sub->add_option("--config", o.config, "YAML experiment file")->check(CLI::ExistingFile);
    sub->add_option("--seed", o.seed, "master seed");
    sub->add_option("--trials", o.trials, "Monte-Carlo trials")->check(CLI::PositiveNumber);
    sub->add_option("--out", o.out, "output directory");
    sub->add_flag("--oracle", o.oracle, "synthesize through the waveform simulator");
    sub->add_flag("--serial", o.serial, "run trials on one thread");
  };
  auto* sweep = app.add_subcommand("sweep", "MSE versus C/N0 sweep");
  auto* response = app.add_subcommand("response", "discriminator response curves");
  auto* crb = app.add_subcommand("crb", "Cramer-Rao bound curve");
  auto* track = app.add_subcommand("track", "epoch-by-epoch tracking MSE");
  for (auto* s : {sweep, response, crb, track}) add_common(s);
  sweep->callback([&] { cmd_sweep(o); });
  response->callback([&] { cmd_response(o); });
  crb->callback([&] { cmd_crb(o); });
  track->callback([&] { cmd_track(o); });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
