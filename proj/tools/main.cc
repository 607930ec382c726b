#include <CLI11.hpp>

#include <iostream>

#include "commands.h"
#include "oae/errors.h"

namespace {

using namespace oae::cli;

template <typename Fn>
int Guarded(Fn&& fn) {
  try {
    return fn();
  } catch (const oae::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const oae::SessionAbortedError& e) {
    std::cerr << "aborted: " << e.what() << '\n';
    return kExitAborted;
  } catch (const oae::IoError& e) {
    std::cerr << "i/o error: " << e.what() << '\n';
    return kExitIo;
  } catch (const oae::InsufficientDataError& e) {
    std::cerr << "insufficient data: " << e.what() << '\n';
    return kExitNoisy;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << '\n';
    return kExitInternal;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"OAE screening engine: simulate ears, screen recordings, evaluate cohorts."};
  app.require_subcommand(1);
  app.footer(
      "Exit codes: 0 pass, 1 refer (or integrity failure), 2 noisy, 3 config/usage error,\n"
      "4 session aborted, 5 I/O error, 6 internal error.\n"
      "A session config path may also be given through $OAESCREEN_CONFIG.");

  SimulateOptions sim;
  auto* simulate = app.add_subcommand("simulate", "Run a simulated session and write its WAVs");
  simulate->add_option("--preset", sim.preset, "Ear preset")->capture_default_str();
  simulate->add_option("--seed", sim.seed, "Noise seed")->capture_default_str();
  simulate->add_option("--out", sim.out_dir, "Output directory")->required();
  simulate->add_option("--speaker", sim.speaker, "identity | nonlinear | cubic")->capture_default_str();
  simulate->add_option("--config", sim.config, "Session config file");

  ScreenOptions screen;
  auto* scr = app.add_subcommand("screen", "Screen a recording or a simulated preset");
  auto* in_opt = scr->add_option("--in", screen.input, "Directory from `simulate`, or a mic WAV");
  auto* preset_opt = scr->add_option("--preset", screen.preset, "Simulate this ear preset live");
  in_opt->excludes(preset_opt);
  scr->add_option("--seed", screen.seed, "Simulation seed")->capture_default_str();
  scr->add_option("--speaker", screen.speaker, "identity | nonlinear | cubic")->capture_default_str();
  scr->add_option("--protocol", screen.protocol, "oaebuds | oaebuds_fixed2p5 | teoae2p5 | teoae12");
  scr->add_option("--config", screen.config, "Session config file");
  scr->add_option("--json", screen.json_path, "Write the session report JSON here (- for stdout)");
  scr->add_option("--progress", screen.progress_path, "Write per-window JSON lines here (- for stdout)");

  RocOptions roc;
  auto* roc_cmd = app.add_subcommand("roc", "Threshold sweep over a synthetic cohort");
  roc_cmd->add_option("--cohort", roc.cohort, "Cohort file (default: built-in 50-ear cohort)");
  roc_cmd->add_option("--protocol", roc.protocol, "oaebuds | oaebuds_fixed2p5 | teoae2p5 | teoae12")
      ->capture_default_str();
  roc_cmd->add_option("--bands", roc.bands, "Bands required to pass (2 or 3)")->capture_default_str();
  roc_cmd->add_option("--speaker", roc.speaker, "identity | nonlinear | cubic")->capture_default_str();
  roc_cmd->add_option("--csv", roc.csv_path, "Write the ROC CSV here (- for stdout)");
  roc_cmd->add_option("--json", roc.json_path, "Write the ROC JSON here (- for stdout)");
  roc_cmd->add_option("--config", roc.config, "Session config file");
  roc_cmd->add_option("--threads", roc.threads, "Worker threads (0 = all cores)");

  IntegrityOptions integrity;
  auto* integ = app.add_subcommand("integrity", "Closed-tube probe integrity check");
  integ->add_option("--seed", integrity.seed, "Noise seed")->capture_default_str();
  integ->add_option("--repetitions", integrity.repetitions, "Sessions to run")->capture_default_str();
  integ->add_option("--config", integrity.config, "Session config file");

  BenchOptions bench;
  auto* bench_cmd = app.add_subcommand("bench", "Per-window extraction latency");
  bench_cmd->add_option("--windows", bench.windows, "Number of 1 s windows")->capture_default_str();
  bench_cmd->add_option("--seed", bench.seed, "Simulation seed")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  if (*simulate) return Guarded([&] { return RunSimulate(sim, std::cout); });
  if (*scr) return Guarded([&] { return RunScreen(screen, std::cout); });
  if (*roc_cmd) return Guarded([&] { return RunRoc(roc, std::cout); });
  if (*integ) return Guarded([&] { return RunIntegrity(integrity, std::cout); });
  if (*bench_cmd) return Guarded([&] { return RunBench(bench, std::cout); });
  return kExitConfig;
}
