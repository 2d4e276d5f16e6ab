// Experiment runner for threshold-based pump control optimization.
//
//   pumpopt run --config <file> [--jobs k] [--out dir]
//   pumpopt oracle --config <file> [--out dir]
//   pumpopt report --dir <dir> [--baseline cost]

#include <cstdio>
#include <exception>
#include <iostream>
#include <optional>
#include <string>
#include <thread>

#include <CLI11.hpp>

#include "pumpopt/experiment.hpp"

namespace {

void print_summary(const std::vector<pumpopt::SummaryRow>& rows) {
  for (const auto& r : rows) {
    std::cout << r.acquisition << ": best " << pumpopt::format_number(r.best_final) << ", mean "
              << pumpopt::format_number(r.mean_final) << " +/- "
              << pumpopt::format_number(r.std_final);
    if (r.reduction) std::cout << ", reduction " << pumpopt::format_number(r.reduction);
    std::cout << " (" << r.replications << " runs)\n";
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Sequential model-based optimization of pump control thresholds"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir;
  std::size_t jobs = std::max(1u, std::thread::hardware_concurrency());
  auto* run = app.add_subcommand("run", "Run SMBO replications and write traces and aggregates");
  run->add_option("--config", config_path, "Experiment configuration (JSON)")->required();
  run->add_option("--jobs", jobs, "Concurrent replications")->check(CLI::PositiveNumber);
  run->add_option("--out", out_dir, "Output directory (overrides experiment.output_dir)");

  auto* oracle = app.add_subcommand("oracle", "Evaluate every admissible point of a discrete space");
  oracle->add_option("--config", config_path, "Experiment configuration (JSON)")->required();
  oracle->add_option("--out", out_dir, "Output directory (overrides experiment.output_dir)");

  std::string report_dir;
  std::optional<double> baseline;
  auto* report = app.add_subcommand("report", "Regenerate aggregates from trace files");
  report->add_option("--dir", report_dir, "Run output or trace directory")->required();
  report->add_option("--baseline", baseline, "Baseline cost for the reduction column");

  CLI11_PARSE(app, argc, argv);

  try {
    const std::optional<std::filesystem::path> out =
        out_dir.empty() ? std::nullopt : std::optional<std::filesystem::path>(out_dir);
    if (run->parsed()) {
      const auto config = pumpopt::load_experiment(config_path);
      const auto outcome = pumpopt::cmd_run(config, jobs, out);
      std::cout << "wrote " << outcome.trace_files.size() << " traces to "
                << out.value_or(config.output_dir).string() << '\n';
      print_summary(outcome.summary);
    } else if (oracle->parsed()) {
      const auto config = pumpopt::load_experiment(config_path);
      const auto result = pumpopt::cmd_oracle(config, out);
      std::cout << "evaluated " << result.table.size() << " admissible points\n";
      if (result.optimum) {
        const auto& best = result.table[*result.optimum];
        std::cout << "optimum cost " << pumpopt::format_number(best.cost) << " at (";
        for (std::size_t i = 0; i < best.x.size(); ++i) {
          std::cout << (i ? ", " : "") << pumpopt::format_number(best.x[i]);
        }
        std::cout << ")\n";
      } else {
        std::cout << "no feasible point\n";
      }
    } else if (report->parsed()) {
      const auto outcome = pumpopt::cmd_report(report_dir, baseline);
      std::cout << "aggregated " << outcome.trace_files.size() << " traces\n";
      print_summary(outcome.summary);
    }
  } catch (const pumpopt::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
