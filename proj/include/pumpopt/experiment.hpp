#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "pumpopt/hydrosim.hpp"
#include "pumpopt/smbo.hpp"

namespace pumpopt {

/// Invalid experiment configuration; the message starts with the offending key.
class ConfigError : public std::invalid_argument {
public:
  ConfigError(const std::string& key, const std::string& what)
      : std::invalid_argument(key + ": " + what), key_(key) {}
  const std::string& key() const { return key_; }

private:
  std::string key_;
};

/// Malformed trace file; the message names the file and line.
class TraceParseError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

struct ExperimentConfig {
  ExperimentConfig(NetworkModel net, ThresholdSpace sp)
      : network(std::move(net)), space(std::move(sp)) {}

  std::string name = "experiment";
  NetworkModel network;
  ThresholdSpace space;
  RunConfig smbo;
  std::vector<AcquisitionKind> acquisitions{AcquisitionKind::ei, AcquisitionKind::aei,
                                            AcquisitionKind::lcb};
  std::size_t replications = 20;
  bool shared_initial_design = true;
  std::uint64_t seed = 1;
  /// Explicit per-replication seeds; derived from `seed` when empty.
  std::vector<std::uint64_t> seeds;
  std::filesystem::path output_dir = "out";
  std::optional<double> baseline_cost;
  std::uint64_t enumeration_ceiling = kDefaultEnumerationCeiling;

  std::uint64_t replication_seed(std::size_t rep) const;
};

/// Parses the four-section document (network, space, smbo, experiment).
/// Relative network paths resolve against base_dir.
ExperimentConfig experiment_from_json(const nlohmann::json& doc,
                                      const std::filesystem::path& base_dir = ".");
ExperimentConfig load_experiment(const std::filesystem::path& path);

/// Initial design of replication `rep` for acquisition index `acq`. With a
/// shared design every acquisition of a replication gets the same points.
std::vector<ControlVector> initial_design_for(const ExperimentConfig& config, std::size_t rep,
                                              std::size_t acq);
RunConfig run_config_for(const ExperimentConfig& config, std::size_t rep, std::size_t acq);

/// One row of a trace file. `eval` counts evaluations from 1.
struct TraceRow {
  std::size_t eval = 0;
  std::string acquisition;
  std::size_t replication = 0;
  Proposer proposer = Proposer::init;
  std::vector<double> x;
  bool feasible = false;
  std::optional<double> y;
  std::optional<double> best_seen;
};

struct TraceFile {
  std::string name;
  std::vector<TraceRow> rows;
};

/// Six significant digits; "NA" for absent values.
std::string format_number(std::optional<double> v);

void write_trace_csv(std::ostream& out, const RunTrace& trace, const std::string& acquisition,
                     std::size_t replication);
TraceFile parse_trace_csv(std::istream& in, const std::string& name);
TraceFile read_trace_file(const std::filesystem::path& path);

struct AggregateRow {
  std::size_t eval = 0;  // evaluations after the initial design
  std::string acquisition;
  std::optional<double> mean;
  std::optional<double> stddev;  // population
};

struct SummaryRow {
  std::string acquisition;
  std::size_t replications = 0;
  std::optional<double> best_final;
  std::optional<double> mean_final;
  std::optional<double> std_final;
  std::optional<double> baseline;
  std::optional<double> reduction;  // baseline - best_final
};

/// Best-seen mean/std per acquisition and eval index, where index 0 is the
/// end of the initial design. Acquisitions are listed in order of first
/// appearance.
std::vector<AggregateRow> aggregate_best_seen(const std::vector<TraceFile>& traces);
std::vector<SummaryRow> summarize(const std::vector<TraceFile>& traces,
                                  std::optional<double> baseline);

void write_aggregate_csv(std::ostream& out, const std::vector<AggregateRow>& rows);
void write_summary_csv(std::ostream& out, const std::vector<SummaryRow>& rows);

/// Writes via a temporary file and rename.
void write_file_atomic(const std::filesystem::path& path, const std::string& contents);

struct RunOutcome {
  std::vector<std::filesystem::path> trace_files;
  std::vector<AggregateRow> aggregate;
  std::vector<SummaryRow> summary;
};

/// Runs every (acquisition, replication) pair on up to `jobs` threads and
/// writes traces/, best_seen.csv, summary.csv and run_info.json under `out`.
RunOutcome cmd_run(const ExperimentConfig& config, std::size_t jobs,
                   const std::optional<std::filesystem::path>& out = std::nullopt);

/// Regenerates best_seen.csv and summary.csv from the trace files in `dir`
/// (or `dir`/traces). The baseline comes from run_info.json when present.
RunOutcome cmd_report(const std::filesystem::path& dir,
                      std::optional<double> baseline = std::nullopt);

struct OracleRow {
  ControlVector x;
  bool feasible = false;
  std::optional<double> cost;
};

struct OracleReport {
  std::vector<OracleRow> table;
  std::optional<std::size_t> optimum;  // index into table
};

/// Simulates every admissible vector of the discrete space.
OracleReport run_oracle(const ExperimentConfig& config);

/// run_oracle plus oracle.csv and oracle_optimum.csv under `out`.
OracleReport cmd_oracle(const ExperimentConfig& config,
                        const std::optional<std::filesystem::path>& out = std::nullopt);

}  // namespace pumpopt
