#include "pumpopt/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <exception>
#include <fstream>
#include <map>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

namespace pumpopt {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// ---------------------------------------------------------------------------
// Config helpers. Every section rejects unknown keys so typos surface as
// errors naming the key instead of silently falling back to defaults.

void reject_unknown(const json& section, const std::string& path,
                    std::initializer_list<const char*> known) {
  if (!section.is_object()) throw ConfigError(path, "expected an object");
  for (const auto& [key, value] : section.items()) {
    const bool ok = std::any_of(known.begin(), known.end(), [&](const char* k) { return key == k; });
    if (!ok) throw ConfigError(path + "." + key, "unknown key");
  }
}

template <typename T>
T get(const json& section, const std::string& path, const char* key, T fallback) {
  if (!section.contains(key)) return fallback;
  try {
    return section.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(path + "." + key, std::string("invalid value (") + e.what() + ")");
  }
}

std::size_t get_count(const json& section, const std::string& path, const char* key,
                      std::size_t fallback, std::size_t minimum) {
  if (!section.contains(key)) return fallback;
  const auto& v = section.at(key);
  if (!v.is_number_integer() || v.get<long long>() < static_cast<long long>(minimum)) {
    throw ConfigError(path + "." + key, "expected an integer >= " + std::to_string(minimum));
  }
  return v.get<std::size_t>();
}

DiscreteSet parse_set(const json& j, const std::string& path) {
  reject_unknown(j, path, {"min", "max", "step", "cardinality", "values"});
  try {
    if (j.contains("values")) {
      if (j.contains("min") || j.contains("max") || j.contains("step")) {
        throw ConfigError(path, "give either values or min/max/step, not both");
      }
      DiscreteSet set(get<std::vector<double>>(j, path, "values", {}));
      if (j.contains("cardinality") && get<std::size_t>(j, path, "cardinality", 0) != set.size()) {
        throw ConfigError(path + ".cardinality", "does not match the number of values");
      }
      return set;
    }
    for (const char* key : {"min", "max", "step"}) {
      if (!j.contains(key)) throw ConfigError(path + "." + key, "missing");
    }
    DiscreteSet set = DiscreteSet::from_range(get<double>(j, path, "min", 0.0),
                                              get<double>(j, path, "max", 0.0),
                                              get<double>(j, path, "step", 0.0));
    if (j.contains("cardinality")) {
      const auto stated = get<std::size_t>(j, path, "cardinality", 0);
      if (stated != set.size()) {
        throw ConfigError(path + ".cardinality", "range yields " + std::to_string(set.size()) +
                                                     " values, config states " +
                                                     std::to_string(stated));
      }
    }
    return set;
  } catch (const ConfigError&) {
    throw;
  } catch (const std::invalid_argument& e) {
    throw ConfigError(path, e.what());
  }
}

std::vector<DiscreteSet> parse_sets(const json& j, const std::string& path, std::size_t tau) {
  if (j.is_array()) {
    if (j.size() != tau) {
      throw ConfigError(path, "expected " + std::to_string(tau) + " sets, got " +
                                  std::to_string(j.size()));
    }
    std::vector<DiscreteSet> sets;
    for (std::size_t i = 0; i < j.size(); ++i) {
      sets.push_back(parse_set(j[i], path + "[" + std::to_string(i) + "]"));
    }
    return sets;
  }
  return std::vector<DiscreteSet>(tau, parse_set(j, path));
}

ForestParams parse_forest(const json& j, const std::string& path, ForestParams params) {
  reject_unknown(j, path, {"num_trees", "features_per_split", "min_leaf", "bootstrap"});
  params.num_trees = get_count(j, path, "num_trees", params.num_trees, 1);
  params.features_per_split = get_count(j, path, "features_per_split", params.features_per_split, 0);
  params.min_leaf = get_count(j, path, "min_leaf", params.min_leaf, 1);
  params.bootstrap = get<bool>(j, path, "bootstrap", params.bootstrap);
  return params;
}

NetworkModel parse_network(const json& j, const fs::path& base_dir) {
  try {
    if (j.is_string()) {
      const auto name = j.get<std::string>();
      if (name == "tiny" || name == "desk") return builtin_network(name);
      const fs::path p = fs::path(name).is_absolute() ? fs::path(name) : base_dir / name;
      return load_network(p.string());
    }
    if (j.is_object() && j.contains("builtin")) return builtin_network(j.at("builtin").get<std::string>());
    if (j.is_object() && j.contains("file")) {
      const fs::path p = j.at("file").get<std::string>();
      return load_network((p.is_absolute() ? p : base_dir / p).string());
    }
    if (j.is_object()) return network_from_json(j);
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    throw ConfigError("network", e.what());
  }
  throw ConfigError("network", "expected a built-in name, a file path or an inline definition");
}

// ---------------------------------------------------------------------------
// CSV helpers.

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream in(line);
  while (std::getline(in, field, ',')) out.push_back(field);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

std::optional<double> parse_number(const std::string& text, bool allow_na) {
  if (allow_na && text == "NA") return std::nullopt;
  double v = 0.0;
  const auto* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, v);
  if (ec != std::errc() || ptr != end || text.empty()) throw std::invalid_argument("bad number '" + text + "'");
  return v;
}

std::size_t parse_index(const std::string& text) {
  std::size_t v = 0;
  const auto* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, v);
  if (ec != std::errc() || ptr != end || text.empty()) throw std::invalid_argument("bad integer '" + text + "'");
  return v;
}

std::string trace_file_name(const std::string& acquisition, std::size_t rep) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%s_rep%03zu.csv", acquisition.c_str(), rep);
  return buf;
}

bool is_aggregate_file(const fs::path& p) {
  const auto name = p.filename().string();
  return name == "best_seen.csv" || name == "summary.csv" || name.rfind("oracle", 0) == 0;
}

std::vector<TraceFile> read_traces(const fs::path& dir) {
  std::vector<fs::path> files;
  if (fs::exists(dir)) {
    for (const auto& entry : fs::directory_iterator(dir)) {
      if (entry.is_regular_file() && entry.path().extension() == ".csv" &&
          !is_aggregate_file(entry.path())) {
        files.push_back(entry.path());
      }
    }
  }
  std::sort(files.begin(), files.end());
  std::vector<TraceFile> traces;
  for (const auto& f : files) traces.push_back(read_trace_file(f));
  return traces;
}

std::string render_aggregates(const RunOutcome& outcome, bool summary) {
  std::ostringstream out;
  if (summary) write_summary_csv(out, outcome.summary);
  else write_aggregate_csv(out, outcome.aggregate);
  return out.str();
}

RunOutcome report_into(const fs::path& trace_dir, const fs::path& out_dir,
                       std::optional<double> baseline) {
  RunOutcome outcome;
  const auto traces = read_traces(trace_dir);
  for (const auto& t : traces) outcome.trace_files.push_back(trace_dir / t.name);
  outcome.aggregate = aggregate_best_seen(traces);
  outcome.summary = summarize(traces, baseline);
  write_file_atomic(out_dir / "best_seen.csv", render_aggregates(outcome, false));
  write_file_atomic(out_dir / "summary.csv", render_aggregates(outcome, true));
  return outcome;
}

std::pair<double, double> mean_std(const std::vector<double>& values) {
  double sum = 0.0;
  for (double v : values) sum += v;
  const double mean = sum / static_cast<double>(values.size());
  double ss = 0.0;
  for (double v : values) ss += (v - mean) * (v - mean);
  return {mean, std::sqrt(ss / static_cast<double>(values.size()))};
}

}  // namespace

// ---------------------------------------------------------------------------

std::uint64_t ExperimentConfig::replication_seed(std::size_t rep) const {
  if (!seeds.empty()) return seeds.at(rep);
  return mix_seed(seed, rep);
}

ExperimentConfig experiment_from_json(const json& doc, const fs::path& base_dir) {
  reject_unknown(doc, "config", {"network", "space", "smbo", "experiment"});
  if (!doc.contains("network")) throw ConfigError("network", "missing");
  NetworkModel network = parse_network(doc.at("network"), base_dir);

  const json empty = json::object();
  const json& sp = doc.contains("space") ? doc.at("space") : empty;
  const json& sm = doc.contains("smbo") ? doc.at("smbo") : empty;
  const json& ex = doc.contains("experiment") ? doc.at("experiment") : empty;
  reject_unknown(sp, "space", {"mode", "tau", "lower", "upper"});
  reject_unknown(sm, "smbo", {"init_design_size", "budget", "beta", "sigma_eps",
                              "feasibility_weighting", "handling", "penalty_value",
                              "penalty_factor", "forest", "classifier", "focus"});
  reject_unknown(ex, "experiment", {"name", "acquisitions", "replications", "shared_initial_design",
                                    "seed", "seeds", "output_dir", "baseline_cost", "mode",
                                    "enumeration_ceiling"});

  const std::size_t tau = get_count(sp, "space", "tau", network.pair_count(), 1);
  for (const char* key : {"lower", "upper"}) {
    if (!sp.contains(key)) throw ConfigError(std::string("space.") + key, "missing");
  }
  std::string mode_text = get<std::string>(sp, "space", "mode", "discrete");
  mode_text = get<std::string>(ex, "experiment", "mode", mode_text);
  SpaceMode mode;
  try {
    mode = parse_space_mode(mode_text);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(ex.contains("mode") ? "experiment.mode" : "space.mode", e.what());
  }
  auto lower = parse_sets(sp.at("lower"), "space.lower", tau);
  auto upper = parse_sets(sp.at("upper"), "space.upper", tau);
  std::optional<ThresholdSpace> space;
  try {
    space.emplace(std::move(lower), std::move(upper), mode);
    network.check_against(*space);
  } catch (const std::invalid_argument& e) {
    throw ConfigError("space", e.what());
  }

  ExperimentConfig config(std::move(network), std::move(*space));
  auto& run = config.smbo;
  run.init_design_size = get_count(sm, "smbo", "init_design_size", run.init_design_size, 2);
  run.budget = get_count(sm, "smbo", "budget", run.budget, 0);
  run.acquisition.beta = get<double>(sm, "smbo", "beta", run.acquisition.beta);
  run.acquisition.sigma_eps = get<double>(sm, "smbo", "sigma_eps", run.acquisition.sigma_eps);
  if (run.acquisition.beta < 0.0) throw ConfigError("smbo.beta", "must be non-negative");
  if (run.acquisition.sigma_eps < 0.0) throw ConfigError("smbo.sigma_eps", "must be non-negative");
  run.acquisition.feasibility_weighting =
      get<bool>(sm, "smbo", "feasibility_weighting", run.acquisition.feasibility_weighting);
  try {
    run.handling = parse_constraint_handling(get<std::string>(sm, "smbo", "handling", "classifier"));
  } catch (const ConfigError&) {
    throw;
  } catch (const std::invalid_argument& e) {
    throw ConfigError("smbo.handling", e.what());
  }
  if (sm.contains("penalty_value")) run.penalty_value = get<double>(sm, "smbo", "penalty_value", 0.0);
  run.penalty_factor = get<double>(sm, "smbo", "penalty_factor", run.penalty_factor);
  if (!(run.penalty_factor > 0.0)) throw ConfigError("smbo.penalty_factor", "must be positive");
  if (sm.contains("forest")) run.forest = parse_forest(sm.at("forest"), "smbo.forest", run.forest);
  if (sm.contains("classifier")) {
    run.classifier = parse_forest(sm.at("classifier"), "smbo.classifier", run.classifier);
  }
  if (sm.contains("focus")) {
    const auto& f = sm.at("focus");
    reject_unknown(f, "smbo.focus", {"points_per_iter", "shrink_iters", "restarts"});
    run.focus.points_per_iter = get_count(f, "smbo.focus", "points_per_iter", run.focus.points_per_iter, 1);
    run.focus.shrink_iters = get_count(f, "smbo.focus", "shrink_iters", run.focus.shrink_iters, 0);
    run.focus.restarts = get_count(f, "smbo.focus", "restarts", run.focus.restarts, 1);
  }

  config.name = get<std::string>(ex, "experiment", "name", config.name);
  if (ex.contains("acquisitions")) {
    const auto names = get<std::vector<std::string>>(ex, "experiment", "acquisitions", {});
    if (names.empty()) throw ConfigError("experiment.acquisitions", "must not be empty");
    config.acquisitions.clear();
    for (const auto& n : names) {
      try {
        const auto kind = parse_acquisition(n);
        if (std::find(config.acquisitions.begin(), config.acquisitions.end(), kind) !=
            config.acquisitions.end()) {
          throw ConfigError("experiment.acquisitions", "duplicate '" + n + "'");
        }
        config.acquisitions.push_back(kind);
      } catch (const ConfigError&) {
        throw;
      } catch (const std::invalid_argument& e) {
        throw ConfigError("experiment.acquisitions", e.what());
      }
    }
  }
  config.replications = get_count(ex, "experiment", "replications", config.replications, 1);
  config.shared_initial_design =
      get<bool>(ex, "experiment", "shared_initial_design", config.shared_initial_design);
  config.seed = get<std::uint64_t>(ex, "experiment", "seed", config.seed);
  config.seeds = get<std::vector<std::uint64_t>>(ex, "experiment", "seeds", {});
  if (!config.seeds.empty() && config.seeds.size() < config.replications) {
    throw ConfigError("experiment.seeds", "needs one seed per replication");
  }
  const auto out = get<std::string>(ex, "experiment", "output_dir", config.output_dir.string());
  config.output_dir = fs::path(out).is_absolute() ? fs::path(out) : base_dir / out;
  if (ex.contains("baseline_cost")) {
    config.baseline_cost = get<double>(ex, "experiment", "baseline_cost", 0.0);
  }
  config.enumeration_ceiling =
      get<std::uint64_t>(ex, "experiment", "enumeration_ceiling", config.enumeration_ceiling);
  return config;
}

ExperimentConfig load_experiment(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config", "cannot open '" + path.string() + "'");
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::exception& e) {
    throw ConfigError("config", std::string("not valid JSON (") + e.what() + ")");
  }
  return experiment_from_json(doc, path.parent_path());
}

std::vector<ControlVector> initial_design_for(const ExperimentConfig& config, std::size_t rep,
                                              std::size_t acq) {
  const std::uint64_t base = config.replication_seed(rep);
  const std::uint64_t seed = config.shared_initial_design ? mix_seed(base, 0x1D) : mix_seed(mix_seed(base, acq + 1), 0x1D);
  return lhs_sample(config.space, config.smbo.init_design_size, seed);
}

RunConfig run_config_for(const ExperimentConfig& config, std::size_t rep, std::size_t acq) {
  RunConfig run = config.smbo;
  run.acquisition.kind = config.acquisitions.at(acq);
  const std::uint64_t base = config.replication_seed(rep);
  run.seed = config.shared_initial_design ? base : mix_seed(base, acq + 1);
  return run;
}

std::string format_number(std::optional<double> v) {
  if (!v) return "NA";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", *v == 0.0 ? 0.0 : *v);
  return buf;
}

void write_trace_csv(std::ostream& out, const RunTrace& trace, const std::string& acquisition,
                     std::size_t replication) {
  const std::size_t d = trace.entries.empty() ? 0 : trace.entries.front().observation.x.size();
  out << "eval,acquisition,replication,proposer";
  for (std::size_t i = 0; i < d; ++i) out << ",x" << (i + 1);
  out << ",feasible,y,best_seen\n";
  for (std::size_t n = 0; n < trace.entries.size(); ++n) {
    const auto& e = trace.entries[n];
    out << (n + 1) << ',' << acquisition << ',' << replication << ',' << to_string(e.proposer);
    for (double v : e.observation.x.values()) out << ',' << format_number(v);
    out << ',' << (e.observation.feasible() ? 1 : 0) << ',' << format_number(e.observation.y) << ','
        << format_number(e.best_seen) << '\n';
  }
}

TraceFile parse_trace_csv(std::istream& in, const std::string& name) {
  TraceFile file{name, {}};
  std::string line;
  std::size_t line_no = 0;
  auto fail = [&](const std::string& what) -> TraceParseError {
    return TraceParseError(name + ":" + std::to_string(line_no) + ": " + what);
  };

  if (!std::getline(in, line)) {
    line_no = 1;
    throw fail("empty file, expected a trace header");
  }
  ++line_no;
  const auto header = split_csv(line);
  const std::vector<std::string> lead{"eval", "acquisition", "replication", "proposer"};
  if (header.size() < lead.size() + 3 || !std::equal(lead.begin(), lead.end(), header.begin())) {
    throw fail("not a trace header");
  }
  const std::size_t d = header.size() - lead.size() - 3;
  for (std::size_t i = 0; i < d; ++i) {
    if (header[lead.size() + i] != "x" + std::to_string(i + 1)) throw fail("unexpected column '" + header[lead.size() + i] + "'");
  }
  if (header[header.size() - 3] != "feasible" || header[header.size() - 2] != "y" ||
      header.back() != "best_seen") {
    throw fail("trace header must end with feasible,y,best_seen");
  }

  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto fields = split_csv(line);
    if (fields.size() != header.size()) {
      throw fail("expected " + std::to_string(header.size()) + " fields, got " +
                 std::to_string(fields.size()));
    }
    try {
      TraceRow row;
      row.eval = parse_index(fields[0]);
      row.acquisition = fields[1];
      row.replication = parse_index(fields[2]);
      row.proposer = parse_proposer(fields[3]);
      for (std::size_t i = 0; i < d; ++i) row.x.push_back(*parse_number(fields[4 + i], false));
      const auto& feas = fields[4 + d];
      if (feas != "0" && feas != "1") throw std::invalid_argument("feasible must be 0 or 1");
      row.feasible = feas == "1";
      row.y = parse_number(fields[5 + d], true);
      row.best_seen = parse_number(fields[6 + d], true);
      if (row.feasible != row.y.has_value()) {
        throw std::invalid_argument("y must be present exactly for feasible rows");
      }
      file.rows.push_back(std::move(row));
    } catch (const std::invalid_argument& e) {
      throw fail(e.what());
    }
  }
  return file;
}

TraceFile read_trace_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw TraceParseError(path.string() + ": cannot open");
  return parse_trace_csv(in, path.filename().string());
}

std::vector<AggregateRow> aggregate_best_seen(const std::vector<TraceFile>& traces) {
  std::vector<std::string> order;
  std::map<std::string, std::vector<const TraceFile*>> groups;
  for (const auto& t : traces) {
    if (t.rows.empty()) continue;
    const auto& acq = t.rows.front().acquisition;
    if (!groups.contains(acq)) order.push_back(acq);
    groups[acq].push_back(&t);
  }

  std::vector<AggregateRow> rows;
  for (const auto& acq : order) {
    const auto& group = groups[acq];
    std::vector<std::size_t> init(group.size());
    std::size_t max_index = 0;
    for (std::size_t g = 0; g < group.size(); ++g) {
      const auto& r = group[g]->rows;
      init[g] = static_cast<std::size_t>(std::count_if(
          r.begin(), r.end(), [](const TraceRow& row) { return row.proposer == Proposer::init; }));
      max_index = std::max(max_index, r.size() - std::min(r.size(), std::max<std::size_t>(init[g], 1)));
    }
    for (std::size_t i = 0; i <= max_index; ++i) {
      std::vector<double> values;
      for (std::size_t g = 0; g < group.size(); ++g) {
        const std::size_t row = std::max<std::size_t>(init[g], 1) - 1 + i;
        if (row < group[g]->rows.size() && group[g]->rows[row].best_seen) {
          values.push_back(*group[g]->rows[row].best_seen);
        }
      }
      AggregateRow out{i, acq, std::nullopt, std::nullopt};
      if (!values.empty()) {
        const auto [mean, sd] = mean_std(values);
        out.mean = mean;
        out.stddev = sd;
      }
      rows.push_back(std::move(out));
    }
  }
  return rows;
}

std::vector<SummaryRow> summarize(const std::vector<TraceFile>& traces,
                                  std::optional<double> baseline) {
  std::vector<std::string> order;
  std::map<std::string, std::vector<const TraceFile*>> groups;
  for (const auto& t : traces) {
    if (t.rows.empty()) continue;
    const auto& acq = t.rows.front().acquisition;
    if (!groups.contains(acq)) order.push_back(acq);
    groups[acq].push_back(&t);
  }
  std::vector<SummaryRow> rows;
  for (const auto& acq : order) {
    SummaryRow row;
    row.acquisition = acq;
    row.replications = groups[acq].size();
    row.baseline = baseline;
    std::vector<double> finals;
    for (const auto* t : groups[acq]) {
      if (t->rows.back().best_seen) finals.push_back(*t->rows.back().best_seen);
    }
    if (!finals.empty()) {
      row.best_final = *std::min_element(finals.begin(), finals.end());
      const auto [mean, sd] = mean_std(finals);
      row.mean_final = mean;
      row.std_final = sd;
      if (baseline) row.reduction = *baseline - *row.best_final;
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

void write_aggregate_csv(std::ostream& out, const std::vector<AggregateRow>& rows) {
  out << "eval,acquisition,mean_best_seen,std_best_seen\n";
  for (const auto& r : rows) {
    out << r.eval << ',' << r.acquisition << ',' << format_number(r.mean) << ','
        << format_number(r.stddev) << '\n';
  }
}

void write_summary_csv(std::ostream& out, const std::vector<SummaryRow>& rows) {
  out << "acquisition,replications,best_final,mean_final,std_final,baseline,cost_reduction\n";
  for (const auto& r : rows) {
    out << r.acquisition << ',' << r.replications << ',' << format_number(r.best_final) << ','
        << format_number(r.mean_final) << ',' << format_number(r.std_final) << ','
        << format_number(r.baseline) << ',' << format_number(r.reduction) << '\n';
  }
}

void write_file_atomic(const fs::path& path, const std::string& contents) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write '" + tmp.string() + "'");
    out << contents;
    if (!out.flush()) throw std::runtime_error("failed writing '" + tmp.string() + "'");
  }
  fs::rename(tmp, path);
}

RunOutcome cmd_run(const ExperimentConfig& config, std::size_t jobs,
                   const std::optional<fs::path>& out) {
  const fs::path dir = out.value_or(config.output_dir);
  const fs::path trace_dir = dir / "traces";
  fs::create_directories(trace_dir);

  struct Task {
    std::size_t acq;
    std::size_t rep;
  };
  std::vector<Task> tasks;
  for (std::size_t a = 0; a < config.acquisitions.size(); ++a) {
    for (std::size_t r = 0; r < config.replications; ++r) tasks.push_back({a, r});
  }

  const NetworkModel& net = config.network;
  const ThresholdSpace& space = config.space;
  const Evaluator evaluator = [&](const ControlVector& x) { return evaluate(net, x, space); };

  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto worker = [&] {
    while (true) {
      const std::size_t i = next.fetch_add(1);
      if (i >= tasks.size()) return;
      {
        std::lock_guard lock(error_mutex);
        if (error) return;
      }
      try {
        const auto [a, r] = tasks[i];
        const RunTrace trace = run(space, evaluator, run_config_for(config, r, a),
                                   initial_design_for(config, r, a));
        std::ostringstream csv;
        const auto name = to_string(config.acquisitions[a]);
        write_trace_csv(csv, trace, name, r);
        write_file_atomic(trace_dir / trace_file_name(name, r), csv.str());
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!error) error = std::current_exception();
      }
    }
  };
  const std::size_t threads = std::clamp<std::size_t>(jobs, 1, std::max<std::size_t>(1, tasks.size()));
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  if (error) std::rethrow_exception(error);

  json info;
  info["name"] = config.name;
  info["mode"] = to_string(space.mode());
  info["dim"] = space.dim();
  info["replications"] = config.replications;
  info["shared_initial_design"] = config.shared_initial_design;
  info["acquisitions"] = json::array();
  for (auto k : config.acquisitions) info["acquisitions"].push_back(to_string(k));
  info["baseline_cost"] = config.baseline_cost ? json(*config.baseline_cost) : json(nullptr);
  write_file_atomic(dir / "run_info.json", info.dump(2) + "\n");

  return report_into(trace_dir, dir, config.baseline_cost);
}

RunOutcome cmd_report(const fs::path& dir, std::optional<double> baseline) {
  if (!fs::is_directory(dir)) throw std::runtime_error("'" + dir.string() + "' is not a directory");
  if (!baseline && fs::exists(dir / "run_info.json")) {
    std::ifstream in(dir / "run_info.json");
    try {
      const auto info = json::parse(in);
      if (info.contains("baseline_cost") && info.at("baseline_cost").is_number()) {
        baseline = info.at("baseline_cost").get<double>();
      }
    } catch (const json::exception& e) {
      throw std::runtime_error((dir / "run_info.json").string() + ": " + e.what());
    }
  }
  const fs::path trace_dir = fs::is_directory(dir / "traces") ? dir / "traces" : dir;
  return report_into(trace_dir, dir, baseline);
}

OracleReport run_oracle(const ExperimentConfig& config) {
  if (!config.space.discrete()) {
    throw std::invalid_argument("the oracle needs a discrete space");
  }
  OracleReport report;
  for (auto& x : enumerate_feasible(config.space, config.enumeration_ceiling)) {
    const auto obs = evaluate(config.network, x, config.space);
    if (obs.y && (!report.optimum || *obs.y < *report.table[*report.optimum].cost)) {
      report.optimum = report.table.size();
    }
    report.table.push_back({std::move(x), obs.feasible(), obs.y});
  }
  return report;
}

OracleReport cmd_oracle(const ExperimentConfig& config, const std::optional<fs::path>& out) {
  OracleReport report = run_oracle(config);
  const fs::path dir = out.value_or(config.output_dir);
  std::ostringstream header;
  for (std::size_t i = 0; i < config.space.dim(); ++i) header << 'x' << (i + 1) << ',';
  header << "feasible,cost\n";
  auto row = [](std::ostream& os, const OracleRow& r) {
    for (double v : r.x.values()) os << format_number(v) << ',';
    os << (r.feasible ? 1 : 0) << ',' << format_number(r.cost) << '\n';
  };
  std::ostringstream table;
  table << header.str();
  for (const auto& r : report.table) row(table, r);
  std::ostringstream optimum;
  optimum << header.str();
  if (report.optimum) row(optimum, report.table[*report.optimum]);
  write_file_atomic(dir / "oracle.csv", table.str());
  write_file_atomic(dir / "oracle_optimum.csv", optimum.str());
  return report;
}

}  // namespace pumpopt
