// Acceptance checks. Prints one [PASS]/[FAIL] line per criterion and exits
// nonzero if any criterion fails.
//
//   acceptance [--out dir]

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "precise.hpp"
#include "pumpopt/acquisition.hpp"
#include "pumpopt/experiment.hpp"
#include "pumpopt/hydrosim.hpp"
#include "pumpopt/surrogate.hpp"

using namespace pumpopt;
namespace fs = std::filesystem;

namespace {

struct Verdict {
  int id;
  std::string name;
  bool pass;
  std::string detail;
};

class Stopwatch {
public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

std::string fmt(const char* format, auto... args) {
  char buf[256];
  std::snprintf(buf, sizeof buf, format, args...);
  return buf;
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

fs::path config_path(const std::string& name) {
  return fs::path(PUMPOPT_DATA_DIR).parent_path() / "configs" / name;
}

std::size_t jobs() { return std::max(1u, std::thread::hardware_concurrency()); }

std::vector<double> linspace(double lo, double hi, int n) {
  std::vector<double> v;
  for (int i = 0; i < n; ++i) v.push_back(lo + (hi - lo) * i / (n - 1));
  return v;
}

Verdict acquisition_math() {
  const auto mus = linspace(-3.0, 3.0, 10);
  const auto sigmas = linspace(0.0, 5.0, 10);
  const auto y_pluses = linspace(-2.0, 2.0, 10);
  const auto epsilons = linspace(0.0, 4.0, 10);

  // Implementation over the grid, timed on its own.
  Stopwatch watch;
  std::vector<double> e;
  std::vector<double> a;
  std::vector<double> l;
  for (double mu : mus)
    for (double s : sigmas)
      for (double y : y_pluses)
        for (double eps : epsilons) {
          e.push_back(ei(mu, s, y));
          a.push_back(aei(mu, s, y, eps));
          l.push_back(lcb(mu, s, 1.0 + eps));
        }
  const double runtime = watch.seconds();

  double max_err = 0.0;
  bool exact = true;
  std::size_t i = 0;
  for (double mu : mus)
    for (double s : sigmas)
      for (double y : y_pluses) {
        const double ref_ei = precise::ei(mu, s, y);
        for (double eps : epsilons) {
          max_err = std::max(max_err, std::abs(e[i] - ref_ei));
          max_err = std::max(max_err, std::abs(a[i] - precise::aei(mu, s, y, eps)));
          max_err = std::max(max_err, std::abs(l[i] - precise::lcb(mu, s, 1.0 + eps)));
          if (s == 0.0) exact = exact && e[i] == 0.0 && a[i] == 0.0;
          if (eps == 0.0) exact = exact && a[i] == e[i];
          ++i;
        }
      }

  double sym_err = std::abs(std_normal_cdf(0.0) - 0.5);
  for (double z = -8.0; z <= 8.0; z += 0.001) {
    sym_err = std::max(sym_err, std::abs(std_normal_cdf(z) + std_normal_cdf(-z) - 1.0));
  }
  const bool pass = max_err <= 1e-9 && exact && sym_err <= 1e-12 && runtime < 1.0;
  return {1, "acquisition math", pass,
          fmt("%zu grid points, max abs err %.2e, sigma=0 and eps=0 identities %s, cdf symmetry err %.2e, %.3f s",
              e.size(), max_err, exact ? "exact" : "VIOLATED", sym_err, runtime)};
}

Verdict lhs_stratification() {
  const auto config = load_experiment(config_path("desk_discrete.json"));
  const auto& space = config.space;
  bool strata = true;
  bool admissible = true;
  std::size_t points = 0;
  for (std::size_t n : {5u, 10u, 50u}) {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      const auto design = lhs_design(space, n, seed);
      for (std::size_t k = 0; k < space.dim(); ++k) {
        std::vector<int> occupancy(n, 0);
        for (const auto& row : design.unit) {
          const auto cell = static_cast<std::size_t>(row[k] * static_cast<double>(n));
          if (cell < n) ++occupancy[cell];
        }
        strata = strata && std::all_of(occupancy.begin(), occupancy.end(), [](int c) { return c == 1; });
      }
      for (const auto& x : design.points) admissible = admissible && validate(x, space).admissible();
      points += design.points.size();
    }
  }
  return {5, "LHS stratification", strata && admissible,
          fmt("n in {5,10,50} x 20 seeds, d=%zu: one sample per stratum %s, %zu/%zu points admissible",
              space.dim(), strata ? "in every coordinate" : "VIOLATED", admissible ? points : 0, points)};
}

Verdict forest_exactness() {
  Rng rng(2024);
  TrainingSet data;
  data.dim = 4;
  for (int i = 0; i < 50; ++i) {
    std::vector<double> x{rng.uniform(0, 1), rng.uniform(0, 1), rng.uniform(0, 1), rng.uniform(0, 1)};
    data.add(x, std::sin(6 * x[0]) + x[1] * x[2] - 2 * x[3]);
  }
  const ForestParams exact{.num_trees = 100, .features_per_split = 0, .min_leaf = 1, .bootstrap = false};
  const auto model = RegressionForest::fit(data, exact, 1);
  std::size_t reproduced = 0;
  for (std::size_t i = 0; i < data.rows(); ++i) reproduced += model.predict(data.row(i)).mu == data.targets[i];

  bool sigma_ok = true;
  for (int i = 0; i < 2000; ++i) {
    const std::vector<double> x{rng.uniform(-0.5, 1.5), rng.uniform(-0.5, 1.5), rng.uniform(-0.5, 1.5), rng.uniform(-0.5, 1.5)};
    sigma_ok = sigma_ok && model.predict(x).sigma >= 0.0;
  }

  auto constant = data;
  std::fill(constant.targets.begin(), constant.targets.end(), 3.5);
  const auto flat = RegressionForest::fit(constant, ForestParams{}, 2);
  bool zero = true;
  for (int i = 0; i < 2000; ++i) {
    const std::vector<double> x{rng.uniform(0, 1), rng.uniform(0, 1), rng.uniform(0, 1), rng.uniform(0, 1)};
    const auto p = flat.predict(x);
    zero = zero && p.sigma == 0.0 && p.mu == 3.5;
  }
  const bool pass = reproduced == data.rows() && sigma_ok && zero;
  return {6, "forest exactness", pass,
          fmt("%zu/50 targets reproduced exactly, sigma >= 0 %s, constant data sigma = 0 %s", reproduced,
              sigma_ok ? "everywhere" : "VIOLATED", zero ? "everywhere" : "VIOLATED")};
}

Verdict simulator_conservation() {
  const auto net = desk_network();
  const auto space = load_experiment(config_path("desk_discrete.json")).space;
  Rng rng(7);
  int feasible = 0;
  double worst = 0.0;
  while (feasible < 100) {
    const auto x = sample_uniform(space, rng);
    const auto result = simulate(net, x, space);
    if (!result.feasible) continue;
    ++feasible;
    double stored = 0.0;
    for (std::size_t t = 0; t < net.tanks.size(); ++t) {
      stored += net.tanks[t].area * (result.level.back()[t] - net.tanks[t].level_init);
    }
    double pumped = 0.0;
    double demanded = 0.0;
    for (std::size_t k = 0; k < result.steps(); ++k) {
      for (std::size_t p = 0; p < net.pumps.size(); ++p) pumped += result.status[k][p] ? net.pumps[p].flow : 0.0;
      for (const auto& tank : net.tanks) demanded += tank.demand[k];
    }
    const double balance = net.clock.step_hours * (pumped - demanded);
    worst = std::max(worst, std::abs(stored - balance) / std::max({std::abs(balance), pumped, 1.0}));
  }

  NetworkModel single;
  single.tanks.push_back(Tank{"T", 100.0, 0.0, 1000.0, 5.0, std::vector<double>(24, 0.0)});
  Pump pump;
  pump.flow = 10.0;
  pump.power = 10.0;
  single.pumps.push_back(pump);
  single.coupling = {{0.0}};
  single.tariff.assign(24, 0.1);
  const ThresholdSpace always({DiscreteSet{20.0}}, {DiscreteSet{100.0}});
  const auto on = simulate(single, ControlVector{20.0, 100.0}, always);
  const bool cost_ok = on.energy_cost && *on.energy_cost == 24.0;

  // (pressure, was ON) -> expected status, lower 21, upper 30.
  struct Case {
    double pressure;
    bool on;
    bool expected;
  };
  const Case cases[] = {{20, false, true}, {20, true, true},   {21, false, false}, {21, true, true},
                        {25, false, false}, {25, true, true},  {30, false, false}, {30, true, true},
                        {31, false, false}, {31, true, false}};
  int matched = 0;
  for (const auto& c : cases) matched += control_step(c.pressure, c.on, 21.0, 30.0) == c.expected;
  const int total = static_cast<int>(std::size(cases));

  const bool pass = worst <= 1e-9 && cost_ok && matched == total;
  return {7, "simulator conservation", pass,
          fmt("100 feasible desk runs, max relative mass-balance err %.2e; always-ON cost %s; rule %d/%d cases",
              worst, on.energy_cost ? format_number(on.energy_cost).c_str() : "NA", matched, total)};
}

struct ExperimentRun {
  ExperimentConfig config;
  RunOutcome outcome;
  double seconds = 0.0;
};

ExperimentRun run_experiment(const std::string& config_name, const fs::path& out) {
  auto config = load_experiment(config_path(config_name));
  std::cerr << "running " << config.name << " (" << config.acquisitions.size() << " acquisitions x "
            << config.replications << " replications)..." << std::endl;
  Stopwatch watch;
  auto outcome = cmd_run(config, jobs(), out);
  return {std::move(config), std::move(outcome), watch.seconds()};
}

Verdict oracle_equivalence(const ExperimentRun& tiny, double oracle_seconds, std::optional<double> optimum) {
  if (!optimum) return {2, "oracle equivalence", false, "oracle found no feasible point"};
  int hits = 0;
  int runs = 0;
  for (const auto& path : tiny.outcome.trace_files) {
    const auto file = read_trace_file(path);
    const auto final_best = file.rows.back().best_seen;
    ++runs;
    if (final_best && *final_best <= 1.02 * *optimum) ++hits;
  }
  const double total = tiny.seconds + oracle_seconds;
  const bool pass = runs == 20 && hits >= 16 && total < 300.0;
  return {2, "oracle equivalence", pass,
          fmt("optimum %s over %zu points; %d/%d seeds within 2%% (need 16); %.1f s", format_number(optimum).c_str(),
              static_cast<std::size_t>(count_feasible(tiny.config.space)), hits, runs, total)};
}

Verdict monotonicity(const std::vector<const ExperimentRun*>& runs) {
  std::size_t files = 0;
  std::size_t violations = 0;
  for (const auto* r : runs) {
    for (const auto& path : r->outcome.trace_files) {
      ++files;
      std::optional<double> previous;
      for (const auto& row : read_trace_file(path).rows) {
        if (previous && (!row.best_seen || *row.best_seen > *previous)) ++violations;
        if (row.best_seen) previous = row.best_seen;
      }
    }
  }
  return {3, "best-seen monotonicity", violations == 0 && files > 0,
          fmt("%zu traces, %zu violations", files, violations)};
}

Verdict compliance(const std::vector<const ExperimentRun*>& runs) {
  std::size_t rows = 0;
  std::size_t bad = 0;
  for (const auto* r : runs) {
    for (const auto& path : r->outcome.trace_files) {
      for (const auto& row : read_trace_file(path).rows) {
        ++rows;
        if (!validate(ControlVector(row.x), r->config.space).admissible()) ++bad;
      }
    }
  }
  return {4, "constraint compliance", bad == 0 && rows > 0,
          fmt("%zu evaluated points re-validated, %zu violations", rows, bad)};
}

Verdict protocol(const ExperimentRun& discrete, const ExperimentRun& continuous) {
  auto shaped = [](const ExperimentRun& r) {
    const std::size_t init = r.config.smbo.init_design_size;
    const std::size_t budget = r.config.smbo.budget;
    bool ok = r.outcome.trace_files.size() == r.config.acquisitions.size() * r.config.replications;
    for (const auto& path : r.outcome.trace_files) ok = ok && read_trace_file(path).rows.size() == init + budget;
    ok = ok && r.outcome.aggregate.size() == r.config.acquisitions.size() * (budget + 1);
    ok = ok && r.outcome.summary.size() == r.config.acquisitions.size();
    for (const auto& s : r.outcome.summary) ok = ok && s.best_final && s.reduction;
    return ok;
  };
  const bool shape_ok = shaped(discrete) && shaped(continuous);
  const double total = discrete.seconds + continuous.seconds;
  std::string line;
  for (const auto* r : {&discrete, &continuous}) {
    line += r->config.name + " [";
    for (std::size_t i = 0; i < r->outcome.summary.size(); ++i) {
      const auto& s = r->outcome.summary[i];
      line += (i ? ", " : "") + s.acquisition + " best " + format_number(s.best_final) + " mean " +
              format_number(s.mean_final);
    }
    line += "]; ";
  }
  return {8, "protocol fidelity", shape_ok && total < 1800.0,
          line + fmt("outputs %s; %.0f s", shape_ok ? "complete" : "INCOMPLETE", total)};
}

Verdict reproducibility(const std::vector<const ExperimentRun*>& runs, const fs::path& out) {
  std::size_t compared = 0;
  std::size_t differing = 0;
  for (const auto* r : runs) {
    auto config = r->config;
    // Replication seeds do not depend on the replication count, so a shortened
    // rerun must reproduce the leading replications byte for byte.
    config.replications = std::min<std::size_t>(config.replications, config.network.name == "tiny" ? 20 : 1);
    const auto dir = out / "rerun" / config.name;
    fs::remove_all(dir);
    std::cerr << "rerunning " << config.name << " (" << config.replications << " replications)..." << std::endl;
    const auto again = cmd_run(config, jobs(), dir);
    for (const auto& path : again.trace_files) {
      const auto original = r->config.output_dir / "traces" / path.filename();
      ++compared;
      if (slurp(path) != slurp(original)) ++differing;
    }
  }
  return {9, "reproducibility", compared > 0 && differing == 0,
          fmt("%zu rerun traces compared byte for byte, %zu differ", compared, differing)};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Acceptance checks"};
  std::string out_dir = "acceptance_out";
  app.add_option("--out", out_dir, "Scratch directory for experiment outputs");
  CLI11_PARSE(app, argc, argv);
  const fs::path out = fs::absolute(out_dir);

  std::vector<Verdict> verdicts;
  auto report = [&](Verdict v) {
    std::cout << (v.pass ? "[PASS] " : "[FAIL] ") << v.id << ". " << v.name << ": " << v.detail << std::endl;
    verdicts.push_back(std::move(v));
  };

  try {
    report(acquisition_math());

    Stopwatch oracle_watch;
    auto tiny_config = load_experiment(config_path("tiny_ei.json"));
    const auto oracle = cmd_oracle(tiny_config, out / "tiny");
    const double oracle_seconds = oracle_watch.seconds();
    std::optional<double> optimum;
    if (oracle.optimum) optimum = oracle.table[*oracle.optimum].cost;

    auto tiny = run_experiment("tiny_ei.json", out / "tiny");
    tiny.config.output_dir = out / "tiny";
    report(oracle_equivalence(tiny, oracle_seconds, optimum));

    auto discrete = run_experiment("desk_discrete.json", out / "desk_discrete");
    discrete.config.output_dir = out / "desk_discrete";
    auto continuous = run_experiment("desk_continuous.json", out / "desk_continuous");
    continuous.config.output_dir = out / "desk_continuous";
    const std::vector<const ExperimentRun*> all{&tiny, &discrete, &continuous};

    report(monotonicity(all));
    report(compliance(all));
    report(lhs_stratification());
    report(forest_exactness());
    report(simulator_conservation());
    report(protocol(discrete, continuous));
    report(reproducibility(all, out));
  } catch (const std::exception& e) {
    std::cout << "[FAIL] acceptance aborted: " << e.what() << std::endl;
    return 1;
  }

  const auto passed = std::count_if(verdicts.begin(), verdicts.end(), [](const Verdict& v) { return v.pass; });
  std::cout << passed << "/" << verdicts.size() << " criteria passed" << std::endl;
  return passed == static_cast<long>(verdicts.size()) ? 0 : 1;
}
