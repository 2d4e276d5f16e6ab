#pragma once

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "pumpopt/space.hpp"
#include "pumpopt/surrogate.hpp"

namespace pumpopt {

/// Thrown when a control vector violates the analytic constraints.
class InadmissibleError : public std::invalid_argument {
public:
  using std::invalid_argument::invalid_argument;
};

struct Tank {
  std::string name;
  double area = 1.0;        // m^2
  double level_min = 0.0;   // m
  double level_max = 1.0;   // m
  double level_init = 0.5;  // m
  std::vector<double> demand;  // m^3/h per step
};

struct Pump {
  std::string name;
  double flow = 0.0;   // m^3/h when ON
  double power = 0.0;  // kW when ON
  std::size_t tank = 0;
  std::size_t day_pair = 0;
  std::size_t night_pair = 0;
  double base_head = 0.0;        // m
  double level_gain = 0.0;       // m of head per m of tank level
  double demand_drawdown = 0.0;  // m per m^3/h of total demand
  bool initially_on = false;
};

struct Clock {
  double step_hours = 1.0;
  std::size_t horizon = 24;
  double start_hour = 0.0;
  /// Day window [day_start, day_end) in clock hours; the rest is night.
  double day_start = 6.0;
  double day_end = 23.0;

  double hour_of(std::size_t step) const;
  bool is_day(std::size_t step) const;
};

struct NetworkModel {
  std::string name;
  std::vector<Tank> tanks;
  std::vector<Pump> pumps;
  /// coupling[p][q]: head added to pump p's pressure while pump q is ON.
  std::vector<std::vector<double>> coupling;
  std::vector<double> tariff;  // currency per kWh, per step
  Clock clock;
  double service_pressure_min = 0.0;
  bool require_final_level = false;

  /// Threshold pairs referenced by the pumps (max pair id + 1).
  std::size_t pair_count() const;
  /// Throws std::invalid_argument describing the first inconsistency.
  void check() const;
  /// Additionally checks that the pumps cover every pair of the space.
  void check_against(const ThresholdSpace& space) const;
};

enum class FailureKind { tank_underflow, tank_overflow, low_pressure, final_level };

std::string to_string(FailureKind kind);

struct Failure {
  FailureKind kind;
  std::size_t step;
  std::size_t element;  // tank or pump index
};

struct SimulationResult {
  bool feasible = true;
  std::optional<double> energy_cost;
  std::vector<Failure> failures;
  /// Per step, all truncated at the first failing step.
  std::vector<std::vector<bool>> status;        // after the rule
  std::vector<std::vector<double>> pressure;    // at the start of the step
  std::vector<std::vector<double>> level;       // at the end of the step
  std::vector<double> step_cost;

  std::size_t steps() const { return step_cost.size(); }
};

/// Hysteresis rule: switch ON below lower when OFF, OFF above upper when
/// ON, otherwise keep the status.
bool control_step(double pressure, bool is_on, double lower, double upper);

/// base + gain * tank level - drawdown * total demand + coupling from ON pumps.
double pressure_at(const NetworkModel& net, std::size_t pump, std::span<const double> levels,
                   double total_demand, const std::vector<bool>& on);

SimulationResult simulate(const NetworkModel& net, const ControlVector& x,
                          const ThresholdSpace& space);

/// Observation with y = energy cost for feasible runs.
Observation evaluate(const NetworkModel& net, const ControlVector& x, const ThresholdSpace& space);

/// step, hour, per-pump status and pressure, per-tank level, step cost.
void write_timeseries_csv(std::ostream& out, const NetworkModel& net, const SimulationResult& result);

NetworkModel network_from_json(const nlohmann::json& j);
nlohmann::json network_to_json(const NetworkModel& net);
NetworkModel load_network(const std::string& path);

/// 1 tank, 2 pumps, one threshold pair per pump (tau = 2).
NetworkModel tiny_network();
/// 3 tanks, 5 pumps, separate day and night pairs (tau = 10).
NetworkModel desk_network();
/// "tiny" or "desk".
NetworkModel builtin_network(const std::string& name);

}  // namespace pumpopt
