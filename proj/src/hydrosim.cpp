#include "pumpopt/hydrosim.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <ostream>

namespace pumpopt {

namespace {

void require(bool cond, const std::string& what) {
  if (!cond) throw std::invalid_argument("network: " + what);
}

std::string fmt6(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

}  // namespace

double Clock::hour_of(std::size_t step) const {
  const double h = std::fmod(start_hour + static_cast<double>(step) * step_hours, 24.0);
  return h < 0.0 ? h + 24.0 : h;
}

bool Clock::is_day(std::size_t step) const {
  const double h = hour_of(step);
  return h >= day_start && h < day_end;
}

std::size_t NetworkModel::pair_count() const {
  std::size_t n = 0;
  for (const auto& p : pumps) n = std::max({n, p.day_pair + 1, p.night_pair + 1});
  return n;
}

void NetworkModel::check() const {
  require(!tanks.empty(), "at least one tank is required");
  require(!pumps.empty(), "at least one pump is required");
  require(clock.step_hours > 0.0, "step length must be positive");
  require(clock.horizon > 0, "horizon must be positive");
  require(tariff.size() == clock.horizon, "tariff length must equal the horizon");
  for (std::size_t t = 0; t < tanks.size(); ++t) {
    const auto& tank = tanks[t];
    const std::string id = "tank " + std::to_string(t);
    require(tank.area > 0.0, id + " area must be positive");
    require(tank.level_min < tank.level_max, id + " level bounds are inverted");
    require(tank.level_init >= tank.level_min && tank.level_init <= tank.level_max,
            id + " initial level is outside its bounds");
    require(tank.demand.size() == clock.horizon, id + " demand length must equal the horizon");
  }
  for (std::size_t p = 0; p < pumps.size(); ++p) {
    const auto& pump = pumps[p];
    const std::string id = "pump " + std::to_string(p);
    require(pump.flow >= 0.0, id + " flow must be non-negative");
    require(pump.power >= 0.0, id + " power must be non-negative");
    require(pump.tank < tanks.size(), id + " feeds a missing tank");
  }
  require(coupling.size() == pumps.size(), "coupling matrix must be pumps x pumps");
  for (const auto& row : coupling) {
    require(row.size() == pumps.size(), "coupling matrix must be pumps x pumps");
  }
}

void NetworkModel::check_against(const ThresholdSpace& space) const {
  check();
  std::vector<bool> used(space.tau(), false);
  for (std::size_t p = 0; p < pumps.size(); ++p) {
    require(pumps[p].day_pair < space.tau() && pumps[p].night_pair < space.tau(),
            "pump " + std::to_string(p) + " references a threshold pair outside the space");
    used[pumps[p].day_pair] = true;
    used[pumps[p].night_pair] = true;
  }
  for (std::size_t j = 0; j < used.size(); ++j) {
    require(used[j], "threshold pair " + std::to_string(j) + " is not used by any pump");
  }
}

std::string to_string(FailureKind kind) {
  switch (kind) {
    case FailureKind::tank_underflow: return "tank_underflow";
    case FailureKind::tank_overflow: return "tank_overflow";
    case FailureKind::low_pressure: return "low_pressure";
    case FailureKind::final_level: return "final_level";
  }
  return "?";
}

bool control_step(double pressure, bool is_on, double lower, double upper) {
  if (!is_on && pressure < lower) return true;
  if (is_on && pressure > upper) return false;
  return is_on;
}

double pressure_at(const NetworkModel& net, std::size_t pump, std::span<const double> levels,
                   double total_demand, const std::vector<bool>& on) {
  const auto& p = net.pumps[pump];
  double head = p.base_head + p.level_gain * levels[p.tank] - p.demand_drawdown * total_demand;
  for (std::size_t q = 0; q < net.pumps.size(); ++q) {
    if (on[q]) head += net.coupling[pump][q];
  }
  return head;
}

SimulationResult simulate(const NetworkModel& net, const ControlVector& x,
                          const ThresholdSpace& space) {
  const auto report = validate(x, space);
  if (!report.admissible()) throw InadmissibleError("control vector violates c1 or c2");
  if (net.pair_count() > space.tau()) {
    throw std::invalid_argument("network references more threshold pairs than the space has");
  }

  const std::size_t tau = space.tau();
  const std::size_t np = net.pumps.size();
  const std::size_t nt = net.tanks.size();
  const double dt = net.clock.step_hours;

  SimulationResult result;
  std::vector<double> levels(nt);
  for (std::size_t t = 0; t < nt; ++t) levels[t] = net.tanks[t].level_init;
  std::vector<bool> on(np);
  for (std::size_t p = 0; p < np; ++p) on[p] = net.pumps[p].initially_on;

  double cost = 0.0;
  std::vector<double> pressures(np);
  std::vector<double> inflow(nt);
  for (std::size_t k = 0; k < net.clock.horizon; ++k) {
    double total_demand = 0.0;
    for (const auto& tank : net.tanks) total_demand += tank.demand[k];

    for (std::size_t p = 0; p < np; ++p) pressures[p] = pressure_at(net, p, levels, total_demand, on);
    for (std::size_t p = 0; p < np; ++p) {
      if (pressures[p] < net.service_pressure_min) {
        result.failures.push_back({FailureKind::low_pressure, k, p});
      }
    }

    const bool day = net.clock.is_day(k);
    for (std::size_t p = 0; p < np; ++p) {
      const std::size_t j = day ? net.pumps[p].day_pair : net.pumps[p].night_pair;
      on[p] = control_step(pressures[p], on[p], x[j], x[j + tau]);
    }

    std::fill(inflow.begin(), inflow.end(), 0.0);
    double step_cost = 0.0;
    for (std::size_t p = 0; p < np; ++p) {
      if (!on[p]) continue;
      inflow[net.pumps[p].tank] += net.pumps[p].flow;
      step_cost += net.pumps[p].power * net.tariff[k] * dt;
    }
    cost += step_cost;
    for (std::size_t t = 0; t < nt; ++t) {
      const auto& tank = net.tanks[t];
      levels[t] += dt / tank.area * (inflow[t] - tank.demand[k]);
      if (levels[t] < tank.level_min) result.failures.push_back({FailureKind::tank_underflow, k, t});
      if (levels[t] > tank.level_max) result.failures.push_back({FailureKind::tank_overflow, k, t});
    }

    result.status.push_back(on);
    result.pressure.push_back(pressures);
    result.level.push_back(levels);
    result.step_cost.push_back(step_cost);
    if (!result.failures.empty()) break;
  }

  if (result.failures.empty() && net.require_final_level) {
    for (std::size_t t = 0; t < nt; ++t) {
      if (levels[t] < net.tanks[t].level_init) {
        result.failures.push_back({FailureKind::final_level, net.clock.horizon - 1, t});
      }
    }
  }
  result.feasible = result.failures.empty();
  if (result.feasible) result.energy_cost = cost;
  return result;
}

Observation evaluate(const NetworkModel& net, const ControlVector& x, const ThresholdSpace& space) {
  const auto result = simulate(net, x, space);
  return Observation{x, result.energy_cost};
}

void write_timeseries_csv(std::ostream& out, const NetworkModel& net, const SimulationResult& result) {
  out << "step,hour";
  for (const auto& p : net.pumps) out << ",status_" << p.name;
  for (const auto& p : net.pumps) out << ",pressure_" << p.name;
  for (const auto& t : net.tanks) out << ",level_" << t.name;
  out << ",step_cost\n";
  for (std::size_t k = 0; k < result.steps(); ++k) {
    out << k << ',' << fmt6(net.clock.hour_of(k));
    for (bool s : result.status[k]) out << ',' << (s ? 1 : 0);
    for (double v : result.pressure[k]) out << ',' << fmt6(v);
    for (double v : result.level[k]) out << ',' << fmt6(v);
    out << ',' << fmt6(result.step_cost[k]) << '\n';
  }
}

NetworkModel network_from_json(const nlohmann::json& j) {
  NetworkModel net;
  net.name = j.value("name", std::string{});
  if (j.contains("clock")) {
    const auto& c = j.at("clock");
    net.clock.step_hours = c.value("step_hours", net.clock.step_hours);
    net.clock.horizon = c.value("horizon", net.clock.horizon);
    net.clock.start_hour = c.value("start_hour", net.clock.start_hour);
    net.clock.day_start = c.value("day_start", net.clock.day_start);
    net.clock.day_end = c.value("day_end", net.clock.day_end);
  }
  for (const auto& t : j.at("tanks")) {
    Tank tank;
    tank.name = t.value("name", "T" + std::to_string(net.tanks.size() + 1));
    tank.area = t.at("area").get<double>();
    tank.level_min = t.at("level_min").get<double>();
    tank.level_max = t.at("level_max").get<double>();
    tank.level_init = t.at("level_init").get<double>();
    tank.demand = t.at("demand").get<std::vector<double>>();
    net.tanks.push_back(std::move(tank));
  }
  for (const auto& p : j.at("pumps")) {
    Pump pump;
    pump.name = p.value("name", "P" + std::to_string(net.pumps.size() + 1));
    pump.flow = p.at("flow").get<double>();
    pump.power = p.at("power").get<double>();
    pump.tank = p.at("tank").get<std::size_t>();
    pump.day_pair = p.at("day_pair").get<std::size_t>();
    pump.night_pair = p.value("night_pair", pump.day_pair);
    pump.base_head = p.value("base_head", 0.0);
    pump.level_gain = p.value("level_gain", 0.0);
    pump.demand_drawdown = p.value("demand_drawdown", 0.0);
    pump.initially_on = p.value("initially_on", false);
    net.pumps.push_back(std::move(pump));
  }
  if (j.contains("coupling")) {
    net.coupling = j.at("coupling").get<std::vector<std::vector<double>>>();
  } else {
    net.coupling.assign(net.pumps.size(), std::vector<double>(net.pumps.size(), 0.0));
  }
  net.tariff = j.at("tariff").get<std::vector<double>>();
  net.service_pressure_min = j.value("service_pressure_min", 0.0);
  net.require_final_level = j.value("require_final_level", false);
  net.check();
  return net;
}

nlohmann::json network_to_json(const NetworkModel& net) {
  nlohmann::json j;
  j["name"] = net.name;
  j["clock"] = {{"step_hours", net.clock.step_hours},
                {"horizon", net.clock.horizon},
                {"start_hour", net.clock.start_hour},
                {"day_start", net.clock.day_start},
                {"day_end", net.clock.day_end}};
  j["tanks"] = nlohmann::json::array();
  for (const auto& t : net.tanks) {
    j["tanks"].push_back({{"name", t.name},
                          {"area", t.area},
                          {"level_min", t.level_min},
                          {"level_max", t.level_max},
                          {"level_init", t.level_init},
                          {"demand", t.demand}});
  }
  j["pumps"] = nlohmann::json::array();
  for (const auto& p : net.pumps) {
    j["pumps"].push_back({{"name", p.name},
                          {"flow", p.flow},
                          {"power", p.power},
                          {"tank", p.tank},
                          {"day_pair", p.day_pair},
                          {"night_pair", p.night_pair},
                          {"base_head", p.base_head},
                          {"level_gain", p.level_gain},
                          {"demand_drawdown", p.demand_drawdown},
                          {"initially_on", p.initially_on}});
  }
  j["coupling"] = net.coupling;
  j["tariff"] = net.tariff;
  j["service_pressure_min"] = net.service_pressure_min;
  j["require_final_level"] = net.require_final_level;
  return j;
}

NetworkModel load_network(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open network file '" + path + "'");
  try {
    return network_from_json(nlohmann::json::parse(in));
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error("network file '" + path + "': " + e.what());
  }
}

namespace {

// Time-of-use price per kWh for each hour of the day.
std::vector<double> hourly_tariff() {
  std::vector<double> tariff(24);
  for (int h = 0; h < 24; ++h) {
    if (h < 7 || h >= 23) tariff[h] = 0.08;
    else if ((h >= 8 && h < 12) || (h >= 18 && h < 21)) tariff[h] = 0.24;
    else if (h >= 12 && h < 18) tariff[h] = 0.16;
    else tariff[h] = 0.14;
  }
  return tariff;
}

// Residential diurnal shape, mean 1.
std::vector<double> diurnal_profile() {
  return {0.55, 0.50, 0.48, 0.48, 0.52, 0.65, 0.95, 1.35, 1.50, 1.40, 1.25, 1.15,
          1.15, 1.10, 1.00, 0.98, 1.05, 1.20, 1.40, 1.45, 1.30, 1.05, 0.80, 0.65};
}

std::vector<double> scaled(const std::vector<double>& shape, double mean) {
  std::vector<double> out(shape.size());
  for (std::size_t i = 0; i < shape.size(); ++i) out[i] = shape[i] * mean;
  return out;
}

}  // namespace

NetworkModel tiny_network() {
  NetworkModel net;
  net.name = "tiny";
  net.tanks.push_back({"T1", 120.0, 1.0, 6.0, 3.5, scaled(diurnal_profile(), 60.0)});
  net.pumps.push_back({"P1", 90.0, 32.0, 0, 0, 0, 17.0, 2.5, 0.03, false});
  net.pumps.push_back({"P2", 55.0, 21.0, 0, 1, 1, 16.5, 2.5, 0.03, false});
  net.coupling = {{0.0, 1.5}, {2.0, 0.0}};
  net.tariff = hourly_tariff();
  net.service_pressure_min = 15.0;
  net.check();
  return net;
}

NetworkModel desk_network() {
  NetworkModel net;
  net.name = "desk";
  const auto shape = diurnal_profile();
  net.tanks.push_back({"T1", 150.0, 1.0, 7.0, 4.0, scaled(shape, 70.0)});
  net.tanks.push_back({"T2", 110.0, 1.0, 7.0, 4.0, scaled(shape, 50.0)});
  net.tanks.push_back({"T3", 80.0, 1.0, 7.0, 4.0, scaled(shape, 30.0)});
  // Day pairs 0..4, night pairs 5..9.
  net.pumps.push_back({"P1", 80.0, 30.0, 0, 0, 5, 15.0, 4.0, 0.02, false});
  net.pumps.push_back({"P2", 60.0, 24.0, 0, 1, 6, 14.5, 4.0, 0.02, false});
  net.pumps.push_back({"P3", 70.0, 27.0, 1, 2, 7, 15.5, 3.8, 0.02, false});
  net.pumps.push_back({"P4", 45.0, 19.0, 1, 3, 8, 15.0, 3.8, 0.02, false});
  net.pumps.push_back({"P5", 60.0, 22.0, 2, 4, 9, 16.0, 3.6, 0.02, false});
  net.coupling = {{0.0, 1.2, 0.5, 0.3, 0.2},
                  {1.2, 0.0, 0.4, 0.3, 0.2},
                  {0.5, 0.4, 0.0, 1.0, 0.3},
                  {0.3, 0.3, 1.0, 0.0, 0.3},
                  {0.2, 0.2, 0.3, 0.3, 0.0}};
  net.tariff = hourly_tariff();
  net.service_pressure_min = 15.0;
  net.check();
  return net;
}

NetworkModel builtin_network(const std::string& name) {
  if (name == "tiny") return tiny_network();
  if (name == "desk") return desk_network();
  throw std::invalid_argument("unknown built-in network '" + name + "'");
}

}  // namespace pumpopt
