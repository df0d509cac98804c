#include "aimassist/calibrate.hpp"

#include <cmath>
#include <limits>

#include "aimassist/error.hpp"
#include "aimassist/harness.hpp"

namespace aimassist {

namespace {

struct Metrics {
  double locate_success = 0.0;
  double locate_score = 0.0;
  double select_success = 0.0;
};

Metrics evaluate(Device device, const AgentParams& params, const CalibrationOptions& options) {
  BatchConfig config;
  config.device = device;
  config.agent = params;
  config.assist.method = AssistMethod::none;
  config.trials = options.budget;
  config.seed = split_seed(options.seed, streams::kCalibration);
  config.scene = options.scene;

  Metrics m;
  config.mode = Mode::locate;
  const auto locate = aggregate(run_batch(config));
  const SummaryRow* lr = find_row(locate, to_string(device));
  if (lr) {
    m.locate_success = lr->success_pct;
    m.locate_score = lr->avg_score.value_or(0.0);
  }
  config.mode = Mode::select;
  const auto select = aggregate(run_batch(config));
  if (const SummaryRow* sr = find_row(select, to_string(device))) m.select_success = sr->success_pct;
  return m;
}

double objective(const Metrics& m, const CalibrationTarget& t, double score_weight) {
  const double dl = (m.locate_success - t.locate_success) / 100.0;
  const double ds = (m.select_success - t.select_success) / 100.0;
  const double dt = t.locate_score > 0.0 ? std::abs(m.locate_score - t.locate_score) / t.locate_score
                                         : 0.0;
  return dl * dl + ds * ds + score_weight * dt;
}

}  // namespace

std::map<Device, CalibrationTarget> table_targets() {
  return {
      {Device::head, {92.5, 65.4, 1.84}},
      {Device::image, {90.3, 49.0, 2.04}},
      {Device::mouse, {98.3, 100.0, 0.89}},
      {Device::controller, {97.8, 95.8, 1.34}},
  };
}

bool CalibrationResult::converged() const {
  for (const auto& o : outcomes) {
    if (!o.converged) return false;
  }
  return !outcomes.empty();
}

nlohmann::json CalibrationResult::report(const std::map<Device, CalibrationTarget>& targets) const {
  nlohmann::json classes = nlohmann::json::array();
  for (const auto& o : outcomes) {
    nlohmann::json entry = {{"device", to_string(o.device)},
                            {"converged", o.converged},
                            {"evaluated", o.evaluated},
                            {"error", o.error},
                            {"params", o.params},
                            {"achieved",
                             {{"locate_success", o.locate_success},
                              {"locate_score", o.locate_score},
                              {"select_success", o.select_success}}}};
    if (auto it = targets.find(o.device); it != targets.end()) {
      entry["target"] = {{"locate_success", it->second.locate_success},
                         {"locate_score", it->second.locate_score},
                         {"select_success", it->second.select_success}};
    }
    classes.push_back(std::move(entry));
  }
  return {{"converged", converged()}, {"classes", classes}};
}

CalibrationResult calibrate(const std::map<Device, CalibrationTarget>& targets,
                            const PresetTable& base, const CalibrationOptions& options) {
  if (options.budget < 100) {
    throw ConfigError("calibration budget must be at least 100 trials, got " +
                      std::to_string(options.budget));
  }
  if (options.grid.size() == 0) throw ConfigError("calibration grid is empty");
  if (!(options.tolerance_pp >= 0.0)) throw ConfigError("calibration tolerance must be >= 0");

  CalibrationResult result;
  result.presets = base;
  for (const auto& [device, target] : targets) {
    auto it = base.find(device);
    if (it == base.end()) {
      throw ConfigError("no base parameters for device '" + std::string(to_string(device)) + "'");
    }
    const AgentParams& origin = it->second;
    origin.validate();

    CalibrationOutcome best;
    best.device = device;
    best.error = std::numeric_limits<double>::infinity();
    std::size_t evaluated = 0;
    for (double sn : options.grid.noise) {
      for (double sl : options.grid.latency) {
        for (double st : options.grid.tremor) {
          for (double sm : options.grid.max_speed) {
            AgentParams p = origin;
            p.noise *= sn;
            p.latency *= sl;
            p.tremor *= st;
            p.max_speed *= sm;
            if (!(p.max_speed > 0.0)) continue;
            const Metrics m = evaluate(device, p, options);
            ++evaluated;
            const double err = objective(m, target, options.score_weight);
            if (err < best.error) {
              best.params = p;
              best.error = err;
              best.locate_success = m.locate_success;
              best.locate_score = m.locate_score;
              best.select_success = m.select_success;
            }
          }
        }
      }
    }
    if (evaluated == 0) throw ConfigError("calibration grid produced no valid parameter sets");
    best.evaluated = evaluated;
    best.converged = std::abs(best.select_success - target.select_success) <= options.tolerance_pp &&
                     std::abs(best.locate_success - target.locate_success) <= options.tolerance_pp;
    result.presets[device] = best.params;
    result.outcomes.push_back(best);
  }
  return result;
}

}  // namespace aimassist
