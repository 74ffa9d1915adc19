#pragma once
#include <optional>
#include <string>

#include "owcrs/dataset.hpp"

namespace owcrs {

// everything driven by the CLI config file, with built-in defaults
struct AppConfig {
  ScenarioSpace space;
  std::optional<uint64_t> scenario_seed;  // users.seed; --seed wins
  double p_total = 1.0;
  double p_oc_fraction = 0.2;        // of p_total
  double group_cap_fraction = 0.75;  // of (p_total - p_oc)
  double user_cap_factor = 2.0;      // times (p_total - p_oc)/K
  std::optional<double> r_min;       // default: sum of demands
  std::string utility_mode = "log-message";
  // dnn defaults
  int epochs = 200;
  int batch = 64;
  double lr = 1e-3;
  std::vector<int> hidden{64, 64, 64, 64};
  int conv_channels = 8;
  int conv_kernel = 3;
  std::string features = "full";  // or "demand-only"

  ConstraintSet constraints(int groups, int k) const;
  ConstraintSet constraints_with_demands(int groups,
                                         const std::vector<double>& demands) const;
};

AppConfig load_config(const std::string& path);
AppConfig default_config();

}  // namespace owcrs
