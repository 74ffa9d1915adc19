#include "owcrs/config.hpp"

#include <fstream>
#include <numeric>

#include <json.hpp>

namespace owcrs {

using nlohmann::json;

ConstraintSet AppConfig::constraints(int groups, int k) const {
  ConstraintSet c;
  c.p_total_cap = p_total;
  c.p_oc_fixed = p_oc_fraction * p_total;
  double budget = c.p_total_cap - c.p_oc_fixed;
  c.group_caps = Eigen::VectorXd::Constant(groups, group_cap_fraction * budget);
  c.user_cap = user_cap_factor * budget / k;
  c.r_min = r_min.value_or(0.0);
  return c;
}

ConstraintSet AppConfig::constraints_with_demands(
    int groups, const std::vector<double>& demands) const {
  ConstraintSet c = constraints(groups, static_cast<int>(demands.size()));
  if (!r_min)
    c.r_min = std::accumulate(demands.begin(), demands.end(), 0.0);
  return c;
}

AppConfig default_config() { return AppConfig{}; }

AppConfig load_config(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot read config " + path);
  json j = json::parse(f);
  AppConfig c;
  if (j.contains("room")) {
    const auto& r = j["room"];
    c.space.room = {r.value("x", 5.0), r.value("y", 5.0), r.value("z", 3.0)};
  }
  if (j.contains("users")) {
    const auto& u = j["users"];
    c.space.k = u.value("count", c.space.k);
    c.space.height = u.value("height", c.space.height);
    if (u.contains("seed")) c.scenario_seed = u["seed"].get<uint64_t>();
  }
  if (j.contains("demands")) {
    const auto& d = j["demands"];
    c.space.demand_min = d.value("min", c.space.demand_min);
    c.space.demand_max = d.value("max", c.space.demand_max);
  }
  if (j.contains("groups")) c.space.groups = j["groups"].get<int>();
  if (j.contains("aps"))
    for (const auto& a : j["aps"])
      c.space.aps.emplace_back(a[0].get<double>(), a[1].get<double>(),
                               a[2].get<double>());
  if (j.contains("constants")) {
    const auto& k = j["constants"];
    auto& pc = c.space.constants;
    pc.wavelength = k.value("wavelength", pc.wavelength);
    pc.beam_waist = k.value("beam_waist", pc.beam_waist);
    pc.bandwidth = k.value("bandwidth", pc.bandwidth);
    pc.responsivity = k.value("responsivity", pc.responsivity);
    pc.nsd = k.value("nsd", pc.nsd);
    pc.receiver_area_total = k.value("receiver_area_total", pc.receiver_area_total);
    if (k.contains("fov_half_angle_deg"))
      pc.fov_half_angle = k["fov_half_angle_deg"].get<double>() * M_PI / 180.0;
    pc.num_photodiodes = k.value("num_photodiodes", pc.num_photodiodes);
    if (k.contains("pd_tilt_deg"))
      pc.pd_tilt = k["pd_tilt_deg"].get<double>() * M_PI / 180.0;
    if (k.contains("steering_cone_half_angle_deg"))
      pc.steering_cone_half_angle =
          k["steering_cone_half_angle_deg"].get<double>() * M_PI / 180.0;
  }
  if (j.contains("optimizer")) {
    const auto& o = j["optimizer"];
    c.p_total = o.value("p_total", c.p_total);
    c.p_oc_fraction = o.value("p_oc_fraction", c.p_oc_fraction);
    c.group_cap_fraction = o.value("group_cap_fraction", c.group_cap_fraction);
    c.user_cap_factor = o.value("user_cap_factor", c.user_cap_factor);
    if (o.contains("r_min")) c.r_min = o["r_min"].get<double>();
    c.utility_mode = o.value("utility_mode", c.utility_mode);
  }
  if (j.contains("dnn")) {
    const auto& d = j["dnn"];
    c.epochs = d.value("epochs", c.epochs);
    c.batch = d.value("batch", c.batch);
    c.lr = d.value("lr", c.lr);
    if (d.contains("hidden")) c.hidden = d["hidden"].get<std::vector<int>>();
    c.conv_channels = d.value("conv_channels", c.conv_channels);
    c.conv_kernel = d.value("conv_kernel", c.conv_kernel);
    c.features = d.value("features", c.features);
  }
  return c;
}

}  // namespace owcrs
