#include "owcrs/dataset.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "owcrs/rng.hpp"
#include "owcrs/serialize.hpp"

namespace owcrs {

using nlohmann::json;

Eigen::VectorXd Normalization::normalize_features(const Eigen::VectorXd& f) const {
  Eigen::VectorXd out(f.size());
  for (int i = 0; i < f.size(); ++i) {
    double span = feature_max(i) - feature_min(i);
    // live inputs outside the recorded range clamp to the boundary; the
    // network is undefined beyond its training support
    out(i) = span > 0
                 ? std::clamp((f(i) - feature_min(i)) / span, 0.0, 1.0)
                 : 0.0;
  }
  return out;
}

Eigen::VectorXd Normalization::normalize_label(const Eigen::VectorXd& l) const {
  Eigen::VectorXd out(l.size());
  for (int i = 0; i < l.size(); ++i) {
    double span = label_max(i) - label_min(i);
    out(i) = span > 0 ? (l(i) - label_min(i)) / span : 0.0;
  }
  return out;
}

Eigen::VectorXd Normalization::denormalize_label(const Eigen::VectorXd& l) const {
  Eigen::VectorXd out(l.size());
  for (int i = 0; i < l.size(); ++i) {
    double span = label_max(i) - label_min(i);
    out(i) = span > 0 ? l(i) * span + label_min(i) : label_min(i);
  }
  return out;
}

std::vector<int> DatasetFile::split_indices(int split) const {
  std::vector<int> out;
  for (size_t i = 0; i < samples.size(); ++i)
    if (samples[i].split == split) out.push_back(static_cast<int>(i));
  return out;
}

uint64_t scenario_seed_for(uint64_t master_seed, uint64_t index, int attempt) {
  return mix_seed(master_seed, index, static_cast<uint64_t>(attempt));
}
uint64_t kmeans_seed_for(uint64_t scenario_seed) {
  return mix_seed(scenario_seed, 0x6b6d65616e73ULL);
}
uint64_t solver_seed_for(uint64_t scenario_seed) {
  return mix_seed(scenario_seed, 0x736f6c7665ULL);
}

Scenario rebuild_scenario(const ScenarioSpace& space, uint64_t scenario_seed) {
  Scenario s = random_scenario(space.k, scenario_seed, space.constants,
                               space.height, space.demand_min, space.demand_max,
                               space.room);
  if (!space.aps.empty()) s.ap_positions = space.aps;
  return s;
}

Scenario sample_scenario(uint64_t master_seed, uint64_t index,
                         const ScenarioSpace& space, int attempt) {
  return rebuild_scenario(space, scenario_seed_for(master_seed, index, attempt));
}

namespace {

struct SolvedSample {
  Sample sample;
  int attempts_used = 0;
};

SolvedSample make_sample(uint64_t master_seed, uint64_t index,
                         const ConstraintSet& cons, const ScenarioSpace& space) {
  for (int attempt = 0;; ++attempt) {
    if (attempt > 50)
      throw std::runtime_error("sample " + std::to_string(index) +
                               ": exceeded 50 resample attempts");
    Scenario sc = sample_scenario(master_seed, index, space, attempt);
    ChannelMatrix ch;
    try {
      ch = build_channel(sc);
    } catch (const DisconnectedUserError&) {
      continue;
    }
    std::vector<Eigen::Vector2d> xy;
    for (const auto& u : sc.user_positions) xy.emplace_back(u.x(), u.y());
    GroupingPlan plan =
        kmeans_group(xy, space.groups, kmeans_seed_for(sc.rng_seed));
    PrecoderSet prec = build_precoders(ch, plan);
    RateKernel kern(ch, plan, prec);
    ConstraintSet local = cons;
    if (static_cast<int>(local.group_caps.size()) != plan.num_groups)
      local.group_caps = Eigen::VectorXd::Constant(
          plan.num_groups, cons.group_caps.size() ? cons.group_caps(0) : 0.0);
    SolveResult res = solve(kern, plan, local, UtilityMode::LogMessage,
                            solver_seed_for(sc.rng_seed));
    if (!res.feasible) continue;

    SolvedSample out;
    out.attempts_used = attempt;
    Sample& s = out.sample;
    s.id = index;
    s.scenario_seed = sc.rng_seed;
    s.attempt = attempt;
    s.utility = res.utility;
    s.feasible = res.feasible;
    s.qos_met = res.qos_met;
    const int k = space.k, g = plan.num_groups;
    s.features.resize(2 * k);
    for (int i = 0; i < k; ++i) s.features(i) = sc.demands[i];
    for (int i = 0; i < k; ++i) s.features(k + i) = ch.gains.row(i).sum();
    s.label.resize(k + g + 1);
    for (int i = 0; i < k; ++i) s.label(i) = res.allocation.p_p(i);
    for (int j = 0; j < g; ++j) s.label(k + j) = res.allocation.p_ic(j);
    s.label(k + g) = res.allocation.total();
    return out;
  }
}

}  // namespace

DatasetFile generate(int n, uint64_t master_seed, const ConstraintSet& cons,
                     const ScenarioSpace& space, const std::string& out_path,
                     int threads) {
  if (n < 10) throw std::domain_error("dataset needs n >= 10");
  DatasetFile ds;
  ds.k = space.k;
  ds.g = space.groups;
  ds.master_seed = master_seed;
  ds.space = space;
  ds.cons = cons;
  ds.samples.resize(n);

  std::vector<int> attempts(n, 0);
  if (threads < 1) threads = 1;
  std::atomic<int> next{0};
  std::vector<std::thread> pool;
  std::vector<std::string> errors(threads);
  auto work = [&](int t) {
    try {
      for (;;) {
        int i = next.fetch_add(1);
        if (i >= n) break;
        SolvedSample s = make_sample(master_seed, i, cons, space);
        ds.samples[i] = s.sample;
        attempts[i] = s.attempts_used;
      }
    } catch (const std::exception& e) {
      errors[t] = e.what();
    }
  };
  if (threads == 1) {
    work(0);
  } else {
    for (int t = 0; t < threads; ++t) pool.emplace_back(work, t);
    for (auto& th : pool) th.join();
  }
  for (const auto& e : errors)
    if (!e.empty()) throw std::runtime_error("dataset generation failed: " + e);

  ds.resampled = 0;
  for (int a : attempts) ds.resampled += a;
  int attempted = n + ds.resampled;
  if (ds.resampled > 0.2 * attempted)
    throw std::runtime_error(
        "dataset generation aborted: resample rate " +
        std::to_string(100.0 * ds.resampled / attempted) + "% exceeds 20%");

  // deterministic shuffle for the 60/20/20 split
  std::vector<int> perm(n);
  for (int i = 0; i < n; ++i) perm[i] = i;
  Rng rng(mix_seed(master_seed, 0x73706c6974ULL));
  for (int i = n - 1; i > 0; --i) {
    int j = static_cast<int>(rng.below(static_cast<uint64_t>(i) + 1));
    std::swap(perm[i], perm[j]);
  }
  int n_train = static_cast<int>(0.6 * n);
  int n_val = static_cast<int>(0.2 * n);
  for (int i = 0; i < n; ++i) {
    int split = i < n_train ? 0 : (i < n_train + n_val ? 1 : 2);
    ds.samples[perm[i]].split = split;
  }

  const int fdim = 2 * space.k, ldim = space.k + space.groups + 1;
  ds.norm.feature_min = Eigen::VectorXd::Constant(fdim, INFINITY);
  ds.norm.feature_max = Eigen::VectorXd::Constant(fdim, -INFINITY);
  ds.norm.label_min = Eigen::VectorXd::Constant(ldim, INFINITY);
  ds.norm.label_max = Eigen::VectorXd::Constant(ldim, -INFINITY);
  for (const auto& s : ds.samples) {
    ds.norm.feature_min = ds.norm.feature_min.cwiseMin(s.features);
    ds.norm.feature_max = ds.norm.feature_max.cwiseMax(s.features);
    ds.norm.label_min = ds.norm.label_min.cwiseMin(s.label);
    ds.norm.label_max = ds.norm.label_max.cwiseMax(s.label);
  }

  if (!out_path.empty()) write_dataset(ds, out_path);
  return ds;
}

static std::string split_name(int s) {
  return s == 0 ? "train" : (s == 1 ? "val" : "test");
}

void write_dataset(const DatasetFile& ds, const std::string& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write " + path);
  f << "sample_id";
  for (int i = 1; i <= ds.k; ++i) f << ",demand_" << i;
  for (int i = 1; i <= ds.k; ++i) f << ",gain_" << i;
  for (int i = 1; i <= ds.k; ++i) f << ",pp_" << i;
  for (int i = 1; i <= ds.g; ++i) f << ",pic_" << i;
  f << ",ptotal,split\n";
  for (const auto& s : ds.samples) {
    f << s.id;
    for (int i = 0; i < s.features.size(); ++i) f << ',' << fmt_double(s.features(i));
    for (int i = 0; i < s.label.size(); ++i) f << ',' << fmt_double(s.label(i));
    f << ',' << split_name(s.split) << '\n';
  }
  f.close();

  json meta;
  meta["version"] = 1;
  meta["k"] = ds.k;
  meta["g"] = ds.g;
  meta["n"] = ds.samples.size();
  meta["master_seed"] = ds.master_seed;
  meta["resampled"] = ds.resampled;
  auto vec = [](const Eigen::VectorXd& v) {
    std::vector<double> out(v.data(), v.data() + v.size());
    return out;
  };
  meta["normalization"] = {{"feature_min", vec(ds.norm.feature_min)},
                           {"feature_max", vec(ds.norm.feature_max)},
                           {"label_min", vec(ds.norm.label_min)},
                           {"label_max", vec(ds.norm.label_max)}};
  meta["constraints"] = {{"p_total_cap", ds.cons.p_total_cap},
                         {"p_oc_fixed", ds.cons.p_oc_fixed},
                         {"group_caps", vec(ds.cons.group_caps)},
                         {"user_cap", ds.cons.user_cap},
                         {"r_min", ds.cons.r_min}};
  meta["space"] = {{"k", ds.space.k},
                   {"groups", ds.space.groups},
                   {"height", ds.space.height},
                   {"demand_min", ds.space.demand_min},
                   {"demand_max", ds.space.demand_max},
                   {"room", ds.space.room},
                   {"beam_waist", ds.space.constants.beam_waist},
                   {"wavelength", ds.space.constants.wavelength},
                   {"bandwidth", ds.space.constants.bandwidth},
                   {"responsivity", ds.space.constants.responsivity},
                   {"nsd", ds.space.constants.nsd},
                   {"receiver_area_total", ds.space.constants.receiver_area_total},
                   {"fov_half_angle", ds.space.constants.fov_half_angle},
                   {"num_photodiodes", ds.space.constants.num_photodiodes},
                   {"pd_tilt", ds.space.constants.pd_tilt},
                   {"steering_cone_half_angle",
                    ds.space.constants.steering_cone_half_angle}};
  if (!ds.space.aps.empty()) {
    std::vector<std::array<double, 3>> aps;
    for (const auto& a : ds.space.aps) aps.push_back({a.x(), a.y(), a.z()});
    meta["space"]["aps"] = aps;
  }
  json att = json::object();
  for (const auto& s : ds.samples)
    if (s.attempt > 0) att[std::to_string(s.id)] = s.attempt;
  meta["attempts"] = att;
  std::ofstream m(path + ".meta.json", std::ios::binary);
  if (!m) throw std::runtime_error("cannot write " + path + ".meta.json");
  m << meta.dump(2) << '\n';
}

DatasetFile load(const std::string& path) {
  std::ifstream mf(path + ".meta.json", std::ios::binary);
  if (!mf) throw std::runtime_error("missing sidecar " + path + ".meta.json");
  json meta = json::parse(mf);
  if (meta.at("version").get<int>() != 1)
    throw std::runtime_error("dataset format version mismatch");

  DatasetFile ds;
  ds.k = meta.at("k").get<int>();
  ds.g = meta.at("g").get<int>();
  ds.master_seed = meta.at("master_seed").get<uint64_t>();
  ds.resampled = meta.value("resampled", 0);
  auto getv = [&](const json& j) {
    auto v = j.get<std::vector<double>>();
    return Eigen::Map<const Eigen::VectorXd>(v.data(), v.size()).eval();
  };
  const json& nm = meta.at("normalization");
  ds.norm.feature_min = getv(nm.at("feature_min"));
  ds.norm.feature_max = getv(nm.at("feature_max"));
  ds.norm.label_min = getv(nm.at("label_min"));
  ds.norm.label_max = getv(nm.at("label_max"));
  const json& cj = meta.at("constraints");
  ds.cons.p_total_cap = cj.at("p_total_cap").get<double>();
  ds.cons.p_oc_fixed = cj.at("p_oc_fixed").get<double>();
  ds.cons.group_caps = getv(cj.at("group_caps"));
  ds.cons.user_cap = cj.at("user_cap").get<double>();
  ds.cons.r_min = cj.at("r_min").get<double>();
  const json& sj = meta.at("space");
  ds.space.k = ds.k;
  ds.space.groups = ds.g;
  ds.space.height = sj.at("height").get<double>();
  ds.space.demand_min = sj.at("demand_min").get<double>();
  ds.space.demand_max = sj.at("demand_max").get<double>();
  auto room = sj.at("room").get<std::vector<double>>();
  ds.space.room = {room[0], room[1], room[2]};
  ds.space.constants.beam_waist = sj.at("beam_waist").get<double>();
  ds.space.constants.wavelength = sj.at("wavelength").get<double>();
  ds.space.constants.bandwidth = sj.at("bandwidth").get<double>();
  ds.space.constants.responsivity = sj.at("responsivity").get<double>();
  ds.space.constants.nsd = sj.at("nsd").get<double>();
  ds.space.constants.receiver_area_total =
      sj.at("receiver_area_total").get<double>();
  ds.space.constants.fov_half_angle = sj.at("fov_half_angle").get<double>();
  ds.space.constants.num_photodiodes = sj.at("num_photodiodes").get<int>();
  ds.space.constants.pd_tilt = sj.at("pd_tilt").get<double>();
  ds.space.constants.steering_cone_half_angle =
      sj.at("steering_cone_half_angle").get<double>();
  if (sj.contains("aps"))
    for (const auto& a : sj.at("aps"))
      ds.space.aps.emplace_back(a[0].get<double>(), a[1].get<double>(),
                                a[2].get<double>());
  std::map<uint64_t, int> attempts;
  for (auto it = meta.at("attempts").begin(); it != meta.at("attempts").end(); ++it)
    attempts[std::stoull(it.key())] = it.value().get<int>();

  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot read " + path);
  std::string content((std::istreambuf_iterator<char>(f)),
                      std::istreambuf_iterator<char>());
  size_t pos = 0;
  auto next_line = [&](std::string& line) {
    if (pos >= content.size()) return false;
    size_t e = content.find('\n', pos);
    if (e == std::string::npos) e = content.size();
    line = content.substr(pos, e - pos);
    pos = e + 1;
    return true;
  };
  std::string line;
  size_t line_start = pos;
  if (!next_line(line)) throw std::runtime_error("empty dataset file");
  const int fdim = 2 * ds.k, ldim = ds.k + ds.g + 1;
  const int ncols = 1 + fdim + ldim + 1;
  size_t n_expected = meta.at("n").get<size_t>();
  while (true) {
    line_start = pos;
    if (!next_line(line)) break;
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (static_cast<int>(cells.size()) != ncols)
      throw std::runtime_error("truncated dataset row at byte offset " +
                               std::to_string(line_start));
    Sample s;
    s.id = std::stoull(cells[0]);
    s.features.resize(fdim);
    s.label.resize(ldim);
    for (int i = 0; i < fdim; ++i) s.features(i) = std::stod(cells[1 + i]);
    for (int i = 0; i < ldim; ++i) s.label(i) = std::stod(cells[1 + fdim + i]);
    if (!s.features.allFinite() || !s.label.allFinite())
      throw std::runtime_error("non-finite value at byte offset " +
                               std::to_string(line_start));
    const std::string& sp = cells.back();
    if (sp == "train")
      s.split = 0;
    else if (sp == "val")
      s.split = 1;
    else if (sp == "test")
      s.split = 2;
    else
      throw std::runtime_error("bad split tag at byte offset " +
                               std::to_string(line_start));
    auto it = attempts.find(s.id);
    s.attempt = it == attempts.end() ? 0 : it->second;
    s.scenario_seed = scenario_seed_for(ds.master_seed, s.id, s.attempt);
    s.feasible = true;
    ds.samples.push_back(std::move(s));
  }
  if (ds.samples.size() != n_expected)
    throw std::runtime_error("dataset row count mismatch: expected " +
                             std::to_string(n_expected) + ", got " +
                             std::to_string(ds.samples.size()));
  return ds;
}

}  // namespace owcrs
