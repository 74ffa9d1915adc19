#pragma once
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "owcrs/optimizer.hpp"

namespace owcrs {

struct ScenarioSpace {
  int k = 6;
  int groups = 2;
  PhysicalConstants constants;
  double height = 0.85;
  double demand_min = 0.5;
  double demand_max = 2.0;
  std::array<double, 3> room{5.0, 5.0, 3.0};
  std::vector<Vec3> aps;  // empty: default 2x2 ceiling grid
};

struct Sample {
  uint64_t id = 0;
  Eigen::VectorXd features;  // 2K raw: demands then per-user gain sums
  Eigen::VectorXd label;     // K+G+1 raw: p_p, p_ic, total allocated power
  uint64_t scenario_seed = 0;
  int attempt = 0;
  double utility = 0.0;
  bool feasible = false;
  bool qos_met = false;
  int split = 0;  // 0 train, 1 val, 2 test
};

struct Normalization {
  Eigen::VectorXd feature_min, feature_max, label_min, label_max;

  Eigen::VectorXd normalize_features(const Eigen::VectorXd& f) const;
  Eigen::VectorXd normalize_label(const Eigen::VectorXd& l) const;
  Eigen::VectorXd denormalize_label(const Eigen::VectorXd& l) const;
};

struct DatasetFile {
  int k = 0, g = 0;
  uint64_t master_seed = 0;
  ScenarioSpace space;
  ConstraintSet cons;
  std::vector<Sample> samples;
  Normalization norm;
  int resampled = 0;

  std::vector<int> split_indices(int split) const;
};

Scenario sample_scenario(uint64_t master_seed, uint64_t index,
                         const ScenarioSpace& space, int attempt = 0);

// same scenario from an already-derived seed (stored per sample)
Scenario rebuild_scenario(const ScenarioSpace& space, uint64_t scenario_seed);

// derived seeds for the per-sample pipeline stages
uint64_t scenario_seed_for(uint64_t master_seed, uint64_t index, int attempt);
uint64_t kmeans_seed_for(uint64_t scenario_seed);
uint64_t solver_seed_for(uint64_t scenario_seed);

DatasetFile generate(int n, uint64_t master_seed, const ConstraintSet& cons,
                     const ScenarioSpace& space, const std::string& out_path,
                     int threads = 1);

DatasetFile load(const std::string& path);

void write_dataset(const DatasetFile& ds, const std::string& path);

}  // namespace owcrs
