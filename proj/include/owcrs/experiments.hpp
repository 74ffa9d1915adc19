#pragma once
#include <optional>
#include <string>
#include <vector>

#include "owcrs/config.hpp"
#include "owcrs/dnn.hpp"

namespace owcrs {

struct SweepSpec {
  std::string variable;        // beamwaist | users | snr
  std::vector<double> range;   // beamwaist in m, users as counts, snr in dB
  int trials = 50;
  std::vector<std::string> schemes{"opt", "dnn", "hrs-uniform", "rs", "oma"};
  uint64_t master_seed = 1;

  void validate() const;
};

struct SweepRow {
  std::string variable;
  double value = 0.0;
  std::string scheme;
  double mean_sum_rate = 0.0;
  double std_sum_rate = 0.0;
  int trials = 0;
};

// per-trial sum rates for one parameter point, keyed by scheme order of spec
struct TrialContext {
  Scenario scenario;
  ChannelMatrix channel;
  GroupingPlan plan;
  PrecoderSet prec;
  ConstraintSet cons;
  double p_total = 0.0;
};

TrialContext build_trial(const AppConfig& cfg, uint64_t seed, int k_users,
                         double beam_waist, std::optional<double> snr_target_db);

double scheme_sum_rate(const std::string& scheme, const TrialContext& ctx,
                       const AppConfig& cfg, const NetworkWeights* model,
                       uint64_t solver_seed);

std::vector<SweepRow> run_sweep(const SweepSpec& spec, const AppConfig& cfg,
                                const NetworkWeights* model, int threads = 1);

std::string sweep_to_csv(const std::vector<SweepRow>& rows);

std::string run_report(const AppConfig& cfg, uint64_t seed,
                       const NetworkWeights* model);

}  // namespace owcrs
