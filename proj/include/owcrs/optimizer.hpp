#pragma once
#include <cstdint>
#include <string>

#include "owcrs/rs_model.hpp"

namespace owcrs {

enum class UtilityMode { Sum, LogMessage };

UtilityMode utility_mode_from_string(const std::string& s);
std::string to_string(UtilityMode m);

struct ConstraintSet {
  double p_total_cap = 1.0;
  double p_oc_fixed = 0.2;
  Eigen::VectorXd group_caps;  // per group
  double user_cap = 0.0;
  double r_min = 0.0;

  // P_oc = 0.2 P_T, group caps 0.75 (P_T - P_oc) each,
  // user cap 2 (P_T - P_oc) / K
  static ConstraintSet defaults(double p_total, int g, int k, double r_min = 0.0);
};

struct SolveResult {
  PowerAllocation allocation;
  double utility = 0.0;
  double sum_rate = 0.0;
  bool feasible = false;
  bool qos_met = false;
  int iterations = 0;
  int restarts_used = 0;
};

double utility(const RateReport& rep, UtilityMode mode);

std::pair<bool, bool> check_feasibility(const PowerAllocation& a,
                                        const ConstraintSet& cons,
                                        const RateReport& rep);

// x holds (p_ic[0..G), p_p[0..K)); output satisfies (budget, group, user,
// nonnegativity) caps exactly
PowerAllocation project_feasible(const Eigen::VectorXd& x,
                                 const ConstraintSet& cons,
                                 const GroupingPlan& plan);

SolveResult solve(const ChannelMatrix& ch, const GroupingPlan& plan,
                  const PrecoderSet& prec, const ConstraintSet& cons,
                  UtilityMode mode, uint64_t seed);

SolveResult solve(const RateKernel& kern, const GroupingPlan& plan,
                  const ConstraintSet& cons, UtilityMode mode, uint64_t seed);

SolveResult grid_oracle(const ChannelMatrix& ch, const GroupingPlan& plan,
                        const PrecoderSet& prec, const ConstraintSet& cons,
                        UtilityMode mode, int resolution);

}  // namespace owcrs
