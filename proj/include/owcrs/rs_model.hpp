#pragma once
#include <Eigen/Dense>
#include <vector>

#include "owcrs/channel.hpp"
#include "owcrs/grouping.hpp"

namespace owcrs {

struct PrecoderSet {
  Eigen::VectorXd w_oc;                  // L, unit norm
  std::vector<Eigen::MatrixXd> outer;    // B_g: L x r_g, orthonormal columns
  std::vector<Eigen::MatrixXd> inner;    // W_g: r_g x K_g, unit-norm columns
  std::vector<Eigen::VectorXd> w_ic;     // r_g, unit norm (inner-common beam)
  bool no_outer_separation = false;      // set when a null space came out empty
};

struct PowerAllocation {
  double p_oc = 0.0;
  Eigen::VectorXd p_ic;  // per group
  Eigen::VectorXd p_p;   // per user

  double total() const { return p_oc + p_ic.sum() + p_p.sum(); }
};

struct RateReport {
  Eigen::VectorXd sinr_oc, sinr_ic, sinr_p;  // per user
  double r_oc = 0.0;
  Eigen::VectorXd r_ic;  // per group
  Eigen::VectorXd r_p;   // per user
  double sum_rate = 0.0;
};

PowerAllocation power_split(double p_total, double beta, double alpha, int g,
                            int k);

PrecoderSet build_precoders(const ChannelMatrix& ch, const GroupingPlan& plan);

// precomputed squared beam gains; the hot path for rate evaluation
struct RateKernel {
  Eigen::VectorXd c_oc;  // K
  Eigen::MatrixXd c_ic;  // K x G
  Eigen::MatrixXd c_p;   // K x K, column j = gains of private message j
  std::vector<int> group_of;
  std::vector<std::vector<int>> members;
  double noise = 0.0;

  RateKernel(const ChannelMatrix& ch, const GroupingPlan& plan,
             const PrecoderSet& prec);
  RateReport evaluate(const PowerAllocation& a) const;
  // same computation, reusing rep's storage; keeps the optimizer loop off the heap
  void evaluate_into(const PowerAllocation& a, RateReport& rep) const;
};

RateReport hrs_sinrs(const ChannelMatrix& ch, const GroupingPlan& plan,
                     const PrecoderSet& prec, const PowerAllocation& a);
RateReport hrs_rates(const ChannelMatrix& ch, const GroupingPlan& plan,
                     const PrecoderSet& prec, const PowerAllocation& a);

struct RsAllocation {
  double p_c = 0.0;
  Eigen::VectorXd p_p;
};

// single-tier rate splitting; evaluated with direct per-term loops
RateReport conventional_rs_rate(const ChannelMatrix& ch, const RsAllocation& a);

RateReport oma_rate(const ChannelMatrix& ch, double p_total);

double log2p1(double x);

}  // namespace owcrs
