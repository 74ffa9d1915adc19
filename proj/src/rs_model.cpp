#include "owcrs/rs_model.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace owcrs {

double log2p1(double x) { return std::log1p(x) / M_LN2; }

PowerAllocation power_split(double p_total, double beta, double alpha, int g,
                            int k) {
  if (!(beta > 0 && beta <= 1) || !(alpha > 0 && alpha <= 1))
    throw std::domain_error("beta, alpha must be in (0,1]");
  if (p_total < 0) throw std::domain_error("p_total must be >= 0");
  PowerAllocation a;
  a.p_oc = p_total * (1.0 - beta);
  a.p_ic = Eigen::VectorXd::Constant(g, p_total * beta * (1.0 - alpha) / g);
  a.p_p = Eigen::VectorXd::Constant(k, p_total * beta * alpha / k);
  return a;
}

PrecoderSet build_precoders(const ChannelMatrix& ch, const GroupingPlan& plan) {
  const int l_aps = static_cast<int>(ch.gains.cols());
  const int g_count = plan.num_groups;
  PrecoderSet prec;
  prec.outer.resize(g_count);
  prec.inner.resize(g_count);
  prec.w_ic.resize(g_count);

  for (int g = 0; g < g_count; ++g) {
    std::vector<int> others;
    for (int j = 0; j < g_count; ++j)
      if (j != g)
        others.insert(others.end(), plan.group_members[j].begin(),
                      plan.group_members[j].end());
    Eigen::MatrixXd basis;
    if (others.empty()) {
      basis = Eigen::MatrixXd::Identity(l_aps, l_aps);
    } else {
      Eigen::MatrixXd stacked(others.size(), l_aps);
      for (size_t r = 0; r < others.size(); ++r)
        stacked.row(r) = ch.gains.row(others[r]);
      Eigen::JacobiSVD<Eigen::MatrixXd> svd(stacked, Eigen::ComputeFullV);
      const auto& sv = svd.singularValues();
      double tol = sv.size() ? sv(0) * 1e-10 : 0.0;
      int rank = 0;
      for (int i = 0; i < sv.size(); ++i)
        if (sv(i) > tol) rank++;
      if (rank >= l_aps) {
        basis = Eigen::MatrixXd::Identity(l_aps, l_aps);
        prec.no_outer_separation = true;
      } else {
        basis = svd.matrixV().rightCols(l_aps - rank);
      }
    }
    prec.outer[g] = basis;

    const auto& mem = plan.group_members[g];
    Eigen::MatrixXd heff(mem.size(), basis.cols());
    for (size_t r = 0; r < mem.size(); ++r)
      heff.row(r) = ch.gains.row(mem[r]) * basis;
    // pinv on the scale-normalized matrix: gains can sit near the underflow
    // edge and the raw pseudoinverse overflows; normalized columns are the
    // same either way
    double scale = heff.cwiseAbs().maxCoeff();
    Eigen::MatrixXd w;
    if (scale > 0 && std::isfinite(scale)) {
      w = Eigen::MatrixXd(heff / scale)
              .completeOrthogonalDecomposition()
              .pseudoInverse();
    } else {
      w = Eigen::MatrixXd::Zero(basis.cols(), mem.size());
    }
    for (int c = 0; c < w.cols(); ++c) {
      double n = w.col(c).norm();
      if (n > 0 && std::isfinite(n)) {
        w.col(c) /= n;
      } else {
        w.col(c).setZero();
        w.col(c)(c % w.rows()) = 1.0;
      }
    }
    prec.inner[g] = w;

    Eigen::VectorXd s = heff.colwise().sum().transpose();
    double n = s.norm();
    if (n > 1e-300) {
      prec.w_ic[g] = s / n;
    } else {
      prec.w_ic[g] = Eigen::VectorXd::Zero(basis.cols());
      prec.w_ic[g](0) = 1.0;
    }
  }
  Eigen::VectorXd rowsum = ch.gains.colwise().sum().transpose();
  double n = rowsum.norm();
  if (n <= 0) throw std::domain_error("all-zero channel matrix");
  prec.w_oc = rowsum / n;
  return prec;
}

RateKernel::RateKernel(const ChannelMatrix& ch, const GroupingPlan& plan,
                       const PrecoderSet& prec) {
  const int k_users = static_cast<int>(ch.gains.rows());
  const int g_count = plan.num_groups;
  noise = ch.noise_variance;
  group_of = plan.assignment;
  members = plan.group_members;
  c_oc.resize(k_users);
  c_ic.resize(k_users, g_count);
  c_p.resize(k_users, k_users);
  Eigen::VectorXd t = ch.gains * prec.w_oc;
  c_oc = t.array().square();
  for (int g = 0; g < g_count; ++g) {
    Eigen::VectorXd beam_ic = prec.outer[g] * prec.w_ic[g];
    Eigen::VectorXd v = ch.gains * beam_ic;
    c_ic.col(g) = v.array().square();
    for (size_t c = 0; c < members[g].size(); ++c) {
      Eigen::VectorXd beam = prec.outer[g] * prec.inner[g].col(c);
      Eigen::VectorXd u = ch.gains * beam;
      c_p.col(members[g][c]) = u.array().square();
    }
  }
}

RateReport RateKernel::evaluate(const PowerAllocation& a) const {
  RateReport rep;
  evaluate_into(a, rep);
  return rep;
}

void RateKernel::evaluate_into(const PowerAllocation& a, RateReport& rep) const {
  const int k_users = static_cast<int>(c_oc.size());
  const int g_count = static_cast<int>(c_ic.cols());
  rep.sinr_oc.resize(k_users);
  rep.sinr_ic.resize(k_users);
  rep.sinr_p.resize(k_users);
  rep.r_ic = Eigen::VectorXd::Zero(g_count);
  rep.r_p.resize(k_users);

  for (int k = 0; k < k_users; ++k) {
    int g = group_of[k];
    // masked sums rather than total-minus-own: the zero-forced cross terms
    // are many orders below the own terms and would cancel badly
    double own_p = a.p_p(k) * c_p(k, k);
    double priv_other = 0.0;
    for (int j = 0; j < k_users; ++j)
      if (j != k) priv_other += a.p_p(j) * c_p(k, j);
    double own_ic = a.p_ic(g) * c_ic(k, g);
    double ic_other = 0.0;
    for (int h = 0; h < g_count; ++h)
      if (h != g) ic_other += a.p_ic(h) * c_ic(k, h);

    double num_oc = a.p_oc * c_oc(k);
    rep.sinr_oc(k) =
        num_oc > 0 ? num_oc / ((priv_other + own_p) + (ic_other + own_ic) + noise)
                   : 0.0;
    rep.sinr_ic(k) =
        own_ic > 0 ? own_ic / ((priv_other + own_p) + ic_other + noise) : 0.0;
    rep.sinr_p(k) = own_p > 0 ? own_p / (priv_other + ic_other + noise) : 0.0;
  }
  rep.r_oc = log2p1(rep.sinr_oc.minCoeff());
  for (int g = 0; g < g_count; ++g) {
    double m = std::numeric_limits<double>::infinity();
    for (int k : members[g]) m = std::min(m, rep.sinr_ic(k));
    rep.r_ic(g) = members[g].empty() ? 0.0 : log2p1(m);
  }
  for (int k = 0; k < k_users; ++k) rep.r_p(k) = log2p1(rep.sinr_p(k));
  rep.sum_rate = rep.r_oc + rep.r_ic.sum() + rep.r_p.sum();
}

RateReport hrs_sinrs(const ChannelMatrix& ch, const GroupingPlan& plan,
                     const PrecoderSet& prec, const PowerAllocation& a) {
  return RateKernel(ch, plan, prec).evaluate(a);
}

RateReport hrs_rates(const ChannelMatrix& ch, const GroupingPlan& plan,
                     const PrecoderSet& prec, const PowerAllocation& a) {
  return hrs_sinrs(ch, plan, prec, a);
}

RateReport conventional_rs_rate(const ChannelMatrix& ch, const RsAllocation& a) {
  const int k_users = static_cast<int>(ch.gains.rows());
  if (a.p_p.size() != k_users)
    throw std::domain_error("conventional RS allocation needs K private powers");
  GroupingPlan plan = single_group(k_users);
  PrecoderSet prec = build_precoders(ch, plan);

  RateReport rep;
  rep.sinr_oc.resize(k_users);
  rep.sinr_ic = Eigen::VectorXd::Zero(k_users);
  rep.sinr_p.resize(k_users);
  rep.r_ic = Eigen::VectorXd::Zero(1);
  rep.r_p.resize(k_users);

  double noise = ch.noise_variance;
  for (int k = 0; k < k_users; ++k) {
    double cc = ch.gains.row(k).dot(prec.w_oc);
    cc *= cc;
    double own = 0.0, priv_other = 0.0;
    for (int j = 0; j < k_users; ++j) {
      double cj = ch.gains.row(k).dot(prec.outer[0] * prec.inner[0].col(j));
      double term = a.p_p(j) * cj * cj;
      if (j == k)
        own = term;
      else
        priv_other += term;
    }
    double num_c = a.p_c * cc;
    rep.sinr_oc(k) = num_c > 0 ? num_c / ((priv_other + own) + noise) : 0.0;
    rep.sinr_p(k) = own > 0 ? own / (priv_other + noise) : 0.0;
  }
  rep.r_oc = log2p1(rep.sinr_oc.minCoeff());
  for (int k = 0; k < k_users; ++k) rep.r_p(k) = log2p1(rep.sinr_p(k));
  rep.sum_rate = rep.r_oc + rep.r_p.sum();
  return rep;
}

RateReport oma_rate(const ChannelMatrix& ch, double p_total) {
  if (p_total < 0) throw std::domain_error("p_total must be >= 0");
  const int k_users = static_cast<int>(ch.gains.rows());
  RateReport rep;
  rep.sinr_oc = Eigen::VectorXd::Zero(k_users);
  rep.sinr_ic = Eigen::VectorXd::Zero(k_users);
  rep.sinr_p.resize(k_users);
  rep.r_ic = Eigen::VectorXd::Zero(0);
  rep.r_p.resize(k_users);
  for (int k = 0; k < k_users; ++k) {
    double snr = p_total * ch.gains.row(k).squaredNorm() / ch.noise_variance;
    rep.sinr_p(k) = snr;
    rep.r_p(k) = log2p1(snr) / k_users;
  }
  rep.r_oc = 0.0;
  rep.sum_rate = rep.r_p.sum();
  return rep;
}

}  // namespace owcrs
