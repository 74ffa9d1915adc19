#include "owcrs/optimizer.hpp"

#include <cmath>
#include <stdexcept>
#include <utility>

#include "owcrs/rng.hpp"

namespace owcrs {

UtilityMode utility_mode_from_string(const std::string& s) {
  if (s == "sum") return UtilityMode::Sum;
  if (s == "log-message") return UtilityMode::LogMessage;
  throw std::domain_error("unknown utility mode: " + s);
}

std::string to_string(UtilityMode m) {
  return m == UtilityMode::Sum ? "sum" : "log-message";
}

ConstraintSet ConstraintSet::defaults(double p_total, int g, int k,
                                      double r_min) {
  ConstraintSet c;
  c.p_total_cap = p_total;
  c.p_oc_fixed = 0.2 * p_total;
  double budget = p_total - c.p_oc_fixed;
  c.group_caps = Eigen::VectorXd::Constant(g, 0.75 * budget);
  c.user_cap = 2.0 * budget / k;
  c.r_min = r_min;
  return c;
}

double utility(const RateReport& rep, UtilityMode mode) {
  if (mode == UtilityMode::Sum) return rep.sum_rate;
  constexpr double eps = 1e-6;
  double u = std::log(rep.r_oc + eps);
  for (int g = 0; g < rep.r_ic.size(); ++g) u += std::log(rep.r_ic(g) + eps);
  for (int k = 0; k < rep.r_p.size(); ++k) u += std::log(rep.r_p(k) + eps);
  return u;
}

std::pair<bool, bool> check_feasibility(const PowerAllocation& a,
                                        const ConstraintSet& cons,
                                        const RateReport& rep) {
  constexpr double tol = 1e-9;
  bool ok = true;
  if (a.p_oc < -tol) ok = false;
  for (int g = 0; g < a.p_ic.size(); ++g)
    if (a.p_ic(g) < -tol) ok = false;
  for (int k = 0; k < a.p_p.size(); ++k) {
    if (a.p_p(k) < -tol) ok = false;
    if (cons.user_cap > 0 && a.p_p(k) > cons.user_cap + tol) ok = false;
  }
  if (a.total() > cons.p_total_cap + tol) ok = false;
  bool qos = rep.sum_rate >= cons.r_min;
  return {ok, qos};
}

// group-cap check needs membership, so it lives where a plan is available
static bool group_caps_ok(const PowerAllocation& a, const ConstraintSet& cons,
                          const GroupingPlan& plan) {
  constexpr double tol = 1e-9;
  for (int g = 0; g < plan.num_groups; ++g) {
    double s = a.p_ic(g);
    for (int k : plan.group_members[g]) s += a.p_p(k);
    if (s > cons.group_caps(g) + tol) return false;
  }
  return true;
}

// body of project_feasible writing into caller-owned storage
static void project_into(const Eigen::VectorXd& x, const ConstraintSet& cons,
                         const GroupingPlan& plan, PowerAllocation& a) {
  const int g_count = plan.num_groups;
  const int k_users = static_cast<int>(plan.assignment.size());
  a.p_oc = cons.p_oc_fixed;
  a.p_ic = x.head(g_count).cwiseMax(0.0);
  a.p_p = x.tail(k_users).cwiseMax(0.0);
  if (cons.user_cap > 0) a.p_p = a.p_p.cwiseMin(cons.user_cap);
  // rescale until the recomputed sum actually satisfies the cap, so that a
  // second projection is a bitwise no-op; rounding can leave the first
  // product one ulp above the cap
  for (int g = 0; g < g_count; ++g) {
    for (;;) {
      double s = a.p_ic(g);
      for (int k : plan.group_members[g]) s += a.p_p(k);
      if (!(s > cons.group_caps(g)) || s <= 0) break;
      double f = cons.group_caps(g) / s;
      if (f >= 1.0) f = std::nextafter(1.0, 0.0);
      a.p_ic(g) *= f;
      for (int k : plan.group_members[g]) a.p_p(k) *= f;
    }
  }
  double budget = cons.p_total_cap - cons.p_oc_fixed;
  for (;;) {
    double t = a.p_ic.sum() + a.p_p.sum();
    if (!(t > budget) || t <= 0) break;
    double f = budget / t;
    if (f >= 1.0) f = std::nextafter(1.0, 0.0);
    a.p_ic *= f;
    a.p_p *= f;
  }
}

PowerAllocation project_feasible(const Eigen::VectorXd& x,
                                 const ConstraintSet& cons,
                                 const GroupingPlan& plan) {
  if (cons.p_oc_fixed > cons.p_total_cap)
    throw std::domain_error("p_oc_fixed exceeds p_total_cap");
  if (x.size() != plan.num_groups + static_cast<int>(plan.assignment.size()))
    throw std::domain_error("projection input must have G+K entries");
  PowerAllocation a;
  project_into(x, cons, plan, a);
  return a;
}

namespace {

struct Objective {
  const RateKernel& kern;
  const ConstraintSet& cons;
  UtilityMode mode;
  mutable RateReport scratch;

  double operator()(const PowerAllocation& a) const {
    kern.evaluate_into(a, scratch);
    double u = utility(scratch, mode);
    double gap = cons.r_min - scratch.sum_rate;
    if (gap > 0) u -= 100.0 * gap * gap;
    return u;
  }
};

}  // namespace

SolveResult solve(const RateKernel& kern, const GroupingPlan& plan,
                  const ConstraintSet& cons, UtilityMode mode, uint64_t seed) {
  if (cons.p_oc_fixed > cons.p_total_cap)
    throw std::domain_error("p_oc_fixed exceeds p_total_cap: no feasible start");
  const int g_count = plan.num_groups;
  const int k_users = static_cast<int>(plan.assignment.size());
  const int dim = g_count + k_users;
  const double p_t = cons.p_total_cap;
  const double budget = p_t - cons.p_oc_fixed;
  Objective f{kern, cons, mode};

  std::vector<Eigen::VectorXd> starts;
  starts.push_back(Eigen::VectorXd::Constant(dim, budget / dim));
  {
    // beta/alpha split of the full budget (outer part replaced by the fix)
    PowerAllocation ba = power_split(p_t, 0.8, 0.75, g_count, k_users);
    Eigen::VectorXd v(dim);
    v.head(g_count) = ba.p_ic;
    v.tail(k_users) = ba.p_p;
    starts.push_back(v);
  }
  Rng rng(seed);
  for (int s = 0; s < 8; ++s) {
    Eigen::VectorXd v(dim);
    for (int i = 0; i < dim; ++i) v(i) = rng.uniform(0.0, budget);
    starts.push_back(v);
  }

  SolveResult best;
  bool have_best = false;
  int total_iters = 0;
  const double h = 1e-6 * p_t;
  const double eta_top = 0.1 * p_t;
  const double eta_floor = 1e-12 * p_t;

  PowerAllocation a, cand;
  Eigen::VectorXd v(dim), grad(dim), xbuf(dim);
  for (const auto& s0 : starts) {
    project_into(s0, cons, plan, a);
    double fa = f(a);
    int stall = 0;
    int it = 0;
    while (it < 5000 && stall < 20) {
      ++it;
      v.head(g_count) = a.p_ic;
      v.tail(k_users) = a.p_p;
      // central differences on raw coordinate bumps; the line search is what
      // goes through the projection
      for (int i = 0; i < dim; ++i) {
        double& slot = i < g_count ? a.p_ic(i) : a.p_p(i - g_count);
        double old = slot;
        slot = old + h;
        double fp = f(a);
        slot = old - h;
        double fm = f(a);
        slot = old;
        grad(i) = (fp - fm) / (2.0 * h);
      }
      double gn = grad.norm();
      if (gn == 0) break;
      grad /= gn;
      double eta = eta_top;
      double fc = fa;
      bool improved = false;
      while (eta > eta_floor) {
        xbuf = v + eta * grad;
        project_into(xbuf, cons, plan, cand);
        double ft = f(cand);
        if (ft > fa) {
          fc = ft;
          improved = true;
          break;
        }
        eta *= 0.5;
      }
      stall = (fc - fa) < 1e-8 * std::max(1.0, std::abs(fa)) ? stall + 1 : 0;
      if (improved) {
        std::swap(a, cand);
        fa = fc;
      }
    }
    total_iters += it;
    if (!have_best || fa > best.utility) {
      RateReport rep = kern.evaluate(a);
      best.allocation = a;
      best.utility = fa;
      best.sum_rate = rep.sum_rate;
      auto [ok, qos] = check_feasibility(a, cons, rep);
      best.feasible = ok && group_caps_ok(a, cons, plan);
      best.qos_met = qos;
      have_best = true;
    }
  }
  best.iterations = total_iters;
  best.restarts_used = static_cast<int>(starts.size());
  return best;
}

SolveResult solve(const ChannelMatrix& ch, const GroupingPlan& plan,
                  const PrecoderSet& prec, const ConstraintSet& cons,
                  UtilityMode mode, uint64_t seed) {
  RateKernel kern(ch, plan, prec);
  return solve(kern, plan, cons, mode, seed);
}

SolveResult grid_oracle(const ChannelMatrix& ch, const GroupingPlan& plan,
                        const PrecoderSet& prec, const ConstraintSet& cons,
                        UtilityMode mode, int resolution) {
  const int g_count = plan.num_groups;
  const int k_users = static_cast<int>(plan.assignment.size());
  const int dim = g_count + k_users;
  if (dim > 4)
    throw std::domain_error("grid_oracle limited to G+K <= 4 variables");
  if (resolution < 1) throw std::domain_error("resolution >= 1");
  if (cons.p_oc_fixed > cons.p_total_cap)
    throw std::domain_error("no feasible grid point: p_oc_fixed exceeds p_total_cap");
  RateKernel kern(ch, plan, prec);
  Objective f{kern, cons, mode};
  const double delta = (cons.p_total_cap - cons.p_oc_fixed) / resolution;

  SolveResult best;
  bool have_best = false;
  std::vector<int> idx(dim, 0);
  long long total = 1;
  for (int i = 0; i < dim; ++i) total *= (resolution + 1);
  for (long long n = 0; n < total; ++n) {
    long long rem = n;
    for (int i = 0; i < dim; ++i) {
      idx[i] = static_cast<int>(rem % (resolution + 1));
      rem /= (resolution + 1);
    }
    PowerAllocation a;
    a.p_oc = cons.p_oc_fixed;
    a.p_ic.resize(g_count);
    a.p_p.resize(k_users);
    for (int g = 0; g < g_count; ++g) a.p_ic(g) = idx[g] * delta;
    for (int k = 0; k < k_users; ++k) a.p_p(k) = idx[g_count + k] * delta;
    // keep only hard-feasible grid points
    if (a.total() > cons.p_total_cap + 1e-12) continue;
    if (cons.user_cap > 0 && (a.p_p.array() > cons.user_cap + 1e-12).any())
      continue;
    if (!([&] {
          for (int g = 0; g < g_count; ++g) {
            double s = a.p_ic(g);
            for (int k : plan.group_members[g]) s += a.p_p(k);
            if (s > cons.group_caps(g) + 1e-12) return false;
          }
          return true;
        }()))
      continue;
    double u = f(a);
    if (!have_best || u > best.utility) {
      RateReport rep = kern.evaluate(a);
      best.allocation = a;
      best.utility = u;
      best.sum_rate = rep.sum_rate;
      best.feasible = true;
      best.qos_met = rep.sum_rate >= cons.r_min;
      have_best = true;
    }
  }
  if (!have_best) throw std::domain_error("no feasible grid point");
  best.iterations = static_cast<int>(std::min<long long>(total, 1 << 30));
  best.restarts_used = 0;
  return best;
}

}  // namespace owcrs
