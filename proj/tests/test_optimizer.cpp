#include <doctest.h>

#include <cmath>

#include "owcrs/dataset.hpp"
#include "owcrs/optimizer.hpp"
#include "owcrs/rng.hpp"

using namespace owcrs;

namespace {

struct Fixture {
  Scenario sc;
  ChannelMatrix ch;
  GroupingPlan plan;
  PrecoderSet prec;
};

Fixture make_fixture(int k, int g, uint64_t seed) {
  Fixture f;
  f.sc = random_scenario(k, seed, PhysicalConstants{});
  f.ch = build_channel(f.sc);
  std::vector<Eigen::Vector2d> xy;
  for (const auto& u : f.sc.user_positions) xy.emplace_back(u.x(), u.y());
  f.plan = kmeans_group(xy, g, kmeans_seed_for(seed));
  f.prec = build_precoders(f.ch, f.plan);
  return f;
}

bool hard_feasible(const PowerAllocation& a, const ConstraintSet& cons,
                   const GroupingPlan& plan, double tol = 1e-9) {
  if (a.p_oc < -tol) return false;
  if (a.p_ic.minCoeff() < -tol || a.p_p.minCoeff() < -tol) return false;
  if (cons.user_cap > 0 && a.p_p.maxCoeff() > cons.user_cap + tol) return false;
  for (int g = 0; g < plan.num_groups; ++g) {
    double s = a.p_ic(g);
    for (int k : plan.group_members[g]) s += a.p_p(k);
    if (s > cons.group_caps(g) + tol) return false;
  }
  return a.total() <= cons.p_total_cap + tol;
}

}  // namespace

TEST_CASE("constraint defaults") {
  ConstraintSet c = ConstraintSet::defaults(1.0, 2, 6);
  CHECK(c.p_oc_fixed == doctest::Approx(0.2).epsilon(1e-15));
  CHECK(c.group_caps.size() == 2);
  CHECK(c.group_caps(0) == doctest::Approx(0.6).epsilon(1e-15));
  CHECK(c.user_cap == doctest::Approx(2.0 * 0.8 / 6.0).epsilon(1e-15));
  CHECK(c.r_min == 0.0);
}

TEST_CASE("projection lands in the feasible set") {
  Fixture f = make_fixture(6, 2, 60);
  ConstraintSet cons = ConstraintSet::defaults(1.0, 2, 6);
  Rng rng(61);
  for (int i = 0; i < 1000; ++i) {
    Eigen::VectorXd x(8);
    for (int j = 0; j < 8; ++j) x(j) = rng.uniform(-0.5, 2.0);
    PowerAllocation a = project_feasible(x, cons, f.plan);
    CHECK(hard_feasible(a, cons, f.plan, 1e-12));
    CHECK(a.p_oc == cons.p_oc_fixed);
  }
}

TEST_CASE("projection is idempotent and keeps feasible points") {
  Fixture f = make_fixture(6, 2, 62);
  ConstraintSet cons = ConstraintSet::defaults(1.0, 2, 6);
  Rng rng(63);
  for (int i = 0; i < 100; ++i) {
    Eigen::VectorXd x(8);
    for (int j = 0; j < 8; ++j) x(j) = rng.uniform(-0.5, 2.0);
    PowerAllocation a = project_feasible(x, cons, f.plan);
    Eigen::VectorXd v(8);
    v.head(2) = a.p_ic;
    v.tail(6) = a.p_p;
    PowerAllocation b = project_feasible(v, cons, f.plan);
    CHECK((a.p_ic - b.p_ic).cwiseAbs().maxCoeff() == 0.0);
    CHECK((a.p_p - b.p_p).cwiseAbs().maxCoeff() == 0.0);
  }
  // an interior point passes through untouched
  Eigen::VectorXd v(8);
  v.head(2).setConstant(0.05);
  v.tail(6).setConstant(0.05);
  PowerAllocation c = project_feasible(v, cons, f.plan);
  CHECK(c.p_ic(0) == 0.05);
  CHECK(c.p_p(5) == 0.05);
}

TEST_CASE("projection validates inputs") {
  Fixture f = make_fixture(4, 2, 64);
  ConstraintSet cons = ConstraintSet::defaults(1.0, 2, 4);
  CHECK_THROWS_AS(project_feasible(Eigen::VectorXd::Zero(3), cons, f.plan),
                  std::domain_error);
  ConstraintSet bad = cons;
  bad.p_oc_fixed = 2.0;
  CHECK_THROWS_AS(project_feasible(Eigen::VectorXd::Zero(6), bad, f.plan),
                  std::domain_error);
}

TEST_CASE("solver output is feasible and dominates the uniform split") {
  for (uint64_t seed = 70; seed < 90; ++seed) {
    Fixture f = make_fixture(6, 2, seed);
    ConstraintSet cons = ConstraintSet::defaults(1.0, 2, 6);
    SolveResult res = solve(f.ch, f.plan, f.prec, cons, UtilityMode::Sum,
                            solver_seed_for(seed));
    CHECK(res.feasible);
    CHECK(hard_feasible(res.allocation, cons, f.plan));
    PowerAllocation uni = power_split(1.0, 0.8, 0.75, 2, 6);
    double base = hrs_rates(f.ch, f.plan, f.prec, uni).sum_rate;
    CHECK(res.sum_rate >= base);
  }
}

TEST_CASE("solver is deterministic") {
  Fixture f = make_fixture(6, 2, 91);
  ConstraintSet cons = ConstraintSet::defaults(1.0, 2, 6);
  SolveResult a = solve(f.ch, f.plan, f.prec, cons, UtilityMode::Sum, 5);
  SolveResult b = solve(f.ch, f.plan, f.prec, cons, UtilityMode::Sum, 5);
  CHECK(a.utility == b.utility);
  CHECK(a.sum_rate == b.sum_rate);
  CHECK((a.allocation.p_ic - b.allocation.p_ic).cwiseAbs().maxCoeff() == 0.0);
  CHECK((a.allocation.p_p - b.allocation.p_p).cwiseAbs().maxCoeff() == 0.0);
  CHECK(a.iterations == b.iterations);
}

TEST_CASE("solver tracks the grid oracle on tiny instances") {
  for (uint64_t seed = 92; seed < 97; ++seed) {
    Fixture f = make_fixture(2, 1, seed);
    ConstraintSet cons = ConstraintSet::defaults(1.0, 1, 2);
    SolveResult s = solve(f.ch, f.plan, f.prec, cons, UtilityMode::Sum,
                          solver_seed_for(seed));
    SolveResult o = grid_oracle(f.ch, f.plan, f.prec, cons, UtilityMode::Sum, 20);
    CHECK(s.utility >= 0.9 * o.utility);
  }
}

TEST_CASE("log-message utility mode runs and stays feasible") {
  Fixture f = make_fixture(6, 2, 98);
  ConstraintSet cons = ConstraintSet::defaults(1.0, 2, 6);
  SolveResult res =
      solve(f.ch, f.plan, f.prec, cons, UtilityMode::LogMessage, 7);
  CHECK(res.feasible);
  CHECK(std::isfinite(res.utility));
  RateReport rep = hrs_rates(f.ch, f.plan, f.prec, res.allocation);
  CHECK(res.utility == doctest::Approx(utility(rep, UtilityMode::LogMessage))
                           .epsilon(1e-12));
}

TEST_CASE("unreachable QoS is reported, not hidden") {
  Fixture f = make_fixture(6, 2, 99);
  ConstraintSet cons = ConstraintSet::defaults(1.0, 2, 6, 1e6);
  SolveResult res = solve(f.ch, f.plan, f.prec, cons, UtilityMode::Sum, 7);
  CHECK(res.feasible);
  CHECK_FALSE(res.qos_met);
}

TEST_CASE("solver rejects an over-committed common power") {
  Fixture f = make_fixture(4, 2, 100);
  ConstraintSet cons = ConstraintSet::defaults(1.0, 2, 4);
  cons.p_oc_fixed = 1.5;
  CHECK_THROWS_AS(solve(f.ch, f.plan, f.prec, cons, UtilityMode::Sum, 1),
                  std::domain_error);
}

TEST_CASE("grid oracle guards its domain") {
  Fixture f = make_fixture(6, 2, 101);
  ConstraintSet cons = ConstraintSet::defaults(1.0, 2, 6);
  CHECK_THROWS_AS(grid_oracle(f.ch, f.plan, f.prec, cons, UtilityMode::Sum, 10),
                  std::domain_error);

  Fixture tiny = make_fixture(2, 1, 102);
  ConstraintSet infeasible = ConstraintSet::defaults(1.0, 1, 2);
  infeasible.p_oc_fixed = 1.5;
  CHECK_THROWS_AS(
      grid_oracle(tiny.ch, tiny.plan, tiny.prec, infeasible, UtilityMode::Sum, 5),
      std::domain_error);
}

TEST_CASE("utility modes") {
  RateReport rep;
  rep.r_oc = 1.0;
  rep.r_ic = Eigen::VectorXd::Constant(2, 0.5);
  rep.r_p = Eigen::VectorXd::Constant(3, 2.0);
  rep.sum_rate = 8.0;
  CHECK(utility(rep, UtilityMode::Sum) == 8.0);
  double expect = std::log(1.0 + 1e-6) + 2.0 * std::log(0.5 + 1e-6) +
                  3.0 * std::log(2.0 + 1e-6);
  CHECK(utility(rep, UtilityMode::LogMessage) ==
        doctest::Approx(expect).epsilon(1e-14));
  CHECK(utility_mode_from_string("sum") == UtilityMode::Sum);
  CHECK(utility_mode_from_string("log-message") == UtilityMode::LogMessage);
  CHECK_THROWS_AS(utility_mode_from_string("max"), std::domain_error);
}
