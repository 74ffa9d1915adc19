#include "owcrs/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <sstream>
#include <thread>

#include "owcrs/rng.hpp"
#include "owcrs/serialize.hpp"

namespace owcrs {

void SweepSpec::validate() const {
  if (range.empty()) throw std::domain_error("sweep range is empty");
  if (trials < 1) throw std::domain_error("trials >= 1");
  if (variable == "beamwaist") {
    for (double v : range)
      if (v < 5e-6 - 1e-12 || v > 20e-6 + 1e-12)
        throw std::domain_error("beam waist must lie in [5e-6, 20e-6] m");
  } else if (variable == "users") {
    for (double v : range)
      if (v < 2 || v > 10 || v != std::floor(v))
        throw std::domain_error("users range must be integers in [2, 10]");
  } else if (variable == "snr") {
    for (double v : range)
      if (v < 5.0 || v > 35.0)
        throw std::domain_error("snr range must lie in [5, 35] dB");
  } else {
    throw std::domain_error("unknown sweep variable: " + variable);
  }
}

TrialContext build_trial(const AppConfig& cfg, uint64_t seed, int k_users,
                         double beam_waist, std::optional<double> snr_target_db) {
  ScenarioSpace space = cfg.space;
  space.k = k_users;
  space.constants.beam_waist = beam_waist;
  space.groups = std::max(1, k_users / 3);
  if (k_users == cfg.space.k) space.groups = cfg.space.groups;

  TrialContext ctx;
  ctx.scenario = sample_scenario(seed, 0, space, 0);
  ctx.channel = build_channel(ctx.scenario);
  std::vector<Eigen::Vector2d> xy;
  for (const auto& u : ctx.scenario.user_positions) xy.emplace_back(u.x(), u.y());
  ctx.plan = kmeans_group(xy, space.groups, kmeans_seed_for(ctx.scenario.rng_seed));
  ctx.prec = build_precoders(ctx.channel, ctx.plan);

  ctx.p_total = cfg.p_total;
  if (snr_target_db) {
    // scale the budget so the median matched-filter user SNR hits the target
    std::vector<double> h2;
    for (int k = 0; k < ctx.channel.gains.rows(); ++k)
      h2.push_back(ctx.channel.gains.row(k).squaredNorm());
    std::sort(h2.begin(), h2.end());
    double med = h2.size() % 2 ? h2[h2.size() / 2]
                               : 0.5 * (h2[h2.size() / 2 - 1] + h2[h2.size() / 2]);
    double target = std::pow(10.0, *snr_target_db / 10.0);
    ctx.p_total = target * ctx.channel.noise_variance / med;
  }
  AppConfig scaled = cfg;
  scaled.p_total = ctx.p_total;
  ctx.cons = scaled.constraints_with_demands(ctx.plan.num_groups,
                                             ctx.scenario.demands);
  ctx.cons.r_min = 0.0;  // sweeps compare raw sum rates
  return ctx;
}

double scheme_sum_rate(const std::string& scheme, const TrialContext& ctx,
                       const AppConfig& cfg, const NetworkWeights* model,
                       uint64_t solver_seed) {
  (void)cfg;
  const int k = ctx.scenario.num_users();
  const int g = ctx.plan.num_groups;
  if (scheme == "oma") return oma_rate(ctx.channel, ctx.p_total).sum_rate;
  if (scheme == "rs") {
    RsAllocation a;
    a.p_c = 0.25 * ctx.p_total;
    a.p_p = Eigen::VectorXd::Constant(k, 0.75 * ctx.p_total / k);
    return conventional_rs_rate(ctx.channel, a).sum_rate;
  }
  if (scheme == "hrs-uniform") {
    PowerAllocation a = power_split(ctx.p_total, 0.8, 0.75, g, k);
    return hrs_rates(ctx.channel, ctx.plan, ctx.prec, a).sum_rate;
  }
  if (scheme == "opt") {
    SolveResult res = solve(ctx.channel, ctx.plan, ctx.prec, ctx.cons,
                            UtilityMode::Sum, solver_seed);
    return res.sum_rate;
  }
  if (scheme == "dnn") {
    if (!model) throw std::domain_error("dnn scheme requires a model");
    if (model->spec.k != k || model->spec.g != g)
      throw std::domain_error("model dimensions do not match the sweep point");
    Eigen::VectorXd feat(2 * k);
    for (int i = 0; i < k; ++i) feat(i) = ctx.scenario.demands[i];
    for (int i = 0; i < k; ++i) feat(k + i) = ctx.channel.gains.row(i).sum();
    Prediction p = predict(*model, feat, ctx.cons, ctx.plan);
    RateKernel kern(ctx.channel, ctx.plan, ctx.prec);
    return kern.evaluate(p.allocation).sum_rate;
  }
  throw std::domain_error("unknown scheme: " + scheme);
}

std::vector<SweepRow> run_sweep(const SweepSpec& spec, const AppConfig& cfg,
                                const NetworkWeights* model, int threads) {
  spec.validate();
  bool wants_dnn = std::find(spec.schemes.begin(), spec.schemes.end(), "dnn") !=
                   spec.schemes.end();
  if (wants_dnn && !model)
    throw std::domain_error("sweep with dnn scheme requires --model");

  std::vector<SweepRow> rows;
  for (size_t pi = 0; pi < spec.range.size(); ++pi) {
    double value = spec.range[pi];
    int k_users = cfg.space.k;
    double waist = cfg.space.constants.beam_waist;
    std::optional<double> snr;
    if (spec.variable == "beamwaist") waist = value;
    if (spec.variable == "users") k_users = static_cast<int>(value);
    if (spec.variable == "snr") snr = value;

    // per-trial sum rates, computed in any order, aggregated in trial order
    std::vector<std::vector<double>> rates(spec.schemes.size(),
                                           std::vector<double>(spec.trials, 0.0));
    std::atomic<int> next{0};
    std::vector<std::string> errors(std::max(threads, 1));
    auto work = [&](int tid) {
      try {
        for (;;) {
          int t = next.fetch_add(1);
          if (t >= spec.trials) break;
          // trial seeds shared across sweep points: every point sees the same
          // scenario draws, so point-to-point comparisons are paired
          uint64_t seed = mix_seed(spec.master_seed, 0, t);
          TrialContext ctx = build_trial(cfg, seed, k_users, waist, snr);
          uint64_t sseed = solver_seed_for(ctx.scenario.rng_seed);
          for (size_t s = 0; s < spec.schemes.size(); ++s)
            rates[s][t] = scheme_sum_rate(spec.schemes[s], ctx, cfg, model, sseed);
        }
      } catch (const std::exception& e) {
        errors[tid] = e.what();
      }
    };
    if (threads <= 1) {
      work(0);
    } else {
      std::vector<std::thread> pool;
      for (int t = 0; t < threads; ++t) pool.emplace_back(work, t);
      for (auto& th : pool) th.join();
    }
    for (const auto& e : errors)
      if (!e.empty()) throw std::runtime_error("sweep failed: " + e);

    for (size_t s = 0; s < spec.schemes.size(); ++s) {
      double mean = 0.0;
      for (double r : rates[s]) mean += r;
      mean /= spec.trials;
      double var = 0.0;
      for (double r : rates[s]) var += (r - mean) * (r - mean);
      double sd = spec.trials > 1 ? std::sqrt(var / (spec.trials - 1)) : 0.0;
      rows.push_back({spec.variable, value, spec.schemes[s], mean, sd, spec.trials});
    }
  }
  return rows;
}

std::string sweep_to_csv(const std::vector<SweepRow>& rows) {
  std::ostringstream out;
  out << "variable,value,scheme,mean_sum_rate,std_sum_rate,trials\n";
  for (const auto& r : rows)
    out << r.variable << ',' << fmt_double(r.value) << ',' << r.scheme << ','
        << fmt_double(r.mean_sum_rate) << ',' << fmt_double(r.std_sum_rate)
        << ',' << r.trials << '\n';
  return out.str();
}

std::string run_report(const AppConfig& cfg, uint64_t seed,
                       const NetworkWeights* model) {
  TrialContext ctx = build_trial(cfg, seed, cfg.space.k,
                                 cfg.space.constants.beam_waist, std::nullopt);
  // the report honors the configured QoS default instead of the sweep override
  ctx.cons = cfg.constraints_with_demands(ctx.plan.num_groups, ctx.scenario.demands);

  std::ostringstream out;
  out << "scenario seed " << seed << ", K=" << ctx.scenario.num_users()
      << ", L=" << ctx.scenario.num_aps() << ", G=" << ctx.plan.num_groups
      << '\n';
  out << "grouping:";
  for (int g = 0; g < ctx.plan.num_groups; ++g) {
    out << " [";
    for (size_t i = 0; i < ctx.plan.group_members[g].size(); ++i)
      out << (i ? " " : "") << ctx.plan.group_members[g][i];
    out << ']';
  }
  out << '\n';
  if (ctx.prec.no_outer_separation)
    out << "warning: no-outer-separation (null space empty)\n";

  UtilityMode mode = utility_mode_from_string(cfg.utility_mode);
  SolveResult res = solve(ctx.channel, ctx.plan, ctx.prec, ctx.cons, mode,
                          solver_seed_for(ctx.scenario.rng_seed));
  RateKernel kern(ctx.channel, ctx.plan, ctx.prec);

  auto print_alloc = [&](const std::string& name, const PowerAllocation& a) {
    RateReport rep = kern.evaluate(a);
    out << name << ": p_oc=" << fmt_double(a.p_oc) << " p_ic=[";
    for (int g = 0; g < a.p_ic.size(); ++g)
      out << (g ? " " : "") << fmt_double(a.p_ic(g));
    out << "] p_p=[";
    for (int k = 0; k < a.p_p.size(); ++k)
      out << (k ? " " : "") << fmt_double(a.p_p(k));
    out << "]\n  r_oc=" << fmt_double(rep.r_oc) << " r_ic=[";
    for (int g = 0; g < rep.r_ic.size(); ++g)
      out << (g ? " " : "") << fmt_double(rep.r_ic(g));
    out << "] sum_rate=" << fmt_double(rep.sum_rate) << '\n';
  };

  print_alloc("solver", res.allocation);
  out << "solver utility=" << fmt_double(res.utility)
      << " feasible=" << (res.feasible ? "true" : "false")
      << " qos_met=" << (res.qos_met ? "true" : "false") << '\n';

  PowerAllocation uni =
      power_split(ctx.p_total, 0.8, 0.75, ctx.plan.num_groups,
                  ctx.scenario.num_users());
  print_alloc("hrs-uniform", uni);

  RsAllocation rsa;
  rsa.p_c = 0.25 * ctx.p_total;
  rsa.p_p = Eigen::VectorXd::Constant(ctx.scenario.num_users(),
                                      0.75 * ctx.p_total / ctx.scenario.num_users());
  out << "rs sum_rate=" << fmt_double(conventional_rs_rate(ctx.channel, rsa).sum_rate)
      << '\n';
  out << "oma sum_rate=" << fmt_double(oma_rate(ctx.channel, ctx.p_total).sum_rate)
      << '\n';

  if (model) {
    Eigen::VectorXd feat(2 * ctx.scenario.num_users());
    for (int i = 0; i < ctx.scenario.num_users(); ++i)
      feat(i) = ctx.scenario.demands[i];
    for (int i = 0; i < ctx.scenario.num_users(); ++i)
      feat(ctx.scenario.num_users() + i) = ctx.channel.gains.row(i).sum();
    Prediction p = predict(*model, feat, ctx.cons, ctx.plan);
    RateReport rep = kern.evaluate(p.allocation);
    print_alloc("dnn", p.allocation);
    double gap = res.sum_rate > 0 ? 1.0 - rep.sum_rate / res.sum_rate : 0.0;
    out << "dnn consistency_gap=" << fmt_double(p.consistency_gap)
        << " solver_gap=" << fmt_double(gap) << '\n';
  }
  return out.str();
}

}  // namespace owcrs
