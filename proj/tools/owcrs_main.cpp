#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "owcrs/config.hpp"
#include "owcrs/dnn.hpp"
#include "owcrs/experiments.hpp"
#include "owcrs/serialize.hpp"

namespace {

using namespace owcrs;

const char* bool_str(bool b) { return b ? "true" : "false"; }

void emit(const std::string& out_path, const std::string& content) {
  if (out_path.empty()) {
    std::cout << content;
    return;
  }
  std::ofstream f(out_path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write " + out_path);
  f << content;
}

struct ScenarioBundle {
  Scenario sc;
  ChannelMatrix ch;
  GroupingPlan plan;
  PrecoderSet prec;
  ConstraintSet cons;
};

ScenarioBundle make_bundle(const AppConfig& cfg, uint64_t seed) {
  ScenarioBundle b;
  b.sc = sample_scenario(seed, 0, cfg.space, 0);
  b.ch = build_channel(b.sc);
  std::vector<Eigen::Vector2d> xy;
  for (const auto& u : b.sc.user_positions) xy.emplace_back(u.x(), u.y());
  b.plan = kmeans_group(xy, cfg.space.groups, kmeans_seed_for(b.sc.rng_seed));
  b.prec = build_precoders(b.ch, b.plan);
  b.cons = cfg.constraints_with_demands(b.plan.num_groups, b.sc.demands);
  return b;
}

std::string channel_csv(const ChannelMatrix& ch) {
  std::ostringstream os;
  os << "user,ap,gain\n";
  for (int k = 0; k < ch.gains.rows(); ++k)
    for (int l = 0; l < ch.gains.cols(); ++l)
      os << k << ',' << l << ',' << fmt_double(ch.gains(k, l)) << '\n';
  return os.str();
}

std::string rates_csv(const std::string& scheme, const ScenarioBundle& b,
                      const AppConfig& cfg) {
  const int k_users = b.sc.num_users();
  RateReport rep;
  std::ostringstream os;
  os << "message,user,group,sinr,rate\n";
  auto row = [&](const char* msg, int k, int g, double sinr, double rate) {
    os << msg << ',' << k << ',' << g << ',' << fmt_double(sinr) << ','
       << fmt_double(rate) << '\n';
  };
  if (scheme == "hrs" || scheme == "hrs-uniform") {
    PowerAllocation a;
    if (scheme == "hrs") {
      SolveResult res =
          solve(b.ch, b.plan, b.prec, b.cons,
                utility_mode_from_string(cfg.utility_mode),
                solver_seed_for(b.sc.rng_seed));
      a = res.allocation;
    } else {
      a = power_split(cfg.p_total, 0.8, 0.75, b.plan.num_groups, k_users);
    }
    rep = hrs_rates(b.ch, b.plan, b.prec, a);
    for (int k = 0; k < k_users; ++k)
      row("oc", k, b.plan.assignment[k], rep.sinr_oc(k), rep.r_oc);
    for (int k = 0; k < k_users; ++k)
      row("ic", k, b.plan.assignment[k], rep.sinr_ic(k),
          rep.r_ic(b.plan.assignment[k]));
    for (int k = 0; k < k_users; ++k)
      row("p", k, b.plan.assignment[k], rep.sinr_p(k), rep.r_p(k));
  } else if (scheme == "rs") {
    RsAllocation a;
    a.p_c = 0.25 * cfg.p_total;
    a.p_p = Eigen::VectorXd::Constant(k_users, 0.75 * cfg.p_total / k_users);
    rep = conventional_rs_rate(b.ch, a);
    for (int k = 0; k < k_users; ++k) row("oc", k, 0, rep.sinr_oc(k), rep.r_oc);
    for (int k = 0; k < k_users; ++k) row("p", k, 0, rep.sinr_p(k), rep.r_p(k));
  } else if (scheme == "oma") {
    rep = oma_rate(b.ch, cfg.p_total);
    for (int k = 0; k < k_users; ++k) row("p", k, 0, rep.sinr_p(k), rep.r_p(k));
  } else {
    throw CLI::ValidationError("--scheme", "unknown scheme " + scheme);
  }
  os << "sum_rate=" << fmt_double(rep.sum_rate) << '\n';
  return os.str();
}

std::string optimize_csv(const SolveResult& res) {
  std::ostringstream os;
  os << "slot,index,power\n";
  os << "oc,0," << fmt_double(res.allocation.p_oc) << '\n';
  for (int g = 0; g < res.allocation.p_ic.size(); ++g)
    os << "ic," << g << ',' << fmt_double(res.allocation.p_ic(g)) << '\n';
  for (int k = 0; k < res.allocation.p_p.size(); ++k)
    os << "p," << k << ',' << fmt_double(res.allocation.p_p(k)) << '\n';
  os << "utility=" << fmt_double(res.utility) << '\n';
  os << "sum_rate=" << fmt_double(res.sum_rate) << '\n';
  os << "feasible=" << bool_str(res.feasible) << '\n';
  os << "qos_met=" << bool_str(res.qos_met) << '\n';
  return os.str();
}

std::string eval_csv(const DatasetFile& ds, const NetworkWeights& nw) {
  std::vector<int> test = ds.split_indices(2);
  if (test.empty()) throw std::runtime_error("dataset has no test split");

  double rmse = 0.0, ratio_sum = 0.0, gap_sum = 0.0;
  double dnn_total = 0.0, solver_total = 0.0;
  for (int i : test) {
    const Sample& s = ds.samples[i];
    Scenario sc = rebuild_scenario(ds.space, s.scenario_seed);
    ChannelMatrix ch = build_channel(sc);
    std::vector<Eigen::Vector2d> xy;
    for (const auto& u : sc.user_positions) xy.emplace_back(u.x(), u.y());
    GroupingPlan plan = kmeans_group(xy, ds.g, kmeans_seed_for(s.scenario_seed));
    PrecoderSet prec = build_precoders(ch, plan);
    RateKernel kern(ch, plan, prec);
    ConstraintSet cons = ds.cons;
    if (static_cast<int>(cons.group_caps.size()) != plan.num_groups)
      cons.group_caps = Eigen::VectorXd::Constant(
          plan.num_groups, ds.cons.group_caps.size() ? ds.cons.group_caps(0) : 0.0);

    PowerAllocation ref;
    ref.p_oc = cons.p_oc_fixed;
    ref.p_p = s.label.head(ds.k);
    ref.p_ic = s.label.segment(ds.k, ds.g);
    double solver_rate = kern.evaluate(ref).sum_rate;

    Prediction p = predict(nw, s.features, cons, plan);
    double dnn_rate = kern.evaluate(p.allocation).sum_rate;

    Eigen::VectorXd f = nw.norm.normalize_features(s.features);
    if (nw.spec.demands_only) f = f.head(nw.spec.k).eval();
    rmse += sample_loss(nw, f, nw.norm.normalize_label(s.label));
    if (solver_rate > 0) ratio_sum += dnn_rate / solver_rate;
    gap_sum += p.consistency_gap;
    dnn_total += dnn_rate;
    solver_total += solver_rate;
  }
  const double n = static_cast<double>(test.size());
  std::ostringstream os;
  os << "metric,value\n";
  os << "test_samples," << test.size() << '\n';
  os << "test_rmse," << fmt_double(rmse / n) << '\n';
  os << "mean_rate_ratio," << fmt_double(ratio_sum / n) << '\n';
  os << "rate_ratio_of_means,"
     << fmt_double(solver_total > 0 ? dnn_total / solver_total : 0.0) << '\n';
  os << "mean_consistency_gap," << fmt_double(gap_sum / n) << '\n';
  return os.str();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"two-tier rate-splitting optical wireless simulator"};
  app.require_subcommand(1);

  std::string config_path, out_path;
  uint64_t seed = 1;
  int threads = 1;
  app.add_option("--config", config_path, "config file (json)");
  auto* seed_opt = app.add_option("--seed", seed, "master seed");
  app.add_option("--out", out_path, "output path (default stdout)");
  app.add_option("--threads", threads, "worker threads")->check(CLI::PositiveNumber);

  auto* cmd_channel = app.add_subcommand("channel", "dump the channel gain matrix");
  auto* cmd_rates = app.add_subcommand("rates", "per-message SINRs and rates");
  std::string scheme = "hrs";
  cmd_rates->add_option("--scheme", scheme, "hrs|rs|oma|hrs-uniform")
      ->check(CLI::IsMember({"hrs", "rs", "oma", "hrs-uniform"}));
  auto* cmd_optimize = app.add_subcommand("optimize", "solve the power allocation");
  auto* cmd_gen = app.add_subcommand("gen-dataset", "generate a labeled dataset");
  int gen_n = 10000;
  cmd_gen->add_option("--n", gen_n, "sample count");
  auto* cmd_train = app.add_subcommand("train", "train the surrogate network");
  std::string dataset_path, model_path, features;
  int epochs = -1, batch = -1;
  double lr = 0.0;
  cmd_train->add_option("--dataset", dataset_path, "dataset csv")->required();
  cmd_train->add_option("--epochs", epochs, "training epochs");
  cmd_train->add_option("--batch", batch, "mini-batch size");
  cmd_train->add_option("--lr", lr, "learning rate");
  cmd_train->add_option("--features", features, "full|demand-only")
      ->check(CLI::IsMember({"full", "demand-only"}));
  auto* cmd_eval = app.add_subcommand("eval", "score a model on the test split");
  cmd_eval->add_option("--dataset", dataset_path, "dataset csv")->required();
  cmd_eval->add_option("--model", model_path, "weights file")->required();
  auto* cmd_sweep = app.add_subcommand("sweep", "scheme comparison curves");
  std::string variable;
  std::vector<double> values;
  int trials = 50;
  std::vector<std::string> schemes;
  cmd_sweep->add_option("--variable", variable, "beamwaist|users|snr")
      ->required()
      ->check(CLI::IsMember({"beamwaist", "users", "snr"}));
  cmd_sweep->add_option("--values", values,
                        "sweep points (m for beamwaist, dB for snr)");
  cmd_sweep->add_option("--trials", trials, "trials per point");
  cmd_sweep->add_option("--schemes", schemes, "subset of opt,dnn,hrs-uniform,rs,oma");
  cmd_sweep->add_option("--model", model_path, "weights file (needed for dnn)");
  auto* cmd_report = app.add_subcommand("report", "human-readable scenario summary");
  cmd_report->add_option("--model", model_path, "weights file (optional)");

  for (auto* sub : app.get_subcommands({})) sub->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    AppConfig cfg = config_path.empty() ? default_config() : load_config(config_path);
    if (seed_opt->count() == 0 && cfg.scenario_seed) seed = *cfg.scenario_seed;

    if (*cmd_channel) {
      emit(out_path, channel_csv(make_bundle(cfg, seed).ch));
    } else if (*cmd_rates) {
      emit(out_path, rates_csv(scheme, make_bundle(cfg, seed), cfg));
    } else if (*cmd_optimize) {
      ScenarioBundle b = make_bundle(cfg, seed);
      SolveResult res =
          solve(b.ch, b.plan, b.prec, b.cons,
                utility_mode_from_string(cfg.utility_mode),
                solver_seed_for(b.sc.rng_seed));
      emit(out_path, optimize_csv(res));
      if (!res.feasible) return 2;
    } else if (*cmd_gen) {
      if (out_path.empty())
        throw CLI::ValidationError("--out", "gen-dataset writes to a file");
      ConstraintSet cons = cfg.constraints(cfg.space.groups, cfg.space.k);
      DatasetFile ds = generate(gen_n, seed, cons, cfg.space, out_path, threads);
      std::cout << "samples=" << ds.samples.size()
                << " resampled=" << ds.resampled
                << " train=" << ds.split_indices(0).size()
                << " val=" << ds.split_indices(1).size()
                << " test=" << ds.split_indices(2).size() << '\n';
    } else if (*cmd_train) {
      if (out_path.empty())
        throw CLI::ValidationError("--out", "train writes a weights file");
      DatasetFile ds = load(dataset_path);
      NetworkSpec spec;
      spec.k = ds.k;
      spec.g = ds.g;
      spec.conv_channels = cfg.conv_channels;
      spec.conv_kernel = cfg.conv_kernel;
      spec.hidden = cfg.hidden;
      std::string mode = features.empty() ? cfg.features : features;
      spec.demands_only = (mode == "demand-only");
      NetworkWeights nw = init(spec, seed);
      TrainHistory hist =
          train(nw, ds, epochs > 0 ? epochs : cfg.epochs,
                batch > 0 ? batch : cfg.batch, lr > 0 ? lr : cfg.lr, seed);
      save_weights(nw, out_path);
      std::cout << "epochs=" << nw.epochs_trained
                << " final_train_loss=" << fmt_double(nw.final_train_loss)
                << " best_val_loss=" << fmt_double(nw.best_val_loss)
                << " best_epoch=" << hist.best_epoch << '\n';
    } else if (*cmd_eval) {
      emit(out_path, eval_csv(load(dataset_path), load_weights(model_path)));
    } else if (*cmd_sweep) {
      SweepSpec spec;
      spec.variable = variable;
      spec.trials = trials;
      spec.master_seed = seed;
      if (!values.empty()) {
        spec.range = values;
      } else if (variable == "beamwaist") {
        spec.range = {5e-6, 10e-6, 15e-6, 20e-6};
      } else if (variable == "snr") {
        spec.range = {5, 15, 25, 35};
      } else {
        spec.range = {2, 4, 6, 8, 10};
      }
      if (!schemes.empty())
        spec.schemes = schemes;
      else if (model_path.empty())
        spec.schemes = {"opt", "hrs-uniform", "rs", "oma"};
      NetworkWeights nw;
      bool have_model = !model_path.empty();
      if (have_model) nw = load_weights(model_path);
      emit(out_path,
           sweep_to_csv(run_sweep(spec, cfg, have_model ? &nw : nullptr, threads)));
    } else if (*cmd_report) {
      NetworkWeights nw;
      bool have_model = !model_path.empty();
      if (have_model) nw = load_weights(model_path);
      emit(out_path, run_report(cfg, seed, have_model ? &nw : nullptr));
    }
  } catch (const CLI::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const DisconnectedUserError& e) {
    std::cerr << "infeasible: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::string m = e.what();
    bool infeasible = m.find("exceeds p_total_cap") != std::string::npos ||
                      m.find("no feasible") != std::string::npos ||
                      m.find("resample") != std::string::npos;
    std::cerr << (infeasible ? "infeasible: " : "error: ") << m << '\n';
    return infeasible ? 2 : 1;
  }
  return 0;
}
