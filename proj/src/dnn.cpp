#include "owcrs/dnn.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "owcrs/rng.hpp"
#include "owcrs/serialize.hpp"

namespace owcrs {

void NetworkSpec::validate() const {
  if (k < 1 || g < 1) throw std::domain_error("spec needs k, g >= 1");
  if (conv_front && (conv_channels < 1 || conv_kernel < 1 || conv_kernel % 2 == 0))
    throw std::domain_error("conv stage needs channels >= 1 and odd kernel");
  for (int h : hidden)
    if (h < 1) throw std::domain_error("zero-width hidden layer");
}

NetworkGradients NetworkGradients::zeros_like(const NetworkWeights& nw) {
  NetworkGradients g;
  g.conv_w = Eigen::MatrixXd::Zero(nw.conv_w.rows(), nw.conv_w.cols());
  g.conv_b = Eigen::VectorXd::Zero(nw.conv_b.size());
  for (const auto& m : nw.w) g.w.push_back(Eigen::MatrixXd::Zero(m.rows(), m.cols()));
  for (const auto& v : nw.b) g.b.push_back(Eigen::VectorXd::Zero(v.size()));
  return g;
}

void NetworkGradients::accumulate(const NetworkGradients& o) {
  conv_w += o.conv_w;
  conv_b += o.conv_b;
  for (size_t i = 0; i < w.size(); ++i) w[i] += o.w[i];
  for (size_t i = 0; i < b.size(); ++i) b[i] += o.b[i];
}

void NetworkGradients::scale(double f) {
  conv_w *= f;
  conv_b *= f;
  for (auto& m : w) m *= f;
  for (auto& v : b) v *= f;
}

static double glorot_bound(int fan_in, int fan_out) {
  return std::sqrt(6.0 / (fan_in + fan_out));
}

NetworkWeights init(const NetworkSpec& spec, uint64_t seed) {
  spec.validate();
  NetworkWeights nw;
  nw.spec = spec;
  nw.seed = seed;
  Rng rng(seed);
  auto fill = [&](Eigen::MatrixXd& m, double bound) {
    for (int r = 0; r < m.rows(); ++r)
      for (int c = 0; c < m.cols(); ++c) m(r, c) = rng.uniform(-bound, bound);
  };
  if (spec.conv_front) {
    int ic = spec.input_channels();
    nw.conv_w.resize(spec.conv_channels, ic * spec.conv_kernel);
    fill(nw.conv_w, glorot_bound(ic * spec.conv_kernel,
                                 spec.conv_channels * spec.conv_kernel));
    nw.conv_b = Eigen::VectorXd::Zero(spec.conv_channels);
  } else {
    nw.conv_w.resize(0, 0);
    nw.conv_b.resize(0);
  }
  int prev = spec.flat_dim();
  for (int hsize : spec.hidden) {
    Eigen::MatrixXd m(hsize, prev);
    fill(m, glorot_bound(prev, hsize));
    nw.w.push_back(m);
    nw.b.push_back(Eigen::VectorXd::Zero(hsize));
    prev = hsize;
  }
  Eigen::MatrixXd mo(spec.output_dim(), prev);
  fill(mo, glorot_bound(prev, spec.output_dim()));
  nw.w.push_back(mo);
  nw.b.push_back(Eigen::VectorXd::Zero(spec.output_dim()));
  return nw;
}

static double softplus(double x) {
  return x > 30.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}
static double sigmoid(double x) {
  return x >= 0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x));
}

namespace {

struct ForwardCache {
  Eigen::VectorXd input;                 // input_dim
  Eigen::VectorXd conv_pre;              // channels*k, pre-activation
  Eigen::VectorXd flat;                  // flat_dim (post relu or raw input)
  std::vector<Eigen::VectorXd> pre;      // per dense layer pre-activation
  std::vector<Eigen::VectorXd> act;      // per dense layer activation input
  Eigen::VectorXd out;                   // softplus output
};

ForwardCache run_forward(const NetworkWeights& nw, const Eigen::VectorXd& x) {
  const auto& spec = nw.spec;
  if (x.size() != spec.input_dim())
    throw std::domain_error("feature length must equal input_dim");
  ForwardCache fc;
  fc.input = x;
  const int k = spec.k;
  if (spec.conv_front) {
    const int ic = spec.input_channels(), oc = spec.conv_channels;
    const int pad = spec.conv_kernel / 2;
    fc.conv_pre.resize(oc * k);
    for (int c = 0; c < oc; ++c) {
      for (int i = 0; i < k; ++i) {
        double s = nw.conv_b(c);
        for (int ch = 0; ch < ic; ++ch)
          for (int t = 0; t < spec.conv_kernel; ++t) {
            int src = i + t - pad;
            if (src < 0 || src >= k) continue;
            s += nw.conv_w(c, ch * spec.conv_kernel + t) * x(ch * k + src);
          }
        fc.conv_pre(c * k + i) = s;
      }
    }
    fc.flat = fc.conv_pre.cwiseMax(0.0);
  } else {
    fc.flat = x;
  }
  Eigen::VectorXd a = fc.flat;
  const int nlayers = static_cast<int>(nw.w.size());
  for (int l = 0; l < nlayers; ++l) {
    fc.act.push_back(a);
    Eigen::VectorXd z = nw.w[l] * a + nw.b[l];
    fc.pre.push_back(z);
    if (l + 1 < nlayers) {
      a = z.cwiseMax(0.0);
    } else {
      a = z.unaryExpr([](double v) { return softplus(v); });
    }
  }
  fc.out = a;
  return fc;
}

}  // namespace

Eigen::VectorXd forward(const NetworkWeights& nw, const Eigen::VectorXd& x) {
  return run_forward(nw, x).out;
}

double sample_loss(const NetworkWeights& nw, const Eigen::VectorXd& x,
                   const Eigen::VectorXd& target) {
  Eigen::VectorXd y = forward(nw, x);
  return std::sqrt((y - target).squaredNorm() / y.size());
}

NetworkGradients backprop(const NetworkWeights& nw, const Eigen::VectorXd& x,
                          const Eigen::VectorXd& target, double* loss_out) {
  const auto& spec = nw.spec;
  ForwardCache fc = run_forward(nw, x);
  const int dim = static_cast<int>(fc.out.size());
  double loss = std::sqrt((fc.out - target).squaredNorm() / dim);
  if (loss_out) *loss_out = loss;

  NetworkGradients g = NetworkGradients::zeros_like(nw);
  // d loss / d out; RMSE has a singular gradient at exact fit
  Eigen::VectorXd dout = Eigen::VectorXd::Zero(dim);
  if (loss > 1e-15) dout = (fc.out - target) / (dim * loss);

  const int nlayers = static_cast<int>(nw.w.size());
  Eigen::VectorXd delta = dout;
  for (int l = nlayers - 1; l >= 0; --l) {
    Eigen::VectorXd dz(delta.size());
    if (l == nlayers - 1) {
      for (int i = 0; i < dz.size(); ++i) dz(i) = delta(i) * sigmoid(fc.pre[l](i));
    } else {
      for (int i = 0; i < dz.size(); ++i) dz(i) = fc.pre[l](i) > 0.0 ? delta(i) : 0.0;
    }
    g.w[l] = dz * fc.act[l].transpose();
    g.b[l] = dz;
    delta = nw.w[l].transpose() * dz;
  }
  if (spec.conv_front) {
    const int k = spec.k, ic = spec.input_channels(), oc = spec.conv_channels;
    const int pad = spec.conv_kernel / 2;
    Eigen::VectorXd dflat(delta.size());
    for (int i = 0; i < dflat.size(); ++i)
      dflat(i) = fc.conv_pre(i) > 0.0 ? delta(i) : 0.0;
    for (int c = 0; c < oc; ++c) {
      for (int i = 0; i < k; ++i) {
        double dz = dflat(c * k + i);
        if (dz == 0.0) continue;
        g.conv_b(c) += dz;
        for (int ch = 0; ch < ic; ++ch)
          for (int t = 0; t < spec.conv_kernel; ++t) {
            int src = i + t - pad;
            if (src < 0 || src >= k) continue;
            g.conv_w(c, ch * spec.conv_kernel + t) += dz * x(ch * k + src);
          }
      }
    }
  }
  return g;
}

namespace {

struct Adam {
  NetworkGradients m, v;
  long long t = 0;
  double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;

  explicit Adam(const NetworkWeights& nw)
      : m(NetworkGradients::zeros_like(nw)), v(NetworkGradients::zeros_like(nw)) {}

  void step(NetworkWeights& nw, const NetworkGradients& g, double lr) {
    ++t;
    double c1 = 1.0 - std::pow(beta1, static_cast<double>(t));
    double c2 = 1.0 - std::pow(beta2, static_cast<double>(t));
    auto upd_m = [&](Eigen::MatrixXd& mm, Eigen::MatrixXd& vv,
                     const Eigen::MatrixXd& gg, Eigen::MatrixXd& ww) {
      mm = beta1 * mm + (1.0 - beta1) * gg;
      vv = beta2 * vv + (1.0 - beta2) * gg.cwiseProduct(gg);
      Eigen::MatrixXd mhat = mm / c1;
      Eigen::MatrixXd denom = (vv / c2).cwiseSqrt().array() + eps;
      ww -= lr * mhat.cwiseQuotient(denom);
    };
    auto upd_v = [&](Eigen::VectorXd& mm, Eigen::VectorXd& vv,
                     const Eigen::VectorXd& gg, Eigen::VectorXd& ww) {
      mm = beta1 * mm + (1.0 - beta1) * gg;
      vv = beta2 * vv + (1.0 - beta2) * gg.cwiseProduct(gg);
      Eigen::VectorXd mhat = mm / c1;
      Eigen::VectorXd denom = (vv / c2).cwiseSqrt().array() + eps;
      ww -= lr * mhat.cwiseQuotient(denom);
    };
    if (nw.conv_w.size()) upd_m(m.conv_w, v.conv_w, g.conv_w, nw.conv_w);
    if (nw.conv_b.size()) upd_v(m.conv_b, v.conv_b, g.conv_b, nw.conv_b);
    for (size_t i = 0; i < nw.w.size(); ++i) upd_m(m.w[i], v.w[i], g.w[i], nw.w[i]);
    for (size_t i = 0; i < nw.b.size(); ++i) upd_v(m.b[i], v.b[i], g.b[i], nw.b[i]);
  }
};

}  // namespace

TrainHistory train(NetworkWeights& nw, const DatasetFile& ds, int epochs,
                   int batch, double lr, uint64_t seed) {
  if (ds.samples.empty()) throw std::domain_error("empty dataset");
  if (batch < 1) throw std::domain_error("batch >= 1");
  nw.norm = ds.norm;
  std::vector<int> train_idx = ds.split_indices(0);
  std::vector<int> val_idx = ds.split_indices(1);
  if (train_idx.empty()) throw std::domain_error("dataset has no train split");

  auto features_of = [&](int i) {
    Eigen::VectorXd f = ds.norm.normalize_features(ds.samples[i].features);
    if (nw.spec.demands_only) return f.head(nw.spec.k).eval();
    return f;
  };
  auto label_of = [&](int i) { return ds.norm.normalize_label(ds.samples[i].label); };

  auto eval_split = [&](const std::vector<int>& idx) {
    if (idx.empty()) return 0.0;
    double s = 0.0;
    for (int i : idx) s += sample_loss(nw, features_of(i), label_of(i));
    return s / idx.size();
  };

  TrainHistory hist;
  Adam adam(nw);
  NetworkWeights best = nw;
  double best_val = std::numeric_limits<double>::infinity();
  int best_epoch = -1;

  for (int epoch = 0; epoch < epochs; ++epoch) {
    std::vector<int> order = train_idx;
    Rng rng(mix_seed(seed, static_cast<uint64_t>(epoch) + 1));
    for (int i = static_cast<int>(order.size()) - 1; i > 0; --i) {
      int j = static_cast<int>(rng.below(static_cast<uint64_t>(i) + 1));
      std::swap(order[i], order[j]);
    }
    double epoch_loss = 0.0;
    size_t nb = 0;
    for (size_t pos = 0; pos < order.size(); pos += batch) {
      size_t end = std::min(order.size(), pos + batch);
      NetworkGradients acc = NetworkGradients::zeros_like(nw);
      double batch_loss = 0.0;
      for (size_t q = pos; q < end; ++q) {
        double l = 0.0;
        NetworkGradients g = backprop(nw, features_of(order[q]), label_of(order[q]), &l);
        acc.accumulate(g);
        batch_loss += l;
      }
      double inv = 1.0 / static_cast<double>(end - pos);
      acc.scale(inv);
      adam.step(nw, acc, lr);
      epoch_loss += batch_loss * inv;
      ++nb;
    }
    epoch_loss /= std::max<size_t>(nb, 1);
    if (!std::isfinite(epoch_loss))
      throw std::runtime_error("NaN training loss at epoch " + std::to_string(epoch));
    double vloss = eval_split(val_idx);
    hist.train_loss.push_back(epoch_loss);
    hist.val_loss.push_back(vloss);
    if (!val_idx.empty() && vloss < best_val) {
      best_val = vloss;
      best = nw;
      best_epoch = epoch;
    }
  }
  if (best_epoch >= 0) {
    best.norm = nw.norm;
    nw = best;
  }
  nw.epochs_trained = epochs;
  nw.final_train_loss = hist.train_loss.empty() ? 0.0 : hist.train_loss.back();
  nw.best_val_loss = best_epoch >= 0 ? best_val : 0.0;
  hist.best_epoch = best_epoch;
  return hist;
}

Prediction predict(const NetworkWeights& nw, const Eigen::VectorXd& raw_features,
                   const ConstraintSet& cons, const GroupingPlan& plan) {
  Eigen::VectorXd f = nw.norm.normalize_features(raw_features);
  if (nw.spec.demands_only) f = f.head(nw.spec.k).eval();
  Eigen::VectorXd y = forward(nw, f);
  Eigen::VectorXd raw = nw.norm.denormalize_label(y);
  const int k = nw.spec.k, g = nw.spec.g;
  Eigen::VectorXd x(g + k);
  x.head(g) = raw.segment(k, g);
  x.tail(k) = raw.head(k);
  Prediction p;
  p.allocation = project_feasible(x, cons, plan);
  p.predicted_total = raw(k + g);
  p.consistency_gap = std::abs(p.predicted_total - p.allocation.total());
  return p;
}

void save_weights(const NetworkWeights& nw, const std::string& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write " + path);
  f << "version 1\n";
  f << "spec k " << nw.spec.k << " g " << nw.spec.g << " conv "
    << (nw.spec.conv_front ? nw.spec.conv_channels : 0) << ' '
    << nw.spec.conv_kernel << " hidden";
  for (int h : nw.spec.hidden) f << ' ' << h;
  f << " activation relu softplus features "
    << (nw.spec.demands_only ? "demand-only" : "full") << " seed " << nw.seed
    << " epochs " << nw.epochs_trained << " train_loss "
    << fmt_double(nw.final_train_loss) << " val_loss "
    << fmt_double(nw.best_val_loss) << '\n';
  auto emit_vec = [&](const Eigen::VectorXd& v) {
    for (int i = 0; i < v.size(); ++i) f << ' ' << fmt_double(v(i));
  };
  f << "normalization " << nw.norm.feature_min.size() << ' '
    << nw.norm.label_min.size();
  emit_vec(nw.norm.feature_min);
  emit_vec(nw.norm.feature_max);
  emit_vec(nw.norm.label_min);
  emit_vec(nw.norm.label_max);
  f << '\n';
  auto emit_tensor = [&](const std::string& name, const Eigen::MatrixXd& m) {
    f << "tensor " << name << ' ' << m.rows() << ' ' << m.cols();
    for (int r = 0; r < m.rows(); ++r)
      for (int c = 0; c < m.cols(); ++c) f << ' ' << fmt_double(m(r, c));
    f << '\n';
  };
  if (nw.spec.conv_front) {
    emit_tensor("conv_w", nw.conv_w);
    emit_tensor("conv_b", nw.conv_b.transpose());
  }
  for (size_t l = 0; l < nw.w.size(); ++l) {
    std::string base =
        l + 1 == nw.w.size() ? "out" : "dense" + std::to_string(l);
    emit_tensor(base + "_w", nw.w[l]);
    emit_tensor(base + "_b", nw.b[l].transpose());
  }
}

NetworkWeights load_weights(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot read " + path);
  std::string line;
  if (!std::getline(f, line) || line != "version 1")
    throw std::runtime_error("weights file: unsupported version line");

  NetworkWeights nw;
  if (!std::getline(f, line)) throw std::runtime_error("weights file: missing spec");
  {
    std::istringstream ss(line);
    std::string tok;
    ss >> tok;
    if (tok != "spec") throw std::runtime_error("weights file: expected spec line");
    nw.spec.hidden.clear();
    while (ss >> tok) {
      if (tok == "k") ss >> nw.spec.k;
      else if (tok == "g") ss >> nw.spec.g;
      else if (tok == "conv") {
        ss >> nw.spec.conv_channels >> nw.spec.conv_kernel;
        nw.spec.conv_front = nw.spec.conv_channels > 0;
      } else if (tok == "hidden") {
        int h;
        while (ss >> h) nw.spec.hidden.push_back(h);
        ss.clear();
      } else if (tok == "activation") {
        std::string a1, a2;
        ss >> a1 >> a2;
      } else if (tok == "features") {
        std::string m;
        ss >> m;
        nw.spec.demands_only = (m == "demand-only");
      } else if (tok == "seed") ss >> nw.seed;
      else if (tok == "epochs") ss >> nw.epochs_trained;
      else if (tok == "train_loss") ss >> nw.final_train_loss;
      else if (tok == "val_loss") ss >> nw.best_val_loss;
    }
  }
  if (!std::getline(f, line))
    throw std::runtime_error("weights file: missing normalization");
  {
    std::istringstream ss(line);
    std::string tok;
    ss >> tok;
    if (tok != "normalization")
      throw std::runtime_error("weights file: expected normalization line");
    int fdim, ldim;
    ss >> fdim >> ldim;
    auto read_vec = [&](int n) {
      Eigen::VectorXd v(n);
      for (int i = 0; i < n; ++i)
        if (!(ss >> v(i)))
          throw std::runtime_error("weights file: truncated normalization");
      return v;
    };
    nw.norm.feature_min = read_vec(fdim);
    nw.norm.feature_max = read_vec(fdim);
    nw.norm.label_min = read_vec(ldim);
    nw.norm.label_max = read_vec(ldim);
  }
  std::vector<std::pair<std::string, Eigen::MatrixXd>> tensors;
  while (std::getline(f, line)) {
    if (line.empty()) continue;
    std::istringstream ss(line);
    std::string tok, name;
    long rows, cols;
    ss >> tok >> name >> rows >> cols;
    if (tok != "tensor") throw std::runtime_error("weights file: expected tensor line");
    Eigen::MatrixXd m(rows, cols);
    for (long r = 0; r < rows; ++r)
      for (long c = 0; c < cols; ++c)
        if (!(ss >> m(r, c)))
          throw std::runtime_error("weights file: truncated tensor " + name);
    if (!m.allFinite())
      throw std::runtime_error("weights file: non-finite values in " + name);
    tensors.emplace_back(name, m);
  }
  size_t pos = 0;
  auto take = [&](const std::string& name) {
    if (pos >= tensors.size() || tensors[pos].first != name)
      throw std::runtime_error("weights file: missing tensor " + name);
    return tensors[pos++].second;
  };
  if (nw.spec.conv_front) {
    nw.conv_w = take("conv_w");
    nw.conv_b = take("conv_b").transpose();
  }
  for (size_t l = 0; l <= nw.spec.hidden.size(); ++l) {
    std::string base =
        l == nw.spec.hidden.size() ? "out" : "dense" + std::to_string(l);
    nw.w.push_back(take(base + "_w"));
    nw.b.push_back(take(base + "_b").transpose());
  }
  return nw;
}

}  // namespace owcrs
