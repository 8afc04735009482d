#include "uavnet/predict.hpp"

#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <exception>
#include <fstream>
#include <map>
#include <mutex>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <thread>
#include <variant>

#include <nlohmann/json.hpp>

#include "uavnet/rng.hpp"

namespace uavnet::predict {

namespace {

using Features = std::array<double, kFeatureCount>;
using json = nlohmann::json;

constexpr int kModelFormatVersion = 1;

Features as_array(const FeatureRow& r) { return {r.x_m, r.y_m, r.alt_m}; }

// Runs f(0..n-1) on up to hardware_concurrency threads. Results must be
// written to per-index slots so the outcome does not depend on scheduling.
template <typename F>
void parallel_for(std::size_t n, F&& f) {
  const std::size_t workers =
      std::min<std::size_t>(n, std::max(1u, std::thread::hardware_concurrency()));
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) f(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) {
        try {
          f(i);
        } catch (...) {
          std::lock_guard lock(error_mutex);
          if (!error) error = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

// Mean, returned exactly when all values are equal.
template <typename Get>
double mean_of(std::size_t n, Get get) {
  const double first = get(0);
  double sum = 0.0;
  bool constant = true;
  for (std::size_t i = 0; i < n; ++i) {
    const double v = get(i);
    constant = constant && v == first;
    sum += v;
  }
  return constant ? first : sum / static_cast<double>(n);
}

// ---------------------------------------------------------------------------
// Regression trees

struct Node {
  int feature = -1;  // -1 = leaf
  double threshold = 0.0;
  double value = 0.0;
  int left = -1;
  int right = -1;
};

struct Tree {
  std::vector<Node> nodes;

  double eval(const Features& x) const {
    int i = 0;
    while (nodes[i].feature >= 0) {
      const auto& n = nodes[i];
      i = x[n.feature] <= n.threshold ? n.left : n.right;
    }
    return nodes[i].value;
  }
};

struct TreeParams {
  int max_depth = 12;
  int max_features = 3;
  int min_leaf = 1;
};

class TreeBuilder {
 public:
  TreeBuilder(const std::vector<Features>& x, const std::vector<double>& y, TreeParams p, Rng* rng)
      : x_(x), y_(y), p_(p), rng_(rng) {}

  Tree build(std::vector<std::size_t> idx) {
    idx_ = std::move(idx);
    tree_.nodes.clear();
    grow(0, idx_.size(), 0);
    return std::move(tree_);
  }

 private:
  struct Split {
    int feature = -1;
    double threshold = 0.0;
    double score = -1.0;
  };

  int grow(std::size_t lo, std::size_t hi, int depth) {
    const int id = static_cast<int>(tree_.nodes.size());
    tree_.nodes.emplace_back();
    const std::size_t n = hi - lo;
    const double value = mean_of(n, [&](std::size_t i) { return y_[idx_[lo + i]]; });
    tree_.nodes[id].value = value;

    const bool pure = std::all_of(idx_.begin() + static_cast<std::ptrdiff_t>(lo),
                                  idx_.begin() + static_cast<std::ptrdiff_t>(hi),
                                  [&](std::size_t i) { return y_[i] == y_[idx_[lo]]; });
    if (depth >= p_.max_depth || pure || n < 2 * static_cast<std::size_t>(p_.min_leaf)) return id;

    std::array<int, kFeatureCount> order{};
    std::iota(order.begin(), order.end(), 0);
    if (rng_ && p_.max_features < static_cast<int>(kFeatureCount)) rng_->shuffle(order.begin(), order.end());

    Split best;
    for (std::size_t k = 0; k < kFeatureCount; ++k) {
      // Features past max_features are only tried when the sampled ones
      // cannot separate the node.
      if (static_cast<int>(k) >= p_.max_features && best.feature >= 0) break;
      evaluate(lo, hi, value, order[k], best);
    }
    if (best.feature < 0) return id;

    const auto mid = std::stable_partition(
        idx_.begin() + static_cast<std::ptrdiff_t>(lo), idx_.begin() + static_cast<std::ptrdiff_t>(hi),
        [&](std::size_t i) { return x_[i][best.feature] <= best.threshold; });
    const auto split_at = static_cast<std::size_t>(mid - idx_.begin());

    const int left = grow(lo, split_at, depth + 1);
    const int right = grow(split_at, hi, depth + 1);
    auto& node = tree_.nodes[id];
    node.feature = best.feature;
    node.threshold = best.threshold;
    node.left = left;
    node.right = right;
    return id;
  }

  // Variance reduction, scored as sL^2/nL + sR^2/nR on node-centred targets.
  void evaluate(std::size_t lo, std::size_t hi, double centre, int f, Split& best) {
    scratch_.assign(idx_.begin() + static_cast<std::ptrdiff_t>(lo),
                    idx_.begin() + static_cast<std::ptrdiff_t>(hi));
    std::stable_sort(scratch_.begin(), scratch_.end(),
                     [&](std::size_t a, std::size_t b) { return x_[a][f] < x_[b][f]; });
    const std::size_t n = scratch_.size();
    double total = 0.0;
    for (auto i : scratch_) total += y_[i] - centre;
    double left_sum = 0.0;
    const auto min_leaf = static_cast<std::size_t>(p_.min_leaf);
    for (std::size_t i = 1; i < n; ++i) {
      left_sum += y_[scratch_[i - 1]] - centre;
      if (i < min_leaf || n - i < min_leaf) continue;
      const double a = x_[scratch_[i - 1]][f];
      const double b = x_[scratch_[i]][f];
      if (!(a < b)) continue;
      const double right_sum = total - left_sum;
      const double score = left_sum * left_sum / static_cast<double>(i) +
                           right_sum * right_sum / static_cast<double>(n - i);
      if (score > best.score) {
        double thr = a + (b - a) / 2.0;
        if (!(thr < b)) thr = a;
        best = {f, thr, score};
      }
    }
  }

  const std::vector<Features>& x_;
  const std::vector<double>& y_;
  TreeParams p_;
  Rng* rng_;
  std::vector<std::size_t> idx_;
  std::vector<std::size_t> scratch_;
  Tree tree_;
};

json tree_to_json(const Tree& t) {
  json feature = json::array(), threshold = json::array(), value = json::array(),
       left = json::array(), right = json::array();
  for (const auto& n : t.nodes) {
    feature.push_back(n.feature);
    threshold.push_back(n.threshold);
    value.push_back(n.value);
    left.push_back(n.left);
    right.push_back(n.right);
  }
  return {{"feature", feature}, {"threshold", threshold}, {"value", value},
          {"left", left},       {"right", right}};
}

Tree tree_from_json(const json& j) {
  const auto& f = j.at("feature");
  Tree t;
  t.nodes.resize(f.size());
  for (std::size_t i = 0; i < f.size(); ++i) {
    auto& n = t.nodes[i];
    n.feature = j.at("feature").at(i).get<int>();
    n.threshold = j.at("threshold").at(i).get<double>();
    n.value = j.at("value").at(i).get<double>();
    n.left = j.at("left").at(i).get<int>();
    n.right = j.at("right").at(i).get<int>();
    const auto count = static_cast<int>(f.size());
    if (n.feature >= static_cast<int>(kFeatureCount) ||
        (n.feature >= 0 && (n.left <= static_cast<int>(i) || n.right <= static_cast<int>(i) ||
                            n.left >= count || n.right >= count))) {
      throw std::runtime_error("model file: malformed tree node");
    }
  }
  if (t.nodes.empty()) throw std::runtime_error("model file: empty tree");
  return t;
}

// ---------------------------------------------------------------------------
// Model bodies

struct Forest {
  std::vector<Tree> trees;

  double eval(const Features& x) const {
    double m = 0.0;
    for (std::size_t k = 0; k < trees.size(); ++k) {
      m += (trees[k].eval(x) - m) / static_cast<double>(k + 1);
    }
    return m;
  }
};

struct Boosted {
  double init = 0.0;
  double learning_rate = 0.05;
  std::vector<Tree> trees;

  double eval(const Features& x) const {
    double f = init;
    for (const auto& t : trees) f += learning_rate * t.eval(x);
    return f;
  }
};

struct Mlp {
  int hidden = 64;
  Features in_mean{};
  Features in_scale{1.0, 1.0, 1.0};
  double y_mean = 0.0;
  double y_scale = 1.0;
  bool constant = false;
  // W1 (h x d), b1 (h), W2 (h x h), b2 (h), w3 (h), b3
  std::vector<double> theta;

  std::size_t size() const {
    const auto h = static_cast<std::size_t>(hidden);
    return h * kFeatureCount + h + h * h + h + h + 1;
  }

  struct Activations {
    std::vector<double> z1, a1, z2, a2;
    double out = 0.0;
  };

  void forward(const Features& xs, Activations& a) const {
    const auto h = static_cast<std::size_t>(hidden);
    const double* w1 = theta.data();
    const double* b1 = w1 + h * kFeatureCount;
    const double* w2 = b1 + h;
    const double* b2 = w2 + h * h;
    const double* w3 = b2 + h;
    const double b3 = w3[h];
    a.z1.resize(h);
    a.a1.resize(h);
    a.z2.resize(h);
    a.a2.resize(h);
    for (std::size_t j = 0; j < h; ++j) {
      double z = b1[j];
      for (std::size_t k = 0; k < kFeatureCount; ++k) z += w1[j * kFeatureCount + k] * xs[k];
      a.z1[j] = z;
      a.a1[j] = z > 0.0 ? z : 0.0;
    }
    for (std::size_t j = 0; j < h; ++j) {
      double z = b2[j];
      const double* row = w2 + j * h;
      for (std::size_t k = 0; k < h; ++k) z += row[k] * a.a1[k];
      a.z2[j] = z;
      a.a2[j] = z > 0.0 ? z : 0.0;
    }
    double out = b3;
    for (std::size_t j = 0; j < h; ++j) out += w3[j] * a.a2[j];
    a.out = out;
  }

  Features standardize(const Features& x) const {
    Features s{};
    for (std::size_t k = 0; k < kFeatureCount; ++k) s[k] = (x[k] - in_mean[k]) / in_scale[k];
    return s;
  }

  double eval(const Features& x) const {
    if (constant) return y_mean;
    Activations a;
    forward(standardize(x), a);
    return a.out * y_scale + y_mean;
  }
};

void check_radio_metric(Metric m) {
  if (m != Metric::Rsrp && m != Metric::Rsrq && m != Metric::Rssi && m != Metric::Sinr) {
    throw std::invalid_argument("prediction target must be rsrp, rsrq, rssi or sinr");
  }
}

Forest fit_forest(const std::vector<Features>& x, const std::vector<double>& y,
                  const Hyperparams& hp, std::uint64_t seed) {
  TreeParams p;
  p.max_depth = hp.max_depth;
  p.max_features = hp.max_features > 0
                       ? std::min<int>(hp.max_features, kFeatureCount)
                       : std::max(1, static_cast<int>(std::sqrt(static_cast<double>(kFeatureCount))));
  p.min_leaf = hp.min_samples_leaf;
  Forest forest;
  forest.trees.resize(static_cast<std::size_t>(hp.n_trees));
  const std::size_t n = x.size();
  parallel_for(forest.trees.size(), [&](std::size_t k) {
    Rng rng = Rng::stream(seed, k);
    std::vector<std::size_t> sample(n);
    for (auto& i : sample) i = rng.below(n);
    TreeBuilder builder(x, y, p, &rng);
    forest.trees[k] = builder.build(std::move(sample));
  });
  return forest;
}

Boosted fit_boosted(const std::vector<Features>& x, const std::vector<double>& y,
                    const Hyperparams& hp) {
  Boosted model;
  model.learning_rate = hp.learning_rate;
  const std::size_t n = x.size();
  model.init = mean_of(n, [&](std::size_t i) { return y[i]; });
  std::vector<double> current(n, model.init);
  std::vector<double> residual(n);
  std::vector<std::size_t> all(n);
  std::iota(all.begin(), all.end(), 0);
  TreeParams p;
  p.max_depth = hp.boost_depth;
  p.max_features = static_cast<int>(kFeatureCount);
  p.min_leaf = hp.min_samples_leaf;
  for (int round = 0; round < hp.boost_rounds; ++round) {
    for (std::size_t i = 0; i < n; ++i) residual[i] = y[i] - current[i];
    TreeBuilder builder(x, residual, p, nullptr);
    Tree t = builder.build(all);
    for (std::size_t i = 0; i < n; ++i) current[i] += model.learning_rate * t.eval(x[i]);
    model.trees.push_back(std::move(t));
  }
  return model;
}

Mlp fit_mlp(const std::vector<Features>& x, const std::vector<double>& y, const Hyperparams& hp,
            std::uint64_t seed) {
  Mlp net;
  net.hidden = hp.hidden_units;
  const std::size_t n = x.size();
  const auto nd = static_cast<double>(n);

  for (std::size_t k = 0; k < kFeatureCount; ++k) {
    double m = 0.0;
    for (const auto& r : x) m += r[k];
    m /= nd;
    double v = 0.0;
    for (const auto& r : x) v += (r[k] - m) * (r[k] - m);
    const double sd = std::sqrt(v / nd);
    net.in_mean[k] = m;
    net.in_scale[k] = sd > 0.0 ? sd : 1.0;
  }
  net.y_mean = mean_of(n, [&](std::size_t i) { return y[i]; });
  if (std::all_of(y.begin(), y.end(), [&](double v) { return v == y.front(); })) {
    net.constant = true;
    net.theta.assign(net.size(), 0.0);
    return net;
  }
  double v = 0.0;
  for (double t : y) v += (t - net.y_mean) * (t - net.y_mean);
  net.y_scale = std::sqrt(v / nd);

  std::vector<Features> xs(n);
  std::vector<double> ys(n);
  for (std::size_t i = 0; i < n; ++i) {
    xs[i] = net.standardize(x[i]);
    ys[i] = (y[i] - net.y_mean) / net.y_scale;
  }

  const auto h = static_cast<std::size_t>(net.hidden);
  Rng rng = Rng::stream(seed, 0);
  net.theta.assign(net.size(), 0.0);
  {
    double* w1 = net.theta.data();
    double* w2 = w1 + h * kFeatureCount + h;
    double* w3 = w2 + h * h + h;
    const double s1 = std::sqrt(2.0 / kFeatureCount);
    const double s2 = std::sqrt(2.0 / static_cast<double>(h));
    const double s3 = std::sqrt(1.0 / static_cast<double>(h));
    for (std::size_t i = 0; i < h * kFeatureCount; ++i) w1[i] = rng.normal() * s1;
    for (std::size_t i = 0; i < h * h; ++i) w2[i] = rng.normal() * s2;
    for (std::size_t i = 0; i < h; ++i) w3[i] = rng.normal() * s3;
  }

  // Adam
  constexpr double kBeta1 = 0.9;
  constexpr double kBeta2 = 0.999;
  constexpr double kEps = 1e-8;
  std::vector<double> m1(net.theta.size(), 0.0), m2(net.theta.size(), 0.0),
      grad(net.theta.size(), 0.0), d_a1(h), d_z2(h);
  double beta1_t = 1.0;
  double beta2_t = 1.0;

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  const auto batch = static_cast<std::size_t>(hp.batch_size);
  Mlp::Activations act;

  for (int epoch = 0; epoch < hp.epochs; ++epoch) {
    rng.shuffle(order.begin(), order.end());
    for (std::size_t start = 0; start < n; start += batch) {
      const std::size_t stop = std::min(n, start + batch);
      std::fill(grad.begin(), grad.end(), 0.0);
      double* g1 = grad.data();
      double* gb1 = g1 + h * kFeatureCount;
      double* g2 = gb1 + h;
      double* gb2 = g2 + h * h;
      double* g3 = gb2 + h;
      const double* w2 = net.theta.data() + h * kFeatureCount + h;
      const double* w3 = w2 + h * h + h;

      for (std::size_t b = start; b < stop; ++b) {
        const std::size_t i = order[b];
        net.forward(xs[i], act);
        const double d_out = act.out - ys[i];
        for (std::size_t j = 0; j < h; ++j) {
          g3[j] += d_out * act.a2[j];
          d_z2[j] = act.z2[j] > 0.0 ? d_out * w3[j] : 0.0;
        }
        g3[h] += d_out;
        std::fill(d_a1.begin(), d_a1.end(), 0.0);
        for (std::size_t j = 0; j < h; ++j) {
          if (d_z2[j] == 0.0) continue;
          const double* row = w2 + j * h;
          double* grow = g2 + j * h;
          for (std::size_t k = 0; k < h; ++k) {
            grow[k] += d_z2[j] * act.a1[k];
            d_a1[k] += row[k] * d_z2[j];
          }
          gb2[j] += d_z2[j];
        }
        for (std::size_t j = 0; j < h; ++j) {
          if (act.z1[j] <= 0.0) continue;
          for (std::size_t k = 0; k < kFeatureCount; ++k) g1[j * kFeatureCount + k] += d_a1[j] * xs[i][k];
          gb1[j] += d_a1[j];
        }
      }

      const double inv = 1.0 / static_cast<double>(stop - start);
      beta1_t *= kBeta1;
      beta2_t *= kBeta2;
      const double lr = hp.step_size * std::sqrt(1.0 - beta2_t) / (1.0 - beta1_t);
      for (std::size_t p = 0; p < net.theta.size(); ++p) {
        const double g = grad[p] * inv;
        m1[p] = kBeta1 * m1[p] + (1.0 - kBeta1) * g;
        m2[p] = kBeta2 * m2[p] + (1.0 - kBeta2) * g * g;
        net.theta[p] -= lr * m1[p] / (std::sqrt(m2[p]) + kEps);
      }
    }
  }
  return net;
}

json features_json(const Features& f) { return json::array({f[0], f[1], f[2]}); }

Features features_from_json(const json& j) {
  if (!j.is_array() || j.size() != kFeatureCount) throw std::runtime_error("model file: bad feature vector");
  return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

}  // namespace

// ---------------------------------------------------------------------------

std::string_view to_string(ModelKind k) {
  switch (k) {
    case ModelKind::TreeEnsemble: return "rf";
    case ModelKind::BoostedTrees: return "gb";
    case ModelKind::FeedforwardNet: return "mlp";
  }
  return "?";
}

ModelKind parse_model_kind(std::string_view text) {
  if (text == "rf" || text == "forest") return ModelKind::TreeEnsemble;
  if (text == "gb" || text == "boost") return ModelKind::BoostedTrees;
  if (text == "mlp" || text == "nn") return ModelKind::FeedforwardNet;
  throw std::invalid_argument("unknown model kind '" + std::string(text) + "' (rf, gb, mlp)");
}

std::string_view to_string(Protocol p) { return p == Protocol::Loao ? "loao" : "split"; }

Protocol parse_protocol(std::string_view text) {
  if (text == "loao") return Protocol::Loao;
  if (text == "split") return Protocol::RandomSplit;
  throw std::invalid_argument("unknown protocol '" + std::string(text) + "' (loao, split)");
}

void Hyperparams::check() const {
  if (n_trees < 1 || max_depth < 1 || max_features < 0 || min_samples_leaf < 1 || boost_rounds < 1 ||
      boost_depth < 1 || hidden_units < 1 || epochs < 1 || batch_size < 1) {
    throw std::invalid_argument("hyperparameters: counts must be positive");
  }
  if (!(learning_rate > 0.0) || !(step_size > 0.0)) {
    throw std::invalid_argument("hyperparameters: rates must be positive");
  }
}

struct TrainedPredictor::State {
  ModelKind kind = ModelKind::TreeEnsemble;
  Metric target = Metric::Rsrp;
  std::uint64_t seed = 0;
  Hyperparams hp;
  std::size_t n_train = 0;
  std::optional<ProjectionOrigin> origin;
  std::variant<Forest, Boosted, Mlp> body;

  double eval(const Features& x) const {
    return std::visit([&](const auto& m) { return m.eval(x); }, body);
  }
};

TrainedPredictor::TrainedPredictor() = default;
TrainedPredictor::~TrainedPredictor() = default;
TrainedPredictor::TrainedPredictor(std::unique_ptr<State> s) : state_(std::move(s)) {}
TrainedPredictor::TrainedPredictor(const TrainedPredictor& o)
    : state_(o.state_ ? std::make_unique<State>(*o.state_) : nullptr) {}
TrainedPredictor& TrainedPredictor::operator=(const TrainedPredictor& o) {
  if (this != &o) state_ = o.state_ ? std::make_unique<State>(*o.state_) : nullptr;
  return *this;
}
TrainedPredictor::TrainedPredictor(TrainedPredictor&&) noexcept = default;
TrainedPredictor& TrainedPredictor::operator=(TrainedPredictor&&) noexcept = default;

bool TrainedPredictor::fitted() const { return state_ != nullptr; }

namespace {
const TrainedPredictor::State& require(const std::unique_ptr<TrainedPredictor::State>& s) {
  if (!s) throw std::logic_error("predictor is not fitted");
  return *s;
}
}  // namespace

ModelKind TrainedPredictor::kind() const { return require(state_).kind; }
Metric TrainedPredictor::target_metric() const { return require(state_).target; }
std::uint64_t TrainedPredictor::train_seed() const { return require(state_).seed; }
const Hyperparams& TrainedPredictor::hyperparams() const { return require(state_).hp; }
std::size_t TrainedPredictor::n_train() const { return require(state_).n_train; }

const std::optional<ProjectionOrigin>& TrainedPredictor::origin() const {
  return require(state_).origin;
}

void TrainedPredictor::set_origin(std::optional<ProjectionOrigin> origin) {
  if (!state_) throw std::logic_error("predictor is not fitted");
  state_->origin = origin;
}

double TrainedPredictor::predict(const FeatureRow& row) const {
  return require(state_).eval(as_array(row));
}

std::vector<double> TrainedPredictor::predict(std::span<const FeatureRow> rows) const {
  const auto& s = require(state_);
  std::vector<double> out;
  out.reserve(rows.size());
  for (const auto& r : rows) out.push_back(s.eval(as_array(r)));
  return out;
}

std::string TrainedPredictor::to_json() const {
  const auto& s = require(state_);
  json doc;
  doc["format"] = "uavnet-model";
  doc["version"] = kModelFormatVersion;
  doc["kind"] = std::string(predict::to_string(s.kind));
  doc["metric"] = std::string(uavnet::to_string(s.target));
  doc["unit"] = std::string(unit_of(s.target));
  doc["seed"] = s.seed;
  doc["n_train"] = s.n_train;
  doc["features"] = {"x_m", "y_m", "alt_m"};
  doc["origin"] = s.origin ? json{{"lat0", s.origin->lat0}, {"lon0", s.origin->lon0}} : json(nullptr);
  doc["hyperparams"] = {{"n_trees", s.hp.n_trees},
                        {"max_depth", s.hp.max_depth},
                        {"max_features", s.hp.max_features},
                        {"min_samples_leaf", s.hp.min_samples_leaf},
                        {"boost_rounds", s.hp.boost_rounds},
                        {"learning_rate", s.hp.learning_rate},
                        {"boost_depth", s.hp.boost_depth},
                        {"hidden_units", s.hp.hidden_units},
                        {"epochs", s.hp.epochs},
                        {"step_size", s.hp.step_size},
                        {"batch_size", s.hp.batch_size}};
  json body;
  if (const auto* f = std::get_if<Forest>(&s.body)) {
    body["trees"] = json::array();
    for (const auto& t : f->trees) body["trees"].push_back(tree_to_json(t));
  } else if (const auto* b = std::get_if<Boosted>(&s.body)) {
    body["init"] = b->init;
    body["learning_rate"] = b->learning_rate;
    body["trees"] = json::array();
    for (const auto& t : b->trees) body["trees"].push_back(tree_to_json(t));
  } else {
    const auto& m = std::get<Mlp>(s.body);
    body["hidden"] = m.hidden;
    body["input_mean"] = features_json(m.in_mean);
    body["input_scale"] = features_json(m.in_scale);
    body["target_mean"] = m.y_mean;
    body["target_scale"] = m.y_scale;
    body["constant"] = m.constant;
    body["params"] = m.theta;
  }
  doc["model"] = std::move(body);
  return doc.dump();
}

TrainedPredictor TrainedPredictor::from_json(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception& e) {
    throw std::runtime_error(std::string("model file: ") + e.what());
  }
  try {
    if (doc.value("format", "") != "uavnet-model") throw std::runtime_error("model file: not a uavnet model");
    if (doc.at("version").get<int>() != kModelFormatVersion) {
      throw std::runtime_error("model file: unsupported version " + doc.at("version").dump());
    }
    auto s = std::make_unique<State>();
    s->kind = parse_model_kind(doc.at("kind").get<std::string>());
    s->target = parse_metric(doc.at("metric").get<std::string>());
    s->seed = doc.at("seed").get<std::uint64_t>();
    s->n_train = doc.at("n_train").get<std::size_t>();
    if (!doc.at("origin").is_null()) {
      s->origin = ProjectionOrigin{doc["origin"].at("lat0").get<double>(),
                                   doc["origin"].at("lon0").get<double>()};
    }
    const auto& hp = doc.at("hyperparams");
    s->hp.n_trees = hp.at("n_trees").get<int>();
    s->hp.max_depth = hp.at("max_depth").get<int>();
    s->hp.max_features = hp.at("max_features").get<int>();
    s->hp.min_samples_leaf = hp.at("min_samples_leaf").get<int>();
    s->hp.boost_rounds = hp.at("boost_rounds").get<int>();
    s->hp.learning_rate = hp.at("learning_rate").get<double>();
    s->hp.boost_depth = hp.at("boost_depth").get<int>();
    s->hp.hidden_units = hp.at("hidden_units").get<int>();
    s->hp.epochs = hp.at("epochs").get<int>();
    s->hp.step_size = hp.at("step_size").get<double>();
    s->hp.batch_size = hp.at("batch_size").get<int>();

    const auto& body = doc.at("model");
    switch (s->kind) {
      case ModelKind::TreeEnsemble: {
        Forest f;
        for (const auto& t : body.at("trees")) f.trees.push_back(tree_from_json(t));
        if (f.trees.empty()) throw std::runtime_error("model file: forest without trees");
        s->body = std::move(f);
        break;
      }
      case ModelKind::BoostedTrees: {
        Boosted b;
        b.init = body.at("init").get<double>();
        b.learning_rate = body.at("learning_rate").get<double>();
        for (const auto& t : body.at("trees")) b.trees.push_back(tree_from_json(t));
        s->body = std::move(b);
        break;
      }
      case ModelKind::FeedforwardNet: {
        Mlp m;
        m.hidden = body.at("hidden").get<int>();
        m.in_mean = features_from_json(body.at("input_mean"));
        m.in_scale = features_from_json(body.at("input_scale"));
        m.y_mean = body.at("target_mean").get<double>();
        m.y_scale = body.at("target_scale").get<double>();
        m.constant = body.at("constant").get<bool>();
        m.theta = body.at("params").get<std::vector<double>>();
        if (m.hidden < 1 || m.theta.size() != m.size()) {
          throw std::runtime_error("model file: parameter count does not match layer sizes");
        }
        s->body = std::move(m);
        break;
      }
    }
    return TrainedPredictor(std::move(s));
  } catch (const json::exception& e) {
    throw std::runtime_error(std::string("model file: ") + e.what());
  }
}

void TrainedPredictor::save(const std::string& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write model file '" + path + "'");
  out << to_json() << '\n';
  if (!out) throw std::runtime_error("failed writing model file '" + path + "'");
}

TrainedPredictor TrainedPredictor::load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read model file '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return from_json(buf.str());
}

// ---------------------------------------------------------------------------

TrainedPredictor fit(std::span<const TrainingRow> rows, ModelKind kind, const Hyperparams& hp,
                     std::uint64_t seed, Metric target) {
  hp.check();
  check_radio_metric(target);
  if (rows.size() < kMinTrainingRows) {
    throw std::invalid_argument("fit: need at least " + std::to_string(kMinTrainingRows) +
                                " rows, got " + std::to_string(rows.size()));
  }
  std::vector<Features> x;
  std::vector<double> y;
  x.reserve(rows.size());
  y.reserve(rows.size());
  for (const auto& r : rows) {
    const auto f = as_array(r.features);
    if (!std::all_of(f.begin(), f.end(), [](double v) { return std::isfinite(v); })) {
      throw std::invalid_argument("fit: non-finite feature");
    }
    if (!std::isfinite(r.target)) throw std::invalid_argument("fit: non-finite target");
    x.push_back(f);
    y.push_back(r.target);
  }

  auto s = std::make_unique<TrainedPredictor::State>();
  s->kind = kind;
  s->target = target;
  s->seed = seed;
  s->hp = hp;
  s->n_train = rows.size();
  switch (kind) {
    case ModelKind::TreeEnsemble: s->body = fit_forest(x, y, hp, seed); break;
    case ModelKind::BoostedTrees: s->body = fit_boosted(x, y, hp); break;
    case ModelKind::FeedforwardNet: s->body = fit_mlp(x, y, hp, seed); break;
  }
  return TrainedPredictor(std::move(s));
}

ErrorMetrics metrics(std::span<const double> y, std::span<const double> y_hat) {
  if (y.size() != y_hat.size()) throw std::invalid_argument("metrics: length mismatch");
  if (y.empty()) throw std::invalid_argument("metrics: empty input");
  double abs_sum = 0.0;
  double sq_sum = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    const double e = y[i] - y_hat[i];
    abs_sum += std::abs(e);
    sq_sum += e * e;
  }
  const auto n = static_cast<double>(y.size());
  return {abs_sum / n, std::sqrt(sq_sum / n)};
}

namespace {

FoldResult run_fold(std::span<const TrainingRow> rows, std::vector<std::size_t> train,
                    std::vector<std::size_t> test, ModelKind kind, const Hyperparams& hp,
                    std::uint64_t seed, Metric target) {
  std::vector<char> in_train(rows.size(), 0);
  for (auto i : train) in_train[i] = 1;
  for (auto i : test) {
    if (in_train[i]) throw std::logic_error("evaluation fold leaks row " + std::to_string(i));
  }
  std::vector<TrainingRow> train_rows;
  train_rows.reserve(train.size());
  for (auto i : train) train_rows.push_back(rows[i]);
  const auto model = fit(train_rows, kind, hp, seed, target);

  FoldResult fold;
  std::vector<double> truth;
  for (auto i : test) {
    fold.predictions.push_back(model.predict(rows[i].features));
    truth.push_back(rows[i].target);
  }
  fold.error = metrics(truth, fold.predictions);
  fold.train_index = std::move(train);
  fold.test_index = std::move(test);
  return fold;
}

void pool(EvalReport& report, std::span<const TrainingRow> rows) {
  std::vector<double> truth;
  std::vector<double> pred;
  for (const auto& f : report.folds) {
    for (std::size_t k = 0; k < f.test_index.size(); ++k) {
      truth.push_back(rows[f.test_index[k]].target);
      pred.push_back(f.predictions[k]);
    }
  }
  report.pooled = metrics(truth, pred);
  report.n_test = truth.size();
}

std::int64_t bin_of(double alt, double width) {
  return static_cast<std::int64_t>(std::floor(alt / width));
}

}  // namespace

std::vector<std::int64_t> edge_bins(std::span<const TrainingRow> rows, double bin_width_m) {
  if (!(bin_width_m > 0.0)) throw std::invalid_argument("bin width must be positive");
  if (rows.empty()) throw std::invalid_argument("edge_bins: no rows");
  std::int64_t lo = bin_of(rows[0].features.alt_m, bin_width_m);
  std::int64_t hi = lo;
  for (const auto& r : rows) {
    const auto b = bin_of(r.features.alt_m, bin_width_m);
    lo = std::min(lo, b);
    hi = std::max(hi, b);
  }
  if (lo == hi) return {lo};
  return {lo, hi};
}

EvalReport eval_loao(std::span<const TrainingRow> rows, ModelKind kind, const LoaoOptions& opts,
                     std::uint64_t seed, const Hyperparams& hp, Metric target) {
  if (!(opts.bin_width_m > 0.0)) throw std::invalid_argument("LOAO: bin width must be positive");
  std::map<std::int64_t, std::vector<std::size_t>> bins;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (!std::isfinite(rows[i].features.alt_m)) throw std::invalid_argument("LOAO: non-finite altitude");
    bins[bin_of(rows[i].features.alt_m, opts.bin_width_m)].push_back(i);
  }
  if (bins.size() < 2) throw std::invalid_argument("LOAO: need at least two non-empty altitude bins");

  std::vector<std::int64_t> holdout = opts.holdout_bins;
  if (holdout.empty()) {
    for (const auto& [b, _] : bins) holdout.push_back(b);
  }
  for (auto b : holdout) {
    if (!bins.contains(b)) throw std::invalid_argument("LOAO: holdout bin " + std::to_string(b) + " is empty");
  }

  EvalReport report;
  report.protocol = Protocol::Loao;
  report.kind = kind;
  report.target = target;
  report.folds.resize(holdout.size());
  parallel_for(holdout.size(), [&](std::size_t k) {
    const auto b = holdout[k];
    std::vector<std::size_t> train;
    for (const auto& [other, idx] : bins) {
      if (other != b) train.insert(train.end(), idx.begin(), idx.end());
    }
    std::sort(train.begin(), train.end());
    auto fold = run_fold(rows, std::move(train), bins.at(b), kind, hp, seed, target);
    fold.altitude_bin = b;
    const double lo = static_cast<double>(b) * opts.bin_width_m;
    std::ostringstream label;
    label << "alt[" << lo << "," << lo + opts.bin_width_m << ")";
    fold.label = label.str();
    report.folds[k] = std::move(fold);
  });
  pool(report, rows);
  return report;
}

std::pair<std::vector<std::size_t>, std::vector<std::size_t>> split_indices(std::size_t n,
                                                                            double test_fraction,
                                                                            std::uint64_t seed) {
  if (!(test_fraction > 0.0 && test_fraction < 1.0)) {
    throw std::invalid_argument("split: test fraction must be in (0, 1)");
  }
  if (n < 10) throw std::invalid_argument("split: need at least 10 rows");
  const auto n_test = static_cast<std::size_t>(std::llround(test_fraction * static_cast<double>(n)));
  if (n_test == 0 || n_test >= n) throw std::invalid_argument("split: degenerate train/test sizes");
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  Rng rng(seed);
  rng.shuffle(perm.begin(), perm.end());
  std::vector<std::size_t> train(perm.begin(), perm.end() - static_cast<std::ptrdiff_t>(n_test));
  std::vector<std::size_t> test(perm.end() - static_cast<std::ptrdiff_t>(n_test), perm.end());
  return {std::move(train), std::move(test)};
}

EvalReport eval_split(std::span<const TrainingRow> rows, ModelKind kind, double test_fraction,
                      std::uint64_t seed, const Hyperparams& hp, Metric target) {
  auto [train, test] = split_indices(rows.size(), test_fraction, seed);
  EvalReport report;
  report.protocol = Protocol::RandomSplit;
  report.kind = kind;
  report.target = target;
  auto fold = run_fold(rows, std::move(train), std::move(test), kind, hp, seed, target);
  fold.label = "split";
  report.folds.push_back(std::move(fold));
  pool(report, rows);
  return report;
}

DatasetRows rows_from_dataset(const FlightDataset& ds, Metric metric,
                              std::optional<ProjectionOrigin> origin) {
  DatasetRows out;
  if (ds.samples.empty()) throw std::invalid_argument("rows_from_dataset: empty dataset");
  out.origin = origin ? *origin : centroid(ds);
  for (std::size_t i = 0; i < ds.samples.size(); ++i) {
    const auto& s = ds.samples[i];
    const auto v = metric_value(s, metric);
    if (!v || !std::isfinite(*v)) continue;
    const auto p = project(s.position, out.origin);
    if (!std::isfinite(p.x_m) || !std::isfinite(p.y_m) || !std::isfinite(p.alt_m)) continue;
    out.rows.push_back({{p.x_m, p.y_m, p.alt_m}, *v});
    out.sample_index.push_back(i);
  }
  return out;
}

}  // namespace uavnet::predict
